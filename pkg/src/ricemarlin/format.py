"""Wire formats: block layout, file container, and dictionary-set files.

All integers are little-endian.  Per the out-of-band size contract, a bare
block carries neither its compressed nor its original size; the container
stores compressed lengths and derives original sizes from its header.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

import numpy as np

from .bitpack import loc_bytes
from .dictionary import (
    RAW_INDEX,
    DictionarySet,
    LevelWords,
    MarlinDictionary,
    QuotientAlphabet,
)
from .encoder import CompressedBlock, build_encoder_matrix, encode_block
from .decoder import decode_block
from .errors import CorruptBlockError, FormatError
from .source import SymbolDistribution

CONTAINER_MAGIC = b"RMC1"
DICTSET_MAGIC = b"RMDS"
VERSION = 1

FLAG_IMAGE = 0x01


# ---------------------------------------------------------------------------
# block wire format


def serialize_block(block: CompressedBlock, n: int) -> bytes:
    """#D | #U | quotient section | escape pairs | reminder bitfield."""
    if block.is_raw:
        return bytes([RAW_INDEX]) + block.raw
    if block.unrep_count > 255:
        raise ValueError("a block cannot carry more than 255 escapes")
    lb = loc_bytes(n)
    out = bytearray([block.dict_index, block.unrep_count])
    out += block.quotient_stream
    for loc, sym in block.escapes:
        out += loc.to_bytes(lb, "little")
        out.append(sym)
    out += block.reminders
    return bytes(out)


def parse_block(buf: bytes, n: int, dset: DictionarySet) -> CompressedBlock:
    """Inverse of :func:`serialize_block`; sizes are supplied out of band."""
    if len(buf) < 1:
        raise CorruptBlockError("empty block buffer")
    dict_index = buf[0]
    if dict_index == RAW_INDEX:
        if len(buf) != 1 + n:
            raise CorruptBlockError(
                f"raw block is {len(buf)} bytes, expected {1 + n}"
            )
        return CompressedBlock(dict_index=RAW_INDEX, n=n, raw=bytes(buf[1:]))
    if dict_index >= len(dset):
        raise CorruptBlockError(f"unknown dictionary index {dict_index}")
    if len(buf) < 2:
        raise CorruptBlockError("block truncated before the escape counter")
    dct = dset[dict_index]
    unrep = buf[1]
    lb = loc_bytes(n)
    rem_bytes = (n * dct.shift + 7) // 8
    esc_bytes = unrep * (lb + 1)
    q_bytes = len(buf) - 2 - esc_bytes - rem_bytes
    if q_bytes < 0:
        raise CorruptBlockError("block size is inconsistent with its sections")
    if dct.empty_quotient:
        if q_bytes != 0:
            raise CorruptBlockError(
                "empty-quotient dictionary with a quotient section"
            )
    elif n > 0:
        min_units = -(-n // dct.max_word_len())
        if q_bytes * 8 < min_units * dct.k:
            raise CorruptBlockError(
                f"quotient section of {q_bytes} bytes cannot span {n} symbols"
            )
    pos = 2
    stream = bytes(buf[pos : pos + q_bytes])
    pos += q_bytes
    escapes = []
    prev = -1
    for _ in range(unrep):
        loc = int.from_bytes(buf[pos : pos + lb], "little")
        sym = buf[pos + lb]
        if loc <= prev:
            raise CorruptBlockError("escape locations must be strictly ascending")
        prev = loc
        escapes.append((loc, sym))
        pos += lb + 1
    reminders = bytes(buf[pos:])
    return CompressedBlock(
        dict_index=dict_index,
        n=n,
        quotient_stream=stream,
        escapes=escapes,
        reminders=reminders,
    )


# ---------------------------------------------------------------------------
# dictionary-set files


def _dict_table_bytes(dct: MarlinDictionary) -> bytes:
    """Canonical bytes determining the dictionary's tables (digest input)."""
    a = dct.alphabet
    out = bytearray()
    out += struct.pack("<BBH", dct.shift, 1 if dct.empty_quotient else 0, len(a))
    out += bytes(a.values)
    excl_q = sorted({b >> dct.shift for b in a.excluded}) if dct.shift < 8 else []
    out += struct.pack("<H", len(excl_q))
    out += bytes(excl_q)
    out.append(a.placeholder)
    if not dct.empty_quotient:
        out += bytes(dct.levels)
        keys = sorted(dct.level_sets)
        out += struct.pack("<H", len(keys))
        for key in keys:
            lw = dct.level_sets[key]
            layout = dct.level_layout[key]
            out += struct.pack("<HB", key, lw.level)
            for i in layout:
                w = lw.words[i]
                out += struct.pack("<H", len(w))
                out += bytes(w)
    return bytes(out)


def _dict_meta_bytes(dct: MarlinDictionary) -> bytes:
    sid = dct.source_id.encode("utf-8")
    probs = np.asarray(dct.alphabet.probs, dtype="<f8").tobytes()
    return (
        struct.pack(
            "<ddddI", dct.alphabet.p_escape, dct.abr, dct.quotient_bits,
            getattr(dct, "search_threshold", 0.0), dct.block_n,
        )
        + struct.pack("<H", len(sid))
        + sid
        + probs
    )


def save_dictset(dset: DictionarySet) -> bytes:
    """Serialize a dictionary set; ends with a digest over the table bytes."""
    out = bytearray(DICTSET_MAGIC)
    out += struct.pack("<BBBB", VERSION, dset.k, dset.o, len(dset))
    digest = hashlib.sha256()
    digest.update(struct.pack("<BBB", dset.k, dset.o, len(dset)))
    for dct in dset.dictionaries:
        table = _dict_table_bytes(dct)
        digest.update(table)
        meta = _dict_meta_bytes(dct)
        out += struct.pack("<II", len(table), len(meta))
        out += table
        out += meta
    out += digest.digest()
    return bytes(out)


def dictset_digest(dset: DictionarySet) -> bytes:
    """Digest over table-determining bytes only; changes iff any table bit does."""
    cached = getattr(dset, "_digest", None)
    if cached is not None:
        return cached
    digest = hashlib.sha256()
    digest.update(struct.pack("<BBB", dset.k, dset.o, len(dset)))
    for dct in dset.dictionaries:
        digest.update(_dict_table_bytes(dct))
    dset._digest = digest.digest()
    return dset._digest


def _parse_dict(table: bytes, meta: bytes, k: int, o: int) -> MarlinDictionary:
    pos = 0
    shift, empty_q, nq = struct.unpack_from("<BBH", table, pos)
    pos += 4
    values = tuple(table[pos : pos + nq])
    pos += nq
    (n_excl,) = struct.unpack_from("<H", table, pos)
    pos += 2
    excl_q = set(table[pos : pos + n_excl])
    pos += n_excl
    placeholder = table[pos]
    pos += 1
    levels: tuple[int, ...] = ()
    level_sets: dict[int, LevelWords] = {}
    level_layout: dict[int, list[int]] = {}
    if not empty_q:
        n_chapters = 1 << o
        levels = tuple(table[pos : pos + n_chapters])
        pos += n_chapters
        (n_keys,) = struct.unpack_from("<H", table, pos)
        pos += 2
        for _ in range(n_keys):
            key, lvl = struct.unpack_from("<HB", table, pos)
            pos += 3
            words = []
            for _ in range(1 << k):
                (wl,) = struct.unpack_from("<H", table, pos)
                pos += 2
                words.append(tuple(table[pos : pos + wl]))
                pos += wl
            kvals = []
            index = {w: i for i, w in enumerate(words)}
            for w in words:
                kw = 0
                while w + (kw,) in index:
                    kw += 1
                kvals.append(kw)
            level_sets[key] = LevelWords(
                level=lvl, words=words, kvals=kvals, raws=[0.0] * len(words)
            )
            level_layout[key] = list(range(len(words)))
    p_escape, abr, qbits, thr, block_n = struct.unpack_from("<ddddI", meta, 0)
    mpos = 8 * 4 + 4
    (sid_len,) = struct.unpack_from("<H", meta, mpos)
    mpos += 2
    source_id = meta[mpos : mpos + sid_len].decode("utf-8")
    mpos += sid_len
    probs = np.frombuffer(meta, dtype="<f8", count=nq, offset=mpos)
    qspace = 256 >> shift if shift < 8 else 1
    excluded_bytes = frozenset(
        b for b in range(256) if (b >> shift) in excl_q
    )
    alphabet = QuotientAlphabet(
        shift=shift,
        values=values,
        probs=np.array(probs),
        excluded=excluded_bytes,
        placeholder=placeholder,
        p_escape=p_escape,
    )
    for v in range(qspace):
        if v not in excl_q and v not in set(values):
            raise FormatError(f"quotient {v} is neither represented nor excluded")
    dct = MarlinDictionary(
        k, o, alphabet, levels, level_sets, level_layout,
        source_id=source_id, block_n=block_n, empty_quotient=bool(empty_q),
    )
    dct.abr = abr
    dct.quotient_bits = qbits
    dct.search_threshold = thr
    return dct


def load_dictset(buf: bytes) -> DictionarySet:
    """Parse and digest-verify a serialized dictionary set."""
    if buf[:4] != DICTSET_MAGIC:
        raise FormatError("not a dictionary-set file")
    version, k, o, count = struct.unpack_from("<BBBB", buf, 4)
    if version != VERSION:
        raise FormatError(f"unsupported dictionary-set version {version}")
    if count == 0:
        raise FormatError("a dictionary set must contain at least one dictionary")
    pos = 8
    digest = hashlib.sha256()
    digest.update(struct.pack("<BBB", k, o, count))
    dicts = []
    for _ in range(count):
        tlen, mlen = struct.unpack_from("<II", buf, pos)
        pos += 8
        table = buf[pos : pos + tlen]
        pos += tlen
        meta = buf[pos : pos + mlen]
        pos += mlen
        if len(table) != tlen or len(meta) != mlen:
            raise FormatError("dictionary-set file truncated")
        digest.update(table)
        dicts.append(_parse_dict(bytes(table), bytes(meta), k, o))
    stored = buf[pos : pos + 32]
    if len(stored) != 32 or stored != digest.digest():
        raise FormatError("dictionary-set digest mismatch")
    return DictionarySet(dicts, metadata={"k": k, "o": o})


# ---------------------------------------------------------------------------
# container


@dataclass(frozen=True)
class ContainerHeader:
    k: int
    o: int
    block_size: int
    total_size: int
    flags: int = 0
    width: int = 0
    height: int = 0
    digest: bytes = b"\x00" * 32

    _FMT = "<4sBBBBIQII32sI"

    def pack(self, n_blocks: int) -> bytes:
        return struct.pack(
            self._FMT, CONTAINER_MAGIC, VERSION, self.flags, self.k, self.o,
            self.block_size, self.total_size, self.width, self.height,
            self.digest, n_blocks,
        )

    @classmethod
    def unpack(cls, buf: bytes) -> tuple["ContainerHeader", int, int]:
        size = struct.calcsize(cls._FMT)
        if len(buf) < size:
            raise CorruptBlockError("container header truncated")
        magic, version, flags, k, o, block_size, total, w, h, digest, nb = (
            struct.unpack_from(cls._FMT, buf, 0)
        )
        if magic != CONTAINER_MAGIC:
            raise CorruptBlockError("not a compressed container")
        if version != VERSION:
            raise CorruptBlockError(f"unsupported container version {version}")
        hdr = cls(
            k=k, o=o, block_size=block_size, total_size=total, flags=flags,
            width=w, height=h, digest=digest,
        )
        return hdr, nb, size

    def block_sizes(self) -> list[int]:
        """Original size of every block, derived from the header alone."""
        if self.flags & FLAG_IMAGE:
            from .image import block_geometry

            return [bw * bh for bw, bh in block_geometry(self.width, self.height)]
        if self.total_size == 0:
            return []
        bs = self.block_size
        full, rem = divmod(self.total_size, bs)
        return [bs] * full + ([rem] if rem else [])


def _matrix_for(dct: MarlinDictionary):
    matrix = getattr(dct, "_encoder_matrix", None)
    if matrix is None and not dct.empty_quotient:
        matrix = build_encoder_matrix(dct)
        dct._encoder_matrix = matrix
    return matrix


def compress_blocks(
    data: bytes,
    dset: DictionarySet,
    sizes: list[int],
    exact_select: bool = False,
    check: bool = False,
) -> list[bytes]:
    """Encode consecutive slices of ``data`` given by ``sizes``."""
    out = []
    pos = 0
    for n in sizes:
        chunk = data[pos : pos + n]
        pos += n
        if n == 0:
            out.append(serialize_block(encode_block(None, None, b""), 0))
            continue
        counts = np.bincount(np.frombuffer(chunk, dtype=np.uint8), minlength=256)
        if exact_select:
            idx = dset.select(SymbolDistribution(counts / counts.sum()), n)
        else:
            idx = dset.quick_select(counts, n)
        dct = dset[idx]
        block = encode_block(dct, _matrix_for(dct), chunk, dict_index=idx, check=check)
        out.append(serialize_block(block, n))
    return out


def compress_bytes(
    data: bytes,
    dset: DictionarySet,
    block_size: int = 4096,
    exact_select: bool = False,
    flags: int = 0,
    width: int = 0,
    height: int = 0,
    sizes: list[int] | None = None,
) -> bytes:
    """Compress ``data`` into a standalone container."""
    if block_size < 1:
        raise ValueError("block size must be positive")
    header = ContainerHeader(
        k=dset.k, o=dset.o, block_size=block_size, total_size=len(data),
        flags=flags, width=width, height=height, digest=dictset_digest(dset),
    )
    if sizes is None:
        sizes = header.block_sizes()
    payloads = compress_blocks(data, dset, sizes, exact_select=exact_select)
    out = bytearray(header.pack(len(payloads)))
    for p in payloads:
        out += struct.pack("<I", len(p))
        out += p
    return bytes(out)


def decompress_bytes(buf: bytes, dset: DictionarySet) -> bytes:
    """Decompress a container produced by :func:`compress_bytes`."""
    header, n_blocks, pos = ContainerHeader.unpack(buf)
    if header.digest != dictset_digest(dset):
        raise FormatError(
            "container was compressed with a different dictionary set"
        )
    sizes = header.block_sizes()
    if len(sizes) != n_blocks:
        raise CorruptBlockError(
            f"container lists {n_blocks} blocks, geometry implies {len(sizes)}"
        )
    out = bytearray()
    for n in sizes:
        if pos + 4 > len(buf):
            raise CorruptBlockError("container truncated at a block header")
        (clen,) = struct.unpack_from("<I", buf, pos)
        pos += 4
        payload = buf[pos : pos + clen]
        if len(payload) != clen:
            raise CorruptBlockError("container truncated inside a block")
        pos += clen
        block = parse_block(payload, n, dset)
        out += decode_block(dset, block, n)
    if len(out) != header.total_size:
        raise CorruptBlockError(
            f"decoded {len(out)} bytes, header promised {header.total_size}"
        )
    return bytes(out)
