"""Table-driven block decoder.

Each step peeks N = K + O bits (the O-bit window carried from the previous
codeword plus K fresh bits), copies the table word for that codeword, and
keeps only the low O bits as the next window.  Reminders and escape pairs
are merged afterwards.
"""

from __future__ import annotations

import numpy as np

from .bitpack import unpack_low_bits, unpack_units
from .dictionary import RAW_INDEX, DictionarySet, MarlinDictionary
from .encoder import CompressedBlock
from .errors import CorruptBlockError


class DecoderTable:
    """Flat array of 2^N fixed-width rows: word symbols plus a length."""

    def __init__(self, dct: MarlinDictionary):
        self.dct = dct
        self.max_word_len = dct.max_word_len()
        n = dct.n_codewords
        self.words = np.zeros((n, self.max_word_len), dtype=np.uint8)
        self.lengths = np.zeros(n, dtype=np.int64)
        values = np.asarray(dct.alphabet.values, dtype=np.uint8)
        for cw in range(n):
            w = dct.word_at(cw)
            self.lengths[cw] = len(w)
            self.words[cw, : len(w)] = values[list(w)]

    def entry(self, codeword: int) -> tuple[tuple[int, ...], int]:
        length = int(self.lengths[codeword])
        return tuple(int(v) for v in self.words[codeword, :length]), length


def build_decoder_table(dct: MarlinDictionary) -> DecoderTable:
    return DecoderTable(dct)


def decode_quotients(
    table: DecoderTable, stream: bytes, n: int, check_exact: bool = False
) -> np.ndarray:
    """Decode quotient values until ``n`` symbols are produced.

    The window starts at zero.  Units remaining in the byte-padded stream
    after the target count is reached are padding and stay untouched.
    """
    if n == 0:
        return np.zeros(0, dtype=np.uint8)
    dct = table.dct
    k, o = dct.k, dct.o
    avail = (len(stream) * 8) // k
    if avail == 0:
        raise CorruptBlockError("quotient stream exhausted before any symbol")
    units = unpack_units(stream, k, avail)
    windows = np.empty_like(units)
    windows[0] = 0
    omask = np.uint32(dct.n_chapters - 1)
    np.bitwise_and(units[:-1], omask, out=windows[1:])
    codewords = (windows.astype(np.int64) << k) | units
    lens = table.lengths[codewords]
    total = np.cumsum(lens)
    if total[-1] < n:
        raise CorruptBlockError(
            f"quotient stream exhausted after {int(total[-1])} of {n} symbols"
        )
    used = int(np.searchsorted(total, n, side="left")) + 1
    rows = table.words[codewords[:used]]
    mask = np.arange(table.max_word_len) < lens[:used, None]
    out = rows[mask][:n]
    if check_exact and int(total[used - 1]) != n:
        raise CorruptBlockError("final word overruns the block boundary")
    return out


def decode_block(dset: DictionarySet | MarlinDictionary, block: CompressedBlock, n: int) -> bytes:
    """Reconstruct the original ``n`` bytes of one block."""
    if block.is_raw:
        if len(block.raw) != n:
            raise CorruptBlockError(
                f"raw block holds {len(block.raw)} bytes, expected {n}"
            )
        return bytes(block.raw)
    dct = _resolve(dset, block.dict_index)
    if n == 0:
        return b""
    shift = dct.shift
    if dct.empty_quotient:
        quotients = np.full(n, dct.alphabet.values[0], dtype=np.uint8)
    else:
        table = _table_for(dct)
        quotients = decode_quotients(table, block.quotient_stream, n)
    reminders = unpack_low_bits(block.reminders, shift, n)
    out = ((quotients.astype(np.uint16) << shift) | reminders).astype(np.uint8)
    if block.escapes:
        locs = np.array([loc for loc, _ in block.escapes])
        if (locs >= n).any() or (locs < 0).any():
            raise CorruptBlockError("escape location outside the block")
        out[locs] = [sym for _, sym in block.escapes]
    return out.tobytes()


def _resolve(dset, index: int) -> MarlinDictionary:
    if isinstance(dset, MarlinDictionary):
        return dset
    if index == RAW_INDEX or index >= len(dset):
        raise CorruptBlockError(f"unknown dictionary index {index}")
    return dset[index]


def _table_for(dct: MarlinDictionary) -> DecoderTable:
    table = getattr(dct, "_decoder_table", None)
    if table is None:
        table = DecoderTable(dct)
        dct._decoder_table = table
    return table
