import numpy as np
import pytest

from ricemarlin import (
    CorruptBlockError,
    FormatError,
    MarlinDictionary,
    SymbolDistribution,
    SyntheticFamily,
    build_decoder_table,
    build_dictionary_set,
    build_encoder_matrix,
    compress_bytes,
    decompress_bytes,
    encode_block,
    load_dictset,
    make_distribution,
    parse_block,
    save_dictset,
    serialize_block,
)
from ricemarlin.dictionary import DictionarySet
from ricemarlin.encoder import CompressedBlock
from ricemarlin.format import ContainerHeader, dictset_digest


@pytest.fixture(scope="module")
def tiny_set():
    grid = [("laplacian", 0.2), ("laplacian", 0.5), ("laplacian", 0.8)]
    return build_dictionary_set({"grid": grid, "k": 8, "o": 4, "block_n": 4096})


# ---------------------------------------------------------------------------
# block wire format


def test_serialize_raw_block():
    blk = CompressedBlock(dict_index=255, n=3, raw=bytes([1, 2, 3]))
    assert serialize_block(blk, 3) == bytes([0xFF, 1, 2, 3])


def test_serialize_simple_block():
    blk = CompressedBlock(dict_index=4, n=1, quotient_stream=bytes([0xAB]))
    assert serialize_block(blk, 1) == bytes([0x04, 0x00, 0xAB])


def test_escape_section_width_scales_with_message_size(tiny_set):
    p = np.zeros(256)
    p[0], p[1], p[200] = 0.9, 0.0999, 0.0001
    dist = SymbolDistribution(p)
    dct = MarlinDictionary.build(dist, k=8, o=4, shift=0, threshold=0.01)
    one = DictionarySet([dct])
    msg = bytearray(dist.sample(300, seed=1).replace(bytes([200]), bytes([0])))
    msg[5], msg[200] = 200, 200
    blk = encode_block(dct, None, bytes(msg), dict_index=0)
    assert blk.unrep_count == 2
    data = serialize_block(blk, 300)
    # 2 escapes x (2 location bytes + 1 symbol byte) for a 300-symbol block
    assert len(data) == 2 + len(blk.quotient_stream) + 2 * 3 + len(blk.reminders)
    parsed = parse_block(data, 300, one)
    assert parsed.escapes == [(5, 200), (200, 200)]


def test_parse_inverts_serialize_fuzzed(tiny_set):
    rng = np.random.default_rng(3)
    dist = make_distribution(SyntheticFamily("laplacian", 0.5))
    dct = tiny_set[1]
    matrix = build_encoder_matrix(dct)
    for _ in range(100):
        n = int(rng.integers(0, 2000))
        msg = dist.sample(n, seed=int(rng.integers(1 << 30)))
        blk = encode_block(dct, matrix, msg, dict_index=1)
        buf = serialize_block(blk, n)
        parsed = parse_block(buf, n, tiny_set)
        assert parsed.dict_index == blk.dict_index
        assert parsed.quotient_stream == blk.quotient_stream
        assert parsed.escapes == blk.escapes
        assert parsed.reminders == blk.reminders
        assert parsed.raw == blk.raw


def test_parse_raw_empty():
    blk = parse_block(bytes([0xFF]), 0, None)
    assert blk.is_raw and blk.raw == b""


def test_parse_truncated_raises(tiny_set):
    dct = tiny_set[0]
    msg = make_distribution(SyntheticFamily("laplacian", 0.2)).sample(500, seed=1)
    buf = serialize_block(encode_block(dct, None, msg, dict_index=0), 500)

    def parse_and_decode(data):
        from ricemarlin import decode_block

        return decode_block(tiny_set, parse_block(data, 500, tiny_set), 500)

    assert parse_and_decode(buf) == msg
    # gross truncation dies at parse; a shaved stream dies while decoding
    with pytest.raises(CorruptBlockError):
        parse_and_decode(buf[:3])
    with pytest.raises(CorruptBlockError):
        parse_and_decode(buf[: len(buf) - 2])
    with pytest.raises(CorruptBlockError):
        parse_block(b"", 0, tiny_set)


def test_parse_unknown_index_raises(tiny_set):
    with pytest.raises(CorruptBlockError):
        parse_block(bytes([7, 0, 0, 0]), 2, tiny_set)


def test_serialized_length_formula(tiny_set):
    dist = make_distribution(SyntheticFamily("laplacian", 0.5))
    dct = tiny_set[1]
    for n in (1, 255, 256, 4096):
        msg = dist.sample(n, seed=n)
        blk = encode_block(dct, None, msg, dict_index=1)
        buf = serialize_block(blk, n)
        assert len(buf) == blk.serialized_size()


# ---------------------------------------------------------------------------
# dictionary-set persistence


def test_dictset_roundtrip_reproduces_tables(tiny_set):
    data = save_dictset(tiny_set)
    loaded = load_dictset(data)
    assert len(loaded) == len(tiny_set)
    assert loaded.k == tiny_set.k and loaded.o == tiny_set.o
    for a, b in zip(tiny_set.dictionaries, loaded.dictionaries):
        assert a.shift == b.shift
        assert a.levels == b.levels
        assert a.abr == pytest.approx(b.abr, rel=1e-12)
        ta, tb = build_decoder_table(a), build_decoder_table(b)
        assert np.array_equal(ta.words, tb.words)
        assert np.array_equal(ta.lengths, tb.lengths)
        ma, mb = build_encoder_matrix(a), build_encoder_matrix(b)
        assert ma.cells == mb.cells
    # byte-identical re-serialization
    assert save_dictset(loaded) == data


def test_dictset_digest_tracks_tables_only(tiny_set):
    d = dictset_digest(tiny_set)
    # metadata does not move the digest
    old = tiny_set[0].abr
    tiny_set[0].abr = old + 1.0
    assert dictset_digest(tiny_set) == d
    tiny_set[0].abr = old


def test_dictset_corrupted_digest_rejected(tiny_set):
    data = bytearray(save_dictset(tiny_set))
    data[-1] ^= 0xFF
    with pytest.raises(FormatError):
        load_dictset(bytes(data))


def test_dictset_corrupted_table_rejected(tiny_set):
    data = bytearray(save_dictset(tiny_set))
    data[40] ^= 0x01
    with pytest.raises(FormatError):
        load_dictset(bytes(data))


def test_dictset_rejects_wrong_magic():
    with pytest.raises(FormatError):
        load_dictset(b"NOPE" + b"\x00" * 64)


def test_empty_set_unrepresentable():
    from ricemarlin.errors import BuildError

    with pytest.raises(BuildError):
        DictionarySet([])


# ---------------------------------------------------------------------------
# container


def test_container_roundtrip_various_sizes(tiny_set):
    dist = make_distribution(SyntheticFamily("laplacian", 0.5))
    for n in (0, 1, 4095, 4096, 4097, 65536):
        data = dist.sample(n, seed=n)
        comp = compress_bytes(data, tiny_set, block_size=4096)
        assert decompress_bytes(comp, tiny_set) == data


def test_container_rejects_wrong_set(tiny_set):
    other = build_dictionary_set(
        {"grid": [("laplacian", 0.4)], "k": 8, "o": 4, "block_n": 4096}
    )
    data = make_distribution(SyntheticFamily("laplacian", 0.5)).sample(5000, seed=2)
    comp = compress_bytes(data, tiny_set)
    with pytest.raises(FormatError):
        decompress_bytes(comp, other)


def test_container_detects_truncation(tiny_set):
    data = make_distribution(SyntheticFamily("laplacian", 0.5)).sample(9000, seed=3)
    comp = compress_bytes(data, tiny_set)
    with pytest.raises(CorruptBlockError):
        decompress_bytes(comp[: len(comp) - 3], tiny_set)
    with pytest.raises(CorruptBlockError):
        decompress_bytes(comp[:10], tiny_set)


def test_container_header_derives_block_sizes():
    hdr = ContainerHeader(k=8, o=4, block_size=4096, total_size=10000)
    assert hdr.block_sizes() == [4096, 4096, 1808]
    empty = ContainerHeader(k=8, o=4, block_size=4096, total_size=0)
    assert empty.block_sizes() == []


def test_container_exact_selection_roundtrip(tiny_set):
    dist = make_distribution(SyntheticFamily("laplacian", 0.8))
    data = dist.sample(20000, seed=9)
    comp = compress_bytes(data, tiny_set, exact_select=True)
    assert decompress_bytes(comp, tiny_set) == data
