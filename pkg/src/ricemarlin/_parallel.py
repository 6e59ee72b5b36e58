"""Worker-side helpers for multi-process benchmarking."""

from __future__ import annotations

_SET = None
_BLOCK = 4096


def freeze_set(dset) -> bytes:
    from .format import save_dictset

    return save_dictset(dset)


def init_worker(frozen: bytes, block_size: int) -> None:
    global _SET, _BLOCK
    from .format import load_dictset

    _SET = load_dictset(frozen)
    _BLOCK = block_size


def compress_part(data: bytes) -> bytes:
    from .format import compress_bytes

    return compress_bytes(data, _SET, _BLOCK)


def decompress_part(buf: bytes) -> bytes:
    from .format import decompress_bytes

    return decompress_bytes(buf, _SET)
