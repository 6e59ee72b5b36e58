"""Synthetic efficiency studies and throughput benchmarks."""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass, field

from .dictionary import (
    THRESHOLD_GRID,
    DictionarySet,
    MarlinDictionary,
    best_dictionary_for,
    efficiency,
    shift_efficiency_bound,
)
from .encoder import build_encoder_matrix, encode_block
from .errors import BuildError, EntropyTargetError
from .format import compress_bytes, decompress_bytes, serialize_block
from .source import SymbolDistribution, SyntheticFamily, make_distribution


def measured_bits_per_symbol(
    dct: MarlinDictionary, sample: bytes, block_n: int = 4096, dict_index: int = 0
) -> float:
    """Actual compressed bits per symbol, excluding per-block headers."""
    matrix = build_encoder_matrix(dct) if not dct.empty_quotient else None
    total_bits = 0
    for pos in range(0, len(sample), block_n):
        chunk = sample[pos : pos + block_n]
        block = encode_block(dct, matrix, chunk, dict_index=dict_index)
        payload = len(serialize_block(block, len(chunk)))
        total_bits += 8 * (payload - (1 if block.is_raw else 2))
    return total_bits / len(sample)


def best_threshold_dictionary(
    dist: SymbolDistribution, k: int, o: int, shift: int, block_n: int = 4096
) -> MarlinDictionary:
    """Best dictionary at a pinned shift, searching the threshold grid only."""
    return best_dictionary_for(
        dist, k, o, block_n=block_n, shifts=(shift,), thresholds=THRESHOLD_GRID
    )


@dataclass
class SyntheticRow:
    family: str
    fraction: float
    size: int
    shift: int
    threshold: float
    entropy: float
    predicted_eta: float
    measured_eta: float
    shift_bound: float


def synthetic_study(
    families: list[str],
    fractions: list[float],
    sizes: list[int],
    shifts: list[int],
    o: int = 0,
    sample_bytes: int = 16 << 20,
    block_n: int = 4096,
    seed: int = 12345,
) -> list[SyntheticRow]:
    """Predicted and measured efficiency per (family, fraction, size, shift).

    ``sizes`` are dictionary word counts (powers of two); each maps to
    K = log2(size) with the given overlap.  Unreachable entropy targets and
    unbuildable candidates are skipped.
    """
    rows = []
    for family in families:
        for fraction in fractions:
            try:
                dist = make_distribution(SyntheticFamily(family, fraction))
            except EntropyTargetError:
                continue
            sample = dist.sample(sample_bytes, seed=seed)
            for size in sizes:
                k = int(size).bit_length() - 1
                if 1 << k != size:
                    raise ValueError(f"dictionary size {size} is not a power of two")
                for shift in shifts:
                    try:
                        dct = best_threshold_dictionary(dist, k, o, shift, block_n)
                    except BuildError:
                        continue
                    measured = measured_bits_per_symbol(dct, sample, block_n)
                    h = dist.entropy()
                    rows.append(
                        SyntheticRow(
                            family=family,
                            fraction=fraction,
                            size=size,
                            shift=shift,
                            threshold=getattr(dct, "search_threshold", 0.0),
                            entropy=h,
                            predicted_eta=efficiency(dct, dist, block_n),
                            measured_eta=h / measured if measured > 0 else 1.0,
                            shift_bound=shift_efficiency_bound(dist, shift),
                        )
                    )
    return rows


def rows_to_csv(rows: list[SyntheticRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        [
            "family", "entropy_fraction", "dict_size", "shift", "threshold",
            "entropy_bits", "predicted_efficiency", "measured_efficiency",
            "shift_bound",
        ]
    )
    for r in rows:
        w.writerow(
            [
                r.family, f"{r.fraction:g}", r.size, r.shift, f"{r.threshold:g}",
                f"{r.entropy:.6f}", f"{r.predicted_eta:.6f}",
                f"{r.measured_eta:.6f}", f"{r.shift_bound:.6f}",
            ]
        )
    return buf.getvalue()


@dataclass
class BenchReport:
    original_bytes: int
    compressed_bytes: int
    encode_mib_s: float
    decode_mib_s: float
    encode_runs: list[float] = field(default_factory=list)
    decode_runs: list[float] = field(default_factory=list)
    jobs: int = 1

    @property
    def ratio(self) -> float:
        return self.original_bytes / self.compressed_bytes

    def summary(self) -> str:
        return (
            f"ratio {self.ratio:.4f}  "
            f"encode {self.encode_mib_s:.2f} MiB/s  "
            f"decode {self.decode_mib_s:.2f} MiB/s  "
            f"({self.jobs} worker{'s' if self.jobs != 1 else ''})"
        )


def _median(xs: list[float]) -> float:
    s = sorted(xs)
    mid = len(s) // 2
    return s[mid] if len(s) % 2 else 0.5 * (s[mid - 1] + s[mid])


def speed_bench(
    corpus: bytes,
    dset: DictionarySet,
    block_size: int = 4096,
    runs: int = 5,
    exact_select: bool = False,
) -> BenchReport:
    """Warm-up pass plus ``runs`` timed passes; reports median throughput."""
    if len(corpus) == 0:
        raise ValueError("benchmark corpus is empty")
    mib = len(corpus) / (1 << 20)
    compressed = compress_bytes(corpus, dset, block_size, exact_select=exact_select)
    enc_times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        compress_bytes(corpus, dset, block_size, exact_select=exact_select)
        enc_times.append(time.perf_counter() - t0)
    out = decompress_bytes(compressed, dset)  # warm-up and correctness check
    if out != corpus:
        raise BuildError("benchmark round trip failed")
    dec_times = []
    for _ in range(runs):
        t0 = time.perf_counter()
        decompress_bytes(compressed, dset)
        dec_times.append(time.perf_counter() - t0)
    return BenchReport(
        original_bytes=len(corpus),
        compressed_bytes=len(compressed),
        encode_mib_s=mib / _median(enc_times),
        decode_mib_s=mib / _median(dec_times),
        encode_runs=enc_times,
        decode_runs=dec_times,
    )


def parallel_speed_bench(
    corpus: bytes,
    dset: DictionarySet,
    block_size: int = 4096,
    runs: int = 3,
    jobs: int = 2,
) -> BenchReport:
    """Multi-process block encoding/decoding throughput."""
    from concurrent.futures import ProcessPoolExecutor

    from . import _parallel

    if len(corpus) == 0:
        raise ValueError("benchmark corpus is empty")
    mib = len(corpus) / (1 << 20)
    chunk = max(block_size, (len(corpus) + jobs - 1) // jobs)
    chunk = (chunk + block_size - 1) // block_size * block_size
    parts = [corpus[i : i + chunk] for i in range(0, len(corpus), chunk)]
    with ProcessPoolExecutor(
        max_workers=jobs, initializer=_parallel.init_worker,
        initargs=(_parallel.freeze_set(dset), block_size),
    ) as pool:
        warm = list(pool.map(_parallel.compress_part, parts))
        enc_times = []
        for _ in range(runs):
            t0 = time.perf_counter()
            list(pool.map(_parallel.compress_part, parts))
            enc_times.append(time.perf_counter() - t0)
        dec_times = []
        list(pool.map(_parallel.decompress_part, warm))
        for _ in range(runs):
            t0 = time.perf_counter()
            list(pool.map(_parallel.decompress_part, warm))
            dec_times.append(time.perf_counter() - t0)
    return BenchReport(
        original_bytes=len(corpus),
        compressed_bytes=sum(len(p) for p in warm),
        encode_mib_s=mib / _median(enc_times),
        decode_mib_s=mib / _median(dec_times),
        encode_runs=enc_times,
        decode_runs=dec_times,
        jobs=jobs,
    )
