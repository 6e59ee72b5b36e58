import numpy as np
import pytest

from ricemarlin import MarlinDictionary, SymbolDistribution, split_alphabet

# Four-symbol alphabet used across the worked-example tests: bytes 0..3
# stand in for a..d, most probable first.
ABCD_PROBS = (0.7, 0.15, 0.1, 0.05)

A, B, C, D = 0, 1, 2, 3

# A reference two-chapter K=3/O=1 dictionary, words in codeword order.
WORKED_CHAPTER_0 = [
    (A, A, A, A),  # 0000
    (A,),          # 0001
    (B, A),        # 0010
    (A, A),        # 0011
    (C,),          # 0100
    (A, A, A),     # 0101
    (D,),          # 0110
    (B,),          # 0111
]
WORKED_CHAPTER_1 = [
    (B, A, A, A),  # 1000
    (B, A),        # 1001
    (C, A),        # 1010
    (B, A, A),     # 1011
    (B, B),        # 1100
    (C,),          # 1101
    (D,),          # 1110
    (B,),          # 1111
]


def abcd_distribution() -> SymbolDistribution:
    p = np.zeros(256)
    p[: len(ABCD_PROBS)] = ABCD_PROBS
    return SymbolDistribution(p, source_id="abcd")


@pytest.fixture(scope="session")
def abcd_dist() -> SymbolDistribution:
    return abcd_distribution()


@pytest.fixture(scope="session")
def worked_dictionary(abcd_dist) -> MarlinDictionary:
    """The reference two-chapter dictionary, loaded verbatim."""
    alphabet = split_alphabet(abcd_dist, shift=0, threshold=2**-16)
    return MarlinDictionary.from_tables(
        k=3, o=1, alphabet=alphabet,
        chapters=[WORKED_CHAPTER_0, WORKED_CHAPTER_1],
    )


def skewed_distribution(top: float = 0.9) -> SymbolDistribution:
    """A 256-symbol distribution with a heavy head and a long thin tail."""
    p = np.full(256, (1.0 - top) / 255)
    p[0] = top
    return SymbolDistribution(p / p.sum(), source_id="skewed")
