"""Construction of overlapped variable-to-fixed dictionaries.

A dictionary splits every byte into an S-bit reminder and a quotient,
drops quotients rarer than a threshold onto an escape channel, and grows
plurally parsable word sets over the remaining quotient alphabet.  Words
map to N = K + O bit codewords of which only K bits are consumed per
step; the low O bits select which *chapter* (word set conditioned on an
exclusion level) the next codeword is read from.
"""

from __future__ import annotations

import heapq
from bisect import bisect_left
from dataclasses import dataclass, field

import numpy as np

from .bitpack import loc_bytes
from .errors import BuildError
from .source import ALPHABET_SIZE, SymbolDistribution, entropy

#: threshold grid searched for unrepresented-symbol exclusion
THRESHOLD_GRID = (0.0,) + tuple(2.0**-i for i in range(16, 5, -1))

#: shifts searched by best_dictionary_for
SHIFT_RANGE = range(0, 8)

MAX_CODE_BITS = 24  # K + O cap; keeps tables desk-sized

_STATIONARY_TOL = 1e-12
_STATIONARY_CAP = 100_000


# ---------------------------------------------------------------------------
# quotient alphabet


@dataclass(frozen=True)
class QuotientAlphabet:
    """The represented quotient alphabet for one (distribution, S, threshold)."""

    shift: int
    values: tuple[int, ...]  # quotient values, most probable first
    probs: np.ndarray  # per-quotient probability, aligned with values
    excluded: frozenset[int]  # byte symbols whose quotient is unrepresented
    placeholder: int  # most probable represented quotient
    p_escape: float

    def __len__(self) -> int:
        return len(self.values)

    @property
    def coding_probs(self) -> np.ndarray:
        """Quotient probabilities as seen by the parser.

        Escaped symbols are substituted by the placeholder before parsing, so
        its probability absorbs the escape mass.
        """
        p = np.array(self.probs)
        p[0] += self.p_escape
        return p

    def rank_lut(self) -> np.ndarray:
        """Map byte value -> quotient rank; escaped bytes map to -1."""
        cached = getattr(self, "_rank_lut", None)
        if cached is None:
            qspace = ALPHABET_SIZE >> self.shift if self.shift < 8 else 1
            rank_of_q = np.full(qspace, -1, dtype=np.int16)
            for r, v in enumerate(self.values):
                rank_of_q[v] = r
            cached = rank_of_q[np.arange(ALPHABET_SIZE) >> self.shift]
            cached.setflags(write=False)
            object.__setattr__(self, "_rank_lut", cached)
        return cached


def split_alphabet(dist: SymbolDistribution, shift: int, threshold: float) -> QuotientAlphabet:
    """Split bytes into quotient/reminder and drop quotients below ``threshold``."""
    if not 0 <= shift <= 8:
        raise ValueError("shift must be in [0, 8]")
    if not 0.0 <= threshold < 1.0:
        raise ValueError("threshold must be in [0, 1)")
    qp = dist.quotient_probs(shift)
    keep = qp >= threshold
    if not keep.any():
        raise BuildError(
            f"threshold {threshold} excludes every quotient at shift {shift}"
        )
    kept = np.nonzero(keep)[0]
    order = kept[np.lexsort((kept, -qp[kept]))]  # prob desc, value asc on ties
    excluded_q = set(np.nonzero(~keep)[0].tolist())
    excluded_bytes = frozenset(
        b for b in range(ALPHABET_SIZE) if (b >> shift) in excluded_q
    )
    return QuotientAlphabet(
        shift=shift,
        values=tuple(int(v) for v in order),
        probs=qp[order],
        excluded=excluded_bytes,
        placeholder=int(order[0]),
        p_escape=float(qp[~keep].sum()),
    )


# ---------------------------------------------------------------------------
# chapter growth


@dataclass
class LevelWords:
    """One grown word set: words are tuples of quotient ranks."""

    level: int
    words: list[tuple[int, ...]]
    kvals: list[int]  # per word: number of single-symbol extensions present
    raws: list[float]  # per word: P(source emits this prefix | first rank >= level)
    index: dict[tuple[int, ...], int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.index:
            self.index = {w: i for i, w in enumerate(self.words)}


def _conditional_roots(coding: np.ndarray, level: int) -> np.ndarray:
    tail = coding[level:]
    z = tail.sum()
    if z > 0:
        return tail / z
    return np.full(len(tail), 1.0 / len(tail))


def grow_chapter(coding, level: int, size: int) -> LevelWords:
    """Grow a plurally parsable word set of exactly ``size`` words.

    Seeds every admissible quotient (rank >= level) as a single-symbol word,
    then repeatedly adds the candidate extension with the highest probability
    of occurring, where each word exposes one candidate at a time: itself
    extended by its next-most-probable successor.
    """
    if isinstance(coding, QuotientAlphabet):
        coding = coding.coding_probs
    nq = len(coding)
    admissible = nq - level
    if admissible < 1:
        raise BuildError(f"no admissible quotients at exclusion level {level}")
    if admissible > size:
        raise BuildError(
            f"{admissible} admissible quotients exceed the {size} dictionary slots"
        )
    roots = _conditional_roots(coding, level)
    words: list[tuple[int, ...]] = [(r,) for r in range(level, nq)]
    raws: list[float] = [float(roots[r - level]) for r in range(level, nq)]
    kvals: list[int] = [0] * len(words)

    heap: list[tuple[float, int, int, int]] = []
    seq = 0
    for i in range(len(words)):
        heapq.heappush(heap, (-raws[i] * coding[0], seq, i, 0))
        seq += 1
    while len(words) < size:
        _, _, parent, child = heapq.heappop(heap)
        new_word = words[parent] + (child,)
        new_raw = raws[parent] * float(coding[child])
        kvals[parent] += 1
        if kvals[parent] < nq:
            heapq.heappush(
                heap, (-raws[parent] * coding[kvals[parent]], seq, parent, kvals[parent])
            )
            seq += 1
        words.append(new_word)
        raws.append(new_raw)
        kvals.append(0)
        heapq.heappush(heap, (-new_raw * coding[0], seq, len(words) - 1, 0))
        seq += 1
    return LevelWords(level=level, words=words, kvals=kvals, raws=raws)


# ---------------------------------------------------------------------------
# codeword layout

def _assignable(kvals: list[int], levels: list[int], k: int, o: int) -> bool:
    """Hall condition: words needing low exclusion levels fit the slots offering them."""
    cap = 1 << (k - o)
    ks = sorted(kvals)
    for level in sorted(set(levels)):
        if level == 0:
            continue
        short = bisect_left(ks, level)  # words with k < level
        roomy = cap * sum(1 for v in levels if v < level)
        if short > roomy:
            return False
    return True


def assign_codewords(level_words: LevelWords, levels: list[int], k: int, o: int) -> list[int]:
    """Assign each word a codeword offset within its chapter's range.

    Offset low O bits select the next chapter; a word may only feed chapters
    whose exclusion level its child count covers.  Slot groups are filled from
    the highest exclusion level downward, preferring words with the largest
    child counts; overflow demotes words to lower slots (level 0 always fits).
    Returns word indices in codeword-offset order.
    """
    cap = 1 << (k - o)
    order = sorted(
        range(len(level_words.words)),
        key=lambda i: (-level_words.kvals[i], -level_words.raws[i], level_words.words[i]),
    )
    used = [False] * len(order)
    layout: list[int] = [-1] * (1 << k)
    for v in sorted(range(1 << o), key=lambda v: (-levels[v], -v)):
        took = 0
        for i in order:
            if used[i] or level_words.kvals[i] < levels[v]:
                continue
            layout[v + (took << o)] = i
            used[i] = True
            took += 1
            if took == cap:
                break
        if took < cap:
            raise BuildError(
                f"cannot place {cap} words on next-chapter value {v} "
                f"(exclusion level {levels[v]})"
            )
    return layout


# ---------------------------------------------------------------------------
# the dictionary


class MarlinDictionary:
    """A fully assigned dictionary: chapters, codewords, and statistics."""

    def __init__(
        self,
        k: int,
        o: int,
        alphabet: QuotientAlphabet,
        levels: tuple[int, ...],
        level_sets: dict[int, LevelWords],
        level_layout: dict[int, list[int]],
        source_id: str = "custom",
        block_n: int = 4096,
        empty_quotient: bool = False,
    ):
        _validate_ko(k, o)
        self.k = k
        self.o = o
        self.alphabet = alphabet
        self.levels = levels
        self.level_sets = level_sets
        self.level_layout = level_layout
        self.source_id = source_id
        self.block_n = block_n
        self.empty_quotient = empty_quotient
        self.abr: float = float("nan")
        self.quotient_bits: float = 0.0  # K / mean parse length under training dist
        self.stationary: np.ndarray | None = None
        self._chain_cache: dict[int, "_ParseChain"] = {}

    # -- basic geometry -----------------------------------------------------

    @property
    def shift(self) -> int:
        return self.alphabet.shift

    @property
    def n_codewords(self) -> int:
        return 1 << (self.k + self.o)

    @property
    def n_chapters(self) -> int:
        return 1 << self.o

    @property
    def words_per_chapter(self) -> int:
        return 1 << self.k

    def word_at(self, codeword: int) -> tuple[int, ...]:
        """The word (as quotient ranks) assigned to an N-bit codeword."""
        c, i = divmod(codeword, self.words_per_chapter)
        lw = self.level_sets[self.levels[c]]
        return lw.words[self.level_layout[self.levels[c]][i]]

    def next_chapter(self, codeword: int) -> int:
        return codeword & (self.n_chapters - 1)

    def max_word_len(self) -> int:
        cached = getattr(self, "_max_word_len", None)
        if cached is None:
            if self.empty_quotient:
                cached = 1
            else:
                cached = max(
                    len(w) for lw in self.level_sets.values() for w in lw.words
                )
            self._max_word_len = cached
        return cached

    def codeword_of(self, chapter: int, word: tuple[int, ...]) -> int:
        lw = self.level_sets[self.levels[chapter]]
        i = lw.index[word]
        offset = self.level_layout[self.levels[chapter]].index(i)
        return chapter * self.words_per_chapter + offset

    def chapter_words(self, c: int) -> list[tuple[int, ...]]:
        """Words of chapter ``c`` in codeword-offset order, as quotient ranks."""
        lw = self.level_sets[self.levels[c]]
        return [lw.words[i] for i in self.level_layout[self.levels[c]]]

    # -- construction ---------------------------------------------------------

    @classmethod
    def build(
        cls,
        dist: SymbolDistribution,
        k: int,
        o: int,
        shift: int,
        threshold: float,
        block_n: int = 4096,
        source_id: str | None = None,
    ) -> "MarlinDictionary":
        """Build and evaluate a dictionary for one (S, threshold) choice."""
        _validate_ko(k, o)
        alphabet = split_alphabet(dist, shift, threshold)
        return cls.from_alphabet(
            dist, k, o, alphabet, block_n=block_n, source_id=source_id
        )

    @classmethod
    def from_alphabet(
        cls,
        dist: SymbolDistribution,
        k: int,
        o: int,
        alphabet: QuotientAlphabet,
        block_n: int = 4096,
        source_id: str | None = None,
    ) -> "MarlinDictionary":
        nq = len(alphabet)
        source_id = source_id if source_id is not None else dist.source_id
        if nq == 1:
            dct = cls(
                k, o, alphabet, (), {}, {}, source_id=source_id, block_n=block_n,
                empty_quotient=True,
            )
            dct._finalize(dist)
            return dct
        if nq >= (1 << k):
            raise BuildError(
                f"{nq} quotients need a dictionary larger than 2^{k} words"
            )
        coding = alphabet.coding_probs
        levels = [min(c, nq - 1) for c in range(1 << o)]
        grown: dict[int, LevelWords] = {}
        while True:
            for lvl in set(levels):
                if lvl not in grown:
                    grown[lvl] = grow_chapter(coding, lvl, 1 << k)
            if all(
                _assignable(grown[lvl].kvals, levels, k, o) for lvl in set(levels)
            ):
                break
            # demote the chapter with the hardest exclusion promise
            top = max(levels)
            levels[max(i for i, v in enumerate(levels) if v == top)] = top - 1
        in_use = sorted(set(levels))
        level_sets = {lvl: grown[lvl] for lvl in in_use}
        level_layout = {
            lvl: assign_codewords(level_sets[lvl], levels, k, o) for lvl in in_use
        }
        dct = cls(
            k, o, alphabet, tuple(levels), level_sets, level_layout,
            source_id=source_id, block_n=block_n,
        )
        dct._finalize(dist)
        return dct

    @classmethod
    def from_tables(
        cls,
        k: int,
        o: int,
        alphabet: QuotientAlphabet,
        chapters: list[list[tuple[int, ...]]],
        block_n: int = 4096,
        source_id: str = "tables",
    ) -> "MarlinDictionary":
        """Assemble a dictionary from explicit per-chapter word lists.

        ``chapters[c][i]`` is the word (quotient values) for codeword
        ``c * 2**K + i``.  Words must be prefix-closed within each chapter and
        each word's present extensions must be its most probable successors.
        """
        _validate_ko(k, o)
        if len(chapters) != 1 << o:
            raise BuildError(f"need {1 << o} chapters, got {len(chapters)}")
        value_rank = {v: r for r, v in enumerate(alphabet.values)}
        levels = []
        level_sets: dict[int, LevelWords] = {}
        level_layout: dict[int, list[int]] = {}
        for c, words_vals in enumerate(chapters):
            if len(words_vals) != 1 << k:
                raise BuildError(f"chapter {c} must hold {1 << k} words")
            words = [tuple(value_rank[v] for v in w) for w in words_vals]
            if len(set(words)) != len(words):
                raise BuildError(f"chapter {c} contains repeated words")
            index = {w: i for i, w in enumerate(words)}
            kvals = []
            for w in words:
                kw = 0
                while w + (kw,) in index:
                    kw += 1
                for r in range(kw + 1, len(alphabet)):
                    if w + (r,) in index:
                        raise BuildError(
                            "present extensions must be the most probable successors"
                        )
                kvals.append(kw)
            for w in words:
                if len(w) > 1 and w[:-1] not in index:
                    raise BuildError(f"chapter {c} is not prefix-closed at {w}")
            level = min(w[0] for w in words)
            for r in range(level, len(alphabet)):
                if (r,) not in index:
                    raise BuildError(
                        f"chapter {c} misses single-symbol word of rank {r}"
                    )
            # stored with identity layout; raws only guide layout, not needed here
            levels.append(level)
            level_sets[len(levels) - 1] = LevelWords(
                level=level, words=words, kvals=kvals, raws=[0.0] * len(words)
            )
            level_layout[len(levels) - 1] = list(range(len(words)))
        omask = (1 << o) - 1
        for c in range(1 << o):
            lw = level_sets[c]
            for i, kw in enumerate(lw.kvals):
                if kw < levels[i & omask]:
                    raise BuildError(
                        f"unsafe codeword {c * (1 << k) + i}: word with {kw} "
                        f"children feeds a level-{levels[i & omask]} chapter"
                    )
        # from_tables keys level_sets by chapter index (chapters may differ at
        # equal levels); the true exclusion levels live in _chapter_levels
        dct = cls(
            k, o, alphabet, tuple(range(1 << o)), level_sets, level_layout,
            source_id=source_id, block_n=block_n,
        )
        dct._chapter_levels = tuple(levels)
        return dct

    # -- statistics -----------------------------------------------------------

    _chapter_levels: tuple[int, ...] | None = None

    def exclusion_level(self, c: int) -> int:
        """Exclusion level actually promised by chapter ``c``'s contents."""
        if self._chapter_levels is not None:
            return self._chapter_levels[c]
        return self.levels[c]

    def _finalize(self, dist: SymbolDistribution) -> None:
        self.abr = abr_estimate(self, dist, self.block_n)
        if not self.empty_quotient:
            chain = self._chain(self._coding_probs_for(dist))
            self.stationary = chain.chapter_marginal()
            self.quotient_bits = self.k / chain.mean_parse_length()
        else:
            self.stationary = np.ones(1)
            self.quotient_bits = 0.0

    def _coding_probs_for(self, dist: SymbolDistribution) -> np.ndarray:
        """Parser-visible quotient probabilities under an arbitrary distribution."""
        qp = dist.quotient_probs(self.shift) if self.shift < 8 else np.ones(1)
        probs = np.array([qp[v] for v in self.alphabet.values], dtype=np.float64)
        # escaped mass is parsed as the placeholder (rank 0)
        probs[0] += 1.0 - probs.sum()
        return probs

    def escape_mass(self, dist: SymbolDistribution) -> float:
        qp = dist.quotient_probs(self.shift) if self.shift < 8 else np.ones(1)
        kept = sum(float(qp[v]) for v in self.alphabet.values)
        return max(0.0, 1.0 - kept)

    def _chain(self, coding: np.ndarray) -> "_ParseChain":
        key = hash(coding.tobytes())
        chain = self._chain_cache.get(key)
        if chain is None:
            chain = _ParseChain(self, coding)
            if len(self._chain_cache) > 8:
                self._chain_cache.clear()
            self._chain_cache[key] = chain
        return chain

    def chapter_stationary(self, dist: SymbolDistribution | None = None) -> np.ndarray:
        """Long-run probability of parsing in each chapter."""
        if self.empty_quotient:
            return np.ones(1)
        if dist is None:
            if self.stationary is None:
                raise BuildError("dictionary has no training statistics")
            return self.stationary
        return self._chain(self._coding_probs_for(dist)).chapter_marginal()

    def mean_parse_length(self, dist: SymbolDistribution) -> float:
        if self.empty_quotient:
            raise BuildError("empty-quotient dictionary does not parse")
        return self._chain(self._coding_probs_for(dist)).mean_parse_length()

    def emission_probs(self, c: int, dist: SymbolDistribution) -> np.ndarray:
        """Per-word emission probabilities of chapter ``c`` under its own level."""
        chain = self._chain(self._coding_probs_for(dist))
        return chain.emission_probs(c, self.exclusion_level(c))


def _validate_ko(k: int, o: int) -> None:
    if k < 1 or o < 0 or o > k or k + o > MAX_CODE_BITS:
        raise BuildError(
            f"need 1 <= K, 0 <= O <= K, K+O <= {MAX_CODE_BITS}; got K={k}, O={o}"
        )


# ---------------------------------------------------------------------------
# exact parse chain
#
# Parsing a memoryless quotient stream with these dictionaries is Markov in
# the pair (chapter, exclusion): after a word with child count k is emitted,
# longest-match guarantees the next quotient's rank is >= k, which can exceed
# the entered chapter's own level.  Tracking the pair keeps the predicted
# mean parse length exact rather than a chapter-marginal approximation.


def _word_tails(words: list[tuple[int, ...]], coding: np.ndarray) -> dict:
    """P(source continues with w[1:]) per word, via the prefix tree."""
    tails: dict[tuple[int, ...], float] = {}
    for w in sorted(words, key=len):
        tails[w] = 1.0 if len(w) == 1 else tails[w[:-1]] * float(coding[w[-1]])
    return tails


class _ParseChain:
    def __init__(self, dct: MarlinDictionary, coding: np.ndarray):
        self.dct = dct
        self.coding = coding
        nq = len(coding)
        omask = dct.n_chapters - 1

        cum = np.concatenate([[0.0], np.cumsum(coding)])
        suffix = float(cum[-1]) - cum  # suffix[e] = total prob at ranks >= e

        # per distinct word set: first rank, emit weight, child count, length,
        # and slot value of every word in codeword-offset order
        set_keys = sorted(set(dct.levels))
        per_set: dict[int, tuple] = {}
        evals = {0}
        for key in set_keys:
            lw = dct.level_sets[key]
            layout = dct.level_layout[key]
            tails = _word_tails(lw.words, coding)
            words = [lw.words[i] for i in layout]
            kv = np.array([lw.kvals[i] for i in layout])
            # a word with every extension present is never emitted (its emit
            # weight below is zero); cap its exclusion state to keep rows defined
            kv_state = np.minimum(kv, nq - 1)
            evals.update(int(x) for x in kv_state)
            r1 = np.array([w[0] for w in words])
            base = np.array([tails[w] for w in words]) * (
                1.0 - cum[np.minimum(kv, nq)]
            )
            lengths = np.array([len(w) for w in words], dtype=np.float64)
            slots = np.arange(len(words)) & omask
            per_set[key] = (r1, base, kv_state, lengths, slots)

        self.evals = sorted(evals)
        states: list[tuple[int, int]] = []
        for c in range(dct.n_chapters):
            lvl = dct.exclusion_level(c)
            for e in self.evals:
                if e >= lvl:
                    states.append((c, e))
        self.states = states
        sidx = {s: i for i, s in enumerate(states)}
        ns = len(states)

        T = np.zeros((ns, ns))
        length_exp = np.zeros(ns)
        # rows depend on the word set and the exclusion level only; identical
        # chapters share them
        row_cache: dict[int, tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = {}
        for key in set_keys:
            r1, base, kv, lengths, slots = per_set[key]
            targets = np.array([sidx[(int(v), int(kw))] for v, kw in zip(slots, kv)])
            m = np.zeros((nq + 1, ns))
            mlen = np.zeros(nq + 1)
            w_first = coding[r1] * base
            np.add.at(m, (r1, targets), w_first)
            np.add.at(mlen, r1, w_first * lengths)
            m_u = np.zeros((nq + 1, ns))
            mlen_u = np.zeros(nq + 1)
            np.add.at(m_u, (r1, targets), base)
            np.add.at(mlen_u, r1, base * lengths)
            row_cache[key] = (
                np.flip(np.cumsum(np.flip(m, 0), axis=0), 0),
                np.flip(np.cumsum(np.flip(mlen))),
                np.flip(np.cumsum(np.flip(m_u, 0), axis=0), 0),
                np.flip(np.cumsum(np.flip(mlen_u))),
            )
        for si, (c, e) in enumerate(states):
            msuf, msuf_len, msuf_u, msuf_ulen = row_cache[dct.levels[c]]
            if suffix[e] > 0:
                T[si] = msuf[e] / suffix[e]
                length_exp[si] = msuf_len[e] / suffix[e]
            else:
                T[si] = msuf_u[e] / (nq - e)
                length_exp[si] = msuf_ulen[e] / (nq - e)
        if not np.isfinite(T).all():
            raise BuildError("parse chain produced non-finite transition rows")
        self.T = T
        self.length_exp = length_exp
        self._pi: np.ndarray | None = None

    def stationary(self) -> np.ndarray:
        if self._pi is not None:
            return self._pi
        ns = len(self.states)
        pi = np.full(ns, 1.0 / ns)
        # averaging step keeps the same fixed point but cannot oscillate on
        # periodic chains
        for _ in range(_STATIONARY_CAP):
            nxt = 0.5 * (pi + pi @ self.T)
            delta = float(np.abs(nxt - pi).sum())
            pi = nxt
            if delta < _STATIONARY_TOL:
                self._pi = pi / pi.sum()
                return self._pi
        raise BuildError(
            f"stationary distribution did not converge; residual {delta:.3e}"
        )

    def chapter_marginal(self) -> np.ndarray:
        pi = self.stationary()
        out = np.zeros(self.dct.n_chapters)
        for p, (c, _) in zip(pi, self.states):
            out[c] += p
        return out

    def mean_parse_length(self) -> float:
        pi = self.stationary()
        return float(pi @ self.length_exp)

    def emission_probs(self, c: int, e: int) -> np.ndarray:
        """Emission probability of each word of chapter ``c`` at exclusion ``e``."""
        dct = self.dct
        coding = self.coding
        nq = len(coding)
        lw = dct.level_sets[dct.levels[c]]
        layout = dct.level_layout[dct.levels[c]]
        words = [lw.words[i] for i in layout]
        kv = [lw.kvals[i] for i in layout]
        tails = _word_tails(lw.words, coding)
        cum = np.concatenate([[0.0], np.cumsum(coding)])
        z = float(coding[e:].sum())
        out = np.zeros(len(words))
        for i, w in enumerate(words):
            if w[0] < e:
                continue
            root = float(coding[w[0]]) / z if z > 0 else 1.0 / (nq - e)
            out[i] = root * tails[w] * (1.0 - float(cum[min(kv[i], nq)]))
        return out


# ---------------------------------------------------------------------------
# efficiency estimates


def abr_estimate(
    dct: MarlinDictionary, dist: SymbolDistribution, block_n: int | None = None
) -> float:
    """Modeled average bit rate (bits/symbol) of ``dct`` on ``dist``.

    Quotient cost applies to all symbols (escapes parse as the placeholder);
    each escape additionally stores a location/value pair.  The 2-byte block
    header is excluded.
    """
    block_n = block_n if block_n is not None else dct.block_n
    p_esc = dct.escape_mass(dist)
    escape_bits = p_esc * 8.0 * (1 + loc_bytes(block_n))
    if dct.empty_quotient:
        return dct.shift + escape_bits
    lbar = dct.mean_parse_length(dist)
    return dct.k / lbar + dct.shift + escape_bits


def efficiency(dct: MarlinDictionary, dist: SymbolDistribution, block_n: int | None = None) -> float:
    """eta = H(X) / ABR(X); defined as 1.0 for the zero-bit degenerate case."""
    abr = abr_estimate(dct, dist, block_n)
    h = dist.entropy()
    if abr == 0.0:
        return 1.0
    return h / abr


def shift_efficiency_bound(dist: SymbolDistribution, shift: int) -> float:
    """Upper bound on eta at a given shift: reminders are stored verbatim."""
    h = dist.entropy()
    hq = entropy(dist.quotient_probs(shift))
    if shift + hq == 0.0:
        return 1.0
    return h / (shift + hq)


# ---------------------------------------------------------------------------
# search


def best_dictionary_for(
    dist: SymbolDistribution,
    k: int,
    o: int,
    block_n: int = 4096,
    shifts: range | tuple = SHIFT_RANGE,
    thresholds: tuple[float, ...] = THRESHOLD_GRID,
    source_id: str | None = None,
) -> MarlinDictionary:
    """Search (S, threshold) and return the dictionary maximizing H(X)/ABR.

    Ties prefer the smaller shift, then the smaller threshold.
    """
    _validate_ko(k, o)
    best: tuple[float, int, float] | None = None
    best_dct: MarlinDictionary | None = None
    errors: list[str] = []
    seen: dict[tuple[int, frozenset[int]], bool] = {}
    for shift in shifts:
        for threshold in thresholds:
            try:
                alphabet = split_alphabet(dist, shift, threshold)
            except BuildError as exc:
                errors.append(f"S={shift} thr={threshold:g}: {exc}")
                continue
            sig = (shift, alphabet.excluded)
            if sig in seen:
                continue
            seen[sig] = True
            try:
                dct = MarlinDictionary.from_alphabet(
                    dist, k, o, alphabet, block_n=block_n, source_id=source_id
                )
            except BuildError as exc:
                errors.append(f"S={shift} thr={threshold:g}: {exc}")
                continue
            dct.search_threshold = threshold
            eta = efficiency(dct, dist, block_n)
            key = (-eta, shift, threshold)
            if best is None or key < best:
                best = key
                best_dct = dct
    if best_dct is None:
        raise BuildError(
            "no (S, threshold) candidate could be built: " + "; ".join(errors[:4])
        )
    return best_dct


# ---------------------------------------------------------------------------
# dictionary sets


RAW_INDEX = 255  # reserved: block stored verbatim
MAX_SET_SIZE = 255


@dataclass
class DictionarySet:
    """An ordered collection of dictionaries sharing (K, O)."""

    dictionaries: list[MarlinDictionary]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dictionaries:
            raise BuildError("a dictionary set must contain at least one dictionary")
        if len(self.dictionaries) > MAX_SET_SIZE:
            raise BuildError(
                f"at most {MAX_SET_SIZE} dictionaries fit (index {RAW_INDEX} is "
                "the raw-block sentinel)"
            )
        k, o = self.dictionaries[0].k, self.dictionaries[0].o
        if any(d.k != k or d.o != o for d in self.dictionaries):
            raise BuildError("all dictionaries in a set must share (K, O)")
        self._cost_matrix: np.ndarray | None = None
        self._cost_block_n = -1

    @property
    def k(self) -> int:
        return self.dictionaries[0].k

    @property
    def o(self) -> int:
        return self.dictionaries[0].o

    def __len__(self) -> int:
        return len(self.dictionaries)

    def __getitem__(self, i: int) -> MarlinDictionary:
        return self.dictionaries[i]

    def select(self, hist: SymbolDistribution, block_n: int) -> int:
        """Index of the dictionary with the lowest modeled ABR on ``hist``."""
        best_i, best_abr = 0, float("inf")
        for i, dct in enumerate(self.dictionaries):
            abr = abr_estimate(dct, hist, block_n)
            if abr < best_abr:
                best_i, best_abr = i, abr
        return best_i

    def quick_select(self, counts: np.ndarray, block_n: int) -> int:
        """Fast first-order selection from raw byte counts.

        Scores each dictionary by a per-byte bit-cost table (cross-entropy of
        the quotient against the training model, scaled by the dictionary's
        trained coding efficiency, plus reminder and escape costs).
        """
        if self._cost_matrix is None or self._cost_block_n != block_n:
            self._cost_matrix = _cost_matrix(self, block_n)
            self._cost_block_n = block_n
        scores = self._cost_matrix @ counts
        return int(np.argmin(scores))


def _cost_matrix(dset: DictionarySet, block_n: int) -> np.ndarray:
    rows = []
    esc_bits = 8.0 * (1 + loc_bytes(block_n))
    for dct in dset.dictionaries:
        cost = np.full(ALPHABET_SIZE, float(dct.shift))
        if dct.empty_quotient:
            excl = np.array([b in dct.alphabet.excluded for b in range(ALPHABET_SIZE)])
            cost[excl] += esc_bits
            rows.append(cost)
            continue
        coding = dct.alphabet.coding_probs
        hq = entropy(coding)
        eta_q = min(1.0, hq / dct.quotient_bits) if dct.quotient_bits > 0 else 1.0
        with np.errstate(divide="ignore"):
            qbits = np.where(coding > 0, -np.log2(np.maximum(coding, 1e-300)), 64.0)
        qbits = np.minimum(qbits / max(eta_q, 1e-9), 64.0)
        rank_lut = dct.alphabet.rank_lut()
        for b in range(ALPHABET_SIZE):
            r = rank_lut[b]
            if r < 0:
                cost[b] += esc_bits + qbits[0]
            else:
                cost[b] += qbits[r]
        rows.append(cost)
    return np.array(rows)


def select_dictionary(dset: DictionarySet, hist: SymbolDistribution, block_n: int) -> int:
    """Index of the set entry whose recomputed ABR on ``hist`` is lowest."""
    return dset.select(hist, block_n)


def default_set_config() -> dict:
    """The documented default dictionary-set grid."""
    lap = [round(0.02 * i, 2) for i in range(1, 50)]  # 0.02 .. 0.98
    poi = [round(0.10 * i, 2) for i in range(1, 10)]  # 0.10 .. 0.90
    return {
        "grid": [("laplacian", f) for f in lap] + [("poisson", f) for f in poi],
        "k": 8,
        "o": 4,
        "block_n": 4096,
    }


def build_dictionary_set(config: dict | None = None) -> DictionarySet:
    """Build one best dictionary per grid point; deterministic for a config."""
    from .source import SyntheticFamily, make_distribution

    cfg = dict(default_set_config())
    if config:
        cfg.update(config)
    grid = cfg["grid"]
    if not grid:
        raise BuildError("dictionary-set grid is empty")
    if len(grid) > MAX_SET_SIZE:
        raise BuildError(f"grid of {len(grid)} exceeds the {MAX_SET_SIZE}-entry cap")
    dicts = []
    for family, fraction in grid:
        dist = make_distribution(SyntheticFamily(family, fraction))
        dicts.append(
            best_dictionary_for(dist, cfg["k"], cfg["o"], block_n=cfg["block_n"])
        )
    return DictionarySet(dicts, metadata=dict(cfg))
