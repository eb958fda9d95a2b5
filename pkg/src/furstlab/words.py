"""Words over the generator alphabet: matrix products, the norm cocycle,
first-passage word families, random word samplers, and the norm-doubling
word construction.

Long products are tracked in a renormalized form (matrix with max-entry near
one, plus a separate log2 scale), so chi values never overflow.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapExceededError, ExactOverflowError, StallError
from .sl2 import GroupElement

Word = Tuple[int, ...]

EXACT_BITS_CAP = 1 << 20     # bit-size cap for exact-mode integer entries
DEFAULT_ENUM_CAP = 10_000_000


@dataclass(frozen=True)
class System:
    """Generating data: matrices g_i, probability vector p, exactness flag."""

    generators: Tuple[GroupElement, ...]
    probs: Tuple[float, ...]
    exact: bool = False
    name: str = "custom"

    def __post_init__(self):
        if len(self.generators) != len(self.probs):
            raise ValueError("generator and probability counts differ")
        if not self.generators:
            raise ValueError("empty system")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if abs(math.fsum(self.probs) - 1.0) > 1e-12:
            raise ValueError("probabilities must sum to 1")
        for i, g in enumerate(self.generators):
            if self.exact:
                if g.exact is None:
                    raise ValueError(f"generator {i} lacks exact entries")
                xa, xb, xc, xd = g.exact
                det = xa * xd - xb * xc
                if not (det.re == 1 and det.im == 0):
                    raise ValueError(f"generator {i}: exact determinant is not 1")
            elif g.det_defect() > 1e-10:
                raise ValueError(f"generator {i}: |det - 1| = {g.det_defect():.3e}")

    @property
    def size(self) -> int:
        return len(self.generators)

    def probs_array(self) -> np.ndarray:
        return np.asarray(self.probs, dtype=float)

    def transposed(self) -> "System":
        return System(tuple(g.transpose() for g in self.generators),
                      self.probs, self.exact, self.name + "-transpose")

    def fingerprint(self) -> str:
        import hashlib
        parts = []
        for g in self.generators:
            parts.extend(f"{z.real:.17g},{z.imag:.17g}" for z in g.entries())
        parts.extend(f"{p:.17g}" for p in self.probs)
        parts.append(str(self.exact))
        return hashlib.sha256(";".join(parts).encode()).hexdigest()[:16]


@dataclass
class WordSet:
    """Finite word family with its cylinder weights p_u."""

    words: List[Word]
    weights: List[float]
    block_norm_const: Optional[float] = None   # C with ||g_u||_op <= C 2^(n/2)
    exact_ties: int = 0
    complete: bool = True

    def total_weight(self) -> float:
        return math.fsum(self.weights)

    def __len__(self) -> int:
        return len(self.words)


# ---------------------------------------------------------------------------
# renormalized products
# ---------------------------------------------------------------------------

@dataclass
class ScaledMatrix:
    """Product matrix stored as (entries / 2^log2_scale) to avoid overflow."""

    g: GroupElement
    log2_scale: float = 0.0

    @classmethod
    def identity(cls) -> "ScaledMatrix":
        return cls(GroupElement.identity(), 0.0)

    def times(self, h: GroupElement) -> "ScaledMatrix":
        prod = self.g @ h
        m = max(abs(prod.a), abs(prod.b), abs(prod.c), abs(prod.d))
        if m == 0.0:
            raise ZeroDivisionError("zero matrix in scaled product")
        e = math.frexp(m)[1]  # renormalize by a power of two (exact in floats)
        f = math.ldexp(1.0, -e)
        scaled = GroupElement(prod.a * f, prod.b * f, prod.c * f, prod.d * f)
        return ScaledMatrix(scaled, self.log2_scale + e)

    def log2_op_norm(self) -> float:
        f2 = self.g.frobenius2()
        adet2 = abs(self.g.det()) ** 2
        sig2 = 0.5 * (f2 + math.sqrt(max(f2 * f2 - 4.0 * adet2, 0.0)))
        return self.log2_scale + 0.5 * math.log2(sig2)

    def chi(self) -> float:
        return 2.0 * self.log2_op_norm()


def product_of_word(sys: System, u: Sequence[int],
                    bits_cap: int = EXACT_BITS_CAP) -> GroupElement:
    """Left-to-right product g_{u_0} ... g_{u_{n-1}}; empty word gives the
    identity. Exact in exact mode, with a bit-size overflow cap."""
    acc = GroupElement.identity(exact=sys.exact)
    for i in u:
        acc = acc @ sys.generators[i]
        if sys.exact and acc.max_exact_bits() > bits_cap:
            raise ExactOverflowError(
                f"exact entries exceeded {bits_cap} bits at length {len(u)}")
    return acc


def chi_word(sys: System, u: Sequence[int]) -> float:
    """chi_u = 2 log2 ||g_u||_op, via a renormalized product (no overflow)."""
    acc = ScaledMatrix.identity()
    for i in u:
        acc = acc.times(sys.generators[i])
    return acc.chi()


def word_weight(sys: System, u: Sequence[int]) -> float:
    w = 1.0
    for i in u:
        w *= sys.probs[i]
    return w


def _exact_chi_tie(sys: System, u: Sequence[int], n: int) -> bool:
    """Exact check for chi_u == n: frobenius^2 == 2^n + 2^-n (exact mode)."""
    if not sys.exact or n < 0:
        return False
    from fractions import Fraction
    g = product_of_word(sys, u)
    xa, xb, xc, xd = g.exact_key()
    f2 = Fraction(0)
    for x in (xa, xb, xc, xd):
        f2 += x.re * x.re + x.im * x.im
    return f2 == Fraction(2) ** n + Fraction(1, 2 ** n)


# ---------------------------------------------------------------------------
# first-passage enumeration and sampling
# ---------------------------------------------------------------------------

def _blocks(sys: System, l: int) -> List[Word]:
    return [tuple(b) for b in itertools.product(range(sys.size), repeat=l)]


def block_norm_constant(sys: System, l: int) -> float:
    """max_{v in Lambda^l} ||g_v||_op: one extra block can exceed the passage
    level by at most this factor."""
    best = 1.0
    for v in _blocks(sys, l):
        best = max(best, 2.0 ** (0.5 * chi_word(sys, v)))
    return best


def enumerate_first_passage(sys: System, j: int, l: int, n: int,
                            cap: int = DEFAULT_ENUM_CAP) -> WordSet:
    """All words u_0...u_s with u_0 of length j, blocks of length l, whose
    chi exceeds n at the final block only.

    The family is block-prefix-free and carries total weight 1; enumeration
    fails loudly when the frontier passes `cap` words.
    """
    if not (0 <= j < l):
        raise ValueError("need 0 <= j < l")
    out_words: List[Word] = []
    out_weights: List[float] = []
    ties = 0

    frontier: List[Tuple[Word, ScaledMatrix, float]] = []
    examined = 0
    for u0 in itertools.product(range(sys.size), repeat=j):
        acc = ScaledMatrix.identity()
        for i in u0:
            acc = acc.times(sys.generators[i])
        examined += 1
        w = word_weight(sys, u0)
        if acc.chi() > n:
            out_words.append(tuple(u0))
            out_weights.append(w)
        else:
            if sys.exact and _exact_chi_tie(sys, u0, n):
                ties += 1
            frontier.append((tuple(u0), acc, w))

    blocks = _blocks(sys, l)
    # float-only block products: ScaledMatrix arithmetic never needs exactness
    block_mats = [GroupElement(*product_of_word(sys, b).entries()) for b in blocks]
    block_ws = [word_weight(sys, b) for b in blocks]

    while frontier:
        new_frontier: List[Tuple[Word, ScaledMatrix, float]] = []
        for word, acc, w in frontier:
            for b, bm, bw in zip(blocks, block_mats, block_ws):
                examined += 1
                if examined > cap:
                    raise CapExceededError(
                        f"first-passage enumeration passed cap={cap}")
                nxt = acc.times(bm)
                nw = word + b
                if nxt.chi() > n:
                    out_words.append(nw)
                    out_weights.append(w * bw)
                else:
                    if sys.exact and _exact_chi_tie(sys, nw, n):
                        ties += 1
                    new_frontier.append((nw, nxt, w * bw))
        frontier = new_frontier

    const = block_norm_constant(sys, l)
    return WordSet(out_words, out_weights, block_norm_const=const,
                   exact_ties=ties)


def sample_word(sys: System, rng, *, length: Optional[int] = None,
                first_passage: Optional[Tuple[int, int, int]] = None,
                max_blocks: int = 100_000) -> Word:
    """Random word: i.i.d. letters of a fixed length, or i.i.d. blocks until
    chi exceeds the passage level (the first-passage stopping rule)."""
    if (length is None) == (first_passage is None):
        raise ValueError("specify exactly one of length / first_passage")
    p = sys.probs_array()
    if length is not None:
        return tuple(int(i) for i in rng.choice(sys.size, size=length, p=p))

    j, l, n = first_passage
    if not (0 <= j < l):
        raise ValueError("need 0 <= j < l")
    word = tuple(int(i) for i in rng.choice(sys.size, size=j, p=p))
    acc = ScaledMatrix.identity()
    for i in word:
        acc = acc.times(sys.generators[i])
    if acc.chi() > n:
        return word
    for _ in range(max_blocks):
        block = tuple(int(i) for i in rng.choice(sys.size, size=l, p=p))
        word = word + block
        for i in block:
            acc = acc.times(sys.generators[i])
        if acc.chi() > n:
            return word
    raise StallError(f"chi failed to pass {n} within {max_blocks} blocks")


# ---------------------------------------------------------------------------
# norm-doubling words
# ---------------------------------------------------------------------------

def is_doubling_word(sys: System, word: Sequence[int], j: int, l: int) -> bool:
    """True when the full product more than doubles the squared norm of every
    block prefix: ||g_v||^2 > 2 ||g_{u_0...u_i}||^2 for all 0 <= i < k."""
    word = tuple(word)
    if len(word) < j + l or (len(word) - j) % l != 0:
        raise ValueError("word length must be j + k*l with k >= 1")
    prefix_log_norms = []
    acc = ScaledMatrix.identity()
    for i in word[:j]:
        acc = acc.times(sys.generators[i])
    prefix_log_norms.append(acc.log2_op_norm())
    rest = word[j:]
    for s in range(0, len(rest), l):
        for i in rest[s:s + l]:
            acc = acc.times(sys.generators[i])
        prefix_log_norms.append(acc.log2_op_norm())
    full = prefix_log_norms.pop()
    # squared-norm doubling <=> log2 gap > 1/2
    return all(full > q + 0.5 for q in prefix_log_norms)


def doubling_word_sets(sys: System, j: int, l: int, n: int,
                       cap: int = DEFAULT_ENUM_CAP) -> Tuple[WordSet, int]:
    """Enumerate the norm-doubling words of up to n blocks, together with the
    density bound M = ceil(2 l log2 R), R = max_i ||g_i||_op^2.

    Each returned word is verified to lie in some first-passage family at a
    level <= n*M (the containment the bound rests on).
    """
    if not (0 <= j < l):
        raise ValueError("need 0 <= j < l")
    r_const = max(2.0 ** chi_word(sys, (i,)) for i in range(sys.size))
    m_bound = max(1, math.ceil(2.0 * l * math.log2(r_const))) if r_const > 1.0 else 1

    out_words: List[Word] = []
    out_weights: List[float] = []

    # frontier keeps every block word (a failure now can extend to a doubling
    # word later), so this is exponential and cap-guarded
    frontier: List[Tuple[Word, ScaledMatrix, float, List[float]]] = []
    examined = 0
    for u0 in itertools.product(range(sys.size), repeat=j):
        acc = ScaledMatrix.identity()
        for i in u0:
            acc = acc.times(sys.generators[i])
        examined += 1
        frontier.append((tuple(u0), acc, word_weight(sys, u0),
                         [acc.log2_op_norm()]))

    blocks = _blocks(sys, l)
    block_ws = [word_weight(sys, b) for b in blocks]

    for _ in range(n):
        new_frontier = []
        for word, acc, w, prefs in frontier:
            for b, bw in zip(blocks, block_ws):
                examined += 1
                if examined > cap:
                    raise CapExceededError(
                        f"doubling-word enumeration passed cap={cap}")
                nxt = acc
                for i in b:
                    nxt = nxt.times(sys.generators[i])
                nw = word + b
                lg = nxt.log2_op_norm()
                if all(lg > q + 0.5 for q in prefs):
                    out_words.append(nw)
                    out_weights.append(w * bw)
                    chi_full = 2.0 * lg
                    k_pass = max(0, math.ceil(2.0 * max(prefs)))
                    if not (chi_full > k_pass and k_pass <= n * m_bound):
                        raise RuntimeError(
                            "doubling word escaped the first-passage envelope")
                new_frontier.append((nw, nxt, w * bw, prefs + [lg]))
        frontier = new_frontier

    return WordSet(out_words, out_weights), m_bound
