"""Certification of the standing assumptions (strong irreducibility,
norm-unboundedness, absence of a fixed generalized circle), a finite-depth
probe of the Diophantine separation property, and exact computation of the
random walk entropy by grouping equal products.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import CapExceededError, LogBranchError
from .sl2 import (GaussianRational, GroupElement, ProjPoint, E1, E2,
                  _principal_log_sl2, dist_cp1, proj_act)
from .words import System

TAU_EIG = 1e-9
NORM_THRESHOLD_BITS = 32.0   # unboundedness passes at ||g||_op > 2^32
TRACE_SLACK = 1e-9

# distance value recorded for pairs whose ratio sits on the log branch cut;
# such pairs are order-one separated, never competitive for the minimum
BRANCH_CUT_SEPARATION = math.pi * math.sqrt(2.0)


# ---------------------------------------------------------------------------
# eigendirections
# ---------------------------------------------------------------------------

def _is_scalar(g: GroupElement, tol: float = 1e-12) -> bool:
    return (abs(g.b) <= tol and abs(g.c) <= tol
            and abs(g.a - g.d) <= tol)


def eig_directions(g: GroupElement) -> List[ProjPoint]:
    """Fixed directions of a non-scalar g: one for parabolic, two otherwise."""
    if _is_scalar(g):
        raise ValueError("scalar matrix fixes every direction")
    t = g.trace()
    disc = t * t * 0.25 - 1.0
    delta = disc ** 0.5
    out = []
    for lam in ({t * 0.5 + delta, t * 0.5 - delta} if abs(delta) > 1e-12
                else {t * 0.5}):
        v1 = (g.b, lam - g.a)
        v2 = (lam - g.d, g.c)
        v = v1 if abs(v1[0]) ** 2 + abs(v1[1]) ** 2 >= abs(v2[0]) ** 2 + abs(v2[1]) ** 2 else v2
        out.append(ProjPoint.from_vector(*v))
    # a near-parabolic pair can collapse to one direction after canonicalizing
    if len(out) == 2 and dist_cp1(out[0], out[1]) <= 1e-12:
        out = out[:1]
    return out


# ---------------------------------------------------------------------------
# exact invariance of a candidate direction (quadratic extension over Q(i))
# ---------------------------------------------------------------------------

def _sqrt_fraction(f: Fraction) -> Optional[Fraction]:
    if f < 0:
        return None
    pn, pd = f.numerator, f.denominator
    rn, rd = math.isqrt(pn), math.isqrt(pd)
    if rn * rn == pn and rd * rd == pd:
        return Fraction(rn, rd)
    return None


def _sqrt_gaussian(d: GaussianRational) -> Optional[GaussianRational]:
    """Square root in Q(i) when it exists, else None."""
    if d.is_zero():
        return GaussianRational.of(0)
    if d.im == 0:
        r = _sqrt_fraction(d.re)
        if r is not None:
            return GaussianRational(r, Fraction(0))
        r = _sqrt_fraction(-d.re)
        if r is not None:
            return GaussianRational(Fraction(0), r)
        return None
    n2 = _sqrt_fraction(d.re * d.re + d.im * d.im)
    if n2 is None:
        return None
    x2 = (d.re + n2) / 2
    x = _sqrt_fraction(x2)
    if x is None or x == 0:
        return None
    y = d.im / (2 * x)
    cand = GaussianRational(x, y)
    return cand if cand * cand == d else None


# elements of Q(i)[X]/(X^2 - D) as pairs (p, q) meaning p + q*sqrt(D)
_Ext = Tuple[GaussianRational, GaussianRational]


def _ext_mul(u: _Ext, v: _Ext, d: GaussianRational) -> _Ext:
    return (u[0] * v[0] + u[1] * v[1] * d, u[0] * v[1] + u[1] * v[0])


def _ext_addsub(u: _Ext, v: _Ext, sign: int) -> _Ext:
    if sign > 0:
        return (u[0] + v[0], u[1] + v[1])
    return (u[0] - v[0], u[1] - v[1])


def _exact_invariant_direction(sys: System, which_root: int) -> Optional[bool]:
    """Exact check that an eigendirection of generator 0 is fixed by every
    generator. Returns True/False, or None when generator 0 is scalar."""
    g0 = sys.generators[0].exact_key()
    a, b, c, d = g0
    if b.is_zero() and c.is_zero() and a == d:
        return None
    two = GaussianRational.of(2)
    four = GaussianRational.of(4)
    t = a + d
    disc = t * t - four                      # (2*delta)^2
    root = _sqrt_gaussian(disc)

    zero = GaussianRational.of(0)
    if root is not None:
        # eigenvalue rational in Q(i): verify with plain Q(i) arithmetic
        lam = (t + (root if which_root == 0 else -root)) / two
        if not c.is_zero():
            v1, v2 = lam - d, c
        elif not b.is_zero():
            v1, v2 = b, lam - a
        else:  # diagonal: eigendirections are the coordinate axes
            v1, v2 = (GaussianRational.of(1), zero) if which_root == 0 \
                else (zero, GaussianRational.of(1))
        for g in sys.generators:
            xa, xb, xc, xd = g.exact_key()
            w1 = xa * v1 + xb * v2
            w2 = xc * v1 + xd * v2
            if not (w1 * v2 - w2 * v1).is_zero():
                return False
        return True

    # irrational eigenvalue: work in the field Q(i)[X]/(X^2 - disc), where
    # lambda = (t + X)/2 up to the root choice
    dd = disc
    sgn = GaussianRational.of(1 if which_root == 0 else -1)
    lam: _Ext = (t / two, sgn / two)
    if not c.is_zero():
        v1: _Ext = _ext_addsub(lam, (d, zero), -1)
        v2: _Ext = (c, zero)
    else:
        v1 = (b, zero)
        v2 = _ext_addsub(lam, (a, zero), -1)
    for g in sys.generators:
        xa, xb, xc, xd = g.exact_key()
        w1 = _ext_addsub(_ext_mul((xa, zero), v1, dd), _ext_mul((xb, zero), v2, dd), 1)
        w2 = _ext_addsub(_ext_mul((xc, zero), v1, dd), _ext_mul((xd, zero), v2, dd), 1)
        cross = _ext_addsub(_ext_mul(w1, v2, dd), _ext_mul(w2, v1, dd), -1)
        if not (cross[0].is_zero() and cross[1].is_zero()):
            return False
    return True


# ---------------------------------------------------------------------------
# reducibility and strong irreducibility
# ---------------------------------------------------------------------------

def find_common_fixed_points(sys: System) -> List[ProjPoint]:
    """Directions fixed by every generator; candidates are the
    eigendirections of the first non-scalar generator."""
    base = next((g for g in sys.generators if not _is_scalar(g)), None)
    if base is None:
        # scalar action fixes everything; report the coordinate axes
        return [E1, E2]

    candidates = eig_directions(base)
    out = []
    for p in candidates:
        if all(dist_cp1(proj_act(g, p), p) <= TAU_EIG for g in sys.generators):
            out.append(p)

    if sys.exact and not _is_scalar(sys.generators[0]):
        # exact decision overrides borderline float verdicts; the float
        # candidates still supply the witness directions
        exact_hit = any(_exact_invariant_direction(sys, w) for w in (0, 1))
        if exact_hit and not out:
            out = [p for p in candidates
                   if all(dist_cp1(proj_act(g, p), p) <= 1e-6
                          for g in sys.generators)]
        elif not exact_hit and out and base is sys.generators[0]:
            out = []
    return out


@dataclass
class IrreducibilityReport:
    passes: bool
    witness: Optional[List[ProjPoint]] = None
    all_elliptic: bool = False
    candidates_checked: int = 0


def check_strong_irreducibility(sys: System) -> IrreducibilityReport:
    """Search for an invariant set of size at most two.

    Candidates: common fixed points, and eigendirection pairs of every
    generator and pairwise product. Systems whose generators are all
    elliptic are flagged for manual review.
    """
    all_elliptic = all(
        abs(g.trace().imag) <= 1e-9 and abs(g.trace().real) <= 2.0 + 1e-9
        for g in sys.generators)

    fixed = find_common_fixed_points(sys)
    if fixed:
        return IrreducibilityReport(False, [fixed[0]], all_elliptic, 1)

    sources: List[GroupElement] = list(sys.generators)
    for i, gi in enumerate(sys.generators):
        for j, gj in enumerate(sys.generators):
            if i != j:
                sources.append(gi @ gj)

    checked = 0
    for src in sources:
        if _is_scalar(src):
            continue
        dirs = eig_directions(src)
        if len(dirs) != 2:
            continue
        p, q = dirs
        checked += 1
        invariant = True
        for g in sys.generators:
            gp, gq = proj_act(g, p), proj_act(g, q)
            keep = dist_cp1(gp, p) <= TAU_EIG and dist_cp1(gq, q) <= TAU_EIG
            swap = dist_cp1(gp, q) <= TAU_EIG and dist_cp1(gq, p) <= TAU_EIG
            if not (keep or swap):
                invariant = False
                break
        if invariant:
            return IrreducibilityReport(False, [p, q], all_elliptic, checked)

    return IrreducibilityReport(True, None, all_elliptic, checked)


# ---------------------------------------------------------------------------
# proximality (norm unboundedness) and strict proximality
# ---------------------------------------------------------------------------

@dataclass
class ProximalityReport:
    status: str                      # "pass" | "fail" | "inconclusive"
    max_log2_norm: float
    steps: int
    strict: bool
    strict_witness: Optional[Tuple[int, ...]] = None
    strict_trace: Optional[complex] = None


def check_proximality(sys: System, depth: int = 64, trials: int = 256,
                      rng=None) -> ProximalityReport:
    """Greedy/random norm growth up to `depth` compositions, plus a search
    for a product with |trace| > 2 (a strictly contracting witness)."""
    if rng is None:
        rng = np.random.default_rng(0)

    # (a) unboundedness by greedy composition (squaring included)
    best = max(sys.generators, key=lambda g: g.frobenius2())
    best_log2 = math.log2(best.op_norm()) if best.op_norm() > 1 else 0.0
    steps = 0
    cur = best
    cur_log2 = best_log2
    while steps < depth and cur_log2 <= NORM_THRESHOLD_BITS:
        steps += 1
        cands = [cur @ cur] + [cur @ g for g in sys.generators] \
            + [g @ cur for g in sys.generators]
        nxt = max(cands, key=lambda g: g.frobenius2())
        nxt_log2 = math.log2(nxt.op_norm())
        if nxt_log2 <= cur_log2 + 1e-12:
            break
        # renormalize magnitude drift away (entries stay well inside float range)
        cur, cur_log2 = nxt, nxt_log2
        if cur_log2 > NORM_THRESHOLD_BITS:
            break

    if cur_log2 <= NORM_THRESHOLD_BITS:
        # greedy stalled; try random words with renormalized products
        from .words import ScaledMatrix
        for _ in range(trials):
            acc = ScaledMatrix.identity()
            for _step in range(depth):
                i = int(rng.integers(sys.size))
                acc = acc.times(sys.generators[i])
                steps += 1
                if acc.log2_op_norm() > cur_log2:
                    cur_log2 = acc.log2_op_norm()
                if cur_log2 > NORM_THRESHOLD_BITS:
                    break
            if cur_log2 > NORM_THRESHOLD_BITS:
                break

    if cur_log2 > NORM_THRESHOLD_BITS:
        status = "pass"
    elif cur_log2 <= 1e-6:
        status = "fail"          # norms pinned at one (compact closure)
    else:
        status = "inconclusive"

    # (b) strict proximality: |trace| > 2 + slack among short products
    strict = False
    witness: Optional[Tuple[int, ...]] = None
    wtrace: Optional[complex] = None

    def consider(word: Tuple[int, ...], g: GroupElement):
        nonlocal strict, witness, wtrace
        t = g.trace()
        if abs(t) > 2.0 + TRACE_SLACK and (wtrace is None or abs(t) > abs(wtrace)):
            strict, witness, wtrace = True, word, t

    frontier: List[Tuple[Tuple[int, ...], GroupElement]] = \
        [((i,), g) for i, g in enumerate(sys.generators)]
    for word, g in frontier:
        consider(word, g)
    exhaustive_len = 1
    while len(frontier) * sys.size <= 4096 and exhaustive_len < min(depth, 12):
        nxt = []
        for word, g in frontier:
            for i, gi in enumerate(sys.generators):
                ng = g @ gi
                nw = word + (i,)
                consider(nw, ng)
                nxt.append((nw, ng))
        frontier = nxt
        exhaustive_len += 1
    for _ in range(trials):
        length = int(rng.integers(2, max(3, depth // 2)))
        word = tuple(int(i) for i in
                     rng.choice(sys.size, size=length, p=sys.probs_array()))
        g = GroupElement.identity()
        for i in word:
            g = g @ sys.generators[i]
            if g.frobenius2() > 1e100:
                break
        consider(word, g)

    return ProximalityReport(status, cur_log2, steps, strict, witness, wtrace)


# ---------------------------------------------------------------------------
# fixed generalized circles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HermitianClass:
    """Projective class of a Hermitian form [[h11, h12], [conj h12, h22]],
    normalized to max entry magnitude one. Negative determinant means the
    zero locus is a genuine circle (or line) on the sphere."""

    h11: float
    h22: float
    h12: complex
    det_sign: str                 # "negative" | "zero" | "positive"

    def vec4(self) -> np.ndarray:
        return np.array([self.h11, self.h22, self.h12.real, self.h12.imag])

    def det(self) -> float:
        return self.h11 * self.h22 - abs(self.h12) ** 2


@dataclass
class CircleFamily:
    classes: List[HermitianClass]
    degenerate: bool = False      # a whole family of forms is fixed


def _vec4_to_class(v: np.ndarray, tol: float = 1e-12) -> HermitianClass:
    v = np.asarray(v, dtype=float)
    k = int(np.argmax(np.abs(v)))
    v = v / v[k]                  # largest entry becomes +1
    v = v / np.max(np.abs(v))
    det = v[0] * v[1] - v[2] ** 2 - v[3] ** 2
    sign = "zero" if abs(det) <= tol else ("negative" if det < 0 else "positive")
    return HermitianClass(float(v[0]), float(v[1]),
                          complex(v[2], v[3]), sign)


def _pullback_matrix(g: GroupElement) -> np.ndarray:
    """Real 4x4 matrix of H -> g* H g on the basis
    {E11, E22, E12+E21, i(E12-E21)} (coordinates h11, h22, Re h12, Im h12)."""
    basis = [
        ((1 + 0j, 0j), (0j, 0j)),
        ((0j, 0j), (0j, 1 + 0j)),
        ((0j, 1 + 0j), (1 + 0j, 0j)),
        ((0j, 1j), (-1j, 0j)),
    ]
    ga = g.adjoint()
    cols = []
    for (b11, b12), (b21, b22) in basis:
        # C = g* B g
        m11 = ga.a * b11 + ga.b * b21
        m12 = ga.a * b12 + ga.b * b22
        m21 = ga.c * b11 + ga.d * b21
        m22 = ga.c * b12 + ga.d * b22
        c11 = m11 * g.a + m12 * g.c
        c12 = m11 * g.b + m12 * g.d
        c22 = m21 * g.b + m22 * g.d
        cols.append([c11.real, c22.real, c12.real, c12.imag])
    return np.array(cols, dtype=float).T


def find_fixed_circles(sys: System, tol: float = TAU_EIG) -> CircleFamily:
    """Hermitian classes fixed (projectively) by every generator's pullback.

    Candidates come from the real eigenvectors of a fixed random combination
    of the pullback matrices; each candidate is then verified against every
    generator. A joint eigenspace of dimension two or more is reported as a
    degenerate family.
    """
    mats = [_pullback_matrix(g) for g in sys.generators]

    if all(np.max(np.abs(m - np.eye(4))) <= tol for m in mats):
        return CircleFamily([], degenerate=True)

    rng = np.random.default_rng(1234567)   # fixed: deterministic candidates
    combo = sum(c * m for c, m in zip(rng.standard_normal(len(mats)), mats))

    def passes(v: np.ndarray) -> bool:
        for m in mats:
            w = m @ v
            lam = float(v @ w) / float(v @ v)
            if np.linalg.norm(w - lam * v) > tol * 100 * np.linalg.norm(m) * np.linalg.norm(v):
                return False
        return True

    vals, vecs = np.linalg.eig(combo)
    found: List[np.ndarray] = []
    for k in range(4):
        if abs(vals[k].imag) > 1e-8 * (1.0 + abs(vals[k])):
            continue
        v = vecs[:, k]
        v = v.real if np.linalg.norm(v.real) >= np.linalg.norm(v.imag) else v.imag
        n = np.linalg.norm(v)
        if n == 0:
            continue
        v = v / n
        if passes(v):
            if not any(min(np.linalg.norm(v - u), np.linalg.norm(v + u)) < 1e-6
                       for u in found):
                found.append(v)

    # degenerate family: two candidates share eigenvalues and mix freely
    degenerate = False
    for i in range(len(found)):
        for j in range(i + 1, len(found)):
            mix = found[i] + found[j]
            mix = mix / np.linalg.norm(mix)
            if passes(mix):
                degenerate = True

    return CircleFamily([_vec4_to_class(v) for v in found], degenerate)


# ---------------------------------------------------------------------------
# product grouping (exact keys / tolerance clustering)
# ---------------------------------------------------------------------------

def _embed8(g: GroupElement) -> Tuple[float, ...]:
    return (g.a.real, g.a.imag, g.b.real, g.b.imag,
            g.c.real, g.c.imag, g.d.real, g.d.imag)


def _group_products(items: List[Tuple[GroupElement, float]], exact: bool,
                    tau_eq: float) -> Tuple[List[Tuple[GroupElement, float]], bool]:
    """Collapse (matrix, weight) pairs with equal matrices. Returns grouped
    representatives and an ambiguity flag (float mode only): some distinct
    representatives sit within [tau_eq, 10 tau_eq] of each other."""
    if exact:
        table: Dict[tuple, Tuple[GroupElement, float]] = {}
        for g, w in items:
            key = g.exact_key()
            if key in table:
                old_g, old_w = table[key]
                table[key] = (old_g, old_w + w)
            else:
                table[key] = (g, w)
        return list(table.values()), False

    # grid hash at resolution tau_eq, then merge straddling buckets
    from scipy.spatial import cKDTree

    reps: List[Tuple[GroupElement, float]] = []
    grid: Dict[tuple, int] = {}
    coords: List[Tuple[float, ...]] = []
    for g, w in items:
        e = _embed8(g)
        key = tuple(int(math.floor(x / tau_eq + 0.5)) for x in e)
        idx = grid.get(key)
        if idx is None:
            grid[key] = len(reps)
            reps.append((g, w))
            coords.append(e)
        else:
            rg, rw = reps[idx]
            reps[idx] = (rg, rw + w)

    if len(reps) > 1:
        pts = np.array(coords)
        tree = cKDTree(pts)
        pairs = tree.query_pairs(r=tau_eq, output_type="ndarray")
        if len(pairs):
            parent = list(range(len(reps)))

            def root(x):
                while parent[x] != x:
                    parent[x] = parent[parent[x]]
                    x = parent[x]
                return x

            for i, j in pairs:
                ri, rj = root(int(i)), root(int(j))
                if ri != rj:
                    parent[rj] = ri
            merged: Dict[int, Tuple[GroupElement, float]] = {}
            for k, (g, w) in enumerate(reps):
                r = root(k)
                if r in merged:
                    mg, mw = merged[r]
                    merged[r] = (mg, mw + w)
                else:
                    merged[r] = (g, w)
            reps = list(merged.values())
            pts = np.array([_embed8(g) for g, _ in reps])
            tree = cKDTree(pts)

        ambiguous = False
        if len(reps) > 1:
            d, _ = tree.query(pts, k=2)
            nearest = d[:, 1]
            ambiguous = bool(np.any((nearest >= tau_eq) & (nearest <= 10 * tau_eq)))
        return reps, ambiguous
    return reps, False


# ---------------------------------------------------------------------------
# Diophantine probe
# ---------------------------------------------------------------------------

@dataclass
class DiophantineReport:
    rows: List[dict]              # per n: separation, pair/collision counts
    fitted_c: Optional[float]
    collisions_total: int
    branch_pairs_total: int
    tau_eq: float

    def min_separation(self) -> Optional[float]:
        vals = [r["min_separation"] for r in self.rows
                if r["min_separation"] is not None]
        return min(vals) if vals else None


def diophantine_probe(sys: System, n_max: int, cap: int = 2_000_000,
                      tau_eq: float = 1e-8) -> DiophantineReport:
    """Minimum pairwise distance between distinct length-n products for each
    n <= n_max, with exact collisions counted separately, plus a log-linear
    fit of the separation decay rate."""
    if sys.size ** n_max > cap:
        raise CapExceededError(f"|alphabet|^{n_max} exceeds cap={cap}")

    rows: List[dict] = []
    collisions_total = 0
    branch_total = 0
    level: List[Tuple[GroupElement, float]] = \
        [(GroupElement.identity(exact=sys.exact), 1.0)]

    for n in range(1, n_max + 1):
        nxt: List[Tuple[GroupElement, float]] = []
        for g, w in level:
            for i, gi in enumerate(sys.generators):
                nxt.append((g @ gi, w * sys.probs[i]))
        level = nxt

        grouped, _amb = _group_products(level, sys.exact, tau_eq)
        n_words = sys.size ** n
        n_distinct = len(grouped)
        collisions = n_words - n_distinct
        collisions_total += collisions

        min_sep = None
        branch_pairs = 0
        pair_count = 0
        for i in range(n_distinct):
            gi = grouped[i][0]
            gi_inv = gi.inverse()
            for j in range(i + 1, n_distinct):
                pair_count += 1
                try:
                    m = gi_inv @ grouped[j][0]
                    la, lb, lc, ld = _principal_log_sl2(m)
                    sep = math.sqrt(abs(la) ** 2 + abs(lb) ** 2
                                    + abs(lc) ** 2 + abs(ld) ** 2)
                except LogBranchError:
                    # ratio on the log branch cut: such pairs are order-one
                    # separated (the cut sits at distance >= pi*sqrt(2) from
                    # the identity), so they never decide the minimum
                    branch_pairs += 1
                    continue
                if min_sep is None or sep < min_sep:
                    min_sep = sep
        branch_total += branch_pairs
        rows.append({"n": n, "words": n_words, "distinct": n_distinct,
                     "collisions": collisions, "pairs": pair_count,
                     "branch_pairs": branch_pairs, "min_separation": min_sep})

        # keep only distinct representatives for the next level
        level = grouped

    xs = [r["n"] for r in rows if r["min_separation"]]
    ys = [math.log(r["min_separation"]) for r in rows if r["min_separation"]]
    fitted_c = None
    if len(xs) >= 2:
        slope = np.polyfit(xs, ys, 1)[0]
        fitted_c = math.exp(slope)

    return DiophantineReport(rows, fitted_c, collisions_total, branch_total,
                             tau_eq)


# ---------------------------------------------------------------------------
# random walk entropy
# ---------------------------------------------------------------------------

@dataclass
class EntropyTable:
    rows: List[Tuple[int, float, float]]   # (n, H_n bits, H_n / n)
    h_rw_estimate: float
    free: bool
    letter_entropy: float                  # H(p)
    ambiguity_warning: bool = False
    tau_eq: float = 1e-8

    def h_at(self, n: int) -> float:
        for r in self.rows:
            if r[0] == n:
                return r[1]
        raise KeyError(n)


def shannon_entropy(weights: Sequence[float]) -> float:
    return max(0.0, -math.fsum(w * math.log2(w) for w in weights if w > 0))


def random_walk_entropy(sys: System, n_max: int, cap: int = 2_000_000,
                        tau_eq: float = 1e-8) -> EntropyTable:
    """H(X_1 ... X_n) for n <= n_max by exact grouping of equal products
    (tau_eq clustering in float mode). The estimate is the minimum of H_n/n
    over computed rows; when all products are distinct at n_max the walk is
    free at this depth and the estimate equals H(p)."""
    if sys.size ** n_max > cap:
        raise CapExceededError(f"|alphabet|^{n_max} exceeds cap={cap}")

    hp = shannon_entropy(sys.probs)
    rows: List[Tuple[int, float, float]] = []
    level: List[Tuple[GroupElement, float]] = \
        [(GroupElement.identity(exact=sys.exact), 1.0)]
    ambiguous = False
    free = True
    for n in range(1, n_max + 1):
        nxt: List[Tuple[GroupElement, float]] = []
        for g, w in level:
            for i, gi in enumerate(sys.generators):
                nxt.append((g @ gi, w * sys.probs[i]))
        grouped, amb = _group_products(nxt, sys.exact, tau_eq)
        ambiguous = ambiguous or amb
        h_n = shannon_entropy([w for _, w in grouped])
        rows.append((n, h_n, h_n / n))
        if n == n_max:
            free = len(grouped) == sys.size ** n_max
        level = grouped

    h_est = hp if free else min(r[2] for r in rows)
    return EntropyTable(rows, h_est, free, hp, ambiguous, tau_eq)


# ---------------------------------------------------------------------------
# assembled report
# ---------------------------------------------------------------------------

@dataclass
class AssumptionReport:
    reducible: bool
    fixed_points: List[ProjPoint]
    strongly_irreducible: bool
    irreducibility_witness: Optional[List[ProjPoint]]
    all_elliptic_flag: bool
    proximal_status: str
    proximality: ProximalityReport
    circles: CircleFamily
    zariski_dense: bool

    def to_dict(self) -> dict:
        def pp(p: ProjPoint):
            return [p.z1.real, p.z1.imag, p.z2.real, p.z2.imag]

        return {
            "reducible": self.reducible,
            "fixed_points": [pp(p) for p in self.fixed_points],
            "strongly_irreducible": self.strongly_irreducible,
            "irreducibility_witness":
                [pp(p) for p in self.irreducibility_witness]
                if self.irreducibility_witness else None,
            "all_elliptic_flag": self.all_elliptic_flag,
            "proximal": self.proximal_status,
            "strict_proximal": self.proximality.strict,
            "max_log2_norm": self.proximality.max_log2_norm,
            "fixed_circles": [
                {"h11": c.h11, "h22": c.h22,
                 "h12": [c.h12.real, c.h12.imag], "det_sign": c.det_sign}
                for c in self.circles.classes],
            "degenerate_circle_family": self.circles.degenerate,
            "zariski_dense": self.zariski_dense,
        }


def certify(sys: System, depth: int = 64, trials: int = 256,
            rng=None) -> AssumptionReport:
    """Run all assumption checks and combine them into one report."""
    fixed = find_common_fixed_points(sys)
    irr = check_strong_irreducibility(sys)
    prox = check_proximality(sys, depth=depth, trials=trials, rng=rng)
    circles = find_fixed_circles(sys)

    has_real_circle = circles.degenerate or any(
        c.det_sign == "negative" for c in circles.classes)
    zdense = (irr.passes and prox.status == "pass" and not has_real_circle)

    return AssumptionReport(
        reducible=bool(fixed),
        fixed_points=fixed,
        strongly_irreducible=irr.passes,
        irreducibility_witness=irr.witness,
        all_elliptic_flag=irr.all_elliptic,
        proximal_status=prox.status,
        proximality=prox,
        circles=circles,
        zariski_dense=zdense,
    )
