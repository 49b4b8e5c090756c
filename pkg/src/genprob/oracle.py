"""Exact-rational Kolmogorov reference.

Everything here runs on :class:`fractions.Fraction` with plain lists and
never touches the floating-point code paths: Bayes posteriors come from
direct division of the joint, inverses from the adjugate.  Agreement with
the numerical library is therefore evidence rather than tautology.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import DimensionMismatch, Singular, ZeroMarginal

RationalMatrix = tuple[tuple[Fraction, ...], ...]

MAX_EXACT_DIM = 4


def rational(rows) -> RationalMatrix:
    """Exact copy of a nested sequence; floats are converted by their decimal repr."""
    def conv(x):
        return Fraction(repr(x)) if isinstance(x, float) else Fraction(x)

    out = tuple(tuple(conv(x) for x in row) for row in rows)
    if len({len(r) for r in out}) > 1:
        raise DimensionMismatch("ragged matrix")
    return out


def to_float(m: RationalMatrix) -> list[list[float]]:
    return [[float(x) for x in row] for row in m]


def shape(m: RationalMatrix) -> tuple[int, int]:
    return len(m), len(m[0]) if m else 0


def transpose(m: RationalMatrix) -> RationalMatrix:
    return tuple(zip(*m))


def matmul(a: RationalMatrix, b: RationalMatrix) -> RationalMatrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), Fraction(0)) for col in bt) for row in a)


def identity(n: int) -> RationalMatrix:
    return tuple(tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n))


def diag(v) -> RationalMatrix:
    n = len(v)
    return tuple(tuple(v[i] if i == j else Fraction(0) for j in range(n)) for i in range(n))


def row_sums(m: RationalMatrix) -> tuple[Fraction, ...]:
    return tuple(sum(row, Fraction(0)) for row in m)


def col_sums(m: RationalMatrix) -> tuple[Fraction, ...]:
    return row_sums(transpose(m))


def oracle_conditional(joint: RationalMatrix) -> RationalMatrix:
    """``P(A|B)`` by dividing every entry by its column mass."""
    pb = col_sums(joint)
    if any(x == 0 for x in pb):
        raise ZeroMarginal("zero column mass")
    return tuple(tuple(x / pb[j] for j, x in enumerate(row)) for row in joint)


def oracle_bayes(joint: RationalMatrix) -> RationalMatrix:
    """``P(B|A)`` with entry ``[j][i] = P(a_i, b_j) / P(a_i)``."""
    pa = row_sums(joint)
    if any(x == 0 for x in pa):
        raise ZeroMarginal("zero row mass")
    n_a, n_b = shape(joint)
    return tuple(tuple(joint[i][j] / pa[i] for i in range(n_a)) for j in range(n_b))


def determinant(m: RationalMatrix) -> Fraction:
    n = len(m)
    if n == 1:
        return m[0][0]
    total = Fraction(0)
    for j in range(n):
        if m[0][j]:
            total += (-1) ** j * m[0][j] * determinant(_minor(m, 0, j))
    return total


def _minor(m: RationalMatrix, i: int, j: int) -> RationalMatrix:
    return tuple(tuple(x for c, x in enumerate(row) if c != j) for r, row in enumerate(m) if r != i)


def oracle_inverse(m: RationalMatrix) -> RationalMatrix:
    """Exact inverse by cofactor expansion (adjugate over determinant)."""
    n, k = shape(m)
    if n != k:
        raise DimensionMismatch(f"cannot invert a {n}x{k} matrix")
    if n > MAX_EXACT_DIM:
        raise DimensionMismatch(f"exact inverse limited to dimension {MAX_EXACT_DIM}")
    det = determinant(m)
    if det == 0:
        raise Singular("determinant is exactly zero")
    if n == 1:
        return ((1 / det,),)
    return tuple(
        tuple((-1) ** (i + j) * determinant(_minor(m, j, i)) / det for j in range(n)) for i in range(n)
    )


def oracle_reverse_joint(joint: RationalMatrix) -> RationalMatrix:
    return matmul(matmul(diag(col_sums(joint)), oracle_inverse(joint)), diag(row_sums(joint)))


def oracle_posterior(joint: RationalMatrix, r: RationalMatrix, prior_a=None) -> RationalMatrix:
    """``diag(P(B)) inv(R) inv(diag(P(A)))``; ``prior_a`` overrides the true ``P(A)``."""
    pa = row_sums(joint) if prior_a is None else tuple(map(Fraction, prior_a))
    pb = col_sums(joint)
    return matmul(matmul(diag(pb), oracle_inverse(r)), diag([1 / x for x in pa]))


def oracle_r_bayes(joint: RationalMatrix) -> RationalMatrix:
    return oracle_inverse(transpose(oracle_conditional(joint)))


def oracle_r_inversion(joint: RationalMatrix) -> RationalMatrix:
    pa = row_sums(joint)
    pb = col_sums(joint)
    return matmul(matmul(diag([1 / x for x in pa]), oracle_conditional(joint)), diag(pb))


def oracle_third_order(joint: RationalMatrix, prior_a=None) -> RationalMatrix:
    """Bayes-Inversion-Bayes posterior written out as a product of forward matrices."""
    pa = row_sums(joint) if prior_a is None else tuple(map(Fraction, prior_a))
    pb = col_sums(joint)
    model = oracle_conditional(joint)
    bayes_like = matmul(matmul(diag(pb), transpose(model)), diag([1 / x for x in pa]))
    return matmul(matmul(bayes_like, model), bayes_like)


@dataclass(frozen=True)
class CanonicalFixture:
    joint: RationalMatrix
    prior_a: tuple[Fraction, ...]
    prior_b: tuple[Fraction, ...]
    model: RationalMatrix
    bayes: RationalMatrix
    inversion: RationalMatrix
    r_bayes: RationalMatrix
    r_inversion: RationalMatrix
    mix_half: RationalMatrix
    third_order: RationalMatrix
    reverse_joint: RationalMatrix


J0 = rational([["3/10", "2/10"], ["1/10", "4/10"]])


def canonical_fixture() -> CanonicalFixture:
    """All exact quantities derived from ``J0 = [[3/10, 2/10], [1/10, 4/10]]``."""
    j = J0
    rk = oracle_r_bayes(j)
    ri = oracle_r_inversion(j)
    half = Fraction(1, 2)
    r_half = tuple(tuple(half * a + half * b for a, b in zip(ra, rb)) for ra, rb in zip(ri, rk))
    return CanonicalFixture(
        joint=j,
        prior_a=row_sums(j),
        prior_b=col_sums(j),
        model=oracle_conditional(j),
        bayes=oracle_bayes(j),
        inversion=oracle_inverse(oracle_conditional(j)),
        r_bayes=rk,
        r_inversion=ri,
        mix_half=oracle_posterior(j, r_half),
        third_order=oracle_third_order(j),
        reverse_joint=oracle_reverse_joint(j),
    )


def random_rational_joint(n_a: int, n_b: int | None = None, rng: random.Random | None = None, denominator: int = 1000):
    """Strictly positive joint whose entries are multiples of ``1/denominator``."""
    n_b = n_a if n_b is None else n_b
    rng = rng or random.Random()
    cells = n_a * n_b
    if cells > denominator:
        raise DimensionMismatch("denominator too small for a strictly positive joint")
    cuts = sorted(rng.sample(range(1, denominator), cells - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [denominator])]
    return tuple(
        tuple(Fraction(parts[i * n_b + j], denominator) for j in range(n_b)) for i in range(n_a)
    )


@dataclass(frozen=True)
class NegativeWitness:
    joint: RationalMatrix
    posterior: RationalMatrix
    offending: tuple[tuple[int, int, Fraction], ...]
    fixture: bool = False


def _witness(joint: RationalMatrix, fixture: bool = False) -> NegativeWitness | None:
    try:
        post = oracle_inverse(oracle_conditional(joint))
    except Singular:
        return None
    bad = tuple(
        (i, j, x) for i, row in enumerate(post) for j, x in enumerate(row) if x < 0 or x > 1
    )
    return NegativeWitness(joint, post, bad, fixture) if bad else None


def search_negative_posterior(dim: int, trials: int, seed: int = 0, include_fixture: bool = True) -> list[NegativeWitness]:
    """Strictly positive joints whose inversion-rule posterior leaves ``[0, 1]``."""
    if dim not in (2, 3, 4):
        raise DimensionMismatch(f"dim must be 2, 3 or 4, got {dim}")
    found = []
    if include_fixture:
        found.append(_witness(J0, fixture=True))
    rng = random.Random(seed)
    for _ in range(trials):
        w = _witness(random_rational_joint(dim, rng=rng))
        if w is not None:
            found.append(w)
    return found
