"""Exact set-level statistics: sumsets, correlation, spectra, symmetry sets,
additive energy and normalized solution counts for single linear equations.

Counting statistics are exact: pair enumerations run through int64 bincounts
and every threshold against a rational bound is decided by integer ceiling
comparison, so set membership never depends on float rounding.  The only
floating-point quantity here is the transform-based solution count, which is
always checkable against the exact path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceeded
from .groups import GroupDescriptor, GroupElement
from .harmonic import GroupFunction, Measure, Side, fourier_forward

_PAIR_CHUNK = 1 << 19


@dataclass(frozen=True)
class PointSet:
    """A subset of a group, bit-packed over canonical indices."""

    group: GroupDescriptor
    bits: int

    def __post_init__(self):
        if self.bits < 0 or self.bits >> self.group.order:
            raise ValueError("membership bits out of range for the group order")

    @cached_property
    def size(self) -> int:
        return self.bits.bit_count()

    @cached_property
    def mask(self) -> np.ndarray:
        nbytes = (self.group.order + 7) // 8
        raw = np.frombuffer(self.bits.to_bytes(nbytes, "little"), dtype=np.uint8)
        m = np.unpackbits(raw, bitorder="little")[: self.group.order].astype(bool)
        m.setflags(write=False)
        return m

    @cached_property
    def indices(self) -> np.ndarray:
        idx = np.flatnonzero(self.mask)
        idx.setflags(write=False)
        return idx

    # -- constructors ----------------------------------------------------------

    @classmethod
    def empty(cls, group: GroupDescriptor) -> "PointSet":
        return cls(group, 0)

    @classmethod
    def full(cls, group: GroupDescriptor) -> "PointSet":
        return cls(group, (1 << group.order) - 1)

    @classmethod
    def from_indices(cls, group: GroupDescriptor, indices: Iterable[int]) -> "PointSet":
        bits = 0
        for i in indices:
            i = int(i)
            if not 0 <= i < group.order:
                raise ValueError(f"index {i} out of range")
            bits |= 1 << i
        return cls(group, bits)

    @classmethod
    def from_mask(cls, group: GroupDescriptor, mask: np.ndarray) -> "PointSet":
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (group.order,):
            raise ValueError("mask length does not match the group order")
        packed = np.packbits(mask, bitorder="little").tobytes()
        return cls(group, int.from_bytes(packed, "little"))

    @classmethod
    def from_coords(cls, group: GroupDescriptor, coords: Iterable) -> "PointSet":
        return cls.from_indices(group, (group.index_of(c) for c in coords))

    # -- basic queries ----------------------------------------------------------

    def contains_index(self, index: int) -> bool:
        return bool((self.bits >> index) & 1)

    def contains(self, x) -> bool:
        return self.contains_index(self.group.index_of(x))

    def elements(self) -> list[GroupElement]:
        return [self.group.element_at(int(i)) for i in self.indices]

    def is_subset(self, other: "PointSet") -> bool:
        _same_group(self, other)
        return self.bits & ~other.bits == 0

    def union(self, other: "PointSet") -> "PointSet":
        _same_group(self, other)
        return PointSet(self.group, self.bits | other.bits)

    def intersect(self, other: "PointSet") -> "PointSet":
        _same_group(self, other)
        return PointSet(self.group, self.bits & other.bits)

    def difference(self, other: "PointSet") -> "PointSet":
        _same_group(self, other)
        return PointSet(self.group, self.bits & ~other.bits)

    def without_zero(self) -> "PointSet":
        return PointSet(self.group, self.bits & ~1)

    def negate(self) -> "PointSet":
        mask = np.zeros(self.group.order, dtype=bool)
        mask[self.group.neg_perm[self.indices]] = True
        return PointSet.from_mask(self.group, mask)

    def translate(self, x) -> "PointSet":
        w = self.group.index_of(x) if not isinstance(x, (int, np.integer)) else int(x)
        mask = np.zeros(self.group.order, dtype=bool)
        shifted = self.group.ravel_coords(
            (self.group.coords_table[self.indices] + self.group.coords_table[w])
            % self.group._factors_arr
        )
        mask[shifted] = True
        return PointSet.from_mask(self.group, mask)


def _same_group(a: PointSet, b: PointSet):
    if a.group != b.group:
        raise ValueError("operands live on different groups")


def indicator(points: PointSet, measure: Measure = Measure.PROBABILITY,
              side: Side = Side.PRIMAL) -> GroupFunction:
    """Lift a point set to its 0/1 indicator function."""
    vals = np.zeros(points.group.order, dtype=np.complex128)
    vals[points.indices] = 1.0
    return GroupFunction(points.group, side, vals, measure)


def _pair_fold(group: GroupDescriptor, ia: np.ndarray, ib: np.ndarray, sign: int, fold):
    """Feed the canonical indices of a +/- b over all pairs to fold, chunked."""
    if len(ia) == 0 or len(ib) == 0:
        return
    ca = group.coords_table[ia]
    cb = group.coords_table[ib]
    facs = group._factors_arr
    rows = max(1, _PAIR_CHUNK // max(1, len(ib)))
    for lo in range(0, len(ia), rows):
        mix = (ca[lo:lo + rows][:, None, :] + sign * cb[None, :, :]) % facs
        fold(group.ravel_coords(mix.reshape(-1, group.rank)))


def sumset(a: PointSet, b: PointSet) -> PointSet:
    """{x + y : x in a, y in b}."""
    _same_group(a, b)
    mask = np.zeros(a.group.order, dtype=bool)

    def fold(idx):
        mask[idx] = True

    _pair_fold(a.group, a.indices, b.indices, +1, fold)
    return PointSet.from_mask(a.group, mask)


def doubling_constant(a: PointSet) -> Fraction:
    """|A+A| / |A| as an exact rational."""
    if a.size == 0:
        raise ValueError("doubling constant of the empty set is undefined")
    return Fraction(sumset(a, a).size, a.size)


def correlation_counts(a: PointSet, b: PointSet) -> np.ndarray:
    """count[x] = #{(p, q) in a x b : p - q = x}, exact int64."""
    _same_group(a, b)
    out = np.zeros(a.group.order, dtype=np.int64)

    def fold(idx):
        np.add(out, np.bincount(idx, minlength=a.group.order), out=out)

    _pair_fold(a.group, a.indices, b.indices, -1, fold)
    return out


def correlation(a: PointSet, b: PointSet) -> GroupFunction:
    """The difference-representation counts as an integer-valued function."""
    counts = correlation_counts(a, b)
    return GroupFunction(a.group, Side.PRIMAL, counts.astype(np.complex128),
                         Measure.COUNTING)


def _ceil_threshold(bound: Fraction) -> int:
    """Smallest integer n with n >= bound; comparing integer counts against
    it decides count >= bound exactly for any rational bound."""
    return math.ceil(bound)


def spectrum(f: GroupFunction, delta) -> PointSet:
    """Indices of the characters where |F| >= delta * l1_norm(f).

    Comparison gets a one-sided 1e-9 slack toward inclusion so containment
    facts never fail on float dust.  The result indexes the opposite side
    of f under the shared self-dual coordinates.
    """
    d = float(delta)
    if not 0.0 < d <= 1.0:
        raise ValueError(f"delta must lie in (0, 1], got {delta}")
    if f.measure is not Measure.PROBABILITY:
        raise ValueError("spectrum expects a probability-convention function")
    transformed = fourier_forward(f)
    level = d * float(np.sum(np.abs(f.values)) * f.mass)
    keep = np.abs(transformed.values) >= level - 1e-9
    return PointSet.from_mask(f.group, keep)


def symmetry_set(a: PointSet, eta) -> PointSet:
    """{x : #representations of x as a difference of a >= eta * |a|}.

    eta may be a Fraction or a float; either way the threshold comparison is
    exact because the counts are integers.
    """
    eta_q = Fraction(eta)
    if not 0 < eta_q <= 1:
        raise ValueError(f"eta must lie in (0, 1], got {eta}")
    if a.size == 0:
        raise ValueError("symmetry set of the empty set is undefined")
    counts = correlation_counts(a, a)
    need = _ceil_threshold(eta_q * a.size)
    return PointSet.from_mask(a.group, counts >= need)


def additive_energy(s: PointSet) -> int:
    """#{(a, b, c, d) in s^4 : a - b = c - d}, exactly."""
    counts = correlation_counts(s, s)
    return int(np.sum(counts * counts))


@dataclass(frozen=True)
class EquationSpec:
    """Coefficients of c_1.x_1 + ... + c_r.x_r = 0 over a prime field."""

    modulus: int
    coefficients: tuple[int, ...]

    def __post_init__(self):
        p = self.modulus
        coeffs = tuple(int(c) % p for c in self.coefficients)
        if len(coeffs) < 3:
            raise ValueError("need at least 3 coefficients")
        if any(c == 0 for c in coeffs):
            raise ValueError("all coefficients must be units mod the modulus")
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def r(self) -> int:
        return len(self.coefficients)

    @property
    def balanced(self) -> bool:
        return sum(self.coefficients) % self.modulus == 0


def _require_prime_field(a: PointSet, eq: EquationSpec) -> int:
    p = a.group.prime_field
    if p is None:
        raise ValueError("equation counting requires a prime-field group")
    if eq.modulus != p:
        raise ValueError(f"equation modulus {eq.modulus} does not match the field {p}")
    return p


def _scaled_indices(a: PointSet, c: int) -> np.ndarray:
    return a.group.scalar_perm(c)[a.indices]


def solution_count(a: PointSet, eq: EquationSpec, budget: int = 10**8) -> int:
    """Exact number of ordered tuples in a^r solving the equation.

    Computed by folding exact integer difference-free convolutions of the
    dilated indicators; cost O(r * |G| * |a|) instead of |a|**(r-1).
    """
    p = _require_prime_field(a, eq)
    group = a.group
    n = group.order
    if n ** (eq.r - 1) > budget:
        raise BudgetExceeded(
            f"|G|**(r-1) = {n ** (eq.r - 1)} exceeds the budget {budget}"
        )
    if a.size == 0:
        return 0
    if a.size ** (eq.r - 1) >= 2**62:
        raise BudgetExceeded("partial counts would overflow int64")
    partial = np.bincount(_scaled_indices(a, eq.coefficients[1]), minlength=n)
    for c in eq.coefficients[2:]:
        shifted = np.zeros(n, dtype=np.int64)
        for y in _scaled_indices(a, c):
            shifted[group.shift_perm(int(y))] += partial
        partial = shifted
    targets = _scaled_indices(a, (-eq.coefficients[0]) % p)
    return int(partial[targets].sum())


def lambda_bruteforce(a: PointSet, eq: EquationSpec, budget: int = 10**8) -> Fraction:
    """Normalized solution count as an exact rational."""
    count = solution_count(a, eq, budget=budget)
    return Fraction(count, a.group.order ** (eq.r - 1))


def lambda_fourier(a: PointSet, eq: EquationSpec) -> float:
    """The transform-side expression sum_t prod_i F(c_i.t) with the
    probability-convention transform of the indicator.

    With characters dilated coordinatewise the orthogonality relations force
    the factor at c_i to be evaluated at c_i.t (the inverse only appears
    under the contravariant action convention); this is the form that agrees
    with the exact ordered solution count.
    """
    _require_prime_field(a, eq)
    fhat = fourier_forward(indicator(a, Measure.PROBABILITY)).values
    total = np.ones(a.group.order, dtype=np.complex128)
    for c in eq.coefficients:
        total *= fhat[a.group.scalar_perm(c)]
    value = complex(np.sum(total))
    return float(value.real)


def has_nondegenerate_solution(a: PointSet, eq: EquationSpec,
                               budget: int = 10**8) -> tuple[bool, tuple[GroupElement, ...] | None]:
    """Search for an ordered solution with pairwise-distinct coordinates.

    Returns the first witness in lexicographic order of canonical indices,
    or (False, None).  Early-exits on the first hit.
    """
    p = _require_prime_field(a, eq)
    if a.size ** eq.r > budget:
        raise BudgetExceeded(f"|A|**r = {a.size ** eq.r} exceeds the budget {budget}")
    if a.size < eq.r:
        return False, None
    group = a.group
    members = [int(i) for i in a.indices]
    coords = group.coords_table
    facs = group._factors_arr
    cs = eq.coefficients
    r = eq.r
    last_inv = pow(cs[-1], -1, p)
    member_mask = a.mask

    chosen: list[int] = []

    def search(pos: int, acc: np.ndarray):
        if pos == r - 1:
            need = group.ravel_coords(((-last_inv * acc) % p).reshape(1, -1))[0]
            if member_mask[need] and need not in chosen:
                return chosen + [int(need)]
            return None
        for idx in members:
            if idx in chosen:
                continue
            chosen.append(idx)
            hit = search(pos + 1, (acc + cs[pos] * coords[idx]) % facs)
            if hit is not None:
                return hit
            chosen.pop()
        return None

    witness = search(0, np.zeros(group.rank, dtype=np.int64))
    if witness is None:
        return False, None
    return True, tuple(group.element_at(i) for i in witness)
