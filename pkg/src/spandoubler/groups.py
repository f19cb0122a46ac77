"""Finite abelian groups Z_m1 x ... x Z_mk with canonical mixed-radix indexing.

Elements are tuples of reduced residues.  The canonical enumeration order is
mixed-radix lexicographic (first coordinate most significant), so index 0 is
always the identity.  Characters reuse the same coordinate shape: the
character with coordinates t pairs with the element x through
exp(2*pi*i * sum_i t_i*x_i/m_i), which makes the dual group share the
descriptor.  Everything here is immutable and safe to share across threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

DEFAULT_MAX_ORDER = 1 << 20


def order_cap() -> int:
    """Group-order cap; the SPANDOUBLER_MAX_ORDER env var overrides it."""
    raw = os.environ.get("SPANDOUBLER_MAX_ORDER", "")
    return int(raw) if raw else DEFAULT_MAX_ORDER


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    for q in range(2, int(math.isqrt(n)) + 1):
        if n % q == 0:
            return False
    return True


@dataclass(frozen=True)
class GroupElement:
    """A group element (or a character) as a tuple of reduced residues."""

    coords: tuple[int, ...]

    def __iter__(self):
        return iter(self.coords)

    def __len__(self) -> int:
        return len(self.coords)


# Characters share the element representation; the role is decided by context.
Character = GroupElement


@dataclass(frozen=True)
class GroupDescriptor:
    """A product of cyclic groups, with cached index/coordinate tables."""

    factors: tuple[int, ...]

    @cached_property
    def order(self) -> int:
        return math.prod(self.factors)

    @cached_property
    def rank(self) -> int:
        return len(self.factors)

    @cached_property
    def prime_field(self) -> int | None:
        """The prime p when the group is Z_p^n, else None."""
        first = self.factors[0]
        if all(m == first for m in self.factors) and _is_prime(first):
            return first
        return None

    @cached_property
    def exponent_lcm(self) -> int:
        return math.lcm(*self.factors)

    @cached_property
    def _factors_arr(self) -> np.ndarray:
        return np.asarray(self.factors, dtype=np.int64)

    @cached_property
    def _radix(self) -> np.ndarray:
        # weight[i] = product of factors to the right of position i
        w = np.ones(self.rank, dtype=np.int64)
        for i in range(self.rank - 2, -1, -1):
            w[i] = w[i + 1] * self.factors[i + 1]
        return w

    @cached_property
    def coords_table(self) -> np.ndarray:
        """(order, rank) table; row j holds the coordinates of index j."""
        grids = np.unravel_index(np.arange(self.order), self.factors)
        table = np.stack(grids, axis=1).astype(np.int64)
        table.setflags(write=False)
        return table

    @cached_property
    def neg_perm(self) -> np.ndarray:
        """Permutation sending each index to the index of its inverse."""
        perm = self.ravel_coords((-self.coords_table) % self._factors_arr)
        perm.setflags(write=False)
        return perm

    # -- index <-> coordinates ------------------------------------------------

    def ravel_coords(self, coords: np.ndarray) -> np.ndarray:
        """Canonical indices for an (n, rank) array of reduced coordinates."""
        return coords @ self._radix

    def index_of(self, x: "GroupElement | Sequence[int]") -> int:
        coords = self.reduce(x).coords
        return int(sum(c * w for c, w in zip(coords, self._radix)))

    def element_at(self, index: int) -> GroupElement:
        if not 0 <= index < self.order:
            raise ValueError(f"index {index} out of range for order {self.order}")
        return GroupElement(tuple(int(c) for c in self.coords_table[index]))

    def reduce(self, x: "GroupElement | Sequence[int]") -> GroupElement:
        coords = tuple(x.coords) if isinstance(x, GroupElement) else tuple(x)
        if len(coords) != self.rank:
            raise ValueError(
                f"element has {len(coords)} coordinates, group has rank {self.rank}"
            )
        return GroupElement(tuple(int(c) % m for c, m in zip(coords, self.factors)))

    def elements(self) -> Iterable[GroupElement]:
        for i in range(self.order):
            yield self.element_at(i)

    # -- arithmetic ------------------------------------------------------------

    def add(self, x, y) -> GroupElement:
        a, b = self.reduce(x), self.reduce(y)
        return GroupElement(
            tuple((u + v) % m for u, v, m in zip(a.coords, b.coords, self.factors))
        )

    def negate(self, x) -> GroupElement:
        a = self.reduce(x)
        return GroupElement(tuple((-u) % m for u, m in zip(a.coords, self.factors)))

    def scalar_mul(self, c: int, x) -> GroupElement:
        p = self.prime_field
        if p is None:
            raise ValueError("scalar action requires a prime-field group")
        if c % p == 0:
            raise ValueError(f"scalar {c} is 0 mod {p}, not a unit")
        a = self.reduce(x)
        return GroupElement(tuple((c * u) % p for u in a.coords))

    def neg_index(self, index: int) -> int:
        return int(self.neg_perm[index])

    # -- vectorized permutations ------------------------------------------------

    def shift_perm(self, w_index: int) -> np.ndarray:
        """perm[z] = index of z + w; gathering an indicator through
        shift_perm(-w) yields the indicator of the translate by w."""
        shifted = (self.coords_table + self.coords_table[w_index]) % self._factors_arr
        return self.ravel_coords(shifted)

    def scalar_perm(self, c: int) -> np.ndarray:
        """perm[z] = index of c.z on a prime-field group."""
        p = self.prime_field
        if p is None:
            raise ValueError("scalar action requires a prime-field group")
        if c % p == 0:
            raise ValueError(f"scalar {c} is 0 mod {p}, not a unit")
        return self.ravel_coords((c * self.coords_table) % p)


def make_group(factors: Sequence[int], max_order: int | None = None) -> GroupDescriptor:
    """Validate the cyclic factors and build a descriptor.

    Raises ValueError when a factor is below 2 or the order exceeds the cap
    (the explicit max_order argument, else the environment-driven default).
    """
    cap = order_cap() if max_order is None else int(max_order)
    fs = tuple(int(m) for m in factors)
    if not fs:
        raise ValueError("need at least one cyclic factor")
    for m in fs:
        if m < 2:
            raise ValueError(f"cyclic factor must be at least 2, got {m}")
    order = 1
    for m in fs:
        order *= m
        if order > cap:
            raise ValueError(f"group order {math.prod(fs)} exceeds the cap {cap}")
    return GroupDescriptor(fs)


def arithmetic(group: GroupDescriptor, op: str, *args) -> GroupElement:
    """Dispatch add / negate / scalar_mul by name."""
    if op == "add":
        return group.add(*args)
    if op == "negate":
        return group.negate(*args)
    if op == "scalar_mul":
        return group.scalar_mul(*args)
    raise ValueError(f"unknown arithmetic op {op!r}")


def character_eval(group: GroupDescriptor, chi, x) -> complex:
    """Value of the character chi at x, a point on the unit circle.

    The phase is accumulated as an exact rational (numerator over the lcm of
    the factors) before the single exponentiation, so equal phases always
    produce bit-identical values.
    """
    t = group.reduce(chi).coords
    xc = group.reduce(x).coords
    lcm = group.exponent_lcm
    num = 0
    for ti, xi, m in zip(t, xc, group.factors):
        num += ti * xi * (lcm // m)
    num %= lcm
    return complex(np.exp(2j * np.pi * (num / lcm)))
