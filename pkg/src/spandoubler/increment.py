"""Density increments on prime-field groups and the restriction driver.

A subspace is stored as a row-reduced basis over F_p; membership always goes
through the annihilator characters, and every density claimed by an
increment lemma is recomputed as an exact rational count before being
returned.  The driver iterates the three-way case split, restricts along
codimension-1 steps, and audits the exact solution-count transfer at every
step, producing a transcript whose claims are all recomputed facts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .additive import (EquationSpec, PointSet, additive_energy, indicator,
                       lambda_bruteforce, lambda_fourier, solution_count,
                       spectrum)
from .config import Budgets, DriverKnobs, DriverLimits
from .errors import BudgetExceeded, PostconditionError
from .groups import GroupDescriptor, GroupElement, make_group
from .harmonic import Measure, fourier_forward
from .spans import bsg_extract, correlated_span

# -- linear algebra over F_p ------------------------------------------------------


def _rref(rows: np.ndarray, p: int) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form mod p; returns the nonzero rows and pivots."""
    m = np.array(rows, dtype=np.int64) % p
    if m.ndim != 2:
        m = m.reshape(0, 0)
    nrows, ncols = m.shape
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        pivot_row = None
        for i in range(r, nrows):
            if m[i, col] % p:
                pivot_row = i
                break
        if pivot_row is None:
            continue
        m[[r, pivot_row]] = m[[pivot_row, r]]
        m[r] = (m[r] * pow(int(m[r, col]), -1, p)) % p
        for i in range(nrows):
            if i != r and m[i, col] % p:
                m[i] = (m[i] - m[i, col] * m[r]) % p
        pivots.append(col)
        r += 1
        if r == nrows:
            break
    return m[:r], pivots


def _nullspace(rows: np.ndarray, p: int, ncols: int) -> np.ndarray:
    """A row-reduced basis of {x : rows @ x = 0 mod p}."""
    if len(rows) == 0:
        return np.eye(ncols, dtype=np.int64)
    reduced, pivots = _rref(rows, p)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, c in enumerate(pivots):
            basis[k, c] = (-reduced[i, f]) % p
    reduced_basis, _ = _rref(basis, p)
    return reduced_basis


@dataclass(frozen=True)
class SubspaceDescriptor:
    """A subspace of F_p^n through a row-reduced independent basis."""

    group: GroupDescriptor
    basis: tuple[GroupElement, ...]

    @classmethod
    def from_generators(cls, group: GroupDescriptor,
                        generators: Sequence) -> "SubspaceDescriptor":
        p = _require_prime(group)
        gens = [group.reduce(x).coords for x in generators]
        if not gens:
            return cls(group, ())
        reduced, _ = _rref(np.array(gens, dtype=np.int64), p)
        return cls(group, _rows_to_elements(reduced))

    @classmethod
    def from_annihilator_rows(cls, group: GroupDescriptor,
                              rows: np.ndarray) -> "SubspaceDescriptor":
        p = _require_prime(group)
        return cls(group, _rows_to_elements(_nullspace(rows, p, group.rank)))

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def codimension(self) -> int:
        return self.group.rank - self.dim

    @property
    def order(self) -> int:
        return _require_prime(self.group) ** self.dim

    def basis_rows(self) -> np.ndarray:
        if not self.basis:
            return np.zeros((0, self.group.rank), dtype=np.int64)
        return np.array([e.coords for e in self.basis], dtype=np.int64)

    def annihilator(self) -> "SubspaceDescriptor":
        """The dual subspace {t : t . v = 0 for all v here}; its dimension is
        the codimension here, and taking it twice returns the original."""
        p = _require_prime(self.group)
        rows = _nullspace(self.basis_rows(), p, self.group.rank)
        elements = tuple(GroupElement(tuple(int(v) for v in row)) for row in rows)
        return SubspaceDescriptor(self.group, elements)

    def member_mask(self) -> np.ndarray:
        p = _require_prime(self.group)
        ann = self.annihilator().basis_rows()
        if len(ann) == 0:
            return np.ones(self.group.order, dtype=bool)
        syndromes = (self.group.coords_table @ ann.T) % p
        return ~np.any(syndromes, axis=1)

    def members(self) -> PointSet:
        return PointSet.from_mask(self.group, self.member_mask())

    def contains(self, x) -> bool:
        p = _require_prime(self.group)
        coords = np.array(self.group.reduce(x).coords, dtype=np.int64)
        ann = self.annihilator().basis_rows()
        return not np.any((ann @ coords) % p) if len(ann) else True


def _require_prime(group: GroupDescriptor) -> int:
    p = group.prime_field
    if p is None:
        raise ValueError("this operation requires a prime-field group")
    return p


def _rows_to_elements(rows: np.ndarray) -> tuple[GroupElement, ...]:
    return tuple(GroupElement(tuple(int(v) for v in row)) for row in rows)


# -- the two increment lemmas ------------------------------------------------------


def _coset_argmax(group: GroupDescriptor, a: PointSet,
                  ann_rows: np.ndarray, p: int) -> tuple[int, int]:
    """Best translate (first canonical maximizer) of the subspace annihilated
    by ann_rows, with the exact member count of a on that coset."""
    weights = (p ** np.arange(len(ann_rows)))[::-1]
    syndromes = ((group.coords_table @ ann_rows.T) % p) @ weights
    counts = np.bincount(syndromes[a.indices], minlength=int(p ** len(ann_rows)))
    per_x = counts[syndromes]
    xstar = int(np.argmax(per_x))
    return xstar, int(per_x[xstar])


def linf_increment(a: PointSet, gamma, eps: float) -> tuple[SubspaceDescriptor, GroupElement, Fraction]:
    """Codimension-1 density increment from one large transform coefficient.

    Requires |F(gamma)| >= eps * density (1e-9 slack); returns the kernel of
    gamma, the first canonical element of a densest coset, and the exact new
    density, which is guaranteed at least density*(1 + eps/2) - 1e-9.
    """
    group = a.group
    p = _require_prime(group)
    gamma = group.reduce(gamma)
    if all(c == 0 for c in gamma.coords):
        raise ValueError("the zero character carries no increment")
    alpha = Fraction(a.size, group.order)
    fhat = fourier_forward(indicator(a, Measure.PROBABILITY))
    coeff = abs(complex(fhat.values[group.index_of(gamma)]))
    if coeff < eps * float(alpha) - 1e-9:
        raise ValueError(
            f"hypothesis fails: |F(gamma)| = {coeff:.6g} < eps*alpha = {eps * float(alpha):.6g}"
        )
    ann = np.array([gamma.coords], dtype=np.int64)
    xstar, count = _coset_argmax(group, a, ann, p)
    subspace = SubspaceDescriptor.from_annihilator_rows(group, ann)
    new_density = Fraction(count, p ** (group.rank - 1))
    if float(new_density) < float(alpha) * (1.0 + eps / 2.0) - 1e-9:
        raise PostconditionError(
            f"recomputed density {float(new_density):.6g} fell below the "
            f"guaranteed {float(alpha) * (1 + eps / 2):.6g}"
        )
    return subspace, group.element_at(xstar), new_density


def l2_increment(a: PointSet, w: SubspaceDescriptor,
                 eps: float) -> tuple[SubspaceDescriptor, GroupElement, Fraction]:
    """Increment from total square transform mass on a dual subspace.

    Requires sum over w of |F|^2 >= eps * density; the returned subspace is
    the annihilator of w (codimension = dim w) and the exact recomputed
    density is at least eps - 1e-9.
    """
    group = a.group
    p = _require_prime(group)
    if w.group != group:
        raise ValueError("the dual subspace lives on a different group")
    alpha = Fraction(a.size, group.order)
    fhat = fourier_forward(indicator(a, Measure.PROBABILITY))
    mass = float(np.sum(np.abs(fhat.values[w.members().indices]) ** 2))
    if mass < eps * float(alpha) - 1e-9:
        raise ValueError(
            f"hypothesis fails: dual mass {mass:.6g} < eps*alpha = {eps * float(alpha):.6g}"
        )
    rows = w.basis_rows()
    if len(rows) == 0:
        # trivial dual subspace: the annihilator is the whole group
        xstar = 0
        subspace = SubspaceDescriptor(group, _rows_to_elements(
            np.eye(group.rank, dtype=np.int64)))
        new_density = alpha
    else:
        xstar, count = _coset_argmax(group, a, rows, p)
        subspace = SubspaceDescriptor.from_annihilator_rows(group, rows)
        new_density = Fraction(count, p ** subspace.dim)
    if float(new_density) < eps - 1e-9:
        raise PostconditionError(
            f"recomputed density {float(new_density):.6g} fell below eps = {eps:.6g}"
        )
    return subspace, group.element_at(xstar), new_density


def restrict(a: PointSet, v: SubspaceDescriptor, x) -> PointSet:
    """(x + a) intersected with v, re-indexed in v's own coordinates.

    The result lives on a fresh group of rank dim(v); pivot coordinates of
    the row-reduced basis serve as the new coordinates, and the re-indexing
    is verified by reconstructing each member.
    """
    group = a.group
    p = _require_prime(group)
    if v.dim == 0:
        raise ValueError("cannot restrict to the zero subspace")
    rows = v.basis_rows()
    _, pivots = _rref(rows, p)
    xcoords = np.array(group.reduce(x).coords, dtype=np.int64)
    shifted = (group.coords_table[a.indices] + xcoords) % p
    ann = v.annihilator().basis_rows()
    if len(ann):
        inside = ~np.any((shifted @ ann.T) % p, axis=1)
    else:
        inside = np.ones(len(shifted), dtype=bool)
    kept = shifted[inside]
    coeffs = kept[:, pivots] % p
    if not np.array_equal((coeffs @ rows) % p, kept):
        raise PostconditionError("basis degeneracy: pivot coordinates failed to reconstruct")
    new_group = make_group([p] * v.dim)
    idx = new_group.ravel_coords(coeffs)
    return PointSet.from_indices(new_group, idx)


# -- the iteration case split -------------------------------------------------------


@dataclass(frozen=True)
class ManySolutions:
    lam: Fraction
    threshold: Fraction
    case = "many_solutions"


@dataclass(frozen=True)
class LinfStep:
    subspace: SubspaceDescriptor
    translate: GroupElement
    density_before: Fraction
    density_after: Fraction
    gamma: GroupElement
    eps: float
    case = "linf_step"


@dataclass(frozen=True)
class L2Finish:
    subspace: SubspaceDescriptor
    translate: GroupElement
    density_before: Fraction
    density_after: Fraction
    eps: float
    detail: dict
    case = "l2_finish"


IterationOutcome = ManySolutions | LinfStep | L2Finish


def iteration_step(a: PointSet, eq: EquationSpec,
                   knobs: DriverKnobs = DriverKnobs()) -> IterationOutcome:
    """One pass of the trichotomy: many solutions, a codimension-1 step, or a
    high-codimension finish through the energy/cover pipeline.

    Exactly one outcome is returned and its inequality is recomputed.  With
    amplification 0 the spectral threshold equals the spectrum cut, so the
    third branch only opens when a positive amplification raises the bar for
    the codimension-1 branch.
    """
    group = a.group
    p = _require_prime(group)
    if eq.modulus != p:
        raise ValueError("equation modulus does not match the field")
    if a.size == 0:
        raise ValueError("iteration over the empty set; handle upstream")
    n = group.order
    r = eq.r
    alpha = Fraction(a.size, n)
    threshold = alpha**r / 2
    if n ** (r - 1) <= knobs.budgets.brute_force:
        lam = lambda_bruteforce(a, eq, budget=knobs.budgets.brute_force)
        many = lam >= threshold
    else:
        lam_f = lambda_fourier(a, eq)
        lam = Fraction(lam_f).limit_denominator(n ** (r - 1))
        many = lam_f >= float(threshold) - 1e-9
    if many:
        return ManySolutions(lam=lam, threshold=threshold)

    eps = float(alpha) ** (1.0 / (r - 2)) / 4.0
    amp = float(alpha) ** (-knobs.amplification / ((r - 2) * r)) if knobs.amplification > 0 else 1.0
    theta = amp * eps * float(alpha)
    fhat = fourier_forward(indicator(a, Measure.PROBABILITY))
    mags = np.abs(fhat.values).copy()
    mags[0] = -1.0
    gidx = int(np.argmax(mags))
    top = float(mags[gidx])

    def linf_from(idx: int) -> LinfStep:
        gamma = group.element_at(idx)
        eps_used = min(1.0, float(mags[idx]) / float(alpha))
        v, x, density = linf_increment(a, gamma, eps_used)
        return LinfStep(subspace=v, translate=x, density_before=alpha,
                        density_after=density, gamma=gamma, eps=eps_used)

    if top >= theta - 1e-9:
        return linf_from(gidx)

    # high-codimension branch: spectrum -> energy extraction -> combined cover
    spec_set = spectrum(indicator(a, Measure.PROBABILITY), min(1.0, eps)).without_zero()
    if spec_set.size == 0:
        # cannot happen when the first branch failed with amplification 0;
        # fall back to the best single character
        return linf_from(gidx)
    try:
        energy = additive_energy(spec_set)
        c_measured = Fraction(energy, spec_set.size**3)
        dense_piece, bsg_stats = bsg_extract(spec_set, c_measured, knobs.bsg)
        cert = correlated_span(dense_piece, knobs.cover_eta,
                               constants=knobs.covers, budgets=knobs.budgets)
        w = SubspaceDescriptor.from_generators(group, cert.basis.elements)
        mass = float(np.sum(np.abs(fhat.values[w.members().indices]) ** 2))
        eps2 = min(1.0, mass / float(alpha))
        v, x, density = l2_increment(a, w, eps2)
    except BudgetExceeded:
        # small-r fallback: take any character from the spectrum
        return linf_from(int(spec_set.indices[0]))
    return L2Finish(subspace=v, translate=x, density_before=alpha,
                    density_after=density, eps=eps2,
                    detail={"spectrum_size": spec_set.size,
                            "dense_piece_size": dense_piece.size,
                            "cover_basis_size": cert.basis.size,
                            "dual_dim": w.dim,
                            "bsg": {k: (str(v_) if isinstance(v_, Fraction) else v_)
                                    for k, v_ in bsg_stats.items()}})


# -- the driver ----------------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    case: str
    group_order: int
    codimension: int
    translate: tuple[int, ...]
    density_before: Fraction
    density_after: Fraction
    lam: Fraction
    solution_count: int


@dataclass(frozen=True)
class IncrementTranscript:
    steps: tuple[StepRecord, ...]
    terminal: dict
    initial_density: Fraction
    final_density: Fraction
    final_lambda: Fraction
    index_product: int
    audits: tuple[dict, ...] = field(default_factory=tuple)

    @property
    def terminal_case(self) -> str:
        return str(self.terminal.get("case"))


def default_max_iters(alpha0: Fraction, r: int) -> int:
    if alpha0 <= 0:
        return 1
    return 4 * math.ceil(float(alpha0) ** (-1.0 / (r - 2)) * (r - 2))


def roth_driver(a: PointSet, eq: EquationSpec,
                limits: DriverLimits = DriverLimits(),
                knobs: DriverKnobs = DriverKnobs()) -> IncrementTranscript:
    """Iterate the case split, restricting on codimension-1 steps.

    Every step's density is recomputed exactly, densities are strictly
    increasing, and the exact ordered solution counts are verified to be
    nonincreasing along the restriction chain (the count form of the
    solution-transfer inequality).  Terminal states: many_solutions,
    l2_finish, min_order, max_iters, degenerate_empty.
    """
    group = a.group
    p = _require_prime(group)
    if eq.modulus != p:
        raise ValueError("equation modulus does not match the field")
    if not eq.balanced:
        raise ValueError("the driver requires a balanced equation")
    r = eq.r
    if a.size == 0:
        zero = Fraction(0)
        return IncrementTranscript(steps=(), terminal={"case": "degenerate_empty"},
                                   initial_density=zero, final_density=zero,
                                   final_lambda=zero, index_product=1)
    alpha0 = Fraction(a.size, group.order)
    max_iters = limits.max_iters if limits.max_iters is not None \
        else default_max_iters(alpha0, r)

    current = a
    counts_chain = [solution_count(a, eq, budget=knobs.budgets.brute_force)]
    steps: list[StepRecord] = []
    audits: list[dict] = []
    index_product = 1
    terminal: dict = {}
    iteration = 0
    while True:
        cur_group = current.group
        cur_alpha = Fraction(current.size, cur_group.order)
        if cur_group.order < limits.min_order:
            terminal = {"case": "min_order", "order": cur_group.order}
            break
        if iteration >= max_iters:
            terminal = {"case": "max_iters", "iterations": iteration}
            break
        cur_eq = EquationSpec(p, eq.coefficients)
        outcome = iteration_step(current, cur_eq, knobs)
        if isinstance(outcome, ManySolutions):
            terminal = {"case": "many_solutions", "lambda": outcome.lam,
                        "threshold": outcome.threshold}
            break
        if isinstance(outcome, L2Finish):
            terminal = {"case": "l2_finish",
                        "density_after": outcome.density_after,
                        "codimension": outcome.subspace.codimension,
                        "eps": outcome.eps, "detail": outcome.detail}
            break
        # codimension-1 restriction
        shifted_translate = cur_group.negate(outcome.translate)
        nxt = restrict(current, outcome.subspace, shifted_translate)
        after = Fraction(nxt.size, nxt.group.order)
        if after != outcome.density_after:
            raise PostconditionError("restricted density disagrees with the claim")
        if after <= cur_alpha:
            raise PostconditionError("density failed to increase strictly")
        index_product *= p ** outcome.subspace.codimension
        count_next = solution_count(nxt, cur_eq, budget=knobs.budgets.brute_force)
        if count_next > counts_chain[-1]:
            raise PostconditionError(
                "ordered solution count grew under restriction; the transfer "
                "inequality is violated"
            )
        counts_chain.append(count_next)
        lam_next = Fraction(count_next, nxt.group.order ** (r - 1))
        steps.append(StepRecord(case="linf_step", group_order=nxt.group.order,
                                codimension=outcome.subspace.codimension,
                                translate=outcome.translate.coords,
                                density_before=cur_alpha, density_after=after,
                                lam=lam_next, solution_count=count_next))
        if knobs.audit_every > 0 and iteration % knobs.audit_every == 0 \
                and nxt.group.order <= knobs.audit_max_order:
            lam_f = lambda_fourier(nxt, cur_eq)
            gap = abs(lam_f - float(lam_next))
            if gap > 1e-9:
                raise PostconditionError(
                    f"transform/count audit disagreement {gap:.3g}"
                )
            audits.append({"iteration": iteration, "order": nxt.group.order,
                           "gap": gap})
        current = nxt
        iteration += 1

    final_count = solution_count(current, eq, budget=knobs.budgets.brute_force)
    final_lambda = Fraction(final_count, current.group.order ** (r - 1))
    return IncrementTranscript(
        steps=tuple(steps), terminal=_jsonable_terminal(terminal),
        initial_density=alpha0,
        final_density=Fraction(current.size, current.group.order),
        final_lambda=final_lambda, index_product=index_product,
        audits=tuple(audits),
    )


def _jsonable_terminal(terminal: dict) -> dict:
    out = {}
    for key, value in terminal.items():
        out[key] = value
    return out
