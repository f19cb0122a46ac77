"""Seeded verification suites: one per library layer.

Each suite regenerates its instances deterministically from the seed,
recomputes every claimed fact from scratch, and reports measured constants
for the size bounds whose theorems only give asymptotic shapes.  Summaries
carry pass/fail counts; measured constants are data, not assertions.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction

import numpy as np

from .additive import (EquationSpec, PointSet, additive_energy,
                       correlation_counts, doubling_constant,
                       has_nondegenerate_solution, indicator,
                       lambda_bruteforce, lambda_fourier, spectrum,
                       symmetry_set)
from .config import Budgets, CoverConstants, DriverKnobs, DriverLimits
from .groups import character_eval, make_group
from .harmonic import (GroupFunction, Measure, Side, convolve, dot,
                       fourier_forward, fourier_invert, lp_norm)
from .increment import (SubspaceDescriptor, l2_increment, linf_increment,
                        roth_driver)
from .instances import random_nonempty_set, solution_free_set
from .report import ExperimentReport
from .spans import (chang_spectrum_cover, correlated_span, energy_bound_check,
                    shkredov_asym_cover, span_enumerate, symset_cover,
                    _span_mask)

# factor pools, grouped by how heavy the instances are
_SMALL_FACTORS = [(2, 2), (3, 3), (5,), (7,), (2, 2, 2), (3, 3, 3), (4, 4),
                  (5, 5), (2, 3, 5), (7, 7), (3, 3, 3, 3), (11,), (13,), (6, 6)]
_HARMONIC_FACTORS = _SMALL_FACTORS + [
    (8, 8), (16, 16), (64,), (32, 32), (48, 48), (2,) * 9, (3, 3, 3, 3, 3),
    (5, 5, 5), (4, 4, 4, 4), (16, 16, 16), (64, 64), (2,) * 12,
    (8, 8, 8, 8), (3,) * 7, (7, 7, 7), (25, 25), (9, 9, 9), (13, 13),
]
_ENERGY_FACTORS = [(3, 3), (3, 3, 3), (5, 5), (7, 7), (3, 3, 3, 3),
                   (2, 2, 2, 2), (13,), (5, 5, 5), (3, 3, 3, 3, 3), (27, 27),
                   (2,) * 9, (23,)]


def _instance_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([int(seed) & 0x7FFFFFFF, index])


def _random_complex(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def verify_group(seed: int = 0, count: int = 50, **_) -> ExperimentReport:
    """Exhaustive structural invariants on small groups."""
    report = ExperimentReport("verify", header={"suite": "group", "seed": seed,
                                                "count": count})
    failures = 0
    exhaustive = [(2, 2, 2), (8,), (3, 3), (12,), (2, 3, 5), (5, 5), (7,), (64,)]
    for i, factors in enumerate(exhaustive):
        t0 = time.perf_counter()
        g = make_group(factors)
        n = g.order
        # character table built two ways: row phases and elementwise evals
        table = np.empty((n, n), dtype=np.complex128)
        for t in range(n):
            chi = g.element_at(t)
            table[t] = [character_eval(g, chi, g.element_at(x)) for x in range(n)]
        hom_err = 0.0
        for y in range(n):
            perm = g.shift_perm(y)
            hom_err = max(hom_err, float(np.max(np.abs(
                table[:, perm] - table * table[:, y][:, None]))))
        roundtrip_ok = all(g.index_of(g.element_at(j)) == j for j in range(n))
        scalar_ok = True
        if g.prime_field:
            p = g.prime_field
            for c in range(1, p):
                cinv = pow(c, -1, p)
                perm = g.scalar_perm(c)[g.scalar_perm(cinv)]
                scalar_ok = scalar_ok and bool(np.array_equal(perm, np.arange(n)))
        ok = hom_err < 1e-9 and roundtrip_ok and scalar_ok
        failures += not ok
        report.add({"i": i, "factors": list(factors), "order": n,
                    "hom_error": hom_err, "roundtrip": roundtrip_ok,
                    "scalar_roundtrip": scalar_ok, "ok": ok,
                    "ms": (time.perf_counter() - t0) * 1e3})
    report.summary = {"suite": "group", "instances": len(exhaustive),
                      "failures": failures}
    return report


def verify_harmonic(seed: int = 0, count: int = 1000, **_) -> ExperimentReport:
    """Parseval, convolution theorem, the transform sup bound and the
    inversion round-trip on seeded random functions."""
    report = ExperimentReport("verify", header={"suite": "harmonic", "seed": seed,
                                                "count": count})
    worst = {"parseval": 0.0, "convolution": 0.0, "sup_bound": 0.0,
             "inversion": 0.0}
    failures = 0
    for i in range(count):
        rng = _instance_rng(seed, i)
        t0 = time.perf_counter()
        factors = _HARMONIC_FACTORS[int(rng.integers(len(_HARMONIC_FACTORS)))]
        g = make_group(factors)
        n = g.order
        f = GroupFunction(g, Side.PRIMAL, _random_complex(rng, n),
                          Measure.PROBABILITY)
        fhat = fourier_forward(f)
        parseval = abs(lp_norm(f, 2) - lp_norm(fhat, 2))
        inversion = float(np.max(np.abs(fourier_invert(fhat).values - f.values)))
        sup_gap = lp_norm(fhat, math.inf) - lp_norm(f, 1) * (1 + 1e-12)
        # sparse second operand keeps the direct convolution affordable
        support = rng.choice(n, size=int(min(n, 48)), replace=False)
        gv = np.zeros(n, dtype=np.complex128)
        gv[support] = _random_complex(rng, len(support))
        h = GroupFunction(g, Side.PRIMAL, gv, Measure.PROBABILITY)
        conv_gap = float(np.max(np.abs(
            fourier_forward(convolve(f, h)).values
            - fourier_forward(f).values * fourier_forward(h).values)))
        ok = parseval <= 1e-9 and inversion <= 1e-9 and sup_gap <= 0 \
            and conv_gap <= 1e-9
        failures += not ok
        worst["parseval"] = max(worst["parseval"], parseval)
        worst["convolution"] = max(worst["convolution"], conv_gap)
        worst["sup_bound"] = max(worst["sup_bound"], sup_gap)
        worst["inversion"] = max(worst["inversion"], inversion)
        if not ok or i % 100 == 0:
            report.add({"i": i, "order": n, "parseval": parseval,
                        "convolution": conv_gap, "inversion": inversion,
                        "sup_gap": sup_gap, "ok": ok,
                        "ms": (time.perf_counter() - t0) * 1e3})
    report.summary = {"suite": "harmonic", "instances": count,
                      "failures": failures, "worst": worst}
    return report


def verify_additive(seed: int = 0, count: int = 200, **_) -> ExperimentReport:
    """Dual-path solution counts, energy against the raw pair multiset, and
    the monotonicity/containment facts of spectra and symmetry sets."""
    report = ExperimentReport("verify", header={"suite": "additive", "seed": seed,
                                                "count": count})
    lam_worst = 0.0
    failures = 0
    lam_groups = [(3, 3, 3), (5, 5), (7,)]
    for i in range(count):
        rng = _instance_rng(seed, i)
        t0 = time.perf_counter()
        g = make_group(lam_groups[i % len(lam_groups)])
        p = g.prime_field
        r = int(rng.integers(3, 6))
        coeffs = [int(rng.integers(1, p)) for _ in range(r - 1)]
        last = (-sum(coeffs)) % p if rng.random() < 0.5 else int(rng.integers(1, p))
        if last == 0:
            last = 1
        eq = EquationSpec(p, tuple(coeffs) + (last,))
        a = PointSet.from_mask(g, rng.random(g.order) < rng.uniform(0.1, 0.6))
        lam_b = lambda_bruteforce(a, eq)
        lam_f = lambda_fourier(a, eq)
        gap = abs(lam_f - float(lam_b))
        lam_worst = max(lam_worst, gap)

        checks_ok = gap <= 1e-9
        if a.size:
            # energy versus the difference multiset of the raw coordinates
            pairs = (g.coords_table[a.indices][:, None, :]
                     - g.coords_table[a.indices][None, :, :]) % g._factors_arr
            flat = g.ravel_coords(pairs.reshape(-1, g.rank))
            _, multi = np.unique(flat, return_counts=True)
            checks_ok &= additive_energy(a) == int(np.sum(multi * multi))
            # spectra: contain 0, monotone, within the Parseval size bound
            f = indicator(a, Measure.PROBABILITY)
            alpha = a.size / g.order
            prev = None
            for delta in (1.0, 0.5, 0.25):
                spec = spectrum(f, delta)
                checks_ok &= spec.contains_index(0)
                checks_ok &= spec.size <= delta**-2 / alpha + 1e-9
                if prev is not None:
                    checks_ok &= prev.is_subset(spec)
                prev = spec
            # symmetry sets: symmetric, contain 0, monotone in eta
            prev = None
            for eta in (Fraction(1), Fraction(1, 2), Fraction(1, 4)):
                sym = symmetry_set(a, eta)
                checks_ok &= sym.contains_index(0)
                checks_ok &= sym.bits == sym.negate().bits
                if prev is not None:
                    checks_ok &= prev.is_subset(sym)
                prev = sym
        failures += not checks_ok
        if not checks_ok or i % 50 == 0:
            report.add({"i": i, "order": g.order, "r": r, "set_size": a.size,
                        "lambda_gap": gap, "ok": checks_ok,
                        "ms": (time.perf_counter() - t0) * 1e3})
    report.summary = {"suite": "additive", "instances": count,
                      "failures": failures, "worst_lambda_gap": lam_worst}
    return report


def verify_spanstruct(seed: int = 0, count: int = 1000, **_) -> ExperimentReport:
    """Recompute every cover containment and the spectral energy bound;
    tabulate the measured constants of the three size budgets."""
    report = ExperimentReport("verify", header={"suite": "spanstruct",
                                                "seed": seed, "count": count})
    failures = 0
    measured = {"chang": [], "shkredov": [], "symset": [], "span_ratio": []}
    deltas = [Fraction(1), Fraction(1, 2), Fraction(1, 4)]
    etas = [Fraction(1), Fraction(1, 2), Fraction(1, 4)]
    for i in range(count):
        rng = _instance_rng(seed, i)
        t0 = time.perf_counter()
        g = make_group(_SMALL_FACTORS[int(rng.integers(len(_SMALL_FACTORS)))])
        a = random_nonempty_set(g, float(rng.uniform(0.08, 0.5)),
                                int(rng.integers(1 << 30)))
        delta = deltas[i % len(deltas)]
        eta = etas[(i // 3) % len(etas)]
        ok = True

        cert = chang_spectrum_cover(indicator(a, Measure.PROBABILITY), delta)
        ok &= cert.contained
        ratio = cert.stats["norm_ratio"]
        if ratio > 1.0:
            measured["chang"].append(cert.basis.size * float(delta) ** 2
                                     / math.log(ratio))

        b = random_nonempty_set(g, float(rng.uniform(0.02, 0.2)),
                                int(rng.integers(1 << 30)))
        cert = shkredov_asym_cover(a, b)
        ok &= cert.contained
        ok &= cert.stats["dual_l1"] <= cert.stats["dual_l1_bound"] + 1e-6
        ok &= cert.stats["dual_l2_sq"] <= cert.stats["dual_l2_sq_bound"] + 1e-6
        if a.size > 1:
            measured["shkredov"].append(
                cert.basis.size / (cert.stats["doubling"] * math.log(a.size)))

        cert = symset_cover(a, eta)
        ok &= cert.contained
        if a.size > 1:
            measured["symset"].append(cert.basis.size * float(eta) ** 2
                                      / math.log(a.size))

        if a.size <= 24:
            cert = correlated_span(a, float(eta))
            span_mask = _span_mask(g, cert.basis.indices())
            translate_idx = g.index_of(cert.translate)
            shifted = span_mask[g.shift_perm(g.neg_index(translate_idx))]
            ok &= cert.overlap == int(np.count_nonzero(shifted & a.mask))
            ok &= cert.stats["sym_in_span"]
            ok &= cert.stats["shifted_sym_in_prime_span"]
            measured["span_ratio"].append(cert.stats["overlap_fraction"])

        spec = spectrum(indicator(a, Measure.PROBABILITY), delta)
        for s in (spec.without_zero(), spec):
            if s.size:
                check = energy_bound_check(a, delta, s)
                ok &= bool(check["holds"])

        failures += not ok
        if not ok or i % 100 == 0:
            report.add({"i": i, "order": g.order, "set_size": a.size,
                        "delta": str(delta), "eta": str(eta), "ok": ok,
                        "ms": (time.perf_counter() - t0) * 1e3})
    constants = {
        name: {"max": max(vals), "mean": float(np.mean(vals)), "n": len(vals)}
        for name, vals in measured.items() if vals
    }
    report.summary = {"suite": "spanstruct", "instances": count,
                      "failures": failures, "measured_constants": constants,
                      "all_finite": all(math.isfinite(c["max"])
                                        for c in constants.values())}
    return report


def verify_energy_bound(seed: int = 0, count: int = 1000, **_) -> ExperimentReport:
    """The spectral energy inequality alone, on its own instance pool."""
    report = ExperimentReport("verify", header={"suite": "energy", "seed": seed,
                                                "count": count})
    failures = 0
    deltas = [Fraction(1, 4), Fraction(1, 2), Fraction(1)]
    min_slack = math.inf
    for i in range(count):
        rng = _instance_rng(seed, i)
        g = make_group(_ENERGY_FACTORS[int(rng.integers(len(_ENERGY_FACTORS)))])
        a = random_nonempty_set(g, float(rng.uniform(0.05, 0.6)),
                                int(rng.integers(1 << 30)))
        delta = deltas[i % 3]
        spec = spectrum(indicator(a, Measure.PROBABILITY), delta)
        ok = True
        for s in (spec.without_zero(), spec):
            if s.size == 0:
                continue
            check = energy_bound_check(a, delta, s)
            ok &= bool(check["holds"])
            if check["bound"] > 0:
                min_slack = min(min_slack, check["energy"] / float(check["bound"]))
        failures += not ok
        if not ok or i % 100 == 0:
            report.add({"i": i, "order": g.order, "set_size": a.size,
                        "delta": str(delta), "ok": ok})
    report.summary = {"suite": "energy", "instances": count, "failures": failures,
                      "min_energy_over_bound": min_slack}
    return report


def verify_increment(seed: int = 0, count: int = 1000, drivers: int = 0,
                     **_) -> ExperimentReport:
    """Recomputed postconditions of both increment lemmas on seeded sets,
    plus optional full driver runs on solution-free instances."""
    report = ExperimentReport("verify", header={"suite": "increment",
                                                "seed": seed, "count": count,
                                                "drivers": drivers})
    failures = 0
    pools = [(3, 3), (3, 3, 3), (3, 3, 3, 3), (5, 5), (5, 5, 5)]
    for i in range(count):
        rng = _instance_rng(seed, i)
        t0 = time.perf_counter()
        g = make_group(pools[i % len(pools)])
        a = random_nonempty_set(g, float(rng.uniform(0.1, 0.7)),
                                int(rng.integers(1 << 30)))
        alpha = Fraction(a.size, g.order)
        fhat = fourier_forward(indicator(a, Measure.PROBABILITY))
        mags = np.abs(fhat.values).copy()
        mags[0] = -1.0
        gidx = int(np.argmax(mags))
        ok = True
        if mags[gidx] > 1e-12 and a.size < g.order:
            eps = min(1.0, float(mags[gidx]) / float(alpha))
            _, _, density = linf_increment(a, g.element_at(gidx), eps)
            ok &= float(density) >= float(alpha) * (1 + eps / 2) - 1e-9
        # random dual subspace of dimension <= 2 with the measured mass
        dim = int(rng.integers(0, 3))
        gens = [g.element_at(int(rng.integers(1, g.order))) for _ in range(dim)]
        w = SubspaceDescriptor.from_generators(g, gens)
        mass = float(np.sum(np.abs(fhat.values[w.members().indices]) ** 2))
        eps2 = min(1.0, mass / float(alpha))
        _, _, density2 = l2_increment(a, w, eps2)
        ok &= float(density2) >= eps2 - 1e-9
        failures += not ok
        if not ok or i % 100 == 0:
            report.add({"i": i, "order": g.order, "set_size": a.size, "ok": ok,
                        "ms": (time.perf_counter() - t0) * 1e3})
    driver_failures = 0
    driver_specs = []
    for j in range(drivers):
        if j % 2 == 0:
            g = make_group((3, 3, 3, 3))
            eq = EquationSpec(3, (1, 1, 1))
        else:
            g = make_group((5, 5, 5))
            eq = EquationSpec(5, (1, 1, 3) if j % 4 == 1 else (1, 2, 2))
        a = solution_free_set(g, eq, seed * 1000 + j)
        free, _ = has_nondegenerate_solution(a, eq)
        transcript = roth_driver(a, eq)
        ok = (not free
              and transcript.terminal_case not in ("max_iters",)
              and all(s.density_after > s.density_before for s in transcript.steps))
        counts = [s.solution_count for s in transcript.steps]
        ok &= all(c1 >= c2 for c1, c2 in zip(counts, counts[1:]))
        driver_failures += not ok
        driver_specs.append({"j": j, "order": g.order, "set_size": a.size,
                             "steps": len(transcript.steps),
                             "terminal": transcript.terminal_case, "ok": ok})
    for rec in driver_specs:
        report.add(rec)
    report.summary = {"suite": "increment", "instances": count,
                      "failures": failures, "drivers": drivers,
                      "driver_failures": driver_failures}
    return report


SUITES = {
    "group": verify_group,
    "harmonic": verify_harmonic,
    "additive": verify_additive,
    "spanstruct": verify_spanstruct,
    "energy": verify_energy_bound,
    "increment": verify_increment,
}


def verify_suite(suite: str, seed: int = 0, count: int | None = None,
                 **kwargs) -> ExperimentReport:
    """Run one named suite; count=None keeps each suite's default size."""
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES)}")
    fn = SUITES[suite]
    if count is None:
        return fn(seed=seed, **kwargs)
    return fn(seed=seed, count=count, **kwargs)
