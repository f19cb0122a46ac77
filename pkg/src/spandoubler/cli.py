"""Batch experiment runner over instance lines, with deterministic reports.

Commands map one-to-one onto library operations; each consumes instance
lines (from files, --instance flags, or stdin), emits one record per
instance in input order regardless of worker count, and exits 0 when every
asserted fact held, 1 on parse/usage errors, 2 when a record failed or a
budget was exceeded.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction

import numpy as np

from .additive import (PointSet, additive_energy, indicator, lambda_bruteforce,
                       lambda_fourier, spectrum, symmetry_set)
from .config import Budgets, DriverKnobs, DriverLimits
from .errors import BudgetExceeded
from .harmonic import Measure
from .increment import iteration_step, roth_driver
from .instances import BuiltInstance, ParseError, build_instance, parse_instance
from .report import ExperimentReport, jsonable
from .spans import (bsg_extract, chang_spectrum_cover, correlated_span,
                    energy_bound_check, shkredov_asym_cover, symset_cover)
from .verify import SUITES, verify_suite

COMMANDS = ("spectrum", "symset", "chang", "span-asym", "correlated-span",
            "energy", "bsg", "lambda", "increment", "driver", "verify")


def _param(inst: BuiltInstance, name: str, default):
    value = inst.params.get(name, default)
    if isinstance(value, str):
        value = Fraction(value)
    return value


def _require_set(inst: BuiltInstance) -> PointSet:
    if inst.points is None:
        raise ValueError("this command needs a 'set' field in the instance")
    return inst.points


def _require_eq(inst: BuiltInstance):
    if inst.equation is None:
        raise ValueError("this command needs an 'eq' field in the instance")
    return inst.equation


def _cert_dict(cert) -> dict:
    return {
        "basis": [list(e.coords) for e in cert.basis.elements],
        "basis_size": cert.basis.size,
        "dissociated": cert.basis.dissociated,
        "translate": list(cert.translate.coords) if cert.translate else None,
        "contained": cert.contained,
        "overlap": cert.overlap,
        "bound_budget": cert.bound_budget,
        "target_size": cert.target.size,
        "stats": cert.stats,
    }


def _run_spectrum(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    delta = _param(inst, "delta", Fraction(1, 2))
    spec = spectrum(indicator(a, Measure.PROBABILITY), delta)
    return {"size": spec.size, "indices": spec.indices, "delta": float(delta)}


def _run_symset(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    eta = _param(inst, "eta", Fraction(1, 2))
    sym = symmetry_set(a, eta)
    return {"size": sym.size, "indices": sym.indices, "eta": float(eta)}


def _run_chang(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    delta = _param(inst, "delta", Fraction(1, 2))
    cert = chang_spectrum_cover(indicator(a, Measure.PROBABILITY), delta,
                                budget=budgets.span_elements)
    out = _cert_dict(cert)
    out["assert_contained"] = cert.contained
    return out


def _run_span_asym(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    b = inst.points2 if inst.points2 is not None else a
    cert = shkredov_asym_cover(a, b, budget=budgets.span_elements)
    out = _cert_dict(cert)
    out["assert_contained"] = cert.contained
    return out


def _run_correlated_span(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    eta = float(_param(inst, "eta", Fraction(1, 2)))
    cert = correlated_span(a, eta, budgets=budgets)
    return _cert_dict(cert)


def _run_energy(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    out = {"energy": additive_energy(a), "size": a.size}
    if "delta" in inst.params:
        delta = _param(inst, "delta", Fraction(1, 2))
        spec = spectrum(indicator(a, Measure.PROBABILITY), delta).without_zero()
        if spec.size:
            check = energy_bound_check(a, delta, spec)
            out["bound_check"] = check
            out["assert_holds"] = bool(check["holds"])
    return out


def _run_bsg(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    frac = _param(inst, "frac", None)
    if frac is None:
        frac = Fraction(additive_energy(a), a.size**3)
    subset, stats = bsg_extract(a, frac)
    return {"subset_size": subset.size, "subset_indices": subset.indices,
            "stats": stats}


def _run_lambda(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    eq = _require_eq(inst)
    exact = lambda_bruteforce(a, eq, budget=budgets.brute_force)
    approx = lambda_fourier(a, eq)
    gap = abs(approx - float(exact))
    return {"bruteforce": exact, "fourier": approx, "gap": gap,
            "assert_agree": gap <= 1e-9, "r": eq.r, "balanced": eq.balanced}


def _knobs_from(inst: BuiltInstance, budgets: Budgets) -> DriverKnobs:
    return DriverKnobs(
        amplification=float(_param(inst, "amp", 0.0)),
        cover_eta=float(_param(inst, "eta", Fraction(1, 2))),
        audit_every=int(_param(inst, "audit_every", 1)),
        budgets=budgets,
    )


def _run_increment(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    eq = _require_eq(inst)
    outcome = iteration_step(a, eq, _knobs_from(inst, budgets))
    out = {"case": outcome.case}
    if outcome.case == "many_solutions":
        out.update({"lambda": outcome.lam, "threshold": outcome.threshold})
    else:
        out.update({"codimension": outcome.subspace.codimension,
                    "translate": list(outcome.translate.coords),
                    "density_before": outcome.density_before,
                    "density_after": outcome.density_after})
        if outcome.case == "l2_finish":
            out["detail"] = outcome.detail
    return out


def _run_driver(inst: BuiltInstance, budgets: Budgets) -> dict:
    a = _require_set(inst)
    eq = _require_eq(inst)
    limits = DriverLimits(
        max_iters=(int(inst.params["max_iters"]) if "max_iters" in inst.params
                   else None),
        min_order=int(_param(inst, "min_order", 2)),
    )
    transcript = roth_driver(a, eq, limits, _knobs_from(inst, budgets))
    return {
        "terminal": transcript.terminal,
        "steps": [{"order": s.group_order, "codimension": s.codimension,
                   "translate": list(s.translate),
                   "density_before": s.density_before,
                   "density_after": s.density_after,
                   "lambda": s.lam} for s in transcript.steps],
        "initial_density": transcript.initial_density,
        "final_density": transcript.final_density,
        "final_lambda": transcript.final_lambda,
        "index_product": transcript.index_product,
        "audits": len(transcript.audits),
        "assert_monotone": all(s.density_after > s.density_before
                               for s in transcript.steps),
    }


_RUNNERS = {
    "spectrum": _run_spectrum,
    "symset": _run_symset,
    "chang": _run_chang,
    "span-asym": _run_span_asym,
    "correlated-span": _run_correlated_span,
    "energy": _run_energy,
    "bsg": _run_bsg,
    "lambda": _run_lambda,
    "increment": _run_increment,
    "driver": _run_driver,
}


def run_command(name: str, texts: list[str], seed: int = 0,
                budgets: Budgets = Budgets(), workers: int = 1,
                max_order: int | None = None) -> tuple[ExperimentReport, int]:
    """Run one command over instance lines; returns (report, exit_code)."""
    if name not in _RUNNERS:
        raise ValueError(f"unknown command {name!r}")
    # the worker count is deliberately not echoed: output bytes must not
    # depend on the parallelism level
    report = ExperimentReport(name, header={"seed": seed})
    try:
        specs = [parse_instance(t) for t in texts]
    except ParseError as exc:
        report.summary = {"error": str(exc)}
        return report, 1

    def work(item):
        index, spec = item
        t0 = time.perf_counter()
        record = {"i": index, "instance": spec.raw}
        try:
            inst = build_instance(spec, default_seed=seed, max_order=max_order)
            record["warnings"] = list(inst.warnings)
            outputs = _RUNNERS[name](inst, budgets)
            record["outputs"] = outputs
            asserts = [v for k, v in outputs.items() if k.startswith("assert_")]
            record["ok"] = all(bool(v) for v in asserts) if asserts else True
        except BudgetExceeded as exc:
            record["ok"] = False
            record["error"] = f"budget: {exc}"
        except (ValueError, NotImplementedError) as exc:
            record["ok"] = False
            record["error"] = str(exc)
        record["ms"] = (time.perf_counter() - t0) * 1e3
        return index, record

    items = list(enumerate(specs))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, items))
    else:
        results = [work(it) for it in items]
    # emit in input order regardless of scheduling
    for _, record in sorted(results, key=lambda pair: pair[0]):
        report.add(record)
    n_ok = sum(1 for r in report.records if r.get("ok"))
    report.summary = {"instances": len(specs), "ok": n_ok,
                      "failed": len(specs) - n_ok}
    return report, 0 if n_ok == len(specs) else 2


def _read_instances(args) -> list[str]:
    texts: list[str] = []
    for literal in args.instance or []:
        texts.append(literal)
    for path in args.files or []:
        if path == "-":
            source = sys.stdin.read()
        else:
            with open(path, "r", encoding="utf-8") as fh:
                source = fh.read()
        for line in source.splitlines():
            line = line.strip()
            if line and not line.startswith("#"):
                texts.append(line)
    return texts


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spandoubler",
        description="Seeded experiments on spans, spectra, symmetry sets and "
                    "density increments over small finite abelian groups.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--count", type=int, default=None)
    common.add_argument("--budget-span", type=int, default=Budgets.span_elements)
    common.add_argument("--budget-brute", type=int, default=Budgets.brute_force)
    common.add_argument("--audit-every", type=int, default=1)
    common.add_argument("--csv", action="store_true",
                        help="emit records as one flat CSV table")
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--no-timings", action="store_true",
                        help="omit the ms fields for byte-stable output")
    common.add_argument("--max-order", type=int, default=None,
                        help="override the group-order cap for this run")
    common.add_argument("--out", default="-", help="output path, - for stdout")
    for name in COMMANDS:
        cmd = sub.add_parser(name, parents=[common])
        if name == "verify":
            cmd.add_argument("--suite", required=True, choices=sorted(SUITES))
            cmd.add_argument("--drivers", type=int, default=0)
        else:
            cmd.add_argument("files", nargs="*",
                             help="instance files; - reads stdin")
            cmd.add_argument("-e", "--instance", action="append",
                             help="inline instance text (repeatable)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code not in (0, None) else 0
    budgets = Budgets(span_elements=args.budget_span,
                      brute_force=args.budget_brute)
    if args.command == "verify":
        report = verify_suite(args.suite, seed=args.seed, count=args.count,
                              drivers=args.drivers)
        code = 0 if report.summary.get("failures", 0) == 0 \
            and report.summary.get("driver_failures", 0) == 0 else 2
    else:
        texts = _read_instances(args)
        if not texts:
            print("no instances given", file=sys.stderr)
            return 1
        report, code = run_command(args.command, texts, seed=args.seed,
                                   budgets=budgets, workers=args.workers,
                                   max_order=args.max_order)
        if code == 1:
            print(report.summary.get("error", "parse error"), file=sys.stderr)
            return 1
    include_timings = not args.no_timings
    payload = report.csv_text(include_timings) if args.csv \
        else report.text(include_timings)
    if args.out == "-":
        sys.stdout.write(payload)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
