import json
from fractions import Fraction

import numpy as np
import pytest

from spandoubler.additive import EquationSpec, has_nondegenerate_solution
from spandoubler.cli import main, run_command
from spandoubler.groups import make_group
from spandoubler.instances import (ParseError, build_instance, parse_instance,
                                   random_point_set, solution_free_set,
                                   subgroup_plus_noise, subgroup_set)
from spandoubler.report import FORMAT_HEADER, strip_timing_lines


# -- parsing -------------------------------------------------------------------


def test_parse_random_spec():
    spec = parse_instance("group 3 3 3; set random 0.2 seed=7")
    assert spec.factors == (3, 3, 3)
    assert spec.set_spec.kind == "random"
    assert spec.set_spec.density == 0.2
    assert spec.set_spec.seed == 7


def test_parse_literal_spec():
    spec = parse_instance("group 3 3; set {(0,0),(0,1)}")
    assert spec.set_spec.kind == "literal"
    assert spec.set_spec.coords == ((0, 0), (0, 1))
    built = build_instance(spec)
    assert built.points.size == 2


def test_parse_literal_with_spaces_and_rank_one():
    spec = parse_instance("group 7; set {0, 1, 3}")
    built = build_instance(spec)
    assert sorted(int(i) for i in built.points.indices) == [0, 1, 3]


def test_parse_unbalanced_equation_is_warning_not_error():
    spec = parse_instance("group 3; eq 1 1 2")
    built = build_instance(spec)
    assert built.equation is not None
    assert not built.equation.balanced
    assert len(built.warnings) == 1
    assert "unbalanced" in built.warnings[0]


def test_parse_errors_carry_positions():
    with pytest.raises(ParseError) as err:
        parse_instance("group 3 3; blob 1 2")
    assert err.value.position == 11
    with pytest.raises(ParseError):
        parse_instance("set random 0.5")          # no group
    with pytest.raises(ParseError):
        parse_instance("group 3; set random 1.5")  # density out of range
    with pytest.raises(ParseError):
        parse_instance("group 3; set {(0,x)}")
    with pytest.raises(ParseError):
        parse_instance("group 3; eq 1 1")
    with pytest.raises(ParseError):
        parse_instance("group 3; set wibble 1")


def test_parse_params_and_set2():
    spec = parse_instance(
        "group 5 5; set random 0.4 seed=1; set2 {(0,0)}; eta=2/3; delta=0.25")
    assert spec.params["eta"] == Fraction(2, 3)
    assert spec.params["delta"] == 0.25
    built = build_instance(spec)
    assert built.points2.size == 1


def test_parse_solution_free_spec():
    spec = parse_instance("group 3 3 3 3; set solution_free (1,1,1) seed=3")
    built = build_instance(spec)
    eq = EquationSpec(3, (1, 1, 1))
    found, _ = has_nondegenerate_solution(built.points, eq)
    assert not found
    assert built.points.size > 4


# -- generators ----------------------------------------------------------------


def test_random_set_is_seed_deterministic():
    g = make_group([5, 5])
    a = random_point_set(g, 0.3, 9)
    b = random_point_set(g, 0.3, 9)
    c = random_point_set(g, 0.3, 10)
    assert a.bits == b.bits
    assert a.bits != c.bits


def test_subgroup_generator_closure():
    g = make_group([3, 3])
    h = subgroup_set(g, [(1, 0)])
    assert sorted(e.coords for e in h.elements()) == [(0, 0), (1, 0), (2, 0)]
    full = subgroup_set(g, [(1, 0), (0, 1)])
    assert full.size == 9
    # closure works in non-prime groups too
    g12 = make_group([12])
    h = subgroup_set(g12, [(4,)])
    assert sorted(int(i) for i in h.indices) == [0, 4, 8]


def test_subgroup_plus_noise_counts():
    g = make_group([3, 3])
    a = subgroup_plus_noise(g, [(1, 0)], k=2, seed=4)
    assert a.size == 5
    h = subgroup_set(g, [(1, 0)])
    assert h.is_subset(a)


def test_solution_free_sets_across_seeds():
    g = make_group([5, 5, 5])
    eq = EquationSpec(5, (1, 2, 2))
    for seed in (0, 1, 2):
        a = solution_free_set(g, eq, seed)
        found, _ = has_nondegenerate_solution(a, eq)
        assert not found
        assert a.size >= 5


# -- run_command ------------------------------------------------------------------


def test_run_command_lambda_record():
    report, code = run_command("lambda", ["group 3; set {0,1}; eq 1 1 1"])
    assert code == 0
    rec = report.records[0]
    assert rec["ok"]
    assert rec["outputs"]["bruteforce"] == "2/9"
    assert abs(rec["outputs"]["fourier"] - 2 / 9) < 1e-9


def test_run_command_lambda_full_group():
    report, code = run_command("lambda", ["group 3 3; set random 1.0 seed=1; eq 1 1 1"])
    assert code == 0
    assert report.records[0]["outputs"]["bruteforce"] == "1/1"


def test_run_command_driver_transcript():
    report, code = run_command(
        "driver", ["group 3 3 3 3; set solution_free (1,1,1) seed=3; eq 1 1 1"])
    assert code == 0
    out = report.records[0]["outputs"]
    assert out["assert_monotone"]
    assert out["terminal"]["case"] in ("many_solutions", "l2_finish", "min_order")
    assert len(out["steps"]) >= 1


def test_run_command_parse_failure_exit_code():
    report, code = run_command("lambda", ["group 3; floop"])
    assert code == 1


def test_run_command_runtime_error_exit_code():
    # missing eq for lambda: per-instance error, exit 2
    report, code = run_command("lambda", ["group 3; set {0,1}"])
    assert code == 2
    assert not report.records[0]["ok"]
    assert "error" in report.records[0]


def test_run_command_budget_error_exit_code():
    from spandoubler.config import Budgets
    report, code = run_command(
        "lambda", ["group 7; set {0,1,3}; eq 1 1 1 1 1"],
        budgets=Budgets(brute_force=10))
    assert code == 2
    assert "budget" in report.records[0]["error"]


def test_run_command_all_commands_smoke():
    instance = "group 3 3; set {(0,0),(0,1),(0,2),(1,0)}; eq 1 1 1; delta=1/2; eta=1/2"
    for name in ("spectrum", "symset", "chang", "span-asym", "correlated-span",
                 "energy", "lambda", "increment", "driver"):
        report, code = run_command(name, [instance])
        assert code == 0, (name, report.records)
    report, code = run_command("bsg", ["group 2 2 2; set random 0.8 seed=2; frac=1/4"])
    assert code == 0


# -- determinism and output formats -------------------------------------------------


def test_reports_byte_identical_across_worker_counts():
    texts = [f"group 3 3 3; set random 0.3 seed={s}; eq 1 1 1" for s in range(12)]
    rep1, _ = run_command("lambda", texts, workers=1)
    rep4, _ = run_command("lambda", texts, workers=4)
    assert rep1.text(include_timings=False) == rep4.text(include_timings=False)
    stripped1 = strip_timing_lines(rep1.text(include_timings=True))
    stripped4 = strip_timing_lines(rep4.text(include_timings=True))
    assert stripped1 == stripped4


def test_report_header_and_format():
    report, _ = run_command("symset", ["group 7; set {0,1,3}; eta=2/3"])
    lines = report.text().splitlines()
    assert lines[0] == FORMAT_HEADER
    header = json.loads(lines[1])
    assert header["type"] == "header"
    record = json.loads(lines[2])
    assert record["type"] == "record"
    assert record["outputs"]["indices"] == [0]
    summary = json.loads(lines[-1])
    assert summary["type"] == "summary"


def test_csv_output_is_flat_table():
    report, _ = run_command("symset", ["group 7; set {0,1,3}; eta=2/3",
                                       "group 7; set {0,1,3}; eta=1/3"])
    csv_text = report.csv_text(include_timings=False)
    lines = csv_text.strip().splitlines()
    assert len(lines) == 3
    assert "outputs.size" in lines[0]
    assert "ms" not in lines[0]


def test_cli_main_end_to_end(tmp_path, capsys):
    out = tmp_path / "report.jsonl"
    code = main(["lambda", "-e", "group 3; set {0,1}; eq 1 1 1",
                 "--no-timings", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert text.startswith(FORMAT_HEADER)
    assert '"bruteforce":"2/9"' in text


def test_cli_main_file_input_and_csv(tmp_path):
    src = tmp_path / "instances.txt"
    src.write_text("# comment line\ngroup 7; set {0,1,3}; eta=2/3\n\n")
    out = tmp_path / "report.csv"
    code = main(["symset", str(src), "--csv", "--out", str(out)])
    assert code == 0
    assert "outputs.size" in out.read_text()


def test_cli_main_verify_suite(tmp_path):
    out = tmp_path / "verify.jsonl"
    code = main(["verify", "--suite", "additive", "--seed", "1",
                 "--count", "20", "--out", str(out), "--no-timings"])
    assert code == 0
    text = out.read_text()
    assert '"failures":0' in text


def test_cli_main_usage_errors():
    assert main(["lambda"]) == 1          # no instances
    assert main(["nonsense"]) == 1        # unknown command


def test_cli_max_order_flag():
    code = main(["symset", "-e", "group 3 3; set {(0,0)}", "--max-order", "5",
                 "--out", "/dev/null"])
    assert code == 2
