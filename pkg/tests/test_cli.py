import json
from pathlib import Path

import pytest

from gptc.cli import main, read_binding_file, read_manifest, expected_pass
from gptc.errors import GptcError

DEMOS = Path(__file__).resolve().parent.parent / "demos"


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_prints_canonical_form(capsys, tmp_path):
    f = tmp_path / "h.gptc"
    f.write_text("E_{d5a2c6c7} A^{a1a2b3} B^{a4c7} C_{a1}^{d5} D_{b3a4}^{c6}\n")
    code, out, _ = run(["parse", str(f)], capsys)
    assert code == 0
    assert out.strip().splitlines()[-1] == "circuit, 5 operations, 7 wires"


def test_parse_reports_cycle(capsys, tmp_path):
    f = tmp_path / "loop.gptc"
    f.write_text("A_{a2}^{a1} B_{a1}^{a2}")
    code, _, err = run(["parse", str(f)], capsys)
    assert code == 2
    assert "CycleError" in err and "A -> B" in err


def test_parse_missing_file(capsys, tmp_path):
    code, _, err = run(["parse", str(tmp_path / "nope.gptc")], capsys)
    assert code == 2 and "cannot read" in err


def test_eval_demo_probability(capsys):
    code, out, _ = run(["eval", str(DEMOS / "bell.gptc"), "--bind", str(DEMOS / "bell.bind")],
                       capsys)
    assert code == 0
    assert out.splitlines()[0] == "0.250000000000"
    assert out.splitlines()[1].startswith("schedule: ")


def test_eval_records(capsys):
    code, out, _ = run(["eval", str(DEMOS / "hadamard.gptc"), "--bind",
                        str(DEMOS / "hadamard.bind"), "--format", "records"], capsys)
    rec = json.loads(out)
    assert code == 0 and rec["probability"] == pytest.approx(1.0)
    assert rec["theory"] == "quantum:2"


def test_eval_classical_die(capsys):
    code, out, _ = run(["eval", str(DEMOS / "die_coin.gptc"), "--theory", "classical:6",
                        "--bind", str(DEMOS / "die_coin.bind")], capsys)
    assert code == 0 and out.startswith("1.000000000000")


def test_eval_lists_unbound(capsys, tmp_path):
    b = tmp_path / "partial.bind"
    b.write_text("P = prep:z+\n")
    code, _, err = run(["eval", str(DEMOS / "hadamard.gptc"), "--bind", str(b)], capsys)
    assert code == 2 and "E, H" in err


def test_check_selected_suites(capsys):
    code, out, _ = run(["check", "classical:3", "p2", "p4", "wootters"], capsys)
    assert code == 0
    assert "3 passed, 0 failed" in out


def test_check_failure_exit_code(capsys):
    code, out, _ = run(["check", "--theory", "classical:2", "p4"], capsys)
    assert code == 1 and out.startswith("FAIL p4:classical:2")


def test_check_manifest_accepts_expected_failures(capsys):
    code, out, _ = run(["check", "classical:2", "--expect", str(DEMOS / "expected.manifest")],
                       capsys)
    assert code == 0 and "(expected)" in out


def test_check_unknown_suite(capsys):
    code, _, err = run(["check", "quantum:2", "p9"], capsys)
    assert code == 2 and "UnknownSuite" in err


def test_check_unavailable_becomes_failed_record(capsys):
    code, out, _ = run(["check", "quantum:3", "teleport", "--format", "records"], capsys)
    rec = json.loads(out)
    assert code == 1 and rec["pass"] is False and "ConstructionUnavailable" in rec["notes"]


def test_check_records_are_sorted_and_reproducible(capsys, monkeypatch):
    monkeypatch.setenv("GPTC_SEED", "31")
    _, first, _ = run(["check", "quantum:2", "p1", "p5", "--format", "records",
                       "--samples", "50"], capsys)
    _, second, _ = run(["check", "quantum:2", "p5", "p1", "--format", "records",
                        "--samples", "50"], capsys)
    assert first == second
    recs = [json.loads(line) for line in first.splitlines()]
    assert [r["id"] for r in recs] == sorted(r["id"] for r in recs)
    assert all(r["seed"] == 31 for r in recs)


def test_bad_seed_env(capsys, monkeypatch):
    monkeypatch.setenv("GPTC_SEED", "abc")
    code, _, err = run(["check", "quantum:2", "p2"], capsys)
    assert code == 2 and "GPTC_SEED" in err


def test_usage_errors(capsys):
    assert main([]) == 2
    assert main(["eval", "x.gptc"]) == 2
    capsys.readouterr()


def test_binding_and_manifest_parsers():
    assert read_binding_file("# c\nA = prep:z+  # note\n\nB=effect:unit") == {
        "A": "prep:z+", "B": "effect:unit"}
    with pytest.raises(GptcError):
        read_binding_file("A prep")
    rules = read_manifest("p4:* fail\np4:quantum:* pass\n")
    assert not expected_pass("p4:classical:2:a:10", rules)
    assert expected_pass("p4:quantum:2:a:10", rules)
    assert expected_pass("p1:classical:2:a", rules)
    with pytest.raises(GptcError):
        read_manifest("p4 maybe")
