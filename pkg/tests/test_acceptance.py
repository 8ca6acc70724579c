"""One test per acceptance criterion; the summary hook prints PASS/FAIL per criterion."""
import subprocess
import sys

import numpy as np
import pytest

from gptc.constructions import build_filter, run_teleportation_suite
from gptc.notation import parse, render
from gptc.postulates import (
    build_face,
    check_p1,
    check_p2,
    check_p3,
    check_p4_compound,
    check_p5,
    wootters_verify,
)
from gptc.tensor import circuit_probability
from gptc.theories import classical_theory, load_tabular_theory, quantum_theory
from gptc.theories.quantum import QuantumOperation, gate, oracle_probability, random_circuit

FRAGMENT_E = ("A^{c1b2d3}_{b15c16} B_{c4a5c1}^{b6a7} "
              "C_{a7b2d3b8}^{a9c10d11} B_{c12a9c10}^{b13a14}")
CIRCUIT_H = "A^{a1a2b3} B^{a4c7} C_{a1}^{d5} D_{b3a4}^{c6} E_{d5a2c6c7}"


def _shape(fragment):
    return (len(fragment.ops), len(fragment.wires),
            len(fragment.open_inputs) + len(fragment.open_outputs))


@pytest.mark.criterion(1)
def test_criterion_1_parser_golden():
    e, h = parse(FRAGMENT_E), parse(CIRCUIT_H)
    problems = []
    if _shape(e) != (4, 4, 7):
        problems.append(f"fragment E has shape {_shape(e)}, expected (4, 4, 7)")
    if _shape(h) != (5, 7, 0):
        problems.append(f"circuit H has shape {_shape(h)}, expected (5, 7, 0)")
    for name, f in (("E", e), ("H", h)):
        if parse(render(f)) != f:
            problems.append(f"{name} does not survive a render/parse round trip")
    assert not problems, "; ".join(problems)


@pytest.mark.criterion(2)
def test_criterion_2_oracle_equivalence():
    rng = np.random.default_rng(20240611)
    worst = 0.0
    theories = {2: quantum_theory(2), 3: quantum_theory(3)}
    for i in range(1000):
        N = 2 + i % 2
        th = theories[N]
        circuit, qops = random_circuit(rng, N, depth=int(rng.integers(1, 5)))
        binding = {j: th.embed(q, op.inputs, op.outputs)
                   for j, (q, op) in enumerate(zip(qops, circuit.ops))}
        p = circuit_probability(circuit, binding)
        oracle = oracle_probability(circuit, dict(enumerate(qops)))
        worst = max(worst, abs(p - oracle))
    assert worst < 1e-9, f"max deviation {worst:.3e}"


@pytest.mark.criterion(3)
def test_criterion_3_maximal_set_distinguishability():
    rng = np.random.default_rng(3)
    worst = 0.0
    for make in (classical_theory, quantum_theory):
        for N in (2, 3, 4):
            th = make(N)
            a = th.system("a")
            sets = [th.canonical_maximal_set(a), th.random_maximal_set(a, rng)]
            for m in sets:
                worst = max(worst, float(np.max(np.abs(m.effects @ m.states.T - np.eye(N)))))
    assert worst < 1e-9, f"duality residual {worst:.3e}"


@pytest.mark.criterion(4)
def test_criterion_4_composites():
    cl = classical_theory(6)
    die, coin = cl.system("d", 6), cl.system("c", 2)
    p2 = check_p2(cl, die, coin)
    assert p2.details["N_ab"] == 12 and p2.passed
    q = quantum_theory(2)
    a, b = q.system("a"), q.system("b")
    p3 = check_p3(q, a, b)
    assert p3.details["K_ab"] == 16 == a.K * b.K
    assert p3.details["product_effect_rank"] == 16 and p3.passed


@pytest.mark.criterion(5)
def test_criterion_5_teleportation():
    rep = run_teleportation_suite(quantum_theory(2))
    assert abs(rep.factor - 0.125) < 1e-9
    assert rep.identity_residual < 1e-9
    assert abs(rep.trace - 0.5) < 1e-9 and rep.K == 4
    assert rep.closed_loop <= 0.5 + 1e-9
    assert abs(rep.closed_loop - 0.5) < 1e-9
    assert abs(rep.oracle_loop - 0.5) < 1e-9
    assert rep.k_bound == pytest.approx(4.0, abs=1e-9)
    assert all(r.passed for r in rep.reports())


@pytest.mark.criterion(6)
def test_criterion_6_filter_semantics():
    q = quantum_theory(3)
    a = q.system("a")
    mset = q.canonical_maximal_set(a)
    # outcomes {1, 2} under both 1-based and 0-based labelling
    for subset in ((0, 1), (1, 2)):
        face = build_face(q, mset, subset)
        F, report = build_filter(q, face)
        M = F.matrix
        assert np.max(np.abs(M - q.direct_filter(mset, subset))) < 1e-9
        assert np.max(np.abs(M @ face.basis - face.basis)) < 1e-9
        complement = build_face(q, mset, face.complement)
        assert np.max(np.abs(M @ complement.basis)) < 1e-9
        p5 = check_p5(q, face, M, seed=1729)
        assert len(p5.details["sets"]) >= 20
        assert p5.passed, p5.summary()
        assert report.passed


@pytest.mark.criterion(7)
def test_criterion_7_classical_exclusion():
    c2 = check_p4_compound(classical_theory(2), perm=(1, 0))
    assert not c2.passed
    assert c2.details.get("group_size") == 2 or "exhaustive" in c2.notes

    q = quantum_theory(2)
    a = q.system("a")
    q2 = check_p4_compound(q, a, (1, 0))
    assert q2.passed
    R1, R2 = q2.witness["R1"], q2.witness["R2"]
    sigma_x = q.embed(QuantumOperation.unitary(gate("X", (2,)), (2,)), (a,), (a,)).matrix
    assert np.max(np.abs(R2 @ R1 - sigma_x)) < 1e-10

    assert check_p4_compound(classical_theory(3), perm=(1, 2, 0)).passed


@pytest.mark.criterion(8)
def test_criterion_8_wootters():
    assert wootters_verify([(2, 4), (3, 9), (4, 16)]).r == 2
    assert wootters_verify([(2, 2), (3, 3), (6, 6)]).r == 1
    bad = wootters_verify([(2, 3)])
    assert not bad.consistent and bad.witness is not None


@pytest.mark.criterion(9)
def test_criterion_9_p1():
    for make in (classical_theory, quantum_theory):
        for N in (2, 3):
            r = check_p1(make(N), n_samples=500, seed=1729)
            assert r.passed, r.summary()
    g = check_p1(load_tabular_theory("gbit-square"))
    assert not g.passed and g.witness is not None


@pytest.mark.criterion(10)
def test_criterion_10_headless_deterministic():
    cmd = [sys.executable, "-m", "gptc.cli", "check", "quantum:2", "all",
           "--format", "records", "--seed", "99"]
    runs = [subprocess.run(cmd, capture_output=True) for _ in range(2)]
    assert runs[0].stdout and runs[0].stdout == runs[1].stdout
    assert runs[0].returncode == 0, runs[0].stderr.decode()
    other = subprocess.run(cmd[:-1] + ["100"], capture_output=True)
    assert b'"seed": 100' in other.stdout
