import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gptc.errors import ConstructionUnavailable, NonPhysicalOperator, UnknownReference
from gptc.linalg import haar_unitary, haar_vector
from gptc.notation import parse
from gptc.tensor import circuit_probability
from gptc.theories import quantum_theory
from gptc.theories.quantum import (
    QuantumOperation,
    frame_operators,
    gate,
    oracle_probability,
    quantum_frame,
)

PAULI = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.diag([1, -1])]


def test_types_table():
    assert quantum_theory(2).types_table() == [(1, 1), (2, 4), (3, 9), (4, 16)]


def test_qubit_frame_values():
    q = quantum_theory(2)
    a = q.system("a")
    zplus = np.diag([1, 0])
    assert np.allclose(q.embed_state(zplus, (a,)).vector, [0.5, 0.5, 1, 0])
    assert np.allclose(q.embed_state(np.eye(2) / 2, (a,)).vector, [0.5] * 4)
    xplus = np.full((2, 2), 0.5)
    assert np.allclose(q.embed_state(xplus, (a,)).vector, [1, 0.5, 0.5, 0.5])
    assert np.allclose(q.unit_effect(a) @ q.embed_state(zplus, (a,)).vector, 1)


def test_bloch_spot_check():
    """Embedded qubit states against the closed form p = ((1+x)/2, (1+y)/2, (1+z)/2, (1-z)/2)."""
    q = quantum_theory(2)
    a = q.system("a")
    rng = np.random.default_rng(1000)
    worst = 0.0
    for _ in range(1000):
        r = rng.normal(size=3)
        r *= rng.random() ** (1 / 3) / np.linalg.norm(r)
        rho = (np.eye(2) + sum(c * s for c, s in zip(r, PAULI))) / 2
        expected = [(1 + r[0]) / 2, (1 + r[1]) / 2, (1 + r[2]) / 2, (1 - r[2]) / 2]
        worst = max(worst, np.max(np.abs(q.embed_state(rho, (a,)).vector - expected)))
    assert worst < 1e-12


@pytest.mark.parametrize("N", [2, 3, 4])
def test_frame_is_informationally_complete(N):
    F = frame_operators(N)
    assert F.shape == (N * N, N, N)
    assert np.linalg.matrix_rank(F.reshape(N * N, -1)) == N * N
    fr = quantum_frame((N,))
    psi = haar_vector(np.random.default_rng(N), N)
    rho = np.outer(psi, psi.conj())
    assert np.allclose(fr.state_operator(fr.state_vector(rho)), rho)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([2, 3]))
def test_embedding_reproduces_born_rule(seed, N):
    q = quantum_theory(N)
    a = q.system("a")
    rng = np.random.default_rng(seed)
    psi, phi = haar_vector(rng, N), haar_vector(rng, N)
    U = haar_unitary(rng, N)
    born = abs(phi.conj() @ U @ psi) ** 2
    f = parse("S^{a1} T_{a1}^{a2} E_{a2}").retype({"a": a})
    binding = {"S": q.embed(QuantumOperation.pure(psi, (N,)), (), (a,)),
               "T": q.embed(QuantumOperation.unitary(U, (N,)), (a,), (a,)),
               "E": q.embed(QuantumOperation.effect(np.outer(phi, phi.conj()), (N,)), (a,), ())}
    assert circuit_probability(f, binding) == pytest.approx(born, abs=1e-12)


def test_composite_frame_is_kron():
    fr = quantum_frame((2, 3))
    f2, f3 = quantum_frame((2,)), quantum_frame((3,))
    assert np.allclose(fr.F, np.einsum("aij,bkl->abikjl", f2.F, f3.F).reshape(36, 6, 6))


def test_entangled_probability_matches_oracle():
    q = quantum_theory(2)
    a = q.system("a")
    f = parse("S^{a1 a2} U_{a1}^{a3} E_{a3} G_{a2}").retype({"a": a})
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    qops = {"S": QuantumOperation.pure(bell, (2, 2)),
            "U": QuantumOperation.unitary(gate("H", (2,)), (2,)),
            "E": QuantumOperation.effect(np.diag([1, 0]), (2,)),
            "G": QuantumOperation.effect(np.diag([0, 1]), (2,))}
    binding = {k: q.embed(v, op.inputs, op.outputs)
               for k, v in qops.items() for op in f.ops if op.name == k}
    expected = oracle_probability(f, qops)
    assert expected == pytest.approx(0.25)
    assert circuit_probability(f, binding) == pytest.approx(expected, abs=1e-12)


def test_rejects_unphysical_operators():
    with pytest.raises(NonPhysicalOperator):
        QuantumOperation.state(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(NonPhysicalOperator):
        QuantumOperation.effect(np.diag([2.0, 0.0]), (2,))
    with pytest.raises(NonPhysicalOperator):
        QuantumOperation.channel([np.eye(2), np.eye(2)], (2,))


def test_resolve_references():
    q = quantum_theory(2)
    a = q.system("a")
    s = q.resolve("prep:z+", (), (a,))
    e = q.resolve("effect:basis[x]:1", (a,), ())
    assert e.vector @ s.vector == pytest.approx(0.5)
    h = q.resolve("channel:unitary:H", (a,), (a,))
    x = q.resolve("prep:x+", (), (a,))
    assert np.allclose(h.matrix @ s.vector, x.vector)
    with pytest.raises(UnknownReference):
        q.resolve("prep:nonsense", (), (a,))
    with pytest.raises(UnknownReference):
        q.resolve("effect:z+", (), (a,))


def test_teleportation_needs_qubits():
    with pytest.raises(ConstructionUnavailable):
        quantum_theory(3).teleportation_ingredients()


def test_distances():
    q = quantum_theory(2)
    a = q.system("a")
    z0 = q.pure_vector(np.array([1, 0]), a)
    z1 = q.pure_vector(np.array([0, 1]), a)
    assert q.state_distance(a, z0, z1) == pytest.approx(1.0)
    assert q.is_pure(a, z0) and not q.is_pure(a, (z0 + z1) / 2)
