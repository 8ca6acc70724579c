"""Finite-dimensional quantum theory over an informationally complete frame.

The fiducial results for an ``N``-level system are ``K = N**2`` rank-one
projectors.  For each pair ``i < j`` come the projectors onto
``(|i> + |j>)/sqrt2`` and ``(|i> + i|j>)/sqrt2``, and then the diagonal
projectors ``|i><i|``.  For a qubit this is exactly ``(x+, y+, z+, z-)``.
The fiducial probabilities are raw projector expectations, so the frame
overlaps and is not itself a measurement.

A state's vector is ``p_k = Tr(F_k rho)``.  With the dual operators ``D_l``
(``Tr(F_k D_l) = delta_kl``) an effect ``E`` has covector
``r_l = Tr(E D_l)`` and a channel has matrix ``T[k, l] = Tr(F_k Phi(D_l))``.
Composite systems use Kronecker products of the part frames.

:func:`oracle_probability` evaluates circuits directly on density matrices
with Kraus operators.  It never touches the frame and serves as the
independent reference for the contraction engine.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from math import prod
from typing import Mapping, Sequence

import numpy as np
import scipy.linalg

from ..errors import (
    ConstructionUnavailable,
    NonPhysicalOperator,
    NotAState,
    ShapeMismatch,
    UnboundOperation,
    UnknownReference,
)
from ..ir import Fragment, Operation, SystemType, Wire
from ..linalg import dagger, haar_unitary, haar_vector, numerical_rank, permutation_matrix
from ..tensor import GptTensor
from .base import MaximalSet, Theory
from .resolve import resolve_common

PHYSICAL_TOLERANCE = 1e-9
PURITY_TOLERANCE = 1e-8


# -- frames ---------------------------------------------------------------------

def _single_frame(N: int) -> np.ndarray:
    ops = []
    for i in range(N):
        for j in range(i + 1, N):
            for phase in (1.0, 1.0j):
                v = np.zeros(N, complex)
                v[i], v[j] = 1 / np.sqrt(2), phase / np.sqrt(2)
                ops.append(np.outer(v, v.conj()))
    for i in range(N):
        e = np.zeros((N, N), complex)
        e[i, i] = 1
        ops.append(e)
    return np.array(ops)


class QuantumFrame:
    """Frame operators ``F`` and their duals ``D`` for a list of Hilbert dimensions."""

    def __init__(self, dims: tuple[int, ...]):
        self.dims = dims
        self.n = prod(dims)
        F, D = np.ones((1, 1, 1), complex), np.ones((1, 1, 1), complex)
        for N in dims:
            f, d = _single_dual(N)
            F = np.einsum("kab,lcd->klacbd", F, f).reshape(
                F.shape[0] * f.shape[0], F.shape[1] * N, F.shape[2] * N)
            D = np.einsum("kab,lcd->klacbd", D, d).reshape(
                D.shape[0] * d.shape[0], D.shape[1] * N, D.shape[2] * N)
        self.F, self.D = F, D
        self.K = F.shape[0]

    def state_vector(self, rho) -> np.ndarray:
        return np.real(np.einsum("kab,ba->k", self.F, rho))

    def state_operator(self, p) -> np.ndarray:
        return np.einsum("k,kab->ab", np.asarray(p, dtype=float), self.D)

    def effect_covector(self, E) -> np.ndarray:
        return np.real(np.einsum("ab,kba->k", E, self.D))

    def effect_operator(self, r) -> np.ndarray:
        return np.einsum("k,kab->ab", np.asarray(r, dtype=float), self.F)


@lru_cache(maxsize=None)
def _single_dual(N: int) -> tuple[np.ndarray, np.ndarray]:
    F = _single_frame(N)
    A = np.conj(F.reshape(N * N, N * N))
    D = np.linalg.inv(A).T.reshape(N * N, N, N)
    return F, D


@lru_cache(maxsize=None)
def quantum_frame(dims: tuple[int, ...]) -> QuantumFrame:
    return QuantumFrame(tuple(dims))


def frame_operators(N: int) -> np.ndarray:
    return _single_dual(N)[0].copy()


# -- operator-form operations --------------------------------------------------

def _hermitian_check(m, what):
    if np.max(np.abs(m - dagger(m)), initial=0) > PHYSICAL_TOLERANCE:
        raise NonPhysicalOperator(f"{what} is not Hermitian")


@dataclass(frozen=True, eq=False)
class QuantumOperation:
    """Kraus operators from the joint input space to the joint output space."""

    kraus: tuple[np.ndarray, ...]
    in_dims: tuple[int, ...] = ()
    out_dims: tuple[int, ...] = ()

    def __post_init__(self):
        din, dout = prod(self.in_dims), prod(self.out_dims)
        ks = tuple(np.asarray(k, dtype=complex).reshape(dout, din) for k in self.kraus)
        object.__setattr__(self, "kraus", ks)
        object.__setattr__(self, "in_dims", tuple(self.in_dims))
        object.__setattr__(self, "out_dims", tuple(self.out_dims))
        total = sum((dagger(k) @ k for k in ks), np.zeros((din, din), complex))
        if np.linalg.eigvalsh(total).max(initial=0) > 1 + PHYSICAL_TOLERANCE:
            raise NonPhysicalOperator("sum of K^dag K exceeds the identity")

    @classmethod
    def state(cls, rho, dims: Sequence[int]) -> "QuantumOperation":
        rho = np.asarray(rho, dtype=complex)
        _hermitian_check(rho, "density matrix")
        w, v = np.linalg.eigh(rho)
        if w.min() < -PHYSICAL_TOLERANCE:
            raise NonPhysicalOperator(f"density matrix has eigenvalue {w.min():g}")
        if w.sum() > 1 + PHYSICAL_TOLERANCE:
            raise NonPhysicalOperator(f"density matrix has trace {w.sum():g} > 1")
        cols = [np.sqrt(max(x, 0.0)) * v[:, [i]] for i, x in enumerate(w) if x > 0]
        return cls(tuple(cols) or (np.zeros((rho.shape[0], 1)),), (), tuple(dims))

    @classmethod
    def pure(cls, psi, dims: Sequence[int]) -> "QuantumOperation":
        psi = np.asarray(psi, dtype=complex).reshape(-1, 1)
        return cls.state(psi @ dagger(psi), dims)

    @classmethod
    def effect(cls, E, dims: Sequence[int]) -> "QuantumOperation":
        E = np.asarray(E, dtype=complex)
        _hermitian_check(E, "effect")
        w, v = np.linalg.eigh(E)
        if w.min() < -PHYSICAL_TOLERANCE or w.max() > 1 + PHYSICAL_TOLERANCE:
            raise NonPhysicalOperator(f"effect eigenvalues [{w.min():g}, {w.max():g}] not in [0, 1]")
        rows = [np.sqrt(max(x, 0.0)) * dagger(v[:, [i]]) for i, x in enumerate(w) if x > 0]
        return cls(tuple(rows) or (np.zeros((1, E.shape[0])),), tuple(dims), ())

    @classmethod
    def channel(cls, kraus, in_dims, out_dims=None) -> "QuantumOperation":
        return cls(tuple(kraus), tuple(in_dims), tuple(in_dims if out_dims is None else out_dims))

    @classmethod
    def unitary(cls, U, dims) -> "QuantumOperation":
        return cls.channel([U], dims)

    def apply(self, rho) -> np.ndarray:
        return sum(k @ rho @ dagger(k) for k in self.kraus)

    def operator(self) -> np.ndarray:
        """Density matrix of a preparation, or the POVM element of an effect."""
        if not self.in_dims:
            return self.apply(np.ones((1, 1)))
        if not self.out_dims:
            return sum(dagger(k) @ k for k in self.kraus)
        raise ValueError("transformations have no single operator")


def oracle_probability(circuit: Fragment, binding: Mapping) -> float:
    """Circuit probability by density-matrix simulation in topological order."""
    if not circuit.is_circuit:
        raise ShapeMismatch("the oracle evaluates closed circuits only")
    qops, missing = [], []
    for i, op in enumerate(circuit.ops):
        q = binding.get(i, binding.get(op.name))
        if q is None:
            missing.append(op.name)
        elif (tuple(t.N for t in op.inputs) != q.in_dims
              or tuple(t.N for t in op.outputs) != q.out_dims):
            raise ShapeMismatch(f"{op.name}: operator dimensions do not match its ports")
        qops.append(q)
    if missing:
        raise UnboundOperation(sorted(set(missing)))

    rho = np.ones((1, 1), complex)
    dims: list[int] = []
    labels: list[Wire] = []
    for i in circuit.topological_order():
        q = qops[i]
        ins = [circuit.wire_at_input((i, p)) for p in range(len(q.in_dims))]
        pos = [labels.index(w) for w in ins]
        rest = [k for k in range(len(labels)) if k not in pos]
        n = len(dims)
        order = pos + rest
        R = rho.reshape(dims + dims).transpose(order + [n + k for k in order]) if n else rho
        din, drest = prod(dims[k] for k in pos), prod(dims[k] for k in rest)
        R = R.reshape(din, drest, din, drest)
        new = sum(np.einsum("ai,ibjc,dj->abdc", k, R, k.conj()) for k in q.kraus)
        dout = prod(q.out_dims)
        labels = [circuit.wire_at_output((i, p)) for p in range(len(q.out_dims))] + \
                 [labels[k] for k in rest]
        dims = list(q.out_dims) + [dims[k] for k in rest]
        rho = new.reshape(dout * drest, dout * drest)
    return float(np.real(np.trace(rho)))


# -- named bases and gates ---------------------------------------------------------

def fourier_basis(N: int) -> np.ndarray:
    w = np.exp(2j * np.pi / N)
    return np.array([[w ** (i * j) for j in range(N)] for i in range(N)]) / np.sqrt(N)


def named_basis(name: str, N: int) -> np.ndarray:
    if name == "z":
        return np.eye(N, dtype=complex)
    if name == "x":
        return fourier_basis(N)
    if name == "y":
        return np.diag([1j ** k for k in range(N)]) @ fourier_basis(N)
    raise UnknownReference(f"unknown basis {name!r}")


_QUBIT_GATES = {
    "H": np.array([[1, 1], [1, -1]]) / np.sqrt(2),
    "X": np.array([[0, 1], [1, 0]]),
    "Y": np.array([[0, -1j], [1j, 0]]),
    "Z": np.diag([1, -1]),
    "S": np.diag([1, 1j]),
    "T": np.diag([1, np.exp(1j * np.pi / 4)]),
}


def gate(name: str, dims: Sequence[int]) -> np.ndarray:
    dims = tuple(dims)
    if name in _QUBIT_GATES and dims == (2,):
        return _QUBIT_GATES[name].astype(complex)
    if name == "CNOT" and len(dims) == 2 and dims[0] == dims[1]:
        N = dims[0]
        perm = [i * N + (j + i) % N for i in range(N) for j in range(N)]
        return permutation_matrix(perm).astype(complex)
    if name == "SWAP" and len(dims) == 2 and dims[0] == dims[1]:
        N = dims[0]
        return permutation_matrix([j * N + i for i in range(N) for j in range(N)]).astype(complex)
    if name == "F":
        return fourier_basis(prod(dims))
    raise UnknownReference(f"no gate {name!r} on dimensions {dims}")


def bell_vector(N: int) -> np.ndarray:
    return np.eye(N).reshape(-1).astype(complex) / np.sqrt(N)


# -- theory -------------------------------------------------------------------

def _dims(t: SystemType) -> tuple[int, ...]:
    if t.parts:
        return tuple(d for p in t.parts for d in _dims(p))
    return (t.N,)


def _dims_of(types) -> tuple[int, ...]:
    if isinstance(types, SystemType):
        types = (types,)
    return tuple(d for t in types for d in _dims(t))


def _types(types) -> tuple[SystemType, ...]:
    return (types,) if isinstance(types, SystemType) else tuple(types)


class QuantumTheory(Theory):
    def __init__(self, N: int = 2):
        super().__init__()
        if N < 1:
            raise ValueError("N must be at least 1")
        self.default_N = N
        self.name = f"quantum:{N}"

    def k_of(self, N: int) -> int:
        return N * N

    def frame(self, types) -> QuantumFrame:
        return quantum_frame(_dims_of(types))

    # -- embedding ----------------------------------------------------------------

    def embed(self, op: QuantumOperation, inputs=(), outputs=()) -> GptTensor:
        inputs, outputs = _types(inputs), _types(outputs)
        if op.in_dims != _dims_of(inputs) or op.out_dims != _dims_of(outputs):
            raise ShapeMismatch(
                f"operation maps {op.in_dims} -> {op.out_dims}, ports are "
                f"{_dims_of(inputs)} -> {_dims_of(outputs)}")
        f_in, f_out = self.frame(inputs), self.frame(outputs)
        phi_d = sum(np.einsum("ai,lij,bj->lab", k, f_in.D, k.conj()) for k in op.kraus)
        T = np.real(np.einsum("kba,lab->kl", f_out.F, phi_d))
        return GptTensor(T, outputs, inputs)

    def embed_state(self, rho, systems) -> GptTensor:
        return self.embed(QuantumOperation.state(rho, _dims_of(systems)), (), systems)

    def embed_effect(self, E, systems) -> GptTensor:
        return self.embed(QuantumOperation.effect(E, _dims_of(systems)), systems, ())

    def embed_channel(self, kraus, inputs, outputs=None) -> GptTensor:
        outputs = inputs if outputs is None else outputs
        op = QuantumOperation.channel(kraus, _dims_of(inputs), _dims_of(outputs))
        return self.embed(op, inputs, outputs)

    def embed_linear_map(self, phi, inputs, outputs=None) -> GptTensor:
        """Matrix of an arbitrary linear map on operators (no positivity checks)."""
        outputs = inputs if outputs is None else outputs
        f_in, f_out = self.frame(inputs), self.frame(outputs)
        T = np.array([[np.real(np.trace(Fk @ phi(Dl))) for Dl in f_in.D] for Fk in f_out.F])
        return GptTensor(T, _types(outputs), _types(inputs))

    def state_operator(self, t, p) -> np.ndarray:
        return self.frame(t).state_operator(p)

    def effect_operator(self, t, r) -> np.ndarray:
        return self.frame(t).effect_operator(r)

    def pure_vector(self, psi, t) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        return self.frame(t).state_vector(np.outer(psi, psi.conj()))

    def projector_covector(self, psi, t) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        return self.frame(t).effect_covector(np.outer(psi, psi.conj()))

    # -- states and effects --------------------------------------------------------

    def unit_effect(self, t) -> np.ndarray:
        return self.frame(t).effect_covector(np.eye(self.frame(t).n))

    def basis_maximal_set(self, t, V, label="") -> MaximalSet:
        V = np.asarray(V, dtype=complex)
        states = [self.pure_vector(V[:, n], t) for n in range(V.shape[1])]
        effects = [self.projector_covector(V[:, n], t) for n in range(V.shape[1])]
        return MaximalSet(t, np.array(states), np.array(effects), label, V)

    def canonical_maximal_set(self, t) -> MaximalSet:
        return self.basis_maximal_set(t, np.eye(self.frame(t).n), "z")

    def named_maximal_set(self, t, name: str) -> MaximalSet:
        return self.basis_maximal_set(t, named_basis(name, self.frame(t).n), name)

    def random_maximal_set(self, t, rng) -> MaximalSet:
        return self.basis_maximal_set(t, haar_unitary(rng, self.frame(t).n), "haar")

    def sample_pure_state(self, t, rng) -> np.ndarray:
        return self.pure_vector(haar_vector(rng, self.frame(t).n), t)

    def sample_maximal_effect(self, t, rng) -> np.ndarray:
        return self.projector_covector(haar_vector(rng, self.frame(t).n), t)

    def effect_distance(self, t, e1, e2) -> float:
        d = self.effect_operator(t, np.asarray(e1) - np.asarray(e2))
        return float(np.linalg.norm(d, 2))

    def state_distance(self, t, s1, s2) -> float:
        d = self.state_operator(t, np.asarray(s1) - np.asarray(s2))
        return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((d + dagger(d)) / 2))))

    def _top_vector(self, m) -> np.ndarray:
        w, v = np.linalg.eigh((m + dagger(m)) / 2)
        return v[:, -1]

    def _tilted(self, psi, eps, rng, count):
        n = len(psi)
        out = []
        for _ in range(count):
            phi = haar_vector(rng, n)
            phi = phi - psi * np.vdot(psi, phi)
            if n == 1 or np.linalg.norm(phi) < 1e-12:
                out.append(psi)
                continue
            phi /= np.linalg.norm(phi)
            out.append(np.sqrt(1 - eps) * psi + np.sqrt(eps) * phi)
        return out

    def maximal_effects_near(self, t, state, eps, rng, count=8):
        psi = self._top_vector(self.state_operator(t, state))
        return np.array([self.projector_covector(v, t) for v in self._tilted(psi, eps, rng, count)])

    def pure_states_near(self, t, effect, eps, rng, count=8):
        psi = self._top_vector(self.effect_operator(t, effect))
        return np.array([self.pure_vector(v, t) for v in self._tilted(psi, eps, rng, count)])

    def matching_maximal_effect(self, t, state):
        psi = self._top_vector(self.state_operator(t, state))
        e = self.projector_covector(psi, t)
        return e if e @ state >= 1 - PHYSICAL_TOLERANCE else None

    def matching_pure_state(self, t, effect):
        psi = self._top_vector(self.effect_operator(t, effect))
        s = self.pure_vector(psi, t)
        return s if effect @ s >= 1 - PHYSICAL_TOLERANCE else None

    def is_pure(self, t, state) -> bool:
        rho = self.state_operator(t, state)
        w = np.linalg.eigvalsh((rho + dagger(rho)) / 2)
        if w[0] < -PURITY_TOLERANCE:
            raise NotAState(f"reconstructed operator has eigenvalue {w[0]:g}")
        if w.sum() <= PURITY_TOLERANCE:
            return False
        return bool(w[-1] >= w.sum() - PURITY_TOLERANCE)

    def spanning_states(self, t) -> np.ndarray:
        f = self.frame(t)
        return np.array([f.state_vector(F / np.real(np.trace(F))) for F in f.F])

    # -- transformations ---------------------------------------------------------

    def _basis(self, mset: MaximalSet) -> np.ndarray:
        if mset.basis is not None:
            return mset.basis
        cols = [self._top_vector(self.state_operator(mset.system, s)) for s in mset.states]
        return np.array(cols).T

    def permutation_unitary(self, mset, perm) -> np.ndarray:
        V = self._basis(mset)
        return V @ permutation_matrix(perm) @ dagger(V)

    def unitary_transform(self, U, t) -> GptTensor:
        return self.embed_channel([U], t)

    def permutation_transform(self, mset, perm):
        U = self.permutation_unitary(mset, perm)
        T = self.unitary_transform(U, mset.system).matrix
        T_inv = self.unitary_transform(dagger(U), mset.system).matrix
        return T, T_inv

    def compound_witness(self, mset, perm):
        U = self.permutation_unitary(mset, perm)
        R = scipy.linalg.sqrtm(U)
        t = mset.system
        eye = np.eye(t.K)
        T_R = self.unitary_transform(R, t).matrix
        if np.linalg.norm(T_R - eye) > 1e-6:
            return T_R, T_R
        # U is a phase times the identity: split it with a non-trivial diagonal phase
        V = self._basis(mset)
        n = V.shape[0]
        if n == 1:
            return None
        D = V @ np.diag([1j ** k for k in range(n)]) @ dagger(V)
        return self.unitary_transform(D, t).matrix, self.unitary_transform(U @ dagger(D), t).matrix

    def product_effect_rank(self, a, b) -> int:
        fa, fb = self.frame(a), self.frame(b)
        rows = [np.kron(x, y).reshape(-1) for x in fa.F for y in fb.F]
        return numerical_rank(np.array(rows))

    # -- faces -------------------------------------------------------------------

    def face_vectors(self, mset, subset) -> list[np.ndarray]:
        V = self._basis(mset)
        subset = sorted(subset)
        vecs = [V[:, i] for i in subset]
        for x, i in enumerate(subset):
            for j in subset[x + 1:]:
                for phase in (1.0, 1.0j):
                    vecs.append((V[:, i] + phase * V[:, j]) / np.sqrt(2))
        return vecs

    def face_basis(self, mset, subset) -> np.ndarray:
        return np.array([self.pure_vector(v, mset.system)
                         for v in self.face_vectors(mset, subset)]).T

    def smallest_face_dim(self, t, states) -> int:
        states = np.atleast_2d(np.asarray(states))
        ops = [self.state_operator(t, s) for s in states]
        w = numerical_rank(np.hstack(ops), rtol=1e-8, atol=1e-10)
        return w * w

    def face_projector(self, mset, subset) -> np.ndarray:
        V = self._basis(mset)
        cols = V[:, sorted(subset)]
        return cols @ dagger(cols)

    def direct_filter(self, mset, subset) -> np.ndarray:
        return self.embed_channel([self.face_projector(mset, subset)], mset.system).matrix

    def sample_face_state(self, mset, subset, rng) -> np.ndarray:
        V = self._basis(mset)[:, sorted(subset)]
        return self.pure_vector(V @ haar_vector(rng, V.shape[1]), mset.system)

    # -- random operations -----------------------------------------------------------

    def random_quantum_operation(self, inputs, outputs, rng) -> QuantumOperation:
        din, dout = _dims_of(inputs), _dims_of(outputs)
        n_in, n_out = prod(din), prod(dout)
        if not dout:
            U = haar_unitary(rng, n_in)
            E = U @ np.diag(rng.uniform(size=n_in)) @ dagger(U)
            return QuantumOperation.effect(E, din)
        if not din:
            return QuantumOperation.pure(haar_vector(rng, n_out), dout)
        r = -(-n_in // n_out) + 1
        iso = haar_unitary(rng, n_out * r)[:, :n_in]
        kraus = [iso[k * n_out:(k + 1) * n_out] for k in range(r)]
        return QuantumOperation.channel(kraus, din, dout)

    def random_operation(self, inputs, outputs, rng) -> GptTensor:
        op = self.random_quantum_operation(inputs, outputs, rng)
        return self.embed(op, inputs, outputs)

    # -- named objects -----------------------------------------------------------------

    def teleportation_ingredients(self, t: SystemType | None = None):
        t = t or self.system("a")
        if t.N != 2:
            raise ConstructionUnavailable("the teleportation circuits are built for qubits only")
        plus = np.array([1, 1], complex) / np.sqrt(2)
        bell = bell_vector(2)
        zero = np.array([1, 0], complex)
        cnot = gate("CNOT", (2, 2))
        quantum = {
            "B": QuantumOperation.pure(plus, (2,)),
            "Mp": QuantumOperation.pure(bell, (2, 2)),
            "Me": QuantumOperation.effect(np.outer(bell, bell.conj()), (2, 2)),
            "P": QuantumOperation.unitary(cnot, (2, 2)),
            "One": QuantumOperation.effect(np.outer(zero, zero.conj()), (2,)),
        }
        ports = {"B": ((), (t,)), "Mp": ((), (t, t)), "Me": ((t, t), ()),
                 "P": ((t, t), (t, t)), "One": ((t,), ())}
        tensors = {k: self.embed(q, *ports[k]) for k, q in quantum.items()}
        return tensors, quantum

    def resolve_operation(self, ref: str, inputs, outputs) -> QuantumOperation:
        din, dout = _dims_of(inputs), _dims_of(outputs)
        kind, _, name = ref.partition(":")
        if kind in ("prep", "effect") and name:
            dims = dout if kind == "prep" else din
            if (kind == "prep" and (din or not dout)) or (kind == "effect" and (dout or not din)):
                raise UnknownReference(f"{ref} does not fit an operation with these ports")
            psi = self._named_vector(name, dims, ref)
            if psi is None:
                if name == "mixed":
                    n = prod(dims)
                    if kind == "prep":
                        return QuantumOperation.state(np.eye(n) / n, dims)
                raise UnknownReference(f"{self.name} does not know {ref!r}")
            if kind == "prep":
                return QuantumOperation.pure(psi, dims)
            return QuantumOperation.effect(np.outer(psi, psi.conj()), dims)
        if kind == "channel":
            if din != dout:
                raise UnknownReference(f"{ref} needs matching input and output ports")
            if name == "depolarize":
                n = prod(din)
                kraus = [np.outer(np.eye(n)[i], np.eye(n)[j]) / np.sqrt(n)
                         for i in range(n) for j in range(n)]
                return QuantumOperation.channel(kraus, din)
            m = re.fullmatch(r"unitary:(\w+)", name)
            if m:
                return QuantumOperation.unitary(gate(m.group(1), din), din)
        raise UnknownReference(f"{self.name} does not know {ref!r}")

    def _named_vector(self, name, dims, ref):
        n = prod(dims)
        m = re.fullmatch(r"([xyz])([+-])", name)
        if m and dims == (2,):
            return named_basis(m.group(1), 2)[:, 0 if m.group(2) == "+" else 1]
        m = re.fullmatch(r"basis\[([xyz])\]:(\d+)", name)
        if m:
            k = int(m.group(2))
            if k >= n:
                raise UnknownReference(f"{ref}: index {k} out of range for dimension {n}")
            return named_basis(m.group(1), n)[:, k]
        if name == "bell" and len(dims) == 2 and dims[0] == dims[1]:
            return bell_vector(dims[0])
        return None

    def resolve(self, ref, inputs, outputs) -> GptTensor:
        inputs, outputs = tuple(inputs), tuple(outputs)
        found = resolve_common(self, ref, inputs, outputs)
        if found is not None:
            return found
        return self.embed(self.resolve_operation(ref, inputs, outputs), inputs, outputs)


# -- random circuits ---------------------------------------------------------------

def random_circuit(rng: np.random.Generator, N: int, depth: int | None = None,
                   width: int | None = None):
    """Random closed circuit with its operator-form binding.

    Wires start in random pure states (sometimes a joint pure state of two
    wires), pass through up to ``depth`` layers of random one- and two-wire
    unitaries and end in random basis measurements.  Returns the fragment and
    a list of :class:`QuantumOperation` indexed like ``fragment.ops``.
    """
    t = SystemType("a", N, N * N)
    width = int(width or rng.integers(1, 4))
    depth = int(rng.integers(1, 5) if depth is None else depth)
    ops: list[Operation] = []
    qops: list[QuantumOperation] = []
    wires: list[Wire] = []
    live: list[tuple[int, int]] = []

    def add(name, q, n_in, n_out, feeds):
        idx = len(ops)
        ops.append(Operation(f"{name}{idx}", (t,) * n_in, (t,) * n_out))
        qops.append(q)
        for p, port in enumerate(feeds):
            wires.append(Wire(port[0], port[1], idx, p))
        return idx

    w = 0
    while w < width:
        if width - w >= 2 and rng.random() < 0.3:
            i = add("E", QuantumOperation.pure(haar_vector(rng, N * N), (N, N)), 0, 2, [])
            live += [(i, 0), (i, 1)]
            w += 2
        else:
            i = add("S", QuantumOperation.pure(haar_vector(rng, N), (N,)), 0, 1, [])
            live.append((i, 0))
            w += 1

    for _ in range(depth):
        order = list(rng.permutation(width))
        nxt = list(live)
        while order:
            if len(order) >= 2 and rng.random() < 0.5:
                a, b = order.pop(), order.pop()
                U = haar_unitary(rng, N * N)
                i = add("U", QuantumOperation.unitary(U, (N, N)), 2, 2, [live[a], live[b]])
                nxt[a], nxt[b] = (i, 0), (i, 1)
            else:
                a = order.pop()
                i = add("U", QuantumOperation.unitary(haar_unitary(rng, N), (N,)), 1, 1, [live[a]])
                nxt[a] = (i, 0)
        live = nxt

    for port in live:
        V = haar_unitary(rng, N)
        v = V[:, int(rng.integers(N))]
        add("M", QuantumOperation.effect(np.outer(v, v.conj()), (N,)), 1, 0, [port])

    return Fragment(ops, wires), qops
