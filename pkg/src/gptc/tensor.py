"""Tensors over fiducial bases and circuit probabilities by contraction.

Every operation is represented by a real array with one axis of length ``K``
per port: output axes first, then input axes, each group in port order.  A
composite port list is flattened row-major, so index ``(i, j)`` of a pair of
ports maps to ``i * K_b + j`` in the matrix view.

The probability of a circuit is the full contraction of its operation
tensors over the wires.  Fragments contract to tensors whose axes are the
fragment's open outputs followed by its open inputs.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import NegativeWeight, ShapeMismatch, UnboundOperation
from .ir import Fragment, SystemType, Wire

PROBABILITY_SLACK = 1e-9
NULL_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class GptTensor:
    """Dense real tensor with typed output and input axes."""

    data: np.ndarray
    outputs: tuple[SystemType, ...] = ()
    inputs: tuple[SystemType, ...] = ()

    def __post_init__(self):
        outputs, inputs = tuple(self.outputs), tuple(self.inputs)
        for t in outputs + inputs:
            if t.K is None:
                raise ShapeMismatch(f"type {t.label} has no K; bind it to a theory first")
        shape = tuple(t.K for t in outputs + inputs)
        data = np.array(self.data, dtype=float)
        if data.size != prod(shape):
            raise ShapeMismatch(
                f"tensor has {data.size} entries but axes {shape} need {prod(shape)}")
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor entries must be finite")
        data = data.reshape(shape)
        data.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "outputs", outputs)
        object.__setattr__(self, "inputs", inputs)

    @classmethod
    def state(cls, vector, *systems: SystemType) -> "GptTensor":
        return cls(vector, outputs=systems)

    @classmethod
    def effect(cls, covector, *systems: SystemType) -> "GptTensor":
        return cls(covector, inputs=systems)

    @classmethod
    def transformation(cls, matrix, outputs, inputs) -> "GptTensor":
        return cls(matrix, outputs=tuple(outputs), inputs=tuple(inputs))

    @classmethod
    def identity(cls, system: SystemType) -> "GptTensor":
        return cls(np.eye(system.K), (system,), (system,))

    @property
    def matrix(self) -> np.ndarray:
        """Shape ``(prod K_out, prod K_in)``; states are columns, effects rows."""
        k_out = prod(t.K for t in self.outputs)
        k_in = prod(t.K for t in self.inputs)
        return self.data.reshape(k_out, k_in)

    @property
    def vector(self) -> np.ndarray:
        return self.data.reshape(-1)

    def __repr__(self):
        outs = ",".join(t.label for t in self.outputs)
        ins = ",".join(t.label for t in self.inputs)
        return f"GptTensor(out=[{outs}], in=[{ins}], shape={self.data.shape})"


def _as_vector(x) -> np.ndarray:
    return x.vector if isinstance(x, GptTensor) else np.asarray(x, dtype=float).reshape(-1)


# -- binding ------------------------------------------------------------------

def _lookup(fragment: Fragment, binding: Mapping) -> list[GptTensor]:
    tensors, missing = [], []
    for i, op in enumerate(fragment.ops):
        t = binding.get(i, binding.get(op.name))
        if t is None:
            missing.append(op.name)
            tensors.append(None)
            continue
        if len(t.inputs) != len(op.inputs) or len(t.outputs) != len(op.outputs):
            raise ShapeMismatch(
                f"{op.name} has {len(op.outputs)} outputs/{len(op.inputs)} inputs but its "
                f"tensor has {len(t.outputs)}/{len(t.inputs)}")
        for want, have in zip(op.inputs + op.outputs, t.inputs + t.outputs):
            if not want.compatible(have):
                raise ShapeMismatch(
                    f"{op.name}: port of type {want.label} bound to axis of type {have.label}"
                    f" (N={have.N}, K={have.K})")
        tensors.append(t)
    if missing:
        raise UnboundOperation(sorted(set(missing)))
    for w in fragment.wires:
        k_out = tensors[w.src].outputs[w.out].K
        k_in = tensors[w.dst].inputs[w.inp].K
        if k_out != k_in:
            raise ShapeMismatch(f"wire {w}: axis sizes {k_out} and {k_in} differ")
    return tensors


def _wire_sizes_from_types(fragment: Fragment) -> dict[Wire, int]:
    return {w: (fragment.output_type(w.producer).K or 2) for w in fragment.wires}


# -- schedules ----------------------------------------------------------------

class _Sizes:
    """Union-find over ops tracking the size of each merged node."""

    def __init__(self, fragment: Fragment, wire_size: Mapping[Wire, int]):
        self.node = list(range(len(fragment.ops)))
        self.members = {i: {i} for i in range(len(fragment.ops))}
        self.axes: dict[int, dict] = {}
        for i, op in enumerate(fragment.ops):
            ax = {}
            for p in range(len(op.outputs)):
                w = fragment.wire_at_output((i, p))
                ax[w if w is not None else ("o", i, p)] = (
                    wire_size[w] if w is not None else fragment.ops[i].outputs[p].K or 2)
            for p in range(len(op.inputs)):
                w = fragment.wire_at_input((i, p))
                ax[w if w is not None else ("i", i, p)] = (
                    wire_size[w] if w is not None else fragment.ops[i].inputs[p].K or 2)
            self.axes[i] = ax

    def merged_size(self, u, v) -> int:
        au, av = self.axes[u], self.axes[v]
        return prod(d for k, d in au.items() if k not in av) * \
            prod(d for k, d in av.items() if k not in au)

    def merge(self, u, v) -> int:
        au, av = self.axes[u], self.axes[v]
        merged = {k: d for k, d in au.items() if k not in av}
        merged.update({k: d for k, d in av.items() if k not in au})
        self.axes[u] = merged
        del self.axes[v]
        for op in self.members.pop(v):
            self.node[op] = u
            self.members[u].add(op)
        return prod(merged.values())


def naive_schedule(fragment: Fragment) -> list[Wire]:
    """Wires in left-to-right order of their producing ports."""
    return sorted(fragment.wires)


def schedule_peak(fragment: Fragment, schedule: Sequence[Wire],
                  sizes: Mapping[Wire, int] | None = None) -> int:
    """Largest intermediate tensor (entry count) produced by ``schedule``."""
    sizes = _wire_sizes_from_types(fragment) if sizes is None else sizes
    state = _Sizes(fragment, sizes)
    peak = 0
    for w in schedule:
        u, v = state.node[w.src], state.node[w.dst]
        if u != v:
            peak = max(peak, state.merge(u, v))
    return peak


def greedy_schedule(fragment: Fragment, sizes: Mapping[Wire, int] | None = None) -> list[Wire]:
    sizes = _wire_sizes_from_types(fragment) if sizes is None else sizes
    state = _Sizes(fragment, sizes)
    remaining = sorted(fragment.wires)
    schedule = []
    while remaining:
        best = None
        for pos, w in enumerate(remaining):
            u, v = state.node[w.src], state.node[w.dst]
            if u == v:
                continue
            key = (state.merged_size(u, v), pos)
            if best is None or key < best[0]:
                best = (key, w)
        w = best[1]
        state.merge(state.node[w.src], state.node[w.dst])
        schedule.append(w)
        remaining.remove(w)
        done = [x for x in remaining if state.node[x.src] == state.node[x.dst]]
        schedule.extend(done)
        remaining = [x for x in remaining if x not in done]
    return schedule


def contraction_schedule(fragment: Fragment,
                         sizes: Mapping[Wire, int] | None = None) -> list[Wire]:
    """Greedy smallest-intermediate ordering, never worse than the naive one."""
    sizes = _wire_sizes_from_types(fragment) if sizes is None else sizes
    greedy = greedy_schedule(fragment, sizes)
    naive = naive_schedule(fragment)
    if schedule_peak(fragment, greedy, sizes) <= schedule_peak(fragment, naive, sizes):
        return greedy
    return naive


# -- contraction ----------------------------------------------------------------

def _contract(fragment: Fragment, tensors: Sequence[GptTensor],
              schedule: Sequence[Wire] | None) -> tuple[np.ndarray, list]:
    wire_size = {w: tensors[w.src].outputs[w.out].K for w in fragment.wires}
    if schedule is None:
        schedule = contraction_schedule(fragment, wire_size)
    else:
        schedule = list(schedule)
        if len(schedule) != len(fragment.wires) or set(schedule) != fragment.wires:
            raise ValueError("schedule must list every wire of the fragment exactly once")

    node = list(range(len(fragment.ops)))
    nodes: dict[int, tuple[np.ndarray, list]] = {}
    for i, op in enumerate(fragment.ops):
        labels = []
        for p in range(len(op.outputs)):
            w = fragment.wire_at_output((i, p))
            labels.append(w if w is not None else ("o", i, p))
        for p in range(len(op.inputs)):
            w = fragment.wire_at_input((i, p))
            labels.append(w if w is not None else ("i", i, p))
        nodes[i] = (np.asarray(tensors[i].data), labels)

    for w in schedule:
        u, v = node[w.src], node[w.dst]
        if u == v:
            continue
        a, la = nodes[u]
        b, lb = nodes.pop(v)
        shared = [lab for lab in la if isinstance(lab, Wire) and lab in lb]
        c = np.tensordot(a, b, ([la.index(s) for s in shared], [lb.index(s) for s in shared]))
        nodes[u] = (c, [x for x in la if x not in shared] + [x for x in lb if x not in shared])
        node = [u if n == v else n for n in node]

    result, labels = None, []
    for key in sorted(nodes):
        arr, lab = nodes[key]
        result = arr if result is None else np.multiply.outer(result, arr)
        labels.extend(lab)
    if result is None:
        return np.array(1.0), []
    want = [("o",) + port for port in fragment.open_outputs] + \
           [("i",) + port for port in fragment.open_inputs]
    if want:
        result = np.transpose(result, [labels.index(x) for x in want])
    return result, want


def fragment_tensor(fragment: Fragment, binding: Mapping,
                    schedule: Sequence[Wire] | None = None) -> GptTensor:
    """Contract internal wires; open outputs then open inputs become the axes."""
    tensors = _lookup(fragment, binding)
    data, _ = _contract(fragment, tensors, schedule)
    outs = tuple(tensors[i].outputs[p] for i, p in fragment.open_outputs)
    ins = tuple(tensors[i].inputs[p] for i, p in fragment.open_inputs)
    return GptTensor(data, outs, ins)


def circuit_probability(circuit: Fragment, binding: Mapping,
                        schedule: Sequence[Wire] | None = None) -> float:
    """Probability of a closed circuit as the full contraction of its tensors."""
    if not circuit.is_circuit:
        raise ShapeMismatch(
            f"not a circuit: {len(circuit.open_inputs)} open inputs, "
            f"{len(circuit.open_outputs)} open outputs")
    tensors = _lookup(circuit, binding)
    data, _ = _contract(circuit, tensors, schedule)
    return float(data)


def clamp_probability(p: float) -> float:
    return min(1.0, max(0.0, p))


def is_physical_probability(p: float, slack: float = PROBABILITY_SLACK) -> bool:
    return -slack <= p <= 1.0 + slack


# -- states -------------------------------------------------------------------

def convex_mix(states: Sequence, weights: Sequence[float]):
    """Weighted sum of states with nonnegative weights summing to at most one."""
    weights = np.asarray(weights, dtype=float)
    if len(states) != len(weights) or not len(states):
        raise ValueError("need one weight per state")
    if np.any(weights < 0):
        raise NegativeWeight(f"negative mixing weight {weights.min():g}")
    if weights.sum() > 1.0 + 1e-12:
        raise ValueError(f"weights sum to {weights.sum():g} > 1")
    mixed = sum(w * _as_vector(s) for w, s in zip(weights, states))
    first = states[0]
    if isinstance(first, GptTensor):
        return GptTensor(mixed, first.outputs, first.inputs)
    return mixed


def is_null(state, tol: float = NULL_TOLERANCE) -> bool:
    v = _as_vector(state)
    return v.size == 0 or float(np.max(np.abs(v))) <= tol


Binding = Mapping[str | int, GptTensor]
SizeMap = Mapping[Wire, int] | Callable
