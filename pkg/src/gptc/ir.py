"""Typed operations wired into fragments and circuits.

A :class:`Fragment` is an immutable directed acyclic multigraph whose vertices
are :class:`Operation` instances and whose edges (:class:`Wire`) join an output
port of one operation to an input port of another.  Ports are addressed
positionally as ``(op_index, port_index)``.  Three wiring rules are enforced
on construction: at most one wire per port, matching system types at both
ends, and no directed cycles.

Two fragments compare equal when they are isomorphic as labelled graphs, so
the order in which operations were added carries no meaning.
"""
from __future__ import annotations

import enum
import heapq
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Hashable, Iterable, Mapping, Sequence

from .errors import (
    InvalidFragment,
    InvalidPort,
    PortOccupied,
    TypeMismatch,
    WiringError,
    WouldCreateCycle,
)

Port = tuple[int, int]


@dataclass(frozen=True)
class SystemType:
    """A wire type.

    ``N`` is the maximal number of perfectly distinguishable states and ``K``
    the number of fiducial probabilities needed to fix a state.  Either may be
    ``None`` while the type is still abstract (e.g. straight out of the
    parser); a theory fills them in.  ``parts`` lists the factors of a
    composite type, empty for elementary types.
    """

    label: str
    N: int | None = None
    K: int | None = None
    parts: tuple["SystemType", ...] = ()

    def __post_init__(self):
        if self.N is not None and self.N < 1:
            raise ValueError(f"type {self.label}: N must be >= 1, got {self.N}")
        if self.K is not None and self.K < 1:
            raise ValueError(f"type {self.label}: K must be >= 1, got {self.K}")
        if self.N is not None and self.K is not None and self.K < self.N:
            raise ValueError(
                f"type {self.label}: K={self.K} is smaller than N={self.N}")
        object.__setattr__(self, "parts", tuple(self.parts))

    def compatible(self, other: "SystemType") -> bool:
        """Same label, and no conflict between whichever of N/K are known."""
        if self.label != other.label:
            return False
        for mine, theirs in ((self.N, other.N), (self.K, other.K)):
            if mine is not None and theirs is not None and mine != theirs:
                return False
        return True

    def __str__(self):
        return self.label


@dataclass(frozen=True)
class Operation:
    """One use of an apparatus: typed inputs and outputs plus opaque tags."""

    name: str
    inputs: tuple[SystemType, ...] = ()
    outputs: tuple[SystemType, ...] = ()
    setting: Hashable = None
    outcomes: Hashable = None

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))


@dataclass(frozen=True, order=True)
class Wire:
    """Output port ``out`` of op ``src`` feeding input port ``inp`` of op ``dst``."""

    src: int
    out: int
    dst: int
    inp: int

    @property
    def producer(self) -> Port:
        return (self.src, self.out)

    @property
    def consumer(self) -> Port:
        return (self.dst, self.inp)


class FragmentKind(enum.Enum):
    PREPARATION = "preparation"
    RESULT = "result"
    TRANSFORMATION = "transformation"
    CIRCUIT = "circuit"
    GENERAL = "general"


class Fragment:
    """Immutable wired collection of operations."""

    def __init__(self, ops: Sequence[Operation] = (), wires: Iterable[Wire] = ()):
        self.ops = tuple(ops)
        self.wires = frozenset(wires)
        self._out_wire: dict[Port, Wire] = {}
        self._in_wire: dict[Port, Wire] = {}
        self._check_ports_and_types()
        self._check_acyclic()

    # -- validation ---------------------------------------------------------

    def _check_ports_and_types(self):
        for w in sorted(self.wires):
            for idx in (w.src, w.dst):
                if not 0 <= idx < len(self.ops):
                    raise InvalidPort(f"wire {w} references missing op {idx}")
            src, dst = self.ops[w.src], self.ops[w.dst]
            if not 0 <= w.out < len(src.outputs):
                raise InvalidPort(f"op {w.src} ({src.name}) has no output {w.out}")
            if not 0 <= w.inp < len(dst.inputs):
                raise InvalidPort(f"op {w.dst} ({dst.name}) has no input {w.inp}")
            if w.producer in self._out_wire:
                raise PortOccupied(f"output {w.producer} already wired")
            if w.consumer in self._in_wire:
                raise PortOccupied(f"input {w.consumer} already wired")
            t_out, t_in = src.outputs[w.out], dst.inputs[w.inp]
            if not t_out.compatible(t_in):
                raise TypeMismatch(
                    f"cannot wire {t_out.label}-output of {src.name} "
                    f"into {t_in.label}-input of {dst.name}")
            self._out_wire[w.producer] = w
            self._in_wire[w.consumer] = w

    def _check_acyclic(self):
        order = self._kahn()
        if len(order) != len(self.ops):
            stuck = sorted(set(range(len(self.ops))) - set(order))
            path = _find_cycle(self.successors, stuck)
            raise WouldCreateCycle(
                "wiring contains a closed loop: "
                + " -> ".join(self.ops[i].name for i in path), path)

    def validate(self) -> "Fragment":
        """Re-run every wiring check; returns self so it can be chained."""
        try:
            Fragment(self.ops, self.wires)
        except WiringError as exc:
            raise InvalidFragment(str(exc)) from exc
        return self

    # -- structure ----------------------------------------------------------

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        succ = [set() for _ in self.ops]
        for w in self.wires:
            succ[w.src].add(w.dst)
        return tuple(tuple(sorted(s)) for s in succ)

    def _kahn(self) -> list[int]:
        indeg = [0] * len(self.ops)
        for w in self.wires:
            indeg[w.dst] += 1
        # multi-edges: count each wire, successors are deduplicated
        succ_count: list[dict[int, int]] = [{} for _ in self.ops]
        for w in self.wires:
            succ_count[w.src][w.dst] = succ_count[w.src].get(w.dst, 0) + 1
        ready = deque(i for i, d in enumerate(indeg) if d == 0)
        order = []
        while ready:
            i = ready.popleft()
            order.append(i)
            for j, n in sorted(succ_count[i].items()):
                indeg[j] -= n
                if indeg[j] == 0:
                    ready.append(j)
        return order

    def topological_order(self, priority: Sequence[int] | None = None) -> list[int]:
        """Topological order; ties broken by ``priority[i]`` (default: index)."""
        prio = list(range(len(self.ops))) if priority is None else list(priority)
        indeg = [0] * len(self.ops)
        for w in self.wires:
            indeg[w.dst] += 1
        heap = [(prio[i], i) for i, d in enumerate(indeg) if d == 0]
        heapq.heapify(heap)
        order = []
        while heap:
            _, i = heapq.heappop(heap)
            order.append(i)
            for w in self.wires_from(i):
                indeg[w.dst] -= 1
                if indeg[w.dst] == 0:
                    heapq.heappush(heap, (prio[w.dst], w.dst))
        return order

    def wires_from(self, op: int) -> list[Wire]:
        return [self._out_wire[(op, p)] for p in range(len(self.ops[op].outputs))
                if (op, p) in self._out_wire]

    def wire_at_output(self, port: Port) -> Wire | None:
        return self._out_wire.get(tuple(port))

    def wire_at_input(self, port: Port) -> Wire | None:
        return self._in_wire.get(tuple(port))

    @cached_property
    def open_outputs(self) -> tuple[Port, ...]:
        return tuple((i, p) for i, op in enumerate(self.ops)
                     for p in range(len(op.outputs)) if (i, p) not in self._out_wire)

    @cached_property
    def open_inputs(self) -> tuple[Port, ...]:
        return tuple((i, p) for i, op in enumerate(self.ops)
                     for p in range(len(op.inputs)) if (i, p) not in self._in_wire)

    def output_type(self, port: Port) -> SystemType:
        return self.ops[port[0]].outputs[port[1]]

    def input_type(self, port: Port) -> SystemType:
        return self.ops[port[0]].inputs[port[1]]

    @property
    def is_circuit(self) -> bool:
        return not self.open_inputs and not self.open_outputs

    def reaches(self, start: int, goal: int) -> list[int] | None:
        """A directed path of op indices from ``start`` to ``goal``, if any."""
        prev = {start: None}
        queue = deque([start])
        while queue:
            i = queue.popleft()
            if i == goal:
                path = [i]
                while prev[path[-1]] is not None:
                    path.append(prev[path[-1]])
                return path[::-1]
            for j in self.successors[i]:
                if j not in prev:
                    prev[j] = i
                    queue.append(j)
        return None

    # -- derived fragments --------------------------------------------------

    def connect(self, producer: Port, consumer: Port) -> "Fragment":
        producer, consumer = tuple(producer), tuple(consumer)
        src, out = producer
        dst, inp = consumer
        if not (0 <= src < len(self.ops) and 0 <= out < len(self.ops[src].outputs)):
            raise InvalidPort(f"no output port {producer}")
        if not (0 <= dst < len(self.ops) and 0 <= inp < len(self.ops[dst].inputs)):
            raise InvalidPort(f"no input port {consumer}")
        if producer in self._out_wire:
            raise PortOccupied(f"output {producer} already wired")
        if consumer in self._in_wire:
            raise PortOccupied(f"input {consumer} already wired")
        t_out, t_in = self.output_type(producer), self.input_type(consumer)
        if not t_out.compatible(t_in):
            raise TypeMismatch(
                f"cannot wire {t_out.label}-output into {t_in.label}-input")
        back = self.reaches(dst, src)
        if back is not None:
            path = back + [dst]
            raise WouldCreateCycle(
                "wire would close a loop: "
                + " -> ".join(self.ops[i].name for i in path), path)
        return Fragment(self.ops, self.wires | {Wire(src, out, dst, inp)})

    def with_ops(self, ops: Sequence[Operation], wires: Iterable[Wire] = ()) -> "Fragment":
        """Append operations (indices continue after the existing ones)."""
        return Fragment(self.ops + tuple(ops), self.wires | frozenset(wires))

    def retype(self, mapping: Mapping[str, SystemType]) -> "Fragment":
        """Replace system types by label, e.g. to bind parsed letters to a theory."""
        def sub(t):
            return mapping.get(t.label, t)

        ops = [Operation(op.name, tuple(map(sub, op.inputs)), tuple(map(sub, op.outputs)),
                         op.setting, op.outcomes) for op in self.ops]
        return Fragment(ops, self.wires)

    # -- isomorphism --------------------------------------------------------

    @cached_property
    def _canonical(self):
        return _canonical_form(self)

    def canonical_order(self) -> tuple[int, ...]:
        """Op indices listed in canonical order (isomorphism-invariant)."""
        return self._canonical[1]

    def canonical_key(self):
        return self._canonical[0]

    def __eq__(self, other):
        if not isinstance(other, Fragment):
            return NotImplemented
        if len(self.ops) != len(other.ops) or len(self.wires) != len(other.wires):
            return False
        return self.canonical_key() == other.canonical_key()

    def __hash__(self):
        return hash(self.canonical_key())

    def __len__(self):
        return len(self.ops)

    def __repr__(self):
        return (f"Fragment({len(self.ops)} ops, {len(self.wires)} wires, "
                f"{len(self.open_inputs)} open inputs, "
                f"{len(self.open_outputs)} open outputs)")


def _find_cycle(successors, candidates) -> list[int]:
    candidates = set(candidates)
    for start in sorted(candidates):
        stack = [(start, [start])]
        seen = set()
        while stack:
            node, path = stack.pop()
            for nxt in successors[node]:
                if nxt == start:
                    return path + [start]
                if nxt in candidates and nxt not in seen:
                    seen.add(nxt)
                    stack.append((nxt, path + [nxt]))
    return sorted(candidates)


# -- module-level API ---------------------------------------------------------

def connect(fragment: Fragment, producer: Port, consumer: Port) -> Fragment:
    return fragment.connect(producer, consumer)


def compose(f1: Fragment, f2: Fragment, wiring=()) -> Fragment:
    """Disjoint union of two fragments plus the requested wires.

    Each wiring entry is ``((side, op, port), (side, op, port))`` naming an
    output and then an input, where ``side`` is 0 for ``f1`` and 1 for ``f2``
    and ``op`` indexes into that fragment's own op list.
    """
    shift = len(f1.ops)
    moved = {Wire(w.src + shift, w.out, w.dst + shift, w.inp) for w in f2.wires}
    result = Fragment(f1.ops + f2.ops, f1.wires | moved)
    for (s_side, s_op, s_port), (d_side, d_op, d_port) in wiring:
        result = result.connect((s_op + shift * s_side, s_port),
                                (d_op + shift * d_side, d_port))
    return result


def classify(fragment: Fragment) -> FragmentKind:
    """Preparation, result, transformation, circuit, or general.

    Valid fragments are acyclic, so an output of the fragment can never feed
    back into one of its own inputs from inside; whether a fragment with both
    kinds of open port is *used* in transformation mode depends on wiring
    that is not part of it.  Only the empty fragment lands in ``GENERAL``.
    """
    fragment.validate()
    if not fragment.ops:
        return FragmentKind.GENERAL
    has_in, has_out = bool(fragment.open_inputs), bool(fragment.open_outputs)
    if not has_in and not has_out:
        return FragmentKind.CIRCUIT
    if has_out and not has_in:
        return FragmentKind.PREPARATION
    if has_in and not has_out:
        return FragmentKind.RESULT
    return FragmentKind.TRANSFORMATION


# -- canonical labelling ------------------------------------------------------

def _type_key(t: SystemType):
    return (t.label, -1 if t.N is None else t.N, -1 if t.K is None else t.K,
            tuple(_type_key(p) for p in t.parts))


def _op_key(op: Operation):
    return (op.name, repr(op.setting), repr(op.outcomes),
            tuple(_type_key(t) for t in op.inputs),
            tuple(_type_key(t) for t in op.outputs))


def _rank(keys) -> list[int]:
    table = {k: r for r, k in enumerate(sorted(set(keys)))}
    return [table[k] for k in keys]


def _refine(colors: list[int], out_adj, in_adj) -> list[int]:
    while True:
        keys = []
        for i, c in enumerate(colors):
            nb = sorted([("o", p, colors[j], q) for p, j, q in out_adj[i]]
                        + [("i", q, colors[j], p) for q, j, p in in_adj[i]])
            keys.append((c, tuple(nb)))
        new = _rank(keys)
        if len(set(new)) == len(set(colors)):
            return new
        colors = new


def _encode(fragment: Fragment, op_keys, order: Sequence[int]):
    pos = {op: k for k, op in enumerate(order)}
    return (tuple(op_keys[i] for i in order),
            tuple(sorted((pos[w.src], w.out, pos[w.dst], w.inp) for w in fragment.wires)))


def _canonical_form(fragment: Fragment):
    """Individualisation-refinement search for the minimal encoding."""
    n = len(fragment.ops)
    op_keys = [_op_key(op) for op in fragment.ops]
    out_adj = [[] for _ in range(n)]
    in_adj = [[] for _ in range(n)]
    for w in fragment.wires:
        out_adj[w.src].append((w.out, w.dst, w.inp))
        in_adj[w.dst].append((w.inp, w.src, w.out))

    best = [None, ()]

    def search(colors):
        colors = _refine(colors, out_adj, in_adj)
        if len(set(colors)) == n:
            order = tuple(sorted(range(n), key=lambda i: colors[i]))
            enc = _encode(fragment, op_keys, order)
            if best[0] is None or enc < best[0]:
                best[0], best[1] = enc, order
            return
        counts: dict[int, list[int]] = {}
        for i, c in enumerate(colors):
            counts.setdefault(c, []).append(i)
        target = min(c for c, members in counts.items() if len(members) > 1)
        for v in counts[target]:
            split = [2 * c + (1 if c == target and i != v else 0)
                     for i, c in enumerate(colors)]
            search(_rank(split))

    if n:
        search(_rank(op_keys))
    else:
        best[0] = ((), ())
    return best[0], best[1]
