"""Translate abstract circuits into schedules of driving patterns and targets.

Each schedule step fixes one valid driving pattern and assigns exactly one
target gate to every driven block: circuit gates where they fit, direct
identities everywhere else (undriven qubits get the boundary identity for
free).  Scheduling is greedy with two-qubit gates first, since they
constrain the pattern most: a step anchored on a two-qubit gate also
carries any other ready two-qubit gates that land on the same pattern's
gate pairs, plus ready single-qubit gates on driven singleton centers.
Remaining single-qubit gates are grouped by checkerboard class, one step
per class.

Driven qubits always outnumber undriven ones, so the step count is at most
about twice the circuit depth; ``verify_schedule`` reports the observed
ratio and flags (without failing) anything above 2.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .hamiltonian import ControlVector
from .lattice import (
    Block,
    DrivingPattern,
    QubitGraph,
    decompose_blocks,
    single_qubit_pattern,
    two_qubit_pattern,
    validate_pattern,
)
from .propagation import (
    MAX_ARRAY_QUBITS,
    TargetGate,
    embed_unitary,
    evolve_array,
    nominal_array_params,
    target_gate,
)

ONE_QUBIT_LABELS = ("H", "T", "I", "X")
TWO_QUBIT_LABELS = ("CNOT", "I2")

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


@dataclass(frozen=True)
class GateInstruction:
    label: str
    qubits: tuple[int, ...]
    matrix: np.ndarray | None = None   # custom gates only

    def __post_init__(self):
        n = len(self.qubits)
        if n not in (1, 2) or len(set(self.qubits)) != n:
            raise ValueError(f"gate {self.label!r} needs 1 or 2 distinct qubits")
        if self.matrix is None and self.label not in ONE_QUBIT_LABELS + TWO_QUBIT_LABELS:
            raise ValueError(f"unknown gate label {self.label!r}")
        if self.matrix is None and (
            (n == 1) != (self.label in ONE_QUBIT_LABELS)
        ):
            raise ValueError(f"gate {self.label!r} has wrong qubit count {n}")


@dataclass(frozen=True)
class Circuit:
    gates: tuple[GateInstruction, ...]

    @property
    def depth(self) -> int:
        """Standard greedy circuit depth (gates as unit-time layers)."""
        level: dict[int, int] = {}
        depth = 0
        for g in self.gates:
            start = max((level.get(q, 0) for q in g.qubits), default=0)
            for q in g.qubits:
                level[q] = start + 1
            depth = max(depth, start + 1)
        return depth

    def validate_on(self, graph: QubitGraph) -> None:
        for g in self.gates:
            for q in g.qubits:
                if not 0 <= q < graph.num_qubits:
                    raise ValueError(f"gate {g.label} touches invalid qubit {q}")
            if len(g.qubits) == 2 and not graph.has_edge(*g.qubits):
                raise ValueError(
                    f"two-qubit gate {g.label} on non-adjacent pair {g.qubits}; "
                    "routing is not supported"
                )


def parse_circuit(text: str) -> Circuit:
    """One instruction per line: ``H 5``, ``CNOT 5 6``; # starts a comment."""
    gates = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        label, args = parts[0].upper(), parts[1:]
        try:
            qubits = tuple(int(a) for a in args)
        except ValueError:
            raise ValueError(f"line {ln}: bad qubit indices in {raw!r}") from None
        gates.append(GateInstruction(label, qubits))
    return Circuit(tuple(gates))


def circuit_to_text(circuit: Circuit) -> str:
    return "\n".join(f"{g.label} {' '.join(map(str, g.qubits))}" for g in circuit.gates) + "\n"


@dataclass(frozen=True)
class Assignment:
    """One circuit gate placed on one block of a step."""

    circuit_index: int
    label: str
    qubits: tuple[int, ...]
    block_center: tuple[int, ...]


@dataclass(frozen=True)
class ScheduleStep:
    pattern: DrivingPattern
    targets: dict  # block center tuple -> TargetGate
    assignments: tuple[Assignment, ...]


@dataclass(frozen=True)
class Schedule:
    steps: tuple[ScheduleStep, ...]
    circuit_depth: int

    @property
    def step_count(self) -> int:
        return len(self.steps)

    @property
    def overhead_ratio(self) -> float:
        if self.circuit_depth == 0:
            return 1.0
        return self.step_count / self.circuit_depth


def identity_label(num_center: int) -> str:
    if num_center == 1:
        return "I"
    if num_center == 2:
        return "I2"
    return f"I{num_center}"


def identity_target(num_center: int) -> TargetGate:
    return TargetGate(identity_label(num_center), np.eye(2**num_center, dtype=complex))


def _gate_matrix(g: GateInstruction) -> np.ndarray:
    return g.matrix if g.matrix is not None else target_gate(g.label).matrix


def _oriented_target(g: GateInstruction, center: tuple[int, ...]) -> TargetGate:
    """Target for a block whose (sorted) center may reorder the gate's qubits."""
    mat = _gate_matrix(g)
    if len(center) > len(g.qubits):
        # gate on a subset of a multi-center block: pad with identity
        pos = tuple(center.index(q) for q in g.qubits)
        return TargetGate(g.label, embed_unitary(mat, pos, len(center)))
    if len(g.qubits) == 2 and center == (g.qubits[1], g.qubits[0]):
        return TargetGate(g.label + "_r", _SWAP @ mat @ _SWAP)
    if tuple(g.qubits) != center and len(g.qubits) == 2:
        raise ValueError(f"gate qubits {g.qubits} do not match block center {center}")
    return TargetGate(g.label, mat)


def _qubit_parity(graph: QubitGraph, q: int) -> int:
    if graph.geometry == "chain":
        return q % 2
    r, c = graph.positions[q]
    return (r + c) % 2


def compile_circuit(circuit: Circuit, graph: QubitGraph) -> Schedule:
    """Greedy layering of a circuit onto valid driving patterns."""
    circuit.validate_on(graph)
    pending: list[tuple[int, GateInstruction]] = list(enumerate(circuit.gates))
    steps: list[ScheduleStep] = []

    while pending:
        busy: set[int] = set()
        ready: list[tuple[int, GateInstruction]] = []
        for idx, g in pending:
            if busy.isdisjoint(g.qubits):
                ready.append((idx, g))
            busy.update(g.qubits)

        two_q = [(i, g) for i, g in ready if len(g.qubits) == 2]
        if two_q:
            anchor_idx, anchor = two_q[0]
            pattern = two_qubit_pattern(graph, anchor.qubits)
        else:
            counts = {0: 0, 1: 0}
            for _, g in ready:
                counts[_qubit_parity(graph, g.qubits[0])] += 1
            parity = max(counts, key=lambda p: (counts[p], -p))
            pattern = single_qubit_pattern(graph, parity=parity)

        blocks = decompose_blocks(graph, pattern)
        by_center_qubit = {}
        for blk in blocks:
            for q in blk.center:
                by_center_qubit[q] = blk

        placed: list[Assignment] = []
        targets: dict[tuple, TargetGate] = {}
        used: set[tuple] = set()
        # two-qubit gates that land on this pattern's gate pairs
        for idx, g in two_q:
            pair = tuple(sorted(g.qubits))
            if pair not in pattern.gate_pairs:
                continue
            blk = by_center_qubit[pair[0]]
            if blk.center in used:
                continue
            used.add(blk.center)
            targets[blk.center] = _oriented_target(g, blk.center)
            placed.append(Assignment(idx, g.label, g.qubits, blk.center))
        # single-qubit gates on driven singleton centers
        for idx, g in ready:
            if len(g.qubits) != 1:
                continue
            q = g.qubits[0]
            blk = by_center_qubit.get(q)
            if blk is None or blk.num_center != 1 or blk.center in used:
                continue
            used.add(blk.center)
            targets[blk.center] = _oriented_target(g, blk.center)
            placed.append(Assignment(idx, g.label, g.qubits, blk.center))

        if not placed:
            raise RuntimeError("scheduler failed to place any ready gate")
        for blk in blocks:
            if blk.center not in used:
                targets[blk.center] = identity_target(blk.num_center)
        placed_ids = {a.circuit_index for a in placed}
        pending = [(i, g) for i, g in pending if i not in placed_ids]
        steps.append(ScheduleStep(pattern, targets, tuple(placed)))

    return Schedule(tuple(steps), circuit.depth)


@dataclass(frozen=True)
class ScheduleReport:
    ok: bool
    violations: tuple[str, ...]
    step_count: int
    circuit_depth: int
    overhead_ratio: float
    overhead_flagged: bool


def verify_schedule(schedule: Schedule, circuit: Circuit,
                    graph: QubitGraph) -> ScheduleReport:
    """Check pattern validity, gate coverage, order, and step overhead."""
    problems: list[str] = []
    for s, step in enumerate(schedule.steps):
        rep = validate_pattern(graph, step.pattern)
        if not rep.ok:
            problems.append(f"step {s}: invalid pattern ({len(rep.violations)} violations)")
            continue
        blocks = decompose_blocks(graph, step.pattern)
        centers = {b.center for b in blocks}
        if set(step.targets) != centers:
            problems.append(f"step {s}: targets do not cover the blocks exactly")
        for blk in blocks:
            tgt = step.targets.get(blk.center)
            if tgt is not None and tgt.num_qubits != blk.num_center:
                problems.append(f"step {s}: target size mismatch on block {blk.center}")

    seen: dict[int, int] = {}
    for s, step in enumerate(schedule.steps):
        for a in step.assignments:
            if a.circuit_index in seen:
                problems.append(f"gate {a.circuit_index} placed twice")
            seen[a.circuit_index] = s
    missing = [i for i in range(len(circuit.gates)) if i not in seen]
    if missing:
        problems.append(f"gates never placed: {missing}")
    order: dict[int, int] = {}
    for i, g in enumerate(circuit.gates):
        if i not in seen:
            continue
        for q in g.qubits:
            if q in order and seen[i] <= order[q]:
                problems.append(f"gate {i} violates per-qubit order on qubit {q}")
            order[q] = max(order.get(q, -1), seen[i])

    ratio = schedule.overhead_ratio
    return ScheduleReport(
        ok=not problems,
        violations=tuple(problems),
        step_count=schedule.step_count,
        circuit_depth=schedule.circuit_depth,
        overhead_ratio=ratio,
        overhead_flagged=ratio > 2.0,
    )


# ---------------------------------------------------------------------------
# pulse libraries and schedule simulation


class PulseLibrary:
    """Optimized pulses keyed by (target label, block shape signature).

    One pulse serves every congruent block: blocks with equal shape
    signatures have identical Hamiltonians up to boundary relabeling, which
    the boundary-identity target is invariant under.
    """

    def __init__(self):
        self._pulses: dict[tuple, ControlVector] = {}

    @staticmethod
    def key(label: str, block: Block) -> tuple:
        return (label, block.shape_signature())

    def add(self, label: str, block: Block, controls: ControlVector) -> None:
        if controls.num_drives != block.num_center:
            raise ValueError("pulse drive count does not match block center")
        self._pulses[self.key(label, block)] = controls

    def has(self, label: str, block: Block) -> bool:
        return self.key(label, block) in self._pulses

    def get(self, label: str, block: Block) -> ControlVector:
        key = self.key(label, block)
        if key not in self._pulses:
            known = sorted(set(k[0] for k in self._pulses))
            raise KeyError(
                f"no pulse for gate {label!r} on block shape "
                f"{block.shape_signature()}; library has gates {known}"
            )
        return self._pulses[key]

    def __len__(self) -> int:
        return len(self._pulses)

    def labels(self) -> set[str]:
        return {k[0] for k in self._pulses}

    def to_document(self) -> dict:
        pulses = []
        for (label, shape), ctrl in sorted(self._pulses.items(), key=lambda kv: repr(kv[0])):
            pulses.append(
                {
                    "gate": label,
                    "shape": _shape_to_json(shape),
                    "duration": ctrl.duration,
                    "num_bins": ctrl.num_bins,
                    "num_drives": ctrl.num_drives,
                    "controls": [
                        ctrl.envelopes[j, mu].tolist()
                        for j in range(ctrl.num_drives)
                        for mu in (0, 1)
                    ],
                }
            )
        return {"pulses": pulses}

    @classmethod
    def from_document(cls, doc: dict) -> "PulseLibrary":
        lib = cls()
        for entry in doc["pulses"]:
            rows = np.asarray(entry["controls"], dtype=float)
            env = rows.reshape(int(entry["num_drives"]), 2, int(entry["num_bins"]))
            ctrl = ControlVector(float(entry["duration"]), int(entry["num_bins"]), env)
            lib._pulses[(entry["gate"], _shape_from_json(entry["shape"]))] = ctrl
        return lib


def _shape_to_json(shape):
    if isinstance(shape, tuple):
        return [_shape_to_json(s) for s in shape]
    return shape


def _shape_from_json(shape):
    if isinstance(shape, list):
        return tuple(_shape_from_json(s) for s in shape)
    return shape


def save_library(path, library: PulseLibrary) -> None:
    with open(path, "w") as fh:
        json.dump(library.to_document(), fh)


def load_library(path) -> PulseLibrary:
    with open(path) as fh:
        return PulseLibrary.from_document(json.load(fh))


def simulate_schedule(schedule: Schedule, graph: QubitGraph, library: PulseLibrary,
                      params=None) -> np.ndarray:
    """Total unitary of a schedule executed with library pulses.

    Steps compose left to right (step 0 acts first).  Limited to the
    whole-array evolution guard; intended for end-to-end verification
    against the ideal circuit unitary.
    """
    if graph.num_qubits > MAX_ARRAY_QUBITS:
        raise ValueError(f"simulation supports at most {MAX_ARRAY_QUBITS} qubits")
    U = np.eye(2**graph.num_qubits, dtype=complex)
    for step in schedule.steps:
        blocks = decompose_blocks(graph, step.pattern)
        controls = [library.get(step.targets[b.center].label, b) for b in blocks]
        step_params = params or nominal_array_params(graph, step.pattern)
        U = evolve_array(graph, step.pattern, controls, step_params) @ U
    return U


def ideal_circuit_unitary(circuit: Circuit, num_qubits: int) -> np.ndarray:
    """Exact circuit unitary with gates applied in program order."""
    U = np.eye(2**num_qubits, dtype=complex)
    for g in circuit.gates:
        U = embed_unitary(_gate_matrix(g), g.qubits, num_qubits) @ U
    return U


# ---------------------------------------------------------------------------
# schedule documents


def schedule_to_document(schedule: Schedule) -> dict:
    steps = []
    for step in schedule.steps:
        steps.append(
            {
                "driven": sorted(step.pattern.driven),
                "gate_pairs": [list(p) for p in sorted(step.pattern.gate_pairs)],
                "blocks": [
                    {
                        "center": list(center),
                        "target": tgt.label,
                    }
                    for center, tgt in sorted(step.targets.items())
                ],
                "gates": [
                    {
                        "circuit_index": a.circuit_index,
                        "label": a.label,
                        "qubits": list(a.qubits),
                    }
                    for a in step.assignments
                ],
            }
        )
    return {
        "step_count": schedule.step_count,
        "circuit_depth": schedule.circuit_depth,
        "overhead_ratio": schedule.overhead_ratio,
        "steps": steps,
    }


def save_schedule(path, schedule: Schedule) -> None:
    with open(path, "w") as fh:
        json.dump(schedule_to_document(schedule), fh, indent=1)
