"""Circuit to pattern compilation, measurement layering and gate-array rewrites."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from .gates import H, I2, Circuit, Gate, Measure, euler_xzx, matrix_of, w_decompose
from .mbqc import (
    MeasurementInstruction,
    MeasurementPattern,
    PatternError,
    BranchTable,
    angle_class,
    branch_table,
    compose,
    identity_pattern,
    pattern_cz,
    pattern_euler,
    w_chain,
)
from .pauli import PauliFrame, parity, parity_depth
from .qmath import QubitState, apply_matrix, random_state

COMPILABLE = ("CZ", "CX", "H", "Rx", "Rz", "W", "Phase", "P_pi4", "X", "Y", "Z")

# Each single-qubit kind as W steps, first-applied first.
_W_STEPS = {
    "H": lambda t: [0.0],
    "W": lambda t: [t],
    "Rx": lambda t: [0.0, 2 * t],  # Rx(t) ~ W(2t) W(0)
    "Rz": lambda t: [2 * t, 0.0],  # Rz(t) ~ W(0) W(2t)
    "Phase": lambda t: [t, 0.0],  # P(t) = W(0) W(t)
    "P_pi4": lambda t: [math.pi / 2, 0.0],
    "Z": lambda t: [math.pi, 0.0],
    "X": lambda t: [0.0, math.pi],
    "Y": lambda t: [math.pi, math.pi],
}


def lower(c: Circuit) -> list[Gate]:
    """Rewrite CX as ``(I x H) CZ (I x H)``; everything else passes through."""
    out = []
    for g in c.gates:
        if isinstance(g, Measure) or g.condition:
            raise PatternError("only measurement-free circuits compile; purge measurements first")
        if g.kind not in COMPILABLE:
            raise PatternError(f"gate kind {g.kind!r} is not compilable")
        if g.kind == "CX":
            ctrl, tgt = g.targets
            out += [Gate("H", (tgt,)), Gate("CZ", (ctrl, tgt)), Gate("H", (tgt,))]
        else:
            out.append(g)
    return out


def gate_pattern(g: Gate, one_qubit: str = "native") -> MeasurementPattern:
    """Pattern for one lowered gate.

    ``one_qubit`` picks the single-qubit route: ``native`` (shortest W chain
    per kind), ``w`` (four steps from :func:`w_decompose`) or ``euler``.
    """
    if g.kind == "CZ":
        return pattern_cz()
    if one_qubit == "native":
        return w_chain(_W_STEPS[g.kind](g.theta))
    u = matrix_of(g)
    if one_qubit == "w":
        a = w_decompose(u)
        return w_chain([a.theta3, a.theta2, a.theta1, 0.0])
    if one_qubit == "euler":
        return pattern_euler(euler_xzx(u))
    raise ValueError(f"unknown single-qubit route {one_qubit!r}")


def compile(c: Circuit, one_qubit: str = "native") -> MeasurementPattern:
    """Fold the per-gate patterns together; wire ``q`` starts at site ``q``."""
    p = identity_pattern(tuple(range(c.num_qubits)))
    for g in lower(c):
        gp = gate_pattern(g, one_qubit)
        wiring = {p.output_sites[t]: gp.input_sites[i] for i, t in enumerate(g.targets)}
        p = compose(p, gp, wiring)
    if c.gates and all(isinstance(g, Gate) and not g.condition for g in c.gates):
        p = p.with_target(c.unitary()) if c.num_qubits <= 10 else p
    return p


# Scheduling ------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    """Measurement layers plus the XOR-sets evaluated after each one.

    ``classical_steps[j]`` lists the parities needed once layer ``j`` is done:
    the sign dependencies of the next layer, or the output frame after the last.
    """

    layers: tuple[tuple, ...]
    classical_steps: tuple[tuple[frozenset, ...], ...]
    site_count: int = 0

    def layer_of(self) -> dict:
        return {i: k for k, layer in enumerate(self.layers) for i in layer}

    def to_json(self) -> dict:
        return {
            "layers": [list(layer) for layer in self.layers],
            "classical": [[sorted(s, key=str) for s in step] for step in self.classical_steps],
        }


class DepthReport(NamedTuple):
    quantum_layers: int
    classical_parity_depth: int
    gate_count: int
    site_count: int

    def to_json(self) -> dict:
        return self._asdict()


def _classical_steps(p: MeasurementPattern, layers: Sequence[Sequence]) -> tuple:
    steps = []
    for k in range(len(layers)):
        if k + 1 < len(layers):
            sets = {p.instruction(i).sign_deps for i in layers[k + 1]}
        else:
            sets = set()
            for key in p.output_frame.keys:
                sets |= {p.output_frame[key].x, p.output_frame[key].z}
        steps.append(tuple(sorted((s for s in sets if s), key=lambda s: sorted(map(str, s)))))
    return tuple(steps)


def schedule(p: MeasurementPattern) -> Schedule:
    """As-soon-as-possible layering of the sign-dependency DAG.

    Non-adaptive instructions (every ``Mz`` among them) land in layer 1.
    """
    level: dict = {}
    for ins in p.instructions:
        missing = ins.sign_deps - level.keys()
        if missing:
            raise PatternError(f"instruction at {ins.site!r} depends on unscheduled outcomes {missing}")
        level[ins.outcome_id] = 1 + max((level[d] for d in ins.sign_deps), default=0)
    depth = max(level.values(), default=0)
    layers = tuple(tuple(i for i in p.outcome_ids if level[i] == k) for k in range(1, depth + 1))
    return Schedule(layers, _classical_steps(p, layers), len(p.graph.sites))


def validate_schedule(p: MeasurementPattern, s: Schedule) -> None:
    where = s.layer_of()
    if sorted(map(str, where)) != sorted(map(str, p.outcome_ids)) or sum(map(len, s.layers)) != len(p.instructions):
        raise PatternError("every instruction must sit in exactly one layer")
    for ins in p.instructions:
        if ins.basis == "Z" and where[ins.outcome_id] != 0:
            raise PatternError(f"Z measurement at {ins.site!r} is not in the first layer")
        for d in ins.sign_deps:
            if where[d] >= where[ins.outcome_id]:
                raise PatternError(f"{ins.site!r} depends on outcome {d!r} from the same or a later layer")


TWO_LAYER_SETS = ({"CX", "Rx"}, {"CX", "Rz"})


def compile_two_layer(c: Circuit) -> tuple[MeasurementPattern, Schedule]:
    """Compile a {CX, Rx} or {CX, Rz} circuit into exactly two measurement layers.

    Layer 1 holds every Pauli-angle measurement (the lowered CX fragments and
    the X halves of the rotation chains); layer 2 holds the rotation
    measurements, whose signs depend on layer-1 outcomes only.
    """
    kinds = {g.kind for g in c.gates if isinstance(g, Gate)}
    if any(isinstance(g, Measure) for g in c.gates) or not any(kinds <= s for s in TWO_LAYER_SETS):
        raise PatternError(f"two-layer compilation needs gates from {{CX, Rx}} or {{CX, Rz}}, got {sorted(kinds)}")
    p = compile(c)
    first = tuple(i.outcome_id for i in p.instructions if i.basis == "Z" or angle_class(i.angle) != "generic")
    second = tuple(i.outcome_id for i in p.instructions if i.outcome_id not in first)
    layers = (first, second)
    s = Schedule(layers, _classical_steps(p, layers), len(p.graph.sites))
    validate_schedule(p, s)
    return p, s


def schedule_two_layer(c: Circuit) -> Schedule:
    return compile_two_layer(c)[1]


def depth_report(s: Schedule, gate_count: int = 0) -> DepthReport:
    sets = [x for step in s.classical_steps for x in step]
    return DepthReport(
        quantum_layers=len(s.layers),
        classical_parity_depth=max((parity_depth(len(x)) for x in sets), default=0),
        gate_count=gate_count,
        site_count=s.site_count,
    )


# Readout ---------------------------------------------------------------


def reinterpret_output(z_outcomes: Mapping, frame: PauliFrame, record: Mapping) -> tuple[int, ...]:
    """Corrected readout ``k_i XOR m_i``; Z exponents cannot change a Z outcome."""
    try:
        return tuple(int(z_outcomes[k]) ^ parity(frame[k].x, record) for k in frame.keys)
    except KeyError as exc:
        raise ValueError(f"frame refers to an outcome that is not recorded: {exc}") from None


def frame_masks(frame: PauliFrame, table: BranchTable) -> tuple[np.ndarray, np.ndarray]:
    """Per-branch X and Z exponents of ``frame`` packed as basis-index bit masks."""
    col = {k: i for i, k in enumerate(table.ids)}
    n = len(frame.keys)
    xm = np.zeros(table.bits.shape[0], dtype=np.int64)
    zm = np.zeros_like(xm)
    for i, key in enumerate(frame.keys):
        bit = 1 << (n - 1 - i)
        for deps, mask in ((frame[key].x, xm), (frame[key].z, zm)):
            par = np.zeros_like(xm)
            for d in deps:
                par ^= table.bits[:, col[d]]
            mask |= par * bit
    return xm, zm


def corrected_outputs(p: MeasurementPattern, table: BranchTable) -> np.ndarray:
    """Apply each branch's inverse byproduct: ``Z^z X^x`` undoes ``X^x Z^z``."""
    xm, zm = frame_masks(p.output_frame, table)
    idx = np.arange(table.outputs.shape[1])
    shifted = table.outputs[np.arange(len(xm))[:, None], idx[None, :] ^ xm[:, None]]
    both = idx[None, :] & zm[:, None]
    par = np.zeros_like(both)
    for k in range(max(1, idx.size.bit_length())):
        par ^= (both >> k) & 1
    return shifted * (1 - 2 * par)


def _scatter(dist: np.ndarray, table: BranchTable, xm: np.ndarray) -> None:
    probs = np.abs(table.outputs) ** 2 * table.probability[:, None]
    idx = np.arange(dist.size)
    for m in np.unique(xm):
        dist[idx ^ m] += probs[xm == m].sum(axis=0)


def corrected_distribution(p: MeasurementPattern, input: QubitState | None = None) -> np.ndarray:
    """Exact distribution of the corrected Z readout, summed over all branches."""
    table = branch_table(p, input)
    dist = np.zeros(table.outputs.shape[1])
    _scatter(dist, table, frame_masks(p.output_frame, table)[0])
    return dist


class Readout(NamedTuple):
    """A pattern whose outputs are measured in Z; ``frame`` tells how to correct them."""

    pattern: MeasurementPattern
    frame: PauliFrame


def measure_outputs(p: MeasurementPattern, first: bool = True) -> Readout:
    """Append (or, with ``first``, prepend) an ``Mz`` on every output site.

    Those measurements never depend on anything, so measuring them before the
    computation is legitimate once each bit is read as ``k XOR m``.
    """
    mz = tuple(MeasurementInstruction(s, "Z") for s in p.output_sites)
    instructions = mz + p.instructions if first else p.instructions + mz
    closed = MeasurementPattern(p.graph, p.input_sites, (), instructions, PauliFrame(()))
    closed.validate()
    return Readout(closed, p.output_frame)


def readout_distribution(r: Readout, input: QubitState | None = None) -> np.ndarray:
    """Law of the corrected bits ``k_i XOR m_i`` when the outputs are measured."""
    table = branch_table(r.pattern, input)
    col = {k: i for i, k in enumerate(table.ids)}
    xm, _ = frame_masks(r.frame, table)
    n = len(r.frame.keys)
    raw = np.zeros_like(xm)
    for i, key in enumerate(r.frame.keys):
        raw |= table.bits[:, col[key]].astype(np.int64) << (n - 1 - i)
    return np.bincount(raw ^ xm, weights=table.probability, minlength=1 << n)


def total_variation(a: np.ndarray, b: np.ndarray) -> float:
    return 0.5 * float(np.abs(np.asarray(a) - np.asarray(b)).sum())


class VerifyReport(NamedTuple):
    passed: bool
    branches: int  # per input state
    inputs: int
    max_infidelity: float
    max_tv: float
    failures: tuple


def verify_pattern(
    p: MeasurementPattern,
    target: np.ndarray | None = None,
    inputs: int = 3,
    seed: int = 0,
    tol: float = 1e-9,
    max_sites: int = 20,
) -> VerifyReport:
    """Branch-exhaustive check of a pattern against its target unitary.

    Every branch's corrected output must match ``target @ psi`` and the
    corrected readout distribution must match the oracle's Born rule.
    """
    target = p.target if target is None else np.asarray(target, dtype=complex)
    if target is None:
        raise ValueError("no target unitary to verify against")
    if len(p.instructions) > max_sites:
        raise ValueError(f"{len(p.instructions)} measured sites exceeds the exhaustive budget of {max_sites}")
    rng = np.random.default_rng(seed)
    n = len(p.input_sites)
    worst_inf = 0.0
    worst_tv = 0.0
    count = 0
    failures = []
    for _ in range(inputs):
        psi = random_state(n, rng) if n else None
        want = target @ (psi.amplitudes if psi is not None else np.ones(1))
        table = branch_table(p, psi)
        count = max(count, len(table.probability))
        inf = 1 - np.minimum(1.0, np.abs(corrected_outputs(p, table) @ want.conj()))
        for b in np.nonzero(inf > tol)[0]:
            rec = table.record(int(b))
            if any(f["outcomes"] == {str(k): v for k, v in rec.items()} for f in failures):
                continue
            failures.append({"outcomes": {str(k): v for k, v in rec.items()}, "infidelity": float(inf[b])})
        worst_inf = max(worst_inf, float(inf.max(initial=0.0)))
        dist = np.zeros(want.size)
        _scatter(dist, table, frame_masks(p.output_frame, table)[0])
        worst_tv = max(worst_tv, total_variation(dist, np.abs(want) ** 2))
    passed = worst_inf <= tol and worst_tv <= tol
    return VerifyReport(passed, count, inputs, worst_inf, worst_tv, tuple(failures))


# Circuits with mid-circuit measurements ---------------------------------


def measurement_distribution(c: Circuit, input: QubitState | None = None, keep: int | None = None) -> dict:
    """Oracle: joint law of labelled outcomes and a final Z readout.

    Keys are ``(((label, bit), ...), final_index)`` where ``final_index`` reads
    the first ``keep`` qubits (all by default); the rest are traced out.
    """
    n = c.num_qubits
    keep = n if keep is None else keep
    vec = (input if input is not None else QubitState.zeros(n)).amplitudes.copy()
    out: dict = {}

    def walk(i: int, vec: np.ndarray, rec: tuple) -> None:
        while i < len(c.gates):
            g = c.gates[i]
            if isinstance(g, Measure):
                for k in (0, 1):
                    ket = g.basis[:, k]
                    proj = np.outer(ket, ket.conj())
                    nxt = apply_matrix(vec, [2] * n, proj, [g.target])
                    if np.vdot(nxt, nxt).real > 1e-15:
                        walk(i + 1, nxt, rec + ((g.label, k),))
                return
            if not g.condition or parity(g.condition, dict(rec)):
                vec = apply_matrix(vec, [2] * n, matrix_of(g), g.targets)
            i += 1
        probs = (np.abs(vec) ** 2).reshape(1 << keep, -1).sum(axis=1)
        for idx in np.nonzero(probs > 0)[0]:
            key = (rec, int(idx))
            out[key] = out.get(key, 0.0) + float(probs[idx])

    walk(0, vec, ())
    return out


class Purged(NamedTuple):
    circuit: Circuit
    ancillas: dict
    scratch: int | None


def purge_measurements(c: Circuit) -> Purged:
    """Replace mid-circuit measurements by pointer qubits.

    Measurement of B in ``{U|0>, U|1>}`` becomes ``U^dag`` on B, CX from B to a
    fresh ancilla, then ``U`` on B again so later gates see the collapsed
    basis.  Classically controlled gates become ancilla-controlled; a
    condition on several outcomes is first gathered onto one scratch qubit by
    CX and uncomputed afterwards.  The ancillas are read in Z at the end.
    """
    labels = [g.label for g in c.gates if isinstance(g, Measure)]
    if len(set(labels)) != len(labels):
        raise ValueError("measurement labels must be unique")
    needs_scratch = any(isinstance(g, Gate) and len(g.condition) > 1 for g in c.gates)
    n = c.num_qubits
    ancilla = {lab: n + i for i, lab in enumerate(labels)}
    scratch = n + len(labels) if needs_scratch else None
    total = n + len(labels) + int(needs_scratch)
    ops: list = []
    seen: set = set()
    for g in c.gates:
        if isinstance(g, Measure):
            b, a = g.target, ancilla[g.label]
            if np.allclose(g.basis, I2):
                ops.append(Gate("CX", (b, a)))
            else:
                ops += [Gate("U", (b,), matrix=g.basis.conj().T), Gate("CX", (b, a)), Gate("U", (b,), matrix=g.basis)]
            seen.add(g.label)
            continue
        if not g.condition:
            ops.append(g)
            continue
        unknown = [lab for lab in g.condition if lab not in seen]
        if unknown:
            raise ValueError(f"{g!r} is controlled by undeclared or later measurements {unknown}")
        u = matrix_of(g)
        if len(g.condition) == 1:
            ops.append(Gate("CU", (ancilla[g.condition[0]],) + g.targets, matrix=u))
            continue
        gather = [Gate("CX", (ancilla[lab], scratch)) for lab in g.condition]
        ops += gather + [Gate("CU", (scratch,) + g.targets, matrix=u)] + gather[::-1]
    ops += [Measure(ancilla[lab], lab) for lab in labels]
    return Purged(Circuit(total, ops), ancilla, scratch)


def purged_distribution(pg: Purged, original_qubits: int, input: QubitState | None = None) -> dict:
    """Oracle law of a purged circuit in the same key format as the original."""
    extra = pg.circuit.num_qubits - original_qubits
    full = None
    if input is not None:
        full = QubitState(np.kron(input.amplitudes, QubitState.zeros(extra).amplitudes)) if extra else input
    return measurement_distribution(pg.circuit, full, keep=original_qubits)


def pattern_to_circuit(p: MeasurementPattern) -> tuple[Circuit, list]:
    """Gate-array form of a pattern, with ordinary mid-circuit measurements.

    One qubit per site (order of ``p.graph.sites``): H prepares ``|+>`` on
    non-input sites, CZ entangles, ``M(theta_eff)`` becomes the phase
    ``P(-theta_eff)`` followed by an X-basis measurement, with the sign
    handled by a classically controlled ``P(2 theta)``.  Output byproducts
    are undone by classically controlled X and Z.  Returns the circuit and the
    qubit indices carrying the outputs.
    """
    index = {s: i for i, s in enumerate(p.graph.sites)}
    label = {s: f"s{index[s]}" for s in p.graph.sites}
    c = Circuit(len(index))
    for s in p.graph.sites:
        if s not in p.input_sites:
            c.append("H", index[s])
    for a, b in p.graph.sorted_edges():
        c.append("CZ", index[a], index[b])
    for ins in p.instructions:
        q = index[ins.site]
        if ins.basis == "Z":
            c.append(Measure(q, label[ins.site]))
            continue
        if ins.sign_deps:
            c.append(Gate("Phase", (q,), 2 * ins.angle, condition=tuple(label[d] for d in ins.sign_deps)))
        c.append("Phase", q, theta=-ins.angle)
        c.append(Measure(q, label[ins.site], H))
    for s in p.output_sites:
        e = p.output_frame[s]
        if e.x:
            c.append(Gate("X", (index[s],), condition=tuple(label[d] for d in e.x)))
        if e.z:
            c.append(Gate("Z", (index[s],), condition=tuple(label[d] for d in e.z)))
    return c, [index[s] for s in p.output_sites]


def site_overhead(c: Circuit) -> int:
    """Sites added by the native compiler beyond one per wire."""
    return len(compile(c).graph.sites) - c.num_qubits
