"""Cluster states, measurement patterns and their execution.

A pattern is a graph (prepare ``|+>`` on every non-input site, CZ on every
edge) plus an ordered list of single-site measurements.  Each ``M(theta)``
measurement may flip the sign of its angle according to the XOR of earlier
outcomes; what survives on the output sites is the intended state up to the
symbolic byproduct held in ``output_frame``.

Outcome ids coincide with the measured site's identifier.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Hashable, Iterator, Mapping, NamedTuple, Sequence

import numpy as np

from .gates import CZ, EulerAngles, matrix_from_json, matrix_to_json
from .pauli import FrameEntry, OutcomeRecord, PauliFrame, parity, xor_substitute
from .qmath import QubitState, apply_matrix

Site = Hashable
PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)
_ANGLE_EPS = 1e-12


class PatternError(ValueError):
    """Malformed pattern or illegal pattern operation."""


class ZeroProbabilityBranch(RuntimeError):
    """A forced outcome has probability zero."""


# Graphs ----------------------------------------------------------------


@dataclass(frozen=True)
class ClusterGraph:
    sites: tuple
    edges: frozenset = frozenset()
    coords: Mapping | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        sites = tuple(self.sites)
        if len(set(sites)) != len(sites):
            raise PatternError("duplicate site")
        edges = frozenset(frozenset(e) for e in self.edges)
        for e in edges:
            if len(e) != 2:
                raise PatternError(f"self-loop or malformed edge {set(e)}")
            if not e <= set(sites):
                raise PatternError(f"edge {set(e)} references an unknown site")
        object.__setattr__(self, "sites", sites)
        object.__setattr__(self, "edges", edges)

    @classmethod
    def line(cls, n: int) -> ClusterGraph:
        return cls(tuple(range(n)), frozenset(frozenset((i, i + 1)) for i in range(n - 1)))

    @classmethod
    def grid(cls, rows: int, cols: int) -> ClusterGraph:
        """Row-major integer labels; nearest neighbours joined."""
        sites = tuple(range(rows * cols))
        edges = set()
        for r in range(rows):
            for c in range(cols):
                s = r * cols + c
                if c + 1 < cols:
                    edges.add(frozenset((s, s + 1)))
                if r + 1 < rows:
                    edges.add(frozenset((s, s + cols)))
        coords = {r * cols + c: (r, c) for r in range(rows) for c in range(cols)}
        return cls(sites, frozenset(edges), coords)

    def neighbors(self, site: Site) -> list:
        out = []
        for e in self.edges:
            if site in e:
                (other,) = e - {site}
                out.append(other)
        return sorted(out, key=self.sites.index)

    def sorted_edges(self) -> list[tuple]:
        idx = {s: i for i, s in enumerate(self.sites)}
        return sorted((tuple(sorted(e, key=idx.__getitem__)) for e in self.edges), key=lambda e: (idx[e[0]], idx[e[1]]))


def build_cluster(graph: ClusterGraph, inputs: Mapping[Site, np.ndarray | QubitState] | None = None) -> QubitState:
    """Dense graph state, qubits in ``graph.sites`` order."""
    inputs = dict(inputs or {})
    unknown = set(inputs) - set(graph.sites)
    if unknown:
        raise PatternError(f"unknown input sites {unknown}")
    vec = np.array([1.0 + 0j])
    for s in graph.sites:
        single = inputs.get(s, PLUS)
        single = single.amplitudes if isinstance(single, QubitState) else np.asarray(single, dtype=complex)
        vec = np.kron(vec, single)
    idx = {s: i for i, s in enumerate(graph.sites)}
    n = len(graph.sites)
    for a, b in graph.sorted_edges():
        vec = apply_matrix(vec, [2] * n, CZ, [idx[a], idx[b]])
    return QubitState(vec)


# Instructions and patterns ---------------------------------------------


@dataclass(frozen=True)
class MeasurementInstruction:
    """Measure ``site`` in ``Mz`` or ``M(theta)``; ``theta = 0`` is the X measurement.

    The effective angle is ``(-1)^{XOR of sign_deps} * angle``.
    """

    site: Site
    basis: str = "M"
    angle: float = 0.0
    sign_deps: frozenset = frozenset()

    def __post_init__(self) -> None:
        if self.basis not in ("M", "Z"):
            raise PatternError(f"basis must be 'M' or 'Z', got {self.basis!r}")
        object.__setattr__(self, "sign_deps", frozenset(self.sign_deps))
        object.__setattr__(self, "angle", float(self.angle))
        if self.basis == "Z" and (self.sign_deps or self.angle):
            raise PatternError("Z measurements are never adaptive")

    @property
    def outcome_id(self) -> Site:
        return self.site

    def effective_angle(self, record: Mapping) -> float:
        return -self.angle if parity(self.sign_deps, record) else self.angle

    def ket(self, outcome: int, record: Mapping) -> np.ndarray:
        if self.basis == "Z":
            return np.array([1 - outcome, outcome], dtype=complex)
        theta = self.effective_angle(record)
        return np.array([1, (-1) ** outcome * np.exp(1j * theta)], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class MeasurementPattern:
    graph: ClusterGraph
    input_sites: tuple
    output_sites: tuple
    instructions: tuple
    output_frame: PauliFrame
    target: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "input_sites", tuple(self.input_sites))
        object.__setattr__(self, "output_sites", tuple(self.output_sites))
        object.__setattr__(self, "instructions", tuple(self.instructions))

    @property
    def measured_sites(self) -> list:
        return [ins.site for ins in self.instructions]

    @property
    def outcome_ids(self) -> list:
        return [ins.outcome_id for ins in self.instructions]

    def instruction(self, site: Site) -> MeasurementInstruction:
        for ins in self.instructions:
            if ins.site == site:
                return ins
        raise KeyError(site)

    def validate(self, allow_unmeasured: bool = False) -> None:
        sites = set(self.graph.sites)
        measured = self.measured_sites
        if len(set(measured)) != len(measured):
            raise PatternError("a site is measured twice")
        if set(measured) & set(self.output_sites):
            raise PatternError("output sites must stay unmeasured")
        if not set(self.input_sites) <= sites or not set(self.output_sites) <= sites:
            raise PatternError("inputs/outputs must be graph sites")
        covered = set(measured) | set(self.output_sites)
        if not allow_unmeasured and covered != sites:
            raise PatternError(f"sites neither measured nor output: {sites - covered}")
        seen: set = set()
        for ins in self.instructions:
            if not ins.sign_deps <= seen:
                raise PatternError(f"instruction at {ins.site!r} depends on a later or unknown outcome")
            seen.add(ins.outcome_id)
        if tuple(self.output_frame.keys) != self.output_sites:
            raise PatternError("output frame must be keyed by the output sites")
        if not self.output_frame.outcome_ids() <= seen:
            raise PatternError("output frame references undeclared outcomes")

    def with_target(self, u: np.ndarray | None) -> MeasurementPattern:
        return replace(self, target=None if u is None else np.asarray(u, dtype=complex))

    # JSON -------------------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "sites": list(self.graph.sites),
            "edges": [list(e) for e in self.graph.sorted_edges()],
            "inputs": list(self.input_sites),
            "outputs": list(self.output_sites),
            "instructions": [
                {
                    "site": ins.site,
                    "basis": ins.basis,
                    "theta": ins.angle,
                    "sign_deps": sorted(ins.sign_deps, key=self.graph.sites.index),
                    "id": ins.outcome_id,
                }
                for ins in self.instructions
            ],
            "frame": {
                str(k): {
                    "x_deps": sorted(self.output_frame[k].x, key=self.graph.sites.index),
                    "z_deps": sorted(self.output_frame[k].z, key=self.graph.sites.index),
                }
                for k in self.output_sites
            },
        }
        if self.graph.coords:
            out["coords"] = {str(k): list(v) for k, v in self.graph.coords.items()}
        if self.target is not None:
            out["unitary"] = matrix_to_json(self.target)
        return out

    @classmethod
    def from_json(cls, data: dict | str) -> MeasurementPattern:
        if isinstance(data, str):
            data = json.loads(data)
        sites = tuple(data["sites"])
        by_name = {str(s): s for s in sites}
        graph = ClusterGraph(
            sites,
            frozenset(frozenset(e) for e in data["edges"]),
            {by_name[k]: tuple(v) for k, v in data["coords"].items()} if "coords" in data else None,
        )
        instructions = []
        for d in data["instructions"]:
            if "id" in d and d["id"] != d["site"]:
                raise PatternError("outcome ids must equal the measured site")
            instructions.append(MeasurementInstruction(d["site"], d["basis"], d.get("theta", 0.0), frozenset(d.get("sign_deps", ()))))
        outputs = tuple(data["outputs"])
        frame = PauliFrame(
            outputs,
            {
                by_name[k]: FrameEntry(frozenset(v.get("x_deps", ())), frozenset(v.get("z_deps", ())))
                for k, v in data.get("frame", {}).items()
            },
        )
        target = matrix_from_json(data["unitary"]) if "unitary" in data else None
        p = cls(graph, tuple(data["inputs"]), outputs, tuple(instructions), frame, target)
        p.validate()
        return p


def identity_pattern(sites: Sequence[Site]) -> MeasurementPattern:
    sites = tuple(sites)
    return MeasurementPattern(ClusterGraph(sites), sites, sites, (), PauliFrame(sites))


# Execution -------------------------------------------------------------


class RunResult(NamedTuple):
    outcomes: OutcomeRecord
    output: QubitState
    frame: PauliFrame
    probability: float
    step_probabilities: tuple


class _Live:
    """Register of currently allocated sites; sites join lazily and leave when measured."""

    def __init__(self, sites: Sequence[Site], vec: np.ndarray):
        self.sites = list(sites)
        self.vec = np.asarray(vec, dtype=complex)

    def copy(self) -> _Live:
        return _Live(list(self.sites), self.vec.copy())

    def add_plus(self, site: Site) -> None:
        self.sites.append(site)
        self.vec = np.kron(self.vec, PLUS)

    def cz(self, a: Site, b: Site) -> None:
        n = len(self.sites)
        t = self.vec.reshape([2] * n).copy()
        idx = [slice(None)] * n
        idx[self.sites.index(a)] = 1
        idx[self.sites.index(b)] = 1
        t[tuple(idx)] *= -1
        self.vec = t.reshape(-1)

    def branch(self, site: Site, ket: np.ndarray) -> tuple[np.ndarray, float]:
        n = len(self.sites)
        k = self.sites.index(site)
        t = np.moveaxis(self.vec.reshape([2] * n), k, 0).reshape(2, -1)
        rest = ket.conj() @ t
        return rest, float(np.vdot(rest, rest).real)

    def collapse(self, site: Site, rest: np.ndarray, prob: float) -> None:
        self.sites.remove(site)
        self.vec = rest / math.sqrt(prob)


class _Executor:
    def __init__(self, pattern: MeasurementPattern):
        self.p = pattern
        self.nbrs = {s: pattern.graph.neighbors(s) for s in pattern.graph.sites}

    def start(self, input: QubitState | None) -> tuple[_Live, set]:
        ins = self.p.input_sites
        if ins:
            if input is None or input.num_qubits != len(ins):
                raise PatternError(f"pattern needs a {len(ins)}-qubit input")
            return _Live(ins, input.amplitudes.copy()), set()
        if input is not None and input.num_qubits:
            raise PatternError("pattern takes no input")
        return _Live([], np.array([1.0 + 0j])), set()

    def prepare(self, live: _Live, done: set, site: Site) -> None:
        """Bring ``site`` and its neighbours in and apply all of its edges."""
        if site not in live.sites:
            live.add_plus(site)
        for u in self.nbrs[site]:
            e = frozenset((site, u))
            if e in done:
                continue
            if u not in live.sites:
                live.add_plus(u)
            live.cz(site, u)
            done.add(e)

    def finish(self, live: _Live, done: set) -> QubitState:
        for s in self.p.output_sites:
            if s not in live.sites:
                live.add_plus(s)
        for e in self.p.graph.sorted_edges():
            if frozenset(e) not in done:
                live.cz(*e)
                done.add(frozenset(e))
        extra = set(live.sites) - set(self.p.output_sites)
        if extra:
            raise PatternError(f"sites left unmeasured: {extra}")
        n = len(live.sites)
        order = [live.sites.index(s) for s in self.p.output_sites]
        vec = np.transpose(live.vec.reshape([2] * n), order).reshape(-1) if n else live.vec
        return QubitState(vec / np.linalg.norm(vec))


def run_pattern(
    p: MeasurementPattern,
    input: QubitState | None = None,
    outcomes: Mapping | None = None,
    seed: int | np.random.Generator | None = None,
) -> RunResult:
    """Execute ``p``; force ``outcomes`` (branch mode) or sample with ``seed``.

    Sites enter the register only when a measurement needs them, so the live
    qubit count stays near the pattern's width rather than its size.
    """
    ex = _Executor(p)
    live, done = ex.start(input)
    rng = None if outcomes is not None else np.random.default_rng(seed)
    record = OutcomeRecord()
    total = 1.0
    steps = []
    for ins in p.instructions:
        ex.prepare(live, done, ins.site)
        branches = [live.branch(ins.site, ins.ket(s, record)) for s in (0, 1)]
        if outcomes is not None:
            s = int(outcomes[ins.outcome_id])
        else:
            s = int(rng.random() >= branches[0][1] / (branches[0][1] + branches[1][1]))
        rest, prob = branches[s]
        if prob < 1e-14:
            raise ZeroProbabilityBranch(f"outcome {s} at site {ins.site!r} has probability zero")
        live.collapse(ins.site, rest, prob)
        record[ins.outcome_id] = s
        total *= prob
        steps.append(prob)
    return RunResult(record, ex.finish(live, done), p.output_frame, total, tuple(steps))


class BranchTable(NamedTuple):
    """Every non-zero-probability branch of a pattern, row by row.

    ``bits[b, i]`` is the outcome of ``ids[i]`` in branch ``b``; ``outputs[b]``
    is the normalized output state over ``output_sites``.
    """

    ids: tuple
    bits: np.ndarray
    probability: np.ndarray
    step_probabilities: np.ndarray
    outputs: np.ndarray

    def record(self, b: int) -> OutcomeRecord:
        return OutcomeRecord({k: int(v) for k, v in zip(self.ids, self.bits[b])})


def branch_table(p: MeasurementPattern, input: QubitState | None = None) -> BranchTable:
    """All branches at once: one batched register, doubled at each measurement.

    The entangling schedule is the same in every branch, so the batch shares
    the live-site bookkeeping; only the measured ket differs per branch.
    """
    ex = _Executor(p)
    live, done = ex.start(input)
    sites = live.sites
    vec = live.vec[None, :]
    col = {ins.outcome_id: i for i, ins in enumerate(p.instructions)}
    bits = np.zeros((1, len(col)), dtype=np.uint8)
    steps = np.ones((1, len(col)))
    prob = np.ones(1)

    def add_plus(site: Site) -> None:
        nonlocal vec
        vec = (vec[:, :, None] * PLUS[None, None, :]).reshape(vec.shape[0], -1)
        sites.append(site)

    def entangle(site: Site, u: Site) -> None:
        nonlocal vec
        if u not in sites:
            add_plus(u)
        vec = _batched_cz(vec, sites.index(site), sites.index(u), len(sites))
        done.add(frozenset((site, u)))

    for i, ins in enumerate(p.instructions):
        if ins.site not in sites:
            add_plus(ins.site)
        for u in ex.nbrs[ins.site]:
            if frozenset((ins.site, u)) not in done:
                entangle(ins.site, u)
        b = vec.shape[0]
        pos = sites.index(ins.site)
        t = np.moveaxis(vec.reshape((b,) + (2,) * len(sites)), 1 + pos, 1).reshape(b, 2, -1)
        if ins.basis == "Z":
            rest = t
        else:
            sign = np.zeros(b, dtype=np.uint8)
            for d in ins.sign_deps:
                sign ^= bits[:, col[d]]
            e = np.exp(-1j * np.where(sign == 1, -ins.angle, ins.angle))[:, None]
            # <m_s(theta)| = (<0| + (-1)^s e^{-i theta} <1|) / sqrt 2
            rest = np.stack([t[:, 0] + e * t[:, 1], t[:, 0] - e * t[:, 1]], axis=1) / math.sqrt(2)
        q = np.einsum("bsr,bsr->bs", rest, rest.conj()).real
        keep = (q > 1e-14).reshape(-1)
        rest = (rest / np.sqrt(np.where(q > 0, q, 1))[:, :, None]).reshape(2 * b, -1)
        bits = np.repeat(bits, 2, axis=0)
        bits[:, i] = np.tile([0, 1], b)
        steps = np.repeat(steps, 2, axis=0)
        steps[:, i] = q.reshape(-1)
        prob = (prob[:, None] * q).reshape(-1)
        vec, bits, steps, prob = rest[keep], bits[keep], steps[keep], prob[keep]
        sites.remove(ins.site)

    for s in p.output_sites:
        if s not in sites:
            add_plus(s)
    for u, v in p.graph.sorted_edges():
        if frozenset((u, v)) not in done:
            entangle(u, v)
    extra = set(sites) - set(p.output_sites)
    if extra:
        raise PatternError(f"sites left unmeasured: {extra}")
    b = vec.shape[0]
    order = [1 + sites.index(s) for s in p.output_sites]
    vec = np.transpose(vec.reshape((b,) + (2,) * len(sites)), [0] + order).reshape(b, -1)
    vec = vec / np.linalg.norm(vec, axis=1, keepdims=True)
    return BranchTable(tuple(col), bits, prob, steps, vec)


def _batched_cz(vec: np.ndarray, a: int, b: int, n: int) -> np.ndarray:
    t = vec.reshape((vec.shape[0],) + (2,) * n).copy()
    idx = [slice(None)] * (n + 1)
    idx[1 + a] = 1
    idx[1 + b] = 1
    t[tuple(idx)] *= -1
    return t.reshape(vec.shape[0], -1)


def enumerate_branches(p: MeasurementPattern, input: QubitState | None = None) -> Iterator[RunResult]:
    """Every branch with non-zero probability, as :class:`RunResult` rows."""
    table = branch_table(p, input)
    for b in range(table.bits.shape[0]):
        yield RunResult(
            table.record(b),
            QubitState(table.outputs[b]),
            p.output_frame,
            float(table.probability[b]),
            tuple(table.step_probabilities[b]),
        )


# Building patterns -----------------------------------------------------


def angle_class(theta: float) -> str:
    """``'pauli'`` for multiples of pi, ``'clifford'`` for odd multiples of pi/2."""
    r = math.fmod(theta, math.pi)
    r = r + math.pi if r < 0 else r
    if min(r, math.pi - r) < _ANGLE_EPS:
        return "pauli"
    if abs(r - math.pi / 2) < _ANGLE_EPS:
        return "clifford"
    return "generic"


def measure_with_flips(site: Site, angle: float, flips: frozenset) -> tuple[MeasurementInstruction, frozenset]:
    """Instruction for ``M((-1)^{flips} angle)`` plus the outcome relabelling it implies.

    A sign flip is invisible at multiples of pi and is an outcome swap at odd
    multiples of pi/2, so those measurements never wait on earlier outcomes;
    the returned set is XORed into the site's outcome wherever it is used.
    """
    kind = angle_class(angle)
    if kind == "generic":
        return MeasurementInstruction(site, "M", angle, flips), frozenset()
    relabel = flips if kind == "clifford" else frozenset()
    return MeasurementInstruction(site, "M", angle), relabel


def w_chain(thetas: Sequence[float]) -> MeasurementPattern:
    """Line pattern applying ``W(thetas[0])`` first, then ``W(thetas[1])`` and so on.

    Each step measures the current head in ``M(-theta)``; the byproduct
    ``X^x Z^z`` in front of it becomes ``X^{s+z} Z^x`` once the angle sign
    follows ``x``.
    """
    k = len(thetas)
    graph = ClusterGraph.line(k + 1)
    x: frozenset = frozenset()
    z: frozenset = frozenset()
    instructions = []
    for site, theta in enumerate(thetas):
        ins, relabel = measure_with_flips(site, 0.0 - theta, x)
        instructions.append(ins)
        s = frozenset({site}) ^ relabel
        x, z = z ^ s, x
    frame = PauliFrame((k,), {k: FrameEntry(x, z)})
    return MeasurementPattern(graph, (0,), (k,), tuple(instructions), frame)


def pattern_single_step(theta: float) -> MeasurementPattern:
    """Measure site 0 in ``M(theta)``: site 1 holds ``X^{s0} W(-theta)|psi>``."""
    return w_chain([-theta])


def pattern_wire() -> MeasurementPattern:
    """Two X measurements: site 2 holds ``Z^{s0} X^{s1}|psi>``."""
    return w_chain([0.0, 0.0])


def pattern_euler(angles: EulerAngles) -> MeasurementPattern:
    """Four measurements realising ``Rx(zeta) Rz(eta) Rx(xi)``.

    ``Rx(a) ~ W(2a) W(0)`` and ``Rz(a) ~ W(0) W(2a)``; the two middle W(0)
    cancel, leaving the chain W(0), W(2 xi), W(2 eta), W(2 zeta).
    """
    return w_chain([0.0, 2 * angles.xi, 2 * angles.eta, 2 * angles.zeta])


def pattern_rx(theta: float) -> MeasurementPattern:
    """X on site 0, then ``M(-2 theta)`` on site 1 with its sign following ``s0``."""
    return w_chain([0.0, 2 * theta])


def pattern_rz(theta: float) -> MeasurementPattern:
    return w_chain([2 * theta, 0.0])


def pattern_cz(variant: str = "minimal") -> MeasurementPattern:
    """CZ between two logical wires.

    ``minimal`` is the bare edge between the inputs; ``grid`` is the fixture
    embedded in a 2x5 grid (two identity wires bridged in the middle column).
    """
    if variant == "minimal":
        graph = ClusterGraph((0, 1), frozenset({frozenset((0, 1))}))
        return MeasurementPattern(graph, (0, 1), (0, 1), (), PauliFrame((0, 1)))
    if variant == "grid":
        text = resources.files("mbqcc.fixtures").joinpath("cz_grid_pattern.json").read_text()
        return MeasurementPattern.from_json(text)
    raise ValueError(f"unknown CZ pattern variant {variant!r}")


# Pauli flow: absorbing known byproducts into a pattern ----------------------


def absorb_paulis(
    p: MeasurementPattern, site_paulis: Mapping[Site, FrameEntry], rename: Mapping | None = None
) -> tuple[list[MeasurementInstruction], PauliFrame]:
    """Rewrite ``p`` so it runs correctly with symbolic Paulis sitting on its sites.

    ``site_paulis`` are Paulis applied after entangling.  On an ``M`` site X
    negates the angle and Z swaps the outcome; on an ``Mz`` site X swaps the
    outcome; on an output site both pass into the frame.  ``rename`` maps the
    pattern's own outcome ids to those of the caller.
    """
    rename = dict(rename or {})
    subs: dict = {}
    out = []
    for ins in p.instructions:
        site = rename.get(ins.site, ins.site)
        pa = site_paulis.get(site, FrameEntry())
        deps = xor_substitute(ins.sign_deps, subs)
        if ins.basis == "Z":
            out.append(MeasurementInstruction(site, "Z"))
            subs[ins.outcome_id] = frozenset({site}) ^ pa.x
            continue
        new, relabel = measure_with_flips(site, ins.angle, deps ^ pa.x)
        out.append(new)
        subs[ins.outcome_id] = frozenset({site}) ^ pa.z ^ relabel
    keys = tuple(rename.get(k, k) for k in p.output_frame.keys)
    entries = {}
    for k, nk in zip(p.output_frame.keys, keys):
        e = p.output_frame[k]
        entries[nk] = FrameEntry(xor_substitute(e.x, subs), xor_substitute(e.z, subs)) ^ site_paulis.get(nk, FrameEntry())
    return out, PauliFrame(keys, entries)


def _fresh_names(taken: set, wanted: Sequence[Site]) -> dict:
    ints = [s for s in taken if isinstance(s, int)]
    nxt = max(ints, default=-1) + 1
    out = {}
    for s in wanted:
        while nxt in taken:
            nxt += 1
        out[s] = nxt
        taken.add(nxt)
        nxt += 1
    return out


def compose(
    p1: MeasurementPattern, p2: MeasurementPattern, wiring: Mapping[Site, Site] | None = None
) -> MeasurementPattern:
    """Run ``p2`` on (some of) ``p1``'s outputs.

    ``wiring`` maps p1 output sites onto p2 input sites (default: positional).
    The p2 sites are renamed into fresh integers, the graphs are merged with
    edge toggling (two CZs cancel), and p2's instructions are rewritten so that
    p1's byproduct on the wired outputs flows through p2.
    """
    if wiring is None:
        wiring = dict(zip(p1.output_sites, p2.input_sites))
    wiring = dict(wiring)
    if sorted(map(str, wiring.values())) != sorted(map(str, p2.input_sites)) or len(set(wiring.values())) != len(p2.input_sites):
        raise PatternError("wiring must be a bijection onto p2's inputs")
    if not set(wiring) <= set(p1.output_sites):
        raise PatternError("wiring must start at p1 outputs")
    rename = {v: k for k, v in wiring.items()}
    rest = [s for s in p2.graph.sites if s not in rename]
    rename.update(_fresh_names(set(p1.graph.sites), rest))

    edges = set(p1.graph.edges)
    p2_edges = [frozenset(rename[s] for s in e) for e in p2.graph.edges]
    for e in p2_edges:
        edges ^= {e}

    site_paulis: dict = {}
    for o in wiring:
        site_paulis[o] = p1.output_frame[o]
    for o, entry in list(site_paulis.items()):
        if not entry.x:
            continue
        for e in p2_edges:
            if o in e:
                (nb,) = e - {o}
                site_paulis[nb] = site_paulis.get(nb, FrameEntry()) ^ FrameEntry(frozenset(), entry.x)
    new_ins, frame2 = absorb_paulis(p2, site_paulis, rename)

    out_sites = []
    p2_in_index = {rename[s]: i for i, s in enumerate(p2.input_sites)}
    positional = len(p2.input_sites) == len(p2.output_sites)
    p2_outs = [rename[s] for s in p2.output_sites]
    for o in p1.output_sites:
        if o in wiring:
            if positional:
                out_sites.append(p2_outs[p2_in_index[o]])
        else:
            out_sites.append(o)
    if not positional:
        out_sites += p2_outs
    entries = {o: p1.output_frame[o] for o in p1.output_sites if o not in wiring}
    entries.update({o: frame2[o] for o in p2_outs})

    graph = ClusterGraph(tuple(p1.graph.sites) + tuple(rename[s] for s in rest), frozenset(edges))
    out = MeasurementPattern(
        graph, p1.input_sites, tuple(out_sites), tuple(p1.instructions) + tuple(new_ins), PauliFrame(tuple(out_sites), entries)
    )
    out.validate()
    return out


def with_extra_site(p: MeasurementPattern, site: Site, neighbors: Sequence[Site]) -> MeasurementPattern:
    """Add an unmeasured site joined to ``neighbors`` (left for :func:`delete_site_z`)."""
    if site in p.graph.sites:
        raise PatternError(f"site {site!r} already exists")
    edges = set(p.graph.edges) | {frozenset((site, n)) for n in neighbors}
    graph = ClusterGraph(p.graph.sites + (site,), frozenset(edges))
    return replace(p, graph=graph)


def delete_site_z(p: MeasurementPattern, site: Site) -> MeasurementPattern:
    """Remove an extraneous site by a leading Z measurement.

    Outcome ``k`` leaves ``Z^k`` on every neighbour, which is absorbed exactly
    as any other known byproduct.
    """
    if site in p.input_sites or site in p.output_sites:
        raise PatternError("cannot delete an input or output site")
    if site in p.measured_sites:
        raise PatternError(f"site {site!r} is already measured")
    if site not in p.graph.sites:
        raise PatternError(f"unknown site {site!r}")
    kz = FrameEntry(frozenset(), frozenset({site}))
    site_paulis = {nb: kz for nb in p.graph.neighbors(site)}
    new_ins, frame = absorb_paulis(p, site_paulis)
    out = replace(p, instructions=(MeasurementInstruction(site, "Z"),) + tuple(new_ins), output_frame=frame)
    out.validate()
    return out


def relabel(p: MeasurementPattern, mapping: Mapping[Site, Site], coords: Mapping | None = None) -> MeasurementPattern:
    """Rename sites (and with them outcome ids) through ``mapping``."""
    m = {s: mapping.get(s, s) for s in p.graph.sites}
    if len(set(m.values())) != len(m):
        raise PatternError("relabelling must be injective")
    graph = ClusterGraph(tuple(m.values()), frozenset(frozenset(m[s] for s in e) for e in p.graph.edges), coords)

    def ren(deps: frozenset) -> frozenset:
        return frozenset(m[d] for d in deps)

    instructions = tuple(replace(ins, site=m[ins.site], sign_deps=ren(ins.sign_deps)) for ins in p.instructions)
    outputs = tuple(m[s] for s in p.output_sites)
    frame = PauliFrame(outputs, {m[k]: FrameEntry(ren(e.x), ren(e.z)) for k, e in p.output_frame.entries.items()})
    return MeasurementPattern(graph, tuple(m[s] for s in p.input_sites), outputs, instructions, frame, p.target)


def grid_cz_pattern() -> MeasurementPattern:
    """Two five-site rows bridged by one vertical edge in the middle column.

    Each row is four X measurements (two identity wires back to back); the
    bridge acts as CZ on the logical qubits while they sit in column 2.
    """
    p = identity_pattern((0, 1))
    rows: list[list] = [[0], [1]]
    for half in range(2):
        for r in range(2):
            before = set(p.graph.sites)
            p = compose(p, pattern_wire(), {p.output_sites[r]: 0})
            rows[r] += sorted(set(p.graph.sites) - before)
        if half == 0:
            p = compose(p, pattern_cz(), dict(zip(p.output_sites, (0, 1))))
    cols = len(rows[0])
    mapping = {s: r * cols + c for r in range(2) for c, s in enumerate(rows[r])}
    coords = {r * cols + c: (r, c) for r in range(2) for c in range(cols)}
    p = relabel(p, mapping, coords)
    return replace(p, graph=ClusterGraph(tuple(sorted(p.graph.sites)), p.graph.edges, coords)).with_target(CZ)


def subgraph_pattern(p: MeasurementPattern, site: Site) -> MeasurementPattern:
    """``p`` with ``site`` and its edges removed (the pattern it was written for)."""
    graph = ClusterGraph(
        tuple(s for s in p.graph.sites if s != site), frozenset(e for e in p.graph.edges if site not in e)
    )
    return replace(p, graph=graph)
