"""Teleportation-based gate application.

A scheme is a maximally entangled resource plus a family of unitaries
``U_i``; outcome ``i`` projects the input and one resource half onto
``(U_i^dag (x) I)|phi>`` and leaves ``U_i|input>`` on the other half.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import NamedTuple, Sequence

import numpy as np

from .gates import CZ, H, I2, X, Z, matrix_from_json, matrix_to_json
from .pauli import PauliOp, match_pauli
from .qmath import QubitState, contract, is_unitary

TOL = 1e-10


@dataclass(frozen=True, eq=False)
class MaxEntangled:
    """Bipartite ``d x d`` state whose Schmidt coefficients are all ``1/sqrt(d)``."""

    d: int
    vector: np.ndarray
    schmidt_form: bool = False

    def __post_init__(self) -> None:
        vec = np.asarray(self.vector, dtype=complex).reshape(-1)
        if vec.size != self.d * self.d:
            raise ValueError("resource vector has the wrong length")
        sv = np.linalg.svd(vec.reshape(self.d, self.d), compute_uv=False)
        if not np.allclose(sv, 1 / math.sqrt(self.d), atol=1e-12):
            raise ValueError("resource is not maximally entangled")
        object.__setattr__(self, "vector", vec)

    @classmethod
    def standard(cls, d: int) -> MaxEntangled:
        """``sum_i |i>|i> / sqrt(d)``."""
        return cls(d, np.eye(d, dtype=complex).reshape(-1) / math.sqrt(d), schmidt_form=True)

    @classmethod
    def h_state(cls) -> MaxEntangled:
        """``|H> = CZ|+>|+>``."""
        return cls(2, CZ @ np.full(4, 0.5, dtype=complex))


@dataclass(eq=False)
class TeleportScheme:
    d: int
    resource: MaxEntangled
    operators: list[np.ndarray]
    weights: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.operators = [np.asarray(u, dtype=complex) for u in self.operators]
        if not self.weights:
            self.weights = [1.0] * len(self.operators)
        if len(self.weights) != len(self.operators):
            raise ValueError("one weight per operator")
        if self.resource.d != self.d:
            raise ValueError("resource dimension does not match the scheme")
        for u in self.operators:
            if u.shape != (self.d, self.d) or not is_unitary(u):
                raise ValueError("scheme operators must be d x d unitaries")
        if any(k <= 0 for k in self.weights):
            raise ValueError("weights must be positive")

    def to_json(self) -> dict:
        return {"d": self.d, "ops": [matrix_to_json(u) for u in self.operators], "k": list(self.weights)}

    @classmethod
    def from_json(cls, data: dict | str) -> TeleportScheme:
        if isinstance(data, str):
            data = json.loads(data)
        d = int(data["d"])
        ops = [matrix_from_json(m) for m in data["ops"]]
        return cls(d, MaxEntangled.standard(d), ops, [float(k) for k in data["k"]])


def phi_u(u: np.ndarray, resource: MaxEntangled) -> np.ndarray:
    """``(U^dag (x) I)|phi>``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (resource.d, resource.d):
        raise ValueError("operator dimension does not match the resource")
    if not is_unitary(u):
        raise ValueError("operator is not unitary")
    return np.kron(u.conj().T, np.eye(resource.d)) @ resource.vector


def validate_operator_basis(ops: Sequence[np.ndarray]) -> bool:
    """Whether ``(1/d) Tr(U_i U_j^dag) = delta_ij`` for all pairs."""
    ops = [np.asarray(u, dtype=complex) for u in ops]
    d = ops[0].shape[0]
    if len(ops) != d * d:
        raise ValueError(f"an operator basis in dimension {d} needs {d * d} operators, got {len(ops)}")
    if not all(is_unitary(u) for u in ops):
        raise ValueError("operators must be unitary")
    gram = np.array([[np.trace(a @ b.conj().T) / d for b in ops] for a in ops])
    return bool(np.allclose(gram, np.eye(d * d), atol=TOL, rtol=0))


def validate_povm(scheme: TeleportScheme) -> bool:
    """Completeness ``sum_i k_i |phi(U_i)><phi(U_i)| = I (x) I``."""
    d = scheme.d
    total = np.zeros((d * d, d * d), dtype=complex)
    for u, k in zip(scheme.operators, scheme.weights):
        v = phi_u(u, scheme.resource)
        total += k * np.outer(v, v.conj())
    return bool(np.allclose(total, np.eye(d * d), atol=TOL, rtol=0))


def pauli_group_matrices(nq: int) -> list[np.ndarray]:
    """Bare Paulis ``X^x Z^z`` on ``nq`` qubits; single-qubit order I, X, Z, XZ."""
    singles = [I2, X, Z, X @ Z]
    out = []
    for combo in itertools.product(range(4), repeat=nq):
        m = np.array([[1.0 + 0j]])
        for c in combo:
            m = np.kron(m, singles[c])
        out.append(m)
    return out


def pauli_scheme(gate_u: np.ndarray | None = None, nq: int = 1) -> TeleportScheme:
    """Projective scheme with ``U_i = P_i gate_u`` over the bare Paulis."""
    d = 1 << nq
    gate_u = np.eye(d, dtype=complex) if gate_u is None else np.asarray(gate_u, dtype=complex)
    ops = [p @ gate_u for p in pauli_group_matrices(nq)]
    return TeleportScheme(d, MaxEntangled.standard(d), ops)


def doubled_bell_scheme() -> TeleportScheme:
    """Eight-element POVM: Bell basis plus H-rotated Bell basis, weights 1/2."""
    ops = [p for p in pauli_group_matrices(1)] + [p @ H for p in pauli_group_matrices(1)]
    return TeleportScheme(2, MaxEntangled.standard(2), ops, [0.5] * 8)


class TeleportResult(NamedTuple):
    outcome: int
    output: QubitState
    residual: PauliOp
    probability: float


def _branches(scheme: TeleportScheme, input_vec: np.ndarray) -> list[tuple[np.ndarray, float]]:
    d = scheme.d
    joint = np.kron(input_vec, scheme.resource.vector)
    out = []
    for u, k in zip(scheme.operators, scheme.weights):
        rest = contract(joint, [d, d, d], phi_u(u, scheme.resource), [0, 1])
        out.append((rest, float(k * np.vdot(rest, rest).real)))
    return out


def teleport_gate(
    scheme: TeleportScheme,
    gate_u: np.ndarray,
    input: QubitState,
    rng_seed: int | None = None,
    outcome: int | None = None,
) -> TeleportResult:
    """Teleport ``input`` through the scheme; the output is ``residual * gate_u * input``.

    Pass ``outcome`` to force a branch instead of sampling.
    """
    gate_u = np.asarray(gate_u, dtype=complex)
    d = scheme.d
    if input.amplitudes.size != d:
        raise ValueError("input dimension does not match the scheme")
    if not validate_povm(scheme):
        raise ValueError("scheme is not a valid measurement")
    residuals = []
    for u in scheme.operators:
        r = match_pauli(u @ gate_u.conj().T)
        if r is None:
            raise ValueError("scheme operator is not a Pauli multiple of gate_u")
        residuals.append(r)
    branches = _branches(scheme, input.amplitudes)
    probs = np.array([p for _, p in branches])
    if outcome is None:
        rng = np.random.default_rng(rng_seed)
        outcome = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        outcome = min(outcome, len(probs) - 1)
    vec, prob = branches[outcome]
    if prob <= 0:
        raise ValueError(f"outcome {outcome} has probability zero")
    return TeleportResult(outcome, QubitState(vec / np.linalg.norm(vec)), residuals[outcome], prob)


def teleport_projection(alpha: np.ndarray, u: np.ndarray | None, d: int) -> np.ndarray:
    """Project ``|alpha>_1 |phi>_23`` onto ``|phi(U)>_12``; returns the vector at 3."""
    res = MaxEntangled.standard(d)
    u = np.eye(d, dtype=complex) if u is None else u
    joint = np.kron(np.asarray(alpha, dtype=complex), res.vector)
    return contract(joint, [d, d, d], phi_u(u, res), [0, 1])


# Eight-dimensional CZ scheme ----------------------------------------------

WIRES = tuple(range(1, 9))
_GROUP_A = (1, 3, 5)
_GROUP_B = (2, 4, 6)
_OUT = (7, 8)
H_STATE = CZ @ np.full(4, 0.5, dtype=complex)


def ghz_basis() -> list[np.ndarray]:
    """``{|000>+-|111>, |001>+-|110>, |010>+-|101>, |100>+-|011>}``, + before -."""
    out = []
    for lead in (0b000, 0b001, 0b010, 0b100):
        for sign in (1, -1):
            v = np.zeros(8, dtype=complex)
            v[lead] = 1
            v[lead ^ 0b111] = sign
            out.append(v / math.sqrt(2))
    return out


def bond_pairings(wires: Sequence[int] = (3, 4, 5, 6, 7, 8)) -> list[tuple[tuple[int, int], ...]]:
    """All perfect matchings of ``wires`` (15 for six wires)."""
    wires = list(wires)
    if not wires:
        return [()]
    first, rest = wires[0], wires[1:]
    out = []
    for i, partner in enumerate(rest):
        for tail in bond_pairings(rest[:i] + rest[i + 1 :]):
            out.append(((first, partner),) + tail)
    return out


def _resource_state(pairing: Sequence[tuple[int, int]]) -> np.ndarray:
    """Six-qubit state on wires 3..8 with ``|H>`` on each bonded pair."""
    vec = np.array([1.0 + 0j])
    order: list[int] = []
    for a, b in pairing:
        vec = np.kron(vec, H_STATE)
        order += [a, b]
    axes = [order.index(wire) for wire in range(3, 9)]
    return np.transpose(vec.reshape([2] * 6), axes).reshape(-1)


def ghz_branch_operator(pairing: Sequence[tuple[int, int]], i: int, j: int) -> np.ndarray:
    """Linear map input(wires 1,2) -> output(wires 7,8) for outcome pair ``(i, j)``."""
    basis = ghz_basis()
    res = _resource_state(pairing)
    cols = []
    for k in range(4):
        e = np.zeros(4, dtype=complex)
        e[k] = 1
        full = np.kron(e, res)  # wire order 1..8
        rest = contract(full, [2] * 8, basis[i], [w - 1 for w in _GROUP_A])  # leaves 2,4,6,7,8
        rest = contract(rest, [2] * 5, basis[j], [0, 1, 2])
        cols.append(rest)
    return np.stack(cols, axis=1)


GHZ_CZ_TARGET = np.kron(H, H) @ CZ


def ghz_residuals(pairing: Sequence[tuple[int, int]]) -> dict[tuple[int, int], PauliOp] | None:
    """Pauli residual per branch if the branch law holds for every branch, else None."""
    table = {}
    for i in range(8):
        for j in range(8):
            m = ghz_branch_operator(pairing, i, j)
            scale = np.linalg.norm(m) / 2  # ||c P T||_F = 2|c| for a 4x4 unitary
            if scale < 1e-9:
                return None
            r = match_pauli(m @ GHZ_CZ_TARGET.conj().T / scale, tol=1e-9)
            if r is None:
                return None
            table[(i, j)] = r.bare()
    return table


def search_ghz_pairing() -> list[tuple[tuple[int, int], ...]]:
    """Every bond pairing of wires 3..8 for which all 64 branches obey the law."""
    return [p for p in bond_pairings() if ghz_residuals(p) is not None]


@lru_cache(maxsize=1)
def ghz_pairing() -> tuple[tuple[int, int], ...]:
    """Bond pairing stored in the fixture (derived by :func:`search_ghz_pairing`)."""
    text = resources.files("mbqcc.fixtures").joinpath("ghz_pairing.json").read_text()
    return tuple(tuple(p) for p in json.loads(text)["pairing"])


def teleport_cz_fig3(
    input: QubitState,
    rng_seed: int | None = None,
    outcomes: tuple[int, int] | None = None,
    pairing: Sequence[tuple[int, int]] | None = None,
) -> tuple[tuple[int, int], QubitState, PauliOp, float]:
    """Apply ``(H (x) H) CZ`` by two GHZ-basis measurements on wires 135 and 246.

    Returns the outcome pair, the normalized state on wires 7 and 8, the Pauli
    residual and the branch probability.
    """
    if input.num_qubits != 2:
        raise ValueError("input must be a two-qubit state")
    pairing = ghz_pairing() if pairing is None else tuple(pairing)
    residuals = ghz_residuals(pairing)
    if residuals is None:
        raise ValueError(f"pairing {pairing} does not realise the scheme")
    outs = {}
    for i in range(8):
        for j in range(8):
            v = ghz_branch_operator(pairing, i, j) @ input.amplitudes
            outs[(i, j)] = (v, float(np.vdot(v, v).real))
    keys = sorted(outs)
    if outcomes is None:
        rng = np.random.default_rng(rng_seed)
        probs = np.array([outs[k][1] for k in keys])
        idx = int(np.searchsorted(np.cumsum(probs), rng.random() * probs.sum(), side="right"))
        outcomes = keys[min(idx, len(keys) - 1)]
    vec, prob = outs[tuple(outcomes)]
    if prob <= 0:
        raise ValueError(f"outcome pair {outcomes} has probability zero")
    return tuple(outcomes), QubitState(vec / np.linalg.norm(vec)), residuals[tuple(outcomes)], prob



__all__ = [
    "MaxEntangled",
    "TeleportScheme",
    "TeleportResult",
    "doubled_bell_scheme",
    "ghz_pairing",
    "ghz_residuals",
    "teleport_projection",
    "pauli_scheme",
    "phi_u",
    "search_ghz_pairing",
    "teleport_cz_fig3",
    "teleport_gate",
    "validate_operator_basis",
    "validate_povm",
]
