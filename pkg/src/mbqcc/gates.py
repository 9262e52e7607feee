"""Gate catalog, circuits and the two single-qubit decompositions.

Rotations carry the full angle in the exponent: ``Rx(t) = exp(-i t X)``,
``Rz(t) = exp(-i t Z)``.  ``W(t) = H P(t)`` with ``P(t) = diag(1, e^{it})``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np

from .qmath import QubitState, is_unitary

SQRT1_2 = 1 / math.sqrt(2)

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)  # iY = ZX
H = SQRT1_2 * np.array([[1, 1], [1, -1]], dtype=complex)
P_PI4 = np.diag([1, 1j]).astype(complex)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)


def phase(theta: float) -> np.ndarray:
    return np.diag([1, np.exp(1j * theta)])


def rx(theta: float) -> np.ndarray:
    return math.cos(theta) * I2 - 1j * math.sin(theta) * X


def rz(theta: float) -> np.ndarray:
    return np.diag([np.exp(-1j * theta), np.exp(1j * theta)])


def w(theta: float) -> np.ndarray:
    e = np.exp(1j * theta)
    return SQRT1_2 * np.array([[1, e], [1, -e]])


def controlled(u: np.ndarray) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    d = u.shape[0]
    out = np.eye(2 * d, dtype=complex)
    out[d:, d:] = u
    return out


FIXED = {"X": X, "Z": Z, "Y": Y, "H": H, "P_pi4": P_PI4, "CZ": CZ, "CX": CX}
ROTATIONS = {"Phase": phase, "Rx": rx, "Rz": rz, "W": w}
ARITY = {"X": 1, "Z": 1, "Y": 1, "H": 1, "P_pi4": 1, "Phase": 1, "Rx": 1, "Rz": 1, "W": 1, "CZ": 2, "CX": 2}
# Explicit-matrix kinds, produced by measurement purging; not compilable.
MATRIX_KINDS = ("U", "CU")


@dataclass(frozen=True)
class Gate:
    """One gate application.

    ``condition`` lists measurement labels whose XOR switches the gate on;
    it is empty for ordinary gates.
    """

    kind: str
    targets: tuple[int, ...]
    theta: float | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)
    condition: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        object.__setattr__(self, "condition", tuple(self.condition))
        if len(set(self.targets)) != len(self.targets):
            raise ValueError(f"{self.kind}: repeated target")
        if self.kind in MATRIX_KINDS:
            if self.matrix is None:
                raise ValueError(f"{self.kind} needs an explicit matrix")
            m = np.asarray(self.matrix, dtype=complex)
            object.__setattr__(self, "matrix", m)
            want = 1 << (len(self.targets) - (self.kind == "CU"))
            if m.shape != (want, want) or not is_unitary(m):
                raise ValueError(f"{self.kind}: matrix does not fit its targets or is not unitary")
            return
        if self.kind not in ARITY:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != ARITY[self.kind]:
            raise ValueError(f"{self.kind} acts on {ARITY[self.kind]} qubit(s), got {self.targets}")
        if self.kind in ROTATIONS:
            if self.theta is None:
                raise ValueError(f"{self.kind} needs an angle")
            object.__setattr__(self, "theta", float(self.theta))
        elif self.theta is not None:
            raise ValueError(f"{self.kind} takes no angle")

    @property
    def arity(self) -> int:
        return len(self.targets)

    def with_theta(self, theta: float) -> Gate:
        return Gate(self.kind, self.targets, theta, self.matrix, self.condition)

    def __repr__(self) -> str:
        ang = "" if self.theta is None else f"({self.theta:.6g})"
        cond = f" if {'^'.join(self.condition)}" if self.condition else ""
        return f"{self.kind}{ang}{list(self.targets)}{cond}"


@dataclass(frozen=True)
class Measure:
    """Mid-circuit measurement of one qubit in the basis ``{U|0>, U|1>}``."""

    target: int
    label: str
    basis: np.ndarray = field(default_factory=lambda: I2.copy(), compare=False)

    def __post_init__(self) -> None:
        b = np.asarray(self.basis, dtype=complex)
        if b.shape != (2, 2) or not is_unitary(b):
            raise ValueError("measurement basis must be a 2x2 unitary")
        object.__setattr__(self, "basis", b)


Op = Union[Gate, Measure]


@dataclass
class Circuit:
    num_qubits: int
    gates: list[Op] = field(default_factory=list)

    def __post_init__(self) -> None:
        for g in self.gates:
            self._check(g)

    def _check(self, g: Op) -> None:
        targets = (g.target,) if isinstance(g, Measure) else g.targets
        if any(t < 0 or t >= self.num_qubits for t in targets):
            raise ValueError(f"{g!r} targets a qubit outside 0..{self.num_qubits - 1}")

    def append(self, kind_or_op: str | Op, *targets: int, theta: float | None = None) -> Circuit:
        op = kind_or_op if not isinstance(kind_or_op, str) else Gate(kind_or_op, targets, theta)
        self._check(op)
        self.gates.append(op)
        return self

    @property
    def has_measurements(self) -> bool:
        return any(isinstance(g, Measure) or g.condition for g in self.gates)

    def unitary(self) -> np.ndarray:
        """Full 2^n x 2^n matrix of a measurement-free circuit."""
        if self.has_measurements:
            raise ValueError("circuit has mid-circuit measurements")
        dim = 1 << self.num_qubits
        out = np.eye(dim, dtype=complex)
        for g in self.gates:
            out = embed(matrix_of(g), g.targets, self.num_qubits) @ out
        return out

    def apply(self, state: QubitState) -> QubitState:
        from .qmath import apply_matrix

        if self.has_measurements:
            raise ValueError("circuit has mid-circuit measurements")
        vec = state.amplitudes
        for g in self.gates:
            vec = apply_matrix(vec, [2] * self.num_qubits, matrix_of(g), g.targets)
        return QubitState(vec)

    # JSON interchange ---------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.num_qubits, "gates": [_op_to_json(g) for g in self.gates]}

    @classmethod
    def from_json(cls, data: dict | str) -> Circuit:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n"]), [_op_from_json(g) for g in data["gates"]])


def matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(m)]


def matrix_from_json(rows: Sequence) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)


def _op_to_json(g: Op) -> dict:
    if isinstance(g, Measure):
        return {"kind": "measure", "targets": [g.target], "label": g.label, "basis": matrix_to_json(g.basis)}
    out: dict = {"kind": g.kind}
    if g.theta is not None:
        out["theta"] = g.theta
    out["targets"] = list(g.targets)
    if g.matrix is not None:
        out["matrix"] = matrix_to_json(g.matrix)
    if g.condition:
        out["cond"] = list(g.condition)
    return out


def _op_from_json(d: dict) -> Op:
    if d["kind"] == "measure":
        basis = matrix_from_json(d["basis"]) if "basis" in d else I2
        (target,) = d["targets"]
        return Measure(int(target), str(d["label"]), basis)
    matrix = matrix_from_json(d["matrix"]) if "matrix" in d else None
    return Gate(d["kind"], tuple(d["targets"]), d.get("theta"), matrix, tuple(d.get("cond", ())))


def matrix_of(g: Gate) -> np.ndarray:
    if g.kind == "U":
        return g.matrix
    if g.kind == "CU":
        return controlled(g.matrix)
    if g.kind in ROTATIONS:
        return ROTATIONS[g.kind](g.theta)
    return FIXED[g.kind]


def embed(u: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Lift ``u`` on ``targets`` to the full n-qubit space."""
    from .qmath import apply_matrix

    dim = 1 << n
    cols = [apply_matrix(np.eye(dim, dtype=complex)[:, j], [2] * n, u, targets) for j in range(dim)]
    return np.stack(cols, axis=1)


# Decompositions -------------------------------------------------------

_EPS = 1e-12


@dataclass(frozen=True)
class EulerAngles:
    """``U ~ Rx(zeta) Rz(eta) Rx(xi)``; ``xi`` acts first."""

    xi: float
    eta: float
    zeta: float

    def matrix(self) -> np.ndarray:
        return rx(self.zeta) @ rz(self.eta) @ rx(self.xi)


@dataclass(frozen=True)
class WAngles:
    """``U ~ W(0) W(theta1) W(theta2) W(theta3)``."""

    theta1: float
    theta2: float
    theta3: float

    def matrix(self) -> np.ndarray:
        return w(0) @ w(self.theta1) @ w(self.theta2) @ w(self.theta3)


def _wrap(x: float, period: float) -> float:
    y = math.fmod(x, period)
    if y < 0:
        y += period
    if period - y < 1e-12:
        y = 0.0
    return 0.0 if abs(y) < 1e-15 else y


def _zxz(u: np.ndarray) -> tuple[float, float, float]:
    """Angles ``(a, b, c)`` with ``u ~ Rz(a) Rx(b) Rz(c)``, each reduced mod pi.

    ``Rz(a) Rx(b) Rz(c) = [[cos b e^{-i(a+c)}, -i sin b e^{-i(a-c)}], ...]`` and
    every rotation is pi-periodic up to sign, so pi is the natural range.
    """
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ValueError("expected a 2x2 unitary")
    v = u / np.sqrt(np.linalg.det(u))
    alpha, beta = v[0, 0], v[0, 1]
    b = math.atan2(abs(beta), abs(alpha))
    if abs(beta) < 1e-10:
        # diagonal: only a + c is fixed; put it all on the first-applied factor
        a, c = 0.0, -np.angle(alpha)
    elif abs(alpha) < 1e-10:
        a, c = 0.0, np.angle(1j * beta)
    else:
        s = -np.angle(alpha)  # a + c
        d = -np.angle(1j * beta)  # a - c
        a, c = (s + d) / 2, (s - d) / 2
    return _wrap(a, math.pi), _wrap(b, math.pi), _wrap(c, math.pi)


def euler_xzx(u: np.ndarray) -> EulerAngles:
    """Decompose ``u`` as ``Rx(zeta) Rz(eta) Rx(xi)`` up to global phase.

    Conjugating by H turns the XZX form into ZXZ, which :func:`_zxz` handles.
    Angles land in ``[0, pi)``; degenerate inputs put the free angle on ``xi``.
    """
    a, b, c = _zxz(H @ np.asarray(u, dtype=complex) @ H)
    return EulerAngles(xi=c, eta=b, zeta=a)


def w_decompose(u: np.ndarray) -> WAngles:
    """Find ``theta1..3`` with ``W(0)W(theta1)W(theta2)W(theta3) ~ u``.

    Uses ``W(0)W(a)W(b)W(c) ~ Rz(a/2) Rx(b/2) Rz(c/2)``.
    """
    a, b, c = _zxz(u)
    return WAngles(_wrap(2 * a, 2 * math.pi), _wrap(2 * b, 2 * math.pi), _wrap(2 * c, 2 * math.pi))


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Whether two matrices agree up to a global phase."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(abs(b)), b.shape)
    if abs(b[idx]) < _EPS:
        return bool(np.allclose(a, 0, atol=tol))
    ph = a[idx] / b[idx]
    if abs(abs(ph) - 1) > tol:
        return False
    return bool(np.allclose(a, ph * b, atol=tol, rtol=0))


def gate_names() -> Iterable[str]:
    return ARITY.keys()
