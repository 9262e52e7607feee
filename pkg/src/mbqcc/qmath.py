"""Dense state-vector and density-matrix helpers.

Qubit 0 is the most significant bit of a basis label, so ``|q0 q1 ... q_{n-1}>``
reads left to right exactly like a written tensor product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12
UNITARY_TOL = 1e-10


class DimensionError(ValueError):
    """Raised for mismatched dimensions or bad qubit indices."""


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        return False
    return bool(np.allclose(u.conj().T @ u, np.eye(u.shape[0]), atol=tol, rtol=0))


def num_qubits_of(dim: int) -> int:
    n = int(dim).bit_length() - 1
    if dim < 1 or 1 << n != dim:
        raise DimensionError(f"dimension {dim} is not a power of two")
    return n


@dataclass(frozen=True, eq=False)
class QubitState:
    """Amplitude vector over ``num_qubits`` qubits.

    ``subnormalized`` marks the result of a projection; such states keep their
    norm (its square is the probability of the projective outcome).
    """

    amplitudes: np.ndarray
    subnormalized: bool = False
    num_qubits: int = field(init=False)

    def __post_init__(self) -> None:
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "num_qubits", num_qubits_of(amps.size))
        if not self.subnormalized and abs(np.linalg.norm(amps) - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {np.linalg.norm(amps)!r} is not 1")

    @classmethod
    def from_label(cls, label: str) -> QubitState:
        """Product state from a string over ``0 1 + -``."""
        singles = {
            "0": np.array([1, 0]),
            "1": np.array([0, 1]),
            "+": np.array([1, 1]) / np.sqrt(2),
            "-": np.array([1, -1]) / np.sqrt(2),
        }
        vec = np.array([1.0 + 0j])
        for ch in label:
            vec = np.kron(vec, singles[ch])
        return cls(vec)

    @classmethod
    def zeros(cls, n: int) -> QubitState:
        vec = np.zeros(1 << n, dtype=complex)
        vec[0] = 1
        return cls(vec)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self) -> QubitState:
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return QubitState(self.amplitudes / nrm)

    def density(self) -> DensityMatrix:
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def __repr__(self) -> str:
        flag = ", subnormalized" if self.subnormalized else ""
        return f"QubitState(n={self.num_qubits}{flag})"


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    entries: np.ndarray
    num_qubits: int = field(init=False)

    def __post_init__(self) -> None:
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise DimensionError("density matrix must be square")
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "num_qubits", num_qubits_of(rho.shape[0]))
        if not np.allclose(rho, rho.conj().T, atol=1e-12, rtol=0):
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if not 0 < tr <= 1 + 1e-12:
            raise ValueError(f"trace {tr} outside (0, 1]")
        if np.linalg.eigvalsh(rho).min() < -1e-10:
            raise ValueError("density matrix is not positive semidefinite")

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries).real)


Operand = Union[QubitState, np.ndarray]


def tensor(a: Operand, b: Operand) -> Operand:
    """Kronecker product; ``a``'s qubits come first."""
    if isinstance(a, QubitState) and isinstance(b, QubitState):
        return QubitState(
            np.kron(a.amplitudes, b.amplitudes),
            subnormalized=a.subnormalized or b.subnormalized,
        )
    if isinstance(a, QubitState) or isinstance(b, QubitState):
        raise TypeError("tensor needs two states or two matrices")
    return np.kron(np.asarray(a), np.asarray(b))


def _check_targets(targets: Sequence[int], n: int) -> list[int]:
    targets = [int(t) for t in targets]
    if len(set(targets)) != len(targets):
        raise DimensionError(f"repeated target in {targets}")
    if any(t < 0 or t >= n for t in targets):
        raise DimensionError(f"targets {targets} out of range for {n} qubits")
    return targets


def apply_matrix(vec: np.ndarray, dims: Sequence[int], u: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Apply ``u`` to the listed subsystems of a vector with local ``dims``.

    No unitarity check; used for qudit work and for projectors.
    """
    dims = list(dims)
    k = len(targets)
    psi = np.asarray(vec).reshape(dims)
    tdims = [dims[t] for t in targets]
    op = np.asarray(u).reshape(tdims + tdims)
    psi = np.tensordot(op, psi, axes=(list(range(k, 2 * k)), list(targets)))
    psi = np.moveaxis(psi, list(range(k)), list(targets))
    return psi.reshape(-1)


def contract(vec: np.ndarray, dims: Sequence[int], ket: np.ndarray, targets: Sequence[int]) -> np.ndarray:
    """Contract ``<ket|`` into the listed subsystems; returns the leftover vector."""
    dims = list(dims)
    psi = np.asarray(vec).reshape(dims)
    bra = np.asarray(ket).conj().reshape([dims[t] for t in targets])
    out = np.tensordot(bra, psi, axes=(list(range(len(targets))), list(targets)))
    return out.reshape(-1)


def apply_unitary(state: QubitState, u: np.ndarray, targets: Sequence[int]) -> QubitState:
    u = np.asarray(u, dtype=complex)
    targets = _check_targets(targets, state.num_qubits)
    if u.shape != (1 << len(targets), 1 << len(targets)):
        raise DimensionError(f"matrix shape {u.shape} does not fit {len(targets)} targets")
    if not is_unitary(u):
        raise ValueError("matrix is not unitary")
    out = apply_matrix(state.amplitudes, [2] * state.num_qubits, u, targets)
    return QubitState(out, subnormalized=state.subnormalized)


def project(state: QubitState, ket: QubitState | np.ndarray, targets: Sequence[int]) -> QubitState:
    """Apply ``<ket|`` to ``targets``; the rest of the register survives, subnormalized."""
    targets = _check_targets(targets, state.num_qubits)
    ket = ket.amplitudes if isinstance(ket, QubitState) else np.asarray(ket, dtype=complex)
    if ket.size != 1 << len(targets):
        raise DimensionError("ket dimension does not match the targets")
    if len(targets) == state.num_qubits:
        raise DimensionError("projection must leave at least one qubit")
    out = contract(state.amplitudes, [2] * state.num_qubits, ket, targets)
    return QubitState(out, subnormalized=True)


def partial_trace(rho: DensityMatrix | np.ndarray, keep: Sequence[int]) -> DensityMatrix:
    mat = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    n = num_qubits_of(mat.shape[0])
    keep = _check_targets(keep, n)
    if not keep:
        raise DimensionError("keep at least one qubit")
    return DensityMatrix(reduce_density(mat, [2] * n, keep))


def reduce_density(mat: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Raw partial trace for arbitrary local dimensions; ``keep`` order is preserved."""
    dims = list(dims)
    n = len(dims)
    keep = list(keep)
    drop = [i for i in range(n) if i not in keep]
    t = np.asarray(mat).reshape(dims + dims)
    row = list(range(n))
    col = list(range(n, 2 * n))
    for i in drop:
        col[i] = row[i]
    out = [row[i] for i in keep] + [col[i] for i in keep]
    t = np.einsum(t, row + col, out)
    d = int(np.prod([dims[i] for i in keep]))
    return t.reshape(d, d)


def fidelity_up_to_phase(a: QubitState, b: QubitState) -> float:
    """``|<a|b>|`` for normalized states, clipped into [0, 1]."""
    if a.num_qubits != b.num_qubits:
        raise DimensionError("states have different qubit counts")
    return float(min(1.0, abs(np.vdot(a.amplitudes, b.amplitudes))))


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Gaussian matrix (phases fixed)."""
    a = (rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(a)
    diag = np.diag(r)
    return q * (diag / abs(diag))


def random_vector(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_state(n: int, rng: np.random.Generator) -> QubitState:
    return QubitState(random_vector(1 << n, rng))
