"""Pauli group arithmetic, symbolic byproduct frames and Clifford checks."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np

from .gates import Gate, I2, X, Z, equal_up_to_phase, matrix_of
from .qmath import is_unitary

OutcomeId = Hashable


@dataclass(frozen=True)
class PauliOp:
    """``i^phase * prod_j X_j^{x_j} Z_j^{z_j}``; X is written left of Z on each qubit."""

    x: tuple[int, ...]
    z: tuple[int, ...]
    phase: int = 0

    def __post_init__(self) -> None:
        if len(self.x) != len(self.z):
            raise ValueError("x and z bit strings differ in length")
        object.__setattr__(self, "x", tuple(int(b) & 1 for b in self.x))
        object.__setattr__(self, "z", tuple(int(b) & 1 for b in self.z))
        object.__setattr__(self, "phase", int(self.phase) % 4)

    @property
    def num_qubits(self) -> int:
        return len(self.x)

    @classmethod
    def identity(cls, n: int) -> PauliOp:
        return cls((0,) * n, (0,) * n)

    @classmethod
    def from_label(cls, label: str) -> PauliOp:
        """Labels over ``I X Y Z`` with an optional sign prefix (``-``, ``i``, ``-i``)."""
        phase = 0
        for prefix, k in (("-i", 3), ("+i", 1), ("i", 1), ("-", 2), ("+", 0)):
            if label.startswith(prefix):
                phase, label = k, label[len(prefix) :]
                break
        xs, zs = [], []
        for ch in label:
            xb, zb = {"I": (0, 0), "X": (1, 0), "Z": (0, 1), "Y": (1, 1)}[ch]
            xs.append(xb)
            zs.append(zb)
            if ch == "Y":  # Y = i X Z
                phase += 1
        return cls(tuple(xs), tuple(zs), phase)

    def matrix(self) -> np.ndarray:
        out = np.array([[1.0 + 0j]])
        for xb, zb in zip(self.x, self.z):
            single = (X if xb else I2) @ (Z if zb else I2)
            out = np.kron(out, single)
        return (1j**self.phase) * out

    @classmethod
    def from_matrix(cls, m: np.ndarray, tol: float = 1e-9) -> PauliOp:
        """Exact inverse of :meth:`matrix`; raises if ``m`` is not a phased Pauli."""
        found = match_pauli(m, tol)
        if found is None:
            raise ValueError("matrix is not a Pauli operator")
        return found

    def bare(self) -> PauliOp:
        return PauliOp(self.x, self.z)

    def __mul__(self, other: PauliOp) -> PauliOp:
        return pauli_mul(self, other)

    def label(self) -> str:
        chars = []
        for xb, zb in zip(self.x, self.z):
            chars.append({(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "XZ"}[(xb, zb)])
        sign = {0: "+", 1: "+i", 2: "-", 3: "-i"}[self.phase]
        return sign + "(" + ",".join(chars) + ")"


def pauli_mul(p: PauliOp, q: PauliOp) -> PauliOp:
    """Group product ``p*q``; moving q's X past p's Z costs a sign per qubit."""
    if p.num_qubits != q.num_qubits:
        raise ValueError("Pauli operators act on different qubit counts")
    swaps = sum(zp & xq for zp, xq in zip(p.z, q.x))
    return PauliOp(
        tuple(a ^ b for a, b in zip(p.x, q.x)),
        tuple(a ^ b for a, b in zip(p.z, q.z)),
        p.phase + q.phase + 2 * swaps,
    )


def match_pauli(m: np.ndarray, tol: float = 1e-9) -> PauliOp | None:
    """Return the Pauli equal to ``m`` (with its i^k phase), if any."""
    m = np.asarray(m, dtype=complex)
    n = int(round(math.log2(m.shape[0])))
    for bits in itertools.product((0, 1), repeat=2 * n):
        cand = PauliOp(bits[:n], bits[n:])
        pm = cand.matrix()
        idx = np.unravel_index(np.argmax(abs(pm)), pm.shape)
        ratio = m[idx] / pm[idx]
        k = int(round(np.angle(ratio) / (math.pi / 2))) % 4
        if abs(ratio - 1j**k) < tol and np.allclose(m, (1j**k) * pm, atol=tol, rtol=0):
            return PauliOp(cand.x, cand.z, k)
    return None


def pauli_coefficients(m: np.ndarray) -> dict[PauliOp, complex]:
    """Expansion ``m = sum c_P P`` over bare Paulis, ``c_P = Tr(P^dag m) / 2^n``."""
    m = np.asarray(m, dtype=complex)
    n = int(round(math.log2(m.shape[0])))
    out = {}
    for bits in itertools.product((0, 1), repeat=2 * n):
        p = PauliOp(bits[:n], bits[n:])
        out[p] = np.trace(p.matrix().conj().T @ m) / (1 << n)
    return out


# Propagation through gates ---------------------------------------------

CLIFFORD_KINDS = frozenset({"X", "Y", "Z", "H", "P_pi4", "CZ", "CX"})
_ROTATION_FLIP = {"Rx": "z", "Rz": "x", "Phase": "x", "W": "x"}


def _table(kind: str, x: list[int], z: list[int]) -> tuple[list[int], list[int], bool]:
    """Bits of ``p'`` and whether the angle flips, for ``g p = p' g'``."""
    if kind in ("X", "Y", "Z"):
        return x, z, False
    if kind == "H":
        return z, x, False
    if kind == "P_pi4":
        return x, [z[0] ^ x[0]], False
    if kind == "CZ":
        return x, [z[0] ^ x[1], z[1] ^ x[0]], False
    if kind == "CX":  # (control, target)
        return [x[0], x[1] ^ x[0]], [z[0] ^ z[1], z[1]], False
    if kind in ("Rx", "Rz", "Phase"):
        flip = bool(z[0] if _ROTATION_FLIP[kind] == "z" else x[0])
        return x, z, flip
    if kind == "W":
        # W(t) X = Z W(-t),  W(t) Z = X W(t)
        return z, x, bool(x[0])
    raise ValueError(f"no propagation rule for gate kind {kind!r}")


def propagate(g: Gate, p: PauliOp) -> tuple[PauliOp, Gate]:
    """Move ``p`` left through ``g``: returns ``(p', g')`` with ``g p = p' g'``.

    ``g'`` is ``g`` itself for Clifford kinds and ``g`` with a negated angle
    otherwise.  The phase of ``p'`` is exact whenever the relation holds with
    an ``i^k`` factor and is otherwise carried over from ``p`` (global phase is
    not tracked).
    """
    if p.num_qubits != g.arity:
        raise ValueError("Pauli must be restricted to the gate's targets")
    nx, nz, flip = _table(g.kind, list(p.x), list(p.z))
    g2 = g.with_theta(-g.theta) if flip else g
    bare = PauliOp(tuple(nx), tuple(nz))
    lhs = matrix_of(g) @ p.matrix()
    rhs = bare.matrix() @ matrix_of(g2)
    idx = np.unravel_index(np.argmax(abs(rhs)), rhs.shape)
    ratio = lhs[idx] / rhs[idx]
    k = int(round(np.angle(ratio) / (math.pi / 2))) % 4
    if abs(ratio - 1j**k) < 1e-12:
        return PauliOp(bare.x, bare.z, k), g2
    return PauliOp(bare.x, bare.z, p.phase), g2


# Clifford membership ---------------------------------------------------


def is_clifford(u: np.ndarray, n: int, tol: float = 1e-9) -> tuple[bool, dict[str, PauliOp | None]]:
    """Check ``u P u^dag`` is a Pauli for every generator ``X_j``, ``Z_j``.

    Returns the verdict and the conjugation table (``None`` marks a generator
    whose image is not a Pauli).
    """
    u = np.asarray(u, dtype=complex)
    if n > 4:
        raise ValueError("is_clifford is limited to 4 qubits")
    if u.shape != (1 << n, 1 << n) or not is_unitary(u):
        raise ValueError("expected a unitary on n qubits")
    witness: dict[str, PauliOp | None] = {}
    for j in range(n):
        for name in ("X", "Z"):
            bits = [0] * n
            bits[j] = 1
            gen = PauliOp(tuple(bits), (0,) * n) if name == "X" else PauliOp((0,) * n, tuple(bits))
            witness[f"{name}{j}"] = match_pauli(u @ gen.matrix() @ u.conj().T, tol)
    return all(v is not None for v in witness.values()), witness


# Symbolic frames -------------------------------------------------------


class OutcomeRecord(dict):
    """Outcome id -> bit; an id may be assigned only once."""

    def __setitem__(self, key: OutcomeId, value: int) -> None:
        if key in self:
            raise KeyError(f"outcome {key!r} already recorded")
        if value not in (0, 1):
            raise ValueError(f"outcome bit must be 0 or 1, got {value!r}")
        super().__setitem__(key, int(value))

    def update(self, *args, **kwargs) -> None:  # type: ignore[override]
        for k, v in dict(*args, **kwargs).items():
            self[k] = v


def parity(deps: Iterable[OutcomeId], record: Mapping[OutcomeId, int]) -> int:
    bit = 0
    for d in deps:
        if d not in record:
            raise KeyError(f"outcome {d!r} not resolved")
        bit ^= record[d]
    return bit


@dataclass(frozen=True)
class FrameEntry:
    x: frozenset = frozenset()
    z: frozenset = frozenset()

    def __xor__(self, other: FrameEntry) -> FrameEntry:
        return FrameEntry(self.x ^ other.x, self.z ^ other.z)


class PauliFrame:
    """Per-qubit symbolic byproduct ``X^{m} Z^{n}`` with XOR-set exponents."""

    def __init__(self, keys: Sequence[Hashable], entries: Mapping[Hashable, FrameEntry] | None = None):
        self.keys = tuple(keys)
        entries = dict(entries or {})
        unknown = set(entries) - set(self.keys)
        if unknown:
            raise KeyError(f"frame entries for unknown qubits {unknown}")
        self.entries = {k: entries.get(k, FrameEntry()) for k in self.keys}

    def __getitem__(self, key: Hashable) -> FrameEntry:
        return self.entries[key]

    def __xor__(self, other: PauliFrame) -> PauliFrame:
        if self.keys != other.keys:
            raise ValueError("frames over different qubits")
        return PauliFrame(self.keys, {k: self[k] ^ other[k] for k in self.keys})

    def __eq__(self, other: object) -> bool:
        return isinstance(other, PauliFrame) and self.keys == other.keys and self.entries == other.entries

    def __repr__(self) -> str:
        parts = []
        for k in self.keys:
            e = self[k]
            parts.append(f"{k}: X^{sorted(map(str, e.x))} Z^{sorted(map(str, e.z))}")
        return "PauliFrame(" + "; ".join(parts) + ")"

    def outcome_ids(self) -> set:
        ids: set = set()
        for e in self.entries.values():
            ids |= e.x | e.z
        return ids

    def substitute(self, subs: Mapping[OutcomeId, frozenset]) -> PauliFrame:
        """Replace each outcome id by an XOR-set, per ``subs``."""
        return PauliFrame(
            self.keys,
            {k: FrameEntry(xor_substitute(e.x, subs), xor_substitute(e.z, subs)) for k, e in self.entries.items()},
        )


def xor_substitute(deps: frozenset, subs: Mapping[OutcomeId, frozenset]) -> frozenset:
    out: frozenset = frozenset()
    for d in deps:
        out ^= subs.get(d, frozenset({d}))
    return out


def frame_resolve(f: PauliFrame, r: Mapping[OutcomeId, int]) -> PauliOp:
    """Evaluate each exponent as the XOR of its referenced outcome bits."""
    return PauliOp(
        tuple(parity(f[k].x, r) for k in f.keys),
        tuple(parity(f[k].z, r) for k in f.keys),
    )


def parity_depth(k: int) -> int:
    """Layers of pairwise XOR needed to sum ``k`` bits."""
    if k < 1:
        raise ValueError("parity_depth needs at least one bit")
    return (k - 1).bit_length()


__all__ = [
    "CLIFFORD_KINDS",
    "FrameEntry",
    "OutcomeRecord",
    "PauliFrame",
    "PauliOp",
    "equal_up_to_phase",
    "frame_resolve",
    "is_clifford",
    "match_pauli",
    "parity",
    "parity_depth",
    "pauli_mul",
    "propagate",
]
