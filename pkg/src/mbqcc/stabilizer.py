"""Symbolic stabilizer check of Clifford patterns over all outcome branches at once.

Each measurement outcome becomes a free GF(2) symbol, so stabilizer signs are
affine functions of the outcomes.  One run therefore covers every branch of a
pattern whose measurements are all Pauli measurements, no matter how many
there are.  The pattern's inputs are the halves of Bell pairs with reference
qubits, which makes the final state the Choi state of the realised map.

Generators are stored as ``(-1)^r X^x Z^z`` with ``Y`` for ``x = z = 1``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .mbqc import MeasurementPattern, angle_class
from .pauli import PauliOp, match_pauli
from .qmath import num_qubits_of


class NotClifford(ValueError):
    """The pattern contains a measurement outside the Pauli bases."""


def _g(x1: int, z1: int, x2: int, z2: int) -> int:
    """Power of i picked up when multiplying single-qubit Paulis in Y convention."""
    if x1 == z1 == 0:
        return 0
    if x1 == z1 == 1:
        return z2 - x2
    if x1 == 1:
        return z2 * (2 * x2 - 1)
    return x2 * (1 - 2 * z2)


class SymbolicTableau:
    """``n`` stabilizer generators with signs affine in ``k`` outcome symbols."""

    def __init__(self, n: int, k: int):
        self.n = n
        self.k = k
        self.x = np.zeros((n, n), dtype=np.uint8)
        self.z = np.zeros((n, n), dtype=np.uint8)
        self.r = np.zeros((n, k + 1), dtype=np.uint8)  # last column is the constant

    def multiply_into(self, h: int, i: int) -> None:
        """Row ``h`` becomes row ``i`` times row ``h`` (rows must commute)."""
        self.x[h], self.z[h], self.r[h] = _product(
            (self.x[i], self.z[i], self.r[i]), (self.x[h], self.z[h], self.r[h])
        )

    def h(self, a: int) -> None:
        self.r[:, -1] ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def cx(self, a: int, b: int) -> None:
        self.r[:, -1] ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def cz(self, a: int, b: int) -> None:
        self.h(b)
        self.cx(a, b)
        self.h(b)

    def measure(self, q: int, xo: int, zo: int, sign: np.ndarray, symbol: int) -> np.ndarray:
        """Measure ``(-1)^sign P`` on qubit ``q``; returns the outcome as an affine form.

        A random outcome gets the fresh ``symbol``; a determined one is read
        off the group.
        """
        anti = np.nonzero((self.x[:, q] & zo) ^ (self.z[:, q] & xo))[0]
        if anti.size == 0:
            target = _single(self.n, q, xo, zo)
            tau = self.member_sign(*target)
            if tau is None:
                raise RuntimeError("commuting observable outside the stabilizer group")
            return tau ^ sign
        p = anti[0]
        for h in anti[1:]:
            self.multiply_into(h, p)
        self.x[p], self.z[p] = _single(self.n, q, xo, zo)
        out = np.zeros(self.k + 1, dtype=np.uint8)
        out[symbol] = 1
        self.r[p] = out ^ sign
        return out

    def member_sign(self, x: np.ndarray, z: np.ndarray) -> np.ndarray | None:
        """Affine sign ``tau`` with ``(-1)^tau X^x Z^z`` in the group, or ``None``."""
        a = np.concatenate([self.x, self.z], axis=1).T  # columns are generators
        b = np.concatenate([x, z])
        coeffs = _solve_gf2(a, b)
        if coeffs is None:
            return None
        acc = (np.zeros(self.n, dtype=np.uint8), np.zeros(self.n, dtype=np.uint8), np.zeros(self.k + 1, dtype=np.uint8))
        for i in np.nonzero(coeffs)[0]:
            acc = _product((self.x[i], self.z[i], self.r[i]), acc)
        return acc[2]


def _single(n: int, q: int, xo: int, zo: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.zeros(n, dtype=np.uint8)
    z = np.zeros(n, dtype=np.uint8)
    x[q], z[q] = xo, zo
    return x, z


def _product(a: tuple, b: tuple) -> tuple:
    xa, za, ra = a
    xb, zb, rb = b
    total = sum(_g(int(p), int(q), int(s), int(t)) for p, q, s, t in zip(xa, za, xb, zb))
    total %= 4
    if total % 2:
        raise RuntimeError("multiplied anticommuting Paulis")
    r = ra ^ rb
    r = r.copy()
    r[-1] ^= total // 2
    return xa ^ xb, za ^ zb, r


def _solve_gf2(a: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    """Some ``c`` with ``a c = b`` over GF(2), or ``None``."""
    a = a.copy() % 2
    b = b.copy() % 2
    rows, cols = a.shape
    pivots = []
    r = 0
    for c in range(cols):
        hit = np.nonzero(a[r:, c])[0]
        if hit.size == 0:
            continue
        piv = r + hit[0]
        a[[r, piv]] = a[[piv, r]]
        b[[r, piv]] = b[[piv, r]]
        for rr in np.nonzero(a[:, c])[0]:
            if rr != r:
                a[rr] ^= a[r]
                b[rr] ^= b[r]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    if b[r:].any():
        return None
    sol = np.zeros(cols, dtype=np.uint8)
    for i, c in enumerate(pivots):
        sol[c] = b[i]
    return sol


_BASIS = {  # M(theta) measures P(theta) X P(theta)^dag
    0: (1, 0, 0),
    1: (1, 1, 0),
    2: (1, 0, 1),
    3: (1, 1, 1),
}


def _observable(ins) -> tuple[int, int, int]:
    if ins.basis == "Z":
        return 0, 1, 0
    kind = angle_class(ins.angle)
    if kind == "generic":
        raise NotClifford(f"M({ins.angle}) at {ins.site!r} is not a Pauli measurement")
    quarter = int(round(ins.angle / (np.pi / 2))) % 4
    return _BASIS[quarter]


def _hermitian_form(p: PauliOp) -> tuple[np.ndarray, np.ndarray, int]:
    """Sign bit of ``p`` rewritten with ``Y = i X Z`` on every x=z=1 slot."""
    ys = sum(a & b for a, b in zip(p.x, p.z))
    power = (p.phase - ys) % 4
    if power % 2:
        raise ValueError("non-Hermitian Pauli")
    return np.array(p.x, dtype=np.uint8), np.array(p.z, dtype=np.uint8), power // 2


class CliffordVerdict(NamedTuple):
    passed: bool
    free_symbols: int
    measurements: int
    mismatches: tuple


def verify_clifford_pattern(p: MeasurementPattern, target: np.ndarray) -> CliffordVerdict:
    """Check ``output = F(s) target input`` for every outcome string ``s`` at once.

    ``target`` must be a Clifford unitary on the input wires.  Random
    measurements have probability 1/2 per branch; determined ones fix their
    outcome as a parity of earlier symbols, which prunes the other branch.
    """
    n_in = len(p.input_sites)
    if num_qubits_of(np.asarray(target).shape[0]) != n_in or len(p.output_sites) != n_in:
        raise ValueError("target must act on the pattern's input wires")
    sites = list(p.graph.sites)
    q = {s: n_in + i for i, s in enumerate(sites)}
    n = n_in + len(sites)
    k = len(p.instructions)
    tab = SymbolicTableau(n, k)
    row = 0
    for i, s in enumerate(p.input_sites):
        tab.x[row, [i, q[s]]] = 1
        tab.z[row + 1, [i, q[s]]] = 1
        row += 2
    for s in sites:
        if s not in p.input_sites:
            tab.x[row, q[s]] = 1
            row += 1
    for a, b in p.graph.sorted_edges():
        tab.cz(q[a], q[b])

    outcome: dict = {}
    free = 0
    for idx, ins in enumerate(p.instructions):
        xo, zo, const = _observable(ins)
        sign = np.zeros(k + 1, dtype=np.uint8)
        sign[-1] = const
        if ins.basis == "M" and angle_class(ins.angle) == "clifford":
            for d in ins.sign_deps:
                sign ^= outcome[d]
        form = tab.measure(q[ins.site], xo, zo, sign, idx)
        free += int(form[idx])
        outcome[ins.outcome_id] = form

    mismatches = []
    for i in range(n_in):
        for label, (px, pz) in (("X", (1, 0)), ("Z", (0, 1))):
            local = np.zeros(2 * n_in, dtype=np.uint8)
            local[i], local[n_in + i] = px, pz
            pin = PauliOp(tuple(local[:n_in]), tuple(local[n_in:]))
            img = match_pauli(target @ pin.matrix() @ np.asarray(target).conj().T)
            if img is None:
                raise NotClifford("target is not Clifford")
            ix, iz, c = _hermitian_form(img)
            x = np.zeros(n, dtype=np.uint8)
            z = np.zeros(n, dtype=np.uint8)
            x[i], z[i] = px, pz
            want = np.zeros(k + 1, dtype=np.uint8)
            want[-1] = c
            for j, s in enumerate(p.output_sites):
                x[q[s]], z[q[s]] = ix[j], iz[j]
                entry = p.output_frame[s]
                # X^m anticommutes with a Z part, Z^n with an X part
                if iz[j]:
                    for d in entry.x:
                        want ^= outcome[d]
                if ix[j]:
                    for d in entry.z:
                        want ^= outcome[d]
            tau = tab.member_sign(x, z)
            if tau is None or (tau ^ want).any():
                mismatches.append(f"{label}{i}")
    return CliffordVerdict(not mismatches, free, k, tuple(mismatches))
