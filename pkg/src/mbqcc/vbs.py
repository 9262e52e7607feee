"""Valence-bond picture of cluster states.

Every bond carries ``|H> = CZ|+>|+>``; projecting each site's qubits onto
``span{|0...0>, |1...1>}`` (the map ``Pi``) leaves one logical qubit per site
and the cluster state on the bond graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .gates import CZ, X, Z, w
from .mbqc import ClusterGraph, build_cluster
from .qmath import QubitState, fidelity_up_to_phase

H_STATE = np.array([1, 1, 1, -1], dtype=complex) / 2  # CZ |+>|+>

Slot = tuple  # (site, slot index)


@dataclass(frozen=True)
class BondGrid:
    """Sites with ``arity`` qubits each; every qubit belongs to exactly one bond.

    A bond ``((a, i), (b, j))`` is ``|H>`` with slot ``(a, i)`` as its first qubit.
    """

    sites: tuple
    arity: dict
    bonds: tuple

    def __post_init__(self) -> None:
        used = [slot for bond in self.bonds for slot in bond]
        if len(set(used)) != len(used):
            raise ValueError("a slot is used by two bonds")
        want = {(s, i) for s in self.sites for i in range(self.arity[s])}
        if set(used) != want:
            raise ValueError(f"slots without a bond or unknown slots: {want ^ set(used)}")
        if any(a[0] == b[0] for a, b in self.bonds):
            raise ValueError("a bond must join two different sites")

    def qubit_order(self) -> list[Slot]:
        return [(s, i) for s in self.sites for i in range(self.arity[s])]

    def partition(self) -> list[list[int]]:
        idx = {slot: k for k, slot in enumerate(self.qubit_order())}
        return [[idx[(s, i)] for i in range(self.arity[s])] for s in self.sites]

    def graph(self) -> ClusterGraph:
        return ClusterGraph(self.sites, frozenset(frozenset((a[0], b[0])) for a, b in self.bonds))


def bond_grid_from_edges(sites: Sequence, edges: Sequence[tuple]) -> BondGrid:
    """One bond per edge; each site's slots follow its neighbours in site order."""
    sites = tuple(sites)
    pos = {s: i for i, s in enumerate(sites)}
    nbrs = {s: sorted((b if a == s else a for a, b in edges if s in (a, b)), key=pos.__getitem__) for s in sites}
    bonds = []
    for a, b in edges:
        a, b = sorted((a, b), key=pos.__getitem__)
        bonds.append(((a, nbrs[a].index(b)), (b, nbrs[b].index(a))))
    return BondGrid(sites, {s: len(nbrs[s]) for s in sites}, tuple(bonds))


def line_grid(length: int) -> BondGrid:
    if length < 2:
        raise ValueError("a line needs at least two sites")
    return bond_grid_from_edges(range(length), [(i, i + 1) for i in range(length - 1)])


def rect_grid(rows: int, cols: int) -> BondGrid:
    """Row-major sites; corners have arity 2, edges 3, the interior 4."""
    g = ClusterGraph.grid(rows, cols)
    return bond_grid_from_edges(g.sites, g.sorted_edges())


def build_grid_state(g: BondGrid) -> QubitState:
    """Product of ``|H>`` over all bonds, qubits ordered by (site, slot)."""
    order = g.qubit_order()
    bond_slots = [slot for bond in g.bonds for slot in bond]
    vec = np.array([1.0 + 0j])
    for _ in g.bonds:
        vec = np.kron(vec, H_STATE)
    n = len(order)
    perm = [bond_slots.index(slot) for slot in order]
    return QubitState(np.transpose(vec.reshape([2] * n), perm).reshape(-1))


class PiProjector(NamedTuple):
    arity: int

    @property
    def matrix(self) -> np.ndarray:
        m = np.zeros((2, 1 << self.arity), dtype=complex)
        m[0, 0] = 1
        m[1, -1] = 1
        return m


def pi_project(state: QubitState, sites: Sequence[Sequence[int]]) -> QubitState:
    """Apply ``Pi`` site by site; result has one qubit per site, in ``sites`` order."""
    n = state.num_qubits
    flat = [q for site in sites for q in site]
    if sorted(flat) != list(range(n)) or any(len(site) == 0 for site in sites):
        raise ValueError("sites must partition all qubits")
    t = state.amplitudes.reshape([2] * n)
    labels: list = [("q", q) for q in range(n)]
    for i, site in enumerate(sites):
        pos = [labels.index(("q", q)) for q in site]
        t = np.moveaxis(t, pos, list(range(t.ndim - len(site), t.ndim)))
        labels = [lab for j, lab in enumerate(labels) if j not in pos] + [("q", q) for q in site]
        t = t.reshape(t.shape[: t.ndim - len(site)] + (-1,)) @ PiProjector(len(site)).matrix.T
        labels = labels[: len(labels) - len(site)] + [("s", i)]
    t = np.transpose(t, [labels.index(("s", i)) for i in range(len(sites))])
    return QubitState(t.reshape(-1), subnormalized=True)


def verify_lemma3(geometry: int | tuple[int, int]) -> float:
    """Fidelity between the projected bond state and the cluster state."""
    g = line_grid(geometry) if isinstance(geometry, int) else rect_grid(*geometry)
    if len(g.sites) > 10:
        raise ValueError("desk-scale geometries only (at most 10 sites)")
    projected = pi_project(build_grid_state(g), g.partition()).normalized()
    return fidelity_up_to_phase(projected, build_cluster(g.graph()))


def bond_pair_state(psi1: QubitState, psi2: QubitState) -> QubitState:
    """``Pi x Pi`` applied to ``|psi1> |H> |psi2>``, normalized."""
    full = np.kron(np.kron(psi1.amplitudes, H_STATE), psi2.amplitudes)
    return pi_project(QubitState(full), [[0, 1], [2, 3]]).normalized()


SIGMAS = {"I": np.eye(2, dtype=complex), "X": X, "Z": Z, "XZ": X @ Z}


class RotatedBell(NamedTuple):
    states: tuple
    kinds: tuple  # "plus", "minus" or "complement"


def rotated_bell_w(theta: float) -> RotatedBell:
    """``(W(-theta)^dag sigma_a x I)|H>`` for ``sigma_a`` in I, X, Z, XZ.

    The first two are ``(|00> +- e^{i theta}|11>)/sqrt 2``; the last two
    live in the span of ``|01>, |10>``.
    """
    rot = w(-theta).conj().T
    states = tuple(np.kron(rot @ s, np.eye(2)) @ H_STATE for s in SIGMAS.values())
    kinds = []
    for v in states:
        if abs(v[1]) < 1e-12 and abs(v[2]) < 1e-12:
            kinds.append("plus" if abs(v[3] / v[0] - np.exp(1j * theta)) < 1e-9 else "minus")
        elif abs(v[0]) < 1e-12 and abs(v[3]) < 1e-12:
            kinds.append("complement")
        else:
            kinds.append("mixed")
    return RotatedBell(states, tuple(kinds))


def hbell_basis() -> dict[str, np.ndarray]:
    """``(sigma x I)|H>`` for sigma in I, X, Z, XZ."""
    return {k: np.kron(s, np.eye(2)) @ H_STATE for k, s in SIGMAS.items()}


def hbell_cz_images() -> dict[str, tuple[str, int]]:
    """Where CZ sends each ``|H>``-Bell state: ``(product label, sign)``."""
    plus = np.array([1, 1]) / math.sqrt(2)
    minus = np.array([1, -1]) / math.sqrt(2)
    products = {a + b: np.kron(u, v) for a, u in (("+", plus), ("-", minus)) for b, v in (("+", plus), ("-", minus))}
    out = {}
    for k, v in hbell_basis().items():
        img = CZ @ v
        for lab, p in products.items():
            ov = np.vdot(p, img)
            if abs(abs(ov) - 1) < 1e-12:
                out[k] = (lab, int(round(ov.real)))
    return out


def teleport_w_branch(psi: QubitState, theta: float, a: int) -> tuple[np.ndarray, float]:
    """Project ``|psi> |H>`` onto rotated-Bell state ``a`` on the first two qubits.

    Returns the normalized leftover state and the branch probability.
    """
    full = np.kron(psi.amplitudes, H_STATE).reshape(4, 2)
    out = rotated_bell_w(theta).states[a].conj() @ full
    prob = float(np.vdot(out, out).real)
    return out / math.sqrt(prob), prob
