"""Shared helpers for the test modules."""

import itertools

import numpy as np

from mbqcc.gates import Circuit
from mbqcc.qmath import QubitState

ACCEPTANCE: list[str] = []


def random_circuit(rng, n, max_gates, kinds, min_gates=1):
    """Random circuit over ``kinds``; two-qubit kinds get a random ordered pair."""
    c = Circuit(n)
    two = [k for k in kinds if k in ("CZ", "CX")]
    one = [k for k in kinds if k not in two]
    for _ in range(int(rng.integers(min_gates, max_gates + 1))):
        pool = one + (two if n > 1 else [])
        kind = pool[int(rng.integers(len(pool)))]
        if kind in two:
            a, b = rng.choice(n, size=2, replace=False)
            c.append(kind, int(a), int(b))
        elif kind in ("Rx", "Rz", "W", "Phase"):
            c.append(kind, int(rng.integers(n)), theta=float(rng.uniform(-np.pi, np.pi)))
        else:
            c.append(kind, int(rng.integers(n)))
    return c


def all_bits(k):
    return itertools.product((0, 1), repeat=k)


def apply_frame_inverse(vec, x, z):
    """Undo ``X^x Z^z`` (bit tuples over the output qubits)."""
    from mbqcc.pauli import PauliOp

    return PauliOp(tuple(x), tuple(z)).matrix().conj().T @ vec


def state(vec):
    return QubitState(np.asarray(vec) / np.linalg.norm(vec))


def eager_run(p, psi, kets, z_sites=()):
    """Entangle every edge first, then contract ``kets`` in instruction order.

    Independent of the lazy executor: one dense register over all sites.
    ``z_sites`` get a Z right after entangling.  Returns the normalized
    output vector (in ``p.output_sites`` order) and the branch probability.
    """
    from mbqcc.gates import CZ, Z
    from mbqcc.qmath import apply_matrix, contract

    sites = list(p.input_sites) + [s for s in p.graph.sites if s not in p.input_sites]
    n = len(sites)
    plus = np.array([1, 1]) / np.sqrt(2)
    vec = psi.amplitudes if psi is not None and p.input_sites else np.ones(1, dtype=complex)
    for _ in range(n - len(p.input_sites)):
        vec = np.kron(vec, plus)
    pos = {s: i for i, s in enumerate(sites)}
    for a, b in p.graph.sorted_edges():
        vec = apply_matrix(vec, [2] * n, CZ, [pos[a], pos[b]])
    for s in z_sites:
        vec = apply_matrix(vec, [2] * n, Z, [pos[s]])
    live = list(sites)
    for ins, ket in zip(p.instructions, kets):
        i = live.index(ins.site)
        vec = contract(vec, [2] * len(live), ket, [i])
        live.pop(i)
    prob = float(np.vdot(vec, vec).real)
    order = [live.index(s) for s in p.output_sites]
    k = len(live)
    if k:
        vec = np.transpose(vec.reshape([2] * k), order).reshape(-1)
    return vec / np.sqrt(prob) if prob > 0 else vec, prob


def branch_kets(p, record):
    return [ins.ket(record[ins.outcome_id], record) for ins in p.instructions]


def corrected(result_or_vec, frame=None, record=None):
    """Undo the resolved byproduct ``X^x Z^z`` on a run's output."""
    from mbqcc.pauli import frame_resolve

    if frame is None:
        r = result_or_vec
        vec, frame, record = r.output.amplitudes, r.frame, r.outcomes
    else:
        vec = result_or_vec
    return frame_resolve(frame, record).matrix().conj().T @ vec


def overlap(a, b):
    return float(abs(np.vdot(a, b)))


def random_measured_circuit(rng, n, max_gates, max_measurements=3):
    """Random circuit with mid-circuit measurements in random bases and
    gates classically controlled by earlier outcomes."""
    from mbqcc.gates import Gate, Measure
    from mbqcc.qmath import haar_unitary

    c = random_circuit(rng, n, max_gates, ["CX", "H", "Rx", "Rz"])
    for i in range(int(rng.integers(1, max_measurements + 1))):
        basis = haar_unitary(2, rng) if rng.random() < 0.5 else np.eye(2)
        pos = int(rng.integers(len(c.gates) + 1))
        c.gates.insert(pos, Measure(int(rng.integers(n)), f"m{i}", basis))
    ops = []
    seen = []
    for g in c.gates:
        ops.append(g)
        if isinstance(g, Measure):
            seen.append(g.label)
            k = int(rng.integers(1, len(seen) + 1))
            cond = tuple(str(s) for s in rng.choice(seen, size=k, replace=False))
            kind = ["X", "Z", "H"][int(rng.integers(3))]
            ops.append(Gate(kind, (int(rng.integers(n)),), condition=cond))
    return Circuit(n, ops)
