"""Classical simulation of 1-qubit measurements on ladder states.

A ladder state on ``n`` lines starts from ``|0...0>`` and applies
``U_{0,1}, U_{1,2}, ...`` in order.  The probability of any outcome-specified
set of measurements is computed by one downward sweep that never holds more
than two lines: each line is measured (or traced out) right after the last
unitary that touches it.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .gates import CZ, H, I2, matrix_from_json, matrix_to_json
from .qmath import QubitState, apply_matrix, is_unitary, reduce_density

KET0 = np.array([[1, 0], [0, 0]], dtype=complex)


@dataclass(frozen=True, eq=False)
class LadderSpec:
    n: int
    unitaries: tuple

    def __post_init__(self) -> None:
        us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
        if self.n < 2:
            raise ValueError("a ladder needs at least two lines")
        if len(us) != self.n - 1:
            raise ValueError(f"{self.n} lines need {self.n - 1} unitaries, got {len(us)}")
        for i, u in enumerate(us):
            if u.shape != (4, 4) or not is_unitary(u):
                raise ValueError(f"unitary {i} is not a 4x4 unitary")
        object.__setattr__(self, "unitaries", us)

    def to_json(self) -> dict:
        return {"n": self.n, "unitaries": [matrix_to_json(u) for u in self.unitaries]}

    @classmethod
    def from_json(cls, data: dict | str) -> LadderSpec:
        if isinstance(data, str):
            data = json.loads(data)
        return cls(int(data["n"]), tuple(matrix_from_json(u) for u in data["unitaries"]))


class QueryItem(NamedTuple):
    """Measure ``line`` in ``Mz`` (basis ``"Z"``) or ``M(theta)`` and keep ``outcome``."""

    line: int
    basis: str
    theta: float
    outcome: int

    def projector(self) -> np.ndarray:
        if self.basis == "Z":
            ket = np.array([1 - self.outcome, self.outcome], dtype=complex)
        elif self.basis == "M":
            ket = np.array([1, (-1) ** self.outcome * np.exp(1j * self.theta)]) / math.sqrt(2)
        else:
            raise ValueError(f"unknown basis {self.basis!r}")
        return np.outer(ket, ket.conj())


def make_query(items: Iterable, n: int | None = None) -> tuple[QueryItem, ...]:
    """Canonical form: sorted by line, each line at most once."""
    out = []
    for it in items:
        it = it if isinstance(it, QueryItem) else QueryItem(*it)
        if it.outcome not in (0, 1) or it.basis not in ("Z", "M"):
            raise ValueError(f"malformed query item {it}")
        if it.line < 0 or (n is not None and it.line >= n):
            raise ValueError(f"line {it.line} outside the ladder")
        out.append(QueryItem(int(it.line), it.basis, float(it.theta), int(it.outcome)))
    out.sort(key=lambda q: q.line)
    lines = [q.line for q in out]
    if len(set(lines)) != len(lines):
        raise ValueError("a line is queried twice")
    return tuple(out)


@dataclass
class LadderSimState:
    """Current sweep position; ``rho`` covers at most two lines."""

    line: int
    rho: np.ndarray
    subnorm: float = 1.0

    def check(self) -> None:
        if self.rho.shape[0] > 4:
            raise AssertionError(f"sweep holds {self.rho.shape[0]}-dimensional state, more than two lines")


def joint_probability(
    spec: LadderSpec, query: Iterable, observer: Callable[[LadderSimState], None] | None = None
) -> float:
    """Probability that every queried line returns its listed outcome."""
    q = {it.line: it for it in make_query(query, spec.n)}
    state = LadderSimState(0, KET0.copy())
    for m, u in enumerate(spec.unitaries):
        sigma = u @ np.kron(state.rho, KET0) @ u.conj().T
        state = LadderSimState(m, sigma, state.subnorm)
        state.check()
        if observer:
            observer(state)
        if m in q:
            proj = np.kron(q[m].projector(), I2)
            sigma = proj @ sigma @ proj
        rho = reduce_density(sigma, [2, 2], [1])
        state = LadderSimState(m + 1, rho, float(np.trace(rho).real))
        state.check()
        if observer:
            observer(state)
    last = spec.n - 1
    if last in q:
        p = q[last].projector()
        state.rho = p @ state.rho @ p
    return float(np.trace(state.rho).real)


def ladder_state(spec: LadderSpec) -> QubitState:
    """Full statevector of the ladder (brute force, for cross-checks)."""
    vec = QubitState.zeros(spec.n).amplitudes.copy()
    for m, u in enumerate(spec.unitaries):
        vec = apply_matrix(vec, [2] * spec.n, u, [m, m + 1])
    return QubitState(vec)


def brute_force_probability(spec: LadderSpec, query: Iterable) -> float:
    vec = ladder_state(spec).amplitudes
    for it in make_query(query, spec.n):
        vec = apply_matrix(vec, [2] * spec.n, it.projector(), [it.line])
    return float(np.vdot(vec, vec).real)


def cluster_ladder(n: int) -> LadderSpec:
    """Ladder whose state is the n-line cluster state.

    The first step is ``CZ (H x H)``; later steps only rotate the fresh line,
    ``CZ (I x H)``, since the upper line already carries its ``|+>``.
    """
    if n < 2:
        raise ValueError("a ladder needs at least two lines")
    first = CZ @ np.kron(H, H)
    rest = CZ @ np.kron(I2, H)
    return LadderSpec(n, (first,) + (rest,) * (n - 2))


def random_ladder(n: int, rng: np.random.Generator) -> LadderSpec:
    from .qmath import haar_unitary

    return LadderSpec(n, tuple(haar_unitary(4, rng) for _ in range(n - 1)))


# Sampling --------------------------------------------------------------

History = tuple  # of QueryItem
Strategy = Callable[[History], "tuple[int, str, float] | None"]


def fixed_order(steps: Sequence[tuple[int, str, float]]) -> Strategy:
    """Non-adaptive strategy: measure the listed (line, basis, theta) in order."""
    steps = list(steps)

    def choose(history: History):
        return steps[len(history)] if len(history) < len(steps) else None

    return choose


def sign_adaptive(lines: Sequence[int], angles: Sequence[float]) -> Strategy:
    """Measure ``lines`` in order with ``M((-1)^{s_prev} theta)``, the 1WQC sign rule."""

    def choose(history: History):
        k = len(history)
        if k == len(lines):
            return None
        flip = history[-1].outcome if history else 0
        return lines[k], "M", (-1) ** flip * angles[k]

    return choose


class _Memo:
    def __init__(self, spec: LadderSpec):
        self.spec = spec
        self.cache: dict = {}

    def __call__(self, history: History) -> float:
        key = make_query(history)
        if key not in self.cache:
            self.cache[key] = joint_probability(self.spec, key) if key else 1.0
        return self.cache[key]


def _next(memo: _Memo, strategy: Strategy, history: History, seen: set) -> tuple[QueryItem, float] | None:
    choice = strategy(history)
    if choice is None:
        return None
    line, basis, theta = choice
    if line in seen:
        raise ValueError(f"strategy measures line {line} twice")
    denom = memo(history)
    if denom <= 0:
        raise ZeroDivisionError("conditioning on an impossible history")
    item = QueryItem(int(line), basis, float(theta), 0)
    p0 = memo(history + (item,)) / denom
    return item, min(1.0, max(0.0, p0))


def conditional_sample(spec: LadderSpec, strategy: Strategy, seed: int | None) -> dict[int, int]:
    """One adaptive run: each outcome drawn from ``P(history, k) / P(history)``."""
    rng = np.random.default_rng(seed)
    memo = _Memo(spec)
    history: History = ()
    seen: set = set()
    while True:
        step = _next(memo, strategy, history, seen)
        if step is None:
            return {it.line: it.outcome for it in history}
        item, p0 = step
        bit = int(rng.random() >= p0)
        history += (item._replace(outcome=bit),)
        seen.add(item.line)


def sample_counts(spec: LadderSpec, strategy: Strategy, seed: int | None, shots: int) -> Counter:
    """``shots`` adaptive runs, split down the outcome tree by binomial draws.

    Equivalent in law to repeating :func:`conditional_sample`; keys are tuples
    of ``(line, outcome)`` in measurement order.
    """
    rng = np.random.default_rng(seed)
    memo = _Memo(spec)
    out: Counter = Counter()
    frontier = [((), shots)]
    while frontier:
        history, count = frontier.pop(0)
        step = _next(memo, strategy, history, {it.line for it in history})
        if step is None:
            out[tuple((it.line, it.outcome) for it in history)] += count
            continue
        item, p0 = step
        zeros = int(rng.binomial(count, p0))
        for bit, c in ((0, zeros), (1, count - zeros)):
            if c:
                frontier.append((history + (item._replace(outcome=bit),), c))
    return out


def exact_distribution(spec: LadderSpec, strategy: Strategy) -> dict:
    """Law of :func:`sample_counts` keys, computed by walking the outcome tree."""
    memo = _Memo(spec)
    out: dict = {}

    def walk(history: History) -> None:
        step = _next(memo, strategy, history, {it.line for it in history})
        if step is None:
            out[tuple((it.line, it.outcome) for it in history)] = memo(history)
            return
        item, _ = step
        for bit in (0, 1):
            nxt = history + (item._replace(outcome=bit),)
            if memo(nxt) > 0:
                walk(nxt)

    walk(())
    return out


def multinomial_within(counts: Mapping, probs: Mapping, shots: int, sigmas: float = 3.0) -> list:
    """Cells whose count strays more than ``sigmas`` standard deviations from ``shots * p``."""
    bad = []
    for key in set(counts) | set(probs):
        p = probs.get(key, 0.0)
        sd = math.sqrt(shots * p * (1 - p))
        if abs(counts.get(key, 0) - shots * p) > sigmas * sd + 1e-9:
            bad.append(key)
    return bad
