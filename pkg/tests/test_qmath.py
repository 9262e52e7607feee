import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqcc.gates import CX, CZ, H, X, I2
from mbqcc.qmath import (
    DensityMatrix,
    DimensionError,
    QubitState,
    apply_unitary,
    fidelity_up_to_phase,
    haar_unitary,
    partial_trace,
    project,
    random_state,
    tensor,
)

B00 = np.array([1, 0, 0, 1]) / math.sqrt(2)
B01 = np.array([0, 1, 1, 0]) / math.sqrt(2)
PLUS = np.array([1, 1]) / math.sqrt(2)
MINUS = np.array([1, -1]) / math.sqrt(2)


class TestQubitState:
    def test_msb_is_qubit_zero(self):
        assert np.allclose(QubitState.from_label("10").amplitudes, [0, 0, 1, 0])

    def test_rejects_unnormalized(self):
        with pytest.raises(ValueError):
            QubitState(np.array([1.0, 1.0]))

    def test_subnormalized_flag_keeps_norm(self):
        s = QubitState(np.array([0.5, 0]), subnormalized=True)
        assert s.norm == pytest.approx(0.5)
        assert s.normalized().norm == pytest.approx(1.0)

    def test_bad_dimension(self):
        with pytest.raises(DimensionError):
            QubitState(np.ones(3) / math.sqrt(3))


class TestTensor:
    def test_zero_zero(self):
        assert np.allclose(tensor(QubitState.from_label("0"), QubitState.from_label("0")).amplitudes, [1, 0, 0, 0])

    def test_plus_plus_uniform(self):
        out = tensor(QubitState.from_label("+"), QubitState.from_label("+"))
        assert np.allclose(out.amplitudes, 0.5)

    def test_x_on_bell(self):
        assert np.allclose(tensor(X, I2) @ B00, B01)

    def test_mixed_kinds_rejected(self):
        with pytest.raises(TypeError):
            tensor(QubitState.from_label("0"), X)


class TestApplyUnitary:
    def test_h_gives_plus(self):
        out = apply_unitary(QubitState.zeros(1), H, [0])
        assert np.allclose(out.amplitudes, PLUS)

    def test_cz_plus_plus_is_h_state(self):
        out = apply_unitary(QubitState.from_label("++"), CZ, [0, 1])
        want = (np.kron([1, 0], PLUS) + np.kron([0, 1], MINUS)) / math.sqrt(2)
        assert np.allclose(out.amplitudes, want)

    def test_cx_on_b01(self):
        out = apply_unitary(QubitState(B01), CX, [0, 1])
        assert np.allclose(out.amplitudes, np.kron(PLUS, [0, 1]))

    def test_target_order_matters(self):
        s = QubitState.from_label("10")
        assert np.allclose(apply_unitary(s, CX, [1, 0]).amplitudes, s.amplitudes)
        assert np.allclose(apply_unitary(s, CX, [0, 1]).amplitudes, QubitState.from_label("11").amplitudes)

    @pytest.mark.parametrize("targets", [[2], [0, 0], [-1]])
    def test_bad_targets(self, targets):
        u = np.eye(1 << len(targets))
        with pytest.raises(DimensionError):
            apply_unitary(QubitState.zeros(2), u, targets)

    def test_non_unitary_rejected(self):
        with pytest.raises(ValueError):
            apply_unitary(QubitState.zeros(1), np.array([[1, 1], [0, 1]]), [0])


class TestProject:
    def test_bell_projection_keeps_input(self, rng):
        alpha = random_state(1, rng)
        out = project(tensor(alpha, QubitState(B00)), B00, [0, 1])
        assert out.subnormalized
        assert np.allclose(out.amplitudes, alpha.amplitudes / 2, atol=1e-12)

    def test_zero_probability(self):
        out = project(QubitState.zeros(2), np.array([0, 1]), [0])
        assert out.norm == 0

    def test_d4_cz_pairing(self, rng):
        # |alpha>_{12} |B00>_{35} |B00>_{46}; regroup so each d=4 system is contiguous
        alpha = random_state(2, rng)
        phi4 = np.eye(4).reshape(-1) / 2  # sum_i |i>|i> / 2 over 4-dim systems
        full = np.kron(alpha.amplitudes, phi4)
        rot = np.kron(CZ.conj().T, np.eye(4)) @ phi4
        out = project(QubitState(full), rot, [0, 1, 2, 3])
        assert np.allclose(out.amplitudes, CZ @ alpha.amplitudes / 4, atol=1e-12)

    def test_basis_probabilities_sum_to_one(self, rng):
        s = random_state(3, rng)
        total = sum(project(s, np.eye(4)[k], [0, 2]).norm ** 2 for k in range(4))
        assert total == pytest.approx(1.0, abs=1e-10)


class TestPartialTrace:
    def test_bell_marginal(self):
        rho = QubitState(B00).density()
        assert np.allclose(partial_trace(rho, [0]).entries, I2 / 2)

    def test_product_marginal(self):
        rho = QubitState.zeros(2).density()
        assert np.allclose(partial_trace(rho, [0]).entries, [[1, 0], [0, 0]])

    def test_h_state_marginal(self):
        rho = QubitState(CZ @ np.full(4, 0.5)).density()
        assert np.allclose(partial_trace(rho, [1]).entries, I2 / 2)

    def test_keep_order(self, rng):
        a, b = random_state(1, rng), random_state(1, rng)
        rho = tensor(a, b).density()
        assert np.allclose(partial_trace(rho, [1, 0]).entries, tensor(b, a).density().entries)

    def test_rejects_non_hermitian(self):
        with pytest.raises(ValueError):
            DensityMatrix(np.array([[0.5, 1], [0, 0.5]]))


class TestFidelity:
    def test_global_phase(self, rng):
        s = random_state(2, rng)
        assert fidelity_up_to_phase(s, QubitState(np.exp(1j * math.pi / 7) * s.amplitudes)) == pytest.approx(1)

    def test_orthogonal(self):
        assert fidelity_up_to_phase(QubitState.from_label("0"), QubitState.from_label("1")) == 0

    def test_plus_zero(self):
        f = fidelity_up_to_phase(QubitState.from_label("+"), QubitState.from_label("0"))
        assert f == pytest.approx(1 / math.sqrt(2))

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            fidelity_up_to_phase(QubitState.zeros(1), QubitState.zeros(2))


seeds = st.integers(0, 2**32 - 1)


class TestProperties:
    @given(seeds, st.integers(1, 4))
    @settings(max_examples=40, deadline=None)
    def test_unitaries_preserve_norm(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_state(n, rng)
        k = int(rng.integers(1, n + 1))
        targets = list(rng.permutation(n)[:k])
        out = apply_unitary(s, haar_unitary(1 << k, rng), targets)
        assert abs(out.norm - 1) < 1e-12

    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_tensor_associative(self, seed):
        rng = np.random.default_rng(seed)
        a, b, c = (random_state(1, rng) for _ in range(3))
        left = tensor(tensor(a, b), c).amplitudes
        right = tensor(a, tensor(b, c)).amplitudes
        assert np.array_equal(left, right) or np.allclose(left, right, atol=1e-15)

    @given(seeds, st.integers(1, 2), st.integers(1, 2))
    @settings(max_examples=30, deadline=None)
    def test_trace_out_product(self, seed, na, nb):
        rng = np.random.default_rng(seed)
        a, b = random_state(na, rng), random_state(nb, rng)
        rho = tensor(a, b).density()
        got = partial_trace(rho, list(range(na))).entries
        assert np.allclose(got, a.density().entries, atol=1e-12)

    @given(seeds, st.integers(3, 4))
    @settings(max_examples=30, deadline=None)
    def test_projection_completeness(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_state(n, rng)
        basis = haar_unitary(4, rng)
        total = sum(project(s, basis[:, k], [0, n - 1]).norm ** 2 for k in range(4))
        assert abs(total - 1) < 1e-10
