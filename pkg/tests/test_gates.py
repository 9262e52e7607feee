import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from mbqcc.gates import (
    CZ,
    FIXED,
    H,
    P_PI4,
    ARITY,
    Circuit,
    EulerAngles,
    Gate,
    Measure,
    X,
    Z,
    equal_up_to_phase,
    euler_xzx,
    matrix_of,
    phase,
    rx,
    rz,
    w,
    w_decompose,
)
from mbqcc.qmath import QubitState, fidelity_up_to_phase, haar_unitary, is_unitary, random_state

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


class TestMatrices:
    def test_w_zero_is_h(self):
        assert np.allclose(matrix_of(Gate("W", (0,), 0.0)), H)

    def test_rz_pi_is_minus_identity(self):
        assert np.allclose(matrix_of(Gate("Rz", (0,), math.pi)), -np.eye(2))

    def test_cz(self):
        assert np.allclose(matrix_of(Gate("CZ", (0, 1))), np.diag([1, 1, 1, -1]))

    @pytest.mark.parametrize("theta", [0.0, 0.3, -1.7, math.pi])
    @pytest.mark.parametrize("kind,gen", [("Rx", X), ("Rz", Z)])
    def test_rotation_matches_expm(self, kind, gen, theta):
        assert np.allclose(matrix_of(Gate(kind, (0,), theta)), expm(-1j * theta * gen), atol=1e-12)

    @pytest.mark.parametrize("kind", sorted(FIXED))
    def test_fixed_kinds_unitary(self, kind):
        assert is_unitary(FIXED[kind], tol=1e-12)

    def test_p_pi4_is_quarter_turn_phase(self):
        assert np.allclose(P_PI4, np.diag([1, 1j]), atol=1e-12)
        assert np.allclose(P_PI4, phase(math.pi / 2), atol=1e-12)

    def test_p_pi4_squares_to_z(self):
        assert np.allclose(P_PI4 @ P_PI4, Z, atol=1e-12)

    def test_phase_pi_is_z(self):
        assert np.allclose(phase(math.pi), Z, atol=1e-12)


class TestGate:
    def test_arity_checked(self):
        with pytest.raises(ValueError):
            Gate("CZ", (0,))

    def test_rotation_needs_angle(self):
        with pytest.raises(ValueError):
            Gate("Rx", (0,))

    def test_fixed_takes_no_angle(self):
        with pytest.raises(ValueError):
            Gate("H", (0,), 0.1)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            Gate("T", (0,))

    def test_cu_matrix(self):
        g = Gate("CU", (0, 1), matrix=X)
        assert np.allclose(matrix_of(g), FIXED["CX"])

    def test_all_kinds_known(self):
        assert set(ARITY) == {"X", "Z", "Y", "H", "P_pi4", "Phase", "Rx", "Rz", "W", "CZ", "CX"}


class TestCircuit:
    def test_out_of_range(self):
        with pytest.raises(ValueError):
            Circuit(2).append("H", 2)

    def test_unitary_order(self):
        c = Circuit(1).append("H", 0).append("Z", 0)
        assert np.allclose(c.unitary(), Z @ H)

    def test_cx_control_first(self):
        c = Circuit(2).append("CX", 1, 0)
        out = c.apply(QubitState.from_label("01"))
        assert np.allclose(out.amplitudes, QubitState.from_label("11").amplitudes)

    def test_json_round_trip(self):
        c = Circuit(3).append("H", 0).append("Rx", 1, theta=0.25).append("CX", 2, 0)
        c.append(Measure(1, "m", H))
        c.append(Gate("X", (2,), condition=("m",)))
        back = Circuit.from_json(c.to_json())
        assert back.to_json() == c.to_json()

    def test_measured_circuit_has_no_unitary(self):
        c = Circuit(1).append(Measure(0, "a"))
        with pytest.raises(ValueError):
            c.unitary()


class TestEuler:
    def test_identity(self):
        a = euler_xzx(np.eye(2))
        assert (a.xi, a.eta, a.zeta) == (0.0, 0.0, 0.0)

    def test_rx(self):
        a = euler_xzx(rx(0.3))
        assert equal_up_to_phase(a.matrix(), rx(0.3))
        assert (a.xi, a.eta, a.zeta) == pytest.approx((0.3, 0.0, 0.0))

    def test_canonical_ranges(self, rng):
        for _ in range(50):
            a = euler_xzx(haar_unitary(2, rng))
            assert 0 <= a.xi < 2 * math.pi and 0 <= a.zeta < 2 * math.pi and 0 <= a.eta < math.pi

    def test_hundred_haar(self, rng):
        for _ in range(100):
            u = haar_unitary(2, rng)
            v = random_state(1, rng)
            got = QubitState(euler_xzx(u).matrix() @ v.amplitudes)
            assert fidelity_up_to_phase(got, QubitState(u @ v.amplitudes)) >= 1 - 1e-9

    def test_non_unitary(self):
        with pytest.raises(ValueError):
            euler_xzx(np.array([[1, 1], [0, 1]]))

    @pytest.mark.parametrize("u", [X, Z, H, np.diag([1, 1j]), np.array([[0, 1j], [1, 0]])])
    def test_degenerate_inputs(self, u):
        assert equal_up_to_phase(euler_xzx(u).matrix(), u)

    def test_deterministic(self, rng):
        u = haar_unitary(2, rng)
        assert euler_xzx(u) == euler_xzx(u.copy())


class TestWDecompose:
    def test_h_needs_nonzero_branch(self):
        a = w_decompose(H)
        assert (a.theta1, a.theta2, a.theta3) != (0, 0, 0)
        assert equal_up_to_phase(a.matrix(), H)

    @pytest.mark.parametrize("u", [rz(0.2), rx(0.5), X, Z, np.eye(2)])
    def test_round_trip(self, u):
        assert equal_up_to_phase(w_decompose(u).matrix(), u)

    def test_identity_chain(self):
        a, b, c = 0.4, 1.1, -0.6
        assert equal_up_to_phase(w(0) @ w(a) @ w(b) @ w(c), rz(a / 2) @ rx(b / 2) @ rz(c / 2))


class TestProperties:
    @given(angles)
    @settings(max_examples=50, deadline=None)
    def test_w_is_h_times_phase(self, t):
        assert np.allclose(w(t), H @ phase(t), atol=1e-12)

    @given(angles, angles)
    @settings(max_examples=50, deadline=None)
    def test_rotation_additivity(self, a, b):
        assert np.allclose(rx(a) @ rx(b), rx(a + b), atol=1e-12)
        assert np.allclose(rz(a) @ rz(b), rz(a + b), atol=1e-12)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=60, deadline=None)
    def test_decompositions_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        u = haar_unitary(2, rng)
        v = random_state(1, rng)
        want = QubitState(u @ v.amplitudes)
        for m in (euler_xzx(u).matrix(), w_decompose(u).matrix()):
            assert fidelity_up_to_phase(QubitState(m @ v.amplitudes), want) >= 1 - 1e-9

    @given(angles, angles, angles)
    @settings(max_examples=40, deadline=None)
    def test_euler_angles_round_trip(self, a, b, c):
        u = EulerAngles(a, b, c).matrix()
        assert equal_up_to_phase(euler_xzx(u).matrix(), u, tol=1e-9)

    def test_cz_symmetric(self):
        swap = np.eye(4)[[0, 2, 1, 3]]
        assert np.allclose(swap @ CZ @ swap, CZ)
