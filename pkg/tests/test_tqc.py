import json
import math
from importlib import resources

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqcc.gates import CZ, H, X, Z
from mbqcc.pauli import PauliOp
from mbqcc.qmath import QubitState, fidelity_up_to_phase, haar_unitary, random_state, random_vector
from mbqcc.tqc import (
    GHZ_CZ_TARGET,
    MaxEntangled,
    TeleportScheme,
    bond_pairings,
    doubled_bell_scheme,
    ghz_pairing,
    ghz_residuals,
    ghz_basis,
    teleport_projection,
    pauli_group_matrices,
    pauli_scheme,
    phi_u,
    search_ghz_pairing,
    teleport_cz_fig3,
    teleport_gate,
    validate_operator_basis,
    validate_povm,
)

S2 = 1 / math.sqrt(2)


class TestMaxEntangled:
    def test_standard(self):
        assert np.allclose(MaxEntangled.standard(2).vector, [S2, 0, 0, S2])

    def test_h_state_accepted(self):
        assert np.allclose(MaxEntangled.h_state().vector, [0.5, 0.5, 0.5, -0.5])

    def test_product_rejected(self):
        with pytest.raises(ValueError):
            MaxEntangled(2, np.array([1, 0, 0, 0]))


class TestPhiU:
    @pytest.mark.parametrize(
        "u,want",
        [(np.eye(2), [S2, 0, 0, S2]), (X, [0, S2, S2, 0]), (Z, [S2, 0, 0, -S2])],
        ids=["I", "X", "Z"],
    )
    def test_bell_states(self, u, want):
        assert np.allclose(phi_u(u, MaxEntangled.standard(2)), want)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            phi_u(np.eye(3), MaxEntangled.standard(2))


class TestOperatorBasis:
    def test_paulis(self):
        assert validate_operator_basis(pauli_group_matrices(1))

    def test_rotated(self):
        assert validate_operator_basis([p @ H for p in pauli_group_matrices(1)])

    def test_repeated(self):
        assert not validate_operator_basis([np.eye(2), X, Z, Z])

    def test_wrong_count(self):
        with pytest.raises(ValueError):
            validate_operator_basis([np.eye(2), X])

    def test_orthonormal_equivalence(self, rng):
        v = haar_unitary(2, rng)
        ops = [p @ v for p in pauli_group_matrices(1)]
        vecs = np.array([phi_u(u, MaxEntangled.standard(2)) for u in ops])
        assert validate_operator_basis(ops)
        assert np.allclose(vecs.conj() @ vecs.T, np.eye(4))


class TestPovm:
    def test_bell_unit_weights(self):
        assert validate_povm(pauli_scheme())

    def test_halved_weight(self):
        s = pauli_scheme()
        s.weights = [0.5, 1, 1, 1]
        assert not validate_povm(s)

    def test_doubled_bell(self):
        assert validate_povm(doubled_bell_scheme())

    def test_json_round_trip(self):
        s = doubled_bell_scheme()
        back = TeleportScheme.from_json(json.dumps(s.to_json()))
        assert validate_povm(back) and back.weights == s.weights


class TestTeleportGate:
    def test_identity_outcome_zero(self, rng):
        psi = random_state(1, rng)
        r = teleport_gate(pauli_scheme(), np.eye(2), psi, outcome=0)
        assert r.residual == PauliOp.identity(1)
        assert fidelity_up_to_phase(r.output, psi) == pytest.approx(1)

    def test_outcome_three_is_xz(self, rng):
        psi = random_state(1, rng)
        r = teleport_gate(pauli_scheme(), np.eye(2), psi, outcome=3)
        assert (r.residual.x, r.residual.z) == ((1,), (1,))
        assert fidelity_up_to_phase(r.output, QubitState(X @ Z @ psi.amplitudes)) == pytest.approx(1)

    def test_cz_scheme_every_branch(self, rng):
        psi = random_state(2, rng)
        scheme = pauli_scheme(CZ, 2)
        for i in range(16):
            r = teleport_gate(scheme, CZ, psi, outcome=i)
            want = QubitState(r.residual.matrix() @ CZ @ psi.amplitudes)
            assert fidelity_up_to_phase(r.output, want) >= 1 - 1e-9
            assert r.probability == pytest.approx(1 / 16, abs=1e-10)

    def test_sampling_seeded(self, rng):
        psi = random_state(1, rng)
        a = teleport_gate(pauli_scheme(), np.eye(2), psi, rng_seed=7)
        b = teleport_gate(pauli_scheme(), np.eye(2), psi, rng_seed=7)
        assert a.outcome == b.outcome

    def test_wrong_gate(self, rng):
        with pytest.raises(ValueError):
            teleport_gate(pauli_scheme(), H, random_state(1, rng))

    def test_doubled_bell_povm(self, rng):
        psi = random_state(1, rng)
        scheme = doubled_bell_scheme()
        joint = np.kron(psi.amplitudes, scheme.resource.vector).reshape(4, 2)
        total = 0.0
        for u, k in zip(scheme.operators, scheme.weights):
            rest = phi_u(u, scheme.resource).conj() @ joint
            total += k * np.vdot(rest, rest).real
            assert fidelity_up_to_phase(QubitState(rest / np.linalg.norm(rest)), QubitState(u @ psi.amplitudes)) >= 1 - 1e-9
        assert total == pytest.approx(1.0, abs=1e-10)


class TestProjection:
    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_identity_projection(self, d, rng):
        alpha = random_vector(d, rng)
        assert np.allclose(teleport_projection(alpha, None, d), alpha / d, atol=1e-10)

    @pytest.mark.parametrize("d", [2, 3, 4])
    def test_rotated_projection(self, d, rng):
        for _ in range(10):
            alpha = random_vector(d, rng)
            u = haar_unitary(d, rng)
            assert np.allclose(teleport_projection(alpha, u, d), u @ alpha / d, atol=1e-10)


class TestGhzScheme:
    def test_fifteen_pairings(self):
        assert len(bond_pairings()) == 15

    def test_ghz_basis_orthonormal(self):
        b = np.array(ghz_basis())
        assert np.allclose(b.conj() @ b.T, np.eye(8))

    def test_fixture_matches_search(self):
        found = search_ghz_pairing()
        assert ghz_pairing() in found
        text = resources.files("mbqcc.fixtures").joinpath("ghz_pairing.json").read_text()
        assert tuple(tuple(p) for p in json.loads(text)["pairing"]) == found[0]

    def test_zero_input_identity_branch(self):
        residuals = ghz_residuals(ghz_pairing())
        key = next(k for k, r in sorted(residuals.items()) if r == PauliOp.identity(2))
        _, out, _, _ = teleport_cz_fig3(QubitState.from_label("00"), outcomes=key)
        assert fidelity_up_to_phase(out, QubitState.from_label("++")) == pytest.approx(1)

    def test_all_branches(self, rng):
        psi = random_state(2, rng)
        total = 0.0
        for i in range(8):
            for j in range(8):
                _, out, res, prob = teleport_cz_fig3(psi, outcomes=(i, j))
                want = QubitState(res.matrix() @ GHZ_CZ_TARGET @ psi.amplitudes)
                assert fidelity_up_to_phase(out, want) >= 1 - 1e-9
                total += prob
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_bad_pairing(self, rng):
        bad = next(p for p in bond_pairings() if p not in search_ghz_pairing())
        with pytest.raises(ValueError):
            teleport_cz_fig3(random_state(2, rng), rng_seed=1, pairing=bad)


seeds = st.integers(0, 2**32 - 1)


class TestProperties:
    @given(seeds, st.sampled_from([1, 2]))
    @settings(max_examples=25, deadline=None)
    def test_branch_law_and_uniformity(self, seed, nq):
        rng = np.random.default_rng(seed)
        d = 1 << nq
        u = haar_unitary(d, rng)
        psi = random_state(nq, rng)
        scheme = pauli_scheme(u, nq)
        for i in range(d * d):
            r = teleport_gate(scheme, u, psi, outcome=i)
            assert abs(r.probability - 1 / d**2) <= 1e-10
            assert fidelity_up_to_phase(r.output, QubitState(r.residual.matrix() @ u @ psi.amplitudes)) >= 1 - 1e-9
