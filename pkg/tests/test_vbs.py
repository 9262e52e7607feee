import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mbqcc.gates import CZ, X, Z, w
from mbqcc.mbqc import ClusterGraph, build_cluster, pattern_single_step, run_pattern
from mbqcc.qmath import QubitState, fidelity_up_to_phase, random_state
from mbqcc.vbs import (
    H_STATE,
    BondGrid,
    PiProjector,
    build_grid_state,
    bond_pair_state,
    hbell_basis,
    hbell_cz_images,
    line_grid,
    pi_project,
    rect_grid,
    rotated_bell_w,
    teleport_w_branch,
    verify_lemma3,
)

SIGMA = [np.eye(2), X, Z, X @ Z]


class TestBondGrid:
    def test_line_arity(self):
        g = line_grid(4)
        assert [g.arity[s] for s in g.sites] == [1, 2, 2, 1]

    def test_rect_arity(self):
        g = rect_grid(2, 3)
        assert [g.arity[s] for s in g.sites] == [2, 3, 2, 2, 3, 2]

    def test_shared_slot_rejected(self):
        with pytest.raises(ValueError):
            BondGrid((0, 1, 2), {0: 1, 1: 1, 2: 1}, (((0, 0), (1, 0)), ((2, 0), (1, 0))))

    def test_self_bond_rejected(self):
        with pytest.raises(ValueError):
            BondGrid((0,), {0: 2}, (((0, 0), (0, 1)),))

    def test_short_line(self):
        with pytest.raises(ValueError):
            line_grid(1)

    def test_graph(self):
        assert rect_grid(2, 3).graph() == ClusterGraph.grid(2, 3)


class TestPiProjector:
    @pytest.mark.parametrize("arity", [1, 2, 3, 4])
    def test_isometry_adjoint(self, arity):
        m = PiProjector(arity).matrix
        assert np.allclose(m @ m.conj().T, np.eye(2))

    def test_arity_one_is_identity(self, rng):
        s = random_state(3, rng)
        assert np.allclose(pi_project(s, [[0], [1], [2]]).amplitudes, s.amplitudes)

    def test_bad_partition(self, rng):
        with pytest.raises(ValueError):
            pi_project(random_state(3, rng), [[0, 1]])

    def test_site_order_commutes(self, rng):
        s = random_state(4, rng)
        a = pi_project(s, [[0, 2], [1, 3]]).amplitudes.reshape(2, 2)
        b = pi_project(s, [[1, 3], [0, 2]]).amplitudes.reshape(2, 2)
        assert np.allclose(a, b.T)

    def test_keeps_ghz_components(self):
        ghz = QubitState(np.array([1, 0, 0, 0, 0, 0, 0, 1]) / math.sqrt(2))
        out = pi_project(ghz, [[0, 1, 2]])
        assert np.allclose(out.amplitudes, [1 / math.sqrt(2), 1 / math.sqrt(2)])


class TestProjectedBondState:
    @pytest.mark.parametrize("length", [2, 3, 4, 5, 6])
    def test_lines(self, length):
        assert verify_lemma3(length) == pytest.approx(1.0, abs=1e-12)

    def test_grid(self):
        assert verify_lemma3((2, 3)) == pytest.approx(1.0, abs=1e-12)

    def test_too_large(self):
        with pytest.raises(ValueError):
            verify_lemma3((3, 4))

    def test_two_site_line_is_h(self):
        g = line_grid(2)
        out = pi_project(build_grid_state(g), g.partition())
        assert np.allclose(out.amplitudes, H_STATE)

    def test_norm_halves_per_bond_interior(self):
        g = line_grid(4)
        out = pi_project(build_grid_state(g), g.partition())
        assert out.norm ** 2 == pytest.approx(0.25)


class TestBondPair:
    def test_cz_of_inputs(self, rng):
        a, b = random_state(1, rng), random_state(1, rng)
        want = QubitState(CZ @ np.kron(a.amplitudes, b.amplitudes))
        assert fidelity_up_to_phase(bond_pair_state(a, b), want) == pytest.approx(1, abs=1e-12)

    def test_plus_inputs(self):
        plus = QubitState.from_label("+")
        assert np.allclose(bond_pair_state(plus, plus).amplitudes, build_cluster(ClusterGraph.line(2)).amplitudes)


class TestRotatedBell:
    @pytest.mark.parametrize("theta", [0.0, 0.4, -2.1])
    def test_kinds(self, theta):
        assert rotated_bell_w(theta).kinds == ("plus", "minus", "complement", "complement")

    def test_forms(self):
        theta = 0.9
        s = rotated_bell_w(theta).states
        ph = np.exp(1j * theta)
        for v, sign in ((s[0], 1), (s[1], -1)):
            ratio = v[3] / v[0]
            assert abs(ratio - sign * ph) < 1e-12 and abs(abs(v[0]) - 1 / math.sqrt(2)) < 1e-12

    @pytest.mark.parametrize("theta", [0.0, 1.3])
    def test_orthonormal(self, theta):
        m = np.array(rotated_bell_w(theta).states)
        assert np.allclose(m.conj() @ m.T, np.eye(4))


class TestHBell:
    def test_orthonormal(self):
        m = np.array(list(hbell_basis().values()))
        assert np.allclose(m.conj() @ m.T, np.eye(4))

    def test_cz_images(self):
        assert hbell_cz_images() == {"I": ("++", 1), "X": ("+-", 1), "Z": ("-+", 1), "XZ": ("--", -1)}


class TestTeleportW:
    @pytest.mark.parametrize("a", range(4))
    def test_branch_law(self, a, rng):
        psi = random_state(1, rng)
        theta = 0.7
        out, prob = teleport_w_branch(psi, theta, a)
        assert prob == pytest.approx(0.25, abs=1e-12)
        want = SIGMA[a] @ w(-theta) @ psi.amplitudes
        assert abs(np.vdot(want, out)) == pytest.approx(1, abs=1e-12)

    @pytest.mark.parametrize("theta", [0.0, 0.7, -2.3])
    def test_matches_cluster_measurement(self, theta, rng):
        psi = random_state(1, rng)
        for s in (0, 1):
            r = run_pattern(pattern_single_step(theta), psi, outcomes={0: s})
            out, _ = teleport_w_branch(psi, theta, s)
            assert abs(np.vdot(r.output.amplitudes, out)) >= 1 - 1e-10


seeds = st.integers(0, 2**32 - 1)


class TestProperties:
    @given(seeds, st.floats(-math.pi, math.pi))
    @settings(max_examples=30, deadline=None)
    def test_teleport_w_every_branch(self, seed, theta):
        psi = random_state(1, np.random.default_rng(seed))
        total = 0.0
        for a in range(4):
            out, prob = teleport_w_branch(psi, theta, a)
            total += prob
            assert abs(abs(np.vdot(SIGMA[a] @ w(-theta) @ psi.amplitudes, out)) - 1) <= 1e-10
        assert abs(total - 1) <= 1e-12

    @given(seeds, st.integers(3, 5))
    @settings(max_examples=20, deadline=None)
    def test_projection_order_commutes(self, seed, n):
        rng = np.random.default_rng(seed)
        s = random_state(n, rng)
        perm = [int(q) for q in rng.permutation(n)]
        cut = int(rng.integers(1, n))
        sites = [perm[:cut], perm[cut:]]
        fwd = pi_project(s, sites).amplitudes.reshape(2, 2)
        rev = pi_project(s, sites[::-1]).amplitudes.reshape(2, 2)
        assert np.allclose(fwd, rev.T, atol=1e-12)
