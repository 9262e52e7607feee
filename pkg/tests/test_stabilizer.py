from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import random_circuit
from mbqcc.compiler import compile, verify_pattern
from mbqcc.gates import CZ, H, X, Z, Circuit
from mbqcc.mbqc import delete_site_z, pattern_cz, pattern_wire, with_extra_site
from mbqcc.pauli import PauliFrame
from mbqcc.stabilizer import NotClifford, verify_clifford_pattern

CLIFFORD_KINDS = ["Z", "H", "P_pi4", "CX", "X", "Y", "CZ"]


class TestExamples:
    def test_wire_is_identity(self):
        v = verify_clifford_pattern(pattern_wire(), np.eye(2))
        assert v.passed and v.measurements == 2 and v.free_symbols == 2

    def test_wire_is_not_x(self):
        v = verify_clifford_pattern(pattern_wire(), X)
        assert not v.passed and "Z0" in v.mismatches

    def test_grid_cz(self):
        assert verify_clifford_pattern(pattern_cz("grid"), CZ).passed

    def test_deleted_site(self):
        p = delete_site_z(with_extra_site(pattern_wire(), "A", [1]), "A")
        assert verify_clifford_pattern(p, np.eye(2)).passed

    def test_generic_angle_rejected(self):
        c = Circuit(1).append("Rx", 0, theta=0.3)
        with pytest.raises(NotClifford):
            verify_clifford_pattern(compile(c), np.eye(2))

    def test_non_clifford_target(self):
        with pytest.raises(NotClifford):
            verify_clifford_pattern(pattern_wire(), np.diag([1, np.exp(0.3j)]))

    def test_wrong_size(self):
        with pytest.raises(ValueError):
            verify_clifford_pattern(pattern_wire(), CZ)

    def test_dropped_frame_entry(self):
        p = compile(Circuit(1).append("H", 0).append("P_pi4", 0))
        bad = replace(p, output_frame=PauliFrame(p.output_sites))
        assert not verify_clifford_pattern(bad, p.target).passed

    def test_large_pattern(self, rng):
        c = random_circuit(rng, 6, 30, CLIFFORD_KINDS, min_gates=30)
        p = compile(c)
        assert len(p.instructions) > 20
        assert verify_clifford_pattern(p, c.unitary()).passed


seeds = st.integers(0, 2**32 - 1)


class TestAgreesWithDense:
    @given(seeds)
    @settings(max_examples=30, deadline=None)
    def test_random_clifford(self, seed):
        rng = np.random.default_rng(seed)
        c = random_circuit(rng, 2, 4, CLIFFORD_KINDS)
        p = compile(c)
        sym = verify_clifford_pattern(p, c.unitary())
        dense = verify_pattern(p, c.unitary(), inputs=2)
        assert sym.passed and dense.passed

    @given(seeds, st.sampled_from([X, Z, H]))
    @settings(max_examples=30, deadline=None)
    def test_wrong_target_rejected_by_both(self, seed, extra):
        rng = np.random.default_rng(seed)
        c = random_circuit(rng, 1, 4, ["Z", "H", "P_pi4", "X"])
        p = compile(c)
        wrong = extra @ c.unitary()
        assert not verify_clifford_pattern(p, wrong).passed
        assert not verify_pattern(p, wrong, inputs=2).passed
