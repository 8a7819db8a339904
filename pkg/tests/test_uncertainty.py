import numpy as np
import pytest

from zzpulse.hamiltonian import ControlVector, ParameterPoint
from zzpulse.lattice import Block
from zzpulse.propagation import fidelity, propagate, target_gate
from zzpulse.uncertainty import (
    UncertaintySpec,
    coherence_bound,
    hypercube_corners,
    num_uncertain_parameters,
    sample_interior,
    worst_case_fidelity,
)


def star_block(n_boundary, J=1.0):
    return Block(
        center=(0,),
        boundary=tuple(range(1, n_boundary + 1)),
        couplings=tuple((0, k, J) for k in range(1, n_boundary + 1)),
    )


def gate_block():
    return Block(
        center=(0, 1),
        boundary=(2, 3, 4, 5),
        couplings=((0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (1, 4, 1.0), (1, 5, 1.0)),
    )


class TestCorners:
    def test_six_qubit_block_has_512_corners(self):
        # 5 couplings + 2 amplitudes + 2 detunings = 9 uncertain parameters
        spec = UncertaintySpec(0.01, 0.01, 0.001)
        blk = gate_block()
        assert num_uncertain_parameters(blk, spec) == 9
        assert len(hypercube_corners(blk, spec)) == 512

    def test_four_qubit_block_has_32_corners(self):
        spec = UncertaintySpec(0.01, 0.01, 0.001)
        assert len(hypercube_corners(star_block(3), spec)) == 32

    def test_zero_uncertainty_single_nominal_point(self):
        blk = star_block(3, J=0.9)
        corners = hypercube_corners(blk, UncertaintySpec(0, 0, 0))
        assert len(corners) == 1
        p = corners[0]
        assert p.couplings == {(0, 1): 0.9, (0, 2): 0.9, (0, 3): 0.9}
        assert p.amplitude_scales == {0: 1.0}
        assert p.detunings == {0: 0.0}

    def test_interval_endpoints_and_bit_order(self):
        blk = Block(center=(0,), boundary=(1,), couplings=((0, 1, 1.0),))
        spec = UncertaintySpec(0.10, 0.02, 0.004, nominal=1.0)
        corners = hypercube_corners(blk, spec)
        assert len(corners) == 8
        # bit 0 = coupling, bit 1 = amplitude, bit 2 = detuning; 0 -> low end
        assert corners[0].couplings[(0, 1)] == pytest.approx(0.95)
        assert corners[1].couplings[(0, 1)] == pytest.approx(1.05)
        assert corners[0].amplitude_scales[0] == pytest.approx(0.99)
        assert corners[2].amplitude_scales[0] == pytest.approx(1.01)
        assert corners[0].detunings[0] == pytest.approx(-0.002)
        assert corners[4].detunings[0] == pytest.approx(0.002)

    def test_partial_zero_widths_collapse(self):
        blk = star_block(2)
        corners = hypercube_corners(blk, UncertaintySpec(0.01, 0.0, 0.0))
        assert len(corners) == 4  # only the two couplings vary
        assert all(p.amplitude_scales[0] == 1.0 for p in corners)

    def test_explosion_guard(self):
        # 5-center chain with 13 center-boundary bonds: 17 + 5 + 5 = 27 axes
        cc = tuple((i, i + 1, 1.0) for i in range(4))
        cb = tuple((i // 2 if i < 8 else 4, 5 + (i % 8), 1.0) for i in range(13))
        blk = Block(center=tuple(range(5)), boundary=tuple(range(5, 13)),
                    couplings=cc + cb)
        with pytest.raises(ValueError):
            hypercube_corners(blk, UncertaintySpec(0.01, 0.01, 0.01))

    def test_negative_fraction_rejected(self):
        with pytest.raises(ValueError):
            UncertaintySpec(-0.01, 0, 0)

    def test_determinism(self):
        blk = star_block(3)
        spec = UncertaintySpec(0.05, 0.05, 0.001)
        a = hypercube_corners(blk, spec)
        b = hypercube_corners(blk, spec)
        assert a == b


class TestWorstCase:
    def test_zero_uncertainty_equals_nominal_fidelity(self):
        blk = star_block(3)
        ctrl = ControlVector.random_uniform(6.28, 20, 1, seed=3)
        corners = hypercube_corners(blk, UncertaintySpec(0, 0, 0))
        wc = worst_case_fidelity(blk, ctrl, corners, target_gate("H"))
        rec = propagate(blk, ctrl, ParameterPoint.nominal(blk))
        assert wc.f_min == pytest.approx(fidelity(rec.final, target_gate("H"), blk), abs=1e-12)

    def test_min_leq_mean_leq_max(self):
        blk = star_block(3)
        ctrl = ControlVector.random_uniform(6.28, 20, 1, seed=5)
        corners = hypercube_corners(blk, UncertaintySpec(0.05, 0.05, 0.001))
        wc = worst_case_fidelity(blk, ctrl, corners, target_gate("H"))
        assert wc.f_min <= wc.f_mean <= wc.f_max
        assert wc.values[wc.argmin] == wc.f_min
        assert len(wc.values) == 32

    def test_empty_corner_set_rejected(self):
        blk = star_block(2)
        ctrl = ControlVector.zeros(1.0, 4, 1)
        with pytest.raises(ValueError):
            worst_case_fidelity(blk, ctrl, [], target_gate("H"))


class TestInteriorSampling:
    def test_samples_stay_inside_intervals(self):
        blk = star_block(3)
        spec = UncertaintySpec(0.10, 0.04, 0.01, nominal=2.0)
        pts = sample_interior(blk, spec, 200, seed=1)
        assert len(pts) == 200
        for p in pts:
            for J in p.couplings.values():
                assert abs(J - 1.0) <= 0.5 * 0.10 * 2.0
            assert abs(p.amplitude_scales[0] - 1.0) <= 0.02
            assert abs(p.detunings[0]) <= 0.5 * 0.01 * 2.0

    def test_seeded_reproducibility(self):
        blk = star_block(2)
        spec = UncertaintySpec(0.02, 0.02, 0.002)
        a = sample_interior(blk, spec, 5, seed=9)
        b = sample_interior(blk, spec, 5, seed=9)
        assert a == b


class TestCoherenceBound:
    def test_zero_duration(self):
        assert coherence_bound(0.0, 10.0, 4) == 1.0

    def test_example_value(self):
        t2 = 400.0
        assert coherence_bound(1.0, t2, 4) == pytest.approx(0.99)

    def test_clamped_at_zero(self):
        assert coherence_bound(10.0, 10.0, 6) == 0.0
        assert coherence_bound(2.0, 12.0, 6) == 0.0

    def test_positive_t2_required(self):
        with pytest.raises(ValueError):
            coherence_bound(1.0, 0.0, 4)
