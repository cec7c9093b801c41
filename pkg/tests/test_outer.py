import math

import numpy as np
import pytest

from tractdyn.dynamics.outer import PolarRegion, outer_sequence, outer_sequence_step
from tractdyn.errors import PreconditionViolation
from tractdyn.tract import Window


def test_exp_first_step(exp_tract):
    st = outer_sequence_step(exp_tract.model, exp_tract, PolarRegion.disc(10.0))
    r1 = math.exp(st.log_r_next)
    assert r1 >= 4 * math.exp(2.5)
    assert r1 > 20
    assert st.log_r <= math.log(10.0)


def test_exp_two_steps(exp_tract):
    steps = outer_sequence(exp_tract.model, exp_tract, PolarRegion.disc(10.0), 2)
    assert len(steps) == 2
    assert steps[1].log_r_next > math.log(2) + steps[0].log_r_next
    assert steps[1].to_json()["rNext"] is None


def test_outer_sequence_stops_at_double_range(exp_tract):
    steps = outer_sequence(exp_tract.model, exp_tract, PolarRegion.disc(10.0), 5)
    assert len(steps) == 2


def test_region_not_surrounding(exp_tract):
    region = PolarRegion.disc(10.0)
    mask = region.mask.copy()
    mask[:, :20] = False  # a slit through every circle
    with pytest.raises(PreconditionViolation):
        outer_sequence_step(exp_tract.model, exp_tract, PolarRegion(region.s_min, region.s_max, mask))


def test_radius_not_above_R(exp_tract):
    with pytest.raises(PreconditionViolation):
        outer_sequence_step(exp_tract.model, exp_tract, PolarRegion.disc(0.9))


def test_polar_region_helpers():
    region = PolarRegion.disc(10.0, n_s=32, n_phi=64)
    assert region.inner_log_radius() == pytest.approx(math.log(10) - region.ds / 2)
    assert region.interior()[:-1].all()
    raster = region.to_raster(Window(-12, 12, -12, 12, 48, 48))
    z = raster.window.centers()
    assert np.array_equal(raster.labels > 0, np.abs(z) < 10) or \
        np.mean((raster.labels > 0) != (np.abs(z) < 10)) < 0.02
    back = PolarRegion.from_raster(raster)
    assert back.mask.any()
