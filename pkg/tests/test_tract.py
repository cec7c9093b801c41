import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tractdyn.errors import OutsideWindow, SeedBelowThreshold, TractNotFound
from tractdyn.functions import make_model
from tractdyn.tract import (Directness, RegionRaster, Window, boundary_curve, contains_point,
                            default_tract, level_region, locate_tract)


def test_window_parse_and_lattice():
    w = Window.parse("-2,2,-1,1", "4x2")
    assert (w.width, w.height) == (4, 2)
    lat = w.lattice()
    assert lat[0, 0] == complex(-2, 1)
    assert lat.shape == (2, 4)
    row, col = w.lattice_index(np.array([0j]))
    assert lat[row[0], col[0]] == 0j


@pytest.mark.parametrize("bad", ["1,0,0,1", "0,1,0", "a,b,c,d"])
def test_window_parse_rejects(bad):
    with pytest.raises(ValueError):
        Window.parse(bad, "10x10")


def test_exp_level_region_is_right_half():
    w = Window(-5, 5, -5, 5, 200, 200)
    raster = level_region(make_model("exp"), 1.0, w)
    assert raster.n_components == 1
    expected = w.centers().real > 0
    assert np.array_equal(raster.labels > 0, expected)


def test_example1_tract_avoids_line():
    m = make_model("example1:lambda=1")
    w = Window(-10, 8, -12, 12, 400, 400)
    t = locate_tract(m, 20.0, 6.0, w)
    c = w.centers()
    near_line = np.abs(c.real - 1.0) < w.dx / 2
    assert not t.mask[near_line].any()
    assert t.direct is Directness.DIRECT_CANDIDATE


def test_example1_no_pole_in_tract():
    # oracle: poles solve z e^z = 1; z = W_k(1) over the Lambert branches
    m = make_model("example1:lambda=1")
    w = Window(-10, 8, -12, 12, 400, 400)
    t = locate_tract(m, 20.0, 6.0, w)
    poles = [complex(mpmath.lambertw(1, k)) for k in range(-3, 4)]
    inside = [p for p in poles if w.contains(np.array([p]))[0]]
    assert inside
    for p in inside:
        assert not t.membership(np.array([p]))[0]


def test_example1_left_component_contains_pole():
    # at R = 20 the point -8 is not above the threshold (|f(-8)| ~ 7.98);
    # at R = 5 its component reaches the poles on the left
    m = make_model("example1:lambda=1")
    w = Window(-10, 8, -12, 12, 400, 400)
    with pytest.raises(SeedBelowThreshold):
        locate_tract(m, 20.0, -8.0, w)
    t = locate_tract(m, 5.0, -8.0, w)
    assert t.direct is Directness.CONTAINS_POLE
    assert t.logarithmic == "no"


def test_gamma_tract_holds_segment():
    m = make_model("gamma")
    w = Window(-5, 10, -10, 10, 300, 400)
    t = locate_tract(m, 10.0, 8.0, w)
    xs = np.linspace(6, 9.9, 40)
    assert all(float(mpmath.gamma(x)) > 10 for x in xs)
    assert t.membership(xs.astype(complex)).all()


def test_exp_tract_membership(exp_tract):
    assert exp_tract.direct is Directness.DIRECT_CANDIDATE
    assert contains_point(exp_tract, 1.0)
    assert not contains_point(exp_tract, -1.0)
    with pytest.raises(OutsideWindow):
        contains_point(exp_tract, 100.0)
    # far extrapolation uses the sector
    assert exp_tract.membership(np.array([1e6 + 1j]))[0]


def test_example1_point_below_threshold(ex1_tract):
    assert not contains_point(ex1_tract, 0.5)


@pytest.mark.parametrize("R,line", [(1.0, 0.0), (math.e, 1.0)])
def test_exp_boundary_is_vertical_line(R, line):
    t = default_tract(make_model("exp"), R=R)
    curves = boundary_curve(t)
    pts = np.concatenate(curves)
    assert pts.size > 0
    assert np.max(np.abs(pts.real - line)) <= t.window.dx


def test_gamma_shift1_boundary_self_check(gs1_tract):
    pts = np.concatenate(boundary_curve(gs1_tract))
    vals = np.exp(gs1_tract.model.log_abs(pts))
    assert np.max(np.abs(vals - 10) / 10) <= 0.05


def test_locate_errors():
    m = make_model("exp")
    w = Window(-5, 5, -5, 5, 50, 50)
    with pytest.raises(SeedBelowThreshold):
        locate_tract(m, 1.0, -1.0, w)
    with pytest.raises(OutsideWindow):
        locate_tract(m, 1.0, 9.0, w)
    assert issubclass(TractNotFound, Exception)


def test_raster_json_roundtrip(tmp_path):
    raster = level_region(make_model("exp"), 1.0, Window(-1, 1, -1, 1, 10, 8))
    back = RegionRaster.from_json(raster.to_json())
    assert np.array_equal(back.labels, raster.labels)
    raster.write_pgm(tmp_path / "r.pgm")
    assert (tmp_path / "r.pgm").read_bytes().startswith(b"P5")


def test_summary_fields(exp_tract):
    s = exp_tract.summary()
    assert s["direct"] == "DirectCandidate"
    assert s["logarithmic"] == "heuristic"
    assert s["complementBounded"] is False


@settings(max_examples=30, deadline=None)
@given(st.floats(0.05, 30.0))
def test_level_region_monotone_in_R(R):
    # {|f| > R2} is contained in {|f| > R1} for R1 < R2
    m = make_model("gamma_shift1")
    w = Window(-5, 10, -10, 10, 60, 80)
    lo = level_region(m, R, w).labels > 0
    hi = level_region(m, 1.5 * R, w).labels > 0
    assert not (hi & ~lo).any()
