import csv
import io
import math

import numpy as np
import pytest

from tractdyn.errors import ExpansionTooWeak, NoConvergence
from tractdyn.functions import make_model
from tractdyn.wvcheck import (covering_check, exceptional_sweep, flagged_log_measure, sweep_to_csv,
                              sweep_to_json, track_log, wv_verify)


def closed_form_error(r, tau=0.75):
    # for exp, log f(z) - log f(zr) - a log(z/zr) at z = zr e^h is r(e^h - 1 - h)
    h = r ** (-tau)
    return math.expm1(r * (math.expm1(h) - h))


def test_wv_exp_r100(exp_tract):
    rep = wv_verify(exp_tract, 100.0, 0.75)
    assert rep.disc_in_tract and rep.branch_ok
    ref = closed_form_error(100.0)
    assert ref == pytest.approx(0.052, abs=0.002)
    assert ref / 1.5 <= rep.rel_err_value <= 1.5 * ref
    assert rep.rel_err_modulus <= rep.rel_err_value + 1e-6
    assert rep.zr == pytest.approx(100.0)


def test_wv_exp_r1600(exp_tract):
    rep = wv_verify(exp_tract, 1600.0, 0.75)
    ref = closed_form_error(1600.0)
    assert ref / 1.5 <= rep.rel_err_value <= 1.5 * ref


def test_wv_report_json(exp_tract):
    data = wv_verify(exp_tract, 50.0, 0.75, samples=64).to_json()
    for key in ("relErrValue", "relErrModulus", "relErrDerivative", "discInTract", "discRadius"):
        assert key in data


def test_wv_rejects_bad_tau(exp_tract):
    with pytest.raises(ValueError):
        wv_verify(exp_tract, 50.0, 0.4)
    with pytest.raises(ValueError):
        wv_verify(exp_tract, 50.0, 0.5)


def test_wv_expansion_too_weak(exp_tract):
    # a(r) = r for exp, so r = 0.8 gives a < 1
    with pytest.raises(ExpansionTooWeak):
        wv_verify(exp_tract, 0.8, 0.75)


def test_track_log_follows_branch():
    m = make_model("exp")
    path = 2.0 + 1j * np.linspace(0, 20, 400)
    L, ok = track_log(m, path, complex(2.0))
    assert ok
    assert np.allclose(L, path, atol=1e-9)


def test_covering_exp(exp_tract):
    res = covering_check(exp_tract, 50.0, 4.0, 3.5)
    assert res.covered
    assert res.alpha_used >= math.hypot(math.log(4), 3.5)
    forced = covering_check(exp_tract, 50.0, 4.0, 3.5, alpha=2.0)
    assert not forced.covered
    assert forced.failures


def test_covering_example1(ex1_tract):
    res = covering_check(ex1_tract, 8.0, 4.0, 3.5)
    assert res.covered and res.alpha_used <= 64


def test_covering_no_convergence(exp_tract):
    # a(3) = 3 leaves no room for the needed alpha >= 3.77
    with pytest.raises(NoConvergence):
        covering_check(exp_tract, 3.0, 4.0, 3.5)


def test_sweep_exp_has_no_flags(exp_tract):
    entries = exceptional_sweep(exp_tract, np.geomspace(20, 200, 12), 0.75, samples=64)
    assert not any(e.flagged for e in entries)
    assert flagged_log_measure(entries) == 0.0


def test_sweep_example1_measure(ex1_tract):
    entries = exceptional_sweep(ex1_tract, np.geomspace(4, 12, 24), 0.75, samples=64)
    assert flagged_log_measure(entries) <= 0.20


def test_sweep_empty(exp_tract):
    assert exceptional_sweep(exp_tract, [], 0.75) == []


def test_sweep_exports(exp_tract):
    entries = exceptional_sweep(exp_tract, [30.0, 40.0], 0.75, samples=32)
    rows = list(csv.reader(io.StringIO(sweep_to_csv(entries))))
    assert len(rows) == 3 and rows[0][0] == "r"
    assert sweep_to_json(entries)[0]["report"]["r"] == 30.0


def test_sweep_workers_agree(exp_tract):
    radii = [25.0, 35.0, 45.0]
    one = exceptional_sweep(exp_tract, radii, samples=32, workers=1)
    two = exceptional_sweep(exp_tract, radii, samples=32, workers=2)
    assert sweep_to_csv(one) == sweep_to_csv(two)
