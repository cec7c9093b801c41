"""Numerical checks of the local power-law behaviour of f near z_r.

In the disc ``D(z_r, r / a^tau)`` one expects ``f(z) ~ (z/z_r)^a f(z_r)``,
``|f(z)| ~ M_D(|z|)`` and ``z f'(z) / f(z) ~ a``.  The covering check
solves ``log f(z) = w`` for a grid of targets in a rectangle around
``log f(z_r)``.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CircleMissesTract, ExpansionTooWeak, NoConvergence
from .growth import LOG_STEP, GrowthProfile, a_of_r, maximize_on_circle
from .tract import TractDescriptor

RAY_STEPS = 64
NEWTON_TOL = 1e-8
NEWTON_MAX_ITER = 200
SWEEP_FACTOR = 5.0
TWO_PI = 2 * math.pi


@dataclass
class WVReport:
    r: float
    tau: float
    zr: complex
    a: float
    disc_radius: float
    disc_in_tract: bool
    rel_err_value: float
    rel_err_modulus: float
    rel_err_derivative: float
    samples: int
    branch_ok: bool = True

    def to_json(self) -> dict:
        return {
            "r": self.r, "tau": self.tau, "zr": [self.zr.real, self.zr.imag], "a": self.a,
            "discRadius": self.disc_radius, "discInTract": self.disc_in_tract,
            "relErrValue": self.rel_err_value, "relErrModulus": self.rel_err_modulus,
            "relErrDerivative": self.rel_err_derivative, "samples": self.samples,
            "branchOk": self.branch_ok,
        }


def _unwrap_to(raw: np.ndarray, pred: np.ndarray) -> np.ndarray:
    k = np.round((pred.imag - raw.imag) / TWO_PI)
    return raw + 1j * TWO_PI * k


def track_log(model, path: np.ndarray, start: complex):
    """Continue log f along ``path`` (last axis) from ``start`` at path[..., 0].

    Each step predicts with the trapezoid rule on f'/f and picks the branch
    of the principal log nearest the prediction.  Returns the tracked values
    and a flag that is False where f vanished or the prediction was off by
    more than a quarter turn.
    """
    path = np.asarray(path, dtype=complex)
    raw = model.log_value(path)
    ld = model.logderiv(path)
    out = np.empty_like(raw)
    out[..., 0] = start
    ok = np.isfinite(raw.real).all(axis=-1) & np.isfinite(ld).all(axis=-1)
    for j in range(1, path.shape[-1]):
        dz = path[..., j] - path[..., j - 1]
        pred = out[..., j - 1] + 0.5 * (ld[..., j] + ld[..., j - 1]) * dz
        out[..., j] = _unwrap_to(raw[..., j], pred)
        ok &= np.abs(out[..., j] - pred) < 0.5 * math.pi
    return out, ok


def _profile_a(tract, r, profile):
    if profile is not None:
        for s in profile.samples:
            if s.r == r and s.a is not None:
                return s.a
        return a_of_r(profile, r)
    bp, _ = maximize_on_circle(tract, r * math.exp(LOG_STEP))
    bm, _ = maximize_on_circle(tract, r * math.exp(-LOG_STEP))
    return max(0.0, (bp - bm) / (2 * LOG_STEP))


def _ring_layout(samples: int):
    rings = 4 if samples < 128 else (8 if samples < 1024 else 16)
    angles = max(2, samples // rings)
    angles += angles % 2  # keeps 0 and pi on the grid
    return rings, angles


def wv_verify(tract: TractDescriptor, r: float, tau: float = 0.75, samples: int = 256,
              profile: GrowthProfile | None = None) -> WVReport:
    if tau <= 0.5:
        raise ValueError("tau must exceed 1/2")
    model = tract.model
    B, zr = maximize_on_circle(tract, r)
    a = _profile_a(tract, r, profile)
    if a <= 1:
        raise ExpansionTooWeak(f"a({r:g}) = {a:.4g} <= 1")
    rad = r / a ** tau

    rings, n_ang = _ring_layout(samples)
    theta = TWO_PI * np.arange(n_ang) / n_ang
    t = rad * np.arange(RAY_STEPS + 1) / RAY_STEPS
    rays = zr + np.exp(1j * theta)[:, None] * t[None, :]
    L0 = complex(model.log_value(np.array([zr]))[0])
    L, ok = track_log(model, rays, L0)

    ring_idx = (RAY_STEPS // rings) * np.arange(1, rings + 1)
    z = rays[:, ring_idx].ravel()
    Lz = L[:, ring_idx].ravel()
    n = z.size + 1

    in_tract = bool(tract.membership(z).all() and tract.membership(np.array([zr]))[0])
    E = Lz - L0 - a * np.log(z / zr)
    rel_value = float(np.max(np.abs(np.expm1(E))))

    ld = model.logderiv(z)
    rel_deriv = float(np.max(np.abs(z * ld / a * np.exp(E) - 1)))

    mods = np.abs(z)
    cache = {}
    errs = []
    for s, lv in zip(mods, Lz.real):
        key = float(s)
        if key not in cache:
            try:
                cache[key] = maximize_on_circle(tract, key)[0] + tract.log_R
            except CircleMissesTract:
                cache[key] = math.nan
        errs.append(abs(math.expm1(lv - cache[key])))
    rel_mod = float(np.nanmax(errs)) if np.isfinite(errs).any() else math.inf

    return WVReport(float(r), float(tau), complex(zr), float(a), float(rad), in_tract,
                    rel_value, rel_mod, rel_deriv, n, bool(ok.all()))


# ---------------------------------------------------------------------------
# covering rectangle


@dataclass
class CoveringResult:
    alpha_used: float
    covered: bool
    failures: list = field(default_factory=list)
    zr: complex = 0j
    a: float = 0.0

    def to_json(self) -> dict:
        return {"alphaUsed": self.alpha_used, "covered": self.covered,
                "failures": [[w.real, w.imag] for w in self.failures],
                "zr": [self.zr.real, self.zr.imag], "a": self.a}


def _solve_log(model, zr, L0, targets, radius):
    """Damped Newton for log f(z) = w inside D(zr, radius), all targets at once."""
    z = np.full(targets.shape, zr, dtype=complex)
    L = np.full(targets.shape, L0, dtype=complex)
    done = np.zeros(targets.shape, dtype=bool)
    alive = np.ones(targets.shape, dtype=bool)
    for _ in range(NEWTON_MAX_ITER):
        res = L - targets
        done |= alive & (np.abs(res) < NEWTON_TOL)
        act = alive & ~done
        if not act.any():
            break
        ld = model.logderiv(z[act])
        r_act = res[act]
        scale = np.minimum(1.0, 1.0 / np.maximum(np.abs(r_act), 1e-300))
        step = -r_act * scale / ld
        z_act, L_act = z[act], L[act]
        acc = np.zeros(step.shape, dtype=bool)
        for _half in range(30):
            trial = z_act + step
            off = np.abs(trial - zr)
            over = off > radius
            trial = np.where(over, zr + (trial - zr) * (radius / np.maximum(off, 1e-300)), trial)
            raw = model.log_value(trial)
            ld_t = model.logderiv(trial)
            pred = L_act + 0.5 * (ld + ld_t) * (trial - z_act)
            Lt = _unwrap_to(raw, pred)
            good = (np.abs(Lt - targets[act]) < np.abs(r_act)) & (np.abs(Lt - pred) < 0.5 * math.pi)
            good &= np.isfinite(Lt)
            new = good & ~acc
            z_act = np.where(new, trial, z_act)
            L_act = np.where(new, Lt, L_act)
            acc |= good
            if acc.all():
                break
            step = np.where(acc, step, 0.5 * step)
        z[act], L[act] = z_act, L_act
        idx = np.flatnonzero(act)
        alive[idx[~acc]] = False
    done |= alive & (np.abs(L - targets) < NEWTON_TOL)
    return done, z


def covering_check(tract: TractDescriptor, r: float, beta: float, gamma: float,
                   alpha: float | None = None, grid: int = 9,
                   profile: GrowthProfile | None = None) -> CoveringResult:
    """Check that log f maps D(z_r, alpha r / a) onto the target rectangle.

    Without ``alpha`` the disc factor doubles from 1 while the disc radius
    stays at most r; running out raises NoConvergence.  A forced ``alpha``
    reports the failing targets instead of raising.
    """
    if beta <= 1:
        raise ValueError("beta must exceed 1")
    if gamma <= math.pi:
        raise ValueError("gamma must exceed pi")
    model = tract.model
    _, zr = maximize_on_circle(tract, r)
    a = _profile_a(tract, r, profile)
    if a <= 0:
        raise ExpansionTooWeak(f"a({r:g}) = {a:.4g} <= 0")
    L0 = complex(model.log_value(np.array([zr]))[0])
    u = np.linspace(-math.log(beta), math.log(beta), grid)
    v = np.linspace(-gamma, gamma, grid)
    targets = (L0 + u[None, :] + 1j * v[:, None]).ravel()

    if alpha is not None:
        alphas = [float(alpha)]
    else:
        alphas, al = [], 1.0
        while al <= a:
            alphas.append(al)
            al *= 2
    failures = list(targets)
    for al in alphas:
        radius = al * r / a
        ok, _ = _solve_log(model, zr, L0, targets, radius)
        # the whole disc has to lie in the tract for the image to count
        rim = zr + radius * np.exp(1j * TWO_PI * np.arange(256) / 256)
        if not tract.membership(rim).all():
            ok[:] = False
        failures = [complex(w) for w in targets[~ok]]
        if not failures:
            return CoveringResult(al, True, [], complex(zr), float(a))
    if alpha is not None:
        return CoveringResult(float(alpha), False, failures, complex(zr), float(a))
    raise NoConvergence(f"rectangle not covered for alpha up to {alphas[-1] if alphas else 0:g}",
                        failures)


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepEntry:
    r: float
    report: WVReport | None
    flagged: bool


def _sweep_one(args):
    tract, r, tau, samples = args
    try:
        return wv_verify(tract, r, tau, samples)
    except (ExpansionTooWeak, CircleMissesTract):
        return None


def exceptional_sweep(tract: TractDescriptor, radii, tau: float = 0.75,
                      samples: int = 128, workers: int = 1) -> list:
    """wv_verify at each radius, flagging candidate exceptional radii.

    A radius is flagged when the disc leaves the tract, branch tracking
    fails, a(r) is too small, or the value error exceeds five times the
    sweep's 90th percentile.
    """
    radii = [float(r) for r in radii]
    if not radii:
        return []
    jobs = [(tract, r, tau, samples) for r in radii]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            reports = list(ex.map(_sweep_one, jobs))
    else:
        reports = [_sweep_one(j) for j in jobs]
    errs = [rep.rel_err_value for rep in reports if rep is not None]
    p90 = float(np.percentile(errs, 90)) if errs else math.inf
    out = []
    for r, rep in zip(radii, reports):
        if rep is None:
            out.append(SweepEntry(r, None, True))
            continue
        flagged = (not rep.disc_in_tract) or (not rep.branch_ok) or rep.rel_err_value > SWEEP_FACTOR * p90
        out.append(SweepEntry(r, rep, bool(flagged)))
    return out


def flagged_log_measure(entries: list) -> float:
    """Fraction of the log-radius range covered by flagged sweep cells."""
    if len(entries) < 2:
        return float(bool(entries and entries[0].flagged))
    x = np.log([e.r for e in entries])
    edges = np.concatenate([[x[0]], 0.5 * (x[1:] + x[:-1]), [x[-1]]])
    widths = np.diff(edges)
    flags = np.array([e.flagged for e in entries])
    return float(widths[flags].sum() / (x[-1] - x[0]))


def sweep_to_csv(entries: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["r", "a", "discRadius", "discInTract", "relErrValue",
                "relErrModulus", "relErrDerivative", "flagged"])
    for e in entries:
        rep = e.report
        if rep is None:
            w.writerow([repr(e.r), "", "", "", "", "", "", 1])
        else:
            w.writerow([repr(e.r), repr(rep.a), repr(rep.disc_radius), int(rep.disc_in_tract),
                        repr(rep.rel_err_value), repr(rep.rel_err_modulus),
                        repr(rep.rel_err_derivative), int(e.flagged)])
    return buf.getvalue()


def sweep_to_json(entries: list) -> list:
    return [{"r": e.r, "flagged": e.flagged,
             "report": None if e.report is None else e.report.to_json()} for e in entries]
