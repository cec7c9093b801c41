"""Growth functionals of a tract: B(r), a(r) and M_D(r).

``B(r)`` is the maximum of ``log(|f|/R)`` over the part of the circle
``|z| = r`` inside the tract, ``a(r)`` is its derivative in ``log r`` and
``log M_D(r) = B(r) + log R``.
"""
from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import CircleMissesTract, NotExpanding, OutOfRange
from .tower import Tower
from .tract import TractDescriptor

LOG_STEP = 0.02
COARSE_SAMPLES = 720
ANGLE_TOL = 1e-10
CONVEX_TOL = 1e-6
_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class GrowthSample:
    r: float
    B: float
    zr: complex
    a: float | None = None
    exceptional: bool = False


@dataclass
class GrowthProfile:
    tract: TractDescriptor
    samples: list
    R: float
    log_step: float = LOG_STEP

    @property
    def radii(self) -> np.ndarray:
        return np.array([s.r for s in self.samples])

    @property
    def B(self) -> np.ndarray:
        return np.array([s.B for s in self.samples])

    @property
    def a(self) -> np.ndarray:
        return np.array([np.nan if s.a is None else s.a for s in self.samples])

    def rows(self):
        for s in self.samples:
            yield {
                "r": s.r, "B": s.B, "a": s.a,
                "re_zr": s.zr.real, "im_zr": s.zr.imag,
                "exceptional": s.exceptional,
            }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "B", "a", "re_zr", "im_zr", "exceptional"])
        for row in self.rows():
            w.writerow([_fmt(row["r"]), _fmt(row["B"]), "" if row["a"] is None else _fmt(row["a"]),
                        _fmt(row["re_zr"]), _fmt(row["im_zr"]), int(row["exceptional"])])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {"model": self.tract.model.label, "R": self.R, "logStep": self.log_step,
                "samples": list(self.rows())}

    def to_json_text(self) -> str:
        data = self.to_json()
        return json.dumps(data, indent=1, sort_keys=True)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _circle_log_abs(tract: TractDescriptor, r: float, theta):
    z = r * np.exp(1j * np.asarray(theta, dtype=float))
    return z, tract.model.log_abs(z)


def maximize_on_circle(tract: TractDescriptor, r: float,
                       coarse_samples: int = COARSE_SAMPLES) -> tuple[float, complex]:
    """(B(r), z_r): coarse angular scan over in-tract points, then
    golden-section refinement of log|f| to ANGLE_TOL in angle.

    Ties go to the smallest nonnegative angle.
    """
    if coarse_samples < 64:
        raise ValueError("coarse_samples must be at least 64")
    theta = 2 * np.pi * np.arange(coarse_samples) / coarse_samples
    z, la = _circle_log_abs(tract, r, theta)
    inside = tract.membership(z, la)
    if not inside.any():
        raise CircleMissesTract(f"circle |z| = {r:g} misses the tract")
    scores = np.where(inside, la, -np.inf)
    k = int(np.argmax(scores))
    best_t, best_v = float(theta[k]), float(la[k])

    step = 2 * np.pi / coarse_samples
    lo, hi = best_t - step, best_t + step

    def phi(t):
        zz = np.array([r * np.exp(1j * t)])
        v = float(tract.model.log_abs(zz)[0])
        return v if tract.membership(zz, np.array([v]))[0] else -math.inf

    c = hi - _INV_PHI * (hi - lo)
    d = lo + _INV_PHI * (hi - lo)
    fc, fd = phi(c), phi(d)
    while hi - lo > ANGLE_TOL:
        if fc >= fd:
            hi, d, fd = d, c, fc
            c = hi - _INV_PHI * (hi - lo)
            fc = phi(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + _INV_PHI * (hi - lo)
            fd = phi(d)
    t = 0.5 * (lo + hi)
    v = phi(t)
    if v > best_v:
        best_t, best_v = t, v
    zr = r * complex(math.cos(best_t), math.sin(best_t))
    return best_v - tract.log_R, zr


def log_max_modulus(tract: TractDescriptor, r: float) -> float:
    """log M_D(r) = B(r) + log R."""
    B, _ = maximize_on_circle(tract, r)
    return B + tract.log_R


def _safe_max(args):
    tract, r, coarse = args
    try:
        return maximize_on_circle(tract, r, coarse)
    except CircleMissesTract:
        return None


def growth_profile(tract: TractDescriptor, r_min: float, r_max: float,
                   log_step: float = LOG_STEP, coarse_samples: int = COARSE_SAMPLES,
                   workers: int = 1) -> GrowthProfile:
    """Sample B, z_r and a at log-spaced radii from r_min to r_max.

    One ghost radius on each side lets a(r) be a centered difference at the
    end points too; a single-radius profile carries no a value.
    """
    if not 0 < r_min <= r_max:
        raise ValueError("need 0 < r_min <= r_max")
    if r_min == r_max:
        n, h = 0, log_step
        radii = np.array([r_min])
        ks = [0]
    else:
        n = max(1, int(round(math.log(r_max / r_min) / log_step)))
        h = math.log(r_max / r_min) / n
        ks = list(range(-1, n + 2))
        radii = r_min * np.exp(h * np.array(ks, dtype=float))
        radii[1], radii[-2] = r_min, r_max
    jobs = [(tract, float(r), coarse_samples) for r in radii]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_safe_max, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        results = [_safe_max(j) for j in jobs]
    if all(res is None for res in results):
        raise CircleMissesTract(f"no circle in [{r_min:g}, {r_max:g}] meets the tract")

    B = np.array([np.nan if res is None else res[0] for res in results])
    samples = []
    offset = 0 if n == 0 else 1
    for i in range(offset, len(radii) - offset):
        res = results[i]
        if res is None:
            continue
        a = None
        if n > 0:
            left, right = B[i - 1], B[i + 1]
            if np.isfinite(left) and np.isfinite(right):
                a = (right - left) / (2 * h)
            elif np.isfinite(right):
                a = (right - B[i]) / h
            elif np.isfinite(left):
                a = (B[i] - left) / h
            if a is not None:
                a = max(0.0, float(a))
        samples.append(GrowthSample(float(radii[i]), float(res[0]), complex(res[1]), a))
    return GrowthProfile(tract, samples, tract.R, h)


def a_of_r(profile: GrowthProfile, r: float) -> float:
    """Centered difference of B in log r at an arbitrary interior radius."""
    radii = profile.radii
    if not radii[0] < r < radii[-1]:
        raise OutOfRange(f"r = {r:g} is not strictly inside [{radii[0]:g}, {radii[-1]:g}]")
    h = profile.log_step
    bp, _ = maximize_on_circle(profile.tract, r * math.exp(h))
    bm, _ = maximize_on_circle(profile.tract, r * math.exp(-h))
    return max(0.0, (bp - bm) / (2 * h))


# ---------------------------------------------------------------------------
# iterated maximum modulus


def apply_md(tract: TractDescriptor, value: Tower) -> Tower:
    """M_D applied to a tower-valued radius.

    While the radius is a double, M_D comes from the circle maximization
    (R when the circle misses the tract).
    Beyond that the model's asymptotic maximum along the positive real axis
    is used, and once even log r is out of range the tower height grows by
    the model's ``tower_shift`` (1 for exp-type growth, 2 for exp(exp z)).
    """
    model = tract.model
    r = value.value
    if math.isfinite(r) and r < 1e300:
        try:
            lm = log_max_modulus(tract, r)
        except CircleMissesTract:
            # v vanishes on the whole circle, so B = 0 and M_D = R
            return Tower.of(tract.R)
        if math.isfinite(lm):
            return Tower.from_log(lm)
    return far_image(model, value)


def far_image(model, value: Tower) -> Tower:
    """|f(x)| for a huge positive real x given as a tower, from the model's
    asymptotic growth along the positive real axis."""
    ell = value.log_value
    if math.isfinite(ell):
        lt = model.far_log_abs(complex(ell, 0.0))
        if lt is None:
            raise NotExpanding(f"model {model.label} has no far growth along the real axis")
        return lt.exp()
    if value.capped:
        return value
    return Tower(value.height + model.tower_shift, value.top).normalized()


def iterate_md(tract: TractDescriptor, rho: float, n: int) -> Tower:
    """M_D^n(rho) as a Tower (height k, top x) meaning exp^k(x)."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    start = Tower.of(rho)
    first = apply_md(tract, start)
    if not first > start:
        raise NotExpanding(f"M_D({rho:g}) <= {rho:g}")
    if n == 0:
        return start
    value = first
    for _ in range(n - 1):
        value = apply_md(tract, value)
    return value


def md_orbit(tract: TractDescriptor, rho: float, n: int) -> list:
    """[M_D^0(rho), ..., M_D^n(rho)] as towers."""
    out = [Tower.of(rho)]
    if n == 0:
        return out
    nxt = apply_md(tract, out[0])
    if not nxt > out[0]:
        raise NotExpanding(f"M_D({rho:g}) <= {rho:g}")
    out.append(nxt)
    for _ in range(n - 1):
        out.append(apply_md(tract, out[-1]))
    return out


# ---------------------------------------------------------------------------
# growth checks


def scan_exceptional(profile: GrowthProfile, alpha: float, beta: float) -> list:
    """Radii where T(x +- T^-beta) breaks the (1 +- T^-alpha) T bounds.

    T is a(r) as a function of x = log r, linearly interpolated between
    samples.  Checks whose shifted point leaves the sampled range are
    skipped.  Flags are written back into the profile samples.
    """
    if not 0 < alpha < beta:
        raise ValueError("need 0 < alpha < beta")
    idx = [i for i, s in enumerate(profile.samples) if s.a is not None]
    if len(idx) < 3:
        raise ValueError("profile needs at least 3 samples with a(r)")
    x = np.array([math.log(profile.samples[i].r) for i in idx])
    T = np.array([profile.samples[i].a for i in idx])
    flagged = []
    new = list(profile.samples)
    for j, i in enumerate(idx):
        t = T[j]
        if t <= 0:
            continue
        step = t ** (-beta)
        bad = False
        if x[j] + step <= x[-1]:
            bad |= not np.interp(x[j] + step, x, T) < (1 + t ** (-alpha)) * t
        if x[j] - step >= x[0]:
            bad |= not np.interp(x[j] - step, x, T) > (1 - t ** (-alpha)) * t
        if bad:
            flagged.append(profile.samples[i].r)
        new[i] = replace(profile.samples[i], exceptional=bool(bad))
    profile.samples = new
    return flagged


def check_a_bound(profile: GrowthProfile, epsilon: float) -> tuple[float, list]:
    """Fraction of samples with a <= B^(1+epsilon), plus the violators."""
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    ok, bad = 0, []
    total = 0
    for s in profile.samples:
        if s.a is None:
            continue
        total += 1
        bound = s.B ** (1 + epsilon) if s.B > 0 else 0.0
        if s.a <= bound:
            ok += 1
        else:
            bad.append(s.r)
    return (ok / total if total else 1.0), bad


def check_sqrt_growth(profile: GrowthProfile) -> tuple[float, bool]:
    """c = min B/sqrt(r) over radii >= 10 and whether c sqrt(r) >= (log 2r)^2
    at the largest radius."""
    r = profile.radii
    B = profile.B
    sel = r >= 10.0
    if not sel.any():
        sel = np.ones_like(r, dtype=bool)
    c = float(np.min(B[sel] / np.sqrt(r[sel])))
    rmax = float(r[-1])
    holds = c > 0 and c * math.sqrt(rmax) >= math.log(2 * rmax) ** 2
    return c, bool(holds)


def second_differences(profile: GrowthProfile) -> np.ndarray:
    """Second differences of B on the (uniform) log r grid."""
    B = profile.B
    return B[2:] - 2 * B[1:-1] + B[:-2]


def lower_bound_gaps(profile: GrowthProfile) -> np.ndarray:
    """a(r) - (B(r) - B(r0)) / log(r / r0) with r0 the first sample."""
    s0 = profile.samples[0]
    out = []
    for s in profile.samples[1:]:
        if s.a is None:
            continue
        out.append(s.a - (s.B - s0.B) / math.log(s.r / s0.r))
    return np.array(out)
