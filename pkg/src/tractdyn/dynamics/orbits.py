"""Fixed points, orbit classification and fast-escape tests."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import PreconditionViolation
from ..functions import ComplexValue, FunctionModel, derivative, wrap_phase
from ..growth import far_image, md_orbit
from ..tower import LOG_OVERFLOW, Tower
from ..tract import TractDescriptor, Window

SUPERATTRACTING_TOL = 1e-6
FIXED_POINT_TOL = 1e-9
DEDUP_TOL = 1e-7


class Classification(enum.Enum):
    OTHER = "Other"
    BASIN = "Basin"
    ESCAPING = "EscapingInTract"
    FAST = "FastEscaping"
    PREPOLE = "Prepole"


CODES = {c: i for i, c in enumerate(Classification)}
BY_CODE = list(Classification)
OTHER, BASIN, ESCAPING, FAST, PREPOLE = (CODES[c] for c in Classification)


@dataclass(frozen=True)
class FixedPointInfo:
    location: complex
    multiplier: complex
    type: str

    @property
    def attracting(self) -> bool:
        return self.type in ("Superattracting", "Attracting")

    def to_json(self) -> dict:
        return {"location": [self.location.real, self.location.imag],
                "multiplier": [self.multiplier.real, self.multiplier.imag], "type": self.type}


def _fixed_point_type(m: complex) -> str:
    am = abs(m)
    if am <= SUPERATTRACTING_TOL:
        return "Superattracting"
    if am < 1 - 1e-9:
        return "Attracting"
    if am > 1 + 1e-9:
        return "Repelling"
    return "Indifferent"


def find_fixed_points(model: FunctionModel, window: Window, grid_density: int = 16) -> list:
    """Newton's method on f(z) - z from a grid of seeds over the window."""
    re = np.linspace(window.re_min, window.re_max, grid_density)
    im = np.linspace(window.im_min, window.im_max, grid_density)
    z = (re[None, :] + 1j * im[:, None]).ravel()
    with np.errstate(all="ignore"):
        for _ in range(80):
            f = model.direct_value(z)
            fp = model.deriv_value(z)
            step = (f - z) / (fp - 1)
            step = np.where(np.isfinite(step), step, np.nan)
            big = np.abs(step) > 1.0
            step = np.where(big, step / np.abs(step), step)
            z = z - step
        f = model.direct_value(z)
        good = np.isfinite(z) & np.isfinite(f)
        good &= np.abs(f - z) <= FIXED_POINT_TOL * np.maximum(1.0, np.abs(z))
        good &= ~model.pole_mask(z)
    pad = 0.1 * max(window.re_max - window.re_min, window.im_max - window.im_min)
    good &= ((z.real >= window.re_min - pad) & (z.real <= window.re_max + pad)
             & (z.imag >= window.im_min - pad) & (z.imag <= window.im_max + pad))
    found = []
    for p in sorted(z[good], key=lambda w: (round(w.real, 9), round(w.imag, 9))):
        if any(abs(p - q) <= DEDUP_TOL for q in found):
            continue
        found.append(complex(p))
    out = []
    for p in found:
        m = derivative(model, p)
        mult = m.value if m.is_finite else complex(math.inf)
        out.append(FixedPointInfo(p, mult, _fixed_point_type(mult)))
    return out


def attractors_for(model: FunctionModel, window: Window, grid_density: int = 12) -> list:
    """Attracting fixed points near the window, reference points included."""
    pts = [fp for fp in find_fixed_points(model, window, grid_density) if fp.attracting]
    for loc, _ in model.reference_fixed_points:
        if not any(abs(fp.location - loc) <= 1e-6 for fp in pts):
            m = derivative(model, loc)
            if m.is_finite and abs(m.value) < 1:
                pts.append(FixedPointInfo(complex(loc), m.value, _fixed_point_type(m.value)))
    return pts


# ---------------------------------------------------------------------------
# classification core


@dataclass
class IterationParams:
    max_iter: int = 200
    escape_log_bound: float = 1e4
    rho: float | None = None
    basin_tol: float = 1e-6

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")


@dataclass
class OrbitRecord:
    z0: complex
    iterates: list
    classification: Classification
    steps_used: int
    fixed_point_id: int | None = None
    hit_index: int | None = None
    entry_index: int | None = None

    def to_json(self) -> dict:
        its = []
        for v in self.iterates:
            if v.is_finite:
                its.append({"kind": "Finite", "re": v.value.real, "im": v.value.imag})
            elif v.is_pole:
                its.append({"kind": "PoleHit"})
            else:
                its.append({"kind": "Overflow", "logModulus": v.log_modulus, "phase": v.phase})
        return {"z0": [self.z0.real, self.z0.imag], "classification": self.classification.value,
                "stepsUsed": self.steps_used, "fixedPointId": self.fixed_point_id,
                "hitIndex": self.hit_index, "entryIndex": self.entry_index, "iterates": its}


def _md_logs(tract, rho, depth):
    """log M_D^k(rho) for k = 0..depth as floats (inf once unrepresentable)."""
    return np.array([t.log_value for t in md_orbit(tract, rho, depth)])


def classify_points(model: FunctionModel, tract: TractDescriptor, z0, params: IterationParams,
                    attractors: list, record: bool = False):
    """Vectorized orbit classification.

    Returns a dict of arrays: ``code``, ``fixed_point``, ``hit``, ``steps``
    and ``entry``; with ``record`` set, ``iterates`` holds the orbit of the
    first point as ComplexValue entries.
    """
    z = np.array(z0, dtype=complex).ravel()
    n_pts = z.size
    code = np.full(n_pts, OTHER, dtype=np.uint8)
    fixed = np.full(n_pts, -1, dtype=np.int32)
    hit = np.full(n_pts, -1, dtype=np.int32)
    steps = np.full(n_pts, params.max_iter, dtype=np.int32)
    entry = np.full(n_pts, -1, dtype=np.int32)
    prev_lm = np.full(n_pts, -np.inf)
    fast_ok = np.ones(n_pts, dtype=bool)
    md_logs = _md_logs(tract, params.rho, params.max_iter + 1) if params.rho is not None else None
    iterates = [] if record else None

    def fast_check(k, lm):
        ok = np.zeros(k.size, dtype=bool)
        inside = k < md_logs.size
        ok[inside] = lm[inside] >= md_logs[np.minimum(k[inside], md_logs.size - 1)]
        # beyond the table, monotone in-tract growth is accepted
        ok[~inside] = True
        ok[k <= 0] = True
        return ok

    active = np.arange(n_pts)
    for n in range(params.max_iter):
        if active.size == 0:
            break
        zc = z[active]
        if record and active[0] == 0:
            iterates.append(ComplexValue.finite(complex(zc[0])))
        done = np.zeros(active.size, dtype=bool)

        pole = model.pole_mask(zc)
        with np.errstate(all="ignore"):
            L = model.log_value(zc)
        pole |= np.isnan(L.real)
        code[active[pole]] = PREPOLE
        hit[active[pole]] = n
        done |= pole

        for k, fp in enumerate(attractors):
            tol = params.basin_tol * max(1.0, abs(fp.location))
            near = ~done & (np.abs(zc - fp.location) <= tol)
            code[active[near]] = BASIN
            fixed[active[near]] = k
            done |= near

        la = np.where(done, -np.inf, L.real)
        intr = tract.membership(zc, la) & ~done
        with np.errstate(divide="ignore"):
            lm = np.log(np.abs(zc))
        e = entry[active]
        pl = prev_lm[active]
        reset = intr & ((e < 0) | (lm < pl))
        e = np.where(intr, np.where(reset, n, e), -1)
        entry[active] = e
        prev_lm[active] = lm
        if md_logs is not None:
            fo = np.where(reset | ~intr, True, fast_ok[active])
            fo &= np.where(intr, fast_check(n - e, lm), True)
            fast_ok[active] = fo

        esc = ~done & intr & (lm > params.escape_log_bound)
        code[active[esc]] = ESCAPING
        done |= esc

        over = ~done & (la > LOG_OVERFLOW)
        for j in np.flatnonzero(over):
            Lj = complex(L[j])
            if math.isinf(Lj.real):
                ok = bool(intr[j])
            else:
                ok = tract.far_membership(Lj)
            i = active[j]
            if ok:
                code[i] = ESCAPING
                if e[j] < 0:
                    entry[i] = n + 1
                if md_logs is not None:
                    k = n + 1 - entry[i]
                    if 0 < k < md_logs.size:
                        fast_ok[i] &= Lj.real >= md_logs[k]
            if record and i == 0:
                iterates.append(ComplexValue.overflow(Lj.real, wrap_phase(Lj.imag)
                                                      if math.isfinite(Lj.imag) else math.nan))
        done |= over

        steps[active[done]] = n + 1
        live = ~done
        with np.errstate(all="ignore"):
            nxt = np.exp(L[live])
        lost = ~np.isfinite(nxt)
        ids = active[live]
        code[ids[lost]] = OTHER
        steps[ids[lost]] = n + 1
        z[ids] = nxt
        active = ids[~lost]
    if record:
        if code[0] == PREPOLE:
            iterates.append(ComplexValue.pole())
    if md_logs is not None:
        code[(code == ESCAPING) & fast_ok] = FAST
    out = {"code": code, "fixed_point": fixed, "hit": hit, "steps": steps, "entry": entry}
    if record:
        out["iterates"] = iterates
    return out


def iterate(model: FunctionModel, z0: complex, tract: TractDescriptor,
            params: IterationParams | None = None, attractors: list | None = None) -> OrbitRecord:
    """Follow one orbit until it is classified or max_iter runs out."""
    params = params or IterationParams()
    if attractors is None:
        attractors = attractors_for(model, tract.window)
    z0 = complex(z0)
    if not (math.isfinite(z0.real) and math.isfinite(z0.imag)):
        raise ValueError("z0 must be finite")
    res = classify_points(model, tract, np.array([z0]), params, attractors, record=True)
    cls = BY_CODE[int(res["code"][0])]
    fp = int(res["fixed_point"][0])
    hit = int(res["hit"][0])
    ent = int(res["entry"][0])
    return OrbitRecord(z0, res["iterates"], cls, int(res["steps"][0]),
                       fp if fp >= 0 else None, hit if hit >= 0 else None,
                       ent if ent >= 0 and cls in (Classification.ESCAPING, Classification.FAST) else None)


# ---------------------------------------------------------------------------
# fast escape


@dataclass
class FastEscapeResult:
    passed: bool
    depth_checked: int
    orbit: list = field(default_factory=list)
    md: list = field(default_factory=list)
    failed_at: int | None = None

    def __bool__(self) -> bool:
        return self.passed

    def to_json(self) -> dict:
        return {"passed": self.passed, "depthChecked": self.depth_checked,
                "failedAt": self.failed_at,
                "orbit": [t.to_json() for t in self.orbit],
                "md": [t.to_json() for t in self.md]}


def _tower_orbit(model, tract, z0, steps):
    """(modulus tower, in-tract flag) for f^0(z0), ..., as far as decidable."""
    out = []
    z = complex(z0)
    L = None
    V = None
    for _ in range(steps + 1):
        if V is not None:
            out.append((V, tract.far_sector is not None))
            V = far_image(model, V)
            continue
        if L is not None:
            inside = tract.far_membership(L)
            out.append((Tower.from_log(L.real), inside))
            if not (model.real_symmetric and L.imag == 0.0):
                break
            lt = model.far_log_abs(L)
            if lt is None:
                break
            V = lt.exp()
            L = None
            continue
        za = np.array([z])
        with np.errstate(all="ignore"):
            Lz = complex(model.log_value(za)[0])
        if model.pole_mask(za)[0] or math.isnan(Lz.real):
            out.append((Tower.of(math.inf), False))
            break
        out.append((Tower.of(abs(z)) if z != 0 else Tower(0, 0.0), bool(tract.membership(za, np.array([Lz.real]))[0])))
        if Lz.real > LOG_OVERFLOW:
            L = Lz
        else:
            z = complex(model.direct_value(za)[0])
    return out


def fast_escape_test(model: FunctionModel, z0: complex, tract: TractDescriptor, rho: float,
                     depth: int, shift: int = 0) -> FastEscapeResult:
    """Prefix check of |f^(n+shift)(z0)| >= M_D^n(rho) with f^(n+shift)(z0) in
    the tract, for n = 0..depth, compared as towers."""
    if depth < 1:
        raise ValueError("depth must be at least 1")
    if shift < 0:
        raise ValueError("shift must be nonnegative")
    md = md_orbit(tract, rho, depth)
    orbit = _tower_orbit(model, tract, z0, depth + shift)
    checked = -1
    for k in range(depth + 1):
        n = k + shift
        if n >= len(orbit):
            break
        value, inside = orbit[n]
        if not inside or value < md[k]:
            return FastEscapeResult(False, k, [v for v, _ in orbit], md, k)
        checked = k
    return FastEscapeResult(True, checked, [v for v, _ in orbit], md)


def search_fast_escape_seed(model: FunctionModel, tract: TractDescriptor, rho: float,
                            depth: int, lo: float, hi: float, count: int = 1000,
                            shift: int = 0):
    """First passing real seed among ``count`` cell midpoints of [lo, hi]."""
    xs = lo + (np.arange(count) + 0.5) * (hi - lo) / count
    for x in xs:
        res = fast_escape_test(model, complex(x), tract, rho, depth, shift)
        if res.passed and res.depth_checked >= depth:
            return float(x), res
    return None, None


# ---------------------------------------------------------------------------
# derivative lower bound on a logarithmic tract


@dataclass
class DerivativeBoundResult:
    violations: int
    samples: int
    r_min: float
    log_f_min: float
    worst_margin: float

    def to_json(self) -> dict:
        return {"violations": self.violations, "samples": self.samples, "rMin": self.r_min,
                "logFMin": self.log_f_min, "worstMargin": self.worst_margin}


def derivative_bound_check(tract: TractDescriptor, samples: int = 10_000, r_min: float = 10.0,
                           log_f_min: float = 10.0, r_max: float | None = None,
                           seed: int = 0) -> DerivativeBoundResult:
    """Count in-tract samples where |f'| <= |f| log|f| / (16 pi |z|).

    Points are drawn log-uniformly in |z| on [r_min, r_max] and uniformly
    in angle, keeping those in the tract with log|f| > log_f_min.  The test
    runs in log space as log|f'/f| versus log log|f| - log(16 pi |z|).
    """
    if tract.logarithmic != "heuristic":
        raise PreconditionViolation("tract is not flagged as logarithmic")
    if samples <= 0:
        return DerivativeBoundResult(0, 0, r_min, log_f_min, math.inf)
    r_max = 10.0 * r_min if r_max is None else r_max
    half = tract.far_sector if tract.far_sector is not None else math.pi
    rng = np.random.default_rng(seed)
    taken, bad, worst = 0, 0, math.inf
    model = tract.model
    for _ in range(10_000):
        if taken >= samples:
            break
        m = 4 * (samples - taken) + 64
        s = rng.uniform(math.log(r_min), math.log(r_max), m)
        t = rng.uniform(-half, half, m)
        z = np.exp(s + 1j * t)
        with np.errstate(all="ignore"):
            la = model.log_abs(z)
            keep = tract.membership(z, la) & (la > log_f_min)
            z, la = z[keep][: samples - taken], la[keep][: samples - taken]
            ld = model.logderiv(z)
            margin = np.log(np.abs(ld)) - (np.log(la) - np.log(16 * math.pi * np.abs(z)))
        taken += z.size
        bad += int(np.count_nonzero(~(margin > 0)))
        if margin.size:
            worst = min(worst, float(np.min(margin)))
    return DerivativeBoundResult(bad, taken, float(r_min), float(log_f_min), worst)
