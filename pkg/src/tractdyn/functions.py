"""Meromorphic model functions with overflow-aware evaluation.

Every model works natively in log space: ``log_value`` returns a logarithm of
``f(z)`` (any branch) so that growth quantities stay finite far past the
double-precision range.  :func:`evaluate` packs the result into a
:class:`ComplexValue` that distinguishes finite values, pole hits and
overflowed values.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import lambertw

from .errors import DerivativeUnstable, UnknownModel
from .tower import LOG_OVERFLOW, Tower

POLE_RADIUS = 1e-9
TWO_PI = 2.0 * math.pi


class Kind(enum.Enum):
    FINITE = "finite"
    POLE = "pole"
    OVERFLOW = "overflow"


@dataclass(frozen=True)
class ComplexValue:
    kind: Kind
    value: complex = 0j
    log_modulus: float = math.nan
    phase: float = math.nan

    @classmethod
    def finite(cls, w: complex) -> "ComplexValue":
        w = complex(w)
        lm = math.log(abs(w)) if w != 0 else -math.inf
        return cls(Kind.FINITE, w, lm, cmath.phase(w))

    @classmethod
    def pole(cls) -> "ComplexValue":
        return cls(Kind.POLE, log_modulus=math.inf)

    @classmethod
    def overflow(cls, log_modulus: float, phase: float) -> "ComplexValue":
        return cls(Kind.OVERFLOW, complex(math.nan, math.nan), float(log_modulus), float(phase))

    @property
    def is_finite(self) -> bool:
        return self.kind is Kind.FINITE

    @property
    def is_pole(self) -> bool:
        return self.kind is Kind.POLE

    @property
    def is_overflow(self) -> bool:
        return self.kind is Kind.OVERFLOW


def wrap_phase(theta):
    """Map angles to (-pi, pi]."""
    t = np.remainder(np.asarray(theta, dtype=float) + np.pi, TWO_PI) - np.pi
    t = np.where(t == -np.pi, np.pi, t)
    return t if np.ndim(t) else float(t)


# ---------------------------------------------------------------------------
# special functions

# Lanczos rational kernel, g = 671/128 with 14 terms.
_LANCZOS_G = 671.0 / 128.0
_LANCZOS_C0 = 0.999999999999997092
_LANCZOS = (
    57.1562356658629235, -59.5979603554754912, 14.1360979747417471,
    -0.491913816097620199, 0.339946499848118887e-4, 0.465236289270485756e-4,
    -0.983744753048795646e-4, 0.158088703224912494e-3, -0.210264441724104883e-3,
    0.217439618115212643e-3, -0.164318106536763890e-3, 0.844182239838527433e-4,
    -0.261908384015814087e-4, 0.368991826595316234e-5,
)
_SQRT_2PI = 2.5066282746310005
_LOG_PI = math.log(math.pi)


def _loggamma_right(z):
    # valid for Re z >= 1/2
    tmp = z + _LANCZOS_G
    tmp = (z + 0.5) * np.log(tmp) - tmp
    ser = np.full_like(z, _LANCZOS_C0)
    for j, c in enumerate(_LANCZOS):
        ser = ser + c / (z + (j + 1))
    return tmp + np.log(_SQRT_2PI * ser / z)


def log_sin_pi(z):
    """log sin(pi z) without overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    w = np.where(upper, z, np.conj(z))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = -1j * np.pi * w + np.log1p(-np.exp(2j * np.pi * w)) + np.log(0.5j)
    return np.where(upper, out, np.conj(out))


def log_cos(z):
    """log cos(z) without overflow for large |Im z|."""
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    w = np.where(upper, z, np.conj(z))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        out = -1j * w + np.log1p(np.exp(2j * w)) - math.log(2.0)
    return np.where(upper, out, np.conj(out))


def _tan(z):
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    w = np.where(upper, z, np.conj(z))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = np.exp(2j * w)
        out = -1j * (e - 1.0) / (e + 1.0)
    return np.where(upper, out, np.conj(out))


def _cot_pi(z):
    z = np.asarray(z, dtype=complex)
    upper = z.imag >= 0
    w = np.where(upper, z, np.conj(z))
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        e = np.exp(2j * np.pi * w)
        out = 1j * (e + 1.0) / (e - 1.0)
    return np.where(upper, out, np.conj(out))


def loggamma(z):
    """A logarithm of Gamma(z) (branch unspecified), vectorized.

    Lanczos kernel for Re z >= 1/2, reflection formula otherwise.  Poles give
    ``+inf`` real part.
    """
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    right = z.real >= 0.5
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        if right.any():
            out[right] = _loggamma_right(z[right])
        left = ~right
        if left.any():
            zl = z[left]
            out[left] = _LOG_PI - log_sin_pi(zl) - _loggamma_right(1.0 - zl)
    # exact poles: log sin -> -inf
    bad = ~np.isfinite(out.real) & (z.real < 0.5)
    out[bad] = complex(np.inf, 0.0)
    return out[0] if scalar else out


# Bernoulli terms B_2k / (2k) for the digamma asymptotic series
_DIGAMMA_SERIES = (1 / 12, -1 / 120, 1 / 252, -1 / 240, 1 / 132, -691 / 32760, 1 / 12)


def digamma(z):
    """psi(z) = Gamma'(z)/Gamma(z), vectorized."""
    z = np.asarray(z, dtype=complex)
    scalar = z.ndim == 0
    z = np.atleast_1d(z).copy()
    left = z.real < 0.5
    zz = np.where(left, 1.0 - z, z)
    acc = np.zeros_like(zz)
    with np.errstate(divide="ignore", invalid="ignore"):
        for k in range(10):
            acc -= 1.0 / (zz + k)
        w = zz + 10.0
        inv2 = 1.0 / (w * w)
        series = np.zeros_like(w)
        p = inv2
        for c in _DIGAMMA_SERIES:
            series += c * p
            p = p * inv2
        out = acc + np.log(w) - 0.5 / w - series
        out = np.where(left, out - np.pi * _cot_pi(z), out)
    return out[0] if scalar else out


# ---------------------------------------------------------------------------
# models


@dataclass(frozen=True)
class FunctionModel:
    """A meromorphic function with pole and growth metadata.

    Subclasses implement ``log_value`` and ``logderiv``; everything else has
    a usable default.  ``sector`` is the half-angle, about the positive real
    axis, that the main tract occupies far from the origin; it is used to
    extrapolate tract membership beyond a raster window.
    """

    id: str = "model"
    params: dict = field(default_factory=dict)
    pole_radius: float = POLE_RADIUS
    sector: float = math.pi / 2
    tract_seed: complex = 3.0
    default_R: float = 1.0
    default_window: tuple = (-5.0, 5.0, -5.0, 5.0, 200, 200)
    tower_shift: int = 1
    reference_fixed_points: tuple = ()
    analytic_derivative: bool = True

    @property
    def real_symmetric(self) -> bool:
        return True

    # -- overridable pieces -------------------------------------------------
    def log_value(self, z):
        raise NotImplementedError

    def logderiv(self, z):
        raise NotImplementedError

    def pole_mask(self, z):
        return np.zeros(np.shape(z), dtype=bool)

    def poles_in(self, re_min, re_max, im_min, im_max):
        return np.zeros(0, dtype=complex)

    def direct_value(self, z):
        """f(z) where representable; callers mask overflow themselves."""
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(self.log_value(z))

    def deriv_value(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return self.direct_value(z) * self.logderiv(z)

    def far_log_abs(self, L: complex):
        """log|f(e^L)| as a Tower for |e^L| beyond double range, or None
        when e^L is outside the tract sector."""
        ell, theta = L.real, wrap_phase(L.imag)
        c = math.cos(theta)
        if c <= math.cos(self.sector) or c <= 0:
            return None
        return Tower.from_log(ell + math.log(c))

    # -- derived helpers ------------------------------------------------------
    def log_abs(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            la = np.real(self.log_value(z))
        return np.where(self.pole_mask(z), np.inf, la)

    @property
    def label(self) -> str:
        if not self.params:
            return self.id
        parts = []
        for k, v in sorted(self.params.items()):
            v = complex(v)
            parts.append(f"{k}={v.real:g}" + (f",{v.imag:g}" if v.imag else ""))
        return f"{self.id}:{';'.join(parts)}"


@dataclass(frozen=True)
class ExpModel(FunctionModel):
    id: str = "exp"
    tract_seed: complex = 3.0

    def log_value(self, z):
        return np.asarray(z, dtype=complex)

    def logderiv(self, z):
        return np.ones(np.shape(z), dtype=complex)

    def direct_value(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class ExpExpModel(FunctionModel):
    id: str = "expexp"
    tract_seed: complex = 2.0
    default_R: float = math.e
    default_window: tuple = (-3.0, 5.0, -4.0, 4.0, 200, 200)
    sector: float = 0.05
    tower_shift: int = 2

    def log_value(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            out = np.exp(np.asarray(z, dtype=complex))
        # Re z beyond ~709: log f itself is not representable
        return np.where(np.isfinite(out), out, complex(np.inf, 0.0))

    def logderiv(self, z):
        with np.errstate(over="ignore", invalid="ignore"):
            return np.exp(np.asarray(z, dtype=complex))

    def far_log_abs(self, L: complex):
        theta = wrap_phase(L.imag)
        if math.cos(theta) <= math.cos(self.sector):
            return None
        if L.real < 709.0:
            w = cmath.exp(L)
            c = math.cos(math.fmod(w.imag, TWO_PI))
            if c <= 0:
                return None
            # log|f(w)| = e^{Re w} cos(Im w)
            return Tower.from_log(w.real + math.log(c))
        return Tower(2, L.real + math.log(math.cos(theta))).normalized()


@dataclass(frozen=True)
class Example1Model(FunctionModel):
    """lambda (e^{2z} - 1) / (e^z - 1/z), evaluated as lambda z (e^{2z}-1)/(z e^z - 1)."""

    id: str = "example1"
    params: dict = field(default_factory=lambda: {"lambda": 1.0})
    tract_seed: complex = 6.0
    default_R: float = 20.0
    default_window: tuple = (-10.0, 8.0, -12.0, 12.0, 400, 400)
    reference_fixed_points: tuple = ((0j, 0j),)

    @property
    def lam(self) -> complex:
        return complex(self.params.get("lambda", 1.0))

    @property
    def real_symmetric(self) -> bool:  # type: ignore[override]
        return self.lam.imag == 0

    def direct_value(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            near = self.lam * z * np.expm1(2 * z) / (z * np.exp(z) - 1.0)
            far = np.exp(self._log_far(z))
        return np.where(z.real > 30.0, far, near)

    def _log_far(self, z):
        with np.errstate(all="ignore"):
            return (np.log(self.lam) + z + np.log1p(-np.exp(-2 * z))
                    - np.log1p(-np.exp(-z) / z))

    def log_value(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            near = np.log(self.lam * z * np.expm1(2 * z) / (z * np.exp(z) - 1.0))
            out = np.where(z.real > 30.0, self._log_far(z), near)
        return np.where(self.pole_mask(z), complex(np.inf, 0.0), out)

    def logderiv(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            right = 1.0 / z + 2.0 / (-np.expm1(-2 * z)) - (1.0 + z) / (z - np.exp(-z))
            ez = np.exp(z)
            left = 1.0 / z + 2.0 * ez * ez / np.expm1(2 * z) - (1.0 + z) * ez / (z * ez - 1.0)
        return np.where(z.real > 0, right, left)

    def deriv_value(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            ez = np.exp(z)
            num = np.expm1(2 * z)
            den = z * ez - 1.0
            near = self.lam * ((num + 2 * z * ez * ez) * den - z * num * (1.0 + z) * ez) / (den * den)
            far = self.direct_value(z) * self.logderiv(z)
        return np.where(z.real > 30.0, far, near)

    def pole_mask(self, z):
        z = np.asarray(z, dtype=complex)
        with np.errstate(all="ignore"):
            ez = np.exp(z)
            # Newton distance to the nearest root of z e^z = 1
            dist = np.abs(z * ez - 1.0) / np.abs(ez * (1.0 + z))
        return (z.real < 5.0) & (dist < self.pole_radius)

    def poles_in(self, re_min, re_max, im_min, im_max):
        kmax = int(math.ceil(max(abs(im_min), abs(im_max)) / TWO_PI)) + 2
        poles = np.array([complex(lambertw(1.0, k)) for k in range(-kmax, kmax + 1)])
        inside = ((poles.real >= re_min) & (poles.real <= re_max)
                  & (poles.imag >= im_min) & (poles.imag <= im_max))
        return poles[inside]

    def far_log_abs(self, L: complex):
        theta = wrap_phase(L.imag)
        c = math.cos(theta)
        if c <= 0:
            return None
        if L.real < LOG_OVERFLOW:
            return Tower.of(math.log(abs(self.lam)) + math.exp(L.real) * c)
        return Tower.from_log(L.real + math.log(c))


@dataclass(frozen=True)
class _GammaFamily(FunctionModel):
    tract_seed: complex = 8.0
    default_R: float = 10.0
    default_window: tuple = (-5.0, 10.0, -10.0, 10.0, 300, 400)
    shift: float = 0.0

    def _arg(self, z):
        return np.asarray(z, dtype=complex) + self.shift

    def pole_mask(self, z):
        w = self._arg(z)
        n = np.round(w.real)
        return (n <= 0) & (np.abs(w - n) < self.pole_radius)

    def poles_in(self, re_min, re_max, im_min, im_max):
        if im_min > 0 or im_max < 0:
            return np.zeros(0, dtype=complex)
        lo = math.ceil(re_min + self.shift)
        hi = min(0, math.floor(re_max + self.shift))
        return np.array([complex(n - self.shift) for n in range(lo, hi + 1)], dtype=complex)

    def log_value(self, z):
        out = loggamma(self._arg(z))
        return np.where(self.pole_mask(z), complex(np.inf, 0.0), out)

    def logderiv(self, z):
        return digamma(self._arg(z))

    def _stirling_far(self, L: complex):
        ell, theta = L.real, wrap_phase(L.imag)
        inner = (ell - 1.0) * math.cos(theta) - theta * math.sin(theta)
        return ell, theta, inner

    def far_log_abs(self, L: complex):
        ell, theta, inner = self._stirling_far(L)
        if math.cos(theta) <= 0 or inner <= 0:
            return None
        if ell < LOG_OVERFLOW:
            w = cmath.exp(L) + self.shift
            # Stirling's series, leading terms
            lg = (w - 0.5) * cmath.log(w) - w + 0.5 * math.log(TWO_PI)
            return Tower.of(lg.real)
        return Tower.from_log(ell + math.log(inner))


@dataclass(frozen=True)
class GammaModel(_GammaFamily):
    id: str = "gamma"
    reference_fixed_points: tuple = ((1 + 0j, complex(-0.5772156649015329)),)

@dataclass(frozen=True)
class GammaShift1Model(_GammaFamily):
    id: str = "gamma_shift1"
    shift: float = 1.0
    reference_fixed_points: tuple = ((1 + 0j, complex(1 - 0.5772156649015329)),)


@dataclass(frozen=True)
class GammaCosModel(_GammaFamily):
    """Gamma(z+1) cos(z)."""

    id: str = "gamma_cos"
    shift: float = 1.0

    def log_value(self, z):
        z = np.asarray(z, dtype=complex)
        out = loggamma(z + 1.0) + log_cos(z)
        return np.where(self.pole_mask(z), complex(np.inf, 0.0), out)

    def logderiv(self, z):
        z = np.asarray(z, dtype=complex)
        return digamma(z + 1.0) - _tan(z)

    def far_log_abs(self, L: complex):
        ell, theta, inner = self._stirling_far(L)
        inner += abs(math.sin(theta))
        if math.cos(theta) <= 0 or inner <= 0:
            return None
        if ell < LOG_OVERFLOW:
            w = cmath.exp(L)
            lg = (w + 0.5) * cmath.log(w + 1) - (w + 1) + 0.5 * math.log(TWO_PI)
            return Tower.of(lg.real + abs(w.imag) - math.log(2.0))
        return Tower.from_log(ell + math.log(inner))


@dataclass(frozen=True)
class CallableModel(FunctionModel):
    """User-supplied vectorized callable; derivatives are numeric."""

    id: str = "callable"
    func: object = None
    poles: tuple = ()
    analytic_derivative: bool = False

    @property
    def real_symmetric(self) -> bool:  # type: ignore[override]
        return False

    def log_value(self, z):
        with np.errstate(all="ignore"):
            out = np.log(self.func(np.asarray(z, dtype=complex)))
        return np.where(self.pole_mask(z), complex(np.inf, 0.0), out)

    def direct_value(self, z):
        return self.func(np.asarray(z, dtype=complex))

    def pole_mask(self, z):
        z = np.asarray(z, dtype=complex)
        mask = np.zeros(z.shape, dtype=bool)
        for p in self.poles:
            mask |= np.abs(z - p) < self.pole_radius
        return mask

    def poles_in(self, re_min, re_max, im_min, im_max):
        return np.array([p for p in self.poles
                         if re_min <= p.real <= re_max and im_min <= p.imag <= im_max],
                        dtype=complex)

    def logderiv(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.array([numeric_derivative(self, w).value for w in z.ravel()]).reshape(z.shape)
        with np.errstate(all="ignore"):
            return out / self.direct_value(z)

    def deriv_value(self, z):
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.array([numeric_derivative(self, w).value for w in z.ravel()]).reshape(z.shape)


# ---------------------------------------------------------------------------
# registry

MODEL_TYPES = {
    "exp": ExpModel,
    "expexp": ExpExpModel,
    "example1": Example1Model,
    "gamma": GammaModel,
    "gamma_shift1": GammaShift1Model,
    "gamma_cos": GammaCosModel,
}


def _parse_complex(text: str) -> complex:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not 1 <= len(parts) <= 2:
        raise UnknownModel(f"bad complex parameter {text!r}")
    try:
        from fractions import Fraction

        vals = [float(Fraction(p)) for p in parts]
    except ValueError as exc:
        raise UnknownModel(f"bad complex parameter {text!r}") from exc
    return complex(vals[0], vals[1] if len(vals) == 2 else 0.0)


def make_model(selector: str, **overrides) -> FunctionModel:
    """Build a model from ``id`` or ``id:name=value`` selection strings.

    >>> make_model("example1:lambda=2").lam
    (2+0j)
    """
    name, _, rest = selector.partition(":")
    name = name.strip()
    if name not in MODEL_TYPES:
        raise UnknownModel(f"unknown model {name!r}; choose from {sorted(MODEL_TYPES)}")
    params = {}
    if rest:
        key, eq, val = rest.partition("=")
        if not eq:
            raise UnknownModel(f"bad parameter string {rest!r}")
        params[key.strip()] = _parse_complex(val)
    for k, v in overrides.items():
        if v is not None:
            params[k] = complex(v)
    cls = MODEL_TYPES[name]
    if name == "example1":
        unknown = set(params) - {"lambda"}
        if unknown:
            raise UnknownModel(f"example1 accepts only 'lambda', got {sorted(unknown)}")
        lam = complex(params.get("lambda", 1.0))
        if lam == 0:
            raise UnknownModel("lambda must be nonzero")
        return cls(params={"lambda": lam})
    if params:
        raise UnknownModel(f"model {name!r} takes no parameters")
    return cls()


# ---------------------------------------------------------------------------
# public operations


def evaluate(model: FunctionModel, z: complex) -> ComplexValue:
    """f(z) as a finite value, a pole hit, or an overflowed log-modulus."""
    z = complex(z)
    za = np.array([z])
    if model.pole_mask(za)[0]:
        return ComplexValue.pole()
    with np.errstate(all="ignore"):
        L = complex(model.log_value(za)[0])
    if math.isnan(L.real):
        return ComplexValue.pole()
    if L.real == math.inf:
        # log f itself overflowed (e.g. exp(exp z) for Re z > 709) or an exact pole
        if model.poles_in(z.real - 1, z.real + 1, z.imag - 1, z.imag + 1).size:
            return ComplexValue.pole()
        return ComplexValue.overflow(math.inf, math.nan)
    if L.real > LOG_OVERFLOW:
        return ComplexValue.overflow(L.real, wrap_phase(L.imag))
    if L.real == -math.inf:
        return ComplexValue.finite(0j)
    w = complex(model.direct_value(za)[0])
    if not (math.isfinite(w.real) and math.isfinite(w.imag)):
        w = cmath.exp(L)
    return ComplexValue.finite(w)


def gamma(z: complex) -> ComplexValue:
    """Gamma(z) via the Lanczos kernel and the reflection formula."""
    return evaluate(GammaModel(), z)


def numeric_derivative(model: FunctionModel, z: complex, h: float | None = None) -> ComplexValue:
    """Central differences with Richardson (Ridders) extrapolation.

    Raises DerivativeUnstable when the extrapolation tableau does not settle
    to 1e-4 relative accuracy.
    """
    z = complex(z)
    if h is None:
        h = 0.05 * max(1.0, abs(z)) ** 0.5

    def f(w):
        v = evaluate(model, w)
        if not v.is_finite:
            raise DerivativeUnstable(f"non-finite value near {w}")
        return v.value

    con, con2, ntab, safe = 1.4, 1.96, 12, 2.0
    a = [[0j] * ntab for _ in range(ntab)]
    hh = h
    a[0][0] = (f(z + hh) - f(z - hh)) / (2 * hh)
    best, err = a[0][0], math.inf
    for i in range(1, ntab):
        hh /= con
        a[0][i] = (f(z + hh) - f(z - hh)) / (2 * hh)
        fac = con2
        for j in range(1, i + 1):
            a[j][i] = (a[j - 1][i] * fac - a[j - 1][i - 1]) / (fac - 1.0)
            fac *= con2
            errt = max(abs(a[j][i] - a[j - 1][i]), abs(a[j][i] - a[j - 1][i - 1]))
            if errt <= err:
                err, best = errt, a[j][i]
        if abs(a[i][i] - a[i - 1][i - 1]) >= safe * err:
            break
    scale = max(abs(best), abs(f(z)) / max(1.0, abs(z)), 1e-12)
    if err > 1e-4 * scale:
        raise DerivativeUnstable(f"extrapolants disagree at {z}: err={err:.3g}")
    return ComplexValue.finite(best)


def derivative(model: FunctionModel, z: complex) -> ComplexValue:
    """f'(z), analytic when the model registers it, numeric otherwise."""
    if not model.analytic_derivative:
        return numeric_derivative(model, z)
    za = np.array([complex(z)])
    if model.pole_mask(za)[0]:
        return ComplexValue.pole()
    v = evaluate(model, z)
    if v.is_pole:
        return v
    if v.is_overflow:
        g = complex(model.logderiv(za)[0])
        if g == 0:
            return ComplexValue.finite(0j)
        return ComplexValue.overflow(v.log_modulus + math.log(abs(g)),
                                     wrap_phase(v.phase + cmath.phase(g)))
    with np.errstate(all="ignore"):
        d = complex(model.deriv_value(za)[0])
    if not (math.isfinite(d.real) and math.isfinite(d.imag)):
        g = complex(model.logderiv(za)[0])
        lm = v.log_modulus + math.log(abs(g))
        if lm > LOG_OVERFLOW:
            return ComplexValue.overflow(lm, wrap_phase(v.phase + cmath.phase(g)))
        d = v.value * g
    return ComplexValue.finite(d)
