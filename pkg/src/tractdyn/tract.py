"""Direct tracts as connected components of {|f| > R} on a pixel raster."""
from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage
from skimage import measure

from .errors import OutsideWindow, SeedBelowThreshold, TractNotFound, WindowTooCoarse
from .functions import CallableModel, FunctionModel, wrap_phase
from .tower import Tower

MIN_RASTER = 8


@dataclass(frozen=True)
class Window:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    width: int
    height: int

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate window {self}")
        if self.width < 1 or self.height < 1:
            raise ValueError("window needs at least one pixel")

    @classmethod
    def parse(cls, extent: str, res: str = "200x200") -> "Window":
        vals = [float(v) for v in extent.split(",")]
        if len(vals) != 4:
            raise ValueError("window needs four numbers reMin,reMax,imMin,imMax")
        w, _, h = res.lower().partition("x")
        return cls(*vals, int(w), int(h))

    @property
    def dx(self) -> float:
        return (self.re_max - self.re_min) / self.width

    @property
    def dy(self) -> float:
        return (self.im_max - self.im_min) / self.height

    def centers(self) -> np.ndarray:
        """Pixel centers, shape (height, width); row 0 is the top edge."""
        re = self.re_min + (np.arange(self.width) + 0.5) * self.dx
        im = self.im_max - (np.arange(self.height) + 0.5) * self.dy
        return re[None, :] + 1j * im[:, None]

    def corners(self) -> np.ndarray:
        re = self.re_min + np.arange(self.width + 1) * self.dx
        im = self.im_max - np.arange(self.height + 1) * self.dy
        return re[None, :] + 1j * im[:, None]

    def lattice(self) -> np.ndarray:
        """Top-left pixel corners, shape (height, width).

        Unlike the centres these hit round numbers such as the origin and
        the real axis whenever the window bounds allow it.
        """
        re = self.re_min + (self.re_max - self.re_min) * np.arange(self.width) / self.width
        im = self.im_max - (self.im_max - self.im_min) * np.arange(self.height) / self.height
        return re[None, :] + 1j * im[:, None]

    def lattice_index(self, z):
        """(row, col) of the nearest lattice point."""
        z = np.asarray(z, dtype=complex)
        col = np.clip(np.round((z.real - self.re_min) / self.dx).astype(int), 0, self.width - 1)
        row = np.clip(np.round((self.im_max - z.imag) / self.dy).astype(int), 0, self.height - 1)
        return row, col

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return ((z.real >= self.re_min) & (z.real <= self.re_max)
                & (z.imag >= self.im_min) & (z.imag <= self.im_max))

    def pixel_index(self, z):
        """(row, col) of the pixel cell holding each point (points must be inside)."""
        z = np.asarray(z, dtype=complex)
        col = np.clip(np.floor((z.real - self.re_min) / self.dx).astype(int), 0, self.width - 1)
        row = np.clip(np.floor((self.im_max - z.imag) / self.dy).astype(int), 0, self.height - 1)
        return row, col

    def scaled(self, factor: int) -> "Window":
        return Window(self.re_min, self.re_max, self.im_min, self.im_max,
                      self.width * factor, self.height * factor)

    def to_json(self) -> dict:
        return {"reMin": self.re_min, "reMax": self.re_max, "imMin": self.im_min,
                "imMax": self.im_max, "width": self.width, "height": self.height}


def _structure(connectivity: int):
    if connectivity == 4:
        return ndimage.generate_binary_structure(2, 1)
    if connectivity == 8:
        return ndimage.generate_binary_structure(2, 2)
    raise ValueError("connectivity must be 4 or 8")


@dataclass
class RegionRaster:
    window: Window
    labels: np.ndarray
    connectivity: int = 4
    log_abs: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_components(self) -> int:
        return int(self.labels.max())

    def runs(self) -> list:
        flat = self.labels.ravel()
        if flat.size == 0:
            return []
        edges = np.flatnonzero(np.diff(flat)) + 1
        starts = np.concatenate(([0], edges))
        lengths = np.diff(np.concatenate((starts, [flat.size])))
        return [[int(flat[s]), int(n)] for s, n in zip(starts, lengths)]

    def to_json(self) -> dict:
        return {"window": self.window.to_json(), "connectivity": self.connectivity,
                "runs": self.runs()}

    @classmethod
    def from_json(cls, data: dict) -> "RegionRaster":
        w = data["window"]
        window = Window(w["reMin"], w["reMax"], w["imMin"], w["imMax"], w["width"], w["height"])
        flat = np.concatenate([np.full(n, lab, dtype=np.int32) for lab, n in data["runs"]])
        return cls(window, flat.reshape(window.height, window.width), data["connectivity"])

    def pgm_bytes(self) -> bytes:
        h, w = self.labels.shape
        header = f"P5\n{w} {h}\n255\n".encode("ascii")
        return header + (self.labels % 256).astype(np.uint8).tobytes()

    def write_pgm(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.pgm_bytes())

    def write_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh)


class Directness(enum.Enum):
    DIRECT_CANDIDATE = "DirectCandidate"
    CONTAINS_POLE = "ContainsPole"
    UNKNOWN = "Unknown"


def level_region(model: FunctionModel, R: float, window: Window,
                 connectivity: int = 4) -> RegionRaster:
    """Label the pixels whose centers satisfy |f| > R.

    Pole and overflow pixels count as above threshold.  Labels follow raster
    scan order, so the first component met scanning rows top-down is 1.
    """
    if R <= 0:
        raise ValueError("threshold R must be positive")
    if window.width < MIN_RASTER or window.height < MIN_RASTER:
        raise WindowTooCoarse(f"raster {window.width}x{window.height} is below {MIN_RASTER}x{MIN_RASTER}")
    la = model.log_abs(window.centers())
    above = (la > math.log(R)) | np.isnan(la)
    labels, _ = ndimage.label(above, structure=_structure(connectivity))
    return RegionRaster(window, labels.astype(np.int32), connectivity, la)


def _winding(g: np.ndarray) -> np.ndarray:
    """Winding number of g around every cell of a corner grid."""
    with np.errstate(invalid="ignore"):
        ang = np.angle(g)
    c00, c01 = ang[:-1, :-1], ang[:-1, 1:]
    c11, c10 = ang[1:, 1:], ang[1:, :-1]
    total = (wrap_phase(c01 - c00) + wrap_phase(c11 - c01)
             + wrap_phase(c10 - c11) + wrap_phase(c00 - c10))
    out = np.rint(total / (2 * np.pi))
    bad = ~np.isfinite(g)
    bad_cell = bad[:-1, :-1] | bad[:-1, 1:] | bad[1:, 1:] | bad[1:, :-1]
    return np.where(bad_cell, 0, out).astype(int)


@dataclass
class TractDescriptor:
    model: FunctionModel
    R: float
    seed: complex
    raster: RegionRaster
    label: int
    direct: Directness
    complement_bounded: bool
    logarithmic: str
    far_sector: float | None
    poles_inside: list = field(default_factory=list)
    critical_pixels: int = 0
    window_relative: bool = True

    @property
    def window(self) -> Window:
        return self.raster.window

    @property
    def mask(self) -> np.ndarray:
        return self.raster.labels == self.label

    @property
    def log_R(self) -> float:
        return math.log(self.R)

    def component_raster(self) -> RegionRaster:
        return RegionRaster(self.window, self.mask.astype(np.int32), self.raster.connectivity)

    def area_fraction(self) -> float:
        return float(self.mask.mean())

    def membership(self, z, log_abs=None) -> np.ndarray:
        """Vectorized tract test.

        Inside the window the raster label decides (plus a fresh |f| > R
        check); outside it, membership is extrapolated from the tract's
        asymptotic sector.
        """
        z = np.asarray(z, dtype=complex)
        if log_abs is None:
            log_abs = self.model.log_abs(z)
        with np.errstate(invalid="ignore"):
            above = np.asarray(log_abs) > self.log_R
        out = np.zeros(z.shape, dtype=bool)
        inside = self.window.contains(z)
        if inside.any():
            row, col = self.window.pixel_index(z[inside])
            out[inside] = (self.raster.labels[row, col] == self.label) & above[inside]
        outside = ~inside
        if outside.any() and self.far_sector is not None:
            ang = np.abs(np.angle(z[outside]))
            out[outside] = (ang < self.far_sector) & above[outside]
        return out

    def far_membership(self, L: complex) -> bool:
        """Membership of e^L for |e^L| beyond double range."""
        if self.far_sector is None:
            return False
        if abs(wrap_phase(L.imag)) >= self.far_sector:
            return False
        lt = self.model.far_log_abs(L)
        return lt is not None and lt > Tower.of(self.log_R)

    def summary(self) -> dict:
        return {
            "model": self.model.label,
            "R": self.R,
            "seed": [self.seed.real, self.seed.imag],
            "label": self.label,
            "direct": self.direct.value,
            "complementBounded": self.complement_bounded,
            "windowRelative": self.window_relative,
            "logarithmic": self.logarithmic,
            "criticalPixels": self.critical_pixels,
            "polesInside": [[p.real, p.imag] for p in self.poles_inside],
            "areaFraction": self.area_fraction(),
            "pixels": int(self.mask.sum()),
            "farSector": self.far_sector,
            "window": self.window.to_json(),
        }


def locate_tract(model: FunctionModel, R: float, seed: complex, window: Window,
                 connectivity: int = 4, raster: RegionRaster | None = None) -> TractDescriptor:
    """Descriptor for the component of {|f| > R} holding ``seed``."""
    seed = complex(seed)
    la_seed = float(model.log_abs(np.array([seed]))[0])
    if not la_seed > math.log(R):
        raise SeedBelowThreshold(f"|f({seed})| = exp({la_seed:.6g}) is not above R = {R}")
    if not window.contains(seed):
        raise OutsideWindow(f"seed {seed} lies outside the window")
    if raster is None:
        raster = level_region(model, R, window, connectivity)
    row, col = window.pixel_index(np.array([seed]))
    label = int(raster.labels[row[0], col[0]])
    if label == 0:
        r0, c0 = int(row[0]), int(col[0])
        patch = raster.labels[max(r0 - 1, 0):r0 + 2, max(c0 - 1, 0):c0 + 2]
        nz = patch[patch > 0]
        if nz.size == 0:
            raise TractNotFound(f"no labelled pixel near seed {seed}")
        label = int(np.bincount(nz).argmax())
    mask = raster.labels == label

    poles = model.poles_in(window.re_min, window.re_max, window.im_min, window.im_max)
    inside = []
    if poles.size:
        pr, pc = window.pixel_index(poles)
        inside = [complex(p) for p, hit in zip(poles, mask[pr, pc]) if hit]
    if isinstance(model, CallableModel) and not model.poles:
        direct = Directness.UNKNOWN
    else:
        direct = Directness.CONTAINS_POLE if inside else Directness.DIRECT_CANDIDATE

    border = np.concatenate((mask[0], mask[-1], mask[:, 0], mask[:, -1]))
    complement_bounded = bool(border.all())

    bz = np.concatenate((window.centers()[0][mask[0]], window.centers()[-1][mask[-1]],
                         window.centers()[:, 0][mask[:, 0]], window.centers()[:, -1][mask[:, -1]]))
    far_sector = None
    if bz.size and np.any(np.abs(np.angle(bz)) < model.sector):
        far_sector = model.sector

    with np.errstate(all="ignore"):
        g = model.logderiv(window.corners())
    wind = _winding(g)
    critical = int(((wind > 0) & mask).sum())
    logarithmic = "heuristic" if critical == 0 and direct is not Directness.CONTAINS_POLE else "no"

    return TractDescriptor(model, float(R), seed, raster, label, direct, complement_bounded,
                           logarithmic, far_sector, inside, critical)


def default_tract(model: FunctionModel, R: float | None = None, seed: complex | None = None,
                  window: Window | None = None, connectivity: int = 4) -> TractDescriptor:
    """Tract located with the model's registered seed, threshold and window."""
    if window is None:
        window = Window(*model.default_window)
    return locate_tract(model, model.default_R if R is None else R,
                        model.tract_seed if seed is None else seed, window, connectivity)


def contains_point(tract: TractDescriptor, z: complex) -> bool:
    z = complex(z)
    if not bool(tract.window.contains(np.array([z]))[0]):
        raise OutsideWindow(f"{z} lies outside the tract window")
    return bool(tract.membership(np.array([z]))[0])


def boundary_curve(tract: TractDescriptor) -> list:
    """Marching-squares polylines of |f| = R along the tract's boundary.

    The level set is traced on log|f| - log R with linear interpolation
    between pixel centers; pixels of other components are masked so only
    this component's boundary appears.
    """
    la = tract.raster.log_abs
    if la is None:
        la = tract.model.log_abs(tract.window.centers())
    phi = np.asarray(la, dtype=float) - tract.log_R
    phi = np.where(np.isnan(phi), 50.0, np.clip(phi, -50.0, 50.0))
    other = (tract.raster.labels > 0) & ~tract.mask
    phi = np.where(other, -1.0, phi)
    w = tract.window
    lines = []
    for c in measure.find_contours(phi, 0.0):
        rows, cols = c[:, 0], c[:, 1]
        z = (w.re_min + (cols + 0.5) * w.dx) + 1j * (w.im_max - (rows + 0.5) * w.dy)
        lines.append(z)
    return lines
