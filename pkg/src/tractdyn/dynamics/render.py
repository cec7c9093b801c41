"""Escape-time style classification images."""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..functions import make_model
from ..tract import TractDescriptor, Window, locate_tract
from .orbits import BY_CODE, Classification, IterationParams, attractors_for, classify_points

GREY = (128, 128, 128)
BLACK = (0, 0, 0)
WHITE = (255, 255, 255)

# Prepole points are drawn like "Other"; fast escaping points like escaping ones.
PALETTES = {
    "fig1": {"Basin": GREY, "EscapingInTract": BLACK, "FastEscaping": BLACK,
             "Prepole": WHITE, "Other": WHITE},
    "fig2": {"Basin": WHITE, "EscapingInTract": BLACK, "FastEscaping": BLACK,
             "Prepole": GREY, "Other": GREY},
}

MIN_TRACT_PIXELS = 64
BLOCK_ROWS = 16


@dataclass(frozen=True)
class RenderSpec:
    model: str
    window: Window
    palette: str = "fig1"
    max_iter: int = 200
    escape_log_bound: float = 1e4
    R: float | None = None
    rho: float | None = None
    seed: complex | None = None

    def __post_init__(self):
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        pal = self.colors
        missing = {c.value for c in Classification} - set(pal)
        if missing:
            raise ValueError(f"palette lacks colours for {sorted(missing)}")

    @property
    def colors(self) -> dict:
        if isinstance(self.palette, str):
            if self.palette not in PALETTES:
                raise ValueError(f"unknown palette {self.palette!r}")
            return PALETTES[self.palette]
        return dict(self.palette)

    def to_json(self) -> dict:
        return {"model": self.model, "window": self.window.to_json(),
                "palette": {k: list(v) for k, v in self.colors.items()},
                "paletteName": self.palette if isinstance(self.palette, str) else None,
                "maxIter": self.max_iter, "escapeLogBound": self.escape_log_bound,
                "R": self.R, "rho": self.rho,
                "seed": None if self.seed is None else [complex(self.seed).real, complex(self.seed).imag]}


_FIG1 = Window(-10.0, 8.0, -12.0, 12.0, 300, 400)
_FIG2 = Window(-5.0, 10.0, -10.0, 10.0, 300, 400)
PRESETS = {
    "fig1-left": RenderSpec("example1:lambda=1/2", _FIG1, "fig1", R=20.0, seed=6.0),
    "fig1-mid": RenderSpec("example1:lambda=1", _FIG1, "fig1", R=20.0, seed=6.0),
    "fig1-right": RenderSpec("example1:lambda=2", _FIG1, "fig1", R=20.0, seed=6.0),
    "fig2-left": RenderSpec("gamma", _FIG2, "fig2", R=10.0, seed=8.0),
    "fig2-mid": RenderSpec("gamma_shift1", _FIG2, "fig2", R=10.0, seed=8.0),
    "fig2-right": RenderSpec("gamma_cos", _FIG2, "fig2", R=10.0, seed=8.0),
}


def preset(name: str) -> RenderSpec:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


@dataclass
class RenderResult:
    spec: RenderSpec
    codes: np.ndarray
    fixed_point_ids: np.ndarray
    histogram: dict
    fixed_points: list = field(default_factory=list)
    tract: TractDescriptor | None = None

    @property
    def rgb(self) -> np.ndarray:
        pal = self.spec.colors
        lut = np.array([pal[c.value] for c in BY_CODE], dtype=np.uint8)
        return lut[self.codes]

    def ppm_bytes(self) -> bytes:
        h, w = self.codes.shape
        return f"P6\n{w} {h}\n255\n".encode() + self.rgb.tobytes()

    def classify_at(self, z: complex) -> Classification:
        row, col = self.spec.window.lattice_index(np.array([complex(z)]))
        return BY_CODE[int(self.codes[row[0], col[0]])]

    def sidecar(self) -> dict:
        return {"spec": self.spec.to_json(), "histogram": self.histogram,
                "legend": {k: list(v) for k, v in self.spec.colors.items()},
                "fixedPoints": [fp.to_json() for fp in self.fixed_points],
                "tract": None if self.tract is None else self.tract.summary()}


def tract_window(window: Window, seed: complex) -> Window:
    """Render window enlarged to hold the seed, with a usable raster size."""
    re_min, re_max = min(window.re_min, seed.real - 1), max(window.re_max, seed.real + 1)
    im_min, im_max = min(window.im_min, seed.imag - 1), max(window.im_max, seed.imag + 1)
    dx = min(window.dx, (re_max - re_min) / MIN_TRACT_PIXELS)
    dy = min(window.dy, (im_max - im_min) / MIN_TRACT_PIXELS)
    w = min(1200, max(MIN_TRACT_PIXELS, math.ceil((re_max - re_min) / dx - 1e-9)))
    h = min(1200, max(MIN_TRACT_PIXELS, math.ceil((im_max - im_min) / dy - 1e-9)))
    return Window(re_min, re_max, im_min, im_max, w, h)


def _render_block(args):
    model, tract, params, attractors, z = args
    res = classify_points(model, tract, z, params, attractors)
    return res["code"], res["fixed_point"]


def render(spec: RenderSpec, workers: int = 1) -> RenderResult:
    """Classify the top-left corner point of every pixel in the window.

    Rows are split into fixed blocks, so the image does not depend on the
    number of worker processes.
    """
    model = make_model(spec.model)
    R = model.default_R if spec.R is None else spec.R
    seed = complex(model.tract_seed if spec.seed is None else spec.seed)
    tract = locate_tract(model, R, seed, tract_window(spec.window, seed))
    attractors = attractors_for(model, spec.window)
    params = IterationParams(spec.max_iter, spec.escape_log_bound, spec.rho)

    points = spec.window.lattice()
    h, w = points.shape
    jobs = [(model, tract, params, attractors, points[r0:r0 + BLOCK_ROWS].ravel())
            for r0 in range(0, h, BLOCK_ROWS)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_render_block, jobs))
    else:
        parts = [_render_block(j) for j in jobs]
    codes = np.concatenate([p[0] for p in parts]).reshape(h, w)
    fps = np.concatenate([p[1] for p in parts]).reshape(h, w)
    counts = np.bincount(codes.ravel(), minlength=len(BY_CODE))
    hist = {c.value: int(counts[i]) for i, c in enumerate(BY_CODE)}
    return RenderResult(spec, codes, fps, hist, attractors, tract)
