"""Forward images of full sets under f, filled and measured in log-polar form.

A region is stored on a grid in ``(s, phi)`` with ``|z| = e^s``.  Everything
with ``s`` below the grid is taken to belong to the region, so a region is
the disc ``|z| < e^s_min`` plus the masked cells.  The forward image of a
cell is the image of its two triangles under ``log f``, which lands in the
``(log|w|, arg w)`` plane directly; rows whose preimage spans a full turn
are covered completely.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ImageEscapesWindow, PreconditionViolation
from ..tract import RegionRaster, TractDescriptor, Window

TWO_PI = 2 * math.pi
MAX_SUBDIVISION = 4


@dataclass
class PolarRegion:
    s_min: float
    s_max: float
    mask: np.ndarray  # (n_s, n_phi), row 0 at s_min, column 0 at phi = -pi

    @property
    def n_s(self) -> int:
        return self.mask.shape[0]

    @property
    def n_phi(self) -> int:
        return self.mask.shape[1]

    @property
    def ds(self) -> float:
        return (self.s_max - self.s_min) / self.n_s

    def s_edges(self) -> np.ndarray:
        return self.s_min + self.ds * np.arange(self.n_s + 1)

    def phi_edges(self) -> np.ndarray:
        return -math.pi + TWO_PI * np.arange(self.n_phi + 1) / self.n_phi

    @classmethod
    def disc(cls, radius: float, n_s: int = 128, n_phi: int = 512) -> "PolarRegion":
        """Disc |z| < radius on a grid starting at radius / 8."""
        s_hi = math.log(radius)
        s_lo = s_hi - math.log(8.0)
        return cls(s_lo, s_hi, np.ones((n_s, n_phi), dtype=bool))

    @classmethod
    def from_raster(cls, raster: RegionRaster, n_s: int = 128, n_phi: int = 512) -> "PolarRegion":
        """Polar resampling of the nonzero pixels of a cartesian raster.

        The inner radius is a tenth of the window's reach; the region must
        contain the inner disc for the result to be meaningful.
        """
        win = raster.window
        reach = max(abs(win.re_min), abs(win.re_max), abs(win.im_min), abs(win.im_max))
        reach *= math.sqrt(2)
        s_lo, s_hi = math.log(reach / 10), math.log(reach)
        ds = (s_hi - s_lo) / n_s
        s = s_lo + (np.arange(n_s) + 0.5) * ds
        phi = -math.pi + (np.arange(n_phi) + 0.5) * TWO_PI / n_phi
        z = np.exp(s[:, None] + 1j * phi[None, :])
        inside = win.contains(z)
        mask = np.zeros(z.shape, dtype=bool)
        row, col = win.pixel_index(z[inside])
        mask[inside] = raster.labels[row, col] > 0
        zero = win.contains(np.array([0j]))[0]
        if zero:
            r0, c0 = win.pixel_index(np.array([0j]))
            zero = raster.labels[r0[0], c0[0]] > 0
        if not zero:
            raise PreconditionViolation("region does not contain the origin")
        # cells inside the inner radius must all be in the region
        inner = np.exp(s_lo) * np.exp(1j * np.linspace(-math.pi, math.pi, 4 * n_phi))
        r1, c1 = win.pixel_index(inner)
        if not (raster.labels[r1, c1] > 0).all():
            raise PreconditionViolation("region does not contain the inner disc")
        return cls(s_lo, s_hi, mask)

    def inner_log_radius(self) -> float:
        """log of the largest sampled r with the circle |z| = r inside the
        region (the centre line of the last full row)."""
        full = self.mask.all(axis=1)
        first = self.n_s if full.all() else int(np.argmin(full))
        return self.s_min + (first - 0.5) * self.ds

    def interior(self) -> np.ndarray:
        """Cells whose eight neighbours are in the region too (phi periodic)."""
        m = np.pad(self.mask, ((0, 0), (1, 1)), mode="wrap")
        m = np.pad(m, ((1, 1), (0, 0)), constant_values=False)
        m[0] = True
        out = ndimage.binary_erosion(m, structure=np.ones((3, 3), dtype=bool), border_value=1)
        return out[1:-1, 1:-1] & self.mask

    def to_raster(self, window: Window) -> RegionRaster:
        """Cartesian rendering (pixel centres) of the region on ``window``."""
        z = window.centers()
        with np.errstate(divide="ignore"):
            s = np.log(np.abs(z))
        phi = np.angle(z)
        row = np.floor((s - self.s_min) / self.ds).astype(int)
        col = np.clip(np.floor((phi + math.pi) / TWO_PI * self.n_phi).astype(int), 0, self.n_phi - 1)
        lab = np.zeros(z.shape, dtype=np.int32)
        lab[row < 0] = 1
        ok = (row >= 0) & (row < self.n_s)
        lab[ok] = self.mask[row[ok], col[ok]]
        return RegionRaster(window, lab, 4)


@dataclass
class OuterStep:
    region: PolarRegion
    log_r: float
    log_r_next: float

    @property
    def ratio_log(self) -> float:
        """log(r_{n+1} / r_n)."""
        return self.log_r_next - self.log_r

    def to_json(self) -> dict:
        return {"logR": self.log_r, "logRNext": self.log_r_next,
                "rNext": math.exp(self.log_r_next) if self.log_r_next < 700 else None,
                "sMin": self.region.s_min, "sMax": self.region.s_max,
                "shape": list(self.region.mask.shape)}


def _cell_logs(model, z, ref):
    """log f on ``z`` with branches chosen next to ``ref`` via f'/f."""
    with np.errstate(all="ignore"):
        raw = model.log_value(z)
        ld = model.logderiv(ref)
        Lref = model.log_value(ref)
    pred = Lref + ld * (z - ref)
    k = np.round((pred.imag - raw.imag) / TWO_PI)
    return raw + 1j * TWO_PI * k, Lref


def _source_triangles(model, region: PolarRegion, cells: np.ndarray, target_step: float):
    """Image triangles (X, phi) for the selected source cells, subdividing
    cells whose image bends by more than half a target pixel."""
    s_e, p_e = region.s_edges(), region.phi_edges()
    i, j = np.nonzero(cells)
    s0, s1 = s_e[i], s_e[i + 1]
    p0, p1 = p_e[j], p_e[j + 1]
    tris = []
    for depth in range(MAX_SUBDIVISION + 1):
        if s0.size == 0:
            break
        sc, pc = 0.5 * (s0 + s1), 0.5 * (p0 + p1)
        ref = np.exp(sc + 1j * pc)
        corners = np.exp(np.stack([s0 + 1j * p0, s1 + 1j * p0, s1 + 1j * p1, s0 + 1j * p1], axis=1))
        Lc, Lref = _cell_logs(model, corners, ref[:, None])
        Lref = Lref[:, 0]
        bend = np.abs(Lc.mean(axis=1) - Lref)
        split = (bend > 0.5 * target_step) & (depth < MAX_SUBDIVISION)
        keep = ~split
        if keep.any():
            c = Lc[keep]
            tris.append(np.stack([c[:, 0], c[:, 1], c[:, 2]], axis=1))
            tris.append(np.stack([c[:, 0], c[:, 2], c[:, 3]], axis=1))
        if not split.any():
            break
        s0, s1, p0, p1 = s0[split], s1[split], p0[split], p1[split]
        sm, pm = 0.5 * (s0 + s1), 0.5 * (p0 + p1)
        s0, s1, p0, p1 = (np.concatenate(v) for v in (
            (s0, sm, s0, sm), (sm, s1, sm, s1), (p0, p0, pm, pm), (pm, pm, p1, p1)))
    if not tris:
        return np.zeros((0, 3), dtype=complex)
    return np.concatenate(tris)


def _scan_triangles(tris: np.ndarray, x_lo: float, dx: float, n_x: int, n_phi: int) -> np.ndarray:
    """Rasterize triangles in the (X, phi) plane onto a periodic grid,
    sampling each row at its centre line."""
    X = tris.real
    P = tris.imag
    grid = np.zeros((n_x, n_phi), dtype=bool)
    r0 = np.ceil((X.min(axis=1) - x_lo) / dx - 0.5).astype(np.int64)
    r1 = np.floor((X.max(axis=1) - x_lo) / dx - 0.5).astype(np.int64)
    r0 = np.maximum(r0, 0)
    r1 = np.minimum(r1, n_x - 1)
    count = np.maximum(r1 - r0 + 1, 0)
    if count.sum() == 0:
        return grid
    t = np.repeat(np.arange(tris.shape[0]), count)
    offs = np.arange(count.sum()) - np.repeat(np.cumsum(count) - count, count)
    row = r0[t] + offs
    xc = x_lo + (row + 0.5) * dx
    lo = np.full(row.size, np.inf)
    hi = np.full(row.size, -np.inf)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        xa, xb = X[t, a], X[t, b]
        pa, pb = P[t, a], P[t, b]
        span = xb - xa
        with np.errstate(divide="ignore", invalid="ignore"):
            u = (xc - xa) / span
        hit = (np.minimum(xa, xb) <= xc) & (xc <= np.maximum(xa, xb)) & (span != 0)
        ph = pa + u * (pb - pa)
        lo = np.where(hit, np.minimum(lo, ph), lo)
        hi = np.where(hit, np.maximum(hi, ph), hi)
        flat = (span == 0) & (xa == xc)
        lo = np.where(flat, np.minimum(lo, np.minimum(pa, pb)), lo)
        hi = np.where(flat, np.maximum(hi, np.maximum(pa, pb)), hi)
    ok = np.isfinite(lo) & np.isfinite(hi)
    row, lo, hi = row[ok], lo[ok], hi[ok]
    dphi = TWO_PI / n_phi
    c0 = np.floor((lo + math.pi) / dphi).astype(np.int64)
    c1 = np.floor((hi + math.pi) / dphi).astype(np.int64)
    full = (c1 - c0 + 1) >= n_phi
    grid[row[full]] = True
    row, c0, c1 = row[~full], c0[~full], c1[~full]
    n = c1 - c0 + 1
    if n.size:
        rr = np.repeat(row, n)
        cc = np.repeat(c0, n) + (np.arange(n.sum()) - np.repeat(np.cumsum(n) - n, n))
        grid[rr, np.mod(cc, n_phi)] = True
    return grid


def _fill(grid: np.ndarray) -> np.ndarray:
    """Fill holes: complement cells not connected to the outer (large X)
    edge, with phi periodic."""
    comp = ~grid
    lab, n = ndimage.label(comp)
    if n == 0:
        return grid.copy()
    parent = np.arange(n + 1)

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    left, right = lab[:, 0], lab[:, -1]
    for a, b in zip(left, right):
        if a and b:
            ra, rb = find(a), find(b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)
    roots = np.array([find(a) for a in range(n + 1)])
    outer = set(roots[np.unique(lab[-1][lab[-1] > 0])].tolist())
    outside = np.isin(roots[lab], list(outer)) & (lab > 0)
    return ~outside


def outer_sequence_step(model, tract: TractDescriptor, region: PolarRegion,
                        n_x: int = 1024, n_phi: int | None = None,
                        max_log_radius: float = 1e6) -> OuterStep:
    """One step G_n -> G_{n+1} = fill(f(G_n cap D)).

    Only the part of G_n cap D with |z| >= r_n / 4 is pushed forward; the
    resulting r_{n+1} is the radius of the largest disc about 0 inside the
    filled image, so it is a lower bound for the full construction.
    """
    n_phi = region.n_phi if n_phi is None else n_phi
    log_r = region.inner_log_radius()
    if log_r <= region.s_min:
        raise PreconditionViolation("region does not surround a circle about the origin")
    if log_r <= tract.log_R and math.exp(log_r) <= tract.R:
        raise PreconditionViolation(f"r_n = e^{log_r:.4g} does not exceed R = {tract.R}")

    s_c = region.s_min + (np.arange(region.n_s) + 0.5) * region.ds
    phi_c = -math.pi + (np.arange(region.n_phi) + 0.5) * TWO_PI / region.n_phi
    with np.errstate(over="ignore", invalid="ignore"):
        zc = np.exp(s_c[:, None] + 1j * phi_c[None, :])
    if not np.isfinite(zc[region.mask.any(axis=1)]).all():
        raise ImageEscapesWindow("region reaches beyond double range")
    cells = region.interior() & (s_c[:, None] >= log_r - math.log(4.0))
    cells &= tract.membership(zc)
    if not cells.any():
        raise PreconditionViolation("region misses the tract beyond r_n / 4")

    # coarse pass for the image extent, then the real raster
    with np.errstate(all="ignore"):
        Lc = model.log_value(zc[cells])
    if not np.isfinite(Lc).all():
        raise ImageEscapesWindow("forward image leaves double range")
    x_lo, x_hi = float(Lc.real.min()), float(Lc.real.max())
    if x_hi > max_log_radius:
        raise ImageEscapesWindow(f"forward image reaches log|w| = {x_hi:.4g}")
    pad = 0.05 * (x_hi - x_lo) + 1.0
    x_lo, x_hi = x_lo - pad, x_hi + pad
    dx = (x_hi - x_lo) / n_x

    with np.errstate(all="ignore"):
        tris = _source_triangles(model, region, cells, min(dx, TWO_PI / n_phi))
    if not np.isfinite(tris).all():
        raise ImageEscapesWindow("forward image leaves double range")
    if tris.real.max() >= x_hi or tris.real.min() <= x_lo:
        x_lo = min(x_lo, float(tris.real.min()) - pad)
        x_hi = max(x_hi, float(tris.real.max()) + pad)
        dx = (x_hi - x_lo) / n_x
    grid = _scan_triangles(tris, x_lo, dx, n_x, n_phi)
    filled = _fill(grid)
    nxt = PolarRegion(x_lo, x_hi, filled)
    log_next = nxt.inner_log_radius()
    if log_next <= x_lo:
        raise PreconditionViolation("forward image does not surround the origin")
    return OuterStep(nxt, log_r, log_next)


def outer_sequence(model, tract: TractDescriptor, region: PolarRegion, steps: int,
                   **kwargs) -> list:
    """Up to ``steps`` outer-sequence steps; stops early when the image
    leaves the representable range."""
    out = []
    for _ in range(steps):
        try:
            st = outer_sequence_step(model, tract, region, **kwargs)
        except ImageEscapesWindow:
            break
        out.append(st)
        region = st.region
    return out
