"""Matplotlib figures written next to the delimited outputs."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_render(result, path):
    win = result.spec.window
    fig, ax = plt.subplots(figsize=(4.5, 4.5 * win.height / win.width + 0.4))
    ax.imshow(result.rgb, extent=(win.re_min, win.re_max, win.im_min, win.im_max),
              interpolation="nearest")
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(result.spec.model, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def plot_profile(profile, path):
    r = profile.radii
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(8, 3.4))
    ax1.loglog(r, np.maximum(profile.B, 1e-300), lw=1.2)
    ax1.set_xlabel("r")
    ax1.set_ylabel("B(r)")
    a = profile.a
    ok = np.isfinite(a) & (a > 0)
    ax2.loglog(r[ok], a[ok], lw=1.2, color="C1")
    flagged = np.array([s.exceptional for s in profile.samples])
    if flagged.any():
        sel = flagged & ok
        ax2.plot(r[sel], a[sel], "x", color="C3", ms=4, label="exceptional")
        ax2.legend(fontsize=8)
    ax2.set_xlabel("r")
    ax2.set_ylabel("a(r)")
    fig.suptitle(profile.tract.model.label, fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def plot_sweep(entries, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    rs = [e.r for e in entries if e.report is not None]
    for key, label in (("rel_err_value", "value"), ("rel_err_modulus", "modulus"),
                       ("rel_err_derivative", "derivative")):
        vals = [max(getattr(e.report, key), 1e-300) for e in entries if e.report is not None]
        ax.loglog(rs, vals, ".-", lw=1, label=label)
    bad = [e.r for e in entries if e.flagged]
    for r in bad:
        ax.axvline(r, color="C3", alpha=0.2, lw=2)
    ax.set_xlabel("r")
    ax.set_ylabel("relative error")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)


def plot_tract(tract, path, curves=()):
    win = tract.window
    fig, ax = plt.subplots(figsize=(4.5, 4.5 * (win.im_max - win.im_min) / (win.re_max - win.re_min) + 0.4))
    labels = tract.raster.labels
    show = np.where(labels == tract.label, 2, np.where(labels > 0, 1, 0))
    ax.imshow(show, extent=(win.re_min, win.re_max, win.im_min, win.im_max), cmap="Greys",
              vmin=0, vmax=2, interpolation="nearest")
    for c in curves:
        ax.plot(c.real, c.imag, color="C3", lw=0.8)
    for p in tract.poles_inside:
        ax.plot(p.real, p.imag, "o", color="C1", ms=3)
    ax.set_xlabel("Re z")
    ax.set_ylabel("Im z")
    ax.set_title(f"{tract.model.label}, R = {tract.R:g}", fontsize=9)
    fig.tight_layout()
    return _save(fig, path)


def plot_outer(steps, path):
    fig, ax = plt.subplots(figsize=(5, 3.4))
    n = np.arange(len(steps) + 1)
    logs = [steps[0].log_r] + [s.log_r_next for s in steps] if steps else []
    if logs:
        ax.semilogy(n, np.maximum(logs, 1e-300), "o-")
    ax.set_xlabel("n")
    ax.set_ylabel("log r_n")
    fig.tight_layout()
    return _save(fig, path)


def plot_ode_fit(profile, fit, path):
    r = profile.radii
    a = profile.a
    ok = np.isfinite(a) & (a > 0)
    fig, ax = plt.subplots(figsize=(5, 3.4))
    ax.loglog(r[ok], a[ok], lw=1.2, label="a(r)")
    r0 = fit.r_range[0]
    a0 = float(np.interp(math.log(r0), np.log(r[ok]), a[ok]))
    rr = np.array(fit.r_range)
    ax.loglog(rr, a0 * (rr / r0) ** float(fit.kappa), "--", label=f"slope {fit.kappa}")
    ax.set_xlabel("r")
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, path)
