"""Figure rendering for CLI reports (files only, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_beat(t, counts, path, model=None, envelope=None, title=""):
    fig, ax = plt.subplots(figsize=(6.4, 3.6))
    ax.plot(t, counts, ".", ms=2, color="tab:blue", label="counts")
    if model is not None:
        ax.plot(t, model, "-", lw=1, color="tab:red", label="beat fit")
    if envelope is not None:
        ax.plot(t, envelope, ":", lw=1, color="gray", label="envelope")
    ax.set_xlabel("arrival time (ns)")
    ax.set_ylabel("counts per bin")
    ax.set_title(title)
    ax.legend(frameon=False)
    return _save(fig, path)


def plot_depletion(lengths, remaining, path, title=""):
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.0), sharex=True)
    ax.plot(lengths, remaining, ".-", ms=3)
    ax.set_ylabel("D5/2 population")
    ax.set_title(title)
    ax2.plot(lengths[1:], -np.diff(remaining) / np.diff(lengths), "-", color="tab:green")
    ax2.set_ylabel("-dP/dt (1/ns)")
    ax2.set_xlabel("854-nm pulse length (ns)")
    return _save(fig, path)


def plot_phase_scan(phi_deg, values, path, fit=None, ylabel="", title=""):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.plot(phi_deg, values, "o", ms=4)
    if fit is not None:
        x = np.linspace(0, 360, 361)
        o, a, ph = fit
        ax.plot(x, o + a * np.cos(np.deg2rad(x) + ph), "-", lw=1)
    ax.set_xlabel("Phi_D(0) (deg)")
    ax.set_ylabel(ylabel)
    ax.set_title(title)
    return _save(fig, path)


def plot_visibility(pops, vis, sigmas, path, argmax=None, title=""):
    fig, ax = plt.subplots(figsize=(5.2, 3.6))
    ax.errorbar(pops, vis, yerr=sigmas, fmt="o", ms=4)
    if argmax is not None:
        ax.axvline(argmax, color="gray", ls=":")
    ax.set_xlabel("initial population of the second level")
    ax.set_ylabel("visibility")
    ax.set_title(title)
    return _save(fig, path)


def plot_compare(t, data, model, path, title=""):
    fig, (ax, ax2) = plt.subplots(2, 1, figsize=(6.4, 5.0), sharex=True,
                                  gridspec_kw={"height_ratios": [3, 1]})
    ax.plot(t, data, ".", ms=2, label="data")
    ax.plot(t, model, "-", lw=1, color="tab:red", label="model")
    ax.legend(frameon=False)
    ax.set_title(title)
    ax2.plot(t, data - model, ".", ms=2, color="k")
    ax2.set_xlabel("t (ns)")
    ax2.set_ylabel("residual")
    return _save(fig, path)
