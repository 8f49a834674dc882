"""Optional PNG rendering of figure data next to the CSV output."""

from __future__ import annotations

from pathlib import Path

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _curves(data, label):
    key = data.column(label)
    for v in dict.fromkeys(key):
        sel = key == v
        yield v, data.column("tau")[sel], data.column("exact_re")[sel], data.column("qrt_re")[sel]


def render(data, path):
    """Solid exact curves with dotted QRT counterparts (log decay for fig2)."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    if data.name == "fig2":
        t = data.column("t")
        pos = t > 0
        for name in data.header:
            if name.startswith("P_Phi_b"):
                ax.loglog(t[pos], data.column(name)[pos], label=f"b = {name[7:]}")
        ax.loglog(t[pos], data.column("markov")[pos], "k:", label="exponential")
        ax.set_ylim(1e-4, 1.5)
        ax.set_xlabel(r"$\gamma t$")
        ax.set_ylabel(r"$P_\Phi(t)$")
    else:
        label = data.header[0]
        for v, tau, exact, qrt in _curves(data, label):
            (line,) = ax.plot(tau, exact, label=f"{label} = {v:g}")
            ax.plot(tau, qrt, ":", color=line.get_color())
        ax.set_xlabel(r"$\gamma \tau$")
        if data.name == "fig1":
            ax.set_ylabel(r"$C'_{XY}(t,\tau)$")
        else:
            ax.set_xscale("log")
            ax.set_xlim(np.min(data.column("tau")[data.column("tau") > 0]), None)
            ax.set_ylabel(r"$C_{\uparrow\downarrow}(\infty,\tau)/C_{\uparrow\downarrow}(\infty,0)$")
    ax.legend(frameon=False, fontsize=8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
