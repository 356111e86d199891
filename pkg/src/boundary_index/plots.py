"""Optional SVG diagnostics (requires matplotlib)."""

import numpy as np


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "boundary-index"
    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})


def plot_singular_values(table, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for row in table:
        s = np.asarray(row["sv_alpha"])
        ax.semilogy(np.arange(s.size), np.maximum(s, 1e-18),
                    label=f"N={row['target']}")
    ax.set_xlabel("k")
    ax.set_ylabel("singular value")
    ax.legend()
    _save(fig, path)
    plt.close(fig)


def plot_symbol_field(nodes, path):
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6, 4))
    for xi in (1, -1):
        pts = [(n["node"]["point"], n["disagreement"]) for n in nodes
               if n["node"]["xi"] == xi]
        if pts:
            x, y = zip(*pts)
            ax.semilogy(x, np.maximum(y, 1e-18), "o-", ms=3,
                        label=f"xi' = {xi:+d}")
    ax.set_xlabel("boundary point")
    ax.set_ylabel("route disagreement")
    ax.legend()
    _save(fig, path)
    plt.close(fig)
