"""Figure rendering for tabular CLI output (matplotlib, file backend only)."""

from __future__ import annotations

from typing import Sequence


def plot_compare(rows: Sequence[dict], path: str) -> None:
    """Seller profit against the discount factor, baseline versus commitment."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    d = [r["delta"] for r in rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(d, [r["baseline_profit"] for r in rows], label="sequential worst case")
    ax.plot(d, [r["commitment_profit"] for r in rows], "--", label="nature commits")
    ax.set_xlabel("discount factor")
    ax.set_ylabel("seller profit")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
