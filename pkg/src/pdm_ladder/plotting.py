"""Self-contained SVG line plots.

Figures are drawn with matplotlib's object API (no pyplot state, so it is
safe to call from worker threads) and saved with a fixed hash salt and no
date stamp, which makes reruns byte-identical.
"""
from __future__ import annotations

import io

import matplotlib

matplotlib.use("Agg")
from matplotlib.backends.backend_svg import FigureCanvasSVG  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

__all__ = ["line_plot_svg", "fmt_lambda"]

_RC = {"svg.hashsalt": "pdm-ladder", "svg.fonttype": "none", "path.simplify": False}

# colours for real / imaginary parts and for sweep overlays
REAL = "tab:blue"
IMAG = "tab:red"


def fmt_lambda(lam) -> str:
    return f"{float(lam):.12g}"


def line_plot_svg(series, title, xlabel="x", ylabel="", size=(7.0, 4.2)) -> str:
    """Render line series to an SVG document.

    Parameters
    ----------
    series : iterable of dict
        Each item has ``x``, ``y``, ``label`` and optionally ``color`` and
        ``style`` (a matplotlib line style such as ``"-"`` or ``"--"``).
    title : str
        Figure title; callers put the lambda value here.
    """
    with matplotlib.rc_context(_RC):
        fig = Figure(figsize=size)
        FigureCanvasSVG(fig)
        ax = fig.add_subplot(1, 1, 1)
        for s in series:
            ax.plot(s["x"], s["y"], s.get("style", "-"), color=s.get("color"),
                    label=s["label"], linewidth=1.2)
        ax.axhline(0.0, color="0.6", linewidth=0.6)
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        ax.legend(loc="best", fontsize="small")
        fig.tight_layout()
        buf = io.StringIO()
        fig.savefig(buf, format="svg", metadata={"Date": None, "Creator": None})
    return buf.getvalue()
