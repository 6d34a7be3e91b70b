"""Static figures for experiment and scaling outputs.

Figures are plain line charts (median with an interquartile band) written
with the Agg backend. SVG output is made reproducible by fixing the hash
salt and dropping the date metadata.
"""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {
    "svg.hashsalt": "kronmle",
    "font.size": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
}


def _save(fig, path):
    fmt = str(path).rsplit(".", 1)[-1].lower()
    meta = {"Date": None} if fmt == "svg" else None
    fig.savefig(path, format=fmt, metadata=meta, bbox_inches="tight")
    plt.close(fig)


def quantile_band(values):
    v = np.asarray(values, dtype=float)
    v = v[np.isfinite(v)]
    if v.size == 0:
        return np.nan, np.nan, np.nan
    q25, med, q75 = np.percentile(v, [25, 50, 75])
    return q25, med, q75


def line_with_band(series, path, xlabel, ylabel, title=None, logx=False, logy=False, fit=None):
    """Plot ``{label: (x, q25, median, q75)}`` series to ``path``.

    ``fit`` is an optional ``(x, y, label)`` overlay drawn dashed.
    """
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5.5, 3.6))
        for label, (x, lo, med, hi) in series.items():
            line, = ax.plot(x, med, marker="o", ms=3, lw=1.4, label=label)
            ax.fill_between(x, lo, hi, color=line.get_color(), alpha=0.2, lw=0)
        if fit is not None:
            fx, fy, flabel = fit
            ax.plot(fx, fy, ls="--", color="0.3", lw=1, label=flabel)
        if logx:
            ax.set_xscale("log")
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(xlabel)
        ax.set_ylabel(ylabel)
        if title:
            ax.set_title(title)
        if len(series) > 1 or fit is not None:
            ax.legend(frameon=False, fontsize=8)
        _save(fig, path)
