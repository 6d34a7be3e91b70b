"""Seeded multi-trial experiments and scaling studies.

Trial ``t`` uses seed stream ``t``: the ground truth is drawn from
substream ``(0,)`` and the data for the ``j``-th sample size from
``(1, n_j)``. A row of the output CSV can therefore be reproduced from the
root seed and the trial index alone (see :func:`run_trial`).
"""
import csv
import io
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..data import Seed, sample_model
from ..errors import InvalidInput, KronMLEError
from ..likelihood import f_alpha_value
from ..manifold import KronPoint, geodesic_distance
from ..metrics import factor_errors
from ..solvers import SolverConfig, fit
from .generators import GeneratorSpec, generate
from .plots import line_with_band, quantile_band


@dataclass(frozen=True)
class ExperimentSpec:
    """One sweep of solver settings over trials and sample sizes.

    ``sweep_kind`` is ``"alpha"`` (ShrinkFlop weights; 0 means plain
    flip-flop) or ``"delta"`` (stopping thresholds at fixed ``alpha``).
    """

    generator: GeneratorSpec
    n_list: tuple
    trials: int
    seed: int
    sweep_kind: str = "alpha"
    sweep: tuple = (0.0,)
    delta: float = 1e-8
    alpha: float = 0.0
    max_iters: int | None = None
    csv_path: str | None = None
    svg_path: str | None = None
    record_runtime: bool = False
    jobs: int = 1

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidInput("trials must be at least 1")
        if not self.n_list or any(int(n) < 1 for n in self.n_list):
            raise InvalidInput("n_list must be a non-empty list of positive counts")
        if self.sweep_kind not in ("alpha", "delta"):
            raise InvalidInput("sweep_kind must be 'alpha' or 'delta'")
        if not self.sweep:
            raise InvalidInput("sweep must contain at least one value")
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "sweep", tuple(float(v) for v in self.sweep))
        for v in self.sweep:
            # validates each sweep point up front
            self.solver_config(v)

    def solver_config(self, value):
        if self.sweep_kind == "alpha":
            return SolverConfig(delta=self.delta, max_iters=self.max_iters, alpha=value)
        return SolverConfig(delta=value, max_iters=self.max_iters, alpha=self.alpha)


def columns(k):
    return (
        ["trial", "n", "alpha_or_delta", "seed", "iterations", "termination", "f_final"]
        + [f"df_{a + 1}" for a in range(k)]
        + [f"dop_{a + 1}" for a in range(k)]
        + ["df_full", "geodesic", "geodesic_sq_ratio", "normalized_frob_sq", "runtime_ms"]
    )


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else "nan"
    return str(v)


def normalized_frob_sq(est_factor, true_factor):
    """Squared Frobenius error of factor 1 after matching its trace to the truth, over ``||truth||_F^2``."""
    scaled = est_factor * (np.trace(true_factor) / np.trace(est_factor))
    return float(np.sum((scaled - true_factor) ** 2) / np.sum(true_factor**2))


def run_trial(spec, trial):
    """All CSV rows (as dicts) for one trial index."""
    seed = Seed(spec.seed, trial)
    truth = generate(spec.generator, seed.child(0))
    identity = KronPoint.identity(truth.dims)
    d_truth = geodesic_distance(identity, truth)
    rows = []
    for n in spec.n_list:
        x = sample_model(truth, n, seed.child(1, n))
        for value in spec.sweep:
            cfg = spec.solver_config(value)
            t0 = time.perf_counter()
            est = fit(x, cfg)
            elapsed = (time.perf_counter() - t0) * 1e3
            rep = factor_errors(est.point, truth)
            geo = rep.geodesic
            row = {
                "trial": trial,
                "n": n,
                "alpha_or_delta": value,
                "seed": spec.seed,
                "iterations": est.report.iterations,
                "termination": est.report.termination.value,
                "f_final": f_alpha_value(x, est.point, cfg.alpha),
            }
            for a, v in enumerate(rep.factor_frob):
                row[f"df_{a + 1}"] = v
            for a, v in enumerate(rep.factor_op):
                row[f"dop_{a + 1}"] = v
            row["df_full"] = rep.frob
            row["geodesic"] = geo
            row["geodesic_sq_ratio"] = geo**2 / d_truth**2 if d_truth > 0 else float("nan")
            row["normalized_frob_sq"] = normalized_frob_sq(est.point.factors[0].array, truth.factors[0].array)
            row["runtime_ms"] = round(elapsed, 3) if spec.record_runtime else ""
            rows.append(row)
    return rows


def _safe_trial(args):
    spec, trial = args
    try:
        return run_trial(spec, trial)
    except KronMLEError as exc:
        # a failed trial is recorded, never aborts the sweep
        k = len(spec.generator.dims)
        out = []
        for n in spec.n_list:
            for value in spec.sweep:
                row = dict.fromkeys(columns(k), float("nan"))
                row.update(trial=trial, n=n, alpha_or_delta=value, seed=spec.seed,
                           iterations=0, termination=f"Error:{type(exc).__name__}", runtime_ms="")
                out.append(row)
        return out


def run_rows(spec):
    tasks = [(spec, t) for t in range(spec.trials)]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            per_trial = list(pool.map(_safe_trial, tasks))
    else:
        per_trial = [_safe_trial(t) for t in tasks]
    return [row for rows in per_trial for row in rows]


def rows_to_csv(rows, k):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = columns(k)
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def run_experiment(spec):
    """Run every (trial, n, sweep point) and write the CSV (and SVG if requested).

    Returns the CSV text.
    """
    rows = run_rows(spec)
    text = rows_to_csv(rows, len(spec.generator.dims))
    if spec.csv_path:
        _ensure_parent(spec.csv_path)
        with open(spec.csv_path, "w", newline="") as fh:
            fh.write(text)
    if spec.svg_path:
        _ensure_parent(spec.svg_path)
        plot_experiment(rows, spec, spec.svg_path)
    return text


def _ensure_parent(path):
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)


def summarize(rows, metric, by=("n", "alpha_or_delta")):
    """``{(n, value): (q25, median, q75)}`` of ``metric`` over trials."""
    groups = {}
    for r in rows:
        groups.setdefault(tuple(r[b] for b in by), []).append(float(r[metric]))
    return {key: quantile_band(vals) for key, vals in sorted(groups.items())}


def plot_experiment(rows, spec, path, metric="normalized_frob_sq"):
    stats = summarize(rows, metric)
    series = {}
    for n in spec.n_list:
        xs = [v for v in spec.sweep]
        band = [stats[(n, v)] for v in xs]
        series[f"n={n}"] = (xs, [b[0] for b in band], [b[1] for b in band], [b[2] for b in band])
    line_with_band(series, path, xlabel=spec.sweep_kind, ylabel=metric.replace("_", " "),
                   logx=spec.sweep_kind == "delta")


@dataclass
class ScalingResult:
    n_list: tuple
    median_geodesic: list
    q25: list
    q75: list
    median_df_full: list
    converged: list
    slope: float
    errors: dict = field(default_factory=dict)

    def ratio(self, n_small, n_large):
        i, j = self.n_list.index(n_small), self.n_list.index(n_large)
        return self.median_geodesic[i] / self.median_geodesic[j]

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "trials", "converged", "median_geodesic", "q25_geodesic",
                    "q75_geodesic", "median_df_full", "loglog_slope"])
        for i, n in enumerate(self.n_list):
            w.writerow([n, len(self.errors[n]), self.converged[i], _fmt(self.median_geodesic[i]),
                        _fmt(self.q25[i]), _fmt(self.q75[i]), _fmt(self.median_df_full[i]), _fmt(self.slope)])
        return buf.getvalue()


def loglog_slope(n_list, values):
    return float(np.polyfit(np.log(np.asarray(n_list, float)), np.log(np.asarray(values, float)), 1)[0])


def scaling_study(generator, n_list, trials, seed, delta=1e-8, max_iters=None,
                  csv_path=None, svg_path=None, jobs=1):
    """Median geodesic error of the flip-flop MLE versus sample size, with a log-log slope fit."""
    n_list = tuple(int(n) for n in n_list)
    if not n_list:
        raise InvalidInput("n_list must not be empty")
    if list(n_list) != sorted(n_list):
        raise InvalidInput("n_list must be ascending")
    spec = ExperimentSpec(generator=generator, n_list=n_list, trials=trials, seed=seed,
                          sweep_kind="delta", sweep=(delta,), max_iters=max_iters, jobs=jobs)
    rows = run_rows(spec)
    geo = {n: [] for n in n_list}
    dfs = {n: [] for n in n_list}
    conv = {n: 0 for n in n_list}
    for r in rows:
        geo[r["n"]].append(float(r["geodesic"]))
        dfs[r["n"]].append(float(r["df_full"]))
        conv[r["n"]] += r["termination"] == "Converged"
    bands = [quantile_band(geo[n]) for n in n_list]
    med = [b[1] for b in bands]
    res = ScalingResult(
        n_list=n_list,
        median_geodesic=med,
        q25=[b[0] for b in bands],
        q75=[b[2] for b in bands],
        median_df_full=[quantile_band(dfs[n])[1] for n in n_list],
        converged=[conv[n] for n in n_list],
        slope=loglog_slope(n_list, med) if len(n_list) > 1 else float("nan"),
        errors=geo,
    )
    if csv_path:
        _ensure_parent(csv_path)
        with open(csv_path, "w", newline="") as fh:
            fh.write(res.to_csv())
    if svg_path:
        _ensure_parent(svg_path)
        fit = None
        if len(n_list) > 1:
            c = np.polyfit(np.log(n_list), np.log(med), 1)
            fit = (list(n_list), list(np.exp(np.polyval(c, np.log(n_list)))), f"slope {res.slope:.3f}")
        line_with_band({"median geodesic error": (list(n_list), res.q25, med, res.q75)}, svg_path,
                       xlabel="n", ylabel="geodesic error", logx=True, logy=True, fit=fit)
    return res
