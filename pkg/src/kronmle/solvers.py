"""Flip-flop and shrinkage flip-flop solvers for the tensor normal MLE.

Both solvers start at the identity and, at every iteration, whiten the
data by the current factors, compute the gradient block of every mode
from the one-mode marginals, and update the factor whose block has the
largest Frobenius norm by exact minimization over that factor. The
iteration stops once that largest block norm is at most ``delta``.

For ``k = 2`` with ``skip_first_stop_check=True`` this reproduces the
classical matrix flip-flop, which alternates between the two factors.
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .data import mode_multiply, partial_trace_one, trace_rho
from .errors import DegenerateInput, InvalidInput, SingularMarginal
from .likelihood import gradient
from .manifold import KronPoint, balance, traceless


class Termination(str, enum.Enum):
    CONVERGED = "Converged"
    MAX_ITERS = "MaxItersReached"
    SINGULAR = "SingularMarginal"


def default_max_iters(dims):
    k = len(dims)
    return 50 * (k * k * max(dims) + 64)


@dataclass(frozen=True)
class SolverConfig:
    delta: float = 1e-8
    max_iters: int | None = None
    alpha: float = 0.0
    skip_first_stop_check: bool = False
    singular_tolerance: float = 1e-10

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInput("delta must be positive")
        if self.max_iters is not None and self.max_iters < 1:
            raise InvalidInput("max_iters must be at least 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInput("alpha must lie in [0, 1]")


@dataclass(frozen=True)
class IterationRecord:
    f: float
    grad_norm: float
    mode: int
    trace_rho: float


@dataclass
class SolverReport:
    records: list = field(default_factory=list)
    termination: Termination = Termination.MAX_ITERS

    @property
    def iterations(self):
        return len(self.records)

    @property
    def f_values(self):
        return [r.f for r in self.records]

    @property
    def modes(self):
        return [r.mode for r in self.records]

    @property
    def grad_norms(self):
        return [r.grad_norm for r in self.records]


@dataclass
class Estimate:
    point: KronPoint
    report: SolverReport

    @property
    def converged(self):
        return self.report.termination is Termination.CONVERGED

    def summary(self):
        last = self.report.records[-1] if self.report.records else None
        return {
            "dims": list(self.point.dims.dims),
            "termination": self.report.termination.value,
            "iterations": self.report.iterations,
            "f_final": last.f if last else None,
            "grad_norm_final": last.grad_norm if last else None,
            "point": self.point.to_json(),
        }


def _inv_sqrt(m):
    w, q = np.linalg.eigh(m)
    return (q / np.sqrt(w)) @ q.T


def _sqrt(m):
    w, q = np.linalg.eigh(m)
    return (q * np.sqrt(w)) @ q.T


def _logdet(m):
    return float(np.sum(np.log(np.linalg.eigvalsh(m))))


def _whiten_arrays(x, factors):
    for a, f in enumerate(factors):
        x = mode_multiply(x, a, _sqrt(f))
    return x


def _run(x, cfg, alpha):
    dims = x.dims
    k, D = dims.k, dims.D
    max_iters = cfg.max_iters or default_max_iters(dims.dims)
    factors = [np.eye(d) for d in dims]
    report = SolverReport()
    c = alpha * trace_rho(x) / D  # alpha ||x||^2 / (n D^2)

    for t in range(1, max_iters + 1):
        y = _whiten_arrays(x, factors)
        tr = trace_rho(y)
        margs = [partial_trace_one(y, a) for a in range(k)]
        traces = [float(np.trace(f)) for f in factors]
        logdet = sum(D / d * _logdet(f) for f, d in zip(factors, dims))
        if alpha == 0.0:
            fval = tr - logdet / D
            g0 = tr - 1.0
            blocks = [np.sqrt(d) * traceless(r) for r, d in zip(margs, dims)]
        else:
            fval = (1 - alpha) * tr + c * math.prod(traces) - logdet / D
            g0 = (1 - alpha) * tr + c * math.prod(traces) - 1.0
            blocks = []
            for a, (r, f, d) in enumerate(zip(margs, factors, dims)):
                others = math.prod(traces[:a] + traces[a + 1:])
                blocks.append(np.sqrt(d) * ((1 - alpha) * traceless(r) + c * others * traceless(f)))
        norms = [float(np.linalg.norm(b)) for b in blocks]
        a = int(np.argmax(norms))
        report.records.append(IterationRecord(fval, norms[a], a, tr))

        # the scalar block vanishes after any update; it only matters at t = 1
        if max(norms[a], abs(g0)) <= cfg.delta and not (t == 1 and cfg.skip_first_stop_check):
            report.termination = Termination.CONVERGED
            break

        d = dims[a]
        fa = factors[a]
        if alpha == 0.0:
            w = np.linalg.eigvalsh(margs[a])
            if w[-1] <= 0 or w[0] <= cfg.singular_tolerance * w[-1]:
                report.termination = Termination.SINGULAR
                break
            r = _sqrt(fa)
            new = r @ np.linalg.inv(margs[a]) @ r / d
        else:
            ri = _inv_sqrt(fa)
            others = math.prod(traces[:a] + traces[a + 1:])
            m = (1 - alpha) * ri @ margs[a] @ ri + c * others * np.eye(d)
            new = np.linalg.inv((m + m.T) / 2) / d
        factors[a] = (new + new.T) / 2
    else:
        report.termination = Termination.MAX_ITERS

    return Estimate(balance(factors), report)


def flip_flop(x, cfg=None):
    """Flip-flop iteration for the tensor normal MLE.

    Returns an :class:`Estimate`. A numerically singular marginal ends the
    run with ``Termination.SINGULAR`` (the MLE may not exist); the point
    reported is the last iterate.
    """
    cfg = cfg or SolverConfig()
    if cfg.alpha != 0.0:
        raise InvalidInput("flip_flop requires alpha = 0; use shrink_flop")
    if x.k < 1:
        raise InvalidInput("need at least one mode")
    return _run(x, cfg, 0.0)


def shrink_flop(x, cfg):
    """Flip-flop applied to the shrunk second moment ``(1-alpha) rho + alpha (tr rho/D) I``."""
    if not 0.0 < cfg.alpha <= 1.0:
        raise InvalidInput("shrink_flop requires alpha in (0, 1]")
    if trace_rho(x) == 0.0:
        raise DegenerateInput("data is identically zero")
    return _run(x, cfg, cfg.alpha)


def fit(x, cfg=None):
    """Dispatch to :func:`flip_flop` or :func:`shrink_flop` on ``cfg.alpha``."""
    cfg = cfg or SolverConfig()
    return shrink_flop(x, cfg) if cfg.alpha > 0 else flip_flop(x, cfg)


def one_step_renormalize(x, mode):
    """Renormalize mode ``mode`` so that its marginal becomes ``I / d``.

    Each sample's mode flattening is multiplied by ``(d rho^(mode))^{-1/2}``;
    afterwards ``||y||^2 = nD``.
    """
    r = partial_trace_one(x, mode)
    d = x.dims[mode]
    w = np.linalg.eigvalsh(r)
    if w[-1] <= 0 or w[0] <= 1e-12 * w[-1]:
        raise SingularMarginal(f"mode-{mode} marginal is singular")
    return mode_multiply(x, mode, _inv_sqrt(d * r))


def max_gradient_block(x, theta, alpha=0.0):
    """``max_a ||grad_a f^alpha||_F`` at ``theta``, recomputed from scratch."""
    g = gradient(x, theta, alpha)
    return max(float(np.linalg.norm(b)) for b in g.blocks)
