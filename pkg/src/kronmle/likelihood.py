"""Negative log-likelihood of the tensor normal model and its derivatives.

With ``rho = (1/nD) sum_i x_i x_i^T`` the objective is

    f_x(Theta) = tr(rho Theta) - (1/D) log det Theta

and the shrunk variant replaces ``rho`` by ``(1 - alpha) rho + alpha (tr rho / D) I``.
Derivatives at a general point are derivatives at the identity for the
whitened data ``Theta^{1/2} x``, so everything reduces to one- and two-mode
marginals of whitened data.
"""
from dataclasses import dataclass

import numpy as np

from .cpmap import CPMap
from .data import partial_trace_one, trace_rho, whiten
from .errors import InvalidInput, NumericalFailure
from .manifold import TangentVec, tangent_dim, traceless


@dataclass(frozen=True)
class ObjectiveConfig:
    alpha: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInput(f"alpha must lie in [0, 1], got {self.alpha}")


def _alpha(cfg):
    if cfg is None:
        return 0.0
    if isinstance(cfg, ObjectiveConfig):
        return cfg.alpha
    return ObjectiveConfig(float(cfg)).alpha


def _check(x, theta):
    if x.dims != theta.dims:
        raise InvalidInput(f"dataset dims {x.dims.dims} do not match point {theta.dims.dims}")


def f_value(x, theta):
    _check(x, theta)
    return trace_rho(whiten(x, theta)) - theta.logdet() / x.dims.D


def f_alpha_value(x, theta, cfg=None):
    alpha = _alpha(cfg)
    if alpha == 0.0:
        return f_value(x, theta)
    _check(x, theta)
    D = x.dims.D
    return (
        (1 - alpha) * trace_rho(whiten(x, theta))
        + alpha * trace_rho(x) / D * theta.trace()
        - theta.logdet() / D
    )


def gradient_from_marginals(marginals, tr, dims):
    """Gradient blocks at the identity from one-mode marginals ``rho^(a)`` and ``tr rho``."""
    blocks = [np.sqrt(d) * (r - tr / d * np.eye(d)) for r, d in zip(marginals, dims)]
    return TangentVec(tr - 1.0, blocks, check=False)


def gradient(x, theta, cfg=None):
    """Riemannian gradient of ``f_x^alpha`` at ``theta`` (``alpha = 0`` gives ``f_x``)."""
    _check(x, theta)
    alpha = _alpha(cfg)
    y = whiten(x, theta)
    tr = trace_rho(y)
    margs = [partial_trace_one(y, a) for a in range(x.k)]
    if alpha == 0.0:
        return gradient_from_marginals(margs, tr, x.dims)
    D = x.dims.D
    c = alpha * trace_rho(x) / D
    traces = [np.trace(f.array) for f in theta.factors]
    blocks = []
    for a, (r, f, d) in enumerate(zip(margs, theta.factors, x.dims)):
        others = float(np.prod([t for b, t in enumerate(traces) if b != a]))
        g = (1 - alpha) * traceless(r) + c * traceless(f.array) * others
        blocks.append(np.sqrt(d) * g)
    h0 = (1 - alpha) * tr + c * float(np.prod(traces)) - 1.0
    return TangentVec(h0, blocks, check=False)


def _proj(m):
    return traceless((m + m.T) / 2)


def hessian_apply(x, theta, h):
    """Hessian of ``f_x`` at ``theta`` applied to ``h`` (``alpha = 0`` only)."""
    _check(x, theta)
    if h.dims != x.dims.dims:
        raise InvalidInput("tangent vector dims do not match the dataset")
    y = whiten(x, theta)
    return _hessian_whitened(y, h)


def _hessian_whitened(y, h, margs=None, maps=None):
    k = y.k
    dims = y.dims
    tr = trace_rho(y)
    if margs is None:
        margs = [partial_trace_one(y, a) for a in range(k)]
    out0 = tr * h.h0
    blocks = []
    for a in range(k):
        da = dims[a]
        r = margs[a]
        g0a = np.sqrt(da) * traceless(r)
        out0 += float(np.vdot(g0a, h.blocks[a]))
        blk = da * _proj(r @ h.blocks[a]) + h.h0 * g0a
        for b in range(k):
            if b == a:
                continue
            phi = maps[(a, b)] if maps is not None else CPMap.from_dataset(y, a, b)
            blk = blk + np.sqrt(da * dims[b]) * _proj(phi(h.blocks[b]))
        blocks.append(blk)
    return TangentVec(out0, blocks, check=False)


def hessian_quadratic(x, theta, h):
    return float(np.dot(h.to_vector(), hessian_apply(x, theta, h).to_vector()))


class _HessianOperator:
    # caches whitened marginals and CP maps so repeated products stay cheap
    def __init__(self, x, theta):
        _check(x, theta)
        self.y = whiten(x, theta)
        k = x.k
        self.dims = x.dims.dims
        self.margs = [partial_trace_one(self.y, a) for a in range(k)]
        self.maps = {(a, b): CPMap.from_dataset(self.y, a, b) for a in range(k) for b in range(k) if a != b}
        self.tr = trace_rho(self.y)

    def __call__(self, v):
        h = TangentVec.from_vector(v, self.dims)
        return _hessian_whitened(self.y, h, self.margs, self.maps).to_vector()

    def upper_bound(self):
        # tr rho L^2 <= tr rho ||L||_op^2 <= tr rho (1 + sum d_a) ||H||^2
        return self.tr * (1 + sum(self.dims))


def hessian_matrix(x, theta):
    """Dense Hessian in the orthonormal tangent coordinates of :meth:`TangentVec.to_vector`."""
    op = _HessianOperator(x, theta)
    n = tangent_dim(op.dims)
    cols = [op(e) for e in np.eye(n)]
    m = np.array(cols).T
    return (m + m.T) / 2


def hessian_min_eig(x, theta, tol=1e-8, max_iter=200000, seed=0):
    """Smallest eigenvalue of the Hessian on the tangent space.

    Power iteration on ``c I - Hess`` with ``c`` an a-priori upper bound on
    the Hessian's spectrum; stops when the eigen-residual falls below
    ``tol * c``.
    """
    op = _HessianOperator(x, theta)
    n = tangent_dim(op.dims)
    c = op.upper_bound()
    if c == 0.0:
        return 0.0
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        hv = op(v)
        w = c * v - hv
        mu = float(np.dot(v, w))
        res = np.linalg.norm(w - mu * v)
        if res <= tol * c:
            return c - mu
        v = w / np.linalg.norm(w)
    raise NumericalFailure(f"hessian_min_eig did not converge in {max_iter} iterations")
