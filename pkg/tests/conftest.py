"""Shared random instances and brute-force oracles.

The oracles here deliberately avoid the package's flattening code: they
materialize ``D x D`` matrices and use the defining identities directly.
"""
from functools import reduce

import numpy as np
import pytest

from kronmle.data import Dataset
from kronmle.manifold import TangentVec, balance


def random_pd(rng, d, cond=10.0):
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    w = np.exp(rng.uniform(0, np.log(cond), d))
    return (q * w) @ q.T


def random_sym(rng, d, scale=1.0):
    m = rng.standard_normal((d, d)) * scale
    return (m + m.T) / 2


def random_traceless(rng, d):
    m = random_sym(rng, d)
    return m - np.trace(m) / d * np.eye(d)


def random_point(rng, dims, cond=10.0):
    return balance([random_pd(rng, d, cond) for d in dims])


def random_tangent(rng, dims, unit=False):
    h = TangentVec(rng.standard_normal(), [random_traceless(rng, d) for d in dims])
    if unit:
        h = (1.0 / h.norm()) * h
    return h


def random_dataset(rng, dims, n):
    return Dataset(dims, rng.standard_normal((n, int(np.prod(dims)))))


def kron_all(mats):
    return reduce(np.kron, mats)


def lift(m, a, dims):
    """``I (x) ... (x) m (x) ... (x) I`` with ``m`` in slot ``a``."""
    return kron_all([m if b == a else np.eye(d) for b, d in enumerate(dims)])


def rho_full(x):
    return x.data.T @ x.data / (x.n * x.dims.D)


def sqrtm_pd(m):
    w, q = np.linalg.eigh(m)
    return (q * np.sqrt(w)) @ q.T


def logm_pd(m):
    w, q = np.linalg.eigh((m + m.T) / 2)
    return (q * np.log(w)) @ q.T


def partial_trace_oracle(rho, a, dims):
    """``rho^(a)`` from the duality ``tr rho^(a) H = tr rho H_(a)`` entry by entry."""
    d = dims[a]
    out = np.zeros((d, d))
    for i in range(d):
        for j in range(d):
            e = np.zeros((d, d))
            e[j, i] = 1.0
            out[i, j] = np.trace(rho @ lift(e, a, dims))
    return out


def materialized_f(x, theta_full):
    D = x.dims.D
    _, logdet = np.linalg.slogdet(theta_full)
    return float(np.trace(rho_full(x) @ theta_full) - logdet / D)


def rel_err(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


def replay_iterates(x, cfg, solver):
    """Points after each update, recovered by rerunning with ``max_iters = 1, 2, ...``.

    The solvers are deterministic, so the truncated runs share a prefix with
    the full run; this checks the trajectory without instrumenting the loop.
    """
    from dataclasses import replace

    full = solver(x, cfg)
    pts = []
    for t in range(1, full.report.iterations):
        pts.append(solver(x, replace(cfg, max_iters=t)).point)
    return full, pts
