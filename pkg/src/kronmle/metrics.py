"""Congruence-invariant error measures between precision matrices.

All of them depend on ``A`` and ``B`` only through the eigenvalues of
``B^{-1/2} A B^{-1/2}``. For Kronecker-structured points those eigenvalues
are products of per-factor eigenvalues, which is what makes every
full-matrix quantity computable without forming a ``D x D`` matrix.
"""
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInput
from .manifold import KronPoint, balance, geodesic_distance
from .specmat import as_pd


def relative_eigenvalues(a, b):
    """Eigenvalues (ascending) of ``B^{-1/2} A B^{-1/2}``."""
    a, b = as_pd(a), as_pd(b)
    if a.dim != b.dim:
        raise InvalidInput(f"dimension mismatch: {a.dim} vs {b.dim}")
    r = b.spectral(lambda w: 1.0 / np.sqrt(w))
    m = r @ a.array @ r
    return np.linalg.eigvalsh((m + m.T) / 2)


def rel_frob(a, b):
    """Relative Frobenius error ``||I - B^{-1/2} A B^{-1/2}||_F``."""
    mu = relative_eigenvalues(a, b)
    return float(np.linalg.norm(1.0 - mu))


def rel_op(a, b):
    """Relative spectral error ``||I - B^{-1/2} A B^{-1/2}||_op``."""
    mu = relative_eigenvalues(a, b)
    return float(np.max(np.abs(1.0 - mu)))


def _as_point(p):
    if not isinstance(p, KronPoint):
        raise InvalidInput("expected a KronPoint")
    return p if p.balanced else balance(p.factors)


def _factor_relative(est, truth):
    if est.dims != truth.dims:
        raise InvalidInput(f"dimension mismatch: {est.dims.dims} vs {truth.dims.dims}")
    return [relative_eigenvalues(e, t) for e, t in zip(est.factors, truth.factors)]


def full_rel_frob(est, truth):
    """``D_F`` of the full Kronecker products from the per-factor relative matrices.

    Uses ``||I - (x)M_a||_F^2 = D - 2 prod tr M_a + prod ||M_a||_F^2``.
    """
    mus = _factor_relative(est, truth)
    D = est.dims.D
    sq = D - 2 * np.prod([m.sum() for m in mus]) + np.prod([np.dot(m, m) for m in mus])
    return float(np.sqrt(max(sq, 0.0)))


def full_rel_op(est, truth):
    mus = _factor_relative(est, truth)
    hi = np.prod([m[-1] for m in mus])
    lo = np.prod([m[0] for m in mus])
    return float(max(abs(1 - hi), abs(1 - lo)))


def fisher_rao(theta1, theta2):
    """Fisher-Rao distance ``(1/sqrt 2) ||log Theta_1^{-1/2} Theta_2 Theta_1^{-1/2}||_F``."""
    return float(np.sqrt(theta1.dims.D / 2.0) * geodesic_distance(theta1, theta2))


def kl_gaussian(theta1, theta2):
    """KL divergence between ``N(0, Theta_1^{-1})`` and ``N(0, Theta_2^{-1})``.

    ``1/2 tr(Theta_1^{-1} Theta_2) - 1/2 log det(Theta_1^{-1} Theta_2) - D/2``,
    with both the trace and the log-determinant factorized.
    """
    mus = _factor_relative(theta2, theta1)
    D = theta1.dims.D
    tr = float(np.prod([m.sum() for m in mus]))
    logdet = sum(D / m.size * float(np.sum(np.log(m))) for m in mus)
    return max(0.5 * (tr - logdet - D), 0.0)


def tv_bounds(a, b):
    """Bracket ``[0.01 D_F, 1.5 D_F]`` on the total variation distance between the two Gaussians."""
    if isinstance(a, KronPoint):
        df = full_rel_frob(a, b)
    else:
        df = rel_frob(a, b)
    return 0.01 * df, min(1.5 * df, 1.0)


@dataclass
class ErrorReport:
    factor_frob: list
    factor_op: list
    frob: float
    op: float
    geodesic: float
    fisher_rao: float
    kl: float

    def as_dict(self):
        return asdict(self)


def factor_errors(est, truth):
    """Per-factor and full-matrix errors of ``est`` relative to ``truth`` (balanced convention)."""
    est, truth = _as_point(est), _as_point(truth)
    mus = _factor_relative(est, truth)
    return ErrorReport(
        factor_frob=[float(np.linalg.norm(1 - m)) for m in mus],
        factor_op=[float(np.max(np.abs(1 - m))) for m in mus],
        frob=full_rel_frob(est, truth),
        op=full_rel_op(est, truth),
        geodesic=geodesic_distance(truth, est),
        fisher_rao=fisher_rao(truth, est),
        kl=kl_gaussian(truth, est),
    )
