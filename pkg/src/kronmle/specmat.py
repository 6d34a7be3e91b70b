"""Spectral calculus on real symmetric and positive-definite matrices.

Every spectral function (square root, inverse square root, logarithm,
inverse, exponential) goes through a single symmetric eigendecomposition.
At the dimensions this package targets (a few hundred at most) this is
accurate, deterministic and fast enough.
"""
import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

#: relative eigenvalue floor: lambda_min <= PD_TOLERANCE * lambda_max is singular
PD_TOLERANCE = 1e-12

_SPECTRAL_FNS = {
    "sqrt": np.sqrt,
    "inv_sqrt": lambda w: 1.0 / np.sqrt(w),
    "log": np.log,
    "inverse": lambda w: 1.0 / w,
}


def _as_square(m):
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidInput(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("matrix has non-finite entries")
    return a


class SymMat:
    """Dense real symmetric matrix.

    The input is symmetrized as ``(M + M.T) / 2`` rather than rejected, so
    results that are symmetric only up to rounding are accepted.
    """

    __slots__ = ("array",)

    def __init__(self, m):
        a = _as_square(m)
        self.array = (a + a.T) / 2

    @property
    def dim(self):
        return self.array.shape[0]

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.array
        return self.array.astype(dtype)

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"


class PDMat(SymMat):
    """Positive-definite matrix with a cached eigendecomposition.

    Raises
    ------
    NotPositiveDefinite
        If the smallest eigenvalue is at most ``PD_TOLERANCE`` times the
        largest one (or the largest is not positive).
    """

    __slots__ = ("eigenvalues", "eigenvectors")

    def __init__(self, m):
        super().__init__(m)
        w, q = np.linalg.eigh(self.array)
        if w[-1] <= 0 or w[0] <= PD_TOLERANCE * w[-1]:
            raise NotPositiveDefinite(
                f"eigenvalue range [{w[0]:.3e}, {w[-1]:.3e}] is not positive definite"
            )
        self.eigenvalues = w
        self.eigenvectors = q

    def spectral(self, fn):
        """Return ``Q fn(w) Q^T`` as a plain array."""
        q = self.eigenvectors
        return (q * fn(self.eigenvalues)) @ q.T

    def logdet(self):
        return float(np.sum(np.log(self.eigenvalues)))


def as_pd(m):
    """Coerce ``m`` to a :class:`PDMat`, reusing it if it already is one."""
    if isinstance(m, PDMat):
        return m
    return PDMat(np.asarray(m))


def sym_eig(m):
    """Eigendecomposition of a symmetric matrix.

    Returns
    -------
    eigenvalues : ndarray, ascending
    eigenvectors : ndarray, orthonormal columns
    """
    if not isinstance(m, SymMat):
        m = SymMat(m)
    return np.linalg.eigh(m.array)


def pd_fn(m, fn):
    """Apply ``fn`` in {'sqrt', 'inv_sqrt', 'log', 'inverse'} spectrally to a PD matrix."""
    try:
        f = _SPECTRAL_FNS[fn]
    except KeyError:
        raise InvalidInput(f"unknown spectral function {fn!r}") from None
    return SymMat(as_pd(m).spectral(f))


def sym_exp(m):
    """Matrix exponential of a symmetric matrix, returned as a PDMat."""
    w, q = sym_eig(m)
    return PDMat((q * np.exp(w)) @ q.T)


def cond_number(m):
    """Spectral condition number ``lambda_max / lambda_min``."""
    w = as_pd(m).eigenvalues
    return float(w[-1] / w[0])
