"""The manifold of Kronecker-factored precision matrices.

A point ``Theta = Theta_1 (x) ... (x) Theta_k`` is stored as its ``k``
positive-definite factors; the ``D x D`` product is only formed by
:func:`materialize`, which exists for small-``D`` cross-checks.

Factors are identified only up to scalars. The canonical representative
is the *balanced* one, where ``det(Theta_a) ** (1 / d_a)`` is the same for
every factor; every operation here that returns a point re-balances it.

Tangent vectors ``H = (H_0; H_1, ..., H_k)`` consist of a scalar and one
traceless symmetric block per factor, with inner product
``H_0 K_0 + sum_a tr(H_a^T K_a)``. The exponential map is::

    exp_Theta(H) = e^{H_0} (Theta_1^{1/2} e^{sqrt(d_1) H_1} Theta_1^{1/2}) (x) ...

so that ``t -> exp_Theta(t H)`` has unit speed when ``||H|| = 1``.
"""
from dataclasses import dataclass
from functools import reduce

import numpy as np

from .errors import InvalidInput, TooLarge
from .specmat import PDMat, as_pd

MAX_D = 2**31
MATERIALIZE_LIMIT = 4096


@dataclass(frozen=True)
class DimVector:
    """Mode dimensions ``(d_1, ..., d_k)``."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) < 1 or any(d < 1 for d in dims):
            raise InvalidInput(f"invalid dimension vector {self.dims!r}")
        total = 1
        for d in dims:
            total *= d
            if total > MAX_D:
                raise InvalidInput(f"total dimension of {dims} exceeds 2**31")
        object.__setattr__(self, "dims", dims)

    @property
    def k(self):
        return len(self.dims)

    @property
    def D(self):
        return int(np.prod(self.dims))

    @property
    def d_max(self):
        return max(self.dims)

    @property
    def d_min(self):
        return min(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __len__(self):
        return len(self.dims)

    def __getitem__(self, a):
        return self.dims[a]


def as_dims(dims):
    return dims if isinstance(dims, DimVector) else DimVector(tuple(dims))


class KronPoint:
    """A point of the Kronecker manifold, stored factorwise.

    Use :func:`balance` (or :meth:`identity`) to construct canonical points.
    """

    __slots__ = ("dims", "factors", "balanced")

    def __init__(self, factors, balanced=False):
        factors = tuple(as_pd(f) for f in factors)
        self.dims = DimVector(tuple(f.dim for f in factors))
        self.factors = factors
        self.balanced = balanced

    @classmethod
    def identity(cls, dims):
        dims = as_dims(dims)
        return cls([np.eye(d) for d in dims], balanced=True)

    @property
    def k(self):
        return self.dims.k

    def arrays(self):
        return [f.array for f in self.factors]

    def logdet(self):
        """``log det`` of the full Kronecker product."""
        D = self.dims.D
        return sum(D / f.dim * f.logdet() for f in self.factors)

    def trace(self):
        return float(np.prod([np.trace(f.array) for f in self.factors]))

    def inverse(self):
        return balance([f.spectral(lambda w: 1.0 / w) for f in self.factors])

    def congruence(self, mats):
        """Return the point ``A Theta A^T`` for ``A = (x)_a mats[a]``."""
        if len(mats) != self.k:
            raise InvalidInput("one matrix per factor required")
        out = []
        for f, m in zip(self.factors, mats):
            m = np.asarray(m, dtype=float)
            out.append(m @ f.array @ m.T)
        return balance(out)

    def scaled(self, c):
        """Return ``c * Theta`` (scalar folded evenly into the factors)."""
        if c <= 0:
            raise InvalidInput("scale must be positive")
        s = c ** (1.0 / self.k)
        return balance([s * f.array for f in self.factors])

    def to_json(self):
        return {"dims": list(self.dims.dims), "factors": [f.array.tolist() for f in self.factors]}

    @classmethod
    def from_json(cls, doc):
        try:
            dims = tuple(int(d) for d in doc["dims"])
            factors = [np.asarray(f, dtype=float) for f in doc["factors"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInput(f"malformed KronPoint document: {exc}") from None
        if tuple(f.shape[0] if f.ndim == 2 else -1 for f in factors) != dims:
            raise InvalidInput("factor shapes do not match dims")
        return balance(factors)

    def __repr__(self):
        return f"KronPoint(dims={self.dims.dims}, balanced={self.balanced})"


class TangentVec:
    """Tangent vector ``(h0; H_1, ..., H_k)`` with traceless symmetric blocks."""

    __slots__ = ("h0", "blocks")

    def __init__(self, h0, blocks, check=True):
        self.h0 = float(h0)
        bl = []
        for b in blocks:
            b = np.asarray(b, dtype=float)
            if b.ndim != 2 or b.shape[0] != b.shape[1]:
                raise InvalidInput("tangent blocks must be square")
            b = (b + b.T) / 2
            if check:
                nb = np.linalg.norm(b)
                if abs(np.trace(b)) > 1e-12 * nb * b.shape[0] + 1e-300:
                    raise InvalidInput("tangent blocks must be traceless")
            bl.append(b)
        self.blocks = tuple(bl)

    @classmethod
    def zeros(cls, dims):
        return cls(0.0, [np.zeros((d, d)) for d in as_dims(dims)], check=False)

    @classmethod
    def project(cls, h0, mats):
        """Build a tangent vector from arbitrary square matrices by symmetrizing and removing traces."""
        return cls(h0, [traceless(sym(m)) for m in mats], check=False)

    @property
    def dims(self):
        return tuple(b.shape[0] for b in self.blocks)

    def norm(self):
        return float(np.sqrt(tangent_inner(self, self)))

    def __add__(self, other):
        _check_same(self, other)
        return TangentVec(self.h0 + other.h0, [a + b for a, b in zip(self.blocks, other.blocks)], check=False)

    def __sub__(self, other):
        return self + (-1.0) * other

    def __mul__(self, c):
        return TangentVec(c * self.h0, [c * b for b in self.blocks], check=False)

    __rmul__ = __mul__

    def to_vector(self):
        """Coordinates in an orthonormal basis of the tangent space."""
        parts = [np.array([self.h0])]
        for b in self.blocks:
            parts.append(_sym_traceless_coords(b))
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, v, dims):
        v = np.asarray(v, dtype=float)
        h0 = v[0]
        pos = 1
        blocks = []
        for d in dims:
            m = d * (d + 1) // 2 - 1
            blocks.append(_sym_traceless_from_coords(v[pos:pos + m], d))
            pos += m
        if pos != v.size:
            raise InvalidInput("coordinate vector length does not match dims")
        return cls(h0, blocks, check=False)

    def __repr__(self):
        return f"TangentVec(h0={self.h0:.6g}, dims={self.dims})"


def tangent_dim(dims):
    return 1 + sum(d * (d + 1) // 2 - 1 for d in dims)


def sym(m):
    m = np.asarray(m, dtype=float)
    return (m + m.T) / 2


def traceless(m):
    d = m.shape[0]
    return m - np.trace(m) / d * np.eye(d)


def _traceless_diag_basis(d):
    # orthonormal basis of traceless diagonal matrices (Helmert contrasts)
    basis = np.zeros((d - 1, d))
    for j in range(1, d):
        basis[j - 1, :j] = 1.0
        basis[j - 1, j] = -j
        basis[j - 1] /= np.sqrt(j * (j + 1))
    return basis


def _sym_traceless_coords(b):
    d = b.shape[0]
    iu = np.triu_indices(d, 1)
    off = np.sqrt(2.0) * b[iu]
    diag = _traceless_diag_basis(d) @ np.diag(b)
    return np.concatenate([diag, off])


def _sym_traceless_from_coords(c, d):
    nd = d - 1
    out = np.diag(_traceless_diag_basis(d).T @ c[:nd]) if d > 1 else np.zeros((1, 1))
    iu = np.triu_indices(d, 1)
    off = np.zeros((d, d))
    off[iu] = c[nd:] / np.sqrt(2.0)
    return out + off + off.T


def _check_same(h, k):
    if h.dims != k.dims:
        raise InvalidInput(f"tangent dims differ: {h.dims} vs {k.dims}")


def tangent_inner(h, k):
    """``h0 k0 + sum_a tr(H_a^T K_a)``."""
    _check_same(h, k)
    return float(h.h0 * k.h0 + sum(np.vdot(a, b) for a, b in zip(h.blocks, k.blocks)))


def balance(factors):
    """Rescale factors to the canonical balanced representative.

    Each output factor is ``lam * Theta_a / det(Theta_a) ** (1 / d_a)`` with
    ``lam = det(Theta) ** (1 / (k D))``; the Kronecker product is unchanged.
    """
    pds = [as_pd(f) for f in factors]
    if not pds:
        raise InvalidInput("at least one factor required")
    ell = [p.logdet() / p.dim for p in pds]
    log_lam = float(np.mean(ell))
    out = []
    for p, la in zip(pds, ell):
        c = np.exp(log_lam - la)
        out.append(_scaled_pd(p, c))
    return KronPoint(out, balanced=True)


def _scaled_pd(p, c):
    # scaling keeps the eigenvectors, so avoid a second eigendecomposition
    q = PDMat.__new__(PDMat)
    q.array = c * p.array
    q.eigenvalues = c * p.eigenvalues
    q.eigenvectors = p.eigenvectors
    return q


def _check_dims(a, b):
    if a.dims != b.dims:
        raise InvalidInput(f"dimension mismatch: {a.dims.dims} vs {b.dims.dims}")


def exp_at(theta, h):
    """Exponential map at ``theta`` applied to the tangent vector ``h``."""
    if h.dims != theta.dims.dims:
        raise InvalidInput("tangent vector dims do not match the point")
    k = theta.k
    out = []
    for f, b in zip(theta.factors, h.blocks):
        d = f.dim
        r = f.spectral(np.sqrt)
        w, q = np.linalg.eigh(np.sqrt(d) * b)
        e = (q * np.exp(w + h.h0 / k)) @ q.T
        out.append(r @ e @ r)
    return balance(out)


def relative_logs(a, b):
    """Per-factor ``log(A_a^{-1/2} B_a A_a^{-1/2})`` eigenvalues.

    Returns a list of ascending eigenvalue arrays, one per factor.
    """
    _check_dims(a, b)
    out = []
    for fa, fb in zip(a.factors, b.factors):
        r = fa.spectral(lambda w: 1.0 / np.sqrt(w))
        m = r @ fb.array @ r
        w = np.linalg.eigvalsh((m + m.T) / 2)
        if w[0] <= 0:
            raise InvalidInput("relative factor is not positive definite")
        out.append(np.log(w))
    return out


def _lifted_log_sq_norm(logs, dims):
    # ||sum_a lift(L_a)||_F^2 with L_a split into scalar and traceless parts;
    # the traceless parts of different factors are orthogonal after lifting
    D = dims.D
    total_scalar = sum(float(np.mean(l)) for l in logs)
    out = D * total_scalar**2
    for l, d in zip(logs, dims):
        c = l - np.mean(l)
        out += D / d * float(np.dot(c, c))
    return out


def geodesic_distance(a, b):
    """``D^{-1/2} ||log(A^{-1/2} B A^{-1/2})||_F`` evaluated factorwise."""
    logs = relative_logs(a, b)
    return float(np.sqrt(_lifted_log_sq_norm(logs, a.dims) / a.dims.D))


def d_op_distance(a, b):
    """``||log(A^{-1/2} B A^{-1/2})||_op`` evaluated factorwise."""
    logs = relative_logs(a, b)
    hi = sum(float(l[-1]) for l in logs)
    lo = sum(float(l[0]) for l in logs)
    return max(abs(hi), abs(lo))


def materialize(theta):
    """Full ``D x D`` Kronecker product (test oracle; ``D <= 4096``)."""
    if theta.dims.D > MATERIALIZE_LIMIT:
        raise TooLarge(f"D={theta.dims.D} exceeds materialization limit {MATERIALIZE_LIMIT}")
    return PDMat(reduce(np.kron, theta.arrays()))
