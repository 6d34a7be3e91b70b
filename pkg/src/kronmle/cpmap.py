"""Completely positive maps induced by tensor data, and expansion diagnostics.

For modes ``a != b`` the two-mode marginal defines

    Phi^(ab): Mat(d_b) -> Mat(d_a),   <H, Phi(K)> = tr rho^(ab) (H (x) K).

Its Kraus operators are the ``d_a x d_b`` slices of the samples (one per
sample and per multi-index of the remaining modes), scaled by
``1/sqrt(nD)``, so ``Phi(K) = sum_i A_i K A_i^T``.
"""
import numpy as np

from .data import trace_rho
from .errors import DegenerateInput, InvalidInput, NumericalFailure, TooLarge
from .manifold import traceless

GAP_LIMIT = 10**6


class CPMap:
    """A completely positive map given by Kraus operators of shape ``(N, d_a, d_b)``."""

    __slots__ = ("kraus",)

    def __init__(self, kraus):
        k = np.asarray(kraus, dtype=float)
        if k.ndim == 2:
            k = k[None]
        if k.ndim != 3 or k.shape[0] < 1:
            raise InvalidInput("Kraus operators must have shape (N, d_a, d_b)")
        self.kraus = k

    @classmethod
    def from_dataset(cls, x, a, b):
        """The map ``Phi^(ab)`` of dataset ``x`` (modes are 0-based)."""
        k = x.k
        for m in (a, b):
            if not isinstance(m, (int, np.integer)) or not 0 <= m < k:
                raise InvalidInput(f"mode {m!r} out of range for k={k}")
        if a == b:
            raise InvalidInput("CP map needs two distinct modes")
        t = np.moveaxis(x.tensor(), (a + 1, b + 1), (-2, -1))
        kraus = t.reshape(-1, x.dims[a], x.dims[b]) / np.sqrt(x.n * x.dims.D)
        return cls(kraus)

    @property
    def d_out(self):
        return self.kraus.shape[1]

    @property
    def d_in(self):
        return self.kraus.shape[2]

    @property
    def n_kraus(self):
        return self.kraus.shape[0]

    def __call__(self, k):
        k = np.asarray(k, dtype=float)
        if k.shape != (self.d_in, self.d_in):
            raise InvalidInput(f"input must be {self.d_in}x{self.d_in}")
        return np.einsum("iab,bc,idc->ad", self.kraus, k, self.kraus, optimize=True)

    def adjoint(self, h):
        h = np.asarray(h, dtype=float)
        if h.shape != (self.d_out, self.d_out):
            raise InvalidInput(f"input must be {self.d_out}x{self.d_out}")
        return np.einsum("iab,ac,icd->bd", self.kraus, h, self.kraus, optimize=True)

    def scaled(self, c):
        """The map ``c * Phi``."""
        return CPMap(np.sqrt(c) * self.kraus)

    def trace_of_identity(self):
        """``tr Phi(I) = sum_i ||A_i||_F^2``."""
        return float(np.vdot(self.kraus, self.kraus))

    def transfer_matrix(self):
        """Matrix of ``vec(X) -> vec(Phi(X))`` (row-major vec), ``d_a^2 x d_b^2``."""
        da, db = self.d_out, self.d_in
        if (da * db) ** 2 > GAP_LIMIT:
            raise TooLarge(f"transfer matrix of size {da**2}x{db**2} exceeds limit")
        m = np.einsum("ipr,iqs->pqrs", self.kraus, self.kraus, optimize=True)
        return m.reshape(da * da, db * db)


def cp_apply(phi, k):
    return phi(k)


def balance_deficit(phi):
    """Smallest ``(eps_a, eps_b)`` for which ``phi`` is doubly balanced.

    ``eps_a = d_a ||Phi(I)/tr Phi(I) - I/d_a||_op`` and analogously for the adjoint.
    """
    tr = phi.trace_of_identity()
    if tr <= 0:
        raise DegenerateInput("map is zero; balance deficit undefined")
    da, db = phi.d_out, phi.d_in
    ra = phi(np.eye(db)) / tr - np.eye(da) / da
    rb = phi.adjoint(np.eye(da)) / tr - np.eye(db) / db
    return (
        da * float(np.max(np.abs(np.linalg.eigvalsh(ra)))),
        db * float(np.max(np.abs(np.linalg.eigvalsh(rb)))),
    )


def expansion_norm(phi, tol=1e-10, max_iter=20000, seed=0):
    """``max ||Phi(H)||_F`` over unit-Frobenius traceless symmetric ``H``.

    Power iteration on ``P Phi^* Phi P``, ``P`` the projection onto traceless
    symmetric matrices, started from a seeded random traceless symmetric
    matrix. Stops once successive Rayleigh quotients agree to relative
    ``tol``.
    """
    d = phi.d_in
    if d == 1:
        return 0.0
    rng = np.random.default_rng(seed)

    def op(h):
        out = phi.adjoint(phi(h))
        return traceless((out + out.T) / 2)

    h = rng.standard_normal((d, d))
    h = traceless((h + h.T) / 2)
    h /= np.linalg.norm(h)
    prev = None
    for _ in range(max_iter):
        g = op(h)
        rq = float(np.vdot(h, g))
        ng = np.linalg.norm(g)
        if ng == 0.0:
            return 0.0
        if prev is not None and abs(rq - prev) <= tol * max(abs(rq), 1e-300):
            return float(np.sqrt(max(rq, 0.0)))
        prev = rq
        h = g / ng
    raise NumericalFailure(f"expansion_norm power iteration did not converge in {max_iter} steps")


def expansion_eta(phi, tol=1e-10):
    """Expansion ratio ``eta = ||Phi||_0 sqrt(d_a d_b) / tr Phi(I)``."""
    tr = phi.trace_of_identity()
    if tr <= 0:
        raise DegenerateInput("map is zero")
    return expansion_norm(phi, tol) * np.sqrt(phi.d_out * phi.d_in) / tr


def singular_values(phi):
    return np.linalg.svd(phi.transfer_matrix(), compute_uv=False)


def spectral_gap(phi):
    """``1 - sigma_2 sqrt(d_a d_b) / tr Phi(I)`` from the materialized transfer matrix."""
    s = singular_values(phi)
    tr = phi.trace_of_identity()
    if tr <= 0:
        raise DegenerateInput("map is zero")
    s2 = float(s[1]) if s.size > 1 else 0.0
    return 1.0 - s2 * np.sqrt(phi.d_out * phi.d_in) / tr


def diagnostics(x, a, b, with_gap=True, tol=1e-10):
    """All expansion quantities of ``Phi^(ab)`` for dataset ``x`` as a dict."""
    if trace_rho(x) == 0:
        raise DegenerateInput("dataset is identically zero")
    phi = CPMap.from_dataset(x, a, b)
    eps_a, eps_b = balance_deficit(phi)
    norm0 = expansion_norm(phi, tol)
    tr = phi.trace_of_identity()
    out = {
        "modes": [a, b],
        "eps_a": eps_a,
        "eps_b": eps_b,
        "expansion_norm": norm0,
        "trace_phi_identity": tr,
        "eta": norm0 * np.sqrt(phi.d_out * phi.d_in) / tr,
    }
    if with_gap:
        out["spectral_gap"] = spectral_gap(phi)
    return out
