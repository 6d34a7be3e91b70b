"""Generative models for ground-truth precision matrices.

Spiked and Wishart factors are defined on the covariance and inverted;
sparse factors are defined directly on the precision as a graph Laplacian
plus ``I/2``. Each raw factor is rescaled to trace ``d_a`` before the
point is balanced.
"""
from dataclasses import dataclass, field

import numpy as np

from ..data import box_muller
from ..errors import InvalidInput
from ..manifold import as_dims, balance

KINDS = ("identity", "spiked", "sparse_laplacian", "wishart")


@dataclass(frozen=True)
class FactorSpec:
    kind: str = "identity"
    strength: float = 10.0
    edge_factor: float = 0.4
    rank: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidInput(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.strength < 0:
            raise InvalidInput("spike strength must be nonnegative")
        if self.edge_factor < 0:
            raise InvalidInput("edge_factor must be nonnegative")


@dataclass(frozen=True)
class GeneratorSpec:
    dims: tuple
    factors: tuple = field(default=())

    def __post_init__(self):
        dims = as_dims(self.dims).dims
        object.__setattr__(self, "dims", dims)
        factors = tuple(self.factors) or (FactorSpec(),) * len(dims)
        if len(factors) == 1 and len(dims) > 1:
            factors = factors * len(dims)
        if len(factors) != len(dims):
            raise InvalidInput("one factor spec per mode required")
        object.__setattr__(self, "factors", factors)

    @classmethod
    def uniform(cls, kind, dims, **params):
        return cls(tuple(dims), (FactorSpec(kind, **params),))

    @classmethod
    def from_dict(cls, doc):
        doc = dict(doc)
        try:
            dims = tuple(doc.pop("dims"))
        except KeyError:
            raise InvalidInput("generator needs 'dims'") from None
        per = doc.pop("factors", None)
        try:
            if per is None:
                return cls(dims, (FactorSpec(**doc),))
            return cls(dims, tuple(FactorSpec(**f) for f in per))
        except TypeError as exc:
            raise InvalidInput(f"bad generator parameters: {exc}") from None

    def to_dict(self):
        return {
            "dims": list(self.dims),
            "factors": [
                {"kind": f.kind, "strength": f.strength, "edge_factor": f.edge_factor, "rank": f.rank}
                for f in self.factors
            ],
        }


def _normalize_trace(m):
    d = m.shape[0]
    return m * (d / np.trace(m))


def spiked_covariance(d, strength, rng):
    v = box_muller(rng, d)
    return _normalize_trace(np.eye(d) + strength * np.outer(v, v))


def wishart_covariance(d, rank, rng):
    rank = d if rank is None else int(rank)
    if rank < d:
        raise InvalidInput(f"wishart rank {rank} < d={d} gives a singular covariance")
    g = box_muller(rng, d * rank).reshape(d, rank)
    return _normalize_trace(g @ g.T / rank)


def multigraph_laplacian(d, n_edges, rng):
    """Laplacian of ``n_edges`` edges drawn uniformly with replacement from vertex pairs."""
    lap = np.zeros((d, d))
    if d < 2:
        return lap
    iu, ju = np.triu_indices(d, 1)
    for e in rng.integers(0, iu.size, size=n_edges):
        i, j = iu[e], ju[e]
        lap[i, i] += 1
        lap[j, j] += 1
        lap[i, j] -= 1
        lap[j, i] -= 1
    return lap


def sparse_precision(d, edge_factor, rng):
    lap = multigraph_laplacian(d, int(np.floor(edge_factor * d)), rng)
    return _normalize_trace(lap + 0.5 * np.eye(d))


def generate_factors(spec, seed):
    """Raw trace-normalized factors before inversion and balancing.

    Returns ``(matrices, on_covariance)`` where ``on_covariance[a]`` tells
    whether factor ``a`` is a covariance (to be inverted) or a precision.
    """
    mats, on_cov = [], []
    for a, (d, f) in enumerate(zip(spec.dims, spec.factors)):
        rng = seed.rng(a)
        if f.kind == "identity":
            mats.append(np.eye(d))
            on_cov.append(False)
        elif f.kind == "spiked":
            mats.append(spiked_covariance(d, f.strength, rng))
            on_cov.append(True)
        elif f.kind == "wishart":
            mats.append(wishart_covariance(d, f.rank, rng))
            on_cov.append(True)
        else:
            mats.append(sparse_precision(d, f.edge_factor, rng))
            on_cov.append(False)
    return mats, on_cov


def generate(spec, seed):
    """Ground-truth precision point for ``spec``, balanced."""
    mats, on_cov = generate_factors(spec, seed)
    prec = [np.linalg.inv(m) if c else m for m, c in zip(mats, on_cov)]
    return balance([(p + p.T) / 2 for p in prec])
