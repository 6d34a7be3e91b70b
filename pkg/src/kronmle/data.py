"""Tensor-valued samples and their second-moment marginals.

A :class:`Dataset` holds ``n`` samples in ``R^D`` as an ``n x D`` array.
Each row is a ``d_1 x ... x d_k`` tensor flattened in C order (the last
index varies fastest). Every flattening used below is a permutation of
axes followed by a reshape of that layout.

The full second-moment matrix ``rho = (1/nD) sum_i x_i x_i^T`` is never
formed. Its partial traces are Gram matrices of flattenings::

    rho^(a)  = (1/nD) X^(a) X^(a)^T,      X^(a) of shape d_a x (nD/d_a)
"""
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import FormatError, InvalidInput
from .manifold import DimVector, as_dims

MAGIC = b"TNDATA01"


@dataclass(frozen=True)
class Seed:
    """Root seed plus a substream index.

    Random numbers come from numpy's counter-based Philox generator keyed
    by ``(value, stream, *sub)``; Gaussians are produced by Box-Muller from
    its uniform doubles. ``sub`` lets one trial derive several independent
    streams (truth, data per sample size, ...) from the same ``stream``.
    """

    value: int
    stream: int = 0
    sub: tuple = ()

    def __post_init__(self):
        for name in ("value", "stream"):
            v = int(getattr(self, name))
            if not 0 <= v < 2**64:
                raise InvalidInput(f"seed {name} must be a 64-bit unsigned integer")
            object.__setattr__(self, name, v)
        object.__setattr__(self, "sub", tuple(int(s) for s in self.sub))

    def rng(self, *extra):
        ss = np.random.SeedSequence(self.value, spawn_key=(self.stream, *self.sub, *extra))
        return np.random.Generator(np.random.Philox(ss))

    def child(self, *extra):
        return Seed(self.value, self.stream, self.sub + tuple(extra))


def box_muller(rng, size):
    """Standard normal draws from uniform doubles via the Box-Muller transform."""
    size = int(size)
    m = (size + 1) // 2
    u1 = rng.random(m)
    u2 = rng.random(m)
    r = np.sqrt(-2.0 * np.log1p(-u1))  # 1 - u1 lies in (0, 1]
    t = 2.0 * np.pi * u2
    z = np.empty(2 * m)
    z[0::2] = r * np.cos(t)
    z[1::2] = r * np.sin(t)
    return z[:size]


class Dataset:
    """``n`` tensor samples with mode dimensions ``dims``."""

    __slots__ = ("dims", "data")

    def __init__(self, dims, data):
        dims = as_dims(dims)
        a = np.asarray(data, dtype=float)
        if a.ndim == 1:
            a = a[None, :]
        if a.ndim > 2:
            a = a.reshape(a.shape[0], -1)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] != dims.D:
            raise InvalidInput(f"data of shape {np.shape(data)} does not match dims {dims.dims}")
        if not np.all(np.isfinite(a)):
            raise InvalidInput("dataset has non-finite entries")
        a = np.ascontiguousarray(a)
        a.setflags(write=False)
        self.dims = dims
        self.data = a

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def k(self):
        return self.dims.k

    def tensor(self):
        """View as an array of shape ``(n, d_1, ..., d_k)``."""
        return self.data.reshape((self.n,) + self.dims.dims)

    def flatten(self, a):
        """Mode-``a`` flattening, shape ``d_a x (nD / d_a)``."""
        _check_mode(self.dims, a)
        return np.moveaxis(self.tensor(), a + 1, 0).reshape(self.dims[a], -1)

    def sq_norm(self):
        return float(np.vdot(self.data, self.data))

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and self.dims == other.dims
            and np.array_equal(self.data, other.data)
        )

    def __repr__(self):
        return f"Dataset(dims={self.dims.dims}, n={self.n})"


def _check_mode(dims, a):
    if not isinstance(a, (int, np.integer)) or not 0 <= a < dims.k:
        raise InvalidInput(f"mode {a!r} out of range for k={dims.k}")


def sample_model(theta, n, seed):
    """Draw ``n`` samples from the centered Gaussian with precision ``theta``.

    Standard normal tensors are mode-multiplied by ``Theta_a^{-1/2}`` for
    each (balanced) factor, so :func:`whiten` by the same point recovers
    the standard normal draws.
    """
    n = int(n)
    if n < 1:
        raise InvalidInput("n must be at least 1")
    dims = theta.dims
    z = box_muller(seed.rng(), n * dims.D).reshape(n, dims.D)
    x = Dataset(dims, z)
    for a, f in enumerate(theta.factors):
        x = mode_multiply(x, a, f.spectral(lambda w: 1.0 / np.sqrt(w)))
    return x


def standard_normal(dims, n, seed):
    return Dataset(dims, box_muller(seed.rng(), int(n) * as_dims(dims).D).reshape(int(n), -1))


def mode_multiply(x, a, m):
    """Replace each sample's mode-``a`` flattening ``X^(a)`` by ``m X^(a)``.

    ``m`` may be any ``d_a x d_a`` matrix (not necessarily symmetric).
    """
    _check_mode(x.dims, a)
    m = np.asarray(m, dtype=float)
    d = x.dims[a]
    if m.shape != (d, d):
        raise InvalidInput(f"mode-{a} matrix must be {d}x{d}, got {m.shape}")
    t = np.tensordot(m, x.tensor(), axes=(1, a + 1))
    return Dataset(x.dims, np.moveaxis(t, 0, a + 1).reshape(x.n, -1))


def trace_rho(x):
    return x.sq_norm() / (x.n * x.dims.D)


def partial_trace_one(x, a):
    xa = x.flatten(a)
    r = xa @ xa.T / (x.n * x.dims.D)
    return (r + r.T) / 2


def partial_trace_two(x, a, b, limit=4096):
    """Two-mode marginal ``rho^(ab)`` of size ``d_a d_b``, row index ``(i_a, i_b)`` with ``i_b`` fastest."""
    _check_mode(x.dims, a)
    _check_mode(x.dims, b)
    if a == b:
        raise InvalidInput("partial_trace_two needs two distinct modes")
    dab = x.dims[a] * x.dims[b]
    if dab > limit:
        raise InvalidInput(f"d_a*d_b={dab} exceeds limit {limit}")
    t = np.moveaxis(x.tensor(), (a + 1, b + 1), (0, 1)).reshape(dab, -1)
    r = t @ t.T / (x.n * x.dims.D)
    return (r + r.T) / 2


def whiten(x, theta):
    """Mode-multiply every mode by ``Theta_a^{1/2}`` (balanced factors)."""
    if x.dims != theta.dims:
        raise InvalidInput(f"dataset dims {x.dims.dims} do not match point {theta.dims.dims}")
    for a, f in enumerate(theta.factors):
        x = mode_multiply(x, a, f.spectral(np.sqrt))
    return x


def save(x, path):
    """Write ``x`` in the TNDATA01 format.

    Layout: 8-byte magic, little-endian uint64 header length, UTF-8 JSON
    header, then ``n * D`` little-endian float64 values.
    """
    header = json.dumps(
        {
            "k": x.k,
            "dims": list(x.dims.dims),
            "n": x.n,
            "dtype": "f64",
            "order": "row-major, last-fastest",
            "endianness": "little",
        },
        sort_keys=True,
    ).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(header)))
        fh.write(header)
        fh.write(x.data.astype("<f8").tobytes())


def load(path):
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:8] != MAGIC:
        raise FormatError("bad magic bytes")
    if len(blob) < 16:
        raise FormatError("truncated header length")
    (hlen,) = struct.unpack("<Q", blob[8:16])
    if 16 + hlen > len(blob):
        raise FormatError("header length exceeds file size")
    try:
        hdr = json.loads(blob[16:16 + hlen].decode("utf-8"))
        dims = DimVector(tuple(hdr["dims"]))
        n = int(hdr["n"])
        k = int(hdr["k"])
    except (ValueError, KeyError, TypeError, InvalidInput) as exc:
        raise FormatError(f"invalid header: {exc}") from None
    if k != dims.k or hdr.get("dtype") != "f64" or hdr.get("endianness") != "little":
        raise FormatError("unsupported or inconsistent header fields")
    payload = blob[16 + hlen:]
    if n < 1 or len(payload) != 8 * n * dims.D:
        raise FormatError(f"payload of {len(payload)} bytes does not match n={n}, D={dims.D}")
    data = np.frombuffer(payload, dtype="<f8").astype(float).reshape(n, dims.D)
    return Dataset(dims, data)
