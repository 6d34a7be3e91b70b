import numpy as np
import pytest

from conftest import materialized_f, random_dataset, random_point, random_tangent, rel_err
from kronmle.data import Dataset, mode_multiply, partial_trace_one
from kronmle.errors import InvalidInput
from kronmle.likelihood import (
    ObjectiveConfig,
    f_alpha_value,
    f_value,
    gradient,
    hessian_apply,
    hessian_matrix,
    hessian_min_eig,
    hessian_quadratic,
)
from kronmle.manifold import KronPoint, TangentVec, exp_at, materialize, tangent_dim


def fd_gradient(fun, theta, dims, step=1e-5):
    """Central differences of ``t -> fun(exp_theta(t e_i))`` over an orthonormal tangent basis."""
    n = tangent_dim(dims)
    out = np.empty(n)
    for i, e in enumerate(np.eye(n)):
        h = TangentVec.from_vector(e, dims)
        out[i] = (fun(exp_at(theta, step * h)) - fun(exp_at(theta, -step * h))) / (2 * step)
    return TangentVec.from_vector(out, dims)


def second_difference(fun, theta, h, step=1e-3):
    f0 = fun(theta)
    return (fun(exp_at(theta, step * h)) - 2 * f0 + fun(exp_at(theta, -step * h))) / step**2


def test_f_examples(rng):
    e1 = np.zeros(4)
    e1[0] = 2.0
    x = Dataset((2, 2), e1)
    assert f_value(x, KronPoint.identity((2, 2))) == pytest.approx(1.0, rel=1e-15)
    # trace(rho) = 1, log det(2 I_4)/4 = log 2
    assert f_value(x, KronPoint.identity((2, 2)).scaled(2.0)) == pytest.approx(2 - np.log(2), rel=1e-14)


def test_f_matches_materialized(rng):
    for dims in [(2, 3), (2, 2, 2), (4, 3)]:
        x = random_dataset(rng, dims, 5)
        theta = random_point(rng, dims)
        assert f_value(x, theta) == pytest.approx(materialized_f(x, materialize(theta).array), rel=1e-12)
        alpha = 0.3
        rho = x.data.T @ x.data / (x.n * x.dims.D)
        D = x.dims.D
        shrunk = (1 - alpha) * rho + alpha * np.trace(rho) / D * np.eye(D)
        full = materialize(theta).array
        expect = np.trace(shrunk @ full) - np.linalg.slogdet(full)[1] / D
        assert f_alpha_value(x, theta, alpha) == pytest.approx(expect, rel=1e-12)


def test_alpha_validation(rng):
    with pytest.raises(InvalidInput):
        ObjectiveConfig(1.5)
    x = random_dataset(rng, (2, 2), 2)
    with pytest.raises(InvalidInput):
        f_value(x, KronPoint.identity((2, 3)))


def test_gradient_at_identity_from_marginals(rng):
    x = random_dataset(rng, (2, 3), 4)
    g = gradient(x, KronPoint.identity((2, 3)))
    tr = float(np.sum(x.data**2) / (x.n * x.dims.D))
    assert g.h0 == pytest.approx(tr - 1, rel=1e-13)
    for a, d in enumerate(x.dims):
        r = partial_trace_one(x, a)
        np.testing.assert_allclose(g.blocks[a], np.sqrt(d) * (r - tr / d * np.eye(d)), rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("alpha", [0.0, 0.4, 1.0])
def test_gradient_matches_finite_differences(rng, alpha):
    for dims in [(2, 3), (3, 2, 2)]:
        x = random_dataset(rng, dims, 3)
        theta = random_point(rng, dims, cond=5)
        g = gradient(x, theta, alpha)
        fd = fd_gradient(lambda p: f_alpha_value(x, p, alpha), theta, dims)
        assert fd.h0 == pytest.approx(g.h0, rel=1e-6, abs=1e-9)
        for gb, fb in zip(g.blocks, fd.blocks):
            assert rel_err(fb, gb) <= 1e-6


def test_hessian_matches_second_differences(rng):
    for dims in [(2, 2), (2, 3, 2), (4, 3)]:
        x = random_dataset(rng, dims, 4)
        theta = random_point(rng, dims, cond=5)
        for _ in range(3):
            h = random_tangent(rng, dims, unit=True)
            q = hessian_quadratic(x, theta, h)
            sd = second_difference(lambda p: f_value(x, p), theta, h)
            assert sd == pytest.approx(q, rel=1e-4)
            assert q >= 0


def test_hessian_self_adjoint(rng):
    dims = (2, 3, 2)
    x = random_dataset(rng, dims, 3)
    theta = random_point(rng, dims)
    for _ in range(5):
        h, k = random_tangent(rng, dims), random_tangent(rng, dims)
        lhs = np.dot(hessian_apply(x, theta, h).to_vector(), k.to_vector())
        rhs = np.dot(h.to_vector(), hessian_apply(x, theta, k).to_vector())
        assert lhs == pytest.approx(rhs, rel=1e-10)


def test_hessian_identity_when_model_is_exact():
    # rows sqrt(D) e_i give rho = I / D, where the Hessian is the identity
    dims = (2, 3)
    D = 6
    x = Dataset(dims, np.sqrt(D) * np.eye(D))
    h = hessian_matrix(x, KronPoint.identity(dims))
    # rho = I/D and the cross terms vanish on traceless inputs
    np.testing.assert_allclose(h, np.eye(h.shape[0]), atol=1e-12)
    assert hessian_min_eig(x, KronPoint.identity(dims)) == pytest.approx(1.0, rel=1e-6)


def test_hessian_min_eig_matches_dense(rng):
    dims = (3, 3)
    x = random_dataset(rng, dims, 20)
    theta = KronPoint.identity(dims)
    dense = np.linalg.eigvalsh(hessian_matrix(x, theta))[0]
    assert hessian_min_eig(x, theta) == pytest.approx(dense, rel=1e-5)


def test_invariance_under_congruence(rng):
    dims = (2, 3)
    x = random_dataset(rng, dims, 4)
    theta = random_point(rng, dims)
    mats = [np.eye(d) + 0.3 * rng.standard_normal((d, d)) for d in dims]
    # f_{Ax}(A^{-T} Theta A^{-1}) = f_x(Theta) + (2/D) log |det A|
    y = x
    for a, m in enumerate(mats):
        y = mode_multiply(y, a, m)
    inv = [np.linalg.inv(m).T for m in mats]
    moved = theta.congruence(inv)
    logdet_a = sum(x.dims.D / d * np.linalg.slogdet(m)[1] for m, d in zip(mats, dims))
    assert f_value(y, moved) == pytest.approx(f_value(x, theta) + 2 * logdet_a / x.dims.D, rel=1e-10)


def test_geodesic_convexity(rng):
    dims = (2, 3)
    x = random_dataset(rng, dims, 2)
    theta = random_point(rng, dims)
    h = random_tangent(rng, dims)
    ts = np.linspace(-1, 1, 21)
    vals = np.array([f_value(x, exp_at(theta, t * h)) for t in ts])
    assert np.all(vals[:-2] - 2 * vals[1:-1] + vals[2:] >= -1e-12)
