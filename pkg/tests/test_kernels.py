"""Kernel bank: closed-form values, gradients, Gram properties, mixtures."""

import warnings

import numpy as np
import pytest

from flowkernels import kernels as kn
from flowkernels.errors import ConfigurationError

ALL_FAMILIES = [
    kn.GaussianKernel(gamma=1.0),
    kn.ExponentialKernel(gamma=1.0),
    kn.CauchyKernel(gamma=1.0),
    kn.InverseQuadraticKernel(gamma=1.0),
    kn.TriangularKernel(sigma=2.0),
    kn.SigmoidKernel(gamma=0.5, coef0=0.0),
    kn.PolynomialKernel(degree=3, coef0=1.0),
]


def random_pairs(n, dim, seed, scale=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(-scale, scale, (n, dim)), rng.uniform(-scale, scale, (n, dim))


# ----------------------------------------------------------------------------
# closed-form values
# ----------------------------------------------------------------------------

def test_gaussian_diagonal_is_one():
    k = kn.GaussianKernel(gamma=2.7)
    X, _ = random_pairs(20, 3, 0)
    np.testing.assert_allclose(k.eval(X, X), 1.0, atol=1e-15)


def test_polynomial_value_and_gradient():
    k = kn.PolynomialKernel(degree=2, coef0=0.5)
    x = np.array([1.0, 0.0])
    assert k.eval(x, x) == pytest.approx(2.25, abs=1e-15)
    np.testing.assert_allclose(k.grad_x(x, x), [3.0, 0.0], atol=1e-15)


def test_singular_kernel_values_and_domain():
    k = kn.Singular1dKernel()
    assert k.eval(np.array([0.5]), np.array([0.5])) == pytest.approx(1 / 3, abs=1e-15)
    g = k.grad_x(np.array([0.0]), np.array([0.5]))
    assert g[0] == pytest.approx(0.5773502691896258, abs=1e-15)
    with pytest.raises(ConfigurationError):
        k.eval(np.array([1.0]), np.array([0.5]))


def test_gaussian_lengthscale_conversion():
    k = kn.GaussianKernel(ell=0.3)
    assert k.gamma == pytest.approx(1.0 / 0.18)
    assert k.params["ell"] == 0.3
    with pytest.raises(ConfigurationError):
        kn.GaussianKernel(gamma=1.0, ell=0.3)
    with pytest.raises(ConfigurationError):
        kn.GaussianKernel()


def test_cauchy_matches_inverse_quadratic_at_unit_scale():
    c, q = kn.CauchyKernel(gamma=1.0), kn.InverseQuadraticKernel(gamma=1.0)
    X, Y = random_pairs(50, 2, 4)
    np.testing.assert_allclose(c.eval(X, Y), q.eval(X, Y), atol=1e-15)


def test_high_degree_warns():
    with pytest.warns(UserWarning):
        kn.PolynomialKernel(degree=7)


# ----------------------------------------------------------------------------
# symmetry / PSD / gradient agreement
# ----------------------------------------------------------------------------

@pytest.mark.parametrize("k", ALL_FAMILIES, ids=lambda k: k.family)
def test_symmetry(k):
    X, Y = random_pairs(1000, 2, 7)
    assert np.max(np.abs(k.eval(X, Y) - k.eval(Y, X))) <= 1e-12


def test_singular_symmetry():
    k = kn.Singular1dKernel()
    rng = np.random.default_rng(8)
    x, y = rng.uniform(-0.95, 0.95, (2, 500, 1))
    assert np.max(np.abs(k.eval(x, y) - k.eval(y, x))) <= 1e-12


@pytest.mark.parametrize(
    "k", [k for k in ALL_FAMILIES if k.psd_guaranteed], ids=lambda k: k.family
)
def test_gram_positive_semidefinite(k):
    for seed in range(3):
        rng = np.random.default_rng(seed)
        X = rng.uniform(-1, 1, (50, 2))
        G = kn.gram(k, X).values
        mineig = np.linalg.eigvalsh(G).min()
        assert mineig >= -1e-8 * G.diagonal().max()


def test_triangular_gram_psd_on_line():
    # compact-support cone kernel is a valid covariance in one dimension
    k = kn.TriangularKernel(sigma=0.8)
    X = np.linspace(-1, 1, 40)[:, None]
    G = kn.gram(k, X).values
    assert np.linalg.eigvalsh(G).min() >= -1e-8 * G.diagonal().max()


def test_singular_gram_is_rank_one():
    k = kn.Singular1dKernel()
    X = np.linspace(-0.9, 0.9, 30)[:, None]
    s = np.linalg.svd(kn.gram(k, X).values, compute_uv=False)
    assert s[1] <= 1e-10 * s[0]


@pytest.mark.parametrize("k", ALL_FAMILIES, ids=lambda k: k.family)
def test_gradient_matches_finite_differences(k):
    rng = np.random.default_rng(11)
    h = 1e-5
    checked = 0
    for _ in range(30):
        x, y = rng.uniform(-1, 1, (2, 2))
        r = np.linalg.norm(x - y)
        if not k.smooth and (r < 0.1 or abs(r - getattr(k, "sigma", np.inf)) < 0.05):
            continue  # keep away from kinks
        g = k.grad_x(x, y)
        gfd = np.empty(2)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            gfd[j] = (k.eval(x + e, y) - k.eval(x - e, y)) / (2 * h)
        denom = max(np.linalg.norm(gfd), 1e-8)
        assert np.linalg.norm(g - gfd) / denom <= 1e-5
        checked += 1
    assert checked >= 15


def test_singular_gradient_matches_fd():
    k = kn.Singular1dKernel()
    rng = np.random.default_rng(12)
    h = 1e-6
    for _ in range(20):
        x, y = rng.uniform(-0.9, 0.9, (2, 1))
        gfd = (k.eval(x + h, y) - k.eval(x - h, y)) / (2 * h)
        assert abs(k.grad_x(x, y)[0] - gfd) <= 1e-5 * max(abs(gfd), 1e-8)


def test_gaussian_gradient_vanishes_on_diagonal():
    k = kn.GaussianKernel(gamma=1.0)
    x = np.array([0.3, -0.4])
    np.testing.assert_allclose(k.grad_x(x, x), 0.0, atol=1e-15)


def test_triangular_edge_flag():
    k = kn.TriangularKernel(sigma=1.0)
    x, y = np.array([1.0, 0.0]), np.array([0.0, 0.0])
    g, hit = k.grad_x_flagged(x, y)
    assert hit
    np.testing.assert_allclose(g, [-1.0, 0.0], atol=1e-12)  # interior slope
    _, nohit = k.grad_x_flagged(np.array([0.5, 0.0]), y)
    assert not nohit


# ----------------------------------------------------------------------------
# Gram assembly
# ----------------------------------------------------------------------------

def test_gram_single_point():
    k = kn.PolynomialKernel(degree=2, coef0=0.5)
    G = kn.gram(k, np.array([[1.0, 0.0]]))
    assert G.values.shape == (1, 1)
    assert G.values[0, 0] == pytest.approx(2.25)


def test_gram_gaussian_strictly_positive():
    k = kn.GaussianKernel(gamma=1.0)
    X = np.linspace(-1, 1, 10)[:, None]
    assert np.linalg.eigvalsh(kn.gram(k, X).values).min() > 0


def test_rank_one_kernel_gram():
    xi = lambda x: x[..., 0] ** 2 - x[..., 1]
    k = kn.RankOneKernel(xi)
    rng = np.random.default_rng(13)
    X = rng.uniform(-1, 1, (25, 2))
    s = np.linalg.svd(k.pairwise(X), compute_uv=False)
    assert s[1] <= 1e-10 * s[0]


def test_rank_one_fd_gradient():
    xi = lambda x: np.sin(x[..., 0]) * x[..., 1]
    k = kn.RankOneKernel(xi)
    x, y = np.array([0.4, 0.7]), np.array([-0.2, 0.3])
    expected = xi(y) * np.array([np.cos(0.4) * 0.7, np.sin(0.4)])
    np.testing.assert_allclose(k.grad_x(x, y), expected, atol=1e-9)


# ----------------------------------------------------------------------------
# mixtures
# ----------------------------------------------------------------------------

def test_mixture_weight_validation():
    ks = [kn.GaussianKernel(gamma=1.0), kn.CauchyKernel(gamma=1.0)]
    with pytest.raises(ConfigurationError):
        kn.KernelMixture(ks, [0.5, 0.6])
    with pytest.raises(ConfigurationError):
        kn.KernelMixture(ks, [-0.1, 1.1])
    with pytest.raises(ConfigurationError):
        kn.KernelMixture(ks, [1.0])


def test_single_component_mixture_is_identity():
    k = kn.GaussianKernel(gamma=2.0)
    mix = kn.KernelMixture([k], [1.0])
    X, Y = random_pairs(20, 2, 14)
    np.testing.assert_allclose(mix.eval(X, Y), k.eval(X, Y), atol=0)
    np.testing.assert_allclose(mix.grad_x(X, Y), k.grad_x(X, Y), atol=0)


def test_two_gaussian_mixture_linearity():
    k1, k2 = kn.GaussianKernel(gamma=1.0), kn.GaussianKernel(gamma=3.0)
    mix = kn.KernelMixture([k1, k2], [0.3, 0.7])
    X, Y = random_pairs(10, 2, 15)
    np.testing.assert_allclose(
        mix.eval(X, Y), 0.3 * k1.eval(X, Y) + 0.7 * k2.eval(X, Y), atol=1e-15
    )


def test_mixture_gram_linearity():
    comps = [kn.GaussianKernel(gamma=1.0), kn.InverseQuadraticKernel(gamma=1.0),
             kn.PolynomialKernel(degree=2, coef0=1.0)]
    beta = np.array([0.2, 0.5, 0.3])
    mix = kn.KernelMixture(comps, beta)
    rng = np.random.default_rng(16)
    X = rng.uniform(-1, 1, (30, 2))
    direct = mix.pairwise(X)
    summed = sum(b * c.pairwise(X) for b, c in zip(beta, comps))
    assert np.max(np.abs(direct - summed)) <= 1e-14


def test_mixture_psd_flag_tracks_components():
    good = kn.KernelMixture([kn.GaussianKernel(gamma=1.0)], [1.0])
    assert good.psd_guaranteed
    bad = kn.KernelMixture(
        [kn.GaussianKernel(gamma=1.0), kn.SigmoidKernel(gamma=0.5)], [0.5, 0.5]
    )
    assert not bad.psd_guaranteed


def test_uniform_eleven_kernel_bank_weights():
    from flowkernels.mkl import default_kernel_bank

    bank = default_kernel_bank()
    assert len(bank) == 11
    beta = np.full(11, 1.0 / 11.0)
    mix = kn.KernelMixture(bank, beta)
    x = np.array([0.2, -0.1])
    expected = sum(k.eval(x, x) for k in bank) / 11.0
    assert mix.eval(x, x) == pytest.approx(expected, abs=1e-15)


def test_make_kernel_factory():
    k = kn.make_kernel("laplacian", gamma=2.0)
    assert isinstance(k, kn.ExponentialKernel)
    with pytest.raises(ConfigurationError):
        kn.make_kernel("spherical")
