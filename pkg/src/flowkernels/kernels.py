"""Base kernels with analytic first derivatives, Gram assembly, mixtures.

Each family implements elementwise-vectorized ``eval`` and ``grad_x`` (the
gradient in the first argument); pairwise matrices are produced by
broadcasting, which is fast enough for the grid sizes this library targets
(a few thousand points).  Families flagged ``psd_guaranteed = False``
(sigmoid, and triangular outside 1-D) are admitted everywhere but skipped
by positive-semidefiniteness checks.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

__all__ = [
    "Kernel",
    "GaussianKernel",
    "ExponentialKernel",
    "CauchyKernel",
    "InverseQuadraticKernel",
    "TriangularKernel",
    "SigmoidKernel",
    "PolynomialKernel",
    "Singular1dKernel",
    "RankOneKernel",
    "KernelMixture",
    "GramMatrix",
    "make_kernel",
    "gram",
    "kernel_family_names",
]


def _as2d(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    return X


class Kernel:
    """Interface: symmetric k(x, y) with gradient in the first argument."""

    family: str = "abstract"
    psd_guaranteed: bool = True
    smooth: bool = True

    def __init__(self, **params):
        self.params = params

    def eval(self, x, y):
        raise NotImplementedError

    def grad_x(self, x, y):
        raise NotImplementedError

    def grad_x_flagged(self, x, y):
        """Gradient plus a flag marking evaluation on a non-smooth locus."""
        return self.grad_x(x, y), False

    # pairwise helpers -------------------------------------------------------

    def pairwise(self, X, Y=None):
        """Matrix k(X[i], Y[j]); Y defaults to X."""
        X = _as2d(X)
        Y = X if Y is None else _as2d(Y)
        if X.shape[1] != Y.shape[1]:
            raise ConfigurationError(
                f"point sets have dimensions {X.shape[1]} and {Y.shape[1]}"
            )
        return self.eval(X[:, None, :], Y[None, :, :])

    def grad_x_pairwise(self, X, Y=None):
        """Array of shape (n, m, d): gradient of k in x at (X[i], Y[j])."""
        X = _as2d(X)
        Y = X if Y is None else _as2d(Y)
        return self.grad_x(X[:, None, :], Y[None, :, :])

    def __repr__(self):
        inner = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"{type(self).__name__}({inner})"


def _diff_r2(x, y):
    d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return d, np.sum(d * d, axis=-1)


class GaussianKernel(Kernel):
    """k(x,y) = exp(-gamma ||x-y||^2); accepts gamma directly or a
    length-scale ell with gamma = 1/(2 ell^2)."""

    family = "gaussian"

    def __init__(self, gamma: float | None = None, ell: float | None = None):
        if (gamma is None) == (ell is None):
            raise ConfigurationError("gaussian kernel needs exactly one of gamma, ell")
        if ell is not None:
            if ell <= 0:
                raise ConfigurationError(f"ell must be positive, got {ell}")
            gamma = 1.0 / (2.0 * ell * ell)
        if gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        super().__init__(gamma=float(gamma), ell=ell)
        self.gamma = float(gamma)

    def eval(self, x, y):
        _, r2 = _diff_r2(x, y)
        return np.exp(-self.gamma * r2)

    def grad_x(self, x, y):
        d, r2 = _diff_r2(x, y)
        return -2.0 * self.gamma * d * np.exp(-self.gamma * r2)[..., None]


class ExponentialKernel(Kernel):
    """k(x,y) = exp(-gamma ||x-y||).  Also registered as "laplacian";
    the two names share this one formula."""

    family = "exponential"
    smooth = False  # kink on the diagonal

    def __init__(self, gamma: float = 1.0):
        if gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        super().__init__(gamma=float(gamma))
        self.gamma = float(gamma)

    def eval(self, x, y):
        _, r2 = _diff_r2(x, y)
        return np.exp(-self.gamma * np.sqrt(r2))

    def grad_x(self, x, y):
        d, r2 = _diff_r2(x, y)
        r = np.sqrt(r2)
        safe = np.where(r > 0, r, 1.0)
        g = -self.gamma * np.exp(-self.gamma * r) / safe
        return np.where(r[..., None] > 0, g[..., None] * d, 0.0)


class CauchyKernel(Kernel):
    """k(x,y) = 1 / (1 + ||x-y||^2 / gamma^2)  (Cauchy-distribution scale)."""

    family = "cauchy"

    def __init__(self, gamma: float = 1.0):
        if gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        super().__init__(gamma=float(gamma))
        self.gamma = float(gamma)

    def eval(self, x, y):
        _, r2 = _diff_r2(x, y)
        return 1.0 / (1.0 + r2 / self.gamma ** 2)

    def grad_x(self, x, y):
        d, r2 = _diff_r2(x, y)
        k = 1.0 / (1.0 + r2 / self.gamma ** 2)
        return (-2.0 / self.gamma ** 2) * d * (k * k)[..., None]


class InverseQuadraticKernel(Kernel):
    """k(x,y) = 1 / (1 + gamma ||x-y||^2); coincides with cauchy at gamma=1."""

    family = "inverse_quadratic"

    def __init__(self, gamma: float = 1.0):
        if gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        super().__init__(gamma=float(gamma))
        self.gamma = float(gamma)

    def eval(self, x, y):
        _, r2 = _diff_r2(x, y)
        return 1.0 / (1.0 + self.gamma * r2)

    def grad_x(self, x, y):
        d, r2 = _diff_r2(x, y)
        k = 1.0 / (1.0 + self.gamma * r2)
        return -2.0 * self.gamma * d * (k * k)[..., None]


class TriangularKernel(Kernel):
    """Compactly supported cone k(x,y) = max(0, 1 - ||x-y|| / sigma).

    Positive semidefinite on the line but not in general dimension, so PSD
    checks treat it like the sigmoid.  At the support edge ||x-y|| = sigma
    the gradient is the one-sided limit from inside the support, and
    ``grad_x_flagged`` reports the hit.
    """

    family = "triangular"
    smooth = False
    psd_guaranteed = False

    def __init__(self, sigma: float = 1.0):
        if sigma <= 0:
            raise ConfigurationError(f"sigma must be positive, got {sigma}")
        super().__init__(sigma=float(sigma))
        self.sigma = float(sigma)

    def eval(self, x, y):
        _, r2 = _diff_r2(x, y)
        return np.maximum(0.0, 1.0 - np.sqrt(r2) / self.sigma)

    def grad_x(self, x, y):
        d, r2 = _diff_r2(x, y)
        r = np.sqrt(r2)
        safe = np.where(r > 0, r, 1.0)
        inside = (r <= self.sigma) & (r > 0)  # edge uses interior one-sided slope
        g = np.where(inside, -1.0 / (self.sigma * safe), 0.0)
        return g[..., None] * d

    def grad_x_flagged(self, x, y):
        _, r2 = _diff_r2(x, y)
        hit = bool(np.any(np.isclose(np.sqrt(r2), self.sigma, rtol=0.0, atol=1e-12)))
        return self.grad_x(x, y), hit


class SigmoidKernel(Kernel):
    """k(x,y) = tanh(gamma <x,y> + coef0); indefinite, admitted anyway."""

    family = "sigmoid"
    psd_guaranteed = False

    def __init__(self, gamma: float = 1.0, coef0: float = 0.0):
        if gamma <= 0:
            raise ConfigurationError(f"gamma must be positive, got {gamma}")
        super().__init__(gamma=float(gamma), coef0=float(coef0))
        self.gamma = float(gamma)
        self.coef0 = float(coef0)

    def eval(self, x, y):
        s = np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)
        return np.tanh(self.gamma * s + self.coef0)

    def grad_x(self, x, y):
        y = np.asarray(y, dtype=float)
        k = self.eval(x, y)
        return (self.gamma * (1.0 - k * k))[..., None] * np.broadcast_to(
            y, np.broadcast_shapes(np.shape(x), np.shape(y))
        )


class PolynomialKernel(Kernel):
    """k(x,y) = (<x,y> + coef0)^degree."""

    family = "polynomial"

    def __init__(self, degree: int = 2, coef0: float = 1.0):
        if int(degree) != degree or degree < 1:
            raise ConfigurationError(f"degree must be a positive integer, got {degree}")
        if coef0 < 0:
            raise ConfigurationError(f"coef0 must be nonnegative, got {coef0}")
        if degree > 6:
            warnings.warn(
                f"polynomial degree {degree} is outside the tested range 2..6",
                stacklevel=2,
            )
        super().__init__(degree=int(degree), coef0=float(coef0))
        self.degree = int(degree)
        self.coef0 = float(coef0)

    def eval(self, x, y):
        s = np.sum(np.asarray(x, dtype=float) * np.asarray(y, dtype=float), axis=-1)
        return (s + self.coef0) ** self.degree

    def grad_x(self, x, y):
        y = np.asarray(y, dtype=float)
        s = np.sum(np.asarray(x, dtype=float) * y, axis=-1)
        c = self.degree * (s + self.coef0) ** (self.degree - 1)
        return c[..., None] * np.broadcast_to(
            y, np.broadcast_shapes(np.shape(x), np.shape(y))
        )


class Singular1dKernel(Kernel):
    """Rank-one kernel p(x) p(y) with p(x) = x / sqrt(1 - x^2) on (-1, 1).

    The factor blows up at the interval ends, which is exactly the point:
    it spans functions with the boundary growth that bounded smooth kernels
    cannot reach.
    """

    family = "singular_1d"

    def _p(self, x):
        x = np.asarray(x, dtype=float)
        v = x[..., 0] if x.ndim and x.shape[-1] == 1 else x
        if np.any(np.abs(v) >= 1.0):
            raise ConfigurationError("singular_1d kernel is defined on |x| < 1 only")
        return v / np.sqrt(1.0 - v * v)

    def _dp(self, x):
        x = np.asarray(x, dtype=float)
        v = x[..., 0] if x.ndim and x.shape[-1] == 1 else x
        return (1.0 - v * v) ** -1.5

    def eval(self, x, y):
        return self._p(x) * self._p(y)

    def grad_x(self, x, y):
        return (self._p(y) * self._dp(x))[..., None]


class RankOneKernel(Kernel):
    """k(x,y) = xi(x) xi(y) for a scalar function xi of the state.

    The gradient uses an analytic ``xi_grad`` when supplied, otherwise
    central finite differences with the given step.
    """

    family = "rank_one"

    def __init__(self, xi, xi_grad=None, fd_step: float = 1e-5):
        super().__init__(fd_step=fd_step)
        self.xi = xi
        self.xi_grad = xi_grad
        self.fd_step = float(fd_step)

    def eval(self, x, y):
        return np.asarray(self.xi(np.asarray(x, dtype=float))) * np.asarray(
            self.xi(np.asarray(y, dtype=float))
        )

    def _grad_xi(self, x):
        x = np.asarray(x, dtype=float)
        if self.xi_grad is not None:
            return np.asarray(self.xi_grad(x))
        h = self.fd_step
        flat = x.reshape(-1, x.shape[-1])
        g = np.empty_like(flat)
        for j in range(flat.shape[1]):
            e = np.zeros(flat.shape[1])
            e[j] = h
            g[:, j] = (
                np.asarray(self.xi(flat + e)) - np.asarray(self.xi(flat - e))
            ) / (2.0 * h)
        return g.reshape(x.shape)

    def grad_x(self, x, y):
        xiy = np.asarray(self.xi(np.asarray(y, dtype=float)))
        return xiy[..., None] * self._grad_xi(x)

    def pairwise(self, X, Y=None):
        X = _as2d(X)
        Y = X if Y is None else _as2d(Y)
        return np.outer(np.asarray(self.xi(X)), np.asarray(self.xi(Y)))

    def grad_x_pairwise(self, X, Y=None):
        X = _as2d(X)
        Y = X if Y is None else _as2d(Y)
        return np.asarray(self.xi(Y))[None, :, None] * self._grad_xi(X)[:, None, :]


class KernelMixture(Kernel):
    """Convex combination sum_l beta_l k_l with beta on the simplex."""

    family = "mixture"

    def __init__(self, components, weights):
        beta = np.asarray(weights, dtype=float)
        if len(components) != beta.size:
            raise ConfigurationError("weights and components must match in length")
        if np.any(beta < 0):
            raise ConfigurationError("mixture weights must be nonnegative")
        if abs(beta.sum() - 1.0) > 1e-12:
            raise ConfigurationError(
                f"mixture weights must sum to 1 within 1e-12, got {beta.sum()!r}"
            )
        super().__init__(weights=tuple(beta))
        self.components = list(components)
        self.weights = beta
        self.psd_guaranteed = all(c.psd_guaranteed for c in components)
        self.smooth = all(c.smooth for c in components)

    def eval(self, x, y):
        return sum(b * c.eval(x, y) for b, c in zip(self.weights, self.components))

    def grad_x(self, x, y):
        return sum(b * c.grad_x(x, y) for b, c in zip(self.weights, self.components))

    def pairwise(self, X, Y=None):
        return sum(b * c.pairwise(X, Y) for b, c in zip(self.weights, self.components))

    def grad_x_pairwise(self, X, Y=None):
        return sum(
            b * c.grad_x_pairwise(X, Y) for b, c in zip(self.weights, self.components)
        )


@dataclass(frozen=True)
class GramMatrix:
    """Kernel matrix on a fixed point set, kept with its provenance."""

    values: np.ndarray
    points: np.ndarray
    kernel: Kernel

    @property
    def shape(self):
        return self.values.shape


def gram(kernel: Kernel, points) -> GramMatrix:
    """Assemble the symmetric Gram matrix K_ij = k(x_i, x_j)."""
    X = _as2d(points)
    K = kernel.pairwise(X)
    return GramMatrix(values=K, points=X, kernel=kernel)


_FAMILIES = {
    "gaussian": GaussianKernel,
    "rbf": GaussianKernel,
    "exponential": ExponentialKernel,
    "laplacian": ExponentialKernel,
    "cauchy": CauchyKernel,
    "inverse_quadratic": InverseQuadraticKernel,
    "triangular": TriangularKernel,
    "sigmoid": SigmoidKernel,
    "polynomial": PolynomialKernel,
    "singular_1d": Singular1dKernel,
}


def kernel_family_names() -> list[str]:
    return sorted(set(_FAMILIES) - {"rbf", "laplacian"})


def make_kernel(family: str, **hyper) -> Kernel:
    """Construct a kernel by family tag, e.g. make_kernel("gaussian", gamma=1)."""
    fam = family.strip().lower()
    if fam not in _FAMILIES:
        raise ConfigurationError(
            f"unknown kernel family {family!r}; available: {', '.join(kernel_family_names())}"
        )
    return _FAMILIES[fam](**hyper)
