"""Discrete kernel eigendecompositions on weighted grids.

Three related facilities: a Nystrom-style Mercer decomposition of any
kernel (or precomputed Gram matrix) under a weighted discrete inner
product; a finite-rank check that a kernel assembled from orthonormal
eigenfunctions has unit eigenvalues; and a trajectory-integral check
that flowing an eigenfunction backward and integrating e^{-lam t}
against it reproduces the function divided by twice its rate.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dynamics import IntegratorConfig, SystemDef, flow
from .errors import ConfigurationError, FlowEscapeError, NumericalError
from .kernels import Kernel

__all__ = [
    "MercerDecomposition",
    "mercer_decompose",
    "ModeCheckReport",
    "koopman_mode_check",
    "TrajectoryCheckReport",
    "trajectory_eigenrelation_check",
]


@dataclass(frozen=True)
class MercerDecomposition:
    """Eigenpairs of the weighted kernel operator on a grid.

    Modes are stored as columns, orthonormal under the weighted discrete
    inner product <u, v> = sum_i w_i u_i v_i.
    """

    eigenvalues: np.ndarray
    modes: np.ndarray
    grid: np.ndarray
    weights: np.ndarray
    indefinite: bool = False

    def reconstruction(self) -> np.ndarray:
        """Sum of mu_n psi_n psi_n^T over all kept modes."""
        return (self.modes * self.eigenvalues) @ self.modes.T


def mercer_decompose(kernel, grid=None, weights=None) -> MercerDecomposition:
    """Weighted discrete Mercer decomposition.

    kernel may be a Kernel (evaluated pairwise on grid) or a precomputed
    symmetric Gram matrix.  Weights default to uniform 1/N.  Small
    negative eigenvalues (within 1e-8 of the top one, relatively) are
    clipped to zero; anything more negative marks the decomposition
    indefinite and raises a warning, since genuinely indefinite kernels
    are legitimate inputs here.
    """
    if isinstance(kernel, Kernel):
        if grid is None:
            raise ConfigurationError("grid required when a kernel object is passed")
        G = np.atleast_2d(np.asarray(grid, dtype=float))
        if G.ndim == 1:
            G = G[:, None]
        K = kernel.pairwise(G, G)
    else:
        K = np.asarray(kernel, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise ConfigurationError("precomputed Gram matrix must be square")
        G = np.arange(K.shape[0], dtype=float)[:, None] if grid is None else \
            np.atleast_2d(np.asarray(grid, dtype=float))
    n = K.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float).ravel()
    if w.shape != (n,) or np.any(w <= 0):
        raise ConfigurationError("weights must be positive and match the grid size")

    sw = np.sqrt(w)
    S = sw[:, None] * K * sw[None, :]
    S = 0.5 * (S + S.T)
    mu, V = np.linalg.eigh(S)
    mu, V = mu[::-1].copy(), V[:, ::-1].copy()

    top = mu[0] if n else 0.0
    indefinite = False
    if top > 0:
        bad = mu < -1e-4 * top
        if np.any(bad):
            indefinite = True
            warnings.warn(
                f"kernel is indefinite on this grid (most negative eigenvalue "
                f"{mu.min():.3e} vs top {top:.3e})",
                RuntimeWarning,
                stacklevel=2,
            )
        mu = np.where((mu < 0) & (mu >= -1e-8 * top), 0.0, mu)
    modes = V / sw[:, None]
    return MercerDecomposition(eigenvalues=mu, modes=modes, grid=G, weights=w,
                               indefinite=indefinite)


@dataclass(frozen=True)
class ModeCheckReport:
    m: int
    eigenvalues: np.ndarray
    spectrum_deviation: float   # max over |mu_i - 1| (i < m) and |mu_i| (i >= m)
    subspace_angle: float       # radians between Mercer modes and input span


def _orthonormalize_weighted(values: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt under the weighted inner product; rows in, rows out."""
    out = []
    for i, v in enumerate(values):
        u = v.astype(float).copy()
        for q in out:
            u -= np.sum(w * u * q) * q
        norm = np.sqrt(np.sum(w * u * u))
        if norm <= 1e-10 * max(1.0, np.sqrt(np.sum(w * v * v))):
            raise ConfigurationError(
                f"eigenfunction values are rank deficient on the grid (row {i})"
            )
        out.append(u / norm)
    return np.array(out) if out else np.empty((0, len(w)))


def koopman_mode_check(eigenfunction_values, weights=None, grid=None) -> ModeCheckReport:
    """Finite-rank spectrum test.

    Orthonormalizes the supplied eigenfunction values under the weighted
    inner product, forms the rank-m kernel sum of their outer products,
    and verifies its discrete Mercer spectrum is m ones followed by zeros.
    """
    vals = np.atleast_2d(np.asarray(eigenfunction_values, dtype=float))
    if vals.size == 0:
        vals = vals.reshape(0, 0 if weights is None else len(weights))
    m, n = vals.shape
    if weights is None:
        if n == 0:
            raise ConfigurationError("need weights or nonempty eigenfunction values")
        weights = np.full(n, 1.0 / n)
    w = np.asarray(weights, dtype=float).ravel()
    if m > len(w):
        raise ConfigurationError("more eigenfunctions than grid points")

    if m == 0:
        K = np.zeros((len(w), len(w)))
        dec = mercer_decompose(K, grid=grid, weights=w)
        return ModeCheckReport(
            m=0, eigenvalues=dec.eigenvalues,
            spectrum_deviation=float(np.max(np.abs(dec.eigenvalues))),
            subspace_angle=0.0,
        )

    phi = _orthonormalize_weighted(vals, w)
    K = phi.T @ phi
    dec = mercer_decompose(K, grid=grid, weights=w)
    mu = dec.eigenvalues
    dev = max(float(np.max(np.abs(mu[:m] - 1.0))), float(np.max(np.abs(mu[m:]))) if m < len(mu) else 0.0)

    # largest principal angle between the Mercer top-m modes and the input
    # span, via the projection residual (arcsin form stays accurate near 0,
    # where arccos of an overlap singular value loses half the digits)
    psi = dec.modes[:, :m]
    resid = psi - phi.T @ (phi @ (w[:, None] * psi))
    s2 = np.linalg.eigvalsh(resid.T @ (w[:, None] * resid)).max()
    angle = float(np.arcsin(np.sqrt(min(max(s2, 0.0), 1.0))))
    return ModeCheckReport(m=m, eigenvalues=mu, spectrum_deviation=dev, subspace_angle=angle)


@dataclass(frozen=True)
class TrajectoryCheckReport:
    max_deviation: float
    deviations: np.ndarray     # per included probe
    included: np.ndarray       # mask over probes
    lam: float
    T: float
    M: int


def trajectory_eigenrelation_check(
    system: SystemDef,
    phi: Callable,
    lam: float,
    probes,
    T: float,
    M: int,
    max_tail: float = 1e-8,
) -> TrajectoryCheckReport:
    """Checks 2*lam * integral_0^T e^{-lam t} phi(s_{-t}(x)) dt == phi(x).

    Valid for growing modes (lam > 0): the backward flow contracts the
    mode, so the integrand decays like e^{-2 lam t} and truncating at T
    leaves a tail of e^{-2 lam T}, required to sit below max_tail.
    Probes where |phi| < 1e-8 are excluded from the ratio.
    """
    if not lam > 0:
        raise ConfigurationError(f"relation requires a positive rate, got {lam}")
    if not (T > 0 and M >= 1):
        raise ConfigurationError("need T > 0 and M >= 1")
    tail = np.exp(-2.0 * lam * T)
    if tail > max_tail:
        raise ConfigurationError(
            f"horizon too short: truncation tail {tail:.3e} exceeds {max_tail:.1e}"
        )
    P = np.atleast_2d(np.asarray(probes, dtype=float))
    dt = T / M
    # half-step trajectory so odd-index states land on midpoint times
    cfg = IntegratorConfig(dt=0.5 * dt, M=2 * M)
    try:
        traj = flow(system, P, cfg, direction="backward")
    except FlowEscapeError as exc:
        raise NumericalError(
            f"inconclusive: backward flow escaped at t={exc.escape_time:.3g}"
        ) from exc
    mids = traj.states[1::2]                      # (M, P, dim)
    tmid = (np.arange(M) + 0.5) * dt
    vals = phi(mids.reshape(-1, P.shape[1])).reshape(M, -1)
    integral = dt * np.einsum("t,tp->p", np.exp(-lam * tmid), vals)

    phi0 = np.asarray(phi(P), dtype=float)
    included = np.abs(phi0) >= 1e-8
    if not np.any(included):
        raise NumericalError("inconclusive: every probe has |phi| below 1e-8")
    dev = np.abs(integral[included] * 2.0 * lam / phi0[included] - 1.0)
    return TrajectoryCheckReport(
        max_deviation=float(dev.max()), deviations=dev, included=included,
        lam=float(lam), T=float(T), M=int(M),
    )
