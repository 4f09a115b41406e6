"""Prior distributions: uniform boxes (optionally reparameterized) and the
normal-inverse-Wishart prior used for drift/volatility estimation.

ABC only ever samples from the prior, so no densities are implemented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cholesky, solve_triangular
from scipy.special import gammaincinv

from .rng import SeedSpec, as_sampler


def _chi2_ppf(u, df):
    return 2.0 * gammaincinv(np.asarray(df, dtype=float) / 2.0, u)


@dataclass(frozen=True)
class AffineMap:
    """theta_model = matrix @ draw + offset; must be invertible."""

    matrix: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        b = np.asarray(self.offset, dtype=float).ravel()
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != b.size:
            raise ValueError("affine map needs a square matrix and matching offset")
        if abs(np.linalg.det(m)) < 1e-12:
            raise ValueError("affine map must be invertible")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "offset", b)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return self.matrix @ x + self.offset


def mg1_gap_map() -> AffineMap:
    """(a, gap, rate) -> (a, a + gap, rate): enforces theta2 >= theta1."""
    return AffineMap(np.array([[1.0, 0, 0], [1.0, 1.0, 0], [0, 0, 1.0]]),
                     np.zeros(3))


@dataclass(frozen=True)
class UniformBoxPrior:
    lower: np.ndarray
    upper: np.ndarray
    transform: Optional[AffineMap] = None

    def __post_init__(self):
        lo = np.asarray(self.lower, dtype=float).ravel()
        hi = np.asarray(self.upper, dtype=float).ravel()
        if lo.size != hi.size or lo.size == 0:
            raise ValueError("lower/upper must be non-empty and equal length")
        if not np.all(lo < hi):
            raise ValueError("uniform box needs lower[i] < upper[i]")
        if self.transform is not None and self.transform.matrix.shape[0] != lo.size:
            raise ValueError("transform dimension does not match the box")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @property
    def dim(self) -> int:
        return self.lower.size


def sample_uniform_box(prior: UniformBoxPrior, seed) -> np.ndarray:
    sampler = as_sampler(seed)
    u = sampler.uniforms(prior.dim)
    draw = prior.lower + (prior.upper - prior.lower) * u
    if prior.transform is not None:
        draw = prior.transform(draw)
    return draw


@dataclass(frozen=True)
class NIWPrior:
    """Normal-inverse-Wishart prior on (mu, Sigma).

    Sigma ~ InvWishart(phi, nu), then mu | Sigma ~ N(mu0, Sigma / lam).
    """

    mu0: np.ndarray
    lam: float
    phi: np.ndarray
    nu: float

    def __post_init__(self):
        mu0 = np.asarray(self.mu0, dtype=float).ravel()
        phi = np.asarray(self.phi, dtype=float)
        d = mu0.size
        if phi.shape != (d, d) or not np.allclose(phi, phi.T):
            raise ValueError("phi must be a symmetric d x d matrix")
        if np.any(np.linalg.eigvalsh(phi) <= 0):
            raise ValueError("phi must be positive definite")
        if self.lam <= 0:
            raise ValueError("lam must be positive")
        if self.nu < d:
            raise ValueError("nu must be at least the dimension")
        object.__setattr__(self, "mu0", mu0)
        object.__setattr__(self, "phi", phi)

    @property
    def dim(self) -> int:
        return self.mu0.size

    def _bartlett_scale(self) -> np.ndarray:
        """c with c c' = phi^{-1}, fixed across draws."""
        l_phi = cholesky(self.phi, lower=True)
        return solve_triangular(l_phi.T, np.eye(self.dim), lower=False)


@dataclass(frozen=True)
class NIWDraw:
    mu: np.ndarray
    sigma: np.ndarray
    root: np.ndarray  # lower triangular, root @ root.T == sigma


def sample_niw(prior: NIWPrior, seed, max_attempts: int = 100) -> NIWDraw:
    """Bartlett sampler for the inverse Wishart, then the conditional normal.

    Draws (in stream order): d uniforms for the Bartlett chi-square diagonal,
    d(d-1)/2 Gaussians below the diagonal, then d Gaussians for mu.  The
    Wishart factor is inverted by triangular solves only; a draw that is
    singular to working precision is rejected and redrawn.
    """
    sampler = as_sampler(seed)
    d = prior.dim
    # c satisfies c c' = phi^{-1}: Bartlett scale for Wishart(phi^{-1}, nu).
    c = prior._bartlett_scale()

    dfs = prior.nu - np.arange(d)
    for _ in range(max_attempts):
        a = np.zeros((d, d))
        u = sampler.uniforms(d)
        a[np.diag_indices(d)] = np.sqrt(_chi2_ppf(np.maximum(u, 2.0 ** -55),
                                                  dfs))
        if d > 1:
            a[np.tril_indices(d, -1)] = sampler.gaussians(d * (d - 1) // 2)
        m = c @ a  # m m' ~ Wishart(phi^{-1}, nu)
        if np.min(np.abs(np.diag(m))) < 1e-154:
            continue
        g = solve_triangular(m.T, np.eye(d), lower=False)  # g g' = (m m')^{-1}
        sigma = g @ g.T
        try:
            root = cholesky(sigma, lower=True)
        except np.linalg.LinAlgError:
            continue
        mu = prior.mu0 + (root @ sampler.gaussians(d)) / np.sqrt(prior.lam)
        return NIWDraw(mu=mu, sigma=sigma, root=root)
    raise RuntimeError("inverse-Wishart draw singular to working precision")


def niw_draw_to_theta(draw: NIWDraw) -> np.ndarray:
    """Flatten (mu, lower-triangular root) to the engine's parameter vector.

    Layout for d assets: (mu_1..mu_d, root[0,0], root[1,0], root[1,1], ...)
    i.e. the root rows in row-major order, lower triangle only.
    """
    d = draw.mu.size
    tril = draw.root[np.tril_indices(d)]
    return np.concatenate([draw.mu, tril])


def theta_to_mu_root(theta: np.ndarray, d: int) -> tuple[np.ndarray, np.ndarray]:
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.size != d + d * (d + 1) // 2:
        raise ValueError("parameter vector length does not match asset count")
    mu = theta[:d]
    root = np.zeros((d, d))
    root[np.tril_indices(d)] = theta[d:]
    return mu, root


def sample_niw_theta(prior: NIWPrior, seed) -> np.ndarray:
    return niw_draw_to_theta(sample_niw(prior, seed))
