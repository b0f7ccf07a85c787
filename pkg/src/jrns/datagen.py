"""Synthetic data generation for the simulation study and arbitrary configs.

The generating model is Y = X B0 + noise with rows of X i.i.d. N(0, R0),
R0 = (ar_rho^|j-k|), and noise rows i.i.d. N(0, Omega0^{-1}).  Nonzero B0
entries are U(b_range); Omega0 off-diagonals are drawn from the symmetric
band +-omega_offdiag_range and diagonals from U(omega_diag_range); an
indefinite Omega0 draw is repaired by inflating the diagonal until the
smallest eigenvalue reaches 0.1 (redrawing would bias the off-diagonals).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import cholesky_lower, min_eigenvalue_sym
from .model import Dataset
from .rng import SeededRng

_PD_FLOOR = 0.1


@dataclass(frozen=True)
class SimConfig:
    n: int
    p: int
    q: int
    nnz_b: int
    nnz_omega: int
    ar_rho: float = 0.7
    b_range: tuple = (1.0, 2.0)
    omega_offdiag_range: tuple = (0.5, 1.0)
    omega_diag_range: tuple = (1.0, 2.0)
    seed: int = 0

    def __post_init__(self):
        if min(self.n, self.p, self.q) < 1:
            raise ValueError("n, p, q must all be at least 1")
        if not 0 <= self.nnz_b <= self.p * self.q:
            raise ValueError("nnz_b must lie in [0, p*q]")
        if not 0 <= self.nnz_omega <= self.q * (self.q - 1) // 2:
            raise ValueError("nnz_omega must lie in [0, q(q-1)/2]")
        if not 0.0 <= self.ar_rho < 1.0:
            raise ValueError("ar_rho must lie in [0, 1)")


@dataclass(frozen=True)
class GroundTruth:
    B0: np.ndarray
    Omega0: np.ndarray
    gamma_true: np.ndarray
    eta_true: np.ndarray


def preset_setting(k: int, seed: int = 0) -> SimConfig:
    """The six study settings: (n, p, q) with nonzero quotas p/5 or p/30 in B
    and q/5 in the Omega off-diagonals (non-integer quotas floor)."""
    table = {
        1: (100, 30, 60, 5),
        2: (100, 60, 30, 5),
        3: (150, 200, 200, 5),
        4: (150, 300, 300, 5),
        5: (100, 200, 200, 30),
        6: (200, 200, 200, 30),
    }
    if k not in table:
        raise ValueError(f"setting must be 1..6, got {k}")
    n, p, q, b_div = table[k]
    return SimConfig(n=n, p=p, q=q, nnz_b=p // b_div, nnz_omega=q // 5, seed=seed)


def gen_design(cfg: SimConfig, rng: SeededRng) -> np.ndarray:
    """n x p design with i.i.d. rows from N(0, (ar_rho^|j-k|)).

    Columns are built by the stationary AR(1) recursion
    x_j = rho x_{j-1} + sqrt(1 - rho^2) z_j, which is exact for this
    covariance and costs O(np) instead of a p x p Cholesky.
    """
    z = rng.normal_block((cfg.n, cfg.p))
    if cfg.ar_rho == 0.0 or cfg.p == 1:
        return z
    x = np.empty_like(z)
    x[:, 0] = z[:, 0]
    scale = np.sqrt(1.0 - cfg.ar_rho**2)
    for j in range(1, cfg.p):
        x[:, j] = cfg.ar_rho * x[:, j - 1] + scale * z[:, j]
    return x


def gen_truth(cfg: SimConfig, rng: SeededRng) -> GroundTruth:
    """Random sparsity patterns and magnitudes for (B0, Omega0)."""
    gen = rng.generator
    b0 = np.zeros((cfg.p, cfg.q))
    if cfg.nnz_b:
        flat = gen.choice(cfg.p * cfg.q, size=cfg.nnz_b, replace=False)
        lo, hi = cfg.b_range
        b0.flat[flat] = gen.uniform(lo, hi, size=cfg.nnz_b)
    gamma = (b0 != 0.0).astype(np.int64)

    omega0 = np.zeros((cfg.q, cfg.q))
    iu = np.triu_indices(cfg.q, k=1)
    if cfg.nnz_omega:
        pick = gen.choice(iu[0].size, size=cfg.nnz_omega, replace=False)
        lo, hi = cfg.omega_offdiag_range
        mags = gen.uniform(lo, hi, size=cfg.nnz_omega)
        signs = np.where(gen.random(cfg.nnz_omega) < 0.5, -1.0, 1.0)
        omega0[iu[0][pick], iu[1][pick]] = signs * mags
        omega0 += omega0.T
    dlo, dhi = cfg.omega_diag_range
    np.fill_diagonal(omega0, gen.uniform(dlo, dhi, size=cfg.q))
    ev = min_eigenvalue_sym(omega0)
    if ev <= _PD_FLOOR:
        omega0 += (_PD_FLOOR - ev) * np.eye(cfg.q)
    eta = (omega0 != 0.0).astype(np.int64)
    np.fill_diagonal(eta, 1)
    return GroundTruth(B0=b0, Omega0=omega0, gamma_true=gamma, eta_true=eta)


def gen_dataset(cfg: SimConfig, truth: GroundTruth, rng: SeededRng) -> Dataset:
    """X from gen_design plus Y = X B0 + noise, where each noise row solves
    L' u = z for L the Cholesky factor of Omega0 (so u is N(0, Omega0^{-1}))."""
    x = gen_design(cfg, rng)
    z = rng.normal_block((cfg.n, cfg.q))
    lower = cholesky_lower(truth.Omega0)
    eps = np.linalg.solve(lower.T, z.T).T
    return Dataset(X=x, Y=x @ truth.B0 + eps)


def simulate(cfg: SimConfig):
    """One deterministic seed-to-data path: (Dataset, GroundTruth) from cfg.seed."""
    rng = SeededRng(cfg.seed)
    truth = gen_truth(cfg, rng)
    data = gen_dataset(cfg, truth, rng)
    return data, truth
