"""Core statistical objects: data, parameter state, hyperparameters.

The model is Y = X B + noise with an n x p design X, an n x q response Y,
a p x q coefficient matrix B and a symmetric q x q precision matrix Omega
whose diagonal is constrained positive.  The samplers work with a
regression-based generalized likelihood whose log is, up to the constant,

    n * sum_j log(omega_jj) - (n q / 2) log(2 pi) - 1/2 sum_j ||(Y - XB) Omega_.j||^2

which is convex in B for fixed Omega and in Omega for fixed B.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import as_matrix, check_finite, rel_frobenius

HYPER_TRACE_COLUMNS = ("q1", "q2", "tau1_sq", "tau2_sq", "lam")


@dataclass(frozen=True)
class Dataset:
    """Immutable (X, Y) pair; X is n x p, Y is n x q."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = check_finite(as_matrix(self.X), "X")
        Y = check_finite(as_matrix(self.Y), "Y")
        if X.shape[0] != Y.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
        if min(X.shape[0], X.shape[1], Y.shape[1]) < 1:
            raise ValueError("n, p and q must all be at least 1")
        object.__setattr__(self, "X", np.ascontiguousarray(X))
        object.__setattr__(self, "Y", np.ascontiguousarray(Y))

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    @property
    def q(self) -> int:
        return self.Y.shape[1]


@dataclass
class Hyperparams:
    """Prior settings and sampler controls.

    q1, q2 are the slab mixing probabilities for B entries and Omega
    off-diagonals; tau1_sq, tau2_sq the slab variances; lam the exponential
    rate on Omega diagonals; alpha, beta the Inverse-Gamma shape/rate of the
    step-1 noise variances.  The adaptive_* flags switch on conjugate
    hyperprior updates (Beta(1,1) for the mixing weights, Inverse-Gamma
    (1e-4, 1e-8) for the slab variances, Gamma(1e-4, 1e-8) for lam).

    per_entry_hyper (the default) redraws each entry's slab precision from
    its own diffuse conditional right before the entry update, which makes
    zero entries extremely sticky and suppresses noise-level false
    positives; it supersedes the shared adaptive_tau / adaptive_lambda
    updates.  Because sticky zeros also slow the initial switch-on of true
    entries, the first warmup_sweeps sweeps use the fixed shared slab
    variances instead, letting strong entries ignite before the sticky
    regime begins (warmup should not exceed burnin).
    """

    q1: float
    q2: float
    tau1_sq: float = 1.0
    tau2_sq: float = 1.0
    lam: float = 1.0
    alpha: float = 1.0
    beta: float = 1.0
    adaptive_q: bool = False
    adaptive_tau: bool = True
    adaptive_lambda: bool = False
    proposal_var: float = 0.001
    exact_mh: bool = True
    per_entry_hyper: bool = True
    warmup_sweeps: int = 50
    thin: int = 1
    burnin: int = 1000
    iters: int = 2000
    seed: int = 0

    def validate(self) -> "Hyperparams":
        for name in ("q1", "q2"):
            v = getattr(self, name)
            if not 0.0 < v < 1.0:
                raise ValueError(f"{name} must lie strictly in (0, 1), got {v}")
        for name in ("tau1_sq", "tau2_sq", "lam", "alpha", "beta", "proposal_var"):
            v = getattr(self, name)
            if not v > 0.0:
                raise ValueError(f"{name} must be > 0, got {v}")
        if self.burnin < 0:
            raise ValueError("burnin must be >= 0")
        if self.iters < 1:
            raise ValueError("iters must be >= 1")
        if self.thin < 1:
            raise ValueError("thin must be >= 1")
        if self.warmup_sweeps < 0:
            raise ValueError("warmup_sweeps must be >= 0")
        return self

    def with_(self, **kwargs) -> "Hyperparams":
        return replace(self, **kwargs).validate()


def default_hyperparams(p: int, q: int) -> Hyperparams:
    """Defaults: q1 = 1/p, q2 = 1/q (clipped into (1e-6, 1 - 1e-6)), unit slab
    variances with adaptive Inverse-Gamma updates, 1000 burn-in + 2000 kept."""
    if p < 1 or q < 1:
        raise ValueError("p and q must be at least 1")
    clip = lambda x: min(max(x, 1e-6), 1.0 - 1e-6)
    return Hyperparams(q1=clip(1.0 / p), q2=clip(1.0 / q)).validate()


class ModelState:
    """Current (B, Omega) plus derived caches.

    Caches are None when invalid; consumers assert validity through
    :meth:`require`.  Valid caches satisfy their defining identities to 1e-9
    relative Frobenius error (checked by :meth:`cache_errors`):

        XtX = X^T X          XtY = X^T Y
        OmegaSq = Omega^2    M1 = XtY OmegaSq     M2 = B^T XtX
        E = Y - X B          S = E^T E
    """

    def __init__(self, B: np.ndarray, Omega: np.ndarray):
        B = check_finite(as_matrix(B), "B")
        Omega = check_finite(as_matrix(Omega), "Omega")
        if Omega.shape[0] != Omega.shape[1]:
            raise ValueError("Omega must be square")
        if B.shape[1] != Omega.shape[0]:
            raise ValueError("B column count must match Omega dimension")
        if not np.array_equal(Omega, Omega.T):
            raise ValueError("Omega must be exactly symmetric")
        if not np.all(np.diag(Omega) > 0.0):
            raise ValueError("Omega diagonal entries must be positive")
        self.B = np.ascontiguousarray(B)
        self.Omega = np.ascontiguousarray(Omega)
        self.XtX = None
        self.XtY = None
        self.OmegaSq = None
        self.M1 = None
        self.M2 = None
        self.E = None
        self.S = None

    @classmethod
    def initial(cls, data: Dataset) -> "ModelState":
        """Default starting point: B = 0, Omega = I."""
        return cls(np.zeros((data.p, data.q)), np.eye(data.q))

    # ------------------------------------------------------------------
    # cache maintenance
    # ------------------------------------------------------------------
    def refresh_design(self, data: Dataset) -> None:
        self.XtX = np.ascontiguousarray(data.X.T @ data.X)
        self.XtY = np.ascontiguousarray(data.X.T @ data.Y)

    def refresh_omega_sq(self) -> None:
        self.OmegaSq = np.ascontiguousarray(self.Omega @ self.Omega)

    def refresh_m1m2(self, data: Dataset) -> None:
        if self.XtX is None or self.XtY is None:
            self.refresh_design(data)
        if self.OmegaSq is None:
            self.refresh_omega_sq()
        self.M1 = np.ascontiguousarray(self.XtY @ self.OmegaSq)
        self.M2 = np.ascontiguousarray(self.B.T @ self.XtX)

    def refresh_residual(self, data: Dataset) -> None:
        self.E = np.ascontiguousarray(data.Y - data.X @ self.B)
        self.S = np.ascontiguousarray(self.E.T @ self.E)

    def invalidate(self, *names: str) -> None:
        for name in names:
            setattr(self, name, None)

    def require(self, *names: str) -> None:
        missing = [n for n in names if getattr(self, n) is None]
        if missing:
            raise ValueError(f"required caches are invalid: {', '.join(missing)}")

    def cache_errors(self, data: Dataset) -> dict:
        """Relative Frobenius error of every valid cache against its definition."""
        errs = {}
        if self.OmegaSq is not None:
            errs["OmegaSq"] = rel_frobenius(self.OmegaSq, self.Omega @ self.Omega)
        if self.M1 is not None and self.XtY is not None:
            errs["M1"] = rel_frobenius(self.M1, self.XtY @ (self.Omega @ self.Omega))
        if self.M2 is not None and self.XtX is not None:
            errs["M2"] = rel_frobenius(self.M2, self.B.T @ self.XtX)
        if self.E is not None:
            errs["E"] = rel_frobenius(self.E, data.Y - data.X @ self.B)
        if self.S is not None:
            fresh = data.Y - data.X @ self.B
            errs["S"] = rel_frobenius(self.S, fresh.T @ fresh)
        return errs


def residual_matrix(data: Dataset, B) -> np.ndarray:
    """E = Y - X B."""
    B = as_matrix(B)
    if B.shape != (data.p, data.q):
        raise ValueError(f"B must be {data.p} x {data.q}, got {B.shape}")
    return data.Y - data.X @ B


def scatter_matrix(E) -> np.ndarray:
    """S = E^T E, symmetric positive semidefinite."""
    E = as_matrix(E)
    S = E.T @ E
    return 0.5 * (S + S.T)


def log_gen_likelihood_joint(data: Dataset, state: ModelState) -> float:
    """Log generalized likelihood (diagnostics and tests only; the samplers
    never evaluate it)."""
    diag = np.diag(state.Omega)
    if not np.all(diag > 0.0):
        raise ValueError("Omega diagonal entries must be positive")
    E = residual_matrix(data, state.B)
    quad = float(np.sum((E @ state.Omega) ** 2))
    n, q = data.n, data.q
    return float(n * np.sum(np.log(diag)) - 0.5 * n * q * np.log(2.0 * np.pi) - 0.5 * quad)
