"""Two-step sampler: q independent spike-and-slab regressions for B, then
the Omega machinery run on pseudo-errors.

Step 1 ignores cross-correlation between responses: each column of B gets a
univariate-noise regression with slab prior N(0, tau1^2 sigma_s^2) and an
Inverse-Gamma update for sigma_s^2.  Columns are conditionally independent
given the hyperparameters, so with the adaptive hyperpriors off every column
runs on its own derived stream and may execute concurrently.  Step 2 fixes
S = E_hat' E_hat once and reuses the joint sampler's Omega sweep verbatim.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .joint import (
    ChainOutput,
    MixtureUpdate,
    _log_odds,
    _mixture_prob,
    omega_sweep_core,
)
from .model import (
    HYPER_TRACE_COLUMNS,
    Dataset,
    Hyperparams,
    default_hyperparams,
    residual_matrix,
    scatter_matrix,
)
from .rng import SeededRng
from .summary import inclusion_probabilities, majority_vote_select

_HYPER_SHAPE = 1e-4
_HYPER_RATE = 1e-8


@dataclass
class Step1State:
    """Coefficients plus per-response noise variances (sigma_s^2 > 0)."""

    B: np.ndarray
    sigma_sq: np.ndarray

    def __post_init__(self):
        self.B = np.asarray(self.B, dtype=float)
        self.sigma_sq = np.asarray(self.sigma_sq, dtype=float).ravel()
        if self.B.shape[1] != self.sigma_sq.shape[0]:
            raise ValueError("sigma_sq length must match B column count")
        if not np.all(self.sigma_sq > 0.0):
            raise ValueError("all sigma_sq must be > 0")


@dataclass
class Step1Result:
    chain: ChainOutput
    gamma_hat: np.ndarray


@dataclass
class Step2Result:
    chain: ChainOutput
    eta_hat: np.ndarray


@dataclass
class StepwiseResult:
    step1: Step1Result
    b_hat: np.ndarray
    gamma_hat: np.ndarray
    step2: Step2Result
    eta_hat: np.ndarray


def step1_b_conditional(data: Dataset, state: Step1State, hp: Hyperparams,
                        r: int, s: int) -> MixtureUpdate:
    """Full conditional of B[r, s] in the individual-regressions model:
    C1 = sum_i x_ir^2 + 1/tau1^2, C2 = x_.r . (y_.s - X B_.s + x_.r b_rs),
    slab N(C2/C1, sigma_s^2/C1), exponent C2^2 / (2 sigma_s^2 C1)."""
    if not (0 <= r < data.p and 0 <= s < data.q):
        raise ValueError(f"entry ({r}, {s}) outside a {data.p} x {data.q} matrix")
    x_r = data.X[:, r]
    itau = 1.0 / hp.tau1_sq
    c1 = float(x_r @ x_r) + itau
    partial = data.Y[:, s] - data.X @ state.B[:, s] + x_r * state.B[r, s]
    c2 = float(x_r @ partial)
    sig = float(state.sigma_sq[s])
    prob = _mixture_prob(_log_odds(hp.q1), itau, c1, c2 * c2 / (2.0 * sig * c1))
    return MixtureUpdate(prob, c2 / c1, sig / c1)


def step1_sigma_update(data: Dataset, state: Step1State, hp: Hyperparams,
                       s: int, rng: SeededRng) -> float:
    """Draw sigma_s^2 from Inv-Gamma(alpha + (n + k)/2, beta + ||resid||^2/2
    + B_.s'B_.s/(2 tau1^2)) with k the nonzero count of column s."""
    b_col = state.B[:, s]
    resid = data.Y[:, s] - data.X @ b_col
    k = int(np.count_nonzero(b_col))
    a_star = hp.alpha + 0.5 * (data.n + k)
    b_star = hp.beta + 0.5 * float(resid @ resid) + 0.5 * float(b_col @ b_col) / hp.tau1_sq
    return rng.inverse_gamma(a_star, b_star)


def _init_sigma_sq(data: Dataset) -> np.ndarray:
    if data.n < 2:
        return np.ones(data.q)
    return np.maximum(np.var(data.Y, axis=0, ddof=1), 1e-12)


def _column_chain(data, hp, s, rng, xtx, xty_col, n_stored):
    """Full burnin + iters chain for one response column (fixed hyperparams)."""
    p = data.p
    b = np.zeros(p)
    vcache = np.zeros(p)
    sigma = float(_init_sigma_sq(data)[s])
    b_out = np.empty((n_stored, p))
    sig_out = np.empty(n_stored)
    log_odds = _log_odds(hp.q1)
    itau = 1.0 / hp.tau1_sq
    y_col = data.Y[:, s]
    keep = 0
    for it in range(hp.burnin + hp.iters):
        u = rng.uniform_block(p)
        z = rng.normal_block(p)
        kernels.sweep_step1_col(b, vcache, xty_col, xtx, sigma, log_odds, itau, u, z)
        resid = y_col - data.X @ b
        k = int(np.count_nonzero(b))
        a_star = hp.alpha + 0.5 * (data.n + k)
        b_star = hp.beta + 0.5 * float(resid @ resid) + 0.5 * float(b @ b) / hp.tau1_sq
        sigma = rng.inverse_gamma(a_star, b_star)
        if it >= hp.burnin and (it - hp.burnin) % hp.thin == 0:
            b_out[keep] = b
            sig_out[keep] = sigma
            keep += 1
    return b_out, sig_out


def run_step1(data: Dataset, hp: Hyperparams | None = None,
              rng: SeededRng | None = None,
              column_seeds=None, n_workers: int = 1) -> Step1Result:
    """Gibbs over all B entries (each column scanned in row order) and all
    sigma_s^2 per sweep; gamma_hat by majority vote on the stored draws.

    With adaptive_q and adaptive_tau both off, each column runs on its own
    derived stream and columns may run concurrently; adaptive hyperpriors
    couple the columns, forcing the sequential single-stream path.
    """
    hp = (hp or default_hyperparams(data.p, data.q)).validate()
    rng = rng or SeededRng(hp.seed)
    coupled = hp.adaptive_q or hp.adaptive_tau
    total = hp.burnin + hp.iters
    n_stored = len(range(hp.burnin, total, hp.thin))
    p, q = data.p, data.q
    xtx = np.ascontiguousarray(data.X.T @ data.X)
    xtyT = np.ascontiguousarray((data.X.T @ data.Y).T)  # row s = X'y_.s

    b_samples = np.empty((n_stored, p, q))
    sigma_samples = np.empty((n_stored, q))
    hyper_trace = np.empty((total, len(HYPER_TRACE_COLUMNS)))

    if not coupled:
        if column_seeds is not None:
            if len(column_seeds) != q:
                raise ValueError("column_seeds must have one seed per response")
            col_rngs = [SeededRng(sd) for sd in column_seeds]
        else:
            col_rngs = [rng.spawn(s) for s in range(q)]
        jobs = [(s, col_rngs[s]) for s in range(q)]
        run = lambda job: _column_chain(data, hp, job[0], job[1], xtx, xtyT[job[0]], n_stored)
        if n_workers > 1:
            with ThreadPoolExecutor(max_workers=n_workers) as pool:
                results = list(pool.map(run, jobs))
        else:
            results = [run(job) for job in jobs]
        for s, (b_out, sig_out) in enumerate(results):
            b_samples[:, :, s] = b_out
            sigma_samples[:, s] = sig_out
        hyper_trace[:] = [getattr(hp, name) for name in HYPER_TRACE_COLUMNS]
    else:
        if column_seeds is not None:
            raise ValueError("column_seeds requires the adaptive hyperpriors off")
        bT = np.zeros((q, p))
        vcaches = np.zeros((q, p))
        sigma = _init_sigma_sq(data)
        keep = 0
        for it in range(total):
            log_odds = _log_odds(hp.q1)
            itau = 1.0 / hp.tau1_sq
            for s in range(q):
                u = rng.uniform_block(p)
                z = rng.normal_block(p)
                kernels.sweep_step1_col(bT[s], vcaches[s], xtyT[s], xtx,
                                        float(sigma[s]), log_odds, itau, u, z)
                b_col = bT[s]
                resid = data.Y[:, s] - data.X @ b_col
                k = int(np.count_nonzero(b_col))
                a_star = hp.alpha + 0.5 * (data.n + k)
                b_star = (hp.beta + 0.5 * float(resid @ resid)
                          + 0.5 * float(b_col @ b_col) / hp.tau1_sq)
                sigma[s] = rng.inverse_gamma(a_star, b_star)
            hp = _update_step1_hypers(bT, sigma, hp, rng)
            hyper_trace[it] = [getattr(hp, name) for name in HYPER_TRACE_COLUMNS]
            if it >= hp.burnin and (it - hp.burnin) % hp.thin == 0:
                b_samples[keep] = bT.T
                sigma_samples[keep] = sigma
                keep += 1

    chain = ChainOutput(
        b_samples=b_samples,
        omega_samples=None,
        hyper_trace=hyper_trace,
        diag_accept_counts=None,
        mh_steps=0,
        iters_stored=n_stored,
        sigma_sq_samples=sigma_samples,
    )
    incl_b, _ = inclusion_probabilities(chain)
    gamma_hat = majority_vote_select(incl_b)
    return Step1Result(chain=chain, gamma_hat=gamma_hat)


def _update_step1_hypers(bT, sigma, hp: Hyperparams, rng: SeededRng) -> Hyperparams:
    """Conjugate updates for q1 and tau1^2 in the step-1 model.  The slab is
    N(0, tau1^2 sigma_s^2), so the tau update scales each squared nonzero by
    its column's 1/sigma_s^2."""
    updates = {}
    clip = lambda x: min(max(x, 1e-12), 1.0 - 1e-12)
    if hp.adaptive_q:
        k = int(np.count_nonzero(bT))
        updates["q1"] = clip(rng.beta(1.0 + k, 1.0 + bT.size - k))
    if hp.adaptive_tau:
        scaled = (bT * bT) / sigma[:, None]
        nz = bT != 0.0
        k = int(np.count_nonzero(nz))
        ss = float(scaled[nz].sum())
        itau = rng.gamma(_HYPER_SHAPE + 0.5 * k, _HYPER_RATE + 0.5 * ss)
        updates["tau1_sq"] = 1.0 / itau if itau > 0.0 else np.inf
    if not updates:
        return hp
    return hp.with_(**updates)


def posterior_mean_b(data: Dataset, gamma, tau1_sq: float) -> np.ndarray:
    """Closed-form posterior mean of B restricted to the active pattern:
    column k is zero off the active set and the ridge solution
    (X_a' X_a + I/tau1^2)^{-1} X_a' y_.k on it."""
    gamma = np.asarray(gamma)
    if gamma.shape != (data.p, data.q):
        raise ValueError(f"gamma must be {data.p} x {data.q}")
    ridge = 1.0 / tau1_sq if np.isfinite(tau1_sq) else 0.0
    out = np.zeros((data.p, data.q))
    for k in range(data.q):
        active = np.flatnonzero(gamma[:, k])
        if active.size == 0:
            continue
        xa = data.X[:, active]
        lhs = xa.T @ xa + ridge * np.eye(active.size)
        try:
            sol = np.linalg.solve(lhs, xa.T @ data.Y[:, k])
        except np.linalg.LinAlgError as exc:
            raise ValueError(f"singular system for column {k}: {exc}") from exc
        out[active, k] = sol
    return out


def pseudo_errors(data: Dataset, b_hat) -> np.ndarray:
    """E_hat = Y - X B_hat (shares the residual definition exactly)."""
    return residual_matrix(data, b_hat)


def run_step2(e_hat, hp: Hyperparams, rng: SeededRng | None = None) -> Step2Result:
    """Run the Omega sweep on pseudo-errors with S = E_hat' E_hat held fixed
    for the whole chain; eta_hat by majority vote."""
    e_hat = np.asarray(e_hat, dtype=float)
    if e_hat.ndim != 2:
        raise ValueError("pseudo-error matrix must be 2-D")
    hp = hp.validate()
    rng = rng or SeededRng(hp.seed)
    n, q = e_hat.shape
    S = np.ascontiguousarray(scatter_matrix(e_hat))
    Omega = np.eye(q)
    total = hp.burnin + hp.iters
    n_stored = len(range(hp.burnin, total, hp.thin))
    omega_samples = np.empty((n_stored, q, q))
    hyper_trace = np.empty((total, len(HYPER_TRACE_COLUMNS)))
    accepts = np.zeros(q, dtype=np.int64)
    keep = 0
    for it in range(total):
        omega_sweep_core(Omega, S, n, hp, rng, accepts)
        hp = _update_step2_hypers(Omega, hp, rng)
        hyper_trace[it] = [getattr(hp, name) for name in HYPER_TRACE_COLUMNS]
        if not np.all(np.isfinite(Omega)):
            raise ValueError(f"sampler produced non-finite values at iteration {it}")
        if it >= hp.burnin and (it - hp.burnin) % hp.thin == 0:
            omega_samples[keep] = Omega
            keep += 1
    chain = ChainOutput(
        b_samples=None,
        omega_samples=omega_samples,
        hyper_trace=hyper_trace,
        diag_accept_counts=accepts,
        mh_steps=total,
        iters_stored=n_stored,
    )
    _, incl_omega = inclusion_probabilities(chain)
    eta_hat = majority_vote_select(incl_omega)
    eta_hat = np.maximum(eta_hat, eta_hat.T)
    np.fill_diagonal(eta_hat, 1)
    return Step2Result(chain=chain, eta_hat=eta_hat)


def _update_step2_hypers(Omega, hp: Hyperparams, rng: SeededRng) -> Hyperparams:
    q = Omega.shape[0]
    updates = {}
    clip = lambda x: min(max(x, 1e-12), 1.0 - 1e-12)
    iu = np.triu_indices(q, k=1)
    if hp.adaptive_q:
        upper = Omega[iu]
        k = int(np.count_nonzero(upper))
        updates["q2"] = clip(rng.beta(1.0 + k, 1.0 + upper.size - k))
    if hp.adaptive_tau and not hp.per_entry_hyper:
        upper = Omega[iu]
        nz = upper[upper != 0.0]
        itau = rng.gamma(_HYPER_SHAPE + 0.5 * nz.size,
                         _HYPER_RATE + 0.5 * float(nz @ nz))
        updates["tau2_sq"] = 1.0 / itau if itau > 0.0 else np.inf
    if hp.adaptive_lambda and not hp.per_entry_hyper:
        updates["lam"] = rng.gamma(_HYPER_SHAPE + q,
                                   _HYPER_RATE + float(np.trace(Omega)))
    if not updates:
        return hp
    return hp.with_(**updates)


def run_stepwise(data: Dataset, hp: Hyperparams | None = None,
                 rng: SeededRng | None = None,
                 b_estimator: str = "ridge",
                 n_workers: int = 1) -> StepwiseResult:
    """Step 1 on the individual regressions, point estimate of B, pseudo-errors,
    then step 2 on Omega.  Deterministic given the seed.

    ``b_estimator`` picks the B estimate fed to step 2 (and reported):
    "ridge" is the closed-form posterior mean on the selected pattern,
    "mcmc" the conditional-on-inclusion average of the step-1 draws.
    """
    hp = (hp or default_hyperparams(data.p, data.q)).validate()
    rng = rng or SeededRng(hp.seed)
    if b_estimator not in ("ridge", "mcmc"):
        raise ValueError("b_estimator must be 'ridge' or 'mcmc'")
    step1 = run_step1(data, hp, rng, n_workers=n_workers)
    if b_estimator == "ridge":
        b_hat = posterior_mean_b(data, step1.gamma_hat, hp.tau1_sq)
    else:
        from .summary import magnitude_estimates

        b_hat, _ = magnitude_estimates(step1.chain, step1.gamma_hat, None)
    e_hat = pseudo_errors(data, b_hat)
    step2 = run_step2(e_hat, hp, rng)
    return StepwiseResult(
        step1=step1,
        b_hat=b_hat,
        gamma_hat=step1.gamma_hat,
        step2=step2,
        eta_hat=step2.eta_hat,
    )
