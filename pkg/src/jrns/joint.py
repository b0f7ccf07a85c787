"""Joint sampler for (B, Omega): Metropolis-within-Gibbs over every entry.

One iteration resamples all of B entry by entry (row-major), recomputes the
residual scatter S, resamples every upper-triangle entry of Omega (mirrored
to keep exact symmetry), takes one Metropolis step per diagonal, then applies
the optional conjugate hyperparameter updates.  Entry updates are mixtures of
a point mass at zero and a normal slab; spike draws store literal 0.0 so
downstream inclusion counts are exact.

The per-entry statistics come from cached matrices (M1 = X'Y Omega^2,
M2 = B'X'X, Omega^2, X'X, S); M2 is maintained incrementally inside the B
sweep (an O(p) row update per draw), keeping a full sweep at
O(p^2 q + p q^2) for B plus O(q^3) for Omega.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .model import (
    HYPER_TRACE_COLUMNS,
    Dataset,
    Hyperparams,
    ModelState,
    default_hyperparams,
)
from .rng import SeededRng

_HYPER_SHAPE = 1e-4
_HYPER_RATE = 1e-8
_EMPTY_1D = np.empty(0, dtype=np.float64)
_EMPTY_2D = np.empty((0, 0), dtype=np.float64)


@dataclass(frozen=True)
class MixtureUpdate:
    """Spike-and-slab conditional: P(slab), slab mean and slab variance."""

    inclusion_prob: float
    slab_mean: float
    slab_var: float


@dataclass
class ChainOutput:
    """Post-burn-in draws and per-run diagnostics.

    ``b_samples`` (M, p, q) and/or ``omega_samples`` (M, q, q) hold the
    stored draws; ``sigma_sq_samples`` (M, q) is filled by the step-1 sampler
    only.  ``hyper_trace`` has one row per iteration (burn-in included) with
    columns q1, q2, tau1_sq, tau2_sq, lam.
    """

    b_samples: np.ndarray | None
    omega_samples: np.ndarray | None
    hyper_trace: np.ndarray
    diag_accept_counts: np.ndarray | None
    mh_steps: int
    iters_stored: int
    sigma_sq_samples: np.ndarray | None = None
    cache_checks: list = field(default_factory=list)


def _log_odds(q: float) -> float:
    return float(np.log(q) - np.log1p(-q))


def _sigmoid(x: float) -> float:
    if x >= 0.0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


def _mixture_prob(log_odds: float, inv_tau_sq: float, c1: float, exponent: float) -> float:
    """Inclusion probability in the log domain; total for any exponent size."""
    if inv_tau_sq <= 0.0:
        return 0.0
    return _sigmoid(log_odds + 0.5 * np.log(inv_tau_sq / c1) + exponent)


# ----------------------------------------------------------------------
# entry-level conditionals
# ----------------------------------------------------------------------

def b_entry_conditional(state: ModelState, hp: Hyperparams, r: int, s: int) -> MixtureUpdate:
    """Full conditional of B[r, s] given everything else.

    C1 = (Omega^2)_ss (X'X)_rr + 1/tau1^2 and
    C2 = M1[r, s] - M2[:, r] . (Omega^2)[:, s] + B[r, s] (X'X)_rr (Omega^2)_ss.
    """
    state.require("XtX", "M1", "M2", "OmegaSq")
    p, q = state.B.shape
    if not (0 <= r < p and 0 <= s < q):
        raise ValueError(f"entry ({r}, {s}) outside a {p} x {q} matrix")
    itau = 1.0 / hp.tau1_sq
    xtx_rr = state.XtX[r, r]
    osq_ss = state.OmegaSq[s, s]
    c1 = osq_ss * xtx_rr + itau
    c2 = float(
        state.M1[r, s]
        - state.M2[:, r] @ state.OmegaSq[:, s]
        + state.B[r, s] * xtx_rr * osq_ss
    )
    prob = _mixture_prob(_log_odds(hp.q1), itau, c1, c2 * c2 / (2.0 * c1))
    return MixtureUpdate(prob, c2 / c1, 1.0 / c1)


def omega_offdiag_conditional(state: ModelState, hp: Hyperparams, s: int, t: int) -> MixtureUpdate:
    """Full conditional of Omega[s, t] (s < t) given everything else.

    D1 = S_ss + S_tt + 1/tau2^2 and D2 = sum_{l != s} w_tl S_ls +
    sum_{l != t} w_sl S_lt; the slab is N(-D2/D1, 1/D1).
    """
    state.require("S")
    q = state.Omega.shape[0]
    if not (0 <= s < t < q):
        raise ValueError(f"need 0 <= s < t < {q}, got ({s}, {t})")
    S = state.S
    itau = 1.0 / hp.tau2_sq
    d1 = S[s, s] + S[t, t] + itau
    d2 = float(
        state.Omega[t, :] @ S[:, s]
        + state.Omega[s, :] @ S[:, t]
        - state.Omega[s, t] * (S[s, s] + S[t, t])
    )
    prob = _mixture_prob(_log_odds(hp.q2), itau, d1, d2 * d2 / (2.0 * d1))
    return MixtureUpdate(prob, -d2 / d1, 1.0 / d1)


def omega_diag_mode(s_ss: float, f: float, n: int) -> float:
    """Unique positive root of S_ss w^2 + f w - n = 0 (the conditional mode
    of a diagonal entry); evaluated without cancellation for either sign of f."""
    if not s_ss > 0.0:
        raise ValueError("S_ss must be > 0")
    if n < 1:
        raise ValueError("n must be >= 1")
    disc = np.sqrt(f * f + 4.0 * float(n) * s_ss)
    if f >= 0.0:
        return float(2.0 * float(n) / (disc + f))
    return float((disc - f) / (2.0 * s_ss))


def diag_shift(state: ModelState, hp: Hyperparams, s: int) -> float:
    """f = lam + sum_{l != s} w_ls S_ls, the linear coefficient of the
    diagonal conditional."""
    state.require("S")
    return float(
        state.Omega[s, :] @ state.S[:, s]
        - state.Omega[s, s] * state.S[s, s]
        + hp.lam
    )


def _mixture_proposal_logpdf(d: float, narrow_sd: float) -> float:
    """Log density (up to the shared normal constant) of the defensive
    mixture proposal at distance d from its center."""
    wide_sd = kernels._WIDE_SD_FACTOR * narrow_sd
    a = np.log(1.0 - kernels._WIDE_WEIGHT) - np.log(narrow_sd) - 0.5 * d * d / narrow_sd**2
    b = np.log(kernels._WIDE_WEIGHT) - np.log(wide_sd) - 0.5 * d * d / wide_sd**2
    hi = max(a, b)
    return float(hi + np.log(np.exp(a - hi) + np.exp(b - hi)))


def omega_diag_mh_step(state: ModelState, hp: Hyperparams, s: int, rng: SeededRng):
    """One Metropolis step on Omega[s, s]; returns (new value, accepted).

    exact_mh proposes from the defensive mixture centered at the conditional
    mode and corrects with its density (exact detailed balance); otherwise
    the simplified variant proposes N(mode, proposal_var) and omits the
    correction.
    """
    state.require("S", "E")
    n = state.E.shape[0]
    w = float(state.Omega[s, s])
    s_ss = float(state.S[s, s])
    f = diag_shift(state, hp, s)
    mode = omega_diag_mode(s_ss, f, n)
    narrow_sd = float(np.sqrt(hp.proposal_var))
    sd = narrow_sd
    u_comp = rng.generator.random()
    if hp.exact_mh and u_comp < kernels._WIDE_WEIGHT:
        sd = kernels._WIDE_SD_FACTOR * narrow_sd
    v = mode + sd * rng.generator.standard_normal()
    u = rng.generator.random()
    accepted = False
    if v > 0.0:
        lr = n * np.log(v / w) - 0.5 * s_ss * (v * v - w * w) - f * (v - w)
        if hp.exact_mh:
            lr += _mixture_proposal_logpdf(w - mode, narrow_sd)
            lr -= _mixture_proposal_logpdf(v - mode, narrow_sd)
        lu = np.log(u) if u > 0.0 else -np.inf
        if lu < lr:
            accepted = True
            state.Omega[s, s] = v
    return float(state.Omega[s, s]), accepted


# ----------------------------------------------------------------------
# full sweeps
# ----------------------------------------------------------------------

def sweep_b(state: ModelState, hp: Hyperparams, rng: SeededRng,
            per_entry: bool | None = None) -> None:
    """Resample every B entry in row-major order; updates B and M2 in place
    and invalidates the residual caches.  ``per_entry`` overrides
    hp.per_entry_hyper (the chain drivers disable it during warmup)."""
    state.require("XtX", "M1", "M2", "OmegaSq")
    if per_entry is None:
        per_entry = hp.per_entry_hyper
    p, q = state.B.shape
    u = rng.uniform_block((p, q))
    z = rng.normal_block((p, q))
    if per_entry:
        g0 = rng.std_gamma_block(_HYPER_SHAPE, (p, q))
        g1 = rng.std_gamma_block(_HYPER_SHAPE + 0.5, (p, q))
    else:
        g0 = g1 = _EMPTY_2D
    kernels.sweep_b(
        state.B, state.M2, state.XtX, state.M1, state.OmegaSq,
        _log_odds(hp.q1), 1.0 / hp.tau1_sq, per_entry, g0, g1, u, z,
    )
    state.invalidate("E", "S")


def omega_sweep_core(Omega: np.ndarray, S: np.ndarray, n: int, hp: Hyperparams,
                     rng: SeededRng, accepts: np.ndarray,
                     per_entry: bool | None = None) -> None:
    """Shared Omega machinery: all upper-triangle mixtures (mirrored), then a
    Metropolis step per diagonal.  Used verbatim by the joint sampler and by
    step 2 of the stepwise sampler, so identical (S, seed) give identical draws."""
    if per_entry is None:
        per_entry = hp.per_entry_hyper
    q = Omega.shape[0]
    m = q * (q - 1) // 2
    u_off = rng.uniform_block(m)
    z_off = rng.normal_block(m)
    u_comp = rng.uniform_block(q)
    u_diag = rng.uniform_block(q)
    z_diag = rng.normal_block(q)
    if per_entry:
        g0 = rng.std_gamma_block(_HYPER_SHAPE, m)
        g1 = rng.std_gamma_block(_HYPER_SHAPE + 0.5, m)
        g_lam = rng.std_gamma_block(_HYPER_SHAPE + 1.0, q)
    else:
        g0 = g1 = g_lam = _EMPTY_1D
    kernels.sweep_omega_offdiag(
        Omega, S, _log_odds(hp.q2), 1.0 / hp.tau2_sq,
        per_entry, g0, g1, u_off, z_off,
    )
    kernels.sweep_omega_diag(
        Omega, S, float(n), hp.lam, np.sqrt(hp.proposal_var), hp.exact_mh,
        per_entry, g_lam, u_comp, u_diag, z_diag, accepts,
    )


def sweep_omega(state: ModelState, hp: Hyperparams, rng: SeededRng,
                accepts: np.ndarray | None = None,
                per_entry: bool | None = None) -> np.ndarray:
    """Resample all of Omega (off-diagonals then diagonals) and refresh the
    Omega^2 cache; returns the per-diagonal acceptance tallies."""
    state.require("S", "E")
    q = state.Omega.shape[0]
    if accepts is None:
        accepts = np.zeros(q, dtype=np.int64)
    omega_sweep_core(state.Omega, state.S, state.E.shape[0], hp, rng, accepts,
                     per_entry=per_entry)
    state.invalidate("M1")
    state.refresh_omega_sq()
    return accepts


def update_hyperparams(state: ModelState, hp: Hyperparams, rng: SeededRng) -> Hyperparams:
    """Conjugate updates for the adaptive hyperparameters.

    q1, q2 get Beta(1 + #nonzero, 1 + #zero) updates; 1/tau^2 gets
    Gamma(1e-4 + k/2, 1e-8 + sum of squared nonzeros / 2); lam gets
    Gamma(1e-4 + q, 1e-8 + trace(Omega)).  With per_entry_hyper the tau and
    lam draws happen inside the sweeps instead and are skipped here.
    """
    q = state.Omega.shape[0]
    updates = {}
    clip = lambda x: min(max(x, 1e-12), 1.0 - 1e-12)
    iu = np.triu_indices(q, k=1)
    if hp.adaptive_q:
        k_b = int(np.count_nonzero(state.B))
        updates["q1"] = clip(rng.beta(1.0 + k_b, 1.0 + state.B.size - k_b))
        upper = state.Omega[iu]
        k_w = int(np.count_nonzero(upper))
        updates["q2"] = clip(rng.beta(1.0 + k_w, 1.0 + upper.size - k_w))
    if hp.adaptive_tau and not hp.per_entry_hyper:
        nz_b = state.B[state.B != 0.0]
        itau1 = rng.gamma(_HYPER_SHAPE + 0.5 * nz_b.size,
                          _HYPER_RATE + 0.5 * float(nz_b @ nz_b))
        updates["tau1_sq"] = 1.0 / itau1 if itau1 > 0.0 else np.inf
        upper = state.Omega[iu]
        nz_w = upper[upper != 0.0]
        itau2 = rng.gamma(_HYPER_SHAPE + 0.5 * nz_w.size,
                          _HYPER_RATE + 0.5 * float(nz_w @ nz_w))
        updates["tau2_sq"] = 1.0 / itau2 if itau2 > 0.0 else np.inf
    if hp.adaptive_lambda and not hp.per_entry_hyper:
        updates["lam"] = rng.gamma(_HYPER_SHAPE + q,
                                   _HYPER_RATE + float(np.trace(state.Omega)))
    if not updates:
        return hp
    return hp.with_(**updates)


def _hyper_row(hp: Hyperparams) -> list:
    return [getattr(hp, name) for name in HYPER_TRACE_COLUMNS]


def run_jrns(data: Dataset, hp: Hyperparams | None = None,
             init: ModelState | None = None, rng: SeededRng | None = None,
             cache_check_every: int | None = None) -> ChainOutput:
    """Run the joint sampler for hp.burnin + hp.iters full sweeps.

    Deterministic given the seed.  Stores every ``thin``-th post-burn-in
    (B, Omega) pair.  When ``cache_check_every`` is set, the incremental
    caches are compared against recomputation every that many iterations and
    the relative errors collected in ``cache_checks``.
    """
    hp = (hp or default_hyperparams(data.p, data.q)).validate()
    rng = rng or SeededRng(hp.seed)
    state = init if init is not None else ModelState.initial(data)
    if state.B.shape != (data.p, data.q):
        raise ValueError("initial state does not match dataset dimensions")

    state.refresh_design(data)
    state.refresh_omega_sq()
    state.refresh_m1m2(data)

    total = hp.burnin + hp.iters
    stored_idx = range(hp.burnin, total, hp.thin)
    n_stored = len(stored_idx)
    b_samples = np.empty((n_stored, data.p, data.q))
    omega_samples = np.empty((n_stored, data.q, data.q))
    hyper_trace = np.empty((total, len(HYPER_TRACE_COLUMNS)))
    accepts = np.zeros(data.q, dtype=np.int64)
    cache_checks: list = []

    keep = 0
    for it in range(total):
        per_entry = hp.per_entry_hyper and it >= hp.warmup_sweeps
        sweep_b(state, hp, rng, per_entry=per_entry)
        checking = cache_check_every is not None and (it + 1) % cache_check_every == 0
        if checking:
            errs = {"iteration": it}
            errs.update(state.cache_errors(data))  # M1, M2, OmegaSq valid here
        state.refresh_residual(data)
        sweep_omega(state, hp, rng, accepts, per_entry=per_entry)
        if checking:
            post = state.cache_errors(data)  # E, S, OmegaSq valid here
            for key, val in post.items():
                errs[key] = max(errs.get(key, 0.0), val)
            cache_checks.append(errs)
        hp = update_hyperparams(state, hp, rng)
        hyper_trace[it] = _hyper_row(hp)
        state.refresh_m1m2(data)
        if not (np.all(np.isfinite(state.B)) and np.all(np.isfinite(state.Omega))):
            raise ValueError(f"sampler produced non-finite values at iteration {it}")
        if it >= hp.burnin and (it - hp.burnin) % hp.thin == 0:
            b_samples[keep] = state.B
            omega_samples[keep] = state.Omega
            keep += 1

    return ChainOutput(
        b_samples=b_samples,
        omega_samples=omega_samples,
        hyper_trace=hyper_trace,
        diag_accept_counts=accepts,
        mh_steps=total,
        iters_stored=n_stored,
        cache_checks=cache_checks,
    )
