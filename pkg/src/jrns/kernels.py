"""Inner Gibbs sweep loops, JIT-compiled with numba.

Randomness enters only through pre-drawn blocks (one uniform and one normal
per entry, drawn whether or not the slab branch uses them), so a sweep
consumes a fixed, known amount of the stream and the kernels are pure
functions of their inputs.  ``*_py`` names are the untouched Python versions
of the same code, kept for bit-for-bit cross-checks in the tests; the
samplers always call the jitted variants.

Mixture weights are computed in the log domain: with prior odds
o = q/(1-q), slab precision c1, inverse slab variance itau and linear
statistic c2, the inclusion probability is

    sigmoid(log o + 0.5 log(itau / c1) + c2^2 / (2 c1))

which equals the closed-form weight but saturates to 1.0 instead of
overflowing.  Helper math (sigmoid, diagonal mode) is inlined so the Python
mirrors share every floating-point operation with the compiled code.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# shape/rate of the diffuse per-entry hyperpriors
_HYPER_RATE = 1e-8

# Exact-MH diagonal proposal: defensive mixture around the conditional mode.
# The narrow component is the workhorse; the wide one keeps the independence
# sampler from sticking when the mode drifts between sweeps (a pure narrow
# proposal plus exact correction can take e^{-(distance/sd)^2/2} sweeps to
# follow a mode shift of a few proposal widths).
_WIDE_SD_FACTOR = 20.0
_WIDE_WEIGHT = 0.1


def _sweep_b(B, M2, xtx, m1, omega_sq, log_odds_q1, inv_tau1_sq,
             per_entry, g0, g1, u, z):
    """One row-major pass over all entries of B; B and M2 updated in place."""
    p, q = B.shape
    for r in range(p):
        xtx_rr = xtx[r, r]
        for s in range(q):
            b_old = B[r, s]
            if per_entry:
                if b_old == 0.0:
                    itau = g0[r, s] / _HYPER_RATE
                else:
                    itau = g1[r, s] / (_HYPER_RATE + 0.5 * b_old * b_old)
            else:
                itau = inv_tau1_sq
            osq_ss = omega_sq[s, s]
            c1 = osq_ss * xtx_rr + itau
            acc = 0.0
            for k in range(q):
                acc += M2[k, r] * omega_sq[k, s]
            c2 = m1[r, s] - acc + b_old * xtx_rr * osq_ss
            if itau > 0.0:
                lw = log_odds_q1 + 0.5 * np.log(itau / c1) + c2 * c2 / (2.0 * c1)
                if lw >= 0.0:
                    incl = 1.0 / (1.0 + np.exp(-lw))
                else:
                    e = np.exp(lw)
                    incl = e / (1.0 + e)
            else:
                incl = 0.0  # infinite slab variance: spike wins
            if u[r, s] < incl:
                b_new = c2 / c1 + z[r, s] / np.sqrt(c1)
            else:
                b_new = 0.0
            if b_new != b_old:
                B[r, s] = b_new
                d = b_new - b_old
                for j in range(p):
                    M2[s, j] += d * xtx[r, j]


def _sweep_omega_offdiag(Omega, S, log_odds_q2, inv_tau2_sq,
                         per_entry, g0, g1, u, z):
    """Upper-triangle scan (s < t); each draw mirrored to keep Omega symmetric."""
    q = Omega.shape[0]
    idx = 0
    for s in range(q - 1):
        s_ss = S[s, s]
        for t in range(s + 1, q):
            w_old = Omega[s, t]
            if per_entry:
                if w_old == 0.0:
                    itau = g0[idx] / _HYPER_RATE
                else:
                    itau = g1[idx] / (_HYPER_RATE + 0.5 * w_old * w_old)
            else:
                itau = inv_tau2_sq
            s_tt = S[t, t]
            d1 = s_ss + s_tt + itau
            acc = 0.0
            for l in range(q):
                acc += Omega[t, l] * S[l, s] + Omega[s, l] * S[l, t]
            d2 = acc - w_old * (s_ss + s_tt)
            if itau > 0.0:
                lw = log_odds_q2 + 0.5 * np.log(itau / d1) + d2 * d2 / (2.0 * d1)
                if lw >= 0.0:
                    incl = 1.0 / (1.0 + np.exp(-lw))
                else:
                    e = np.exp(lw)
                    incl = e / (1.0 + e)
            else:
                incl = 0.0
            if u[idx] < incl:
                w_new = -d2 / d1 + z[idx] / np.sqrt(d1)
            else:
                w_new = 0.0
            Omega[s, t] = w_new
            Omega[t, s] = w_new
            idx += 1


def _sweep_omega_diag(Omega, S, n, lam, proposal_sd, exact_mh,
                      per_entry, g_lam, u_comp, u, z, accepts):
    """Metropolis step per diagonal.

    exact_mh: independence proposal from the defensive mixture
    (1 - _WIDE_WEIGHT) N(mode, sd^2) + _WIDE_WEIGHT N(mode, (factor sd)^2)
    with the full mixture density in the acceptance ratio (detailed balance
    holds exactly).  Otherwise the simplified variant: pure N(mode, sd^2)
    with the proposal correction omitted.  Non-positive proposals are
    rejected outright (the target's support is w > 0).
    """
    q = Omega.shape[0]
    wide_sd = _WIDE_SD_FACTOR * proposal_sd
    ln_nar = np.log(1.0 - _WIDE_WEIGHT) - np.log(proposal_sd)
    ln_wid = np.log(_WIDE_WEIGHT) - np.log(wide_sd)
    inv2_nar = 0.5 / (proposal_sd * proposal_sd)
    inv2_wid = 0.5 / (wide_sd * wide_sd)
    for s in range(q):
        w = Omega[s, s]
        if per_entry:
            lam_s = g_lam[s] / (_HYPER_RATE + w)
        else:
            lam_s = lam
        s_ss = S[s, s]
        acc = 0.0
        for l in range(q):
            acc += Omega[s, l] * S[l, s]
        f = acc - w * s_ss + lam_s
        # positive root of s_ss v^2 + f v - n = 0, no cancellation either sign
        disc = np.sqrt(f * f + 4.0 * n * s_ss)
        if f >= 0.0:
            mode = 2.0 * n / (disc + f)
        else:
            mode = (disc - f) / (2.0 * s_ss)
        if exact_mh and u_comp[s] < _WIDE_WEIGHT:
            sd = wide_sd
        else:
            sd = proposal_sd
        v = mode + sd * z[s]
        if v <= 0.0:
            continue
        lr = n * np.log(v / w) - 0.5 * s_ss * (v * v - w * w) - f * (v - w)
        if exact_mh:
            dw = w - mode
            a = ln_nar - dw * dw * inv2_nar
            b = ln_wid - dw * dw * inv2_wid
            hi = a if a >= b else b
            lr += hi + np.log(np.exp(a - hi) + np.exp(b - hi))
            dv = v - mode
            a = ln_nar - dv * dv * inv2_nar
            b = ln_wid - dv * dv * inv2_wid
            hi = a if a >= b else b
            lr -= hi + np.log(np.exp(a - hi) + np.exp(b - hi))
        us = u[s]
        lu = np.log(us) if us > 0.0 else -np.inf
        if lu < lr:
            Omega[s, s] = v
            accepts[s] += 1


def _sweep_step1_col(b, vcache, xty_col, xtx, sigma_sq,
                     log_odds_q1, inv_tau1_sq, per_entry, g0, g1, u, z):
    """One pass over a single response column in the individual-regressions
    sampler; b and the cache vcache = XtX @ b are updated in place.  The
    slab is N(0, tau1^2 sigma^2), so per-entry precisions for nonzero
    entries rescale the squared value by 1/sigma^2."""
    p = b.shape[0]
    for r in range(p):
        b_old = b[r]
        if per_entry:
            if b_old == 0.0:
                itau = g0[r] / _HYPER_RATE
            else:
                itau = g1[r] / (_HYPER_RATE + 0.5 * b_old * b_old / sigma_sq)
        else:
            itau = inv_tau1_sq
        xtx_rr = xtx[r, r]
        c1 = xtx_rr + itau
        c2 = xty_col[r] - vcache[r] + xtx_rr * b_old
        if itau > 0.0:
            lw = (log_odds_q1 + 0.5 * np.log(itau / c1)
                  + c2 * c2 / (2.0 * sigma_sq * c1))
            if lw >= 0.0:
                incl = 1.0 / (1.0 + np.exp(-lw))
            else:
                e = np.exp(lw)
                incl = e / (1.0 + e)
        else:
            incl = 0.0
        if u[r] < incl:
            b_new = c2 / c1 + z[r] * np.sqrt(sigma_sq / c1)
        else:
            b_new = 0.0
        if b_new != b_old:
            b[r] = b_new
            d = b_new - b_old
            for j in range(p):
                vcache[j] += d * xtx[r, j]


def _mh_diag_chain(w0, s_ss, f, n, proposal_sd, exact_mh, u_comp, u, z, out):
    """Long Metropolis chain on a single frozen diagonal (test oracle driver);
    uses the same proposal and acceptance logic as the diagonal sweep."""
    w = w0
    wide_sd = _WIDE_SD_FACTOR * proposal_sd
    ln_nar = np.log(1.0 - _WIDE_WEIGHT) - np.log(proposal_sd)
    ln_wid = np.log(_WIDE_WEIGHT) - np.log(wide_sd)
    inv2_nar = 0.5 / (proposal_sd * proposal_sd)
    inv2_wid = 0.5 / (wide_sd * wide_sd)
    disc = np.sqrt(f * f + 4.0 * n * s_ss)
    if f >= 0.0:
        mode = 2.0 * n / (disc + f)
    else:
        mode = (disc - f) / (2.0 * s_ss)
    for i in range(u.shape[0]):
        if exact_mh and u_comp[i] < _WIDE_WEIGHT:
            sd = wide_sd
        else:
            sd = proposal_sd
        v = mode + sd * z[i]
        if v > 0.0:
            lr = n * np.log(v / w) - 0.5 * s_ss * (v * v - w * w) - f * (v - w)
            if exact_mh:
                dw = w - mode
                a = ln_nar - dw * dw * inv2_nar
                b = ln_wid - dw * dw * inv2_wid
                hi = a if a >= b else b
                lr += hi + np.log(np.exp(a - hi) + np.exp(b - hi))
                dv = v - mode
                a = ln_nar - dv * dv * inv2_nar
                b = ln_wid - dv * dv * inv2_wid
                hi = a if a >= b else b
                lr -= hi + np.log(np.exp(a - hi) + np.exp(b - hi))
            ui = u[i]
            lu = np.log(ui) if ui > 0.0 else -np.inf
            if lu < lr:
                w = v
        out[i] = w


# Python mirrors for parity tests, then the jitted versions the samplers use.
sweep_b_py = _sweep_b
sweep_omega_offdiag_py = _sweep_omega_offdiag
sweep_omega_diag_py = _sweep_omega_diag
sweep_step1_col_py = _sweep_step1_col
mh_diag_chain_py = _mh_diag_chain

_jit = njit(cache=True, nogil=True)
sweep_b = _jit(_sweep_b)
sweep_omega_offdiag = _jit(_sweep_omega_offdiag)
sweep_omega_diag = _jit(_sweep_omega_diag)
sweep_step1_col = _jit(_sweep_step1_col)
mh_diag_chain = _jit(_mh_diag_chain)
