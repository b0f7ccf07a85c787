"""Post-processing of chain output: selection, estimates, intervals, exports.

Everything here is a pure function of an immutable chain.  Inclusion
probabilities are the fraction of stored draws in which an entry is nonzero;
selection is majority voting at 1/2 (ties selected); magnitudes average the
nonzero draws of selected entries; credible intervals are quantiles of the
nonzero draws, with NaN bounds marking entries that were never nonzero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import _check_symmetric, min_eigenvalue_sym, quantile


@dataclass
class SelectionSummary:
    """Selection decisions, point estimates and intervals for one chain."""

    incl_B: np.ndarray | None
    incl_Omega: np.ndarray | None
    gamma_hat: np.ndarray | None
    eta_hat: np.ndarray | None
    B_hat: np.ndarray | None
    Omega_hat: np.ndarray | None
    ci_B: np.ndarray | None
    ci_Omega: np.ndarray | None
    ci_level: float = 0.95


def inclusion_probabilities(chain):
    """Per-entry fraction of stored draws that are nonzero.

    Returns (incl_B, incl_Omega); either is None when the chain did not track
    that block.  Exact ratios are returned (1262 of 2000 gives 0.631).
    """
    if chain.iters_stored < 1:
        raise ValueError("chain holds no stored draws")
    incl_b = incl_omega = None
    if chain.b_samples is not None:
        incl_b = np.mean(chain.b_samples != 0.0, axis=0)
    if chain.omega_samples is not None:
        incl_omega = np.mean(chain.omega_samples != 0.0, axis=0)
    return incl_b, incl_omega


def majority_vote_select(incl, threshold: float = 0.5) -> np.ndarray:
    """Select entries with inclusion probability >= threshold (ties included)."""
    incl = np.asarray(incl, dtype=float)
    if incl.size and (incl.min() < 0.0 or incl.max() > 1.0):
        raise ValueError("inclusion probabilities must lie in [0, 1]")
    return (incl >= threshold).astype(np.int64)


def magnitude_estimates(chain, gamma_hat=None, eta_hat=None):
    """Conditional-on-inclusion means for selected entries, exact 0 elsewhere.

    Omega diagonals (never spiked) use plain means of the draws.  Returns
    (B_hat, Omega_hat); either is None without the matching draws/selection.
    """
    if chain.iters_stored < 1:
        raise ValueError("chain holds no stored draws")
    b_hat = omega_hat = None
    if chain.b_samples is not None and gamma_hat is not None:
        b_hat = _conditional_means(chain.b_samples) * np.asarray(gamma_hat)
    if chain.omega_samples is not None and eta_hat is not None:
        eta = np.asarray(eta_hat)
        omega_hat = _conditional_means(chain.omega_samples) * eta
        diag = chain.omega_samples.mean(axis=0).diagonal()
        np.fill_diagonal(omega_hat, diag)
        omega_hat = 0.5 * (omega_hat + omega_hat.T)
    return b_hat, omega_hat


def _conditional_means(draws: np.ndarray) -> np.ndarray:
    nonzero = draws != 0.0
    counts = nonzero.sum(axis=0)
    sums = np.where(nonzero, draws, 0.0).sum(axis=0)
    with np.errstate(invalid="ignore"):
        means = np.where(counts > 0, sums / np.maximum(counts, 1), 0.0)
    return means


def credible_intervals(chain, level: float = 0.95):
    """Equal-tailed intervals from the nonzero draws of each entry.

    Returns (ci_B, ci_Omega) with trailing dimension (lo, hi); entries with
    no nonzero draws carry NaN bounds (explicit empty markers, not [0, 0]).
    """
    if not 0.0 < level < 1.0:
        raise ValueError("credible level must lie in (0, 1)")
    lo_p = 0.5 * (1.0 - level)
    hi_p = 1.0 - lo_p
    out = []
    for draws in (chain.b_samples, chain.omega_samples):
        if draws is None:
            out.append(None)
            continue
        m, rows, cols = draws.shape
        ci = np.full((rows, cols, 2), np.nan)
        for i in range(rows):
            for j in range(cols):
                vals = draws[:, i, j]
                vals = vals[vals != 0.0]
                if vals.size:
                    ci[i, j, 0] = quantile(vals, lo_p)
                    ci[i, j, 1] = quantile(vals, hi_p)
        out.append(ci)
    return tuple(out)


def pd_projection(omega, eps: float = 1e-3) -> np.ndarray:
    """Diagonal inflation to positive definiteness: returns the input when
    its smallest eigenvalue exceeds eps, otherwise adds (eps - eig_min) I.
    Off-diagonals are untouched exactly."""
    if not eps > 0.0:
        raise ValueError("eps must be > 0")
    omega = _check_symmetric(np.asarray(omega, dtype=float))
    ev = min_eigenvalue_sym(omega)
    if ev > eps:
        return omega.copy()
    return omega + (eps - ev) * np.eye(omega.shape[0])


def summarize_chain(chain, level: float = 0.95) -> SelectionSummary:
    """Full selection summary: inclusion probabilities, majority vote,
    magnitude estimates and credible intervals."""
    incl_b, incl_omega = inclusion_probabilities(chain)
    gamma_hat = majority_vote_select(incl_b) if incl_b is not None else None
    eta_hat = None
    if incl_omega is not None:
        eta_hat = majority_vote_select(incl_omega)
        eta_hat = np.maximum(eta_hat, eta_hat.T)
        np.fill_diagonal(eta_hat, 1)
    b_hat, omega_hat = magnitude_estimates(chain, gamma_hat, eta_hat)
    ci_b, ci_omega = credible_intervals(chain, level)
    return SelectionSummary(
        incl_B=incl_b,
        incl_Omega=incl_omega,
        gamma_hat=gamma_hat,
        eta_hat=eta_hat,
        B_hat=b_hat,
        Omega_hat=omega_hat,
        ci_B=ci_b,
        ci_Omega=ci_omega,
        ci_level=level,
    )


def export_traces(chain, entries):
    """Plot-ready per-iteration values and running means.

    ``entries`` is a list of ("B" | "Omega", row, col) with 0-based indices.
    Returns (header, table) where table has one row per stored iteration and
    columns iteration, then value and running mean per requested entry.
    """
    m = chain.iters_stored
    header = ["iteration"]
    cols = [np.arange(1, m + 1, dtype=float)]
    for matrix, row, col in entries:
        if matrix == "B":
            draws = chain.b_samples
        elif matrix == "Omega":
            draws = chain.omega_samples
        else:
            raise ValueError(f"unknown matrix {matrix!r}")
        if draws is None:
            raise ValueError(f"chain holds no draws for {matrix}")
        _, rows, ncols = draws.shape
        if not (0 <= row < rows and 0 <= col < ncols):
            raise ValueError(f"entry ({row}, {col}) outside {matrix} of shape {rows} x {ncols}")
        series = draws[:, row, col]
        running = np.cumsum(series) / np.arange(1, m + 1)
        tag = f"{matrix}_{row + 1}_{col + 1}"
        header.extend([tag, f"{tag}_running_mean"])
        cols.extend([series, running])
    return header, np.column_stack(cols)


def export_edge_lists(summary: SelectionSummary, predictor_names=None,
                      response_names=None):
    """Edge tables for the selected networks, one row per selected entry.

    Returns (b_header, b_rows, omega_header, omega_rows): predictor-response
    edges from gamma_hat and response-response edges from the upper triangle
    of eta_hat, each carrying its inclusion probability.  Indices in the
    default labels are 1-based to match the exported tables.
    """
    pname = lambda j: predictor_names[j] if predictor_names else f"x{j + 1}"
    rname = lambda k: response_names[k] if response_names else f"y{k + 1}"
    b_header = ["predictor", "response", "inclusion_prob"]
    b_rows = []
    if summary.gamma_hat is not None:
        for j, k in zip(*np.nonzero(summary.gamma_hat)):
            b_rows.append([pname(j), rname(k), float(summary.incl_B[j, k])])
    omega_header = ["response_a", "response_b", "inclusion_prob"]
    omega_rows = []
    if summary.eta_hat is not None:
        q = summary.eta_hat.shape[0]
        for s in range(q - 1):
            for t in range(s + 1, q):
                if summary.eta_hat[s, t]:
                    omega_rows.append([rname(s), rname(t), float(summary.incl_Omega[s, t])])
    return b_header, b_rows, omega_header, omega_rows
