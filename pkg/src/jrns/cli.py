"""Command-line interface: simulate, run, metrics, experiment, trace.

Every command is deterministic given its arguments including the seed; run
metadata records every effective parameter so a recorded run can be replayed
byte-identically.  Exit code 0 on success, 2 with a one-line ``error: ...``
message on stderr otherwise.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from types import SimpleNamespace

import numpy as np

from . import __version__
from .datagen import SimConfig, gen_dataset, gen_truth, preset_setting
from .io import (
    parse_config,
    read_json,
    read_matrix,
    read_table,
    write_json,
    write_matrix,
    write_table,
)
from .joint import run_jrns
from .metrics import (
    confusion_counts,
    coverage,
    mcc,
    relative_error,
    sensitivity,
    specificity,
)
from .model import Dataset, Hyperparams, default_hyperparams
from .rng import SeededRng, derive_seed
from .stepwise import run_stepwise
from .summary import (
    credible_intervals,
    export_edge_lists,
    export_traces,
    summarize_chain,
)

METRIC_KEYS = (
    "mcc_B", "mcc_Omega",
    "sensitivity_B", "specificity_B",
    "sensitivity_Omega", "specificity_Omega",
    "rel_err_B", "rel_err_Omega",
    "coverage_B", "coverage_Omega",
)


class CliError(Exception):
    pass


# ----------------------------------------------------------------------
# simulate
# ----------------------------------------------------------------------

def _sim_config(args) -> SimConfig:
    if args.setting is not None:
        cfg = preset_setting(args.setting, seed=args.seed)
        fields = {}
        for name in ("n", "p", "q", "nnz_b", "nnz_omega", "ar_rho"):
            v = getattr(args, name)
            if v is not None:
                fields[name] = v
        if fields:
            cfg = replace(cfg, **fields)
        return cfg
    required = ("n", "p", "q", "nnz_b", "nnz_omega")
    missing = [f"--{name.replace('_', '-')}" for name in required
               if getattr(args, name) is None]
    if missing:
        raise CliError(f"need --setting or all of: {', '.join(missing)}")
    return SimConfig(
        n=args.n, p=args.p, q=args.q,
        nnz_b=args.nnz_b, nnz_omega=args.nnz_omega,
        ar_rho=args.ar_rho if args.ar_rho is not None else 0.7,
        seed=args.seed,
    )


def cmd_simulate(args) -> int:
    cfg = _sim_config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rng = SeededRng(cfg.seed)
    truth = gen_truth(cfg, rng)
    data = gen_dataset(cfg, truth, rng)
    write_matrix(out / "X.csv", data.X)
    write_matrix(out / "Y.csv", data.Y)
    write_matrix(out / "B0.csv", truth.B0)
    write_matrix(out / "Omega0.csv", truth.Omega0)
    write_matrix(out / "gamma.csv", truth.gamma_true, ints=True)
    write_matrix(out / "eta.csv", truth.eta_true, ints=True)
    write_json(out / "meta.json", {
        "n": cfg.n, "p": cfg.p, "q": cfg.q,
        "nnz_b": cfg.nnz_b, "nnz_omega": cfg.nnz_omega,
        "ar_rho": cfg.ar_rho,
        "b_range": list(cfg.b_range),
        "omega_offdiag_range": list(cfg.omega_offdiag_range),
        "omega_diag_range": list(cfg.omega_diag_range),
        "seed": cfg.seed,
        "setting": args.setting,
        "version": __version__,
    })
    print(f"wrote {cfg.n} x {cfg.p} design and {cfg.n} x {cfg.q} responses to {out}")
    return 0


# ----------------------------------------------------------------------
# run
# ----------------------------------------------------------------------

_FLAG_FIELDS = (
    "burnin", "iters", "seed", "thin", "proposal_var",
    "adaptive_q", "adaptive_tau", "adaptive_lambda",
    "exact_mh", "per_entry_hyper",
)


def _hyperparams_for(p: int, q: int, args) -> Hyperparams:
    overrides = {}
    if getattr(args, "config", None):
        overrides.update(parse_config(args.config))
    for name in _FLAG_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            overrides[name] = v
    return default_hyperparams(p, q).with_(**overrides)


def _ci_rows(ci: np.ndarray):
    rows = []
    for i in range(ci.shape[0]):
        for j in range(ci.shape[1]):
            lo, hi = ci[i, j]
            rows.append([i + 1, j + 1,
                         None if np.isnan(lo) else float(lo),
                         None if np.isnan(hi) else float(hi)])
    return rows


def _write_run_outputs(out: Path, summary, hyper_trace, accepts, mh_steps,
                       b_hat, gamma_hat, meta, draws=None) -> None:
    write_matrix(out / "incl_B.csv", summary.incl_B)
    write_matrix(out / "incl_Omega.csv", summary.incl_Omega)
    write_matrix(out / "B_hat.csv", b_hat)
    write_matrix(out / "Omega_hat.csv", summary.Omega_hat)
    write_matrix(out / "gamma_hat.csv", gamma_hat, ints=True)
    write_matrix(out / "eta_hat.csv", summary.eta_hat, ints=True)
    write_table(out / "ci_B.csv", ["row", "col", "lo", "hi"], _ci_rows(summary.ci_B))
    write_table(out / "ci_Omega.csv", ["row", "col", "lo", "hi"], _ci_rows(summary.ci_Omega))
    write_table(out / "hyper_trace.csv",
                ["iteration", "q1", "q2", "tau1_sq", "tau2_sq", "lam"],
                [[i + 1] + [float(v) for v in row] for i, row in enumerate(hyper_trace)])
    write_table(out / "accept_rates.csv",
                ["diagonal", "accepted", "steps", "rate"],
                [[s + 1, int(a), int(mh_steps), float(a) / mh_steps if mh_steps else 0.0]
                 for s, a in enumerate(accepts)])
    b_header, b_rows, o_header, o_rows = export_edge_lists(summary)
    write_table(out / "edges_B.csv", b_header, b_rows)
    write_table(out / "edges_Omega.csv", o_header, o_rows)
    write_json(out / "run_meta.json", meta)
    if draws is not None:
        np.savez(out / "draws.npz", **draws)


def cmd_run(args) -> int:
    x_path, y_path = Path(args.x), Path(args.y)
    for path in (x_path, y_path):
        if not path.exists():
            raise CliError(f"missing input file: {path}")
    data = Dataset(X=read_matrix(x_path), Y=read_matrix(y_path))
    hp = _hyperparams_for(data.p, data.q, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()

    if args.method == "jrns":
        chain = run_jrns(data, hp)
        summary = summarize_chain(chain, level=args.ci_level)
        b_hat = summary.B_hat
        gamma_hat = summary.gamma_hat
        hyper_trace = chain.hyper_trace
        accepts = chain.diag_accept_counts
        mh_steps = chain.mh_steps
        draws = {"b": chain.b_samples, "omega": chain.omega_samples}
    else:
        result = run_stepwise(data, hp, b_estimator=args.b_estimator)
        s1 = summarize_chain(result.step1.chain, level=args.ci_level)
        s2 = summarize_chain(result.step2.chain, level=args.ci_level)
        summary = SimpleNamespace(
            incl_B=s1.incl_B,
            incl_Omega=s2.incl_Omega,
            gamma_hat=result.gamma_hat,
            eta_hat=result.eta_hat,
            B_hat=result.b_hat,
            Omega_hat=s2.Omega_hat,
            ci_B=s1.ci_B,
            ci_Omega=s2.ci_Omega,
            ci_level=args.ci_level,
        )
        b_hat = result.b_hat
        gamma_hat = result.gamma_hat
        t1, t2 = result.step1.chain.hyper_trace, result.step2.chain.hyper_trace
        hyper_trace = np.column_stack([t1[:, 0], t2[:, 1], t1[:, 2], t2[:, 3], t2[:, 4]])
        accepts = result.step2.chain.diag_accept_counts
        mh_steps = result.step2.chain.mh_steps
        draws = {"b": result.step1.chain.b_samples,
                 "omega": result.step2.chain.omega_samples}

    elapsed = time.perf_counter() - started
    meta = {
        "method": args.method,
        "x": str(x_path), "y": str(y_path),
        "n": data.n, "p": data.p, "q": data.q,
        "ci_level": args.ci_level,
        "b_estimator": args.b_estimator,
        "save_draws": bool(args.save_draws),
        "hyperparams": {k: (None if isinstance(v, float) and not np.isfinite(v) else v)
                        for k, v in vars(hp).items()},
        "version": __version__,
    }
    _write_run_outputs(out, summary, hyper_trace, accepts, mh_steps,
                       b_hat, gamma_hat, meta,
                       draws=draws if args.save_draws else None)
    print(f"{args.method} finished {hp.burnin}+{hp.iters} sweeps in {elapsed:.1f}s; "
          f"outputs in {out}")
    return 0


# ----------------------------------------------------------------------
# metrics
# ----------------------------------------------------------------------

def _read_ci_table(path, shape):
    ci = np.full((*shape, 2), np.nan)
    _, rows = read_table(path)
    for row, col, lo, hi in rows:
        i, j = int(row) - 1, int(col) - 1
        ci[i, j, 0] = float(lo) if lo else np.nan
        ci[i, j, 1] = float(hi) if hi else np.nan
    return ci


def _metrics_report(est_dir: Path, truth_dir: Path) -> dict:
    for path in (est_dir, truth_dir):
        if not path.is_dir():
            raise CliError(f"missing directory: {path}")
    gamma_hat = read_matrix(est_dir / "gamma_hat.csv")
    eta_hat = read_matrix(est_dir / "eta_hat.csv")
    b_hat = read_matrix(est_dir / "B_hat.csv")
    omega_hat = read_matrix(est_dir / "Omega_hat.csv")
    gamma_true = read_matrix(truth_dir / "gamma.csv")
    eta_true = read_matrix(truth_dir / "eta.csv")
    b0 = read_matrix(truth_dir / "B0.csv")
    omega0 = read_matrix(truth_dir / "Omega0.csv")

    cb = confusion_counts(gamma_hat, gamma_true, scope="full")
    co = confusion_counts(eta_hat, eta_true, scope="upper")
    report = {
        "mcc_B": mcc(cb),
        "mcc_Omega": mcc(co),
        "sensitivity_B": sensitivity(cb),
        "specificity_B": specificity(cb),
        "sensitivity_Omega": sensitivity(co),
        "specificity_Omega": specificity(co),
        "rel_err_B": relative_error(b_hat, b0),
        "rel_err_Omega": relative_error(omega_hat, omega0),
        "coverage_B": None,
        "coverage_Omega": None,
    }
    ci_b_path = est_dir / "ci_B.csv"
    if ci_b_path.exists():
        ci_b = _read_ci_table(ci_b_path, b0.shape)
        entries = list(zip(*np.nonzero(gamma_true)))
        cov = coverage(ci_b, b0, entries)
        report["coverage_B"] = None if np.isnan(cov) else cov
    ci_o_path = est_dir / "ci_Omega.csv"
    if ci_o_path.exists():
        ci_o = _read_ci_table(ci_o_path, omega0.shape)
        iu = zip(*np.triu_indices(omega0.shape[0], k=1))
        entries = [(s, t) for s, t in iu if eta_true[s, t]]
        cov = coverage(ci_o, omega0, entries)
        report["coverage_Omega"] = None if np.isnan(cov) else cov
    return report


def cmd_metrics(args) -> int:
    report = _metrics_report(Path(args.est), Path(args.truth))
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return 0


# ----------------------------------------------------------------------
# experiment
# ----------------------------------------------------------------------

def _replicate_job(args, master_seed: int, rep: int) -> dict:
    data_seed = derive_seed(master_seed, 2 * rep)
    run_seed = derive_seed(master_seed, 2 * rep + 1)
    row = {"replicate": rep, "status": "ok",
           "data_seed": data_seed, "run_seed": run_seed}
    try:
        cfg = replace(preset_setting(args.setting), seed=data_seed)
        rng = SeededRng(cfg.seed)
        truth = gen_truth(cfg, rng)
        data = gen_dataset(cfg, truth, rng)
        hp = _hyperparams_for(data.p, data.q, args).with_(seed=run_seed)
        if args.method == "jrns":
            chain = run_jrns(data, hp)
            summary = summarize_chain(chain)
            gamma_hat, eta_hat = summary.gamma_hat, summary.eta_hat
            b_hat, omega_hat = summary.B_hat, summary.Omega_hat
            ci_b = summary.ci_B
        else:
            result = run_stepwise(data, hp, b_estimator=args.b_estimator)
            gamma_hat, eta_hat = result.gamma_hat, result.eta_hat
            b_hat = result.b_hat
            s2 = summarize_chain(result.step2.chain)
            omega_hat = s2.Omega_hat
            ci_b, _ = credible_intervals(result.step1.chain)
        cb = confusion_counts(gamma_hat, truth.gamma_true, scope="full")
        co = confusion_counts(eta_hat, truth.eta_true, scope="upper")
        entries = list(zip(*np.nonzero(truth.gamma_true)))
        cov = coverage(ci_b, truth.B0, entries) if entries else float("nan")
        row.update({
            "mcc_B": mcc(cb), "mcc_Omega": mcc(co),
            "sensitivity_B": sensitivity(cb), "specificity_B": specificity(cb),
            "sensitivity_Omega": sensitivity(co), "specificity_Omega": specificity(co),
            "rel_err_B": relative_error(b_hat, truth.B0),
            "rel_err_Omega": relative_error(omega_hat, truth.Omega0),
            "coverage_B": cov if not np.isnan(cov) else None,
            "coverage_Omega": None,
        })
    except Exception as exc:  # partial results keep flowing
        row["status"] = f"failed: {exc}"
        for key in METRIC_KEYS:
            row.setdefault(key, None)
    return row


def cmd_experiment(args) -> int:
    reps = args.replicates
    if reps < 1:
        raise CliError("--replicates must be >= 1")
    started = time.perf_counter()
    jobs = list(range(reps))
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(lambda r: _replicate_job(args, args.seed, r), jobs))
    else:
        rows = [_replicate_job(args, args.seed, r) for r in jobs]
    header = ["replicate", "status", "data_seed", "run_seed", *METRIC_KEYS]
    table = [[row.get(col) for col in header] for row in rows]
    ok = [row for row in rows if row["status"] == "ok"]
    for label, reducer in (("mean", np.mean), ("sd", lambda v: np.std(v, ddof=1))):
        agg = [label, "", "", ""]
        for key in METRIC_KEYS:
            vals = [row[key] for row in ok if row.get(key) is not None]
            agg.append(float(reducer(vals)) if len(vals) > (1 if label == "sd" else 0) else None)
        table.append(agg)
    write_table(args.out, header, table)
    elapsed = time.perf_counter() - started
    failed = reps - len(ok)
    print(f"{reps} replicates ({failed} failed) in {elapsed:.1f}s; results in {args.out}")
    return 0


# ----------------------------------------------------------------------
# trace
# ----------------------------------------------------------------------

def _parse_entry(token: str):
    try:
        matrix, coords = token.split(":")
        row, col = coords.split(",")
        matrix = {"b": "B", "omega": "Omega"}[matrix.strip().lower()]
        return matrix, int(row) - 1, int(col) - 1
    except (ValueError, KeyError):
        raise CliError(
            f"bad entry {token!r}: expected B:row,col or Omega:row,col (1-based)"
        ) from None


def cmd_trace(args) -> int:
    chain_dir = Path(args.chain)
    draws_path = chain_dir / "draws.npz"
    if not draws_path.exists():
        raise CliError(
            f"no draws in {chain_dir}: run with --save-draws to store them"
        )
    with np.load(draws_path) as stored:
        b = stored["b"] if "b" in stored.files else None
        omega = stored["omega"] if "omega" in stored.files else None
    stored_count = len(b) if b is not None else len(omega)
    chain = SimpleNamespace(b_samples=b, omega_samples=omega,
                            iters_stored=stored_count)
    entries = [_parse_entry(token) for token in args.entries]
    header, tbl = export_traces(chain, entries)
    write_table(args.out, header, tbl.tolist())
    print(f"wrote {tbl.shape[0]} iterations x {len(entries)} entries to {args.out}")
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jrns",
        description="Joint and stepwise samplers for sparse multivariate "
                    "regression with precision-matrix selection",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="generate a synthetic dataset")
    sim.add_argument("--setting", type=int, choices=range(1, 7), default=None,
                     help="one of the six study settings")
    sim.add_argument("--n", type=int)
    sim.add_argument("--p", type=int)
    sim.add_argument("--q", type=int)
    sim.add_argument("--nnz-b", dest="nnz_b", type=int)
    sim.add_argument("--nnz-omega", dest="nnz_omega", type=int)
    sim.add_argument("--ar-rho", dest="ar_rho", type=float, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    run = sub.add_parser("run", help="run a sampler on CSV inputs")
    run.add_argument("--method", choices=("jrns", "stepwise"), required=True)
    run.add_argument("--x", required=True, help="design matrix CSV (n x p)")
    run.add_argument("--y", required=True, help="response matrix CSV (n x q)")
    run.add_argument("--out", required=True)
    run.add_argument("--burnin", type=int, default=None)
    run.add_argument("--iters", type=int, default=None)
    run.add_argument("--seed", type=int, default=None)
    run.add_argument("--thin", type=int, default=None)
    run.add_argument("--proposal-var", dest="proposal_var", type=float, default=None)
    run.add_argument("--config", default=None, help="key = value overrides")
    run.add_argument("--adaptive-q", dest="adaptive_q",
                     action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--adaptive-tau", dest="adaptive_tau",
                     action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--adaptive-lambda", dest="adaptive_lambda",
                     action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--exact-mh", dest="exact_mh",
                     action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--per-entry-hyper", dest="per_entry_hyper",
                     action=argparse.BooleanOptionalAction, default=None)
    run.add_argument("--save-draws", dest="save_draws", action="store_true")
    run.add_argument("--ci-level", dest="ci_level", type=float, default=0.95)
    run.add_argument("--b-estimator", dest="b_estimator",
                     choices=("ridge", "mcmc"), default="ridge",
                     help="stepwise B estimate fed to step 2")
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="score an estimate against the truth")
    met.add_argument("--est", required=True, help="directory from `run`")
    met.add_argument("--truth", required=True, help="directory from `simulate`")
    met.add_argument("--out", default=None)
    met.set_defaults(func=cmd_metrics)

    exp = sub.add_parser("experiment", help="replicated simulate-run-metrics")
    exp.add_argument("--setting", type=int, choices=range(1, 7), required=True)
    exp.add_argument("--replicates", type=int, required=True)
    exp.add_argument("--method", choices=("jrns", "stepwise"), required=True)
    exp.add_argument("--threads", type=int, default=1)
    exp.add_argument("--seed", type=int, default=0)
    exp.add_argument("--out", required=True)
    exp.add_argument("--burnin", type=int, default=None)
    exp.add_argument("--iters", type=int, default=None)
    exp.add_argument("--thin", type=int, default=None)
    exp.add_argument("--proposal-var", dest="proposal_var", type=float, default=None)
    exp.add_argument("--config", default=None)
    exp.add_argument("--adaptive-q", dest="adaptive_q",
                     action=argparse.BooleanOptionalAction, default=None)
    exp.add_argument("--adaptive-tau", dest="adaptive_tau",
                     action=argparse.BooleanOptionalAction, default=None)
    exp.add_argument("--adaptive-lambda", dest="adaptive_lambda",
                     action=argparse.BooleanOptionalAction, default=None)
    exp.add_argument("--exact-mh", dest="exact_mh",
                     action=argparse.BooleanOptionalAction, default=None)
    exp.add_argument("--per-entry-hyper", dest="per_entry_hyper",
                     action=argparse.BooleanOptionalAction, default=None)
    exp.add_argument("--b-estimator", dest="b_estimator",
                     choices=("ridge", "mcmc"), default="ridge")
    exp.set_defaults(func=cmd_experiment)

    trc = sub.add_parser("trace", help="export saved draws as plot-ready series")
    trc.add_argument("--chain", required=True, help="directory from `run --save-draws`")
    trc.add_argument("--entries", nargs="+", required=True,
                     help="entries like B:162,37 Omega:9,200 (1-based)")
    trc.add_argument("--out", required=True)
    trc.set_defaults(func=cmd_trace)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args) or 0
    except (CliError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
