"""``airis`` command line: CDF runs, outage sweeps, validation and figure presets.

Precedence for scenario values: command-line flags > ``--config`` file >
figure preset > built-in defaults.  Exit codes: 0 ok, 1 validation failure,
2 usage or configuration error.
"""

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
import time
from importlib import resources

import numpy as np

from . import __version__, kernels
from .analytic import (
    cdf_a2g,
    cdf_a2g_asymptotic,
    cdf_g2a,
    cdf_g2a_asymptotic,
    combine_outage,
    outage_e2e,
    se_threshold,
)
from .config import ScenarioError, build_blockage, build_link_budget, resolve_scenario
from .montecarlo import (
    EmpiricalCdf,
    SimRun,
    ks_distance,
    outage_e2e_empirical,
    phase_alignment_residual,
    sample_a2g,
    sample_g2a_sinr,
    simulate_markov_chain,
)
from .sisr import FitInfeasibleError

log = logging.getLogger("airis")

CDF_COLUMNS = ["x", "analytic", "asymptotic", "empirical", "stderr"]
SWEEP_COLUMNS = ["sweep_var", "op_analytic", "op_empirical", "stderr"]
VALIDATE_COLUMNS = ["check", "value", "tolerance", "status"]

SE_GRID = "0:0.1:4"

# Figure families.  Each entry of ``curves`` is merged over ``base``.
FIGURES = {
    "fig2": {
        "kind": "cdf-e2e",
        "base": {"p_s_dbm": 0.0, "p_u_dbm": 0.0, "blockage": {"beta": 0.0}},
        "curves": [{"M": 2, "N": 16}, {"M": 4, "N": 16}, {"M": 2, "N": 64}, {"M": 4, "N": 64}],
        "se": SE_GRID,
    },
    "fig3": {
        "kind": "op-count-sweep",
        "base": {"p_s_dbm": 23.0, "p_u_dbm": 23.0, "blockage": {"beta": 0.0}, "rate_se": 0.5},
        "curves": [
            {"label": "M", "vary": "M", "values": [1, 2, 3, 4, 5, 6, 7, 8], "N": 16},
            {"label": "N", "vary": "N", "values": [4, 16, 36, 64, 100, 144, 196, 256], "M": 2},
        ],
    },
    "fig4": {
        "kind": "op-power",
        "base": {"M": 4, "blockage": {"beta": 0.0}, "rate_se": 0.5},
        "curves": [{"N": 24}, {"N": 48}, {"N": 64}],
        "p_dbm": "10:5:50",
    },
    "fig5": {
        "kind": "op-power",
        # 6 antennas at the source, 144 RIS elements
        "base": {"M": 6, "N": 144, "rate_se": 0.5},
        "curves": [
            {"label": "ris_beta0", "blockage": {"beta": 0.0}},
            {"label": "ris_beta0.95", "blockage": {"beta": 0.95}},
            {"label": "noris_beta0", "N": 0, "blockage": {"beta": 0.0}},
            {"label": "noris_beta0.01", "N": 0, "blockage": {"beta": 0.01}},
        ],
        "p_dbm": "0:5:50",
    },
    "fig6": {
        "kind": "op-beta",
        # 42 dBm puts the N = 196 curve near an outage of 1e-4
        "base": {"M": 4, "rate_se": 1.0, "p_s_dbm": 42.0, "p_u_dbm": 42.0},
        "curves": [{"N": 64}, {"N": 100}, {"N": 144}, {"N": 196}],
        "beta": "0:0.05:1",
    },
}


class UsageError(Exception):
    pass


def parse_grid(text):
    """``"a:step:b"`` (inclusive) or a comma list into a float array."""
    text = str(text).strip()
    try:
        if ":" in text:
            a, step, b = (float(v) for v in text.split(":"))
            if step <= 0 or b < a:
                raise ValueError
            count = int(math.floor((b - a) / step + 1e-9)) + 1
            return np.round(a + step * np.arange(count), 12)
        return np.array([float(v) for v in text.split(",") if v.strip()])
    except ValueError:
        raise UsageError(f"bad grid {text!r}: use start:step:stop or a comma list") from None


def _grid(flag, from_file, default):
    if flag:
        return parse_grid(flag)
    if from_file:
        return np.asarray(from_file, dtype=float)
    return parse_grid(default)


def fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_csv(path, columns, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _merge(base, extra):
    out = dict(base)
    for k, v in extra.items():
        if k in ("label", "vary", "values"):
            continue
        if k == "positions" and k in out:
            merged = dict(out[k])
            merged.update(v)
            out[k] = merged
        else:
            out[k] = v
    return out


def _flag_overrides(args):
    over = {}
    if args.psi is not None:
        over["psi_su"] = args.psi
        over["psi_a2g"] = args.psi
    if args.fit_order is not None:
        over["a2g_fit_order"] = args.fit_order
    if args.strict_paper_alpha:
        over["strict_paper_alpha"] = True
    if args.a2g_mode is not None:
        over["a2g_mode"] = args.a2g_mode
    if args.rate_se is not None:
        over["rate_se"] = args.rate_se
    return over


def _read_raw(path):
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ScenarioError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: top level must be an object")
    return raw


def scenario_for(preset, file_raw, curve, flags):
    """Resolve preset < curve < file < flags into a ScenarioConfig."""
    raw = _merge(preset, curve)
    raw = _merge(raw, file_raw)
    raw = _merge(raw, flags)
    return resolve_scenario(raw)


def _model(cfg):
    budget = build_link_budget(cfg)
    return budget, build_blockage(cfg, budget)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------

def cdf_rows(cfg, which, xs, run):
    budget, blockage = _model(cfg)
    if which == "g2a":
        exact = cdf_g2a(budget, xs)
        asym = cdf_g2a_asymptotic(budget, xs)
    elif which == "a2g":
        exact = cdf_a2g(budget, blockage, xs)
        asym = cdf_a2g_asymptotic(budget, blockage, xs)
    else:
        exact = combine_outage(cdf_g2a(budget, xs), cdf_a2g(budget, blockage, xs))
        asym = combine_outage(cdf_g2a_asymptotic(budget, xs), cdf_a2g_asymptotic(budget, blockage, xs))
    emp = err = [None] * len(xs)
    if run is not None:
        if which == "g2a":
            samples = sample_g2a_sinr(budget, run)
        elif which == "a2g":
            samples = sample_a2g(budget, run, blockage)["sinr"]
        else:
            samples = np.minimum(sample_g2a_sinr(budget, run), sample_a2g(budget, run, blockage)["sinr"])
        e = EmpiricalCdf(samples)
        # strict inequality P(Gamma < x), matching the analytic CDF at atoms
        emp = np.searchsorted(e.values, xs, side="left") / e.n
        err = np.sqrt(emp * (1.0 - emp) / e.n)
    return [(x, f, a, m, s) for x, f, a, m, s in zip(xs, exact, asym, emp, err)]


def op_row(cfg, var, run):
    budget, blockage = _model(cfg)
    op = outage_e2e(budget, blockage, cfg.rate_se)
    if run is None:
        return (var, op, None, None)
    p, se = outage_e2e_empirical(budget, blockage, cfg.rate_se, run)
    return (var, op, p, se)


def run_validate(cfg, run):
    """Analytic-vs-simulation checks; returns rows ``(check, value, tol, status)``."""
    budget, blockage = _model(cfg)
    rows = []

    def check(name, value, tol, ok=None):
        passed = (value <= tol) if ok is None else ok
        rows.append((name, value, tol, "PASS" if passed else "FAIL"))

    g2a = sample_g2a_sinr(budget, run)
    check("g2a_ks", ks_distance(EmpiricalCdf(g2a), lambda x: cdf_g2a(budget, x)), 0.01)
    a2g = sample_a2g(budget, run, blockage)
    check("a2g_ks", ks_distance(EmpiricalCdf(a2g["sinr"]), lambda x: cdf_a2g(budget, blockage, x)), 0.015)

    tau = se_threshold(cfg.rate_se)
    op = outage_e2e(budget, blockage, cfg.rate_se)
    hit = np.minimum(g2a, a2g["sinr"]) < tau
    p = float(hit.mean())
    sigma = math.sqrt(max(op * (1.0 - op), 1e-300) / hit.size)
    check("e2e_op_zscore", abs(p - op) / sigma, 3.0)

    n = a2g["phi0"].size
    up = float(a2g["phi0"].mean())
    sigma = math.sqrt(max(blockage.pi1 * blockage.pi0, 1e-300) / n)
    if blockage.memoryless:
        check("unblocked_fraction_zscore", abs(up - blockage.pi1) / sigma, 3.0)
    else:
        trace = simulate_markov_chain(blockage.transition, 10**6, run.seed)
        P = blockage.transition
        # Markov CLT variance of the occupancy mean
        lam2 = 1.0 - P[0, 1] - P[1, 0]
        var = blockage.pi0 * blockage.pi1 * (1.0 + lam2) / (1.0 - lam2) / trace.size
        check("chain_occupancy_zscore", abs(trace.mean() - blockage.pi1) / math.sqrt(max(var, 1e-300)), 3.0)
    on = a2g["phi0"] == 1
    margin = float(a2g["direct"][on].min() - blockage.tau) if on.any() else 0.0
    check("censoring_min_margin", margin, 0.0, ok=margin >= 0.0)
    check("phase_alignment_residual", phase_alignment_residual(cfg, budget, blockage, seed=run.seed), 1e-9)
    return rows


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

SUBCOMMANDS = ("cdf-g2a", "cdf-a2g", "op-power-sweep", "op-beta-sweep", "validate",
               "fig2", "fig3", "fig4", "fig5", "fig6")


def build_parser():
    p = argparse.ArgumentParser(prog="airis", description="UAV-RIS SINR and outage toolkit")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", help="scenario JSON (schema: airis/schema/scenario.schema.json)")
    p.add_argument("--seed", type=int, default=0, help="unsigned 64-bit Monte Carlo seed")
    p.add_argument("--trials", type=int, default=None,
                   help="Monte Carlo trials (0 skips simulation; default 1e6 for validate, 1e5 otherwise)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--psi", type=int, default=None, help="SISR shape for both hops")
    p.add_argument("--fit-order", type=int, default=None, help="SISR count I for the A2G fit")
    p.add_argument("--strict-paper-alpha", action="store_true",
                   help="scale the A2G argument with the cascade-only fitted alpha")
    p.add_argument("--a2g-mode", choices=("conditioned", "single"), default=None)
    p.add_argument("--rate-se", type=float, default=None, help="target SE in bps/Hz")
    p.add_argument("--se", default=None, help="SE grid for CDF runs, start:step:stop")
    p.add_argument("--p-dbm", default=None, help="power grid for power sweeps, start:step:stop")
    p.add_argument("--beta", default=None, help="blockage grid for beta sweeps, start:step:stop")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _manifest(args, outputs, configs, started, extra=None):
    import scipy

    doc = {
        "subcommand": args.subcommand,
        "argv": sys.argv[1:],
        "seed": args.seed,
        "trials": args.trials,
        "outputs": outputs,
        "configs": configs,
        "versions": {
            "airis": __version__,
            "kernel_backend": kernels.BACKEND,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
        "threads": os.environ.get("AIRIS_THREADS"),
        "wall_time_s": round(time.time() - started, 3),
    }
    if extra:
        doc.update(extra)
    return doc


def run(args):
    started = time.time()
    sub = args.subcommand
    if args.trials is None:
        args.trials = 10**6 if sub == "validate" else 10**5
    if args.trials < 0:
        raise UsageError("--trials must be non-negative")
    sim = SimRun(args.trials, seed=args.seed) if args.trials > 0 else None
    file_raw = _read_raw(args.config)
    flags = _flag_overrides(args)
    os.makedirs(args.out, exist_ok=True)
    outputs, configs, status = [], [], 0

    def emit(name, columns, rows, cfg):
        path = os.path.join(args.out, name)
        write_csv(path, columns, rows)
        outputs.append(name)
        configs.append({"output": name, "scenario": cfg.to_dict()})
        log.info("wrote %s", path)

    if sub in ("cdf-g2a", "cdf-a2g"):
        cfg = scenario_for({}, file_raw, {}, flags)
        xs = 2.0 ** parse_grid(args.se or SE_GRID) - 1.0
        emit(sub.replace("-", "_") + ".csv", CDF_COLUMNS, cdf_rows(cfg, sub[4:], xs, sim), cfg)
    elif sub == "op-power-sweep":
        cfg = scenario_for({}, file_raw, {}, flags)
        grid = _grid(args.p_dbm, cfg.sweep.get("p_dbm"), "0:5:40")
        rows = [op_row(cfg.with_updates(p_s_dbm=float(p), p_u_dbm=float(p)), p, sim) for p in grid]
        emit("op_power_sweep.csv", SWEEP_COLUMNS, rows, cfg)
    elif sub == "op-beta-sweep":
        cfg = scenario_for({}, file_raw, {}, flags)
        grid = _grid(args.beta, cfg.sweep.get("beta"), "0:0.1:1")
        rows = [op_row(cfg.with_updates(blockage={"beta": float(b)}), b, sim) for b in grid]
        emit("op_beta_sweep.csv", SWEEP_COLUMNS, rows, cfg)
    elif sub == "validate":
        cfg = scenario_for({}, file_raw, {}, flags)
        if sim is None:
            raise UsageError("validate needs --trials > 0")
        rows = run_validate(cfg, sim)
        for name, value, tol, verdict in rows:
            print(f"{verdict} {name} value={value:.6g} tolerance={tol:g}")
        emit("validate.csv", VALIDATE_COLUMNS, rows, cfg)
        status = 0 if all(r[3] == "PASS" for r in rows) else 1
    else:
        fig = FIGURES[sub]
        for curve in fig["curves"]:
            cfg = scenario_for(fig["base"], file_raw, curve, flags)
            label = curve.get("label") or "_".join(f"{k}{v}" for k, v in curve.items() if k in ("M", "N"))
            name = f"{sub}_{label}.csv"
            if fig["kind"] == "cdf-e2e":
                xs = 2.0 ** parse_grid(args.se or fig["se"]) - 1.0
                emit(name, CDF_COLUMNS, cdf_rows(cfg, "e2e", xs, sim), cfg)
            elif fig["kind"] == "op-count-sweep":
                rows = [op_row(cfg.with_updates(**{curve["vary"]: int(v)}), v, sim) for v in curve["values"]]
                emit(name, SWEEP_COLUMNS, rows, cfg)
            elif fig["kind"] == "op-power":
                grid = parse_grid(args.p_dbm or fig["p_dbm"])
                rows = [op_row(cfg.with_updates(p_s_dbm=float(p), p_u_dbm=float(p)), p, sim) for p in grid]
                emit(name, SWEEP_COLUMNS, rows, cfg)
            else:
                grid = parse_grid(args.beta or fig["beta"])
                rows = [op_row(cfg.with_updates(blockage={"beta": float(b)}), b, sim) for b in grid]
                emit(name, SWEEP_COLUMNS, rows, cfg)

    manifest = _manifest(args, outputs, configs, started, {"exit_code": status})
    mpath = os.path.join(args.out, f"{sub}.manifest.json")
    with open(mpath, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, default=str)
        fh.write("\n")
    return status


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)  # exits with status 2 on usage errors
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return run(args)
    except (UsageError, ScenarioError, FitInfeasibleError) as exc:
        print(f"airis: error: {exc}", file=sys.stderr)
        return 2


def default_scenario_path():
    return str(resources.files("airis").joinpath("presets/baseline.json"))


if __name__ == "__main__":
    sys.exit(main())
