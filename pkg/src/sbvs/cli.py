"""
Command-line entry point.

Subcommands: ``select``, ``simulate``, ``cv`` and ``oracle-check``. Any
subcommand accepts ``--config FILE`` holding ``key = value`` lines (``#``
starts a comment); flags given on the command line win over the file.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from .experiments import (ExperimentCell, ExperimentGrid, loocv_median_square_error,
                          resolve_workers, run_grid)
from .gibbs import GibbsConfig
from .marginal import Dataset, PriorConfig
from .oracle import P_CAP, enumerate_posteriors
from .screening import ScreeningConfig
from .selector import two_step_select
from .simgen import ScenarioSpec, generate_dataset

log = logging.getLogger("sbvs")


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------

def parse_bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_sigma(text):
    """``jeffreys`` -> None, ``known:VALUE`` -> float."""
    t = str(text).strip().lower()
    if t == "jeffreys":
        return None
    if t.startswith("known:"):
        try:
            v = float(t.split(":", 1)[1])
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad sigma value {text!r}") from None
        if not v > 0:
            raise argparse.ArgumentTypeError("known sigma^2 must be positive")
        return v
    raise argparse.ArgumentTypeError(f"sigma must be 'jeffreys' or 'known:VALUE', got {text!r}")


def parse_int_list(text):
    try:
        return [int(v) for v in str(text).replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected integers, got {text!r}") from None


def read_config(path) -> dict:
    """Read ``key = value`` lines; keys are normalised to use underscores."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def read_csv_dataset(path, response: str) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if response not in header:
        raise UsageError(f"{path}: response column {response!r} not found")
    r_idx = header.index(response)
    cov_idx = [i for i in range(len(header)) if i != r_idx]
    if not cov_idx:
        raise UsageError(f"{path}: no covariate columns")
    body = [r for r in rows[1:] if r]
    vals = np.empty((len(body), len(header)))
    for i, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise UsageError(f"{path}: row {i} has {len(row)} fields, expected {len(header)}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                raise UsageError(f"{path}: missing value at row {i}, column {header[j]!r}")
            try:
                vals[i - 2, j] = float(cell)
            except ValueError:
                raise UsageError(
                    f"{path}: non-numeric value {cell!r} at row {i}, column {header[j]!r}") from None
            if not np.isfinite(vals[i - 2, j]):
                raise UsageError(f"{path}: non-finite value at row {i}, column {header[j]!r}")
    if vals.shape[0] < 3:
        raise UsageError(f"{path}: need at least 3 data rows, found {vals.shape[0]}")
    return Dataset(vals[:, r_idx], vals[:, cov_idx], [header[i] for i in cov_idx])


def _fmt(v) -> str:
    return repr(float(v))


def _seed(args) -> int:
    if args.seed is None:
        seed = int(np.random.SeedSequence().entropy)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    return int(args.seed)


def _sub_seeds(seed, k):
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(k)]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

SELECT_FIELDS = ["record", "name", "value"]


def cmd_select(args) -> int:
    data = read_csv_dataset(args.data, args.response)
    seed = _seed(args)
    s_seed, g_seed = _sub_seeds(seed, 2)
    workers = resolve_workers(args.workers)
    d = args.d
    if d is not None and d > data.p:
        warnings.warn(f"--d {d} exceeds the number of covariates; clamped to {data.p}")
        d = data.p
    res = two_step_select(
        data,
        ScreeningConfig(d=d, g_screen=args.g_screen, seed=s_seed,
                        max_passes=args.max_passes, parallel_workers=workers),
        GibbsConfig(g_select=args.g_select, seed=g_seed, sweeps=args.sweeps),
        sigma2=args.sigma, standardize=args.standardize)
    coefs = res.original_scale_coefficients()
    rows = []
    for j, b, bs in zip(res.selected, coefs, res.coefficients):
        rows.append(("coefficient", data.names[j], _fmt(b)))
        if res.standardizer is not None:
            rows.append(("coefficient_standardized", data.names[j], _fmt(bs)))
    if res.standardizer is not None:
        rows.append(("intercept", "", _fmt(res.intercept())))
    rows.append(("log_weight", "", _fmt(res.log_weight)))
    for j in res.screened:
        rows.append(("screened", data.names[j], ""))
    diag = res.diagnostics
    for key in ("d", "g_screen", "g_select", "passes", "screen_evaluations", "sweeps"):
        rows.append(("diagnostic", key, str(diag[key])))
    rows.append(("diagnostic", "seed", str(seed)))
    if args.out:
        with open(args.out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(SELECT_FIELDS)
            w.writerows(rows)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(SELECT_FIELDS)
        w.writerows(rows)
    names = ", ".join(res.selected_names) or "(none)"
    print(f"selected {len(res.selected)} of {data.p} covariates: {names}; "
          f"log weight {res.log_weight:.6g}", file=sys.stdout if args.out else sys.stderr)
    print(f"screening {diag['screen_seconds']:.3f}s, gibbs {diag['gibbs_seconds']:.3f}s",
          file=sys.stderr)
    return 0


GRID_KEYS = {
    "n": int, "p": int, "cov_case": str, "error_law": str, "beta_pattern": str,
    "support_size": int, "d": int, "reps": int, "sweeps": int, "max_passes": int,
    "g_screen": float, "g_select": float, "sigma": parse_sigma,
    "standardize": parse_bool, "error_scale": float,
}


def parse_grid(cfg: dict, reps_override=None):
    """
    Expand a flat ``key = value`` grid into cells.

    A value may list several comma-separated options; cells are the
    Cartesian product over keys in file order. A file without ``n`` and
    ``p`` describes an empty grid.
    """
    unknown = [k for k in cfg if k not in GRID_KEYS]
    if unknown:
        raise UsageError(f"unknown grid key {unknown[0]!r}")
    if "n" not in cfg and "p" not in cfg:
        return []
    if "n" not in cfg or "p" not in cfg:
        raise UsageError("grid needs both 'n' and 'p'")
    options = {}
    for key, raw in cfg.items():
        conv = GRID_KEYS[key]
        try:
            options[key] = [conv(v.strip()) for v in raw.split(",") if v.strip()]
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"grid key {key!r}: {exc}") from None
    cells = []
    keys = list(options)
    for combo in itertools.product(*(options[k] for k in keys)):
        o = dict(zip(keys, combo))
        spec = ScenarioSpec(
            n=o["n"], p=o["p"], cov_case=o.get("cov_case", "identity"),
            error_law=o.get("error_law", "gaussian"),
            beta_pattern=o.get("beta_pattern", "constant"),
            support_size=o.get("support_size"), error_scale=o.get("error_scale", 1.0))
        cells.append(ExperimentCell(
            spec=spec,
            reps=reps_override if reps_override is not None else o.get("reps", 50),
            screen=ScreeningConfig(d=o.get("d"), g_screen=o.get("g_screen"),
                                   max_passes=o.get("max_passes", 30),
                                   parallel_workers=1),
            gibbs=GibbsConfig(g_select=o.get("g_select"), sweeps=o.get("sweeps", 1000)),
            sigma2=o.get("sigma"),
            standardize=o.get("standardize", False)))
    return cells


def cmd_simulate(args) -> int:
    cfg = read_config(args.grid)
    try:
        cells = parse_grid(cfg, args.reps)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    seed = _seed(args)
    grid = ExperimentGrid(cells, master_seed=seed, out_dir=Path(args.out))
    summaries = run_grid(grid, workers=resolve_workers(args.workers))
    for c, s in zip(cells, summaries):
        sp = c.spec
        print(f"cell {s.cell}: n={sp.n} p={sp.p} {sp.cov_case}/{sp.error_law}/"
              f"{sp.beta_pattern} exact={s.proportion_exact:.3f} "
              f"superset={s.proportion_superset:.3f} "
              f"mean_runtime={s.mean_runtime:.3f}s", file=sys.stderr)
    return 1 if any(s.failed for s in summaries) else 0


def cmd_cv(args) -> int:
    data = read_csv_dataset(args.data, args.response)
    seed = _seed(args)
    s_seed, g_seed = _sub_seeds(seed, 2)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary, folds = [], []
    for d in args.d_list:
        r = loocv_median_square_error(
            data, d, ScreeningConfig(seed=s_seed, g_screen=args.g_screen, parallel_workers=1),
            GibbsConfig(seed=g_seed, g_select=args.g_select, sweeps=args.sweeps),
            sigma2=args.sigma, standardize=args.standardize)
        summary.append([d, _fmt(r.median_sq_err), _fmt(r.mean_sq_err)])
        for i in range(data.n):
            folds.append([d, i, _fmt(data.y[i]), _fmt(r.predictions[i]),
                          _fmt(r.sq_errors[i]),
                          " ".join(data.names[j] for j in r.selections[i])])
        print(f"d={d}: median sq err {r.median_sq_err:.6g}, mean {r.mean_sq_err:.6g}",
              file=sys.stderr)
    with open(out / "cv_summary.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "median_sq_err", "mean_sq_err"])
        w.writerows(summary)
    with open(out / "cv_folds.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["d", "fold", "y", "prediction", "sq_error", "selected"])
        w.writerows(folds)
    return 0


def oracle_check(n, p, seed, d=None, support=None, sigma2=None, sweeps=1000):
    """
    Compare the two-step pipeline with full enumeration on a small identity-design instance.

    The enumeration uses the selection-step prior (``g = d**2``, ``q = 1/p``).
    """
    if p > P_CAP:
        raise UsageError(f"--p must be <= {P_CAP}")
    d = d if d is not None else max(1, min(p, n // 4))
    d = min(d, p, n)
    k = support if support is not None else min(3, p)
    data_seed, s_seed, g_seed = _sub_seeds(seed, 3)
    truth = generate_dataset(ScenarioSpec(n=n, p=p, support_size=k),
                             np.random.default_rng(data_seed))
    data = truth.dataset
    res = two_step_select(data, ScreeningConfig(d=d, seed=s_seed, parallel_workers=1),
                          GibbsConfig(seed=g_seed, sweeps=sweeps), sigma2=sigma2)
    prior = PriorConfig(g=res.diagnostics["g_select"], sigma2=sigma2)
    enum = enumerate_posteriors(data, prior)
    restricted, _ = enum.restricted_best(res.screened)
    return {
        "truth": truth, "result": res, "enumeration": enum,
        "agree_global": res.selected == enum.best,
        "agree_screened": res.selected == restricted,
        "normalized_sum": float(enum.normalized().sum()),
    }


def cmd_oracle_check(args) -> int:
    seed = _seed(args)
    out = oracle_check(args.n, args.p, seed, args.d, args.support, args.sigma, args.sweeps)
    enum = out["enumeration"]
    res = out["result"]
    if args.table_out:
        probs = enum.normalized()
        with open(args.table_out, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["subset", "size", "log_weight", "probability"])
            for s, lw, pr in zip(enum.subsets, enum.weights, probs):
                w.writerow([" ".join(str(j) for j in s), len(s), _fmt(lw), _fmt(pr)])
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["seed", "true_support", "selected", "screened", "oracle_best",
                "agree_global", "agree_screened", "normalized_sum"])
    w.writerow([seed, " ".join(map(str, out["truth"].true_support)),
                " ".join(map(str, res.selected)), " ".join(map(str, res.screened)),
                " ".join(map(str, enum.best)), int(out["agree_global"]),
                int(out["agree_screened"]), _fmt(out["normalized_sum"])])
    return 0


# ---------------------------------------------------------------------------
# argument parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sbvs", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="key = value file; flags override it")
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int,
                       help="parallelism cap (default: $SBS_WORKERS or all cores)")

    p = sub.add_parser("select", help="two-step selection on a CSV dataset")
    common(p)
    p.add_argument("--data")
    p.add_argument("--response")
    p.add_argument("--d", type=int)
    p.add_argument("--g-screen", type=float)
    p.add_argument("--g-select", type=float)
    p.add_argument("--sigma", type=parse_sigma)
    p.add_argument("--standardize", type=parse_bool)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--max-passes", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_select, required=("data", "response"),
                   defaults=dict(sigma=None, standardize=True, sweeps=1000, max_passes=30))

    p = sub.add_parser("simulate", help="run a simulation grid")
    common(p)
    p.add_argument("--grid")
    p.add_argument("--reps", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate, required=("grid", "out"), defaults={})

    p = sub.add_parser("cv", help="leave-one-out prediction error per screening size")
    common(p)
    p.add_argument("--data")
    p.add_argument("--response")
    p.add_argument("--d-list", type=parse_int_list)
    p.add_argument("--g-screen", type=float)
    p.add_argument("--g-select", type=float)
    p.add_argument("--sigma", type=parse_sigma)
    p.add_argument("--standardize", type=parse_bool)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_cv, required=("data", "response", "d_list", "out"),
                   defaults=dict(sigma=None, standardize=True, sweeps=1000))

    p = sub.add_parser("oracle-check", help="compare with exhaustive enumeration")
    common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--d", type=int)
    p.add_argument("--support", type=int)
    p.add_argument("--sigma", type=parse_sigma)
    p.add_argument("--sweeps", type=int)
    p.add_argument("--table-out")
    p.set_defaults(func=cmd_oracle_check, required=("n", "p"),
                   defaults=dict(sigma=None, sweeps=1000))
    return parser


_CONVERTERS = {
    "seed": int, "workers": int, "d": int, "g_screen": float, "g_select": float,
    "sigma": parse_sigma, "standardize": parse_bool, "sweeps": int,
    "max_passes": int, "reps": int, "d_list": parse_int_list, "n": int, "p": int,
    "support": int,
}


def _merge_config(args, parser):
    # flags > config file > subcommand defaults
    skip = {"command", "func", "required", "defaults", "config", "verbose"}
    known = set(vars(args)) - skip
    if args.config:
        for key, raw in read_config(args.config).items():
            if key not in known:
                raise UsageError(f"unknown config key {key!r}")
            if getattr(args, key) is None:
                conv = _CONVERTERS.get(key, str)
                try:
                    setattr(args, key, conv(raw))
                except (ValueError, argparse.ArgumentTypeError) as exc:
                    raise UsageError(f"config key {key!r}: {exc}") from None
    for key, value in args.defaults.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    missing = [k for k in args.required if getattr(args, k) is None]
    if missing:
        raise UsageError("missing required option(s): "
                         + ", ".join("--" + k.replace("_", "-") for k in missing))


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.captureWarnings(True)
    try:
        _merge_config(args, parser)
        return args.func(args)
    except (UsageError, OSError, ValueError) as exc:
        print(f"sbvs {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
