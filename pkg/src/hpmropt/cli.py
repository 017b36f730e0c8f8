"""Command-line entry point: ``hpmropt sample|train|optimize|report|baseline``.

Each invocation creates one run directory under ``--out`` holding its
output files, the resolved config and a ``manifest.json``. Text outputs
start with ``#`` lines recording the command, config hash and seed; no
timestamps are written, so equal (config, seed) runs give equal bytes.

On failure the process exits nonzero and prints one JSON line to stderr::

    hpmropt-error {"command": "train", "type": "SchemaError", "message": "..."}
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import design as dg
from .config import ConfigError, RunConfig
from .econ import GROUPS, evaluate_ledger, ledger_report
from .pipeline import build_cost, build_oracle, parse_design, sample_dataset
from .rl.train import champions_csv, random_search_baseline, trace_csv, train
from .surrogate.dataset import Dataset, correlation_csv, correlation_matrix, fmt
from .surrogate.twostage import SurrogateEvaluator, TwoStagePredictor, fit_two_stage, kfold_r2

log = logging.getLogger("hpmropt")

COMMANDS = ("sample", "train", "optimize", "report", "baseline")
BUDGET_SECTION = {"sample": "sampling", "optimize": "optimize", "baseline": "baseline"}
EXIT_RUNTIME = 1
EXIT_CONFIG = 2


class DegenerateDatasetError(ValueError):
    pass


class NonStarterError(RuntimeError):
    pass


# ------------------------------------------------------------------ run directory

class Run:
    """Output directory of one invocation; single writer."""

    def __init__(self, cfg: RunConfig, command: str):
        self.cfg = cfg
        self.command = command
        base = Path(cfg["out"])
        stem = f"{command}-{cfg.mode}-s{cfg.seed}-{cfg.hash[:10]}"
        path = base / stem
        k = 2
        while path.exists():
            path = base / f"{stem}-{k}"
            k += 1
        path.mkdir(parents=True)
        self.path = path
        self.files = {}
        self.summary = {}

    @property
    def header(self) -> str:
        return f"# hpmropt {self.command}\n# config_sha256={self.cfg.hash}\n# seed={self.cfg.seed}\n"

    def write(self, name: str, text: str, header: bool = True) -> Path:
        body = (self.header if header else "") + text
        p = self.path / name
        p.write_text(body)
        self.files[name] = hashlib.sha256(body.encode()).hexdigest()
        return p

    def finish(self, status: str = "ok", error: dict | None = None) -> None:
        self.write("config.yaml", self.cfg.dump())
        manifest = {
            "command": self.command,
            "status": status,
            "config_sha256": self.cfg.hash,
            "config_source": self.cfg.source,
            "seed": self.cfg.seed,
            "mode": self.cfg.mode,
            "files": dict(sorted(self.files.items())),
            "summary": self.summary,
        }
        if error:
            manifest["error"] = error
        (self.path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    return str(v)


def _rows_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


# ------------------------------------------------------------------ commands

def cmd_sample(cfg: RunConfig, run: Run) -> Dataset:
    s = cfg["sampling"]
    ds, counts = sample_dataset(
        s["budget"], cfg.seed, build_oracle(cfg), cfg.costs(), cfg.finance(), cfg.constants(),
        method=s["method"], workers=cfg.workers, chunk=s["chunk"],
    )
    run.write("dataset.csv", ds.to_csv_text())
    if len(ds) >= 3:
        try:
            names, C = correlation_matrix(ds)
            run.write("correlations.csv", correlation_csv(names, C))
        except ValueError as exc:
            log.warning("correlation matrix skipped: %s", exc)
    run.summary.update(counts, retained=len(ds))
    return ds


def cmd_train(cfg: RunConfig, run: Run, dataset_path) -> TwoStagePredictor:
    if dataset_path is None:
        raise ConfigError("train needs a dataset (--dataset or paths.dataset)")
    ds = Dataset.read_csv(dataset_path)
    need = int(cfg["surrogate"]["min_rows"])
    if len(ds) < need:
        raise DegenerateDatasetError(f"dataset has {len(ds)} rows; training needs at least {need}")
    scfg = cfg.surrogate()
    model = fit_two_stage(ds, scfg, rank=True)
    doc = json.loads(model.to_json())
    doc["provenance"] = {"config_sha256": cfg.hash, "seed": cfg.seed, "dataset_rows": len(ds)}
    run.write("model.json", json.dumps(doc, indent=1, sort_keys=True) + "\n", header=False)
    cv = kfold_r2(scfg, ds, k=int(cfg["surrogate"]["cv_folds"]), seed=cfg.seed)
    rows = []
    for t, folds in cv["folds"].items():
        rows += [[t, str(i + 1), fmt(r)] for i, r in enumerate(folds)]
        rows.append([t, "mean", fmt(cv["mean"][t])])
    run.write("cv_report.csv", _rows_csv(["target", "fold", "r2"], rows))
    imp_rows = [[t, n, fmt(v)] for t, imp in model.importances.items() for n, v in imp.items()]
    run.write("importances.csv", _rows_csv(["target", "feature", "importance"], imp_rows))
    run.summary.update(rows=len(ds), stage1_features=model.stage1_features, stage2_features=model.stage2_features,
                       cv_r2=cv["mean"])
    return model


def cmd_optimize(cfg: RunConfig, run: Run, model_path=None, oracle: bool = False):
    rom = build_oracle(cfg)
    if oracle:
        evaluator = rom
    else:
        if model_path is None:
            raise ConfigError("optimize needs a trained model (--model or paths.model) or --oracle")
        evaluator = SurrogateEvaluator(TwoStagePredictor.from_json(Path(model_path).read_text()))
    cost = build_cost(cfg, rom)
    res = train(evaluator, cost, cfg.spec(), cfg.train(), full_evaluator=rom)
    run.write("trace.csv", trace_csv(res.trace))
    run.write("champions.csv", champions_csv(res.candidates))
    ch = res.champion
    run.summary.update(
        evaluator=getattr(evaluator, "oracle_id", "unknown"), samples=res.samples, failures=res.failures,
        lcoe_cap=cost.cap, candidates=len(res.candidates),
        champion=None if ch is None else {
            "design": dict(zip(dg.PARAM_NAMES, ch.x.tolist())),
            "predicted_lcoe": ch.lcoe, "true_lcoe": ch.true_lcoe, "true_feasible": ch.true_feasible,
        },
    )
    return res


def cmd_report(cfg: RunConfig, run: Run, design_spec=None):
    x = parse_design(design_spec if design_spec is not None else cfg["report"]["design"])
    design = dg.validate(dg.DesignPoint.from_array(x))
    q = build_oracle(cfg).evaluate(design, include_itc=True)
    qrows = [[k, fmt(v)] for k, v in q.to_dict().items()]
    run.write("qois.csv", _rows_csv(["qoi", "value"], qrows))
    run.summary.update(design=design.to_row(), qois=q.to_dict())
    if not q.lifetime > 0:
        run.write("report.txt", f"non-starter design: lifetime {q.lifetime:.4g} y, no cost ledger\n")
        raise NonStarterError(f"design is a non-starter (extrapolated lifetime {q.lifetime:.4g} y); no ledger")
    ledger = evaluate_ledger(design, q.lifetime, cfg.costs(), cfg.finance(), cfg.constants())
    text_csv, table = ledger_report(ledger)
    run.write("ledger.csv", text_csv)
    for group in GROUPS:
        rows = sorted(((n, a[2], a[1]) for n, a in ledger.accounts.items() if a[0] == group), key=lambda r: -r[2])
        run.write(f"ledger_{group}.csv", _rows_csv(
            ["account", "annualized_cost_usd2024", "lcoe_share_usd_per_mwh"],
            [[n, f"{ann:.6f}", f"{sh:.9f}"] for n, ann, sh in rows],
        ))
    totals = ledger.group_totals()
    grows = [[g, f"{totals[g]:.9f}", ledger.largest(g)] for g in GROUPS]
    grows += [["lcoe_foak", f"{ledger.lcoe_foak:.9f}", ""], ["lcoe_noak", f"{ledger.lcoe_noak:.9f}", ""]]
    run.write("groups.csv", _rows_csv(["group", "lcoe_usd_per_mwh", "largest_account"], grows))
    run.write("report.txt", table)
    run.summary.update(lcoe_foak=ledger.lcoe_foak, lcoe_noak=ledger.lcoe_noak, group_totals=totals,
                       capacity_factor=ledger.capacity_factor)
    return ledger


def cmd_baseline(cfg: RunConfig, run: Run):
    rom = build_oracle(cfg)
    cost = build_cost(cfg, rom)
    b = cfg["baseline"]
    res = random_search_baseline(b["budget"], cfg.seed, rom, cost, cfg.spec(), epoch_samples=b["epoch_samples"])
    run.write("trace.csv", trace_csv(res.trace))
    best = [list(dg.PARAM_NAMES) + ["reward"], [fmt(v) for v in res.best_x] + [fmt(res.best_reward)]]
    run.write("best.csv", _rows_csv(best[0], best[1:]))
    run.summary.update(
        budget=b["budget"], lcoe_cap=cost.cap, best_reward=res.best_reward, feasible_count=res.feasible_count,
        feasible_mean_lcoe=None if math.isnan(res.feasible_mean_lcoe) else res.feasible_mean_lcoe,
        best_feasible_lcoe=None if math.isinf(res.best_feasible_lcoe) else res.best_feasible_lcoe,
    )
    return res


# ------------------------------------------------------------------ argument handling

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML config layered over the packaged defaults")
    common.add_argument("--seed", type=int, metavar="N")
    common.add_argument("--workers", type=int, metavar="N")
    common.add_argument("--budget", type=int, metavar="N", help="sample budget of the command")
    common.add_argument("--mode", choices=("be", "graphite"), help="axial reflector cost case")
    common.add_argument("--oracle", action="store_true", help="optimize against the ROM instead of a surrogate")
    common.add_argument("--out", metavar="DIR", help="parent directory for run directories")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="hpmropt", description="Heat-pipe microreactor design and cost optimization.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sample", parents=[common], help="sample designs, evaluate and price them")
    t = sub.add_parser("train", parents=[common], help="fit the two-stage surrogate with k-fold validation")
    t.add_argument("--dataset", metavar="PATH")
    o = sub.add_parser("optimize", parents=[common], help="PPO search and full-order champion re-evaluation")
    o.add_argument("--model", metavar="PATH")
    r = sub.add_parser("report", parents=[common], help="cost ledger of one design")
    r.add_argument("--design", metavar="SPEC", help="nominal | CSV path | 7 comma-separated values")
    sub.add_parser("baseline", parents=[common], help="random-search baseline at equal budget")
    return p


def overrides_from_args(args) -> dict:
    over = {}
    for key in ("seed", "workers", "mode", "out"):
        v = getattr(args, key)
        if v is not None:
            over[key] = v
    if args.budget is not None:
        if args.command not in BUDGET_SECTION:
            raise ConfigError(f"--budget does not apply to {args.command}")
        over[BUDGET_SECTION[args.command]] = {"budget": args.budget}
    return over


def run_command(args) -> Run:
    cfg = RunConfig.load(args.config, overrides_from_args(args))
    run = Run(cfg, args.command)
    try:
        if args.command == "sample":
            cmd_sample(cfg, run)
        elif args.command == "train":
            cmd_train(cfg, run, args.dataset or cfg["paths"]["dataset"])
        elif args.command == "optimize":
            cmd_optimize(cfg, run, args.model or cfg["paths"]["model"], args.oracle)
        elif args.command == "report":
            cmd_report(cfg, run, args.design)
        elif args.command == "baseline":
            cmd_baseline(cfg, run)
    except Exception as exc:
        run.finish("error", {"type": type(exc).__name__, "message": str(exc)})
        raise
    run.finish()
    return run


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run = run_command(args)
    except Exception as exc:
        err = {"command": args.command, "type": type(exc).__name__, "message": str(exc)}
        print("hpmropt-error " + json.dumps(err, sort_keys=True), file=sys.stderr)
        log.debug("traceback", exc_info=True)
        return EXIT_CONFIG if isinstance(exc, ConfigError) else EXIT_RUNTIME
    print(f"{args.command}: ok -> {run.path}")
    for key, value in run.summary.items():
        if isinstance(value, (int, float, str)):
            print(f"  {key}: {value}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
