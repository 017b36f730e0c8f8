"""Glue between the config and the modules: evaluators, cost function, sampling."""

from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import design as dg
from .econ import batch_lcoe
from .rl.reward import CostFunction, evaluate_rewards
from .rom import ReducedOrderModel
from .surrogate.dataset import Dataset, filter_outliers

log = logging.getLogger(__name__)


def build_oracle(cfg) -> ReducedOrderModel:
    return ReducedOrderModel(cfg.rom(), cfg.constants())


PILOT_SAMPLES = 10_000


def auto_lcoe_cap(evaluator, cost: CostFunction, spec, seed: int, n: int = PILOT_SAMPLES) -> float:
    """Twice the worst feasible FOAK LCOE of a seeded uniform pilot sample."""
    X = draw_designs(n, seed)
    out = evaluate_rewards(X, evaluator, cost.with_cap(np.inf), spec)
    feasible = out["lcoe"][out["feasible"]]
    if not len(feasible):
        raise RuntimeError(f"pilot sample of {n} designs has no feasible point; set lcoe_cap explicitly")
    return 2.0 * float(feasible.max())


def build_cost(cfg, oracle=None) -> CostFunction:
    """FOAK LCOE function with the configured (or pilot-derived) non-starter cap."""
    cost = CostFunction(cfg.costs(), cfg.finance(), cfg.constants())
    cap = cfg["lcoe_cap"]
    if cap == "auto":
        cap = auto_lcoe_cap(oracle or build_oracle(cfg), cost, cfg.spec(), cfg.seed)
        log.info("non-starter LCOE cap set to %.1f $/MWh from the pilot sample", cap)
    return cost.with_cap(float(cap))


def draw_designs(n: int, seed: int, method: str = "uniform") -> np.ndarray:
    """``(n, 7)`` physical designs drawn over the bounds."""
    rng = np.random.default_rng(seed)
    if n == 0:
        return np.empty((0, len(dg.PARAM_NAMES)))
    if method == "lhs":
        return dg.sample_lhs(n, rng)
    if method == "uniform":
        return dg.sample_uniform(n, rng)
    raise ValueError(f"unknown sampling method {method!r}")


def sample_dataset(n, seed, evaluator, db, fin, constants, method="uniform", workers=1, chunk=512):
    """Sample, evaluate, price and filter; returns ``(dataset, counts)``.

    ``counts`` holds ``sampled``, ``failed`` (evaluator errors),
    ``non_starters`` and ``removed`` (all rows dropped by the filter).
    Chunks are evaluated concurrently but reassembled in order, so the
    result does not depend on ``workers``.
    """
    X = draw_designs(n, seed, method)
    counts = {"sampled": int(n), "failed": 0, "non_starters": 0, "removed": 0}
    if n == 0:
        return Dataset.empty(), counts
    blocks = [X[i : i + chunk] for i in range(0, n, chunk)]

    def run(block):
        try:
            return evaluator.evaluate_batch(block)
        except Exception:  # fall back to rows so one bad design does not sink the block
            log.warning("batch evaluation failed, retrying %d rows one by one", len(block), exc_info=True)
            rows = []
            for x in block:
                try:
                    rows.append({k: float(v[0]) for k, v in evaluator.evaluate_batch(x[None]).items()})
                except Exception as exc:
                    log.error("evaluator failed for design %s: %s", np.array2string(x, precision=6), exc)
                    rows.append(None)
            keys = next((r.keys() for r in rows if r is not None), ("lifetime",))
            return {k: np.array([np.nan if r is None else r[k] for r in rows]) for k in keys}

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    keys = parts[0].keys()
    q = {k: np.concatenate([p.get(k, np.full(len(b), np.nan)) for p, b in zip(parts, blocks)]) for k in keys}
    counts["failed"] = int(np.sum(~np.isfinite(q["lifetime"])))
    counts["non_starters"] = int(np.sum(q["lifetime"] <= 0))
    foak, noak = batch_lcoe(X, q["lifetime"], db, fin, constants)
    raw = Dataset.from_records(X, q, foak, noak, seed, getattr(evaluator, "oracle_id", "unknown"))
    ds, counts["removed"] = filter_outliers(raw)
    log.info(
        "sampled %d designs: %d non-starters, %d evaluator failures, %d removed, %d retained",
        n, counts["non_starters"], counts["failed"], counts["removed"], len(ds),
    )
    return ds, counts


def parse_design(spec) -> np.ndarray:
    """Design from ``"nominal"``, a CSV path with design columns, or seven comma-separated values."""
    if spec is None or str(spec) == "nominal":
        return dg.DesignPoint.nominal().as_array()
    p = Path(str(spec))
    if p.is_file():
        with open(p, newline="") as fh:
            rows = csv.DictReader(line for line in fh if not line.startswith("#"))
            first = next(iter(rows), None)
        if first is None:
            raise ValueError(f"no design rows in {p}")
        return dg.DesignPoint.from_row(first).as_array()
    parts = [s for s in str(spec).split(",") if s.strip()]
    if len(parts) != len(dg.PARAM_NAMES):
        raise ValueError(f"design needs {len(dg.PARAM_NAMES)} values, got {len(parts)}")
    return np.array([float(s) for s in parts])
