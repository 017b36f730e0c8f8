"""Sampled design/QoI tables: CSV schema, outlier filter, scaling and correlations."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..design import PARAM_NAMES

log = logging.getLogger(__name__)

# CSV column -> QoIBundle field
QOI_COLUMNS = {
    "lifetime_y": "lifetime",
    "sdm_pcm": "sdm",
    "fq": "fq",
    "fdh": "fdh",
    "qavg_mw_m2": "q_avg",
    "qmax_mw_m2": "q_max",
    "itc_lo": "itc_lo",
    "itc_hi": "itc_hi",
}
COST_COLUMNS = ("lcoe_foak_usd_mwh", "lcoe_noak_usd_mwh")
META_COLUMNS = ("seed", "oracle_id")
COLUMNS = tuple(PARAM_NAMES) + tuple(QOI_COLUMNS) + COST_COLUMNS + META_COLUMNS

# ITC is only produced on re-evaluation; sampled tables carry NaN there
REQUIRED_FINITE = ("lifetime_y", "sdm_pcm", "fq", "fdh", "qavg_mw_m2", "qmax_mw_m2")


class SchemaError(ValueError):
    pass


class EmptyDatasetError(ValueError):
    pass


def fmt(v) -> str:
    """Shortest repr that round-trips; keeps CSV output byte-stable."""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


@dataclass
class Dataset:
    X: np.ndarray  # (n, 7) design columns
    columns: dict  # QoI and cost column name -> (n,) array
    seed: np.ndarray = field(default=None)
    oracle_id: list = field(default=None)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(-1, len(PARAM_NAMES))
        n = len(self.X)
        self.columns = {k: np.asarray(v, dtype=float).reshape(n) for k, v in self.columns.items()}
        self.seed = np.zeros(n, dtype=np.int64) if self.seed is None else np.asarray(self.seed, dtype=np.int64)
        self.oracle_id = [""] * n if self.oracle_id is None else list(self.oracle_id)

    def __len__(self) -> int:
        return len(self.X)

    def __getitem__(self, name: str) -> np.ndarray:
        if name in PARAM_NAMES:
            return self.X[:, PARAM_NAMES.index(name)]
        if name not in self.columns:
            raise SchemaError(f"dataset has no column {name!r}")
        return self.columns[name]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx)
        return Dataset(
            X=self.X[idx],
            columns={k: v[idx] for k, v in self.columns.items()},
            seed=self.seed[idx],
            oracle_id=[self.oracle_id[i] for i in np.arange(len(self))[idx]],
        )

    def stats(self, names=None) -> tuple[np.ndarray, np.ndarray]:
        """Per-column mean and standard deviation."""
        names = list(names or PARAM_NAMES)
        M = np.column_stack([self[n] for n in names])
        return M.mean(axis=0), M.std(axis=0)

    @classmethod
    def from_records(cls, X, qois: dict, lcoe_foak, lcoe_noak, seed, oracle_id) -> "Dataset":
        """Build from an evaluator's batch output (keys are QoIBundle fields)."""
        n = len(X)
        cols = {col: np.asarray(qois[key], dtype=float) for col, key in QOI_COLUMNS.items()}
        cols["lcoe_foak_usd_mwh"] = np.asarray(lcoe_foak, dtype=float)
        cols["lcoe_noak_usd_mwh"] = np.asarray(lcoe_noak, dtype=float)
        seeds = np.broadcast_to(np.asarray(seed, dtype=np.int64), (n,))
        ids = [oracle_id] * n if isinstance(oracle_id, str) else list(oracle_id)
        return cls(X=np.asarray(X, dtype=float), columns=cols, seed=seeds, oracle_id=ids)

    @classmethod
    def empty(cls) -> "Dataset":
        return cls(X=np.empty((0, len(PARAM_NAMES))), columns={c: np.empty(0) for c in COLUMNS[7:-2]})

    # ------------------------------------------------------------------ io
    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COLUMNS)
        for i in range(len(self)):
            row = [fmt(v) for v in self.X[i]]
            row += [fmt(self.columns[c][i]) for c in list(QOI_COLUMNS) + list(COST_COLUMNS)]
            row += [str(int(self.seed[i])), self.oracle_id[i]]
            w.writerow(row)
        return buf.getvalue()

    def write_csv(self, path) -> None:
        Path(path).write_text(self.to_csv_text())

    @classmethod
    def read_csv(cls, path) -> "Dataset":
        with open(path, newline="") as fh:
            # leading "#" lines are provenance headers
            reader = csv.DictReader(line for line in fh if not line.startswith("#"))
            header = reader.fieldnames or []
            missing = [c for c in COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"dataset {path} is missing column(s): {', '.join(missing)}")
            rows = list(reader)
        X = np.array([[float(r[n]) for n in PARAM_NAMES] for r in rows], dtype=float).reshape(-1, len(PARAM_NAMES))
        cols = {c: np.array([float(r[c]) for r in rows], dtype=float) for c in list(QOI_COLUMNS) + list(COST_COLUMNS)}
        seed = np.array([int(r["seed"]) for r in rows], dtype=np.int64)
        return cls(X=X, columns=cols, seed=seed, oracle_id=[r["oracle_id"] for r in rows])


def filter_outliers(ds: Dataset) -> tuple[Dataset, int]:
    """Drop rows with negative or undefined FOAK cost or a non-finite QoI.

    Non-starters carry no ledger (NaN cost) and are dropped here too.
    Returns the retained dataset and the number of removed rows.
    """
    cost = ds["lcoe_foak_usd_mwh"]
    keep = np.isfinite(cost) & (cost >= 0)
    for c in REQUIRED_FINITE:
        keep &= np.isfinite(ds[c])
    keep &= np.all(np.isfinite(ds.X), axis=1)
    removed = int(len(ds) - keep.sum())
    if len(ds) and not keep.any():
        raise EmptyDatasetError(f"all {len(ds)} rows were removed as outliers")
    log.info("outlier filter: retained %d of %d rows", int(keep.sum()), len(ds))
    return ds.subset(np.flatnonzero(keep)), removed


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, A, allow_constant: bool = False) -> "Standardizer":
        """Column statistics; constant columns get unit scale when allowed."""
        A = np.asarray(A, dtype=float)
        if A.ndim == 1:
            A = A[:, None]
        std = A.std(axis=0)
        if allow_constant:
            return cls(A.mean(axis=0), np.where(std > 0, std, 1.0))
        if np.any(std <= 0):
            bad = np.flatnonzero(std <= 0).tolist()
            raise ValueError(f"zero-variance column(s) at index {bad}")
        return cls(A.mean(axis=0), std)

    def transform(self, A):
        return (np.asarray(A, dtype=float) - self.mean) / self.std

    def inverse(self, Z):
        return np.asarray(Z, dtype=float) * self.std + self.mean

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "std": self.std.tolist()}

    @classmethod
    def from_dict(cls, d) -> "Standardizer":
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["std"], dtype=float))


CORRELATION_QOIS = ("lifetime_y", "sdm_pcm", "fq", "fdh", "qmax_mw_m2", "lcoe_foak_usd_mwh")


def correlation_matrix(ds: Dataset, names=None) -> tuple[list, np.ndarray]:
    """Pearson matrix over the design inputs and QoIs."""
    names = list(names or (list(PARAM_NAMES) + list(CORRELATION_QOIS)))
    if len(ds) < 3:
        raise ValueError("correlation matrix needs at least 3 rows")
    M = np.column_stack([ds[n] for n in names])
    sd = M.std(axis=0)
    if np.any(sd == 0):
        raise ValueError(f"zero-variance column(s): {[n for n, s in zip(names, sd) if s == 0]}")
    C = np.corrcoef(M, rowvar=False)
    return names, np.clip(C, -1.0, 1.0)


def correlation_csv(names, C) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([""] + list(names))
    for n, row in zip(names, C):
        w.writerow([n] + [f"{v:.6f}" for v in row])
    return buf.getvalue()


def correlation_long_csv(names, C) -> str:
    """Heat-map-ready long format: row, column, value."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "column", "pearson"])
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            w.writerow([a, b, f"{C[i, j]:.6f}"])
    return buf.getvalue()
