"""Two-stage QoI predictor and k-fold validation.

Stage 1: one GP per target (lifetime, SDM, F_dh) on the selected design
inputs. Stage 2: an MLP for q''_max on the selected design inputs plus the
three stage-1 outputs. Stage 2 is trained on the true stage-1 values and, at
inference, always fed the stage-1 predictions.
"""

from __future__ import annotations

import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..design import PARAM_NAMES
from .dataset import Dataset
from .features import MAX_SELECTED, rf_feature_importance, select_features
from .gp import GPModel, NotFittedError, gp_fit, gp_predict
from .mlp import MLPConfig, MLPModel, mlp_fit, mlp_predict

log = logging.getLogger(__name__)

SCHEMA = "hpmropt.two_stage/1"
STAGE1_TARGETS = ("lifetime_y", "sdm_pcm", "fdh")
STAGE2_TARGET = "qmax_mw_m2"
TARGETS = STAGE1_TARGETS + (STAGE2_TARGET,)
# predictor column -> QoIBundle field
QOI_FIELDS = {"lifetime_y": "lifetime", "sdm_pcm": "sdm", "fdh": "fdh", "qmax_mw_m2": "q_max"}


class ZeroVarianceFoldError(ValueError):
    pass


@dataclass
class SurrogateConfig:
    gp_ard: bool = True
    gp_max_iter: int = 200
    mlp: MLPConfig = field(default_factory=MLPConfig)
    max_features: int = MAX_SELECTED
    rf_estimators: int = 200
    seed: int = 0
    workers: int = 1

    @classmethod
    def from_dict(cls, d: dict | None) -> "SurrogateConfig":
        d = dict(d or {})
        mlp = MLPConfig.from_dict(d.pop("mlp", None))
        return cls(mlp=mlp, **d)

    def to_dict(self) -> dict:
        out = dict(self.__dict__)
        out["mlp"] = {**self.mlp.__dict__, "hidden": list(self.mlp.hidden)}
        return out


@dataclass
class TwoStagePredictor:
    stage1_features: list
    stage2_features: list  # design part only; stage-1 outputs are appended
    gps: dict  # target -> GPModel
    mlp: MLPModel
    importances: dict = field(default_factory=dict)
    config: SurrogateConfig = field(default_factory=SurrogateConfig)

    @property
    def stage2_input_dim(self) -> int:
        return len(self.stage2_features) + len(STAGE1_TARGETS)

    def to_json(self) -> str:
        doc = {
            "schema": SCHEMA,
            "stage1": {
                "features": self.stage1_features,
                "targets": list(STAGE1_TARGETS),
                "models": {t: self.gps[t].to_dict() for t in STAGE1_TARGETS},
            },
            "stage2": {
                "features": self.stage2_features,
                "augmented_with": list(STAGE1_TARGETS),
                "target": STAGE2_TARGET,
                "model": self.mlp.to_dict(),
            },
            "importances": self.importances,
            "config": self.config.to_dict(),
        }
        return json.dumps(doc, indent=1, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "TwoStagePredictor":
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA:
            raise ValueError(f"unsupported model schema {doc.get('schema')!r}")
        return cls(
            stage1_features=list(doc["stage1"]["features"]),
            stage2_features=list(doc["stage2"]["features"]),
            gps={t: GPModel.from_dict(m) for t, m in doc["stage1"]["models"].items()},
            mlp=MLPModel.from_dict(doc["stage2"]["model"]),
            importances=doc.get("importances", {}),
            config=SurrogateConfig.from_dict(doc.get("config")),
        )


def _cols(X, names):
    return np.asarray(X, dtype=float)[:, [PARAM_NAMES.index(n) for n in names]]


def fit_two_stage(ds: Dataset, config: SurrogateConfig | None = None, rank: bool = True) -> TwoStagePredictor:
    cfg = config or SurrogateConfig()
    if len(ds) < 10:
        raise ValueError("two-stage fit needs at least 10 rows")
    names = list(PARAM_NAMES)
    importances = {}
    if rank and len(ds) >= 50:
        top = {}
        for t in TARGETS:
            ranked, imp = rf_feature_importance(ds.X, ds[t], names, cfg.rf_estimators, cfg.seed)
            importances[t] = dict(zip(ranked, imp.tolist()))
            top[t] = set(select_features(ranked, cfg.max_features))
        # stage 1 keeps every input that any of its targets ranks in the top k
        stage1 = [n for n in names if any(n in top[t] for t in STAGE1_TARGETS)]
        stage2 = [n for n in names if n in top[STAGE2_TARGET]]
    else:
        stage1 = stage2 = names[: min(cfg.max_features, len(names))]

    X1 = _cols(ds.X, stage1)

    def fit_gp(t):
        return t, gp_fit(X1, ds[t], ard=cfg.gp_ard, max_iter=cfg.gp_max_iter)

    if cfg.workers > 1:
        with ThreadPoolExecutor(cfg.workers) as pool:
            gps = dict(pool.map(fit_gp, STAGE1_TARGETS))
    else:
        gps = dict(map(fit_gp, STAGE1_TARGETS))
    X2 = np.column_stack([_cols(ds.X, stage2)] + [ds[t] for t in STAGE1_TARGETS])
    mlp = mlp_fit(X2, ds[STAGE2_TARGET], cfg.mlp)
    return TwoStagePredictor(stage1, stage2, gps, mlp, importances, cfg)


def two_stage_predict(predictor: TwoStagePredictor | None, X) -> dict:
    """Predictions for all four targets; stage 2 only sees stage-1 predictions."""
    if predictor is None or not predictor.gps or predictor.mlp is None:
        raise NotFittedError("two-stage predictor is not fitted")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    X1 = _cols(X, predictor.stage1_features)
    out = {t: gp_predict(predictor.gps[t], X1, return_var=False)[:, 0] for t in STAGE1_TARGETS}
    X2 = np.column_stack([_cols(X, predictor.stage2_features)] + [out[t] for t in STAGE1_TARGETS])
    out[STAGE2_TARGET] = mlp_predict(predictor.mlp, X2)[:, 0]
    return out


class SurrogateEvaluator:
    """Evaluator facade over a fitted predictor (QoIs it cannot predict are NaN)."""

    oracle_id = "surrogate"

    def __init__(self, predictor: TwoStagePredictor):
        self.predictor = predictor

    def evaluate_batch(self, X, include_itc: bool = False) -> dict:
        pred = two_stage_predict(self.predictor, X)
        n = len(np.atleast_2d(X))
        out = {k: np.full(n, np.nan) for k in ("fq", "q_avg", "itc_lo", "itc_hi")}
        for col, key in QOI_FIELDS.items():
            out[key] = pred[col]
        return out


def r2_score(y_true, y_pred) -> float:
    y_true = np.asarray(y_true, dtype=float).ravel()
    y_pred = np.asarray(y_pred, dtype=float).ravel()
    ss_tot = np.sum((y_true - y_true.mean()) ** 2)
    if ss_tot == 0:
        raise ZeroVarianceFoldError("R^2 undefined: target has zero variance")
    return float(1.0 - np.sum((y_true - y_pred) ** 2) / ss_tot)


def fold_indices(n: int, k: int, seed: int) -> list:
    if k < 2 or n < k:
        raise ValueError("k-fold needs k >= 2 and at least k rows")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]


def kfold_r2(config: SurrogateConfig | None, ds: Dataset, k: int = 5, seed: int | None = None, predict_fn=None) -> dict:
    """Mean held-out R^2 per target over ``k`` deterministic folds.

    Returns ``{"mean": {target: r2}, "folds": {target: [r2, ...]}}``.
    ``predict_fn(train_ds, X_val) -> {target: array}`` replaces the two-stage
    pipeline when given (used for reference predictors).
    """
    cfg = config or SurrogateConfig()
    seed = cfg.seed if seed is None else seed
    folds = fold_indices(len(ds), k, seed)
    per = {t: [] for t in TARGETS}
    for i, val in enumerate(folds):
        train = np.setdiff1d(np.arange(len(ds)), val)
        tr, va = ds.subset(train), ds.subset(val)
        if predict_fn is None:
            model = fit_two_stage(tr, cfg, rank=False)
            pred = two_stage_predict(model, va.X)
        else:
            pred = predict_fn(tr, va.X)
        for t in TARGETS:
            if t in pred:
                per[t].append(r2_score(va[t], pred[t]))
        log.info("fold %d/%d: %s", i + 1, k, {t: round(v[-1], 4) for t, v in per.items() if v})
    per = {t: v for t, v in per.items() if v}
    return {"mean": {t: float(np.mean(v)) for t, v in per.items()}, "folds": per}
