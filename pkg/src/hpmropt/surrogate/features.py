"""Impurity-based feature ranking from a random forest of CART trees."""

from __future__ import annotations

import numpy as np
from sklearn.ensemble import RandomForestRegressor

MAX_SELECTED = 8


def rf_feature_importance(X, y, names=None, n_estimators: int = 200, seed: int = 0, max_features=0.6):
    """Rank features by mean impurity decrease.

    Returns ``(ranked_names, ranked_importances)`` in descending order; the
    importances are non-negative and sum to one.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if len(X) < 50:
        raise ValueError("feature importance needs at least 50 rows")
    if np.std(y) == 0:
        raise ValueError("degenerate target: zero variance")
    names = list(names) if names is not None else [f"x{i}" for i in range(X.shape[1])]
    rf = RandomForestRegressor(
        n_estimators=n_estimators, max_features=max_features, bootstrap=True, random_state=seed, n_jobs=1
    )
    rf.fit(X, y)
    imp = np.clip(rf.feature_importances_, 0.0, None)
    imp = imp / imp.sum()
    order = np.argsort(-imp, kind="stable")
    return [names[i] for i in order], imp[order]


def select_features(ranked_names, k: int = MAX_SELECTED) -> list:
    """Top ``min(k, available)`` names."""
    return list(ranked_names[: min(k, len(ranked_names))])
