"""Constraint penalties and the scalar reward.

Reward: ``-gamma_lcoe * LCOE - sum_i gamma_i * phi_i`` with
``phi_i = ((x_i - c_i) / c_i)^2`` for violated constraints and 0 otherwise.
Interval constraints measure the violation against the nearer bound.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .. import design as dg
from ..physics import QoIBundle


class EvaluationError(RuntimeError):
    def __init__(self, design, cause):
        self.design = design
        super().__init__(f"evaluation failed for design {design}: {cause}")


@dataclass(frozen=True)
class Constraint:
    qoi: str  # QoIBundle field
    limit: float  # upper limit for "max", lower for "min" and "interval"
    direction: str = "max"  # max | min | interval
    upper: float | None = None  # interval only
    weight: float = 10_000.0

    def __post_init__(self):
        if self.direction not in ("max", "min", "interval"):
            raise ValueError(f"unknown constraint direction {self.direction!r}")
        if self.limit == 0 or (self.direction == "interval" and not self.upper):
            raise ValueError(f"constraint on {self.qoi} needs non-zero limits")
        if self.direction == "interval" and self.upper <= self.limit:
            raise ValueError("interval upper bound must exceed the lower bound")

    def phi(self, x):
        """Squared relative violation (0 when satisfied)."""
        x = np.asarray(x, dtype=float)
        c = self.limit
        if self.direction == "max":
            return np.where(x > c, ((x - c) / c) ** 2, 0.0)
        if self.direction == "min":
            return np.where(x < c, ((x - c) / c) ** 2, 0.0)
        lo, hi = self.limit, self.upper
        below = np.where(x < lo, ((x - lo) / lo) ** 2, 0.0)
        above = np.where(x > hi, ((x - hi) / hi) ** 2, 0.0)
        return below + above


def _default_constraints():
    return (
        Constraint("q_max", 0.020, "max"),
        Constraint("fdh", 1.47, "max"),
        # SDM is negative; a less negative margin is a violation
        Constraint("sdm", -6700.0, "max"),
        Constraint("lifetime", 6.0, "interval", upper=10.40),
    )


@dataclass(frozen=True)
class ConstraintSpec:
    constraints: tuple = field(default_factory=_default_constraints)
    gamma_lcoe: float = 0.1

    @classmethod
    def from_dict(cls, d: dict | None) -> "ConstraintSpec":
        d = dict(d or {})
        cons = d.pop("constraints", None)
        if cons is not None:
            cons = tuple(Constraint(**c) for c in cons)
            return cls(constraints=cons, **d)
        return cls(**d)

    def to_dict(self) -> dict:
        return {
            "gamma_lcoe": self.gamma_lcoe,
            "constraints": [c.__dict__ for c in self.constraints],
        }


def _get(qois, name):
    if isinstance(qois, QoIBundle):
        return getattr(qois, name)
    return qois[name]


def violations(qois, spec: ConstraintSpec) -> dict:
    """Weighted violation per constrained QoI."""
    out = {}
    for c in spec.constraints:
        x = np.asarray(_get(qois, c.qoi), dtype=float)
        if not np.all(np.isfinite(x)):
            raise ValueError(f"non-finite {c.qoi} passed to the penalty")
        out[c.qoi] = c.weight * c.phi(x)
    return out


def penalty(qois, spec: ConstraintSpec | None = None):
    """Composite penalty ``sum_i gamma_i phi_i``; scalar for scalar input."""
    spec = spec or ConstraintSpec()
    total = sum(violations(qois, spec).values())
    return float(total) if np.ndim(total) == 0 else total


def is_feasible(qois, spec: ConstraintSpec | None = None):
    return np.asarray(penalty(qois, spec)) == 0.0


def combine(lcoe, pen, spec: ConstraintSpec):
    return -spec.gamma_lcoe * np.asarray(lcoe, dtype=float) - np.asarray(pen, dtype=float)


@dataclass(frozen=True)
class CostFunction:
    """FOAK LCOE for design batches with non-starters and outliers capped."""

    db: object
    fin: object
    constants: object
    cap: float = 50_000.0

    def __call__(self, X, lifetime):
        from ..econ import batch_lcoe

        foak, _ = batch_lcoe(X, lifetime, self.db, self.fin, self.constants)
        return np.where(np.isfinite(foak), np.minimum(foak, self.cap), self.cap)

    def with_cap(self, cap: float) -> "CostFunction":
        return CostFunction(self.db, self.fin, self.constants, float(cap))


def evaluate_rewards(X, evaluator, lcoe_fn: Callable, spec: ConstraintSpec) -> dict:
    """Batch reward: returns arrays ``reward, lcoe, penalty, feasible`` plus the QoIs."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    try:
        q = evaluator.evaluate_batch(X)
    except Exception as exc:  # keep the failing design with the error
        raise EvaluationError(X[0] if len(X) == 1 else f"batch of {len(X)}", exc) from exc
    lcoe = lcoe_fn(X, q["lifetime"])
    pen = penalty(q, spec)
    return {
        "reward": combine(lcoe, pen, spec),
        "lcoe": lcoe,
        "penalty": pen,
        "feasible": pen == 0.0,
        "qois": q,
    }


def reward(design, evaluator, lcoe_fn: Callable, spec: ConstraintSpec | None = None) -> float:
    """Scalar reward of one design."""
    spec = spec or ConstraintSpec()
    dg.validate(design)
    return float(evaluate_rewards(design.as_array()[None, :], evaluator, lcoe_fn, spec)["reward"][0])
