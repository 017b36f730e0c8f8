"""Quantities of interest derived from a neutronics evaluation.

The functions here are the closed-form definitions (peaking factors, shutdown
margin, isothermal temperature coefficient, lifetime from a k_eff history).
They are shared by every evaluator; the bundled reduced-order model lives in
:mod:`hpmropt.rom`.

Array arguments broadcast: a power field of shape ``(..., n_compacts, n_axial)``
gives peaking factors of shape ``(...)``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .design import DesignPoint, ReactorConstants

PCM = 1e5
N_AXIAL_NODES = 20


@dataclass(frozen=True)
class QoIBundle:
    lifetime: float  # years, negative for non-starters
    sdm: float  # pcm
    fq: float
    fdh: float
    q_avg: float  # MW/m^2
    q_max: float  # MW/m^2
    itc_lo: float = math.nan  # pcm/K, 550-850 K
    itc_hi: float = math.nan  # pcm/K, 850-1150 K

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class KeffTrace:
    """Depletion history; the first step is the short quasi-equilibrium step."""

    times: tuple
    keff: tuple

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        k = np.asarray(self.keff, dtype=float)
        if t.shape != k.shape or t.ndim != 1:
            raise ValueError("times and keff must be 1-D and equally long")
        if np.any(np.diff(t) <= 0):
            raise ValueError("trace times must be strictly increasing")
        if np.any(k <= 0):
            raise ValueError("k_eff must be positive")


@dataclass(frozen=True)
class ReactivityStates:
    k_hzp: float  # isothermal 800 K, drums out
    k_hfp: float
    k_all_in: float
    k_one_in: float  # single most effective drum in
    k_550: float = math.nan
    k_850: float = math.nan
    k_1150: float = math.nan


@runtime_checkable
class PhysicsEvaluator(Protocol):
    """Anything that maps a design to a QoI bundle.

    Implementations must be safe to call from several threads at once.
    """

    oracle_id: str

    def evaluate(self, design: DesignPoint, include_itc: bool = False) -> QoIBundle: ...

    def evaluate_batch(self, X: np.ndarray, include_itc: bool = False) -> dict: ...


def reactivity(k):
    """Reactivity in pcm."""
    k = np.asarray(k, dtype=float)
    return (k - 1.0) / k * PCM


def avg_heat_flux(design: DesignPoint, constants: ReactorConstants | None = None):
    """Average compact surface heat flux in MW/m^2: Q / (N_flakes N_compact L 2 pi r)."""
    c = constants or ReactorConstants()
    return avg_heat_flux_array(design.x_fh, design.x_cr, c)


def avg_heat_flux_array(x_fh, x_cr, constants: ReactorConstants):
    c = constants
    L = np.asarray(x_fh, dtype=float) / 100.0
    r = np.asarray(x_cr, dtype=float) / 100.0
    return c.thermal_power_mw / (c.n_flakes * c.n_compacts_per_flake * L * 2.0 * math.pi * r)


def peak_heat_flux(fq, q_avg):
    return np.asarray(fq) * np.asarray(q_avg)


def _check_power_field(powers) -> np.ndarray:
    p = np.asarray(powers, dtype=float)
    if p.ndim < 2:
        raise ValueError("power field needs shape (..., n_compacts, n_axial)")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("power field must be finite and non-negative")
    if np.any(p.sum(axis=(-2, -1)) <= 0):
        raise ValueError("power field is identically zero")
    return p


def f_delta_h(compact_axial_powers):
    """Rod-integrated peaking: hottest axially integrated compact over the compact mean."""
    p = _check_power_field(compact_axial_powers)
    integrals = p.sum(axis=-1)
    return integrals.max(axis=-1) / integrals.mean(axis=-1)


def f_q(compact_axial_powers):
    """Node peaking: hottest single node linear power over the core-average node."""
    p = _check_power_field(compact_axial_powers)
    flat = p.reshape(p.shape[:-2] + (-1,))
    return flat.max(axis=-1) / flat.mean(axis=-1)


def shutdown_margin(states: ReactivityStates):
    """SDM in pcm from HZP/HFP/drum-in states.

    dk1 = rho(HZP) - rho(HFP), dk2 = rho(all in) - rho(HFP),
    dk3 = rho(one drum in) - rho(HFP); SDM = dk1 + 0.9 (dk2 - dk3).
    """
    ks = np.array([states.k_hzp, states.k_hfp, states.k_all_in, states.k_one_in], dtype=float)
    if np.any(ks <= 0) or not np.all(np.isfinite(ks)):
        raise ValueError("all k values must be positive and finite")
    rho_hfp = reactivity(states.k_hfp)
    dk1 = reactivity(states.k_hzp) - rho_hfp
    dk2 = reactivity(states.k_all_in) - rho_hfp
    dk3 = reactivity(states.k_one_in) - rho_hfp
    return sdm_from_deltas(dk1, dk2, dk3)


def sdm_from_deltas(dk1, dk2, dk3):
    return dk1 + 0.9 * (dk2 - dk3)


def itc(k_t1, k_t2, t1, t2):
    """Isothermal temperature coefficient (pcm/K) between two temperatures."""
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    if np.any(t1 == t2):
        raise ValueError("ITC needs two distinct temperatures")
    k1 = np.asarray(k_t1, dtype=float)
    k2 = np.asarray(k_t2, dtype=float)
    if np.any(k1 <= 0) or np.any(k2 <= 0):
        raise ValueError("k values must be positive")
    d_rho = (k1 - k2) / (k1 * k2) * PCM
    return d_rho / (t1 - t2)


def lifetime_from_k(times, K):
    """Vectorised lifetime for k_eff histories ``K`` of shape ``(..., n)`` on shared ``times``.

    First downward crossing of k=1 is linearly interpolated. Subcritical
    histories extrapolate backward through the first two burnup steps (the
    quasi-equilibrium step is skipped); histories still critical at the last
    step extrapolate forward through the last two steps. Returns NaN where the
    extrapolation slope has the wrong sign or is zero.
    """
    t = np.asarray(times, dtype=float)
    K = np.asarray(K, dtype=float)
    above = K >= 1.0
    crossing = above[..., :-1] & ~above[..., 1:]
    has_cross = crossing.any(axis=-1)
    i = np.argmax(crossing, axis=-1)
    k0 = np.take_along_axis(K, i[..., None], axis=-1)[..., 0]
    k1 = np.take_along_axis(K, (i + 1)[..., None], axis=-1)[..., 0]
    t0, t1 = t[i], t[i + 1]
    with np.errstate(divide="ignore", invalid="ignore"):
        cross_t = t0 + (t1 - t0) * (k0 - 1.0) / (k0 - k1)

        slope_b = (K[..., 2] - K[..., 1]) / (t[2] - t[1])
        back_t = t[1] + (1.0 - K[..., 1]) / slope_b
        back_t = np.where(slope_b < 0, back_t, np.nan)

        slope_f = (K[..., -1] - K[..., -2]) / (t[-1] - t[-2])
        fwd_t = t[-1] + (1.0 - K[..., -1]) / slope_f
        fwd_t = np.where(slope_f < 0, fwd_t, np.nan)

    all_sub = ~above.any(axis=-1)
    out = np.where(has_cross, cross_t, np.where(all_sub, back_t, fwd_t))
    return out


def lifetime_from_trace(trace: KeffTrace) -> float:
    t = np.asarray(trace.times, dtype=float)
    k = np.asarray(trace.keff, dtype=float)
    if t.size < 3:
        raise ValueError("lifetime needs at least 3 trace points")
    life = float(lifetime_from_k(t, k))
    if not math.isfinite(life):
        raise ValueError("k_eff trace is flat or rising where it must be extrapolated")
    return life


def burnup_gwd_per_t(thermal_power_mw, lifetime_years, uranium_kg):
    """Discharge burnup (GWd/tHM); capacity factor deliberately not applied."""
    days = np.asarray(lifetime_years, dtype=float) * 365.25
    return thermal_power_mw * days / (np.asarray(uranium_kg, dtype=float) / 1000.0) / 1000.0


def power_density(constants: ReactorConstants, fuel_volume_m3):
    """Core power per unit compact volume, MW/m^3."""
    return constants.thermal_power_mw / np.asarray(fuel_volume_m3, dtype=float)
