"""Deterministic reduced-order stand-in for the Monte Carlo core model.

The model is deliberately simple and smooth:

* k at hot full power is a one-group style product of an infinite-medium
  term (enrichment, moderation ratio) and a non-leakage probability whose
  axial extrapolation distance grows with axial reflector thickness;
* k varies about its nominal value with a damped sensitivity
  (``reactivity_sensitivity``) and falls linearly with time after a short
  equilibrium step; the depletion rate grows with power over fissile
  inventory and with hydride fraction (softer spectrum, less conversion),
  bounded smoothly within a factor ``depletion_rate_span`` of nominal;
* drum worth scales with absorber enrichment, coating angle, drum size and
  spectrum;
* the power field is a truncated cosine axially (20 nodes) times a radial
  tilt across equal-area compact positions.

Scale constants (k_inf, reflector savings, tilt, drum worth, ITC offset) are
solved at construction so the nominal core reproduces the configured anchor
QoIs. Everything downstream only sees :class:`~hpmropt.physics.QoIBundle`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np
from scipy.optimize import brentq

from . import design as dg
from .design import DesignPoint, ReactorConstants
from .physics import (
    N_AXIAL_NODES,
    PCM,
    KeffTrace,
    QoIBundle,
    ReactivityStates,
    avg_heat_flux_array,
    f_delta_h,
    f_q,
    itc,
    lifetime_from_k,
    reactivity,
    shutdown_margin,
)


@dataclass(frozen=True)
class RomConfig:
    # anchors (nominal core)
    anchor_lifetime: float = 6.99
    anchor_sdm: float = -6757.23
    anchor_fq: float = 1.787
    anchor_fdh: float = 1.469
    anchor_itc_hi: float = -2.404
    # reactivity
    nominal_excess: float = 0.06  # k_eq - 1 at the nominal core
    equilibrium_drop: float = 0.012  # xenon/short-lived poisoning over the first step
    equilibrium_step_days: float = 5.0
    enrichment_exponent: float = 0.35
    graphite_moderation_weight: float = 0.12
    moderation_optimum_ratio: float = 0.60  # optimum xi relative to nominal xi
    moderation_curvature: float = 0.40
    migration_area: float = 220.0  # cm^2 at nominal moderation
    migration_moderation_exponent: float = 0.5
    axial_saving_length: float = 25.0  # cm, saturation length of reflector savings
    radial_saving: float = 18.0  # cm
    reactivity_sensitivity: float = 0.25  # exponent on k_hfp relative to nominal
    depletion_exponent: float = 0.5
    depletion_hydride_exponent: float = 2.5  # harder spectrum converts more U-238
    depletion_rate_span: float = 2.0  # depletion rate stays within [1/span, span] x nominal
    burnup_horizon_years: float = 16.0
    # drums / SDM
    power_defect_pcm: float = 350.0
    power_defect_exponent: float = 0.4
    b10_saturation: float = 3.0
    coating_angle_exponent: float = 0.55
    drum_radius_exponent: float = 1.2
    drum_moderation_exponent: float = 0.35
    # radial tilt
    tilt_moderation_exponent: float = 0.1
    tilt_core_radius_exponent: float = 0.0
    tilt_limit: float = 0.95  # smooth cap keeping the radial shape positive
    # temperature coefficients
    itc_hydride_weight: float = 2.2
    itc_curvature: float = 0.002  # pcm/K^2
    n_radial_positions: int = 63

    @classmethod
    def from_dict(cls, data: dict | None) -> "RomConfig":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown ROM coefficient(s): {sorted(unknown)}")
        return cls(**data)


@dataclass
class _Calibration:
    k_inf0: float = 1.0
    axial_saving_max: float = 0.0
    tilt0: float = 0.0
    drum_worth0: float = 0.0
    itc_offset: float = 0.0
    depletion_rate0: float = 0.0
    nominal: dict = field(default_factory=dict)


def _node_cosine(L, H_eff, n=N_AXIAL_NODES):
    """Node-averaged cos(pi z / H_eff) over ``n`` equal nodes of a length-``L`` column."""
    L = np.asarray(L, dtype=float)[..., None]
    H = np.asarray(H_eff, dtype=float)[..., None]
    edges = (np.arange(n + 1) / n - 0.5) * L
    s = np.sin(math.pi * edges / H)
    return (s[..., 1:] - s[..., :-1]) * H / (math.pi * (L / n))


def _axial_peaking(L, H_eff):
    z = _node_cosine(L, H_eff)
    return z.max(axis=-1) / z.mean(axis=-1)


class ReducedOrderModel:
    """Smooth analytic core model calibrated to the nominal anchors."""

    oracle_id = "rom-v1"

    def __init__(self, config: RomConfig | None = None, constants: ReactorConstants | None = None):
        self.config = config or RomConfig()
        self.constants = constants or ReactorConstants()
        n = self.config.n_radial_positions
        # equal-area radial positions: every entry stands for the same number of compacts
        self._u2 = (np.arange(n) + 0.5) / n
        self._cal = _Calibration()
        self._calibrate()

    # ------------------------------------------------------------ internals
    def _features(self, X):
        c, cfg = self.constants, self.config
        X = np.atleast_2d(np.asarray(X, dtype=float))
        x_ca, x_b10, x_fh, x_pp, x_e, x_cr, x_mr = X.T
        w = dg.flake_width(x_pp)
        r_d = dg.drum_radius(w)
        a_flake = dg.hex_area(w)
        a_fuel = c.n_compacts_per_flake * math.pi * x_cr**2
        a_yh = c.n_moderator_rods_per_flake * math.pi * x_mr**2
        a_gr = a_flake - (
            a_fuel
            + c.n_moderator_rods_per_flake * math.pi * (x_mr + c.moderator_clad_thickness) ** 2
            + c.n_heat_pipes_per_flake * math.pi * c.heat_pipe_outer_radius**2
        )
        xi = (a_yh + cfg.graphite_moderation_weight * a_gr) / a_fuel
        hyd = a_yh / (a_yh + a_gr + a_fuel)
        r_core = np.sqrt((c.n_flakes * a_flake + c.n_drums * math.pi * r_d**2) / math.pi)
        u235 = x_e * c.n_compacts * math.pi * x_cr**2 * x_fh * 1e-6 * c.uranium_loading_kg_per_m3
        fuel_vol = c.n_compacts * math.pi * x_cr**2 * x_fh * 1e-6
        return {
            "x_ca": x_ca, "x_b10": x_b10, "x_fh": x_fh, "x_pp": x_pp, "x_e": x_e,
            "x_cr": x_cr, "x_mr": x_mr, "xi": xi, "hyd": hyd, "r_core": r_core,
            "r_drum": r_d, "u235": u235, "power_density": c.thermal_power_mw / fuel_vol,
            "t_axial": 0.5 * (c.total_core_height - x_fh),
        }

    def _h_eff(self, f, axial_saving_max):
        cfg = self.config
        saving = axial_saving_max * (1.0 - np.exp(-f["t_axial"] / cfg.axial_saving_length))
        return f["x_fh"] + 2.0 * saving

    def _k_shape(self, f, axial_saving_max):
        """k_hfp divided by k_inf0."""
        cfg, nom = self.config, self._cal.nominal
        xi_opt = cfg.moderation_optimum_ratio * nom.get("xi", f["xi"])
        k_inf = (f["x_e"] / 0.197) ** cfg.enrichment_exponent * np.exp(
            -cfg.moderation_curvature * np.log(f["xi"] / xi_opt) ** 2
        )
        m2 = cfg.migration_area * (nom.get("xi", f["xi"]) / f["xi"]) ** cfg.migration_moderation_exponent
        h = self._h_eff(f, axial_saving_max)
        b2 = (math.pi / h) ** 2 + (2.405 / (f["r_core"] + cfg.radial_saving)) ** 2
        return k_inf / (1.0 + m2 * b2)

    def _k_hfp(self, f):
        cal = self._cal
        k_nom = cal.k_inf0 * cal.nominal["k_shape"]
        return k_nom * (self._k_shape(f, cal.axial_saving_max) / cal.nominal["k_shape"]) ** self.config.reactivity_sensitivity

    def _tilt_shape(self, f):
        cfg, nom = self.config, self._cal.nominal
        return (f["xi"] / nom.get("xi", f["xi"])) ** (-cfg.tilt_moderation_exponent) * (
            f["r_core"] / nom.get("r_core", f["r_core"])
        ) ** cfg.tilt_core_radius_exponent

    def _worth_shape(self, f):
        cfg, nom = self.config, self._cal.nominal
        b = cfg.b10_saturation
        g_b = (1.0 - np.exp(-b * f["x_b10"])) / (1.0 - math.exp(-b * 0.95))
        g_a = (f["x_ca"] / 90.0) ** cfg.coating_angle_exponent
        g_r = (f["r_drum"] / nom.get("r_drum", f["r_drum"])) ** cfg.drum_radius_exponent
        g_m = (f["xi"] / nom.get("xi", f["xi"])) ** cfg.drum_moderation_exponent
        return g_b * g_a * g_r * g_m

    def _power_defect(self, f):
        cfg, nom = self.config, self._cal.nominal
        return cfg.power_defect_pcm * (f["power_density"] / nom.get("power_density", f["power_density"])) ** (
            cfg.power_defect_exponent
        )

    def _itc_hi(self, f):
        cfg, nom = self.config, self._cal.nominal
        return self._cal.itc_offset + cfg.itc_hydride_weight * (f["hyd"] / nom.get("hyd", f["hyd"]))

    def _radial_max_factor(self):
        return 2.0 * self._u2.max() - 1.0

    def _calibrate(self):
        cfg, cal = self.config, self._cal
        f = self._features(DesignPoint.nominal().as_array())
        cal.nominal = {k: float(v[0]) for k, v in f.items() if np.ndim(v)}
        f = self._features(DesignPoint.nominal().as_array())
        L = float(f["x_fh"][0])
        target = cfg.anchor_fq / cfg.anchor_fdh
        h_nom = brentq(lambda h: float(_axial_peaking(L, h)) - target, L * 1.0001, L * 50.0)
        t_ax = float(f["t_axial"][0])
        cal.axial_saving_max = 0.5 * (h_nom - L) / (1.0 - math.exp(-t_ax / cfg.axial_saving_length))
        cal.tilt0 = cfg.tilt_limit * math.atanh((cfg.anchor_fdh - 1.0) / self._radial_max_factor() / cfg.tilt_limit)
        t_eq = cfg.equilibrium_step_days / 365.25
        cal.depletion_rate0 = cfg.nominal_excess / (cfg.anchor_lifetime - t_eq)
        k_hfp_nom = 1.0 + cfg.nominal_excess + cfg.equilibrium_drop
        cal.nominal["k_shape"] = float(self._k_shape(f, cal.axial_saving_max)[0])
        cal.k_inf0 = k_hfp_nom / cal.nominal["k_shape"]
        defect = float(self._power_defect(f)[0])
        # SDM = defect - 0.9 (1 - 1/N) W
        n_cd = self.constants.n_drums
        cal.drum_worth0 = (defect - cfg.anchor_sdm) / (0.9 * (1.0 - 1.0 / n_cd))
        cal.itc_offset = cfg.anchor_itc_hi - cfg.itc_hydride_weight

    # ------------------------------------------------------------ artifacts
    def burnup_times(self):
        cfg = self.config
        steps = np.arange(0.5, cfg.burnup_horizon_years + 1e-9, 0.5)
        return np.concatenate([[cfg.equilibrium_step_days / 365.25], steps])

    def _keff_matrix(self, f):
        cfg, cal = self.config, self._cal
        k_hfp = self._k_hfp(f)
        log_g = cfg.depletion_exponent * np.log(cal.nominal["u235"] / f["u235"]) + cfg.depletion_hydride_exponent * np.log(
            f["hyd"] / cal.nominal["hyd"]
        )
        span = math.log(cfg.depletion_rate_span)
        rate = cal.depletion_rate0 * np.exp(span * np.tanh(log_g / span))
        t = self.burnup_times()
        k_eq = k_hfp - cfg.equilibrium_drop
        K = k_eq[:, None] - rate[:, None] * (t[None, :] - t[0])
        return k_hfp, t, K

    def _states(self, f, include_itc):
        cal = self._cal
        k_hfp = self._k_hfp(f)
        rho_hfp = reactivity(k_hfp)
        worth = cal.drum_worth0 * self._worth_shape(f)
        rho_hzp = rho_hfp + self._power_defect(f)

        def k_of(rho):
            return 1.0 / (1.0 - rho / PCM)

        extra = {}
        if include_itc:
            itc_hi = self._itc_hi(f)
            c1 = self.config.itc_curvature
            # rho(T) - rho(800) with slope itc_hi at 1000 K and curvature c1
            def rho_t(T):
                d = T - 800.0
                return rho_hzp + (itc_hi - 2 * c1 * 200.0) * d + c1 * d**2

            extra = {"k_550": k_of(rho_t(550.0)), "k_850": k_of(rho_t(850.0)), "k_1150": k_of(rho_t(1150.0))}
        n_cd = self.constants.n_drums
        return ReactivityStates(
            k_hzp=k_of(rho_hzp),
            k_hfp=k_hfp,
            k_all_in=k_of(rho_hfp - worth),
            k_one_in=k_of(rho_hfp - worth / n_cd),
            **extra,
        )

    def _power_field(self, f):
        cal = self._cal
        c = self.constants
        h = self._h_eff(f, cal.axial_saving_max)
        z = _node_cosine(f["x_fh"], h)
        z = z / z.mean(axis=-1, keepdims=True)
        lim = self.config.tilt_limit
        tilt = lim * np.tanh(cal.tilt0 * self._tilt_shape(f) / lim)
        radial = 1.0 + tilt[:, None] * (2.0 * self._u2[None, :] - 1.0)
        q_lin = c.thermal_power_mw * 1e6 / (c.n_compacts * f["x_fh"])  # W/cm
        return q_lin[:, None, None] * radial[:, :, None] * z[:, None, :]

    # ------------------------------------------------------------ public
    def keff_trace(self, design: DesignPoint) -> KeffTrace:
        f = self._features(design.as_array())
        _, t, K = self._keff_matrix(f)
        return KeffTrace(tuple(t), tuple(K[0]))

    def reactivity_states(self, design: DesignPoint, include_itc: bool = True) -> ReactivityStates:
        f = self._features(design.as_array())
        s = self._states(f, include_itc)
        return ReactivityStates(**{k: float(np.ravel(v)[0]) for k, v in asdict(s).items()})

    def power_field(self, design: DesignPoint) -> np.ndarray:
        """Linear power (W/cm) per representative compact and axial node, shape (63, 20)."""
        return self._power_field(self._features(design.as_array()))[0]

    def evaluate_batch(self, X, include_itc: bool = False, chunk: int = 4096) -> dict:
        """QoI arrays for an ``(n, 7)`` array of designs (assumed in bounds)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        parts = [self._evaluate_chunk(X[i : i + chunk], include_itc) for i in range(0, len(X), chunk)]
        if not parts:
            keys = ["lifetime", "sdm", "fq", "fdh", "q_avg", "q_max", "itc_lo", "itc_hi"]
            return {k: np.empty(0) for k in keys}
        return {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}

    def _evaluate_chunk(self, X, include_itc):
        f = self._features(X)
        _, t, K = self._keff_matrix(f)
        life = lifetime_from_k(t, K)
        states = self._states(f, include_itc)
        sdm = shutdown_margin(states)
        field_ = self._power_field(f)
        fq_ = f_q(field_)
        fdh_ = f_delta_h(field_)
        q_avg = avg_heat_flux_array(f["x_fh"], f["x_cr"], self.constants)
        n = len(X)
        if include_itc:
            itc_lo = itc(states.k_550, states.k_850, 550.0, 850.0)
            itc_hi = itc(states.k_850, states.k_1150, 850.0, 1150.0)
        else:
            itc_lo = itc_hi = np.full(n, np.nan)
        return {
            "lifetime": life,
            "sdm": np.broadcast_to(sdm, (n,)).astype(float),
            "fq": fq_,
            "fdh": fdh_,
            "q_avg": q_avg,
            "q_max": fq_ * q_avg,
            "itc_lo": itc_lo,
            "itc_hi": itc_hi,
        }

    def evaluate(self, design: DesignPoint, include_itc: bool = False) -> QoIBundle:
        dg.validate(design)
        out = self.evaluate_batch(design.as_array()[None, :], include_itc=include_itc)
        return QoIBundle(**{k: float(v[0]) for k, v in out.items()})
