"""Code-of-accounts economics: fuel cycle, O&M, capital, LCOE and learning.

Money is carried in $2024 after escalation. The engine is written against
numpy arrays so the same code prices one design (for reports) or a batch of
thousands (inside the optimizer).

Cash-flow conventions
---------------------
* t = 0: total capital invested (overnight cost plus financing), the first
  core (initial fuel inventory) and the decommissioning fund. No energy.
* t = 1..n: constant O&M, energy, disposal; fuel reloads are charged in the
  operating year in which the reload happens.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Mapping

import numpy as np

from . import design as dg
from .design import DesignPoint, MassInventory, ReactorConstants

HOURS_PER_YEAR = 8766.0
DAYS_PER_YEAR = 365.25
TARGET_YEAR = 2024

# CPI-U annual averages, used only as relative escalation indices
CPI_U = {
    2009: 214.537, 2010: 218.056, 2011: 224.939, 2012: 229.594, 2013: 232.957,
    2014: 236.736, 2015: 237.017, 2016: 240.007, 2017: 245.120, 2018: 251.107,
    2019: 255.657, 2020: 258.811, 2021: 270.970, 2022: 292.655, 2023: 304.702,
    2024: 313.689,
}

GROUPS = ("fuel", "om", "capital")


class MissingYearError(KeyError):
    pass


@dataclass(frozen=True)
class Price:
    value: float
    year: int
    unit: str = ""


@dataclass(frozen=True)
class ScaledAccount:
    """Cost-to-capacity account: I_fixed + I_ref (X0 / X_ref)^n_scale."""

    i_fixed: float
    i_ref: float
    x_ref: float
    n_scale: float
    year: int
    driver: str  # thermal_mw | electric_mw | vessel_kg
    replaced: bool = False


def _default_prices():
    return {
        "natural_uranium": Price(184.0, 2022, "$/kgU"),
        "conversion": Price(15.1, 2022, "$/kgU"),
        "enrichment": Price(184.2, 2022, "$/SWU"),
        "fabrication": Price(10_000.0, 2009, "$/kgU"),  # TRISO compact fabrication
        "disposal": Price(1.0, 2024, "$/MWh"),
        "decommissioning": Price(1_100.0, 2024, "$/kWe"),
        "heat_pipe": Price(10_000.0, 2017, "$/HP"),
        "be": Price(45_000.0, 2024, "$/kg"),
        "b4c_enriched": Price(10_064.0, 2023, "$/kg"),
        "b4c_natural": Price(14_268.0, 2023, "$/kg"),
        "yhx": Price(1_520.0, 2017, "$/kg"),
        "graphite": Price(80.0, 2022, "$/kg"),
        "drum_installation": Price(80_665.0, 2024, "$/drum"),
        "drum_fabrication": Price(323_650.0, 2024, "$/drum"),
        "labor": Price(178_500.0, 2024, "$/FTE"),
        "fees_insurance_taxes": Price(600_000.0, 2024, "$/y"),
    }


def _default_scaled():
    return {
        "power_conversion": ScaledAccount(1.0e6, 9.0e6, 1.0, 0.7, 2024, "electric_mw"),
        "instrumentation_control": ScaledAccount(2.0e6, 4.0e6, 2.0, 0.6, 2024, "thermal_mw"),
        "structures_site": ScaledAccount(4.0e6, 8.0e6, 2.0, 0.7, 2024, "thermal_mw"),
        "reactor_vessel": ScaledAccount(0.0, 1.5e6, 5_000.0, 1.0, 2024, "vessel_kg", replaced=True),
    }


def _default_learning():
    # effective factory rate: also stands in for mass-manufacturing cost
    # multipliers, which the learning-curve form has no separate term for
    factory = 0.43
    return {
        "axial_reflector": factory, "control_drums": factory, "radial_reflector": factory,
        "graphite_monolith": factory, "moderator_yhx": factory, "heat_pipes": factory,
        "reactor_vessel": factory, "power_conversion": factory, "instrumentation_control": factory,
        "structures_site": 0.10, "initial_fuel": 0.0, "decommissioning": 0.0,
        "replace_axial_reflector": factory, "replace_radial_reflector": factory,
        "replace_moderator": factory, "replace_control_drums": factory, "replace_reactor_vessel": factory,
        "maintenance": factory, "capital_plant_expenditures": 0.10,
    }


@dataclass(frozen=True)
class CostDatabase:
    prices: dict = field(default_factory=_default_prices)
    enrichment_penalty: float = 1.15  # >10 % enrichment
    feed_assay: float = 0.0071
    tails_assay: float = 0.0025
    maintenance_fraction: float = 0.015
    capital_plant_fraction: float = 0.005
    indirect_fraction: float = 0.5
    financing_factor: float = 0.10
    axial_reflector_material: str = "be"  # be | graphite
    scaled_accounts: dict = field(default_factory=_default_scaled)
    learning_rates: dict = field(default_factory=_default_learning)
    escalation: dict = field(default_factory=lambda: dict(CPI_U))
    target_year: int = TARGET_YEAR

    def __post_init__(self):
        if self.axial_reflector_material not in ("be", "graphite"):
            raise ValueError("axial_reflector_material must be 'be' or 'graphite'")
        for name, lr in self.learning_rates.items():
            if not 0.0 <= lr < 1.0:
                raise ValueError(f"learning rate for {name} must lie in [0, 1)")
        for name, acc in self.scaled_accounts.items():
            if not 0.0 < acc.n_scale <= 1.2:
                raise ValueError(f"n_scale for {name} must lie in (0, 1.2]")

    def for_mode(self, mode: str) -> "CostDatabase":
        return replace(self, axial_reflector_material=mode)

    def scaled(self, factor: float) -> "CostDatabase":
        """Every monetary input multiplied by ``factor``."""
        prices = {k: replace(p, value=p.value * factor) for k, p in self.prices.items()}
        accounts = {
            k: replace(a, i_fixed=a.i_fixed * factor, i_ref=a.i_ref * factor) for k, a in self.scaled_accounts.items()
        }
        return replace(self, prices=prices, scaled_accounts=accounts)

    def price(self, name: str) -> float:
        """Unit price escalated to the target year."""
        p = self.prices[name]
        return escalate(p.value, p.year, self)

    @classmethod
    def from_dict(cls, data: dict | None) -> "CostDatabase":
        data = dict(data or {})
        base = cls()
        kwargs = {}
        for key, value in data.items():
            if key == "prices":
                prices = dict(base.prices)
                for name, spec in value.items():
                    old = prices.get(name, Price(0.0, TARGET_YEAR))
                    if isinstance(spec, Mapping):
                        prices[name] = Price(
                            float(spec.get("value", old.value)), int(spec.get("year", old.year)), spec.get("unit", old.unit)
                        )
                    else:
                        prices[name] = replace(old, value=float(spec))
                kwargs["prices"] = prices
            elif key == "scaled_accounts":
                accounts = dict(base.scaled_accounts)
                for name, spec in value.items():
                    if name in accounts:
                        accounts[name] = replace(accounts[name], **spec)
                    else:
                        accounts[name] = ScaledAccount(**spec)
                kwargs["scaled_accounts"] = accounts
            elif key == "learning_rates":
                lr = dict(base.learning_rates)
                lr.update({k: float(v) for k, v in value.items()})
                kwargs["learning_rates"] = lr
            elif key == "escalation":
                kwargs["escalation"] = {int(k): float(v) for k, v in value.items()}
            elif key in {f.name for f in fields(cls)}:
                kwargs[key] = value
            else:
                raise KeyError(f"unknown cost database key: {key}")
        return replace(base, **kwargs)


@dataclass(frozen=True)
class FinanceAssumptions:
    discount_rate: float = 0.06
    period_years: int = 60
    debt_to_equity: float = 0.5
    n_operators: int = 2  # emergency or refueling
    refueling_days: float = 7.0
    emergency_rate: float = 0.2  # shutdowns per year
    startup_after_refueling_days: float = 2.0
    startup_after_emergency_days: float = 14.0
    reactors_per_monitor: int = 10
    security_per_shift: int = 1
    fte_per_24x7_post: float = 5.0
    operator_hours_per_day: float = 10.0
    hours_per_fte: float = 1750.0
    replacement_interval_years: float = 10.0
    noak_units: int = 20
    learning_cap_units: int = 100
    net_efficiency: float = 0.40

    def __post_init__(self):
        if self.discount_rate <= -1.0:
            raise ValueError("discount rate must exceed -1")
        for f in fields(self):
            v = getattr(self, f.name)
            if f.name != "discount_rate" and isinstance(v, (int, float)) and v < 0:
                raise ValueError(f"{f.name} must be non-negative")

    @classmethod
    def from_dict(cls, data: dict | None) -> "FinanceAssumptions":
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise KeyError(f"unknown finance assumption(s): {sorted(unknown)}")
        return cls(**data)


# ------------------------------------------------------------------ primitives

def escalate(amount, from_year: int, db: CostDatabase | None = None, to_year: int | None = None):
    index = (db.escalation if db is not None else CPI_U)
    to_year = to_year if to_year is not None else (db.target_year if db is not None else TARGET_YEAR)
    if from_year not in index:
        raise MissingYearError(f"no escalation index for {from_year}")
    if to_year not in index:
        raise MissingYearError(f"no escalation index for {to_year}")
    return np.asarray(amount, dtype=float) * (index[to_year] / index[from_year]) if np.ndim(amount) else (
        float(amount) * index[to_year] / index[from_year]
    )


def _value_function(x):
    return (2.0 * x - 1.0) * np.log(x / (1.0 - x))


def swu_per_kg_product(x_p, x_f, x_t):
    """Separative work and feed per kg of product.

    Returns ``(swu_per_kg, feed_per_kg)`` from the standard value function
    V(x) = (2x - 1) ln(x / (1 - x)).
    """
    x_p = np.asarray(x_p, dtype=float)
    if np.any(~((0 < x_t) & (x_t < x_f) & (x_f <= x_p) & (x_p < 1))):
        raise ValueError("assays must satisfy 0 < tails < feed <= product < 1")
    feed = (x_p - x_t) / (x_f - x_t)
    swu = _value_function(x_p) + (feed - 1.0) * _value_function(x_t) - feed * _value_function(x_f)
    if np.ndim(swu) == 0:
        return float(swu), float(feed)
    return swu, feed


def cost_to_capacity(i_fixed, i_ref, x0, x_ref, n_scale):
    if np.any(np.asarray(x_ref) <= 0):
        raise ValueError("reference capacity must be positive")
    return i_fixed + i_ref * (np.asarray(x0, dtype=float) / x_ref) ** n_scale


def capacity_factor(lifetime, fin: FinanceAssumptions | None = None):
    """Availability net of refueling outages and emergency shutdowns.

    Cycles longer than the component replacement interval are cut at the
    interval, so the factor stops improving there.
    """
    fin = fin or FinanceAssumptions()
    lifetime = np.asarray(lifetime, dtype=float)
    if np.any(lifetime <= 0):
        raise ValueError("capacity factor needs a positive lifetime")
    l_days = np.minimum(lifetime, fin.replacement_interval_years) * DAYS_PER_YEAR
    outage = fin.refueling_days + fin.startup_after_refueling_days
    emergency = 1.0 - fin.emergency_rate * fin.startup_after_emergency_days / DAYS_PER_YEAR
    cf = emergency * l_days / (l_days + outage)
    return float(cf) if cf.ndim == 0 else cf


def noak(foak, lr, n_units=20, cap=100):
    """Learning-curve cost of unit N: FOAK (1 - lr)^log2(min(N, cap))."""
    if np.any(np.asarray(n_units) < 1):
        raise ValueError("N must be at least 1")
    lr = np.asarray(lr, dtype=float)
    if np.any((lr < 0) | (lr >= 1)):
        raise ValueError("learning rate must lie in [0, 1)")
    n = np.minimum(n_units, cap)
    out = np.asarray(foak, dtype=float) * (1.0 - lr) ** np.log2(n)
    return float(out) if out.ndim == 0 else out


def discount_factors(r: float, n: int) -> np.ndarray:
    return (1.0 + r) ** -np.arange(n + 1, dtype=float)


def lcoe(fuel_stream, om_stream, tci, energy_stream, r, n=None):
    """Levelized cost: discounted costs over discounted energy.

    Streams are indexed by year ``t = 0..n`` along their last axis. Capital
    enters only at t = 0; fuel and O&M at t = 0 are ignored, as is energy.
    """
    fuel = np.asarray(fuel_stream, dtype=float)
    om = np.asarray(om_stream, dtype=float)
    energy = np.asarray(energy_stream, dtype=float)
    n = energy.shape[-1] - 1 if n is None else n
    if r <= -1:
        raise ValueError("discount rate must exceed -1")
    v = discount_factors(r, n)[1:]
    costs = np.asarray(tci, dtype=float) + ((fuel[..., 1 : n + 1] + om[..., 1 : n + 1]) * v).sum(axis=-1)
    e = (energy[..., 1 : n + 1] * v).sum(axis=-1)
    if np.any(e <= 0):
        raise ValueError("discounted energy must be positive")
    out = costs / e
    return float(out) if np.ndim(out) == 0 else out


# ---------------------------------------------------------- account builders

def _as_map(masses) -> dict:
    if isinstance(masses, MassInventory):
        return {f.name: getattr(masses, f.name) for f in fields(masses)}
    return masses


def fuel_cycle_items(masses, db: CostDatabase) -> dict:
    """Per-cycle front-end cost lines ($2024) for one core load."""
    m = _as_map(masses)
    u = np.asarray(m["uranium"], dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        x_e = np.where(u > 0, np.asarray(m["u235"]) / np.where(u > 0, u, 1.0), db.feed_assay)
    swu, feed = swu_per_kg_product(np.maximum(x_e, db.feed_assay), db.feed_assay, db.tails_assay)
    return {
        "fuel_natural_uranium": u * feed * db.price("natural_uranium"),
        "fuel_conversion": u * feed * db.price("conversion"),
        "fuel_enrichment": u * swu * db.price("enrichment") * db.enrichment_penalty,
        "fuel_fabrication": u * db.price("fabrication"),
    }


def reload_counts(cycle_years, n: int) -> np.ndarray:
    """Reloads falling in each operating year ``t = 0..n`` (reload k at k * cycle)."""
    T = np.asarray(cycle_years, dtype=float)[..., None]
    t = np.arange(n + 1, dtype=float)
    before = np.maximum(np.ceil(t / T) - 1.0, 0.0)  # reloads strictly before time t
    counts = np.zeros(before.shape)
    counts[..., 1:] = before[..., 1:] - before[..., :-1]
    return counts


@dataclass(frozen=True)
class FuelCycleCost:
    per_cycle: dict  # $2024 per reload, by line item
    cycle_years: object  # calendar years between reloads
    reloads: object  # (..., n+1) counts per year
    disposal_per_mwh: float

    @property
    def per_cycle_total(self):
        return sum(self.per_cycle.values())

    def stream(self):
        """Front-end fuel spending per year, ``(..., n+1)``."""
        return np.asarray(self.per_cycle_total)[..., None] * self.reloads


def fuel_cycle_cost(masses, lifetime, db: CostDatabase, fin: FinanceAssumptions) -> FuelCycleCost:
    lifetime = np.asarray(lifetime, dtype=float)
    if np.any(lifetime <= 0):
        raise ValueError("fuel cycle cost needs a positive lifetime (filter non-starters first)")
    cf = capacity_factor(lifetime, fin)
    cycle = np.minimum(lifetime, fin.replacement_interval_years) / cf
    return FuelCycleCost(
        per_cycle=fuel_cycle_items(masses, db),
        cycle_years=cycle,
        reloads=reload_counts(cycle, fin.period_years),
        disposal_per_mwh=db.price("disposal"),
    )


def control_drum_cost(masses, db: CostDatabase, n_drums: int = 12):
    """m_Be C_Be + m_B4C C_B4C + (installation + fabrication) N_CD, enriched B4C price."""
    if n_drums < 1:
        raise ValueError("need at least one drum")
    m = _as_map(masses)
    per_drum = db.price("drum_installation") + db.price("drum_fabrication")
    return (
        np.asarray(m["drum_be"]) * db.price("be")
        + np.asarray(m["b4c"]) * db.price("b4c_enriched")
        + per_drum * n_drums
    )


def _drivers(masses, constants: ReactorConstants, fin: FinanceAssumptions):
    m = _as_map(masses)
    q = constants.thermal_power_mw
    return {
        "thermal_mw": q,
        "electric_mw": q * fin.net_efficiency,
        "vessel_kg": np.asarray(m["vessel_steel"], dtype=float),
    }


@dataclass(frozen=True)
class CapitalCost:
    direct: dict  # $2024 by account
    indirect: object
    occ: object
    tci: object
    decommissioning: float

    @property
    def direct_total(self):
        return sum(self.direct.values())


REPLACED = {
    "axial_reflector": "replace_axial_reflector",
    "radial_reflector": "replace_radial_reflector",
    "moderator_yhx": "replace_moderator",
    "control_drums": "replace_control_drums",
    "reactor_vessel": "replace_reactor_vessel",
}


def capital_cost(
    masses,
    db: CostDatabase,
    fin: FinanceAssumptions | None = None,
    constants: ReactorConstants | None = None,
) -> CapitalCost:
    """Direct accounts, indirect share, overnight cost and TCI ($2024)."""
    fin = fin or FinanceAssumptions()
    c = constants or ReactorConstants()
    m = _as_map(masses)
    axial_price = db.price("be") if db.axial_reflector_material == "be" else db.price("graphite")
    direct = {
        "axial_reflector": np.asarray(m["axial_reflector"]) * axial_price,
        "control_drums": control_drum_cost(m, db, c.n_drums),
        "radial_reflector": np.asarray(m["graphite_radial_reflector"]) * db.price("graphite"),
        "graphite_monolith": np.asarray(m["graphite_monolith"]) * db.price("graphite"),
        "moderator_yhx": np.asarray(m["yhx"]) * db.price("yhx"),
        "heat_pipes": c.n_heat_pipes * db.price("heat_pipe") * np.ones_like(np.asarray(m["yhx"], dtype=float)),
        "initial_fuel": sum(fuel_cycle_items(m, db).values()),
    }
    drivers = _drivers(m, c, fin)
    for name, acc in db.scaled_accounts.items():
        x0 = drivers[acc.driver]
        cost = escalate(cost_to_capacity(acc.i_fixed, acc.i_ref, x0, acc.x_ref, acc.n_scale), acc.year, db)
        direct[name] = cost * np.ones_like(np.asarray(m["yhx"], dtype=float))
    total = sum(direct.values())
    indirect = db.indirect_fraction * total
    occ = total + indirect
    tci = occ * (1.0 + db.financing_factor)
    decom = db.price("decommissioning") * c.thermal_power_mw * fin.net_efficiency * 1000.0
    return CapitalCost(direct=direct, indirect=indirect, occ=occ, tci=tci, decommissioning=decom)


def om_cost(capital: CapitalCost, db: CostDatabase, fin: FinanceAssumptions | None = None) -> dict:
    """Annual O&M ($2024/y) by account."""
    fin = fin or FinanceAssumptions()
    labor = db.price("labor")
    direct = capital.direct
    out = {}
    replaced_names = set(REPLACED) | {k for k, a in db.scaled_accounts.items() if a.replaced}
    other = 0.0
    for name, cost in direct.items():
        if name in replaced_names:
            out[REPLACED.get(name, "replace_" + name)] = cost / fin.replacement_interval_years
        elif name != "initial_fuel":
            other = other + cost
    out["maintenance"] = db.maintenance_fraction * other
    out["staff_security"] = fin.fte_per_24x7_post * fin.security_per_shift * labor
    out["staff_monitoring"] = fin.fte_per_24x7_post * labor / fin.reactors_per_monitor
    fte_per_event = fin.startup_after_emergency_days * fin.operator_hours_per_day / fin.hours_per_fte
    out["staff_emergency"] = fin.n_operators * fte_per_event * labor * fin.emergency_rate
    out["capital_plant_expenditures"] = db.capital_plant_fraction * capital.direct_total
    out["fees_insurance_taxes"] = db.price("fees_insurance_taxes")
    return out


# ------------------------------------------------------------------ ledger

@dataclass(frozen=True)
class CostLedger:
    accounts: dict  # name -> (group, lcoe share $/MWh, annualized $/y)
    capacity_factor: float
    annual_energy_mwh: float
    lcoe_foak: float
    lcoe_noak: float

    def group_totals(self) -> dict:
        out = {g: 0.0 for g in GROUPS}
        for group, share, _ in self.accounts.values():
            out[group] += share
        return out

    def largest(self, group: str) -> str:
        items = [(share, name) for name, (g, share, _) in self.accounts.items() if g == group]
        return max(items)[1]


def _cash_flows(masses, lifetime, db, fin, constants):
    lifetime = np.asarray(lifetime, dtype=float)
    n, r = fin.period_years, fin.discount_rate
    cf = capacity_factor(lifetime, fin)
    energy = constants.thermal_power_mw * fin.net_efficiency * HOURS_PER_YEAR * np.asarray(cf)
    fuel = fuel_cycle_cost(masses, lifetime, db, fin)
    cap = capital_cost(masses, db, fin, constants)
    om = om_cost(cap, db, fin)
    v = discount_factors(r, n)
    annuity = v[1:].sum()
    reload_pv = (fuel.reloads * v).sum(axis=-1)
    e_pv = energy * annuity
    burden = (1.0 + db.indirect_fraction) * (1.0 + db.financing_factor)

    pv = {}  # name -> (group, present value)
    for name, cost in cap.direct.items():
        pv[name] = ("capital", cost * burden)
    pv["decommissioning"] = ("capital", cap.decommissioning * np.ones_like(e_pv))
    for name, cost in fuel.per_cycle.items():
        pv[name] = ("fuel", cost * reload_pv)
    pv["spent_fuel_disposal"] = ("fuel", fuel.disposal_per_mwh * e_pv)
    for name, cost in om.items():
        pv[name] = ("om", cost * annuity * np.ones_like(e_pv))
    return {"pv": pv, "e_pv": e_pv, "energy": energy, "cf": cf, "annuity": annuity, "fuel": fuel, "capital": cap, "om": om}


def ledger_arrays(masses, lifetime, db: CostDatabase, fin: FinanceAssumptions, constants: ReactorConstants) -> dict:
    """FOAK and NOAK LCOE ($/MWh) plus per-account shares for arrays of designs."""
    flows = _cash_flows(masses, lifetime, db, fin, constants)
    learn = math.log2(min(fin.noak_units, fin.learning_cap_units))
    shares, foak, noak_total = {}, 0.0, 0.0
    for name, (group, value) in flows["pv"].items():
        share = value / flows["e_pv"]
        shares[name] = (group, share)
        foak = foak + share
        noak_total = noak_total + share * (1.0 - db.learning_rates.get(name, 0.0)) ** learn
    return {
        "lcoe_foak": foak,
        "lcoe_noak": noak_total,
        "shares": shares,
        "capacity_factor": flows["cf"],
        "annual_energy_mwh": flows["energy"],
        "annuity": flows["annuity"],
    }


def streams(masses, lifetime, db: CostDatabase, fin: FinanceAssumptions, constants: ReactorConstants) -> dict:
    """Explicit yearly cash-flow streams for one design (t = 0..n)."""
    flows = _cash_flows(masses, lifetime, db, fin, constants)
    n = fin.period_years
    years = np.arange(n + 1)
    op = (years >= 1).astype(float)
    energy = float(flows["energy"]) * op
    fuel = flows["fuel"].stream()[...] + flows["fuel"].disposal_per_mwh * energy
    om = sum(flows["om"].values()) * op
    cap = flows["capital"]
    tci = float(cap.tci + cap.decommissioning)
    return {"fuel": np.asarray(fuel, dtype=float).ravel(), "om": om, "tci": tci, "energy": energy}


def evaluate_ledger(
    design: DesignPoint,
    lifetime: float,
    db: CostDatabase | None = None,
    fin: FinanceAssumptions | None = None,
    constants: ReactorConstants | None = None,
) -> CostLedger:
    """Full ledger for one design. Non-starters (lifetime <= 0) are rejected."""
    db = db or CostDatabase()
    fin = fin or FinanceAssumptions()
    c = constants or ReactorConstants()
    if not lifetime > 0:
        raise ValueError(f"no ledger for a non-starter (lifetime {lifetime:g} y)")
    masses = dg.mass_inventory(dg.derive_geometry(design, c), design, c)
    out = ledger_arrays(masses, lifetime, db, fin, c)
    crf = 1.0 / out["annuity"]
    e_pv = float(out["annual_energy_mwh"]) * out["annuity"]
    accounts = {}
    for name, (group, share) in out["shares"].items():
        share = float(share)
        if share < 0:
            raise ValueError(f"negative cost in account {name}")
        accounts[name] = (group, share, share * e_pv * crf)
    return CostLedger(
        accounts=accounts,
        capacity_factor=float(out["capacity_factor"]),
        annual_energy_mwh=float(out["annual_energy_mwh"]),
        lcoe_foak=float(out["lcoe_foak"]),
        lcoe_noak=float(out["lcoe_noak"]),
    )


def batch_lcoe(X, lifetime, db: CostDatabase, fin: FinanceAssumptions, constants: ReactorConstants):
    """FOAK/NOAK LCOE for an ``(n, 7)`` design array; NaN where lifetime <= 0."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    lifetime = np.asarray(lifetime, dtype=float)
    ok = np.isfinite(lifetime) & (lifetime > 0)
    foak = np.full(len(X), np.nan)
    noak_ = np.full(len(X), np.nan)
    if ok.any():
        masses = dg.batch_masses(X[ok], constants)
        out = ledger_arrays(masses, lifetime[ok], db, fin, constants)
        foak[ok] = out["lcoe_foak"]
        noak_[ok] = out["lcoe_noak"]
    return foak, noak_


def ledger_report(ledger: CostLedger) -> tuple[str, str]:
    """Return ``(csv_text, text_table)`` for a ledger, accounts grouped and sorted."""
    rows = sorted(ledger.accounts.items(), key=lambda kv: (GROUPS.index(kv[1][0]), -kv[1][1]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["account", "group", "annualized_cost_usd2024", "lcoe_share_usd_per_mwh"])
    for name, (group, share, annual) in rows:
        w.writerow([name, group, f"{annual:.6f}", f"{share:.9f}"])
    lines = [f"{'account':<30}{'group':<9}{'$/y (2024)':>16}{'$/MWh':>12}"]
    totals = ledger.group_totals()
    for group in GROUPS:
        for name, (g, share, annual) in rows:
            if g == group:
                lines.append(f"{name:<30}{g:<9}{annual:>16,.0f}{share:>12,.1f}")
        lines.append(f"{'  subtotal ' + group:<39}{'':>16}{totals[group]:>12,.1f}")
    lines.append(f"{'LCOE FOAK':<39}{'':>16}{ledger.lcoe_foak:>12,.1f}")
    lines.append(f"{'LCOE NOAK':<39}{'':>16}{ledger.lcoe_noak:>12,.1f}")
    lines.append(f"capacity factor {ledger.capacity_factor:.4f}, annual energy {ledger.annual_energy_mwh:,.0f} MWh")
    return buf.getvalue(), "\n".join(lines) + "\n"
