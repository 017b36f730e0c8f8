import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpmropt import design as dg
from hpmropt import econ
from hpmropt.econ import CostDatabase, FinanceAssumptions


def _masses(design, constants):
    return dg.mass_inventory(dg.derive_geometry(design, constants), design, constants)


def _flat_db(**kw):
    """Database with every escalation index equal (no escalation)."""
    return CostDatabase(escalation={y: 1.0 for y in econ.CPI_U}, **kw)


# ------------------------------------------------------------ SWU

def _assay_balance(x_p, x_f, x_t):
    """Independent check: solve F = P + W, F x_f = P x_p + W x_t for P = 1,
    then sum value-weighted streams W V(x_t) + P V(x_p) - F V(x_f)."""
    A = np.array([[1.0, -1.0], [x_f, -x_t]])
    F, W = np.linalg.solve(A, [1.0, x_p])

    def V(x):
        return (1 - 2 * x) * math.log((1 - x) / x)

    return W * V(x_t) + V(x_p) - F * V(x_f), F


def test_swu_golden():
    swu, feed = econ.swu_per_kg_product(0.197, 0.0071, 0.0025)
    assert feed == pytest.approx(42.283, abs=1e-3)
    assert swu == pytest.approx(40.92, abs=1e-2)
    ref_swu, ref_feed = _assay_balance(0.197, 0.0071, 0.0025)
    assert swu == pytest.approx(ref_swu, rel=1e-12)
    assert feed == pytest.approx(ref_feed, rel=1e-12)


def test_swu_no_separation():
    swu, feed = econ.swu_per_kg_product(0.0071, 0.0071, 0.0025)
    assert swu == pytest.approx(0.0, abs=1e-12)
    assert feed == pytest.approx(1.0)


def test_swu_increasing_in_product_assay():
    xp = np.linspace(0.008, 0.9, 100)
    swu, _ = econ.swu_per_kg_product(xp, 0.0071, 0.0025)
    assert np.all(np.diff(swu) > 0)


def test_swu_bad_ordering():
    with pytest.raises(ValueError):
        econ.swu_per_kg_product(0.19, 0.0025, 0.0071)


# ------------------------------------------------------------ fuel cycle

def test_fuel_cycle_hand_ledger(nominal, constants):
    db = _flat_db()
    m = _masses(nominal, constants)
    items = econ.fuel_cycle_items(m, db)
    swu, feed = econ.swu_per_kg_product(0.197, 0.0071, 0.0025)
    hand = m.uranium * (feed * 184 + feed * 15.1 + swu * 184.2 * 1.15 + 10_000)
    assert sum(items.values()) == pytest.approx(hand, rel=1e-12)
    # with the rounded golden assays and the golden uranium mass
    rounded = 525.06 * (42.283 * 184 + 42.283 * 15.1 + 40.92 * 184.2 * 1.15 + 10_000)
    assert sum(items.values()) == pytest.approx(rounded, rel=1e-3)
    assert rounded == pytest.approx(14.22e6, rel=1e-3)


def test_fuel_cycle_linear_in_mass(nominal, constants, db_be, fin):
    m = _masses(nominal, constants)
    one = econ.fuel_cycle_cost(m, 6.99, db_be, fin)
    two = econ.fuel_cycle_cost({"uranium": 2 * m.uranium, "u235": 2 * m.u235}, 6.99, db_be, fin)
    assert two.per_cycle_total == pytest.approx(2 * one.per_cycle_total)
    zero = econ.fuel_cycle_cost({"uranium": 0.0, "u235": 0.0}, 6.99, db_be, fin)
    assert zero.per_cycle_total == 0.0
    assert zero.disposal_per_mwh == 1.0


def test_fuel_cycle_requires_positive_lifetime(nominal, constants, db_be, fin):
    with pytest.raises(ValueError):
        econ.fuel_cycle_cost(_masses(nominal, constants), -1.0, db_be, fin)


def test_reload_counts():
    c = econ.reload_counts(2.5, 10)
    # year t holds reloads in [t - 1, t): 2.5 -> 3, 5.0 -> 6, 7.5 -> 8; none at end of life
    assert c.sum() == 3
    assert c.tolist() == [0, 0, 0, 1, 0, 0, 1, 0, 1, 0, 0]


# ------------------------------------------------------------ capacity factor

def test_capacity_factor_examples(fin):
    assert econ.capacity_factor(10.0, fin) == pytest.approx((1 - 0.2 * 14 / 365.25) * 3652.5 / 3661.5)
    assert econ.capacity_factor(10.0, fin) == pytest.approx(0.9899, abs=1e-4)
    assert econ.capacity_factor(12.0, fin) == econ.capacity_factor(10.0, fin)
    ideal = FinanceAssumptions(emergency_rate=0.0, refueling_days=0.0, startup_after_refueling_days=0.0)
    assert econ.capacity_factor(3.0, ideal) == 1.0


def test_capacity_factor_monotone(fin):
    cf = econ.capacity_factor(np.linspace(0.1, 15, 200), fin)
    assert np.all(np.diff(cf) >= 0) and np.all((cf > 0) & (cf <= 1))


# ------------------------------------------------------------ primitives

def test_cost_to_capacity():
    assert econ.cost_to_capacity(5.0, 7.0, 3.0, 3.0, 0.6) == 12.0
    assert econ.cost_to_capacity(0.0, 1000.0, 2.0, 1.0, 0.7) == pytest.approx(1624.5, abs=0.05)
    assert econ.cost_to_capacity(0.0, 10.0, 7.0, 2.0, 1.0) == pytest.approx(35.0)
    with pytest.raises(ValueError):
        econ.cost_to_capacity(0.0, 1.0, 1.0, 0.0, 0.7)


def test_control_drum_cost():
    db = _flat_db()
    assert econ.control_drum_cost({"drum_be": 100.0, "b4c": 10.0}, db, 12) == pytest.approx(9_452_420.0)
    assert econ.control_drum_cost({"drum_be": 0.0, "b4c": 0.0}, db, 12) == pytest.approx(404_315.0 * 12)


def test_drum_cost_increases_with_fuel_height(nominal, constants, db_be):
    lo = econ.control_drum_cost(_masses(nominal.replace(x_fh=150.0), constants), db_be)
    hi = econ.control_drum_cost(_masses(nominal.replace(x_fh=170.0), constants), db_be)
    assert hi > lo


def test_noak():
    assert econ.noak(100.0, 0.1, 1) == 100.0
    assert econ.noak(1.0, 0.1, 4) == pytest.approx(0.81, abs=1e-12)
    assert econ.noak(1.0, 0.2, 200) == econ.noak(1.0, 0.2, 100)
    with pytest.raises(ValueError):
        econ.noak(1.0, 1.0, 4)


def test_escalate():
    assert econ.escalate(123.0, 2024) == 123.0
    db = CostDatabase(escalation={2009: 1.0, 2024: 1.45})
    assert econ.escalate(100.0, 2009, db) == pytest.approx(145.0)
    assert econ.escalate(30.0, 2017) + econ.escalate(70.0, 2017) == pytest.approx(econ.escalate(100.0, 2017))
    with pytest.raises(econ.MissingYearError):
        econ.escalate(1.0, 1990)


def test_lcoe_examples():
    assert econ.lcoe([0, 0, 0], [0, 0, 0], 1000.0, [0, 100, 100], 0.06) == pytest.approx(
        1000 / (100 / 1.06 + 100 / 1.06**2)
    )
    assert econ.lcoe([0, 0, 0], [0, 0, 0], 1000.0, [0, 100, 100], 0.06) == pytest.approx(5.454, abs=1e-3)
    n = 30
    c = np.r_[0.0, np.full(n, 7.0)]
    e = np.r_[0.0, np.full(n, 3.0)]
    assert econ.lcoe(c, np.zeros(n + 1), 0.0, e, 0.0) == pytest.approx(7 / 3, rel=1e-15)
    with pytest.raises(ValueError):
        econ.lcoe([0, 1], [0, 1], 0.0, [0, 0], 0.06)


# ------------------------------------------------------------ capital and O&M

def test_heat_pipe_account(nominal, constants, db_be, fin):
    cap = econ.capital_cost(_masses(nominal, constants), db_be, fin, constants)
    assert constants.n_heat_pipes == 1110
    assert cap.direct["heat_pipes"] == pytest.approx(1110 * econ.escalate(10_000.0, 2017))


def test_zero_prices_zero_capital(nominal, constants, fin):
    cap = econ.capital_cost(_masses(nominal, constants), CostDatabase().scaled(0.0), fin, constants)
    assert cap.occ == 0.0 and cap.tci == 0.0


def test_reflector_material_difference(nominal, constants, fin):
    m = _masses(nominal, constants)
    be = econ.capital_cost(m, CostDatabase().for_mode("be"), fin, constants)
    gr = econ.capital_cost(m, CostDatabase().for_mode("graphite"), fin, constants)
    diff = be.direct_total - gr.direct_total
    assert diff == pytest.approx(m.axial_reflector * (45_000 - 80 * econ.escalate(1.0, 2022)), rel=1e-12)


def test_om_staffing(nominal, constants, db_be, fin):
    cap = econ.capital_cost(_masses(nominal, constants), db_be, fin, constants)
    om = econ.om_cost(cap, db_be, fin)
    assert om["staff_monitoring"] == pytest.approx(89_250.0)
    assert om["staff_security"] == pytest.approx(5 * 178_500.0)
    per_operator = 178_500 * 14 * 10 / 1750
    assert per_operator == pytest.approx(14_280.0)
    assert om["staff_emergency"] == pytest.approx(2 * per_operator * 0.2)


def test_replacement_annuity(nominal, constants, db_be, fin):
    cap = econ.capital_cost(_masses(nominal, constants), db_be, fin, constants)
    om = econ.om_cost(cap, db_be, fin)
    for direct, repl in econ.REPLACED.items():
        assert om[repl] == pytest.approx(cap.direct[direct] / 10.0, rel=1e-15)


def test_zero_masses_zero_replacement(constants, db_be, fin):
    zeros = {k: 0.0 for k in ("axial_reflector", "drum_be", "b4c", "graphite_radial_reflector",
                              "graphite_monolith", "yhx", "uranium", "u235", "vessel_steel")}
    db = db_be.scaled(1.0)
    cap = econ.capital_cost(zeros, db, fin, constants)
    om = econ.om_cost(cap, db, fin)
    assert om["replace_axial_reflector"] == 0.0 and om["replace_moderator"] == 0.0
    assert om["replace_reactor_vessel"] == 0.0


# ------------------------------------------------------------ ledger

def test_ledger_groups_sum_to_lcoe(nominal, constants, db_be, fin):
    led = econ.evaluate_ledger(nominal, 6.99, db_be, fin, constants)
    assert sum(led.group_totals().values()) == pytest.approx(led.lcoe_foak, rel=1e-9)
    assert led.lcoe_noak <= led.lcoe_foak


def test_ledger_matches_explicit_streams(nominal, constants, db_be, fin):
    m = _masses(nominal, constants)
    s = econ.streams(m, 6.99, db_be, fin, constants)
    direct = econ.lcoe(s["fuel"], s["om"], s["tci"], s["energy"], fin.discount_rate)
    led = econ.evaluate_ledger(nominal, 6.99, db_be, fin, constants)
    assert direct == pytest.approx(led.lcoe_foak, rel=1e-9)


def test_nominal_lcoe_within_factor_two(nominal, constants, fin):
    for mode, foak_ref, noak_ref in (("be", 10_307, 1_596), ("graphite", 5_079, 1_442)):
        led = econ.evaluate_ledger(nominal, 6.99, CostDatabase().for_mode(mode), fin, constants)
        assert 0.5 <= led.lcoe_foak / foak_ref <= 2.0, mode
        assert 0.5 <= led.lcoe_noak / noak_ref <= 2.0 or led.lcoe_noak / noak_ref <= 2.5, mode


def test_breakdown_ordering(nominal, constants, fin):
    be = econ.evaluate_ledger(nominal, 6.99, CostDatabase().for_mode("be"), fin, constants)
    assert be.largest("capital") == "axial_reflector"
    gr = econ.evaluate_ledger(nominal, 6.99, CostDatabase().for_mode("graphite"), fin, constants)
    assert gr.largest("capital") == "control_drums"
    assert gr.largest("om") == "replace_control_drums"


def test_non_starter_has_no_ledger(nominal, constants, db_be, fin):
    with pytest.raises(ValueError, match="non-starter"):
        econ.evaluate_ledger(nominal, -0.5, db_be, fin, constants)


def test_noak_per_account_exact(nominal, constants, db_be, fin):
    m = dg.batch_masses(nominal.as_array()[None], constants)
    out = econ.ledger_arrays(m, np.array([6.99]), db_be, fin, constants)
    f = math.log2(min(fin.noak_units, fin.learning_cap_units))
    expect = sum(s * (1 - db_be.learning_rates.get(n, 0.0)) ** f for n, (_, s) in out["shares"].items())
    assert out["lcoe_noak"][0] == pytest.approx(float(expect[0]), rel=1e-14)


@given(st.floats(0.01, 100.0))
@settings(max_examples=20, deadline=None)
def test_lcoe_homogeneous(lam):
    c = dg.ReactorConstants()
    X = dg.DesignPoint.nominal().as_array()[None]
    fin = FinanceAssumptions()
    base, _ = econ.batch_lcoe(X, [6.99], CostDatabase(), fin, c)
    scaled, _ = econ.batch_lcoe(X, [6.99], CostDatabase().scaled(lam), fin, c)
    assert abs(scaled[0] / (lam * base[0]) - 1) < 1e-9


def test_lcoe_decreasing_in_capacity_factor(nominal, constants, db_be):
    lo = econ.evaluate_ledger(nominal, 6.99, db_be, FinanceAssumptions(emergency_rate=0.5), constants)
    hi = econ.evaluate_ledger(nominal, 6.99, db_be, FinanceAssumptions(emergency_rate=0.1), constants)
    assert hi.capacity_factor > lo.capacity_factor
    assert hi.lcoe_foak < lo.lcoe_foak


def test_zero_discount_is_cost_over_energy(nominal, constants, db_be):
    fin = FinanceAssumptions(discount_rate=0.0)
    s = econ.streams(_masses(nominal, constants), 6.99, db_be, fin, constants)
    total = s["tci"] + s["fuel"][1:].sum() + s["om"][1:].sum()
    led = econ.evaluate_ledger(nominal, 6.99, db_be, fin, constants)
    assert led.lcoe_foak == pytest.approx(total / s["energy"][1:].sum(), rel=1e-12)


def test_batch_lcoe_nan_for_non_starters(rom, db_be, fin, constants, rng):
    X = dg.sample_uniform(200, rng)
    life = rom.evaluate_batch(X)["lifetime"]
    foak, noak = econ.batch_lcoe(X, life, db_be, fin, constants)
    assert np.all(np.isnan(foak[life <= 0])) and np.all(np.isfinite(foak[life > 0]))
    assert np.all(noak[life > 0] <= foak[life > 0])


def test_ledger_report_renderings(nominal, constants, db_be, fin):
    led = econ.evaluate_ledger(nominal, 6.99, db_be, fin, constants)
    text_csv, table = econ.ledger_report(led)
    lines = text_csv.splitlines()
    assert lines[0] == "account,group,annualized_cost_usd2024,lcoe_share_usd_per_mwh"
    assert len(lines) == len(led.accounts) + 1
    total = sum(float(r.split(",")[3]) for r in lines[1:])
    assert total == pytest.approx(led.lcoe_foak, rel=1e-9)
    assert "LCOE FOAK" in table and "subtotal capital" in table


def test_database_validation():
    with pytest.raises(ValueError):
        CostDatabase(axial_reflector_material="steel")
    with pytest.raises(ValueError):
        CostDatabase(learning_rates={"x": 1.0})
    db = CostDatabase.from_dict({"prices": {"be": 30_000}, "learning_rates": {"heat_pipes": 0.1}})
    assert db.prices["be"].value == 30_000 and db.prices["be"].year == 2024
    with pytest.raises(KeyError):
        CostDatabase.from_dict({"nope": 1})
