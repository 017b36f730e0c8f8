import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hpmropt import design as dg
from hpmropt.design import DesignBoundsError, DesignPoint


unit = st.lists(st.floats(0.0, 1.0), min_size=7, max_size=7).map(np.array)


def test_nominal_is_valid(nominal):
    assert dg.validate(nominal) is nominal


def test_compact_radius_above_half_pitch_rejected(nominal):
    with pytest.raises(DesignBoundsError) as err:
        dg.validate(nominal.replace(x_cr=1.2))
    assert err.value.name == "x_cr"
    assert err.value.upper == pytest.approx(1.15)
    assert "x_cr" in str(err.value) and "1.15" in str(err.value)


def test_moderator_radius_lower_bound_at_min_pitch(nominal):
    d = nominal.replace(x_pp=1.94, x_cr=0.9, x_mr=0.35)
    assert dg.validate(d) is d


@pytest.mark.parametrize("name,value", [("x_ca", 34.9), ("x_B10", 0.96), ("x_fh", 191.0), ("x_e", 0.2), ("x_pp", 1.9)])
def test_fixed_bounds_rejected(nominal, name, value):
    with pytest.raises(DesignBoundsError, match=name):
        dg.validate(nominal.replace(**{name: value}))


def test_nan_rejected(nominal):
    assert not dg.is_valid(nominal.replace(x_e=math.nan))


def test_flake_width_and_drum_golden(nominal, constants):
    g = dg.derive_geometry(nominal, constants)
    assert g.flake_width == pytest.approx(26.752, abs=1e-3)
    assert 2 * g.drum_radius == pytest.approx(26.5, abs=1e-2)


def test_min_pitch_geometry(nominal, constants):
    d = nominal.replace(x_pp=1.94, x_cr=0.9, x_mr=0.6)
    g = dg.derive_geometry(d, constants)
    assert g.flake_width == pytest.approx(22.699, abs=1e-3)
    assert g.drum_radius == pytest.approx(11.224, abs=1e-3)


def test_axial_reflector_fills_fixed_height(nominal, constants):
    for fh in (130.0, 160.0, 190.0):
        g = dg.derive_geometry(nominal.replace(x_fh=fh), constants)
        assert g.axial_reflector_thickness + fh == pytest.approx(constants.total_core_height)
        assert g.drum_height == fh


def test_nominal_uranium_masses(nominal, constants):
    m = dg.mass_inventory(dg.derive_geometry(nominal, constants), nominal, constants)
    assert m.uranium == pytest.approx(525.06, rel=0.01)
    assert m.u235 == pytest.approx(103.44, rel=0.01)
    assert m.u235 / m.uranium == pytest.approx(0.197, rel=1e-14)


def test_be_solution_uranium_mass(nominal, constants):
    d = nominal.replace(x_cr=1.10, x_fh=190.0)
    m = dg.mass_inventory(dg.derive_geometry(d, constants), d, constants)
    assert m.uranium == pytest.approx(753.27, rel=0.01)


def test_uranium_scaling(nominal, constants):
    def u(**kw):
        d = nominal.replace(**kw)
        return dg.mass_inventory(dg.derive_geometry(d, constants), d, constants).uranium

    base = u()
    assert u(x_fh=190.0) / base == pytest.approx(190 / 160, rel=1e-12)
    assert u(x_cr=0.8) / base == pytest.approx(0.64, rel=1e-12)


def test_masses_equal_volume_times_density(nominal, constants):
    g = dg.derive_geometry(nominal, constants)
    m = dg.mass_inventory(g, nominal, constants)
    assert m.yhx == pytest.approx(g.moderator_volume * constants.density["yhx"] * 1000)
    assert m.b4c == pytest.approx(g.drum_coating_volume * constants.density["b4c"] * 1000)


def test_default_constants_match_core_table(constants):
    c = constants
    assert (c.thermal_power_mw, c.n_flakes, c.n_compacts_per_flake) == (2.0, 30, 63)
    assert (c.n_heat_pipes_per_flake, c.n_moderator_rods_per_flake, c.n_drums) == (37, 27, 12)
    assert (c.drum_coating_thickness, c.packing_fraction) == (1.0, 0.40)
    assert 3.2 <= c.density["triso_compact"] <= 3.5
    assert 4.3 <= c.density["yhx"] <= 4.6
    assert 1.9 <= c.density["graphite"] <= 2.3


def test_constants_from_dict_merges_density():
    c = dg.ReactorConstants.from_dict({"thermal_power_mw": 3.0, "density": {"be": 1.8}})
    assert c.thermal_power_mw == 3.0 and c.density["be"] == 1.8 and c.density["yhx"] == 4.45
    with pytest.raises(KeyError):
        dg.ReactorConstants.from_dict({"bogus": 1})


def test_normalize_nominal_coating_angle(nominal):
    assert dg.normalize(nominal)[0] == pytest.approx((90 - 35) / 145, abs=1e-4)
    assert dg.normalize(nominal)[0] == pytest.approx(0.3793, abs=1e-4)


def test_zero_vector_is_lower_bounds():
    x = dg.denormalize(np.zeros(7))
    assert x[:5].tolist() == [lo for lo, _ in dg.FIXED_BOUNDS.values()]
    (cr_lo, _), (mr_lo, _) = dg.radius_bounds(1.94)
    assert x[5] == pytest.approx(cr_lo) and x[6] == pytest.approx(mr_lo)


def test_round_trip_1000_random_designs():
    X = dg.sample_uniform(1000, np.random.default_rng(0))
    back = dg.denormalize(dg.normalize(X))
    np.testing.assert_allclose(back, X, rtol=1e-12)
    for x in X[:50]:
        dg.validate(DesignPoint.from_array(x))


@given(unit)
@settings(max_examples=200, deadline=None)
def test_any_cube_point_denormalizes_to_valid_design(u):
    d = dg.denormalize_design(u)
    dg.validate(d)
    # pins never overlap
    assert d.x_cr <= d.x_pp / 2 + 1e-12
    assert d.x_mr + dg.MODERATOR_CLAD <= d.x_pp / 2 + 1e-12


@given(unit)
@settings(max_examples=100, deadline=None)
def test_all_volumes_positive(u):
    g = dg.derive_geometry(dg.denormalize_design(u))
    for name in ("fuel_volume", "moderator_volume", "monolith_volume", "radial_reflector_volume",
                 "axial_reflector_volume", "drum_body_volume", "drum_coating_volume", "vessel_volume"):
        assert getattr(g, name) > 0, name


def test_flake_width_increasing_in_pitch():
    p = np.linspace(1.94, 2.78, 50)
    assert np.all(np.diff(dg.flake_width(p)) > 0)
    assert np.all(np.diff(dg.drum_radius(dg.flake_width(p))) > 0)


def test_batch_masses_match_scalar(nominal, constants):
    b = dg.batch_masses(nominal.as_array()[None], constants)
    m = dg.mass_inventory(dg.derive_geometry(nominal, constants), nominal, constants)
    assert b["uranium"][0] == pytest.approx(m.uranium)
    assert b["axial_reflector"][0] == pytest.approx(m.axial_reflector)


def test_csv_row_round_trip(nominal):
    assert DesignPoint.from_row(nominal.to_row()) == nominal
    assert list(nominal.to_row()) == list(dg.PARAM_NAMES)


def test_lhs_stratified(rng):
    X = dg.sample_lhs(50, rng)
    U = dg.normalize(X)
    for j in range(5):
        assert sorted(np.floor(U[:, j] * 50).astype(int)) == list(range(50))
