import numpy as np
import pytest

from hpmropt import design as dg
from hpmropt import physics as ph
from hpmropt.physics import PhysicsEvaluator
from hpmropt.rom import ReducedOrderModel, RomConfig


def test_nominal_anchors(rom, nominal):
    q = rom.evaluate(nominal, include_itc=True)
    assert q.lifetime == pytest.approx(6.99, rel=0.02)
    assert q.sdm == pytest.approx(-6757.23, rel=0.02)
    assert q.fq == pytest.approx(1.787, rel=0.02)
    assert q.fdh == pytest.approx(1.469, rel=0.02)
    assert q.itc_hi == pytest.approx(-2.404, rel=0.02)
    assert q.q_max == pytest.approx(0.0188, abs=5e-5)


def test_is_evaluator(rom):
    assert isinstance(rom, PhysicsEvaluator)


def test_deterministic(rom, nominal):
    # NaN ITC fields compare equal under assert_equal
    np.testing.assert_equal(rom.evaluate(nominal).to_dict(), rom.evaluate(nominal).to_dict())
    again = ReducedOrderModel().evaluate(nominal, include_itc=True)
    assert again == rom.evaluate(nominal, include_itc=True)


def test_qmax_is_fq_times_qavg(rom, rng):
    out = rom.evaluate_batch(dg.sample_uniform(500, rng))
    np.testing.assert_allclose(out["q_max"] / out["q_avg"], out["fq"], rtol=1e-12)
    assert np.all(out["fq"] >= out["fdh"]) and np.all(out["fdh"] >= 1.0)


def test_low_enrichment_shortens_life(rom, nominal):
    assert rom.evaluate(nominal.replace(x_e=0.17)).lifetime < rom.evaluate(nominal).lifetime


def test_correlation_signs(rom):
    X = dg.sample_uniform(20_000, np.random.default_rng(5))
    q = rom.evaluate_batch(X)
    ok = q["lifetime"] > 0
    mr = X[ok, 6]
    assert np.corrcoef(mr, q["fdh"][ok])[0, 1] < 0
    assert np.corrcoef(mr, q["sdm"][ok])[0, 1] < 0
    assert np.corrcoef(X[:, 4], q["lifetime"])[0, 1] > 0
    assert np.corrcoef(X[:, 2], q["lifetime"])[0, 1] > 0


def test_batch_matches_single(rom, rng):
    X = dg.sample_uniform(5, rng)
    b = rom.evaluate_batch(X)
    for i, x in enumerate(X):
        q = rom.evaluate(dg.DesignPoint.from_array(x))
        assert q.lifetime == pytest.approx(b["lifetime"][i], rel=1e-12)
        assert q.fdh == pytest.approx(b["fdh"][i], rel=1e-12)


def test_chunking_does_not_change_results(rom, rng):
    X = dg.sample_uniform(300, rng)
    a = rom.evaluate_batch(X, chunk=4096)
    b = rom.evaluate_batch(X, chunk=7)
    for k in a:
        np.testing.assert_array_equal(a[k], b[k])


def test_trace_and_states_consistent(rom, nominal):
    tr = rom.keff_trace(nominal)
    assert ph.lifetime_from_trace(tr) == pytest.approx(rom.evaluate(nominal).lifetime, rel=1e-12)
    s = rom.reactivity_states(nominal)
    assert ph.shutdown_margin(s) == pytest.approx(rom.evaluate(nominal).sdm, rel=1e-12)
    assert all(k > 0 for k in (s.k_hzp, s.k_hfp, s.k_all_in, s.k_one_in))


def test_power_field_shape(rom, nominal):
    p = rom.power_field(nominal)
    assert p.shape == (63, 20)
    assert ph.f_q(p) == pytest.approx(rom.evaluate(nominal).fq, rel=1e-12)


def test_non_starters_negative_lifetime(rom):
    X = dg.sample_uniform(2000, np.random.default_rng(3))
    life = rom.evaluate_batch(X)["lifetime"]
    assert np.all(np.isfinite(life))
    assert 0.2 < np.mean(life <= 0) < 0.7


def test_invalid_design_rejected(rom, nominal):
    with pytest.raises(dg.DesignBoundsError):
        rom.evaluate(nominal.replace(x_cr=2.0))


def test_config_overrides_recalibrate(nominal):
    r = ReducedOrderModel(RomConfig(anchor_lifetime=8.0))
    assert r.evaluate(nominal).lifetime == pytest.approx(8.0, rel=0.02)
    with pytest.raises(KeyError):
        RomConfig.from_dict({"nope": 1})
