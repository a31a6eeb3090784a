import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from v2v_secrecy.scenario import (ConfigError, ScenarioConfig, build_topology, load_config,
                                  parse_config_text, per_rb_bandwidth)


def test_topology_at_50_kmh_is_active():
    topo = build_topology(ScenarioConfig(speed_kmh=50, headway_s=5, v2v_range_m=100))
    assert topo.inter_vehicle_distance_m == pytest.approx(69.444, abs=1e-3)
    off = ~np.eye(4, dtype=bool)
    assert topo.inter_vue_active[off].all()
    assert not topo.inter_vue_active.diagonal().any()


def test_topology_at_100_kmh_is_inactive():
    topo = build_topology(ScenarioConfig(speed_kmh=100))
    assert topo.inter_vehicle_distance_m == pytest.approx(138.889, abs=1e-3)
    assert not topo.inter_vue_active.any()


def test_zero_speed_is_active():
    topo = build_topology(ScenarioConfig(speed_kmh=0, K=3))
    assert topo.inter_vehicle_distance_m == 0
    assert topo.inter_vue_active.sum() == 6


@pytest.mark.parametrize("M,expected", [(4, 5e6), (1, 20e6), (8, 2.5e6)])
def test_per_rb_bandwidth(M, expected):
    assert per_rb_bandwidth(ScenarioConfig(M=M, bandwidth_total=20e6)) == expected


@settings(max_examples=50, deadline=None)
@given(speed=st.floats(0, 200), headway=st.floats(0.1, 10), factor=st.floats(0.1, 5))
def test_distance_linear_in_speed_and_headway(speed, headway, factor):
    d = build_topology(ScenarioConfig(speed_kmh=speed, headway_s=headway)).inter_vehicle_distance_m
    d_v = build_topology(ScenarioConfig(speed_kmh=speed * factor, headway_s=headway)).inter_vehicle_distance_m
    d_h = build_topology(ScenarioConfig(speed_kmh=speed, headway_s=headway * factor)).inter_vehicle_distance_m
    assert d_v == pytest.approx(d * factor, rel=1e-12, abs=1e-12)
    assert d_h == pytest.approx(d * factor, rel=1e-12, abs=1e-12)


def test_topology_is_deterministic():
    cfg = ScenarioConfig(K=5, speed_kmh=73)
    a, b = build_topology(cfg), build_topology(cfg)
    assert np.array_equal(a.inter_vue_active, b.inter_vue_active)


@pytest.mark.parametrize("field,value", [("K", 0), ("M", -1), ("Ne", 0), ("p_max", 0.0),
                                         ("noise_power", -1.0), ("rician_k", -0.5),
                                         ("speed_kmh", -3.0)])
def test_invalid_config_rejected(field, value):
    with pytest.raises(ConfigError):
        ScenarioConfig(**{field: value})


def test_config_text_round_trip(tmp_path):
    cfg = ScenarioConfig(K=3, M=2, speed_kmh=100.0, scale_ve=0.25, seed=11)
    path = tmp_path / "x.cfg"
    path.write_text("# comment line\n" + cfg.to_text())
    assert load_config(path) == cfg


def test_overrides_and_unknown_keys(tmp_path):
    cfg = load_config(overrides=["K=2", "speed_kmh = 100"])
    assert cfg.K == 2 and cfg.speed_kmh == 100.0
    with pytest.raises(ConfigError):
        load_config(overrides=["bogus=1"])
    with pytest.raises(ConfigError):
        parse_config_text("K 4\n")
