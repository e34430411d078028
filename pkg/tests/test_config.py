import json

import pytest

from vanetcfg.config import ConfigError, SimConfig


def test_defaults_match_reference_table():
    c = SimConfig()
    assert (c.area, c.n_nodes, c.prp_rsu, c.slots) == (5000.0, 100, 0.1, 500)
    assert (c.p_t_dbm, c.g0_dbi, c.bandwidth_hz, c.n0_dbm_per_mhz, c.alpha_l) == (30.0, 20.0, 800e6, -134.0, 2.0)
    assert (c.alpha, c.beta, c.v_intra, c.v_inter, c.n_max, c.d_max) == (2.0, 0.1, 1.0, 0.2, 15, 2)
    assert (c.d_ref_min, c.d_ref_max, c.v_ref_min, c.v_ref_max) == (200.0, 300.0, 20.0, 30.0)


def test_round_trip_and_hash(tmp_path):
    c = SimConfig(n_nodes=42, node_counts=[10, 20], inits=["none", "CABP"], seed=7)
    back = SimConfig.from_dict(json.loads(c.to_json()))
    assert back == c and back.config_hash() == c.config_hash()
    assert SimConfig(seed=8).config_hash() != SimConfig(seed=7).config_hash()
    path = tmp_path / "c.yaml"
    path.write_text("n_nodes: 12\ninterference: true\nalgorithms: [DCA]\n")
    loaded = SimConfig.load(path)
    assert loaded.n_nodes == 12 and loaded.interference and loaded.algorithms == ["DCA"]


@pytest.mark.parametrize("bad", [
    {"zeta": 1.5}, {"algorithms": ["RLOC"]}, {"inits": ["random"]}, {"n_max": 0},
    {"runs": 0}, {"d_ref_min": 400.0}, {"alpha": 1.0}, {"epsilon": 0.0},
])
def test_validation(bad):
    with pytest.raises(ConfigError):
        SimConfig(**bad).validate()


def test_unknown_keys_rejected(tmp_path):
    with pytest.raises(ConfigError):
        SimConfig.from_dict({"nodes": 3})
    path = tmp_path / "c.yaml"
    path.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        SimConfig.load(path)
