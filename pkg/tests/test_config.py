"""Config loading, defaulting, validation, and round-trip tests."""

import math

import pytest
import yaml

from holostream.config import (
    RunConfig,
    config_from_dict,
    config_to_dict,
    dump_config,
    load_config,
)
from holostream.errors import ConfigError


class TestDefaults:
    def test_empty_document_gives_full_defaults(self, tmp_path):
        path = tmp_path / "empty.yaml"
        path.write_text("")
        cfg = load_config(path)
        assert cfg == RunConfig()

    def test_default_values(self):
        cfg = RunConfig()
        assert cfg.radio.frequency_ghz == 30.0
        assert cfg.radio.total_power_dbm == 60.0
        assert cfg.radio.noise_figure_db == 9.0
        assert cfg.radio.snr_threshold_db == 15.0
        assert cfg.topology.n_links == 6
        assert cfg.topology.ring_radius_m == 10.0
        assert cfg.topology.gnb_height_m == 10.0
        assert cfg.topology.ue_height_m == 1.5
        assert cfg.optimizer.qp_set == (27, 37, 45)
        assert cfg.optimizer.d_t_psnr_db == 1.5
        assert cfg.sim.densities == (0.03, 0.05, 0.1)
        assert cfg.sim.frames_per_gop == 4
        assert cfg.gop_seconds == pytest.approx(4.0 / 30.0)

    def test_screening_power_is_half_budget(self):
        cfg = RunConfig()
        assert cfg.screening_power_dbm == pytest.approx(60.0 - 10 * math.log10(2), abs=1e-12)

    def test_sites_ring(self):
        sites = RunConfig().sites()
        assert len(sites) == 6
        for s in sites:
            assert math.hypot(s.position[0], s.position[1]) == pytest.approx(10.0)

    def test_default_curves_load(self):
        curves = RunConfig().load_curves()
        assert set(curves) == {2, 4, 6}


class TestValidation:
    def test_unknown_root_key(self):
        with pytest.raises(ConfigError, match="radioo"):
            config_from_dict({"radioo": {}})

    def test_unknown_nested_key(self):
        with pytest.raises(ConfigError, match="radio.frequency"):
            config_from_dict({"radio": {"frequency": 30}})

    def test_negative_density_names_key(self):
        with pytest.raises(ConfigError, match="blockage.density"):
            config_from_dict({"blockage": {"density": -0.1}})

    def test_bad_policy(self):
        with pytest.raises(ConfigError, match="sim.policy"):
            config_from_dict({"sim": {"policy": "magic"}})

    def test_bad_qp_order(self):
        with pytest.raises(ConfigError, match="qp_set"):
            config_from_dict({"optimizer": {"qp_set": [45, 37]}})

    def test_bad_split_fractions(self):
        with pytest.raises(ConfigError, match="power_split_fractions"):
            config_from_dict({"optimizer": {"power_split_fractions": [0.0, 0.5]}})

    def test_bad_type(self):
        with pytest.raises(ConfigError, match="sim.n_segments"):
            config_from_dict({"sim": {"n_segments": "many"}})

    def test_bad_mcs_table(self):
        with pytest.raises(ConfigError, match="mcs_table"):
            config_from_dict({"phy": {"mcs_table": [{"id": 1}]}})

    def test_mcs_table_ordering_checked(self):
        table = [
            {"id": 1, "modulation_order": 4, "code_rate": 0.75,
             "mmib_threshold": 0.5, "mmib_spread": 0.05},
            {"id": 2, "modulation_order": 2, "code_rate": 0.5,
             "mmib_threshold": 0.6, "mmib_spread": 0.05},
        ]
        with pytest.raises(ConfigError, match="spectral efficiency"):
            config_from_dict({"phy": {"mcs_table": table}})

    def test_non_mapping_document(self):
        with pytest.raises(ConfigError):
            config_from_dict([1, 2, 3])

    def test_speed_range(self):
        with pytest.raises(ConfigError, match="speed_min"):
            config_from_dict({"blockage": {"speed_min_mps": 2.0, "speed_max_mps": 1.0}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_config(tmp_path / "nope.yaml")

    def test_invalid_yaml(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text("radio: [unclosed")
        with pytest.raises(ConfigError, match="not valid YAML"):
            load_config(path)


class TestRoundTrip:
    def test_serialize_load_identical(self, tmp_path):
        doc = {
            "radio": {"total_power_dbm": 20.0, "antenna_gain_db": 10.0},
            "blockage": {"density": 0.1, "loss_db": 25.0},
            "optimizer": {"qp_set": [22, 32, 42], "d_t_psnr_db": 2.0},
            "sim": {"n_segments": 10, "seed": 5, "policy": "clo"},
        }
        cfg = config_from_dict(doc)
        path = tmp_path / "roundtrip.yaml"
        path.write_text(dump_config(cfg))
        again = load_config(path)
        assert again == cfg
        # and a second round trip is stable
        path.write_text(dump_config(again))
        assert load_config(path) == cfg

    def test_dump_is_yaml(self):
        text = dump_config(RunConfig())
        doc = yaml.safe_load(text)
        assert doc["radio"]["frequency_ghz"] == 30.0
        assert doc["optimizer"]["qp_set"] == [27, 37, 45]

    def test_custom_positions_round_trip(self):
        doc = {"topology": {"gnb_positions": [[1.0, 2.0, 10.0], [3.0, 4.0, 10.0]]}}
        cfg = config_from_dict(doc)
        assert cfg.topology.n_links == 2
        sites = cfg.sites()
        assert sites[0].position == (1.0, 2.0, 10.0)
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_inline_curves(self):
        doc = {
            "phy": {
                "mmib_curves": {
                    2: [[-10.0, 0.0], [10.0, 1.0]],
                }
            }
        }
        cfg = config_from_dict(doc)
        curves = cfg.load_curves()
        assert set(curves) == {2}
        assert float(curves[2].mmib[-1]) == 1.0
        assert config_from_dict(config_to_dict(cfg)) == cfg

    def test_curve_file_reference(self, tmp_path):
        from holostream.curves import generate_mmib_curves, write_curves_csv

        path = tmp_path / "curves.csv"
        write_curves_csv(generate_mmib_curves((2,), [-5.0, 5.0, 15.0], 2000, 1), path)
        cfg = config_from_dict({"phy": {"curve_file": str(path)}})
        assert set(cfg.load_curves()) == {2}


class TestBuilders:
    def test_optimizer_config_carries_radio_budget(self):
        cfg = config_from_dict({"radio": {"total_power_dbm": 23.0}})
        oc = cfg.optimizer_config()
        assert oc.total_power_dbm == 23.0
        assert oc.mcs_set == cfg.phy.mcs_table

    def test_phy_context(self):
        ctx = RunConfig().phy_context()
        assert ctx.segment_seconds == pytest.approx(4.0 / 30.0)
        assert ctx.bandwidth_hz == 400e6
        assert set(ctx.curves) == {2, 4, 6}

    def test_channel_params_pull_blockage_loss(self):
        cfg = config_from_dict({"blockage": {"loss_db": 33.0}})
        assert cfg.channel_params().blockage_loss_db == 33.0
