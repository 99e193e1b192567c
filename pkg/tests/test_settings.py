"""Configuration loading, overrides and validation."""

from pathlib import Path

import pytest

from src.config import settings as settings_module
from src.config.settings import (
    CompactionMode,
    LatencyMode,
    Settings,
    load_settings,
    parse_byte_size,
    reload_settings,
)
from src.utils.errors import ConfigError, InputFileError

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"
GIB = 1 << 30


def test_defaults_are_valid():
    settings = load_settings()
    assert settings.host.cxl_base == GIB
    assert settings.transport.interface_overhead_ns == 40
    assert settings.firmware.trigger_entries == settings.firmware.write_log_capacity_entries
    assert settings.device_capacity_bytes == 2 * GIB


@pytest.mark.parametrize("text, value", [
    (4096, 4096), ("16KiB", 16384), ("3 GiB", 3 * GIB), ("0x40000000", GIB), ("1_024", 1024), ("1.5m", 3 << 19),
])
def test_parse_byte_size(text, value):
    assert parse_byte_size(text) == value


@pytest.mark.parametrize("path", sorted(CONFIG_DIR.glob("*.yaml")), ids=lambda p: p.stem)
def test_bundled_configs_validate(path):
    settings = load_settings(str(path))
    assert settings.experiment_name == path.stem


def test_yaml_sections_merge_with_defaults(tmp_path):
    config = tmp_path / "run.yaml"
    config.write_text("seed: 5\nfirmware:\n  compaction_mode: parallel\nnand:\n  latency:\n    read_ns: 1000\n")
    settings = load_settings(str(config))
    assert settings.seed == 5
    assert settings.firmware.compaction_mode == CompactionMode.PARALLEL
    assert settings.nand.latency.read_ns == 1000
    assert settings.nand.latency.program_ns == 500_000


def test_overrides_accept_dotted_and_bare_keys():
    settings = load_settings(overrides=[
        "compaction_mode=parallel",
        "nand.latency.mode=spike",
        "llc_bytes=4MiB",
        "access_budget=null",
        "firmware.distribution_costs.cache_check.mean=12.5",
    ])
    assert settings.firmware.compaction_mode == CompactionMode.PARALLEL
    assert settings.nand.latency.mode == LatencyMode.SPIKE
    assert settings.host.llc_bytes == 4 << 20
    assert settings.host.access_budget is None
    assert settings.firmware.distribution_costs.cache_check.mean == 12.5


@pytest.mark.parametrize("override, message", [
    ("no_such_key=1", "unknown configuration key"),
    ("mean=1", "ambiguous"),
    ("seed", "key=value"),
    ("core_count=0", "invalid configuration"),
    ("compaction_mode=sideways", "invalid configuration"),
])
def test_bad_overrides(override, message):
    with pytest.raises(ConfigError, match=message):
        load_settings(overrides=[override])


def test_unknown_keys_are_rejected(tmp_path):
    config = tmp_path / "typo.yaml"
    config.write_text("host:\n  core_cout: 4\n")
    with pytest.raises(ConfigError):
        load_settings(str(config))
    with pytest.raises(ConfigError):
        Settings(colour="blue")


def test_file_errors(tmp_path):
    with pytest.raises(InputFileError):
        load_settings(str(tmp_path / "missing.yaml"))
    not_mapping = tmp_path / "list.yaml"
    not_mapping.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_settings(str(not_mapping))
    broken = tmp_path / "broken.yaml"
    broken.write_text("host: [unclosed\n")
    with pytest.raises(ConfigError):
        load_settings(str(broken))


@pytest.mark.parametrize("overrides, message", [
    (["cxl_base=3GiB"], "cxl_base must be below"),
    (["dram_regions=[[0, 0x50000000]]"], "overlaps the CXL window"),
    (["dram_regions=[[0, 100], [50, 200]]"], "disjoint"),
    (["llc_bytes=1000"], "llc_bytes"),
    (["write_log_capacity_entries=8", "compaction_trigger_entries=9"], "cannot exceed"),
    (["pages_per_way=1024"], "exceeds device capacity"),
    (["nand.latency.mode=empirical"], "empirical_path"),
    (["trace.generator.footprint_bytes=4GiB"], "footprint"),
    (["trace.generator.threads=9"], "threads exceeds"),
])
def test_cross_field_validation(overrides, message):
    with pytest.raises(ConfigError, match=message):
        load_settings(overrides=overrides)
    assert any(message in error for error in Settings(overrides=overrides).validate_configuration())


def test_environment_fills_unset_values(tmp_path, monkeypatch):
    monkeypatch.setenv("CXLSSD_SEED", "99")
    monkeypatch.setenv("CXLSSD_OUTPUT_DIR", "env-results")
    config = tmp_path / "seeded.yaml"
    config.write_text("seed: 5\n")
    settings = load_settings(str(config))
    assert settings.seed == 5
    assert settings.output_dir == "env-results"


def test_reload_replaces_global_instance(tmp_path, monkeypatch):
    monkeypatch.setattr(settings_module, "settings", None)
    config = tmp_path / "named.yaml"
    config.write_text("experiment_name: named\n")
    assert reload_settings(str(config)).experiment_name == "named"
    assert settings_module.get_settings().experiment_name == "named"


def test_snapshot_is_json_ready():
    snapshot = load_settings().config_snapshot()
    assert snapshot["firmware"]["compaction_mode"] == "sequential"
    assert snapshot["host"]["dram_regions"] == [[0, GIB]]
