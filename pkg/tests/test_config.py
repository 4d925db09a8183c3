import pytest

from qwivar.config import ConfigError, RunConfig, load_table_specs


def test_seed_required():
    with pytest.raises(ConfigError, match="seed"):
        RunConfig.from_dict({})
    with pytest.raises(ConfigError):
        RunConfig(seed=-1)
    with pytest.raises(ConfigError):
        RunConfig(seed=2 ** 64)


@pytest.mark.parametrize("kw", [{"L": 1}, {"G": 1}, {"a": 0.2, "b": 0.1}, {"mode": "x"}, {"stats": ("Q",)},
                                {"level": 1.5}, {"workers": 0}, {"window": ("2011Q1", "2010Q1")}])
def test_invalid_values(kw):
    with pytest.raises(ConfigError):
        RunConfig(seed=1, **kw)


def test_load_with_overrides(tmp_path):
    p = tmp_path / "run.yaml"
    p.write_text("seed: 3\nL: 4\nmode: supp\nworld: {n_employers: 20}\n")
    cfg = RunConfig.load(p, L=6, mode=None)
    assert cfg.L == 6 and cfg.mode == "supplemental" and cfg.world_config().n_employers == 20
    assert cfg.world_config().seed == 3
    with pytest.raises(ConfigError):
        RunConfig.load(tmp_path / "missing.yaml")
    p.write_text("seed: 3\nbogus: 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        RunConfig.load(p)


def test_hash_ignores_execution_settings():
    a = RunConfig(seed=1)
    assert a.config_hash() == RunConfig(seed=1, workers=8, out="elsewhere").config_hash()
    assert a.config_hash() != RunConfig(seed=2).config_hash()
    assert a.manifest().startswith("# manifest: seed=1 L=10 level=0.9 config_sha256=")


def test_table_spec_file(tmp_path):
    p = tmp_path / "tables.yaml"
    p.write_text("tables:\n  - Age x Gender\n  - {name: by_industry, stratifiers: [Industry]}\n")
    assert load_table_specs(p) == ("Age x Gender", "Industry")
    p.write_text("tables: []\n")
    with pytest.raises(ConfigError):
        load_table_specs(p)
