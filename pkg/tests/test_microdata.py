import numpy as np
import pytest

from qwivar.microdata import (MISSING, WorldConfig, WorldError, draw_reporting, format_quarter,
                              generate_world, impute_characteristics, load_world, parse_quarter,
                              save_world)
from qwivar.oracle import small_world_config


def test_quarter_labels_round_trip():
    assert format_quarter(parse_quarter("2010Q3")) == "2010Q3"
    assert parse_quarter("2011Q1") - parse_quarter("2010Q4") == 1
    with pytest.raises(WorldError):
        parse_quarter("2010-3")


def test_world_is_deterministic(small_world):
    again = generate_world(small_world_config(11))
    assert np.array_equal(again.earnings, small_world.earnings)
    assert np.array_equal(again.chars_obs, small_world.chars_obs)
    assert np.array_equal(again.ui_reported, small_world.ui_reported)


def test_small_world_shape(small_world):
    assert small_world.n_employers == 50
    assert 1500 <= small_world.n_jobs <= 3000
    assert len(small_world.quarters) == 8
    assert (small_world.earnings >= 0).all()
    # every job holds at least one active quarter
    assert (small_world.earnings.max(axis=1) >= 1).all()


def test_reporting_rates():
    ids = np.arange(20_000)
    sector = (ids % 2).astype(int)
    rep = draw_reporting(ids, sector, 4, {"private": 0.02, "public": 0.10}, 1)
    assert 1 - rep[sector == 0].mean() == pytest.approx(0.02, abs=0.004)
    assert 1 - rep[sector == 1].mean() == pytest.approx(0.10, abs=0.008)


def test_item_missingness_and_imputation(small_world):
    obs = small_world.chars_obs
    assert (obs == MISSING).any()
    imp = impute_characteristics(small_world, 5, 3)
    assert imp.L == 5
    assert (imp.values >= 0).all()
    seen = obs != MISSING
    for ell in range(5):
        assert np.array_equal(imp.values[ell][seen], obs[seen])
    # the missing slots actually vary across implicates
    miss = ~seen
    assert (imp.values[0][miss] != imp.values[1][miss]).any()
    assert np.array_equal(imp.values, impute_characteristics(small_world, 5, 3).values)


def test_config_validation():
    with pytest.raises(WorldError):
        WorldConfig(seed=1, n_employers=-1)
    with pytest.raises(WorldError):
        WorldConfig(seed=1, record_missing={"private": 1.5})
    with pytest.raises(WorldError):
        WorldConfig.from_dict({"seed": 1, "bogus": 3})


@pytest.mark.parametrize("fmt", ["csv", "jsonl"])
def test_save_load_round_trip(tmp_path, small_world, fmt):
    imp = impute_characteristics(small_world, 3, 1)
    save_world(small_world, tmp_path, fmt, imp, manifest="# manifest: seed=11")
    back, imp2 = load_world(tmp_path)
    assert np.array_equal(back.earnings, small_world.earnings)
    assert np.array_equal(back.chars_obs, small_world.chars_obs)
    assert np.array_equal(back.chars_truth, small_world.chars_truth)
    assert np.array_equal(back.ui_reported, small_world.ui_reported)
    assert np.array_equal(np.isnan(back.qcew), np.isnan(small_world.qcew))
    assert np.array_equal(imp2.values, imp.values)


def test_load_reports_bad_rows(tmp_path, small_world):
    save_world(small_world, tmp_path, "csv")
    path = tmp_path / "jobs.csv"
    lines = path.read_text().splitlines()
    lines[3] = lines[3].replace(lines[3].split(",")[3], "abc", 1)
    path.write_text("\n".join(lines) + "\n")
    with pytest.raises(WorldError, match="jobs row 4: bad .earnings."):
        load_world(tmp_path)
