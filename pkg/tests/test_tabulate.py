import numpy as np
import pandas as pd
import pytest

from qwivar.tabulate import (CELL_COLUMNS, SIZE_CLASSES, SUMMARY_COLUMNS, additivity_audit, lower_median,
                             nearest_rank, read_cells, round_half_away, run_tables, size_class, summarize,
                             to_csv_text)


@pytest.mark.parametrize("value,cls", [(0, "zero"), (0.49, "zero"), (0.5, "1-2"), (2.49, "1-2"), (2.5, "3-9"),
                                       (9.5, "10-99"), (99.49, "10-99"), (999.5, "1000+"), (1e6, "1000+")])
def test_size_class_after_rounding(value, cls):
    assert size_class(value) == cls


def test_round_half_away():
    assert list(round_half_away([0.5, 1.5, 2.5, -0.5, 2.4999])) == [1, 2, 3, -1, 2]


def test_medians_and_ranks():
    assert lower_median([4, 1, 3, 2]) == 2
    assert lower_median([5, np.nan, 1, 3]) == 3
    assert nearest_rank(list(range(1, 101)), 0.95) == 95
    assert nearest_rank([7.0], 0.75) == 7.0
    assert np.isnan(lower_median([]))


@pytest.fixture(scope="module")
def cells(small_run):
    return run_tables(small_run)


def test_cells_table_layout(cells, small_run):
    assert list(cells.columns) == CELL_COLUMNS
    assert set(cells["size_class"]) <= set(SIZE_CLASSES)
    sup = cells[cells.suppressed == 1]
    assert (sup.size_class == "1-2").all() and sup.published.isna().all()
    pub = cells[(cells.suppressed == 0) & cells.estimate.notna()]
    assert np.array_equal(pub.published, round_half_away(pub.estimate))
    # first quarter has no B; first and last have no F
    q = sorted(set(cells.quarter))
    assert not ((cells.quarter == q[0]) & cells.stat.isin(["B", "F", "ZW3"])).any()
    assert not ((cells.quarter == q[-1]) & cells.stat.isin(["F", "ZW3"])).any()
    ok = cells.V_T > 0
    tot = cells.loc[ok, ["pct_within", "pct_between_imp", "pct_between_sdl"]].sum(axis=1)
    assert np.allclose(tot, 100.0)


def test_size_class_uses_class_variable(cells):
    key = ["table", "state", "quarter", "cell"]
    m = cells[cells.stat == "M"].set_index(key).size_class
    w1 = cells[cells.stat == "W1"].set_index(key).size_class
    assert (m.loc[w1.index] == w1).all()


def test_worker_count_does_not_matter(small_run, cells):
    assert to_csv_text(run_tables(small_run, workers=3)) == to_csv_text(cells)


def test_summary(cells):
    s = summarize(cells)
    assert list(s.columns) == SUMMARY_COLUMNS
    g = cells[(cells.table == "Age x Gender") & (cells.stat == "B") & (cells.size_class == "10-99")]
    row = s[(s.table == "Age x Gender") & (s.stat == "B") & (s.size_class == "10-99")].iloc[0]
    assert row.n_cells == len(g)
    assert row.V_W_med == lower_median(g.V_W)
    assert row.CV_p75 == nearest_rank(g.CV, 0.75)
    assert row.V_T_med == pytest.approx(row.V_W_med + 1.1 * (row.V_B_med + row.V_SDL_med))


def test_additivity_audit(cells, small_run):
    audit = additivity_audit(cells, small_run)
    assert len(audit) > 0
    assert audit.bracketed.all()


def test_csv_round_trip(tmp_path, cells):
    path = tmp_path / "cells.csv"
    path.write_text(to_csv_text(cells, "# manifest: seed=5"))
    back = read_cells(path)
    assert len(back) == len(cells)
    assert np.allclose(back.V_T, cells.V_T.astype(float), equal_nan=True, rtol=0, atol=0)
    with pytest.raises(ValueError, match="not a cells file"):
        pd.DataFrame({"x": [1]}).to_csv(tmp_path / "bad.csv", index=False)
        read_cells(tmp_path / "bad.csv")
