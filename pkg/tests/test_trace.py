import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from edgerent.harness.trace import (SlotSeries, TraceEvent, TraceFormatError, aggregate_slots,
                                    build_contexts, convert_gwa, load_trace, site_map_for,
                                    trace_series, unknown_sites)


def write(tmp_path, text, name="trace.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoad:
    def test_three_rows(self, tmp_path):
        ev = load_trace(write(tmp_path, "submit_time,site_id\n5,a\n1,a\n9,b\n"))
        assert len(ev) == 3 and len({e.site_id for e in ev}) == 2

    def test_sorted(self, tmp_path):
        ev = load_trace(write(tmp_path, "submit_time,site_id\n30,a\n10,b\n20,a\n"))
        assert [e.submit_time for e in ev] == [10, 20, 30]

    def test_negative_time_line(self, tmp_path):
        with pytest.raises(TraceFormatError, match=r":3: negative"):
            load_trace(write(tmp_path, "submit_time,site_id\n1,a\n-4,b\n"))

    def test_bad_header(self, tmp_path):
        with pytest.raises(TraceFormatError, match="header"):
            load_trace(write(tmp_path, "time,site\n1,a\n"))

    def test_empty(self, tmp_path):
        with pytest.raises(TraceFormatError, match="empty"):
            load_trace(write(tmp_path, ""))

    def test_bad_number(self, tmp_path):
        with pytest.raises(TraceFormatError, match=":2: bad submit_time"):
            load_trace(write(tmp_path, "submit_time,site_id\nnoon,a\n"))

    def test_unknown_sites_logged(self, tmp_path, caplog):
        p = write(tmp_path, "submit_time,site_id\n1,a\n2,zz\n")
        load_trace(p, sites=["a"])
        assert "zz" in caplog.text
        assert unknown_sites([TraceEvent(1, "a"), TraceEvent(2, "q")], ["a"]) == ["q"]


class TestAggregate:
    def test_boundary(self):
        ev = [TraceEvent(t, "a") for t in (0, 10799, 10800)]
        counts = aggregate_slots(ev, 10800, {"a": 0})
        assert counts[:, 0].tolist() == [2, 1]

    def test_idle_site(self):
        ev = [TraceEvent(0, "a"), TraceEvent(20000, "a")]
        counts = aggregate_slots(ev, 10800, {"a": 0, "b": 1})
        assert counts[:, 1].tolist() == [0, 0]

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 1e6), st.sampled_from("abcde")), min_size=1, max_size=300),
           st.sampled_from([600.0, 3600.0, 10800.0]))
    def test_conservation(self, rows, slot):
        ev = sorted(TraceEvent(t, s) for t, s in rows)
        counts = aggregate_slots(ev, slot, site_map_for(ev))
        assert counts.sum() == len(rows)


class TestContexts:
    def test_time_of_day(self):
        ctx = build_contexts(np.ones((8, 1)), 10800)
        assert ctx[2, 0, 0] == 0.25

    def test_first_day_level_zero(self):
        ctx = build_contexts(np.ones((16, 2)) * 3, 10800)
        assert (ctx[:8, :, 1] == 0).all()

    def test_level_at_max(self):
        demand = np.zeros((24, 1))
        demand[:8] = 1
        demand[8:16] = 5  # day two is the largest so far
        ctx = build_contexts(demand, 10800)
        assert ctx[16, 0, 1] == 1.0 and ctx[8, 0, 1] == 1.0

    def test_level_ratio(self):
        demand = np.zeros((24, 1))
        demand[:8] = 4
        demand[8:16] = 1
        ctx = build_contexts(demand, 10800)
        assert ctx[16, 0, 1] == pytest.approx(8 / 32)

    def test_dim_one(self):
        assert build_contexts(np.ones((3, 2)), 10800, dim=1).shape == (3, 2, 1)


def test_trace_series(tmp_path):
    p = write(tmp_path, "submit_time,site_id\n0,b\n100,a\n86400,a\n")
    series, counts, site_map = trace_series(p)
    assert site_map == {"a": 0, "b": 1}
    assert series.demand.sum() == 3 and series.horizon == 9


def test_series_validation():
    with pytest.raises(ValueError):
        SlotSeries(np.ones((2, 2)), np.full((2, 2, 2), 1.5))


def test_convert_gwa(tmp_path):
    src = write(tmp_path, "# JobID SubmitTime WaitTime RunSiteID\n1 100 5 siteA\n2 -1 0 siteB\n"
                          "3 50 2 siteB\n", "gwa.txt")
    dst = tmp_path / "out.csv"
    assert convert_gwa(src, dst) == 2
    ev = load_trace(dst)
    assert [(e.submit_time, e.site_id) for e in ev] == [(50, "siteB"), (100, "siteA")]
