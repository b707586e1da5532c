"""Tests for timestamped estimate propagation."""

import csv

import pytest

from ssdlab.core.errors import EstimateError
from ssdlab.core.estimates import (
    EstimateTable,
    average_age,
    average_range,
    dump_rows,
    estimate_age_total,
    init_tables,
    propagate,
    write_estimate_dump,
)
from ssdlab.core.shaping import SmoothedTracker

IDS = ["1", "2", "3"]


class TestInit:
    """Test the neutral starting tables."""

    def test_neutral_entries(self):
        tables = init_tables(IDS)

        assert tables["1"].estimates == {"2": 0.5, "3": 0.5}
        assert tables["1"].taus == {"2": 0, "3": 0}
        assert "1" not in tables["1"].subjects

    def test_duplicate_ids(self):
        with pytest.raises(EstimateError):
            init_tables(["a", "a"])


class TestPropagate:
    """Test the three-phase update."""

    def test_second_hand_information(self):
        """Agent 1 learns about 3 through 2 one step after 2 saw 3."""
        t0 = init_tables(IDS)
        t1 = propagate(t0, {"1": ["2"], "2": ["1", "3"], "3": ["2"]}, {"1": 0.5, "2": 0.5, "3": 0.8}, 1)
        t2 = propagate(t1, {"1": ["2"], "2": ["1"], "3": []}, {"1": 0.0, "2": 1.0, "3": 0.2}, 2)

        assert t1["1"].tau("3") == 0
        assert t1["2"].estimate("3") == 0.8
        assert t2["1"].estimate("3") == 0.8
        assert t2["1"].tau("3") == 1
        assert t2["1"].estimate("2") == 1.0
        assert t2["1"].tau("2") == 2
        assert t2["3"].tau("1") == 0

    def test_visible_entries_are_exact(self):
        tables = propagate(init_tables(IDS), {"1": ["2", "3"]}, {"1": 0.1, "2": 0.2, "3": 0.3}, 4)

        assert tables["1"].estimates == {"2": 0.2, "3": 0.3}
        assert tables["1"].taus == {"2": 4, "3": 4}
        assert tables["2"].taus == {"1": 0, "3": 0}

    def test_equally_old_entries_are_not_adopted(self):
        """Only strictly fresher neighbour entries replace the owner's."""
        tables = init_tables(IDS)
        tables["1"].estimates["3"] = 0.9
        tables["1"].taus["3"] = 5
        tables["2"].estimates["3"] = 0.1
        tables["2"].taus["3"] = 5

        updated = propagate(tables, {"1": ["2"]}, {a: 0.5 for a in IDS}, 6)

        assert updated["1"].estimate("3") == 0.9

    def test_ties_go_to_the_first_declared_neighbour(self):
        ids = ["a", "b", "c", "d"]
        tables = init_tables(ids)
        tables["b"].estimates["d"], tables["b"].taus["d"] = 0.2, 3
        tables["c"].estimates["d"], tables["c"].taus["d"] = 0.7, 3

        updated = propagate(tables, {"a": ["c", "b"]}, {x: 0.5 for x in ids}, 4)

        assert updated["a"].estimate("d") == 0.2
        assert updated["a"].tau("d") == 3

    def test_reads_the_previous_snapshot(self):
        """Information moves at most one hop per step and the input is untouched."""
        tables = init_tables(IDS)
        visibility = {"1": ["2"], "2": ["1", "3"], "3": ["2"]}

        updated = propagate(tables, visibility, {"1": 0.3, "2": 0.4, "3": 0.9}, 1)

        assert updated["1"].tau("3") == 0
        assert tables["2"].tau("3") == 0

    def test_self_visibility(self):
        with pytest.raises(EstimateError, match="itself"):
            propagate(init_tables(IDS), {"1": ["1"]}, {a: 0.5 for a in IDS}, 1)

    def test_unknown_agents(self):
        with pytest.raises(EstimateError):
            propagate(init_tables(IDS), {"1": ["9"]}, {a: 0.5 for a in IDS}, 1)
        with pytest.raises(EstimateError):
            propagate(init_tables(IDS), {"9": ["1"]}, {a: 0.5 for a in IDS}, 1)

    def test_missing_estimate(self):
        with pytest.raises(EstimateError):
            EstimateTable("1").estimate("2")


class TestSummaries:
    """Test age and range summaries."""

    def test_average_age(self):
        """Nobody sees anybody: every entry ages by one per step."""
        ids = ["a", "b"]
        history = [init_tables(ids)]
        for t in (1, 2, 3):
            history.append(propagate(history[-1], {}, {"a": 0.5, "b": 0.5}, t))

        # ages per table are 0, 1, 2, 3 over steps 0..3
        assert estimate_age_total(history[3], 3) == 6
        assert average_age(history) == pytest.approx(12 / (2 * 3))

    def test_average_age_needs_two_steps(self):
        with pytest.raises(EstimateError):
            average_age([init_tables(IDS)])

    def test_full_visibility_has_zero_age(self):
        history = [init_tables(IDS)]
        visibility = {i: [j for j in IDS if j != i] for i in IDS}
        for t in (1, 2):
            history.append(propagate(history[-1], visibility, {a: 0.5 for a in IDS}, t))

        assert average_age(history) == 0.0

    def test_average_range(self):
        trackers = [
            SmoothedTracker(e=1.0, e_min=0.0, e_max=2.0, updates=3),
            SmoothedTracker(e=1.0, e_min=1.0, e_max=1.0, updates=1),
        ]

        assert average_range(trackers) == pytest.approx(1.0)
        assert average_range([]) == 0.0

    def test_dump(self, tmp_path):
        tables = init_tables(IDS)

        path = write_estimate_dump(dump_rows(tables, 0), tmp_path / "dump.csv")

        with path.open() as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == 6
        assert rows[0] == {"t": "0", "owner": "1", "subject": "2", "estimate": "0.5", "tau": "0"}
