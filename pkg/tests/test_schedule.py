"""
Tests for separation schedules.
"""

import pytest

from coarse_linewidth.domain.schedule import (
    claimed_bounds,
    custom_schedule,
    make_schedule,
    validate_schedule,
)
from coarse_linewidth.exceptions import ScheduleError


def test_paper_schedule_should_match_the_closed_forms(paper_schedule):
    """Test d0, budgets and the final bound for c=2, ell=1."""
    assert paper_schedule.d0 == 810
    assert paper_schedule.delta == ((810, 270, 90), (90, 30, 10))
    assert paper_schedule.alpha == (1, 21)
    assert paper_schedule.beta == (1, 3241)
    assert paper_schedule.final_bound() == (21, 2431)


def test_minimal_schedule_should_use_the_least_tables(minimal_schedule):
    """Test the minimal tables for c=2, ell=1."""
    assert minimal_schedule.delta == ((46, 22, 10), (46, 22, 10))
    assert minimal_schedule.d0 == 46
    assert minimal_schedule.mode == "minimal"


@pytest.mark.parametrize("c, ell", [(2, 1), (3, 1), (2, 2), (5, 2)])
def test_named_schedules_should_satisfy_the_axioms(c, ell):
    """Test that both named schedules validate for several parameters."""
    for mode in ("paper", "minimal"):
        schedule = make_schedule(c, ell, mode)
        validate_schedule(schedule)
        assert schedule.separation(ell, 2 * ell) >= 5 * c
        assert all(value <= schedule.d0 for row in schedule.delta for value in row)


def test_minimal_schedule_should_not_exceed_the_paper_schedule():
    """Test that the minimal tables are never larger than the closed forms."""
    for c, ell in [(2, 1), (2, 2), (4, 2)]:
        assert make_schedule(c, ell, "minimal").d0 <= make_schedule(c, ell, "paper").d0


@pytest.mark.parametrize(
    "c, ell, mode",
    [(1, 1, "paper"), (2, 0, "paper"), (2, 1, "other")],
)
def test_make_schedule_should_reject_bad_parameters(c, ell, mode):
    """Test the parameter checks."""
    with pytest.raises(ScheduleError):
        make_schedule(c, ell, mode)


def test_custom_schedule_should_name_the_violated_entry():
    """Test that a table breaking the doubling axiom is refused with its century."""
    with pytest.raises(ScheduleError, match="century 0"):
        custom_schedule(2, 1, [[40, 22, 10], [46, 22, 10]])
    with pytest.raises(ScheduleError, match="5c"):
        custom_schedule(2, 1, [[46, 22, 9], [46, 22, 10]])


def test_custom_schedule_should_accept_the_minimal_tables(minimal_schedule):
    """Test that explicit tables equal to the minimal ones validate."""
    schedule = custom_schedule(2, 1, [list(row) for row in minimal_schedule.delta])
    assert schedule.d0 == 46
    assert schedule.alpha == minimal_schedule.alpha
    assert schedule.mode == "custom"


def test_separation_should_refuse_missing_entries(paper_schedule):
    """Test lookups outside the table."""
    with pytest.raises(ScheduleError):
        paper_schedule.separation(2, 0)


def test_claimed_bounds_should_list_every_family(paper_schedule):
    """Test the closed-form bounds logged next to certificates."""
    bounds = claimed_bounds(paper_schedule, 0)
    assert bounds["castle"] == (8, 1 + 810)
    assert set(bounds) == {
        "castle",
        "province boundary",
        "cabal boundary",
        "small framework",
        "maximal communication",
    }
