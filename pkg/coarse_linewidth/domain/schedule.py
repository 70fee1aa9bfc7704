"""
Space requirements and budgets for every century.

A schedule fixes, for each century k in 0..ell, a separation table ``delta[k][i]`` for
``0 <= i <= 2*ell`` and a budget ``(alpha[k], beta[k])``, together with the global
constant ``d0``.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from coarse_linewidth.exceptions import ScheduleError

logger = logging.getLogger(__name__)

MODES = ("paper", "minimal", "custom")


@dataclass(frozen=True)
class Schedule:
    """
    Per-century separation tables and budgets.

    Examples:
        sched = make_schedule(2, 1, "paper")
        sched.d0                # 810
        sched.final_bound()     # (21, 2431)
    """

    c: int
    ell: int
    d0: int
    delta: Tuple[Tuple[int, ...], ...]
    alpha: Tuple[int, ...]
    beta: Tuple[int, ...]
    mode: str = "custom"

    def separation(self, k: int, i: int) -> int:
        """``delta_k(i)``."""
        if not 0 <= k <= self.ell or not 0 <= i <= 2 * self.ell:
            raise ScheduleError(f"no separation entry delta_{k}({i})")
        return self.delta[k][i]

    def budget(self, k: int) -> Tuple[int, int]:
        return self.alpha[k], self.beta[k]

    def castle_bound(self, k: int) -> Tuple[int, int]:
        return 8 * self.alpha[k], self.beta[k] + (self.ell - k) * self.d0

    def small_bound(self, k: int) -> Tuple[int, int]:
        """Quasi-bound every framework of a small government respects."""
        span = self.ell - k
        return 7 * span * 3**span * self.alpha[k], self.beta[k] + 2 * (span - 1) * self.d0

    def house_union_bound(self, k: int) -> Tuple[int, int]:
        return self.alpha[k], self.beta[k] - self.d0

    def final_bound(self) -> Tuple[int, int]:
        return self.house_union_bound(self.ell)

    def passage_limit(self, k: int) -> int:
        return (self.ell - k) * self.d0 + 1


def _budgets(c: int, ell: int, d0: int) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    alpha = [1]
    beta = [1]
    for k in range(ell):
        alpha.append(7 * (ell - k) * 3 ** (ell - k) * alpha[k])
        beta.append(beta[k] + 2 * (ell - k + 1) * d0)
    return tuple(alpha), tuple(beta)


def _carry_pairs(k: int, ell: int) -> List[Tuple[int, int]]:
    """
    ``(current sum, next sum)`` for every pair of strongholds that survive into century k+1.

    Rebels (houses of rank k-1, forts of rank k) become houses of rank k, frameworks of
    type t in k+1..ell-1 become forts of rank k+1.
    """
    current: List[Tuple[int, int]] = [(k, k)]
    if k >= 1:
        current.append((k - 1, k))
    current.extend((t, k + 1) for t in range(k + 1, ell))
    pairs = set()
    for i, (rank_a, next_a) in enumerate(current):
        for rank_b, next_b in current[i:]:
            pairs.add((rank_a + rank_b, next_a + next_b))
    return sorted(pairs)


def _minimal_tables(c: int, ell: int) -> Tuple[Tuple[int, ...], ...]:
    tables: Dict[int, List[int]] = {}
    for k in range(ell, -1, -1):
        required = [0] * (2 * ell + 1)
        if k < ell:
            for now, later in _carry_pairs(k, ell):
                required[now] = max(required[now], tables[k + 1][later])
        table = [0] * (2 * ell + 1)
        table[2 * ell] = max(5 * c, required[2 * ell])
        for i in range(2 * ell - 1, -1, -1):
            table[i] = max(required[i], 2 * table[i + 1] + 2)
        tables[k] = table
    return tuple(tuple(tables[k]) for k in range(ell + 1))


def validate_schedule(schedule: Schedule) -> None:
    """
    Check the space-requirement axioms and the century carry-over.

    Raises:
        ScheduleError: Naming the century and index of the first violation.
    """
    c, ell, d0 = schedule.c, schedule.ell, schedule.d0
    if c < 2 or ell < 1:
        raise ScheduleError("schedules need c >= 2 and ell >= 1")
    if len(schedule.delta) != ell + 1 or any(len(row) != 2 * ell + 1 for row in schedule.delta):
        raise ScheduleError(f"separation table must be {ell + 1} rows of {2 * ell + 1} entries")
    if len(schedule.alpha) != ell + 1 or len(schedule.beta) != ell + 1:
        raise ScheduleError(f"budgets must list {ell + 1} centuries")
    for k, row in enumerate(schedule.delta):
        for i in range(max(2 * k - 2, 0), 2 * ell):
            if row[i] < 2 * row[i + 1] + 2:
                raise ScheduleError(f"century {k}: delta({i}) < 2*delta({i + 1})+2")
        for i, value in enumerate(row):
            if value > d0:
                raise ScheduleError(f"century {k}: delta({i})={value} exceeds d0={d0}")
        if row[2 * ell] < 5 * c:
            raise ScheduleError(f"century {k}: delta({2 * ell}) < 5c")
        if schedule.alpha[k] < 1 or schedule.beta[k] < 1:
            raise ScheduleError(f"century {k}: budgets must be positive")
    for k in range(ell):
        now, later = schedule.delta[k], schedule.delta[k + 1]
        for current, following in _carry_pairs(k, ell):
            if now[current] < later[following]:
                raise ScheduleError(
                    f"century {k}: delta({current}) < delta_{k + 1}({following}) at century change"
                )
        if schedule.mode == "paper" and now[2 * ell] < later[2 * k]:
            raise ScheduleError(f"century {k}: delta({2 * ell}) < delta_{k + 1}({2 * k})")


def make_schedule(c: int, ell: int, mode: str = "paper") -> Schedule:
    """
    Build and validate a schedule.

    ``paper`` uses ``d0 = 5c*3^(2l(l+1))`` and ``delta_k(i) = 5c*3^(2l(l+1-k)-i)``;
    ``minimal`` uses the least tables meeting the axioms and the century carry-over.

    Raises:
        ScheduleError: On bad parameters or an unknown mode.
    """
    if c < 2 or ell < 1:
        raise ScheduleError("schedules need c >= 2 and ell >= 1")
    if mode == "paper":
        d0 = 5 * c * 3 ** (2 * ell * (ell + 1))
        delta = tuple(
            tuple(5 * c * 3 ** (2 * ell * (ell + 1 - k) - i) for i in range(2 * ell + 1))
            for k in range(ell + 1)
        )
    elif mode == "minimal":
        delta = _minimal_tables(c, ell)
        d0 = max(max(row) for row in delta)
    else:
        raise ScheduleError(f"unknown schedule mode {mode!r}")
    alpha, beta = _budgets(c, ell, d0)
    schedule = Schedule(c, ell, d0, delta, alpha, beta, mode)
    validate_schedule(schedule)
    logger.debug(f"Built {mode} schedule for c={c}, ell={ell}: d0={d0}")
    return schedule


def custom_schedule(
    c: int,
    ell: int,
    delta: Sequence[Sequence[int]],
    d0: Optional[int] = None,
    budgets: Optional[Mapping[str, Sequence[int]]] = None,
) -> Schedule:
    """
    Schedule from explicit tables; ``d0`` defaults to the largest entry and the budgets
    follow the usual recurrences unless given.

    Raises:
        ScheduleError: If the tables violate the axioms.
    """
    rows = tuple(tuple(int(x) for x in row) for row in delta)
    if not rows or any(not row for row in rows):
        raise ScheduleError("separation table is empty")
    d0 = max(max(row) for row in rows) if d0 is None else d0
    if budgets is not None:
        alpha = tuple(int(x) for x in budgets["alpha"])
        beta = tuple(int(x) for x in budgets["beta"])
    else:
        alpha, beta = _budgets(c, ell, d0)
    schedule = Schedule(c, ell, d0, rows, alpha, beta, "custom")
    validate_schedule(schedule)
    return schedule


def claimed_bounds(schedule: Schedule, k: int) -> Dict[str, Tuple[int, int]]:
    """Closed-form bounds stated for century ``k``, logged next to concrete certificates."""
    span = schedule.ell - k
    alpha, beta = schedule.budget(k)
    d0 = schedule.d0
    return {
        "castle": schedule.castle_bound(k),
        "province boundary": ((14 * 3 ** max(span - 2, 0) - 3) * alpha, beta + span * d0),
        "cabal boundary": (56 * max(span - 1, 0) * 3 ** max(span - 2, 0) * alpha, beta + span * d0),
        "small framework": schedule.small_bound(k),
        "maximal communication": (span * 3 ** (span + 1) * alpha, beta + 2 * (span + 1) * d0),
    }
