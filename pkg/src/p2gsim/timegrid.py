"""Simulation time grid and heating-season calendar.

The simulator runs on a fixed-step grid (default 15 min) over a fixed
365-day year: leap days are ignored, so a full year is always 35,040
quarter-hour steps and seasonal aggregates are comparable between runs
regardless of the nominal start year.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

MINUTES_PER_DAY = 1440
DAYS_PER_YEAR = 365

_MONTH_DAYS = (31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31)
# day-of-year (0-based) of the first day of each month in the fixed calendar
_MONTH_OFFSETS = tuple(int(x) for x in np.concatenate(([0], np.cumsum(_MONTH_DAYS)))[:12])


class Season(str, Enum):
    HEATING = "heating"
    NON_HEATING = "non_heating"


def day_of_year(month: int, day: int) -> int:
    """0-based day-of-year of a (month, day) pair in the fixed 365-day calendar."""
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range: {month}")
    if not 1 <= day <= _MONTH_DAYS[month - 1]:
        raise ValueError(f"day out of range for month {month}: {day}")
    return _MONTH_OFFSETS[month - 1] + day - 1


def month_day(doy: int) -> tuple[int, int]:
    """Inverse of :func:`day_of_year`."""
    if not 0 <= doy < DAYS_PER_YEAR:
        raise ValueError(f"day-of-year out of range: {doy}")
    for m, offset in enumerate(_MONTH_OFFSETS):
        if doy < offset:
            return m, doy - _MONTH_OFFSETS[m - 1] + 1
    return 12, doy - _MONTH_OFFSETS[11] + 1


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid over the fixed-length simulation year.

    ``start_month``/``start_day`` anchor step 0 at midnight of a calendar
    day; the grid may wrap past December 31 into the next (identical)
    year, which matters only for season lookups.
    """

    step_minutes: int = 15
    step_count: int = 35040
    start_month: int = 1
    start_day: int = 1
    start_year: int = 2030  # cosmetic, used for report labelling only

    def __post_init__(self):
        if self.step_minutes <= 0 or MINUTES_PER_DAY % self.step_minutes != 0:
            raise ValueError(f"step_minutes must divide a day: {self.step_minutes}")
        if self.step_count <= 0:
            raise ValueError(f"step_count must be positive: {self.step_count}")
        day_of_year(self.start_month, self.start_day)  # validates the anchor

    @property
    def dt_hours(self) -> float:
        return self.step_minutes / 60.0

    @property
    def dt_seconds(self) -> float:
        return self.step_minutes * 60.0

    @property
    def steps_per_day(self) -> int:
        return MINUTES_PER_DAY // self.step_minutes

    def day_index(self, t: int) -> int:
        """0-based day-of-year of step ``t`` (wraps after day 364)."""
        self._check_step(t)
        start = day_of_year(self.start_month, self.start_day)
        return (start + t // self.steps_per_day) % DAYS_PER_YEAR

    def minute_of_day(self, t: int) -> int:
        self._check_step(t)
        return (t % self.steps_per_day) * self.step_minutes

    def day_indices(self) -> np.ndarray:
        """Vectorized :meth:`day_index` over the whole grid."""
        start = day_of_year(self.start_month, self.start_day)
        return (start + np.arange(self.step_count) // self.steps_per_day) % DAYS_PER_YEAR

    def hours_of_day(self) -> np.ndarray:
        """Fractional hour-of-day of every step (0.0, 0.25, ... for 15-min steps)."""
        return (np.arange(self.step_count) % self.steps_per_day) * (self.step_minutes / 60.0)

    def _check_step(self, t: int):
        if not 0 <= t < self.step_count:
            raise IndexError(f"timestep {t} outside grid of {self.step_count} steps")


def _default_heating_intervals() -> tuple:
    return ((1, 1), (4, 15)), ((10, 15), (12, 31))


@dataclass(frozen=True)
class SeasonCalendar:
    """Partition of the fixed year into heating and non-heating days.

    ``heating_intervals`` is a tuple of ((month, day), (month, day)) pairs
    with inclusive boundary days.  The default heating season runs
    January 1 - April 15 and October 15 - December 31.
    """

    heating_intervals: tuple = field(default_factory=_default_heating_intervals)

    def __post_init__(self):
        mask = np.zeros(DAYS_PER_YEAR, dtype=bool)
        for (m0, d0), (m1, d1) in self.heating_intervals:
            a, b = day_of_year(m0, d0), day_of_year(m1, d1)
            if b < a:
                raise ValueError(f"heating interval ends before it starts: {(m0, d0)}..{(m1, d1)}")
            if mask[a : b + 1].any():
                raise ValueError("heating intervals overlap")
            mask[a : b + 1] = True
        mask.setflags(write=False)
        object.__setattr__(self, "_heating_days", mask)

    def is_heating_day(self, doy: int) -> bool:
        if not 0 <= doy < DAYS_PER_YEAR:
            raise ValueError(f"day-of-year out of range: {doy}")
        return bool(self._heating_days[doy])

    @property
    def heating_day_count(self) -> int:
        return int(self._heating_days.sum())


def season_of(t: int, grid: TimeGrid, calendar: SeasonCalendar) -> Season:
    """Season of timestep ``t``."""
    doy = grid.day_index(t)
    return Season.HEATING if calendar.is_heating_day(doy) else Season.NON_HEATING


def season_mask(grid: TimeGrid, calendar: SeasonCalendar) -> np.ndarray:
    """Boolean array over the grid, True where the step falls on a heating day."""
    return calendar._heating_days[grid.day_indices()]
