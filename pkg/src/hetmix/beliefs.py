"""District-level belief imputation from group-wise survey means.

A district's belief in week ``t`` is the population-share weighted mean of
the demographic groups' survey means, taken from the survey wave whose
start date is nearest that week's Sunday.

Input files:

* ``group_means.csv`` with columns ``wave_id,wave_start,dimension,group,mean``
* ``district_shares.csv`` with columns ``district,group,share``

Output ``imputed.csv`` has columns ``district,dimension,week_sunday,value``.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass

SHARE_TOL = 1e-9

IMPUTED_HEADER = ("district", "dimension", "week_sunday", "value")


class BeliefDataError(ValueError):
    pass


class MissingGroupMeanError(BeliefDataError):
    code = "missing-group-mean"


class IncompleteTableError(BeliefDataError):
    code = "incomplete-table"


@dataclass(frozen=True)
class Wave:
    wave_id: str
    start: dt.date


@dataclass
class GroupBeliefTable:
    waves: list[Wave]
    groups: list[str]
    dimensions: list[str]
    # (dimension, group, wave_id) -> mean in [0, 1]; absent keys are missing cells
    values: dict

    def __post_init__(self):
        starts = [w.start for w in self.waves]
        if not starts:
            raise BeliefDataError("no survey waves")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise BeliefDataError("wave start dates must be strictly increasing")
        for key, v in self.values.items():
            if not 0.0 <= v <= 1.0:
                raise BeliefDataError(f"mean {v} for {key} outside [0, 1]")

    def week_means(self, dimension: str, wave_id: str) -> dict:
        return {
            g: self.values[(dimension, g, wave_id)]
            for g in self.groups
            if (dimension, g, wave_id) in self.values
        }

    @classmethod
    def read_csv(cls, path) -> GroupBeliefTable:
        waves = {}
        groups, dims = [], []
        values = {}
        with open(path, newline="", encoding="utf-8") as fh:
            for row in csv.DictReader(fh):
                wid = row["wave_id"].strip()
                start = dt.date.fromisoformat(row["wave_start"].strip())
                if waves.setdefault(wid, start) != start:
                    raise BeliefDataError(f"wave {wid} has conflicting start dates")
                d, g = row["dimension"].strip(), row["group"].strip()
                if g not in groups:
                    groups.append(g)
                if d not in dims:
                    dims.append(d)
                cell = row["mean"].strip()
                if cell and cell.lower() not in ("na", "nan"):
                    values[(d, g, wid)] = float(cell)
        ordered = sorted((Wave(w, s) for w, s in waves.items()), key=lambda w: w.start)
        return cls(waves=ordered, groups=groups, dimensions=dims, values=values)


@dataclass(frozen=True)
class DistrictShares:
    district: str
    shares: dict  # group -> population share

    def __post_init__(self):
        if any(v < 0 for v in self.shares.values()):
            raise BeliefDataError(f"negative share in district {self.district}")
        total = math.fsum(self.shares.values())
        if abs(total - 1.0) > SHARE_TOL:
            raise BeliefDataError(
                f"shares of district {self.district} sum to {total!r}, not 1"
            )


def read_district_shares(path) -> list[DistrictShares]:
    by_district = defaultdict(dict)
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            by_district[row["district"].strip()][row["group"].strip()] = float(row["share"])
    return [DistrictShares(d, s) for d, s in by_district.items()]


@dataclass(frozen=True)
class ImputedBeliefSeries:
    district: str
    dimension: str
    weeks: tuple
    values: tuple


def impute_district(shares: DistrictShares, week_means: dict) -> float:
    """Share-weighted mean of the group means for one district and week."""
    terms = []
    for group, share in shares.shares.items():
        if group not in week_means:
            if share == 0:
                continue
            raise MissingGroupMeanError(
                f"no mean for group {group!r} (district {shares.district})"
            )
        terms.append(share * week_means[group])
    return math.fsum(terms)


def wave_for_week(week_sunday: dt.date, wave_starts) -> int:
    """Index of the wave whose beliefs apply to the week ending ``week_sunday``.

    Between two waves the earlier one is used only if the Sunday is strictly
    closer to its start; a tie goes to the later wave.
    """
    starts = list(wave_starts)
    if not starts:
        raise ValueError("no wave start dates")
    if week_sunday <= starts[0]:
        return 0
    for k in range(len(starts) - 1):
        a, b = starts[k], starts[k + 1]
        if a <= week_sunday < b:
            return k if (week_sunday - a) < (b - week_sunday) else k + 1
    return len(starts) - 1


def sundays(start: dt.date, end: dt.date) -> list[dt.date]:
    """All Sundays in ``[start, end]``."""
    first = start + dt.timedelta(days=(6 - start.weekday()) % 7)
    out = []
    day = first
    while day <= end:
        out.append(day)
        day += dt.timedelta(days=7)
    return out


def build_series(table: GroupBeliefTable, shares: DistrictShares, weeks,
                 dimensions=None) -> list[ImputedBeliefSeries]:
    starts = [w.start for w in table.waves]
    dims = list(dimensions or table.dimensions)
    waves_used = [table.waves[wave_for_week(w, starts)] for w in weeks]
    out = []
    for d in dims:
        vals = []
        for wave in waves_used:
            means = table.week_means(d, wave.wave_id)
            missing = [g for g, s in shares.shares.items() if s != 0 and g not in means]
            if missing:
                raise IncompleteTableError(
                    f"dimension {d!r}, wave {wave.wave_id!r}: no mean for {missing}"
                )
            vals.append(impute_district(shares, means))
        out.append(ImputedBeliefSeries(shares.district, d, tuple(weeks), tuple(vals)))
    return out


def write_imputed_csv(series, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(IMPUTED_HEADER)
    for s in series:
        for week, value in zip(s.weeks, s.values):
            writer.writerow([s.district, s.dimension, week.isoformat(), format(value, ".17g")])
