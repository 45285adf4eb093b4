"""Parameter sweeps, curve-shape classification and the testing paradox."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .integrator import IntegrationConfig, RunSummary, fmt, final_states, summarize_state
from .model import ModelError, ModelParams, validate_params
from .oracles import FinalSizePrediction, NoConvergenceError, two_group_final_size

SWEEP_HEADER = (
    "axis1", "axis2", "attack1", "attack2", "total_infected", "reported", "deaths",
    "oracle_attack1", "oracle_attack2", "extinct",
)

BASE_CALIBRATION = ModelParams(gamma=1 / 7, pi=0.01, r0=(2.5, 2.5), alpha=(0.45, 0.27), h=0.0)
FIG6_R0 = (1.5, 2.0, 2.5, 3.0)
FIG7_R02 = (2.5, 3.0, 3.5, 4.0)
FIG8_R02 = (3.0, 3.5)
FIG8_H = (0.0, 0.25, 0.5, 0.75, 1.0)

SHAPE_TOL = 1e-9
AFFINE_REL_TOL = 1e-6


class SweepError(ModelError):
    """One or more grid points failed; ``failures`` holds ``(coords, error)``."""

    def __init__(self, failures):
        self.failures = list(failures)
        lines = [f"  {coords}: {err}" for coords, err in self.failures[:10]]
        more = len(self.failures) - 10
        if more > 0:
            lines.append(f"  ... and {more} more")
        super().__init__(f"{len(self.failures)} grid point(s) failed:\n" + "\n".join(lines))


def sweep_threads() -> int:
    """Worker threads from ``HETMIX_THREADS`` (unset: 1, 0: all cores)."""
    raw = os.environ.get("HETMIX_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError("HETMIX_THREADS must be >= 0")
    return n if n > 0 else (os.cpu_count() or 1)


def n2_grid(points: int = 100, margin: float = 1e-3) -> np.ndarray:
    """Evenly spaced skeptic shares, endpoints pulled in so both groups exist."""
    return np.linspace(margin, 1.0 - margin, points)


def apply_param(params: ModelParams, name: str, value: float) -> ModelParams:
    if name == "r0":
        return params.replace(r0=(float(value), float(value)))
    return params.replace(**{name: float(value)})


@dataclass(frozen=True)
class SweepSpec:
    base: ModelParams
    axis1: tuple[str, tuple[float, ...]]
    axis2: tuple[str, tuple[float, ...]] | None = None
    config: IntegrationConfig = field(default_factory=IntegrationConfig)

    def __post_init__(self):
        for axis in (self.axis1, self.axis2):
            if axis is None:
                continue
            name, grid = axis
            grid = np.asarray(grid, dtype=float)
            if grid.size == 0:
                raise ValueError(f"grid for {name!r} is empty")
            if grid.size > 1 and not (np.all(np.diff(grid) > 0) or np.all(np.diff(grid) < 0)):
                raise ValueError(f"grid for {name!r} must be strictly ordered")

    def points(self):
        """Grid coordinates in row-major order (axis2 varies fastest)."""
        g1 = [float(v) for v in self.axis1[1]]
        if self.axis2 is None:
            return [(v,) for v in g1]
        g2 = [float(v) for v in self.axis2[1]]
        return list(product(g1, g2))

    def params_at(self, coords) -> ModelParams:
        p = apply_param(self.base, self.axis1[0], coords[0])
        if self.axis2 is not None:
            p = apply_param(p, self.axis2[0], coords[1])
        return p


@dataclass(frozen=True)
class SweepRow:
    coords: tuple[float, ...]
    params: ModelParams
    summary: RunSummary
    prediction: FinalSizePrediction | None


@dataclass(frozen=True)
class SweepResult:
    spec: SweepSpec
    rows: tuple[SweepRow, ...]

    def __len__(self):
        return len(self.rows)

    def axis(self, k: int = 0) -> np.ndarray:
        return np.array([r.coords[k] for r in self.rows])

    def column(self, name: str) -> np.ndarray:
        """Outcome column; ``attack1``/``attack2``/``s1``/``s2`` split the pairs."""
        if name in ("attack1", "attack2"):
            k = int(name[-1]) - 1
            return np.array([r.summary.attack_rate[k] for r in self.rows])
        if name in ("s1", "s2"):
            k = int(name[-1]) - 1
            return np.array([r.summary.susceptible[k] for r in self.rows])
        if name in ("oracle_attack1", "oracle_attack2"):
            k = int(name[-1]) - 1
            return np.array(
                [r.prediction.attack_rate[k] if r.prediction else np.nan for r in self.rows]
            )
        if name == "reported":
            name = "reported_cumulative"
        return np.array([getattr(r.summary, name) for r in self.rows], dtype=float)

    def csv_rows(self, axis2_value=None):
        for r in self.rows:
            a1 = r.coords[0]
            if len(r.coords) > 1:
                a2 = fmt(r.coords[1])
            elif axis2_value is not None:
                a2 = fmt(axis2_value)
            else:
                a2 = ""
            s, pr = r.summary, r.prediction
            yield [
                fmt(a1), a2,
                fmt(s.attack_rate[0]), fmt(s.attack_rate[1]),
                fmt(s.total_infected), fmt(s.reported_cumulative), fmt(s.deaths),
                fmt(pr.attack_rate[0]) if pr else "nan",
                fmt(pr.attack_rate[1]) if pr else "nan",
                "1" if s.extinct else "0",
            ]

    def to_csv(self, stream=None):
        return write_sweep_csv([(None, self, None)], stream=stream)


def write_sweep_csv(blocks, shapes=(), stream=None):
    """Write ``(label, SweepResult, axis2_value)`` blocks under one header.

    Each labelled block is introduced by a ``# block: ...`` comment; shape
    reports follow as ``# shape: ...`` comments.
    """
    own = stream is None
    if own:
        stream = io.StringIO()
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SWEEP_HEADER)
    for label, result, axis2_value in blocks:
        if label:
            stream.write(f"# block: {label}\n")
        for row in result.csv_rows(axis2_value):
            writer.writerow(row)
    for report in shapes:
        stream.write(f"# shape: {report.describe()}\n")
    if own:
        return stream.getvalue()
    return None


def run_sweep(spec: SweepSpec, threads: int | None = None, oracle: bool = True,
              backend=None) -> SweepResult:
    coords = spec.points()
    failures = []
    params = []
    for c in coords:
        try:
            params.append(validate_params(spec.params_at(c)))
        except (ModelError, KeyError) as exc:
            failures.append((c, exc))
    if failures:
        raise SweepError(failures)

    if threads is None:
        threads = sweep_threads()
    finals, status = final_states(params, spec.config, threads=threads, backend=backend)
    n_steps = spec.config.schedule()[0]
    for c, st in zip(coords, status):
        if st:
            t = spec.config.horizon if st > n_steps else st * spec.config.dt
            failures.append((c, ModelError(f"numerical blow-up at t={t:g}")))
    if failures:
        raise SweepError(failures)

    rows = []
    for c, p, y in zip(coords, params, finals):
        prediction = None
        if oracle:
            try:
                prediction = two_group_final_size(p)
            except NoConvergenceError:
                prediction = None
        rows.append(SweepRow(c, p, summarize_state(y, p, spec.config), prediction))
    return SweepResult(spec=spec, rows=tuple(rows))


def _grid(n2):
    return tuple(float(v) for v in (n2_grid() if n2 is None else n2))


def figure6_sweep(r0_values=FIG6_R0, n2=None, config=None, threads=None, base=BASE_CALIBRATION):
    """Homogeneous mixing: outcomes against N2, one curve per common R0."""
    config = config or IntegrationConfig()
    grid = _grid(n2)
    out = {}
    for r0 in r0_values:
        b = base.replace(r0=(float(r0), float(r0)), h=0.0)
        out[float(r0)] = run_sweep(SweepSpec(b, ("n2", grid), None, config), threads)
    return out


def figure7_sweep(r02_values=FIG7_R02, n2=None, config=None, threads=None,
                  base=BASE_CALIBRATION, r01=2.5):
    """Proportionate mixing with more active skeptics, one curve per R02."""
    config = config or IntegrationConfig()
    grid = _grid(n2)
    out = {}
    for r02 in r02_values:
        if r02 < r01:
            raise ValueError(f"R02={r02} must be >= R01={r01}")
        b = base.replace(r0=(float(r01), float(r02)), h=0.0)
        out[float(r02)] = run_sweep(SweepSpec(b, ("n2", grid), None, config), threads)
    return out


def figure8_sweep(h_values=FIG8_H, n2=None, r02_values=FIG8_R02, config=None,
                  threads=None, base=BASE_CALIBRATION, r01=2.5):
    """Homophilic mixing: one curve per ``(R02, h)``, keyed by that pair."""
    config = config or IntegrationConfig()
    grid = _grid(n2)
    out = {}
    for r02 in r02_values:
        if not r02 > r01:
            raise ValueError(f"R02={r02} must exceed R01={r01}")
        for h in h_values:
            b = base.replace(r0=(float(r01), float(r02)), h=float(h))
            out[(float(r02), float(h))] = run_sweep(
                SweepSpec(b, ("n2", grid), None, config), threads
            )
    return out


@dataclass(frozen=True)
class ShapeReport:
    name: str
    classification: str  # increasing | decreasing | non-monotone | affine (constant)
    is_affine: bool
    max_second_diff: float
    curve_range: float
    extremum_index: int | None = None
    extremum_kind: str | None = None
    extremum_x: float | None = None

    def describe(self) -> str:
        parts = [
            self.name or "curve",
            f"classification={self.classification}",
            f"affine={'yes' if self.is_affine else 'no'}",
            f"max_second_diff={self.max_second_diff:.6g}",
            f"range={self.curve_range:.6g}",
        ]
        if self.extremum_index is not None:
            parts.append(f"interior_{self.extremum_kind}_at={self.extremum_x:.6g}")
        return ", ".join(parts)


def second_differences(xs, ys) -> np.ndarray:
    """Second differences, generalized so affine data gives exactly zero
    curvature on non-uniform grids (equal to the plain stencil when uniform)."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    hl = xs[1:-1] - xs[:-2]
    hr = xs[2:] - xs[1:-1]
    return (ys[2:] - ys[1:-1]) - (hr / hl) * (ys[1:-1] - ys[:-2])


def classify_shape(xs, ys, name: str = "", tol: float = SHAPE_TOL,
                   affine_rel_tol: float = AFFINE_REL_TOL) -> ShapeReport:
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 3 or xs.size != ys.size:
        raise ValueError("need at least 3 points with matching xs and ys")
    if not np.all(np.diff(xs) > 0):
        raise ValueError("xs must be strictly increasing")
    d = np.diff(ys)
    up = bool(np.all(d >= -tol))
    down = bool(np.all(d <= tol))
    if up and down:
        label = "affine"
    elif up:
        label = "increasing"
    elif down:
        label = "decreasing"
    else:
        label = "non-monotone"
    dd = np.abs(second_differences(xs, ys))
    max_dd = float(dd.max())
    span = float(ys.max() - ys.min())
    affine = max_dd < affine_rel_tol * span if span > 0 else max_dd <= tol
    ext = kind = ext_x = None
    if label == "non-monotone":
        kmax, kmin = int(np.argmax(ys)), int(np.argmin(ys))
        if 0 < kmax < ys.size - 1:
            ext, kind = kmax, "maximum"
        elif 0 < kmin < ys.size - 1:
            ext, kind = kmin, "minimum"
        if ext is not None:
            ext_x = float(xs[ext])
    return ShapeReport(name, label, affine, max_dd, span, ext, kind, ext_x)


def curve_shapes(results, prefix: str):
    """Shape reports for the deaths and reported curves of each sweep."""
    reports = []
    for key, res in results.items():
        xs = res.axis(0)
        label = ",".join(f"{v:g}" for v in key) if isinstance(key, tuple) else f"{key:g}"
        for col in ("deaths", "reported"):
            reports.append(classify_shape(xs, res.column(col), f"{prefix}={label} {col}"))
    return reports


@dataclass(frozen=True)
class ParadoxSummary:
    r0: tuple[float, float]
    n2: np.ndarray
    deaths: np.ndarray
    reported: np.ndarray
    slope_deaths: float
    slope_reported: float

    @staticmethod
    def _unit_slope(xs, ys):
        span = ys.max() - ys.min()
        if span == 0:
            return 0.0
        return float(np.polyfit(xs, (ys - ys.min()) / span, 1)[0])

    @property
    def normalized_slopes(self) -> tuple[float, float]:
        """OLS slopes after scaling each curve to unit range."""
        return (
            self._unit_slope(self.n2, self.deaths),
            self._unit_slope(self.n2, self.reported),
        )

    @property
    def shows_paradox(self) -> bool:
        """Deaths rise with N2 while reported cases stay (relatively) flat."""
        nd, nr = self.normalized_slopes
        return self.slope_deaths > 0 and nr <= 0.1 * nd


def ols_slope(xs, ys) -> float:
    return float(np.polyfit(np.asarray(xs, float), np.asarray(ys, float), 1)[0])


def paradox_summary(n2=None, base: ModelParams = BASE_CALIBRATION, window=(0.05, 0.35),
                    points: int = 31, config=None, threads=None) -> ParadoxSummary:
    config = config or IntegrationConfig()
    grid = np.linspace(window[0], window[1], points) if n2 is None else np.asarray(n2, float)
    res = run_sweep(SweepSpec(base, ("n2", tuple(grid)), None, config), threads, oracle=False)
    xs = res.axis(0)
    deaths = res.column("deaths")
    reported = res.column("reported")
    return ParadoxSummary(
        r0=base.r0, n2=xs, deaths=deaths, reported=reported,
        slope_deaths=ols_slope(xs, deaths), slope_reported=ols_slope(xs, reported),
    )


def find_paradox(r0_values=(2.0, 2.5, 3.0), base: ModelParams = BASE_CALIBRATION, **kwargs):
    """Paradox summaries for each common R0 under homogeneous mixing."""
    return {
        float(r0): paradox_summary(base=base.replace(r0=(float(r0), float(r0))), **kwargs)
        for r0 in r0_values
    }
