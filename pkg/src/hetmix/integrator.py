"""Fixed-step RK4 integration, trajectories and terminal summaries."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .model import (
    N_COEFFS,
    N_STATE,
    STATE_FIELDS,
    DegenerateMixingError,
    ModelError,
    ModelParams,
    MixingMatrix,
    StateVector,
    kernel_coefficients,
    mixing_matrix,
    validate_params,
)

TRAJECTORY_HEADER = ("t",) + STATE_FIELDS


class ConfigError(ModelError):
    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NumericalBlowupError(ModelError):
    """The state left [-1e-6, 2]; ``time`` is when it was detected."""

    code = "numerical-blowup"

    def __init__(self, message, time=None):
        super().__init__(message)
        self.time = time


@dataclass(frozen=True)
class IntegrationConfig:
    dt: float = 0.05
    horizon: float = 500.0
    record_every: float = 1.0
    extinction_threshold: float = 1e-9

    def validate(self) -> IntegrationConfig:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ConfigError(f"dt must be positive, got {self.dt}", "dt")
        if not self.horizon >= self.dt:
            raise ConfigError(f"horizon must be >= dt, got {self.horizon}", "horizon")
        if not self.record_every >= self.dt:
            raise ConfigError(
                f"record_every must be >= dt, got {self.record_every}", "record_every"
            )
        if not self.extinction_threshold > 0:
            raise ConfigError(
                "extinction_threshold must be positive", "extinction_threshold"
            )
        return self

    def schedule(self) -> tuple[int, float, int]:
        """Return ``(n_full_steps, trailing_step, record_stride)``.

        The horizon is covered by whole steps of ``dt`` plus, if it is not a
        multiple of ``dt``, one shorter trailing step.  Samples are taken
        every ``record_stride`` steps, ``record_every`` rounded to a whole
        number of steps.
        """
        ratio = self.horizon / self.dt
        n = round(ratio)
        if abs(ratio - n) <= 1e-9 * max(1.0, ratio):
            tail = 0.0
        else:
            n = math.floor(ratio)
            tail = self.horizon - n * self.dt
        stride = max(1, round(self.record_every / self.dt))
        return n, tail, stride


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray  # shape (len(times), 10), columns in STATE_FIELDS order
    params: ModelParams
    config: IntegrationConfig

    def __len__(self):
        return len(self.times)

    def state(self, k: int) -> StateVector:
        return StateVector.from_array(self.states[k])

    @property
    def final(self) -> StateVector:
        return self.state(-1)

    def column(self, name: str) -> np.ndarray:
        return self.states[:, STATE_FIELDS.index(name)]

    def population(self) -> np.ndarray:
        """Compartment total at every sample (counters excluded)."""
        return self.states[:, :8].sum(axis=1)

    def to_csv(self, stream=None) -> str | None:
        """Write ``t,S1,...,C2`` rows; returns the text if no stream given."""
        own = stream is None
        if own:
            stream = io.StringIO()
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for t, row in zip(self.times, self.states):
            writer.writerow([fmt(t)] + [fmt(v) for v in row])
        if own:
            return stream.getvalue()
        return None


def fmt(x: float) -> str:
    return format(float(x), ".17g")


@dataclass(frozen=True)
class RunSummary:
    attack_rate: tuple[float, float]
    total_infected: float
    reported_cumulative: float
    deaths: float
    extinct: bool
    susceptible: tuple[float, float]


def initial_state(params: ModelParams) -> StateVector:
    """Seed a cohort of ``seed_fraction * N_i`` fresh infections per group.

    The cohort is split like any other incidence: a share ``alpha_i`` is
    detected (quarantined and counted as reported), the rest is infectious.
    This keeps ``D = pi * (N - S)`` and ``C_i = alpha_i (N_i - S_i)`` exact.
    """
    eps = params.seed_fraction
    seeds = [eps * n for n in params.n]
    a = params.alpha
    return StateVector(
        s=(params.n[0] - seeds[0], params.n[1] - seeds[1]),
        i=((1.0 - a[0]) * seeds[0], (1.0 - a[1]) * seeds[1]),
        q=(a[0] * seeds[0], a[1] * seeds[1]),
        r=0.0,
        d=0.0,
        c=(a[0] * seeds[0], a[1] * seeds[1]),
    )


def transmission_mixing(params: ModelParams) -> MixingMatrix:
    """Mixing for the integrator: with no transmission at all (both R0 zero)
    the shares are undefined but irrelevant, so fall back to group sizes."""
    try:
        return mixing_matrix(params)
    except DegenerateMixingError:
        n1, n2 = params.n
        h = params.h
        p = ((h + (1 - h) * n1, (1 - h) * n2), ((1 - h) * n1, h + (1 - h) * n2))
        return MixingMatrix(p_frac=(n1, n2), p=p, beta=(0.0, 0.0))


def rk4_step(state: StateVector, params: ModelParams, mix: MixingMatrix | None, dt: float,
             backend=None) -> StateVector:
    if not dt > 0:
        raise ConfigError(f"dt must be positive, got {dt}", "dt")
    kern = backend or _kernels.active
    mix = mix or transmission_mixing(params)
    y, ok = kern.step(state.to_array(), kernel_coefficients(params, mix), dt)
    if not ok:
        raise NumericalBlowupError(f"state out of range after a step of {dt}")
    return StateVector.from_array(y)


def simulate(params: ModelParams, config: IntegrationConfig | None = None,
             backend=None) -> Trajectory:
    validate_params(params)
    config = (config or IntegrationConfig()).validate()
    kern = backend or _kernels.active
    n, tail, stride = config.schedule()
    coeffs = kernel_coefficients(params, transmission_mixing(params))
    y0 = initial_state(params).to_array()
    samples, status = kern.integrate(y0, coeffs, config.dt, n, tail, stride)
    if status:
        t_fail = config.horizon if status > n else status * config.dt
        raise NumericalBlowupError(
            f"numerical blow-up at t={t_fail:g}; check parameter scaling", time=t_fail
        )
    times = np.arange(samples.shape[0], dtype=float) * (stride * config.dt)
    times[-1] = config.horizon if (tail > 0 or n % stride) else n * config.dt
    return Trajectory(times=times, states=samples, params=params, config=config)


def summarize_state(y, params: ModelParams, config: IntegrationConfig) -> RunSummary:
    y = np.asarray(y, dtype=float)
    n1, n2 = params.n
    s1, s2 = float(y[0]), float(y[1])
    inf1, inf2 = n1 - s1, n2 - s2
    prevalence = float(y[2] + y[3] + y[4] + y[5])
    return RunSummary(
        attack_rate=(inf1 / n1, inf2 / n2),
        total_infected=inf1 + inf2,
        reported_cumulative=float(y[8] + y[9]),
        deaths=float(y[7]),
        extinct=prevalence < config.extinction_threshold,
        susceptible=(s1, s2),
    )


def summarize(traj: Trajectory) -> RunSummary:
    if len(traj) == 0:
        raise ValueError("empty trajectory")
    return summarize_state(traj.states[-1], traj.params, traj.config)


def final_states(param_list, config: IntegrationConfig, threads: int = 1, backend=None):
    """Integrate many independent runs to the horizon.

    Returns ``(finals, status)``: an ``(m, 10)`` array of terminal states and
    the per-run blow-up step (0 = fine).  With the compiled backend, chunks
    run on ``threads`` worker threads with the GIL released.
    """
    config = config.validate()
    kern = backend or _kernels.active
    m = len(param_list)
    Y0 = np.empty((m, N_STATE))
    C = np.empty((m, N_COEFFS))
    for k, p in enumerate(param_list):
        validate_params(p)
        Y0[k] = initial_state(p).to_array()
        C[k] = kernel_coefficients(p, transmission_mixing(p))
    out = np.empty_like(Y0)
    status = np.zeros(m, dtype=np.int64)
    n, tail, _ = config.schedule()
    threads = max(1, min(threads, m))
    if threads == 1 or kern is _kernels.pure:
        kern.integrate_final_batch(Y0, C, config.dt, n, tail, out, status, 0, m)
    else:
        from concurrent.futures import ThreadPoolExecutor

        bounds = np.linspace(0, m, threads + 1).astype(int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [
                pool.submit(kern.integrate_final_batch, Y0, C, config.dt, n, tail,
                            out, status, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            for f in futures:
                f.result()
    return out, status
