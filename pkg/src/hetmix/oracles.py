"""Integration-free final-size predictions.

Integrating the susceptible equation over the whole epidemic gives

    S_i(inf) = S_i(0) * exp(-R0_i * sum_j p_ij * (I_j(0) + (1 - alpha_j) * (S_j(0) - S_j(inf))) / N_j)

because only undetected infectives transmit and each spends ``1/gamma`` in
``I``.  With ``seeded=True`` the actual seeded initial state is used, which
makes the prediction exact for the simulated system at ``t = inf``; with
``seeded=False`` the seed is taken to zero (``S(0) = N``, ``I(0) = 0``) and
the epidemic (largest) root is selected.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .integrator import initial_state
from .model import ModelError, ModelParams, mixing_matrix

RESIDUAL_TOL = 1e-12
MAX_ITER = 1_000_000
DAMPING = 0.5


class NoConvergenceError(ModelError):
    code = "no-convergence"


class PreconditionError(ModelError):
    code = "precondition"


@dataclass(frozen=True)
class FinalSizePrediction:
    s_inf: tuple[float, float]
    n: tuple[float, float]
    total_infected: float
    reported_cumulative: float
    deaths: float
    solver_residual: float

    @property
    def attack_rate(self) -> tuple[float, float]:
        return tuple(
            (n - s) / n if n > 0 else 0.0 for n, s in zip(self.n, self.s_inf)
        )


def _prediction(params: ModelParams, s_inf, residual) -> FinalSizePrediction:
    infected = [n - s for n, s in zip(params.n, s_inf)]
    total = infected[0] + infected[1]
    return FinalSizePrediction(
        s_inf=(float(s_inf[0]), float(s_inf[1])),
        n=tuple(params.n),
        total_infected=total,
        reported_cumulative=params.alpha[0] * infected[0] + params.alpha[1] * infected[1],
        deaths=params.pi * total,
        solver_residual=float(residual),
    )


def _bisect_largest_root(f, hi):
    """Largest root of a concave ``f`` on ``[0, hi]`` with ``f(hi) < 0``.

    Returns 0 when ``f`` is non-positive just above zero (no epidemic
    branch).  Bisects until the bracket cannot shrink further.
    """
    tiny = 1e-300
    if f(tiny) <= 0.0:
        return 0.0
    lo = tiny
    for _ in range(2000):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def single_group_final_size(r0: float, alpha: float) -> float:
    """Attack rate ``z`` solving ``z = 1 - exp(-r0 (1 - alpha) z)``.

    Only the undetected share ``1 - alpha`` transmits, so the effective
    reproduction number is ``r0 * (1 - alpha)``.  Returns 0 when that is at
    most 1.
    """
    if r0 < 0 or not 0.0 <= alpha <= 1.0:
        raise ValueError(f"need r0 >= 0 and alpha in [0, 1], got {r0}, {alpha}")
    r_eff = r0 * (1.0 - alpha)
    if r_eff <= 1.0:
        return 0.0
    return _bisect_largest_root(lambda z: -math.expm1(-r_eff * z) - z, 1.0)


def _start(params: ModelParams, seeded: bool):
    if seeded:
        y0 = initial_state(params)
        return y0.s, y0.i
    return tuple(params.n), (0.0, 0.0)


def homogeneous_final_size(params: ModelParams, seeded: bool = True) -> FinalSizePrediction:
    """Final size under proportionate mixing with a common R0.

    Both groups lose the same fraction ``1 - exp(-L)`` of their susceptibles,
    where ``L = A + B (1 - exp(-L))``.
    """
    if params.h != 0.0 or params.r0[0] != params.r0[1]:
        raise PreconditionError("homogeneous final size needs h = 0 and R01 = R02")
    r0 = params.r0[0]
    n_tot = params.n[0] + params.n[1]
    s0, i0 = _start(params, seeded)
    a = r0 * (i0[0] + i0[1]) / n_tot
    b = r0 * ((1.0 - params.alpha[0]) * s0[0] + (1.0 - params.alpha[1]) * s0[1]) / n_tot

    def f(lam):
        return a - b * math.expm1(-lam) - lam

    lam = _bisect_largest_root(f, a + b + 1.0)
    s_inf = (s0[0] * math.exp(-lam), s0[1] * math.exp(-lam))
    return _prediction(params, s_inf, abs(f(lam)))


def two_group_final_size(params: ModelParams, seeded: bool = True) -> FinalSizePrediction:
    """Coupled final-size fixed point, solved by damped iteration from S = 0.

    The map is increasing in S, so iterating upward from zero converges
    monotonically to the smallest fixed point, which is the epidemic branch
    (and the only one when seeded).
    """
    mix = mixing_matrix(params)
    (p11, p12), (p21, p22) = mix.p
    r01, r02 = params.r0
    n1, n2 = params.n
    a1, a2 = params.alpha
    (s01, s02), (i01, i02) = _start(params, seeded)
    # exponent_i = c_i - d_i1 * S_1 - d_i2 * S_2
    u1 = (i01 + (1.0 - a1) * s01) / n1
    u2 = (i02 + (1.0 - a2) * s02) / n2
    w1 = (1.0 - a1) / n1
    w2 = (1.0 - a2) / n2
    c1 = r01 * (p11 * u1 + p12 * u2)
    c2 = r02 * (p21 * u1 + p22 * u2)
    d11, d12 = r01 * p11 * w1, r01 * p12 * w2
    d21, d22 = r02 * p21 * w1, r02 * p22 * w2
    exp = math.exp

    s1 = s2 = 0.0
    res = math.inf
    for _ in range(MAX_ITER):
        g1 = s01 * exp(-(c1 - d11 * s1 - d12 * s2))
        g2 = s02 * exp(-(c2 - d21 * s1 - d22 * s2))
        res = max(abs(g1 - s1), abs(g2 - s2))
        if res < 1e-13:
            break
        s1 += DAMPING * (g1 - s1)
        s2 += DAMPING * (g2 - s2)
    else:
        raise NoConvergenceError(
            f"final-size iteration did not converge (residual {res:.3g})"
        )
    return _prediction(params, (s1, s2), res)


def next_generation_matrix(params: ModelParams) -> np.ndarray:
    """``K[i, j]``: infections in group i caused by one new infection in j."""
    mix = mixing_matrix(params)
    p = mix.as_array()
    n = np.asarray(params.n, dtype=float)
    undetected = 1.0 - np.asarray(params.alpha, dtype=float)
    r0 = np.asarray(params.r0, dtype=float)
    return r0[:, None] * p * undetected[None, :] * (n[:, None] / n[None, :])


def reproduction_number(params: ModelParams) -> float:
    """Spectral radius of the next-generation matrix."""
    return float(max(abs(np.linalg.eigvals(next_generation_matrix(params)))))
