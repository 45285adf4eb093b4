"""Two-group SIRD model with quarantine and preferred mixing.

Group 1 is the compliant majority, group 2 the skeptics.  All pairs are
ordered ``(group 1, group 2)`` and indexed from zero in code.

The state layout used everywhere (arrays, kernels, CSV files) is::

    S1, S2, I1, I2, Q1, Q2, R, D, C1, C2

where ``C_i`` is the running total of detected (reported) infections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

STATE_FIELDS = ("S1", "S2", "I1", "I2", "Q1", "Q2", "R", "D", "C1", "C2")
N_STATE = len(STATE_FIELDS)
# the eight epidemiological compartments; C1/C2 are counters, not population
N_COMPARTMENTS = 8

SIZE_TOL = 1e-9


class ModelError(ValueError):
    """Base class for all domain errors raised by hetmix."""


class ParameterError(ModelError):
    """A model parameter violates its invariant.

    ``field`` names the offending parameter so callers (the CLI in
    particular) can point at the right config key.
    """

    code = "invalid-parameter"

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class NonpositiveGammaError(ParameterError):
    code = "nonpositive-gamma"


class PiOutOfRangeError(ParameterError):
    code = "pi-out-of-range"


class HomophilyOutOfRangeError(ParameterError):
    code = "h-out-of-range"


class NegativeR0Error(ParameterError):
    code = "negative-r0"


class AlphaOutOfRangeError(ParameterError):
    code = "alpha-out-of-range"


class AlphaBelowPiError(ParameterError):
    code = "alpha-below-pi"


class SizesNotNormalizedError(ParameterError):
    code = "sizes-not-normalized"


class SeedOutOfRangeError(ParameterError):
    code = "seed-out-of-range"


class DegenerateMixingError(ModelError):
    code = "degenerate-mixing"


@dataclass(frozen=True)
class ModelParams:
    gamma: float = 1 / 7
    pi: float = 0.01
    r0: tuple[float, float] = (2.5, 2.5)
    alpha: tuple[float, float] = (0.45, 0.27)
    h: float = 0.0
    n: tuple[float, float] = (0.5, 0.5)
    seed_fraction: float = 1e-4

    def replace(self, **changes) -> ModelParams:
        """Return a copy with ``changes`` applied.

        Besides the dataclass fields, the scalar aliases ``r01``, ``r02``,
        ``alpha1``, ``alpha2``, ``n1`` and ``n2`` are accepted.  Setting only
        one of ``n1``/``n2`` sets the other to its complement so the
        population stays normalized.
        """
        values = {f.name: getattr(self, f.name) for f in fields(self)}
        r0 = list(values["r0"])
        alpha = list(values["alpha"])
        n = list(values["n"])
        for key, value in changes.items():
            if key == "r01":
                r0[0] = value
            elif key == "r02":
                r0[1] = value
            elif key == "alpha1":
                alpha[0] = value
            elif key == "alpha2":
                alpha[1] = value
            elif key == "n1":
                n = [value, 1.0 - value] if "n2" not in changes else [value, n[1]]
            elif key == "n2":
                n = [1.0 - value, value] if "n1" not in changes else [n[0], value]
            elif key in values:
                values[key] = value
            else:
                raise KeyError(f"unknown model parameter {key!r}")
        if "r0" not in changes:
            values["r0"] = (float(r0[0]), float(r0[1]))
        if "alpha" not in changes:
            values["alpha"] = (float(alpha[0]), float(alpha[1]))
        if "n" not in changes:
            values["n"] = (float(n[0]), float(n[1]))
        return ModelParams(**values)


def validate_params(params: ModelParams) -> ModelParams:
    """Check every parameter invariant and return ``params`` unchanged.

    Raises the specific :class:`ParameterError` subclass for the first
    violated invariant.
    """
    p = params
    if not (p.gamma > 0 and math.isfinite(p.gamma)):
        raise NonpositiveGammaError(f"gamma must be positive, got {p.gamma}", "gamma")
    if not 0.0 <= p.pi <= 1.0:
        raise PiOutOfRangeError(f"pi must lie in [0, 1], got {p.pi}", "pi")
    if not 0.0 <= p.h <= 1.0:
        raise HomophilyOutOfRangeError(f"h must lie in [0, 1], got {p.h}", "h")
    for k in range(2):
        if not (p.r0[k] >= 0 and math.isfinite(p.r0[k])):
            raise NegativeR0Error(f"r0{k + 1} must be >= 0, got {p.r0[k]}", f"r0{k + 1}")
    for k in range(2):
        if not 0.0 <= p.alpha[k] <= 1.0:
            raise AlphaOutOfRangeError(
                f"alpha{k + 1} must lie in [0, 1], got {p.alpha[k]}", f"alpha{k + 1}"
            )
        if p.alpha[k] < p.pi:
            raise AlphaBelowPiError(
                f"alpha{k + 1}={p.alpha[k]} is below pi={p.pi}; "
                "every fatal case is assumed to be detected",
                f"alpha{k + 1}",
            )
    n1, n2 = p.n
    if not (n1 > 0 and n2 > 0) or abs(n1 + n2 - 1.0) > SIZE_TOL:
        raise SizesNotNormalizedError(
            f"group sizes must be positive and sum to 1, got ({n1}, {n2})", "n2"
        )
    if not 0.0 < p.seed_fraction < min(n1, n2):
        raise SeedOutOfRangeError(
            f"seed_fraction must lie in (0, {min(n1, n2)}), got {p.seed_fraction}",
            "seed_fraction",
        )
    return params


@dataclass(frozen=True)
class MixingMatrix:
    p_frac: tuple[float, float]
    p: tuple[tuple[float, float], tuple[float, float]]
    beta: tuple[float, float]

    def as_array(self) -> np.ndarray:
        return np.array(self.p, dtype=float)


def mixing_fractions(params: ModelParams) -> tuple[float, float]:
    """Activity-weighted shares ``p_i = R0_i N_i / sum_j R0_j N_j``.

    The common ``(1 - h) * gamma`` factor of the textbook form cancels, which
    keeps the fractions defined at ``h = 1``.
    """
    w1 = params.r0[0] * params.n[0]
    w2 = params.r0[1] * params.n[1]
    total = w1 + w2
    if total <= 0.0:
        raise DegenerateMixingError("R01*N1 + R02*N2 is zero; mixing shares undefined")
    p1 = w1 / total
    return p1, 1.0 - p1


def mixing_matrix(params: ModelParams) -> MixingMatrix:
    h = params.h
    p1, p2 = mixing_fractions(params)
    p = (
        (h + (1.0 - h) * p1, (1.0 - h) * p2),
        ((1.0 - h) * p1, h + (1.0 - h) * p2),
    )
    beta = (params.gamma * params.r0[0], params.gamma * params.r0[1])
    return MixingMatrix(p_frac=(p1, p2), p=p, beta=beta)


def mortality_given_detection(params: ModelParams) -> tuple[float, float]:
    """Death probability of a quarantined case, ``pi / alpha_i``."""
    out = []
    for a in params.alpha:
        if params.pi == 0.0:
            out.append(0.0)
        else:
            out.append(params.pi / a)
    return out[0], out[1]


@dataclass(frozen=True)
class StateVector:
    s: tuple[float, float]
    i: tuple[float, float]
    q: tuple[float, float]
    r: float
    d: float
    c: tuple[float, float]

    def to_array(self) -> np.ndarray:
        return np.array(
            [*self.s, *self.i, *self.q, self.r, self.d, *self.c], dtype=float
        )

    @classmethod
    def from_array(cls, y) -> StateVector:
        y = [float(v) for v in y]
        if len(y) != N_STATE:
            raise ValueError(f"expected {N_STATE} state components, got {len(y)}")
        return cls(s=(y[0], y[1]), i=(y[2], y[3]), q=(y[4], y[5]), r=y[6], d=y[7], c=(y[8], y[9]))

    def population(self) -> float:
        """Sum of the eight epidemiological compartments."""
        return math.fsum((*self.s, *self.i, *self.q, self.r, self.d))


class Derivatives(StateVector):
    """Time derivatives, laid out exactly like :class:`StateVector`."""


def force_of_infection(state: StateVector, mix: MixingMatrix, params: ModelParams):
    x1 = state.i[0] / params.n[0]
    x2 = state.i[1] / params.n[1]
    (p11, p12), (p21, p22) = mix.p
    return (
        mix.beta[0] * (p11 * x1 + p12 * x2),
        mix.beta[1] * (p21 * x1 + p22 * x2),
    )


def derivatives(state: StateVector, params: ModelParams, mix: MixingMatrix) -> Derivatives:
    g = params.gamma
    a1, a2 = params.alpha
    mu1, mu2 = mortality_given_detection(params)
    f1, f2 = force_of_infection(state, mix, params)
    inc1 = state.s[0] * f1
    inc2 = state.s[1] * f2
    i1, i2 = state.i
    q1, q2 = state.q
    return Derivatives(
        s=(-inc1, -inc2),
        i=((1.0 - a1) * inc1 - g * i1, (1.0 - a2) * inc2 - g * i2),
        q=(a1 * inc1 - g * q1, a2 * inc2 - g * q2),
        r=g * (i1 + i2) + g * ((1.0 - mu1) * q1 + (1.0 - mu2) * q2),
        d=g * (mu1 * q1 + mu2 * q2),
        c=(a1 * inc1, a2 * inc2),
    )


def kernel_coefficients(params: ModelParams, mix: MixingMatrix | None = None) -> np.ndarray:
    """Pack everything the compiled RHS needs into one flat float64 vector.

    Order: beta1, beta2, p11, p12, p21, p22, n1, n2, alpha1, alpha2,
    1-alpha1, 1-alpha2, gamma, mu1, mu2, 1-mu1, 1-mu2.
    """
    if mix is None:
        mix = mixing_matrix(params)
    mu1, mu2 = mortality_given_detection(params)
    (p11, p12), (p21, p22) = mix.p
    a1, a2 = params.alpha
    return np.array(
        [
            mix.beta[0], mix.beta[1],
            p11, p12, p21, p22,
            params.n[0], params.n[1],
            a1, a2, 1.0 - a1, 1.0 - a2,
            params.gamma,
            mu1, mu2, 1.0 - mu1, 1.0 - mu2,
        ],
        dtype=np.float64,
    )


N_COEFFS = 17
