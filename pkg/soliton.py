"""
The NLS soliton on the real line and its truncated pieces on a half-line.

For 2 < p < 6 the unit-mass soliton is phi_1(x) = A sech(B x)^r with
r = 2/(p-2), A^(p-2) = p lambda / 2, B = (p-2) sqrt(lambda) / 2, and lambda
fixed by the unit mass. Every other mass follows by scaling:
phi_mu(x) = mu^alpha phi_1(mu^beta x), alpha = 2/(6-p), beta = (p-2)/(6-p).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from algorithms.bracketing import monotone_root
from constants import CENTERED_RTOL, DEFAULT_MASS, DEFAULT_P, SHIFT_XTOL, LineCase
from errors import NumericalError, ParameterError
from utils import log_cosh, sech_power

logger = logging.getLogger(__name__)


def check_exponent(p: float) -> float:
    if not (isinstance(p, (int, float)) and 2.0 < p < 6.0):
        raise ParameterError(f"nonlinearity exponent p must lie in (2, 6), got {p!r}")
    return float(p)


def check_mass(mu: float) -> float:
    if not (isinstance(mu, (int, float)) and mu > 0 and math.isfinite(mu)):
        raise ParameterError(f"mass must be positive and finite, got {mu!r}")
    return float(mu)


@dataclass(frozen=True)
class ProblemParams:
    p: float = DEFAULT_P
    mu: float = DEFAULT_MASS

    def __post_init__(self) -> None:
        check_exponent(self.p)
        check_mass(self.mu)


@dataclass(frozen=True)
class SolitonParams:
    p: float
    alpha: float
    beta: float
    amplitude: float
    width: float
    lambda_one: float

    @property
    def ratio(self) -> float:
        """ r = alpha / beta, the sech exponent. """
        return self.alpha / self.beta

    @property
    def full_beta(self) -> float:
        """ Complete integral of sech^(2r) over the line, B(r, 1/2). """
        return float(special.beta(self.ratio, 0.5))

    @property
    def energy_one(self) -> float:
        """ E(phi_1) from the virial identities. """
        return self.lambda_one * (self.p - 6.0) / (2.0 * (self.p + 2.0))


@lru_cache(maxsize=64)
def soliton_params(p: float) -> SolitonParams:
    """
    Shape constants of the unit-mass soliton, verified by quadrature of its
    mass and by the ODE residual at a few sample points.

    :raises ParameterError: p outside (2, 6).
    :raises NumericalError: if the verification fails.
    """
    p = check_exponent(p)
    r = 2.0 / (p - 2.0)
    # mass(lambda) = (p/2)^r 2/(p-2) B(r, 1/2) lambda^(r - 1/2)
    k = (p / 2.0) ** r * 2.0 / (p - 2.0) * special.beta(r, 0.5)
    lam = k ** (-1.0 / (r - 0.5))
    params = SolitonParams(
        p=p,
        alpha=2.0 / (6.0 - p),
        beta=(p - 2.0) / (6.0 - p),
        amplitude=(p * lam / 2.0) ** (1.0 / (p - 2.0)),
        width=(p - 2.0) * math.sqrt(lam) / 2.0,
        lambda_one=lam,
    )
    _verify(params)
    return params


def _verify(params: SolitonParams) -> None:
    mass, _ = integrate.quad(lambda x: soliton_value(params, 1.0, x) ** 2, -np.inf, np.inf,
                             epsabs=1e-13, epsrel=1e-12, limit=200)
    if abs(mass - 1.0) > 1e-8:
        raise NumericalError(f"unit-mass soliton has mass {mass!r} for p={params.p}")
    xs = np.linspace(-5.0, 5.0, 11) / params.width
    residual = np.max(np.abs(ode_residual(params, 1.0, xs)))
    if residual > 1e-10 * params.amplitude:
        raise NumericalError(f"soliton ODE residual {residual:.3e} for p={params.p}")


def soliton_value(params: SolitonParams, mu: float, x):
    """ phi_mu(x); accepts scalars and arrays. """
    scale = mu ** params.beta
    return mu ** params.alpha * params.amplitude * sech_power(params.width * scale * np.asarray(x, float),
                                                              params.ratio)


def soliton_derivative(params: SolitonParams, mu: float, x):
    scale = mu ** params.beta
    z = params.width * scale * np.asarray(x, float)
    return (-mu ** params.alpha * params.amplitude * params.ratio * params.width * scale
            * sech_power(z, params.ratio) * np.tanh(z))


def soliton_second_derivative(params: SolitonParams, mu: float, x):
    scale = mu ** params.beta
    z = params.width * scale * np.asarray(x, float)
    r = params.ratio
    sech2 = sech_power(z, 2.0)
    return (mu ** params.alpha * params.amplitude * r * (params.width * scale) ** 2
            * sech_power(z, r) * (r * np.tanh(z) ** 2 - sech2))


def ode_residual(params: SolitonParams, mu: float, x):
    """ phi'' + |phi|^(p-2) phi - lambda_mu phi, zero for the soliton. """
    phi = soliton_value(params, mu, x)
    return (soliton_second_derivative(params, mu, x) + np.abs(phi) ** (params.p - 2.0) * phi
            - soliton_lambda(params, mu) * phi)


def soliton_lambda(params: SolitonParams, mu: float) -> float:
    return params.lambda_one * mu ** (2.0 * params.beta)


def soliton_energy(params: SolitonParams, mu: float) -> float:
    """ E(phi_mu) = mu^((p+2)/(6-p)) E(phi_1); strictly negative. """
    return mu ** ((params.p + 2.0) / (6.0 - params.p)) * params.energy_one


def soliton_peak(params: SolitonParams, mu: float) -> float:
    return mu ** params.alpha * params.amplitude


def soliton_inverse(params: SolitonParams, mu: float, t):
    """
    The x >= 0 with phi_mu(x) = t.

    :raises ParameterError: unless 0 < t <= phi_mu(0).
    """
    t = np.asarray(t, float)
    peak = soliton_peak(params, mu)
    if np.any(t <= 0) or np.any(t > peak * (1.0 + 1e-14)):
        raise ParameterError(f"level must lie in (0, {peak}]")
    ratio = np.maximum(peak / t, 1.0) ** (1.0 / params.ratio)
    x = np.arccosh(ratio) / (params.width * mu ** params.beta)
    return float(x) if x.ndim == 0 else x


def unit_tail_mass(params: SolitonParams, z):
    """ Integral of phi_1^2 over (z, infinity), through the regularized incomplete beta function. """
    z = np.asarray(z, float)
    r = params.ratio
    s = params.width * np.abs(z)
    upper = 0.5 * params.full_beta * special.betainc(r, 0.5, sech_power(s, 2.0))
    tail = np.where(z >= 0, upper, params.full_beta - upper)
    out = params.amplitude ** 2 / params.width * tail
    return float(out) if out.ndim == 0 else out


def half_line_tail_mass(params: SolitonParams, mu: float, y):
    """ Integral of phi_mu^2 over (y, infinity). """
    return mu * unit_tail_mass(params, mu ** params.beta * np.asarray(y, float))


def _log_shift_function(params: SolitonParams, z: float) -> float:
    """ log g(z) with g(z) = phi_1(z)^(-1/alpha) T(z); strictly decreasing in z. """
    log_phi = math.log(params.amplitude) - params.ratio * float(log_cosh(params.width * z))
    tail = unit_tail_mass(params, z)
    if tail <= 0.0:
        return -math.inf
    return -log_phi / params.alpha + math.log(tail)


@dataclass(frozen=True)
class HalfLineSolution:
    a: float
    m: float
    M: float
    y: float
    z: float
    boundary_residual: float
    mass_residual: float

    def profile(self, params: SolitonParams) -> Callable:
        return lambda x: soliton_value(params, self.M, np.asarray(x, float) + self.y)


def solve_half_line(params: SolitonParams, a: float, m: float) -> HalfLineSolution:
    """
    The (M, y) with phi_M(y) = a and mass of phi_M over (y, infinity) equal to m/2.

    Through z = M^beta y both conditions collapse to g(z) = (m/2) a^(-1/alpha),
    solved by bracketed bisection in log space.

    :raises ParameterError: a <= 0 or m <= 0.
    :raises BracketError: if no bracket can be found.
    """
    if not (a > 0 and math.isfinite(a)):
        raise ParameterError(f"boundary value must be positive, got {a!r}")
    check_mass(m)
    target = math.log(m / 2.0) - math.log(a) / params.alpha
    z = monotone_root(lambda s: _log_shift_function(params, s) - target, xtol=SHIFT_XTOL)
    phi_z = float(soliton_value(params, 1.0, z))
    M = (a / phi_z) ** (1.0 / params.alpha)
    y = z * M ** (-params.beta)
    solution = HalfLineSolution(
        a=a, m=m, M=M, y=y, z=z,
        boundary_residual=abs(float(soliton_value(params, M, y)) - a),
        mass_residual=abs(M * unit_tail_mass(params, z) - m / 2.0),
    )
    if solution.boundary_residual > 1e-8 * max(a, 1.0) or solution.mass_residual > 1e-8 * max(m, 1.0):
        raise NumericalError(f"half-line solve left residuals {solution.boundary_residual:.2e}, "
                             f"{solution.mass_residual:.2e}")
    logger.debug("half-line a=%g m=%g -> M=%.12g y=%.12g", a, m, M, y)
    return solution


@dataclass(frozen=True)
class LineProblem:
    case: LineCase
    a: float
    m: float
    M: float
    y: float
    evaluate: Callable = field(repr=False, compare=False)


def classify_line_problem(params: SolitonParams, a: float, m: float) -> LineProblem:
    """
    Energy minimizers on the line with mass m and value a at the origin.

    a < phi_m(0): the soliton translated by +-y with phi_m(y) = a.
    a = phi_m(0) (relative tolerance CENTERED_RTOL): the centred soliton.
    a > phi_m(0): the even truncation x -> phi_M(|x| + y) from the half-line solve.

    The evaluator of TWO_TRANSLATES takes a branch argument of +1 or -1.
    """
    if not (a > 0 and math.isfinite(a)):
        raise ParameterError(f"level must be positive, got {a!r}")
    check_mass(m)
    peak = soliton_peak(params, m)
    if abs(a - peak) <= CENTERED_RTOL * peak:
        return LineProblem(LineCase.CENTERED, a, m, m, 0.0, lambda x: soliton_value(params, m, x))
    if a < peak:
        y = soliton_inverse(params, m, a)
        return LineProblem(LineCase.TWO_TRANSLATES, a, m, m, y,
                           lambda x, branch=1: soliton_value(params, m, np.asarray(x, float) + branch * y))
    solution = solve_half_line(params, a, m)
    return LineProblem(LineCase.TRUNCATED, a, m, solution.M, solution.y,
                       lambda x: soliton_value(params, solution.M, np.abs(np.asarray(x, float)) + solution.y))


def half_line_energy(params: SolitonParams, M: float, y: float) -> float:
    """ Energy of x -> phi_M(x + y) on the half-line (0, infinity). """
    p = params.p

    def density(x: float) -> float:
        return 0.5 * soliton_derivative(params, M, x) ** 2 - abs(soliton_value(params, M, x)) ** p / p

    value, _ = integrate.quad(density, y, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200)
    return value
