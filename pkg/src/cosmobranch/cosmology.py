"""FLRW background: Friedmann closure, scale factor, particle horizon.

Internally the ODE runs in units where ``hubble0 = 1``; ``hubble0`` and
``light_speed`` are applied only when converting to and from caller units,
so times are in units of ``1 / hubble0`` and lengths in units of
``light_speed / hubble0`` scaled by whatever the caller's ``c`` is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline

from . import _kernels
from .errors import (
    ClosedUniverseUnsupported,
    NegativeDensity,
    NegativeRadicand,
    NonPositiveHubble,
    StiffnessFailure,
    TimeOutOfRange,
    UnsupportedRecollapse,
    ValidationError,
)

CURVATURE_TOL = 1e-12

# Gauss-Legendre rule used on every sub-interval of the horizon quadrature
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class CosmologyModel:
    """Density parameters today plus the Hubble rate and the speed of light.

    ``omega_k`` is derived from the sum rule and never stored.
    """

    hubble0: float
    omega_m: float
    omega_r: float
    omega_lambda: float
    light_speed: float = 1.0

    @property
    def omega_k(self) -> float:
        return 1.0 - self.omega_m - self.omega_r - self.omega_lambda

    @property
    def curvature_sign(self) -> int:
        """Sign of ``k`` in the metric: -1 open, 0 flat, +1 closed."""
        ok = self.omega_k
        if abs(ok) <= CURVATURE_TOL:
            return 0
        return -1 if ok > 0 else 1

    @property
    def curvature_radius(self) -> float:
        """``c / (H0 sqrt(|omega_k|))``; infinite for flat models."""
        if self.curvature_sign == 0:
            return math.inf
        return self.light_speed / (self.hubble0 * math.sqrt(abs(self.omega_k)))

    def radicand(self, a):
        """``(H(a) / H0)**2`` as a function of the scale factor."""
        a = np.asarray(a, dtype=float)
        ok = 0.0 if self.curvature_sign == 0 else self.omega_k
        return self.omega_r / a**4 + self.omega_m / a**3 + ok / a**2 + self.omega_lambda


def build_model(h0, omega_m, omega_r, omega_lambda, c=1.0, a_max=1e3):
    """Validate parameters and return a :class:`CosmologyModel`.

    ``H^2(a)`` is scanned on a log grid over ``(0, a_max]``; models where it
    turns negative (bounce or recollapse) are rejected.
    """
    if not h0 > 0:
        raise NonPositiveHubble(f"hubble0 must be > 0, got {h0}")
    if omega_m < 0 or omega_r < 0:
        raise NegativeDensity(
            f"matter and radiation densities must be >= 0 (omega_m={omega_m}, omega_r={omega_r})"
        )
    if not c > 0:
        raise ValidationError(f"light_speed must be > 0, got {c}")
    model = CosmologyModel(float(h0), float(omega_m), float(omega_r), float(omega_lambda), float(c))
    grid = np.logspace(-8, math.log10(a_max), 20001)
    e2 = model.radicand(grid)
    if np.any(e2 < 0):
        a_bad = grid[np.argmax(e2 < 0)]
        raise UnsupportedRecollapse(f"H^2(a) < 0 at a = {a_bad:.6g}")
    return model


def hubble_rate(model, a):
    """``H(a) = H0 sqrt(omega_r a^-4 + omega_m a^-3 + omega_k a^-2 + omega_lambda)``."""
    if np.any(np.asarray(a) <= 0):
        raise ValidationError("scale factor must be > 0")
    e2 = model.radicand(a)
    if np.any(e2 < 0):
        raise NegativeRadicand(f"H^2 < 0 at a = {a}")
    out = model.hubble0 * np.sqrt(e2)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class GridControl:
    """Tolerances for the scale-factor solve and the horizon quadrature.

    ``knot_tol`` bounds the disagreement in ``ln a`` between the stored
    Hermite interpolant and the solver's dense output at every knot midpoint;
    ``residual_tol`` bounds the relative ODE residual of the interpolant there.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    knot_tol: float = 1e-11
    residual_tol: float = 1e-7
    quad_rtol: float = 1e-9
    max_knots: int = 2_000_000

    def halved(self) -> "GridControl":
        return GridControl(
            self.rtol / 2, self.atol / 2, self.knot_tol / 2, self.residual_tol / 2,
            self.quad_rtol / 2, self.max_knots,
        )


def _fritsch_carlson(times, values, slopes):
    # limit slopes so the cubic Hermite interpolant stays monotone
    secant = np.diff(values) / np.diff(times)
    h_ok = secant != 0
    m = slopes.copy()
    alpha = np.where(h_ok, m[:-1] / np.where(h_ok, secant, 1.0), 0.0)
    beta = np.where(h_ok, m[1:] / np.where(h_ok, secant, 1.0), 0.0)
    r2 = alpha**2 + beta**2
    bad = r2 > 9.0
    if np.any(bad):
        tau = 3.0 / np.sqrt(r2[bad])
        idx = np.nonzero(bad)[0]
        m[idx] = np.minimum(m[idx], tau * alpha[bad] * secant[bad])
        m[idx + 1] = np.minimum(m[idx + 1], tau * beta[bad] * secant[bad])
    return m


@dataclass(frozen=True)
class ScaleFactorCurve:
    """Tabulated ``a(t)`` with slopes ``da/dt`` at the knots.

    Between knots ``ln a`` is interpolated by a monotone cubic Hermite
    polynomial, which keeps ``a`` positive and, for expanding models,
    increasing. Power laws and exponentials are smooth in ``ln a``, which
    keeps the knot count low near small ``t_i``.
    """

    times: np.ndarray
    values: np.ndarray
    slopes: np.ndarray
    model: CosmologyModel
    grid: GridControl = field(default_factory=GridControl)

    def __post_init__(self):
        for arr in (self.times, self.values, self.slopes):
            arr.setflags(write=False)

    @property
    def t_i(self) -> float:
        return float(self.times[0])

    @property
    def t_f(self) -> float:
        return float(self.times[-1])

    @cached_property
    def _log_spline(self):
        return CubicHermiteSpline(self.times, np.log(self.values), self.slopes / self.values)

    def __call__(self, t):
        return np.exp(self._log_spline(t))

    def inverse(self, t):
        """``1 / a(t)``, the horizon integrand."""
        return np.exp(-self._log_spline(t))

    def derivative(self, t):
        return self(t) * self._log_spline(t, 1)

    def hubble(self, t):
        return hubble_rate(self.model, self(t))

    def max_ode_residual(self) -> float:
        """Largest ``|a' - a H(a)| / (a H(a))`` at the knot midpoints."""
        mid = 0.5 * (self.times[1:] + self.times[:-1])
        rhs = hubble_rate(self.model, self(mid))
        return float(np.max(np.abs(self._log_spline(mid, 1) - rhs) / rhs))

    @cached_property
    def _cumulative(self):
        # integral of 1/a over each knot interval, fine and coarse rules
        fine, coarse = _interval_integrals(self.inverse, self.times[:-1], self.times[1:], self.grid.quad_rtol)
        cum = np.concatenate([[0.0], _kernels.compensated_cumsum(fine)])
        err = np.concatenate([[0.0], np.cumsum(np.abs(fine - coarse))])
        return cum, err


def solve_scale_factor(model, t_i, t_f, a_i, grid_control=None):
    """Integrate ``da/dt = a H(a)`` from ``(t_i, a_i)`` to ``t_f``.

    The solver is DOP853 on ``ln a``, so ``rtol``/``atol`` control the
    relative error of ``a`` uniformly even when ``a_i`` is tiny. Its step
    points are bisected until the Hermite interpolant (with exact ODE slopes)
    agrees with the dense output to ``knot_tol`` and satisfies the ODE to
    ``residual_tol`` at every midpoint.
    """
    grid = grid_control or GridControl()
    if not t_i < t_f:
        raise ValidationError(f"need t_i < t_f, got {t_i} >= {t_f}")
    if not a_i > 0:
        raise ValidationError(f"a_i must be > 0, got {a_i}")
    h0 = model.hubble0

    def expansion_rate(log_a):
        # trial steps can probe tiny a; an infinite rate makes the solver shrink the step
        with np.errstate(over="ignore"):
            e2 = model.radicand(np.exp(log_a))
        if np.any(e2 < 0):
            raise NegativeRadicand(f"H^2 < 0 at a = {np.exp(log_a)}")
        return np.sqrt(e2)

    tau_i, tau_f = h0 * t_i, h0 * t_f
    sol = solve_ivp(
        lambda _tau, y: expansion_rate(y), (tau_i, tau_f), [math.log(a_i)],
        method="DOP853", rtol=grid.rtol, atol=grid.atol, dense_output=True,
    )
    if sol.status != 0:
        raise StiffnessFailure(sol.message)

    tau = np.asarray(sol.t, dtype=float)
    while True:
        y = sol.sol(tau)[0]
        m = _fritsch_carlson(tau, y, expansion_rate(y))
        spline = CubicHermiteSpline(tau, y, m)
        mid = 0.5 * (tau[1:] + tau[:-1])
        y_fit = spline(mid)
        bad = np.abs(y_fit - sol.sol(mid)[0]) > grid.knot_tol
        ode = expansion_rate(y_fit)
        # a slope residual below knot_tol / (interval rise) is dense-output noise
        resolvable = np.diff(y) > grid.knot_tol / grid.residual_tol
        bad |= resolvable & (np.abs(spline(mid, 1) - ode) > grid.residual_tol * ode)
        if not np.any(bad):
            break
        if len(tau) + bad.sum() > grid.max_knots:
            raise StiffnessFailure("knot refinement exceeded max_knots")
        tau = np.sort(np.concatenate([tau, mid[bad]]))
    a = np.exp(y)
    return ScaleFactorCurve(tau / h0, a, a * m * h0, model, grid)


def _gl_integral(integrand, lo, hi, pieces):
    # composite Gauss-Legendre over [lo, hi] split into `pieces` parts
    lo = np.asarray(lo, dtype=float)
    width = (np.asarray(hi, dtype=float) - lo) / pieces
    total = np.zeros_like(lo)
    for p in range(pieces):
        a0 = lo + p * width
        nodes = a0[:, None] + 0.5 * width[:, None] * (_GL_NODES[None, :] + 1.0)
        total += 0.5 * width * (integrand(nodes) @ _GL_WEIGHTS)
    return total


def _interval_integrals(integrand, lo, hi, rtol):
    pieces = 1
    coarse = _gl_integral(integrand, lo, hi, pieces)
    while True:
        fine = _gl_integral(integrand, lo, hi, 2 * pieces)
        if np.all(np.abs(fine - coarse) <= rtol * np.abs(fine)) or pieces >= 64:
            return fine, coarse
        pieces *= 2
        coarse = fine


@dataclass(frozen=True)
class HorizonResult:
    time: float
    proper_radius: float
    comoving_radius: float
    quadrature_error_estimate: float


def particle_horizons(curve, times):
    """Vectorised :func:`particle_horizon`; returns arrays ``(R_P, chi, err)``."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    span = curve.t_f - curve.t_i
    slack = 1e-12 * span
    if np.any(times < curve.t_i - slack) or np.any(times > curve.t_f + slack):
        raise TimeOutOfRange(f"times must lie in [{curve.t_i}, {curve.t_f}]")
    times = np.clip(times, curve.t_i, curve.t_f)
    cum, cum_err = curve._cumulative
    k = np.clip(np.searchsorted(curve.times, times, side="right") - 1, 0, len(curve.times) - 2)
    fine, coarse = _interval_integrals(curve.inverse, curve.times[k], times, curve.grid.quad_rtol)
    integral = cum[k] + fine
    c = curve.model.light_speed
    chi = c * integral
    a = curve(times)
    proper = a * chi
    quad_err = a * c * (cum_err[k] + np.abs(fine - coarse))
    # ODE and interpolation error carried through the integrand
    curve_err = proper * 10.0 * (curve.grid.rtol + curve.grid.knot_tol)
    return proper, chi, quad_err + curve_err


def particle_horizon(curve, t):
    """Proper radius ``a(t) * int_{t_i}^{t} c / a(s) ds`` of the particle horizon."""
    proper, chi, err = particle_horizons(curve, [t])
    return HorizonResult(float(t), float(proper[0]), float(chi[0]), float(err[0]))


def _sinh_minus_identity(y):
    # sinh(y) - y without cancellation for small y
    y = np.asarray(y, dtype=float)
    small = np.abs(y) < 0.1
    ys = np.where(small, y, 0.0)
    series = ys**3 / 6 * (1 + ys**2 / 20 * (1 + ys**2 / 42 * (1 + ys**2 / 72 * (1 + ys**2 / 110))))
    return np.where(small, series, np.sinh(y) - y)


def comoving_volume(model, chi):
    """Volume enclosed by comoving radius ``chi`` (flat or open only)."""
    chi = np.asarray(chi, dtype=float)
    if np.any(chi < 0):
        raise ValidationError("chi must be >= 0")
    sign = model.curvature_sign
    if sign == 1:
        raise ClosedUniverseUnsupported("closed (k = +1) models are not supported")
    if sign == 0:
        out = 4.0 * math.pi / 3.0 * chi**3
    else:
        rc = model.curvature_radius
        out = math.pi * rc**3 * _sinh_minus_identity(2.0 * chi / rc)
    return float(out) if out.ndim == 0 else out


def holographic_ratio(model, curve, t, comoving_entropy_density, planck_length):
    """Matter entropy inside the particle horizon over a quarter of its area.

    Entropy is ``sigma * V(chi)`` with a constant comoving density ``sigma``
    and the area is measured in Planck units, so the bound holds iff the
    returned ratio is at most 1. At ``t = t_i`` the horizon is empty and the
    limiting value 0 is returned.
    """
    if comoving_entropy_density < 0:
        raise ValidationError("comoving_entropy_density must be >= 0")
    if not planck_length > 0:
        raise ValidationError("planck_length must be > 0")
    proper, chi, _ = particle_horizons(curve, t)
    volume = comoving_volume(model, chi)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = comoving_entropy_density * volume * planck_length**2 / (math.pi * proper**2)
    ratio = np.where(proper > 0, ratio, 0.0)
    return float(ratio[0]) if np.ndim(t) == 0 else ratio


def export_curve_rows(curve):
    """Rows ``(t, a, H)`` at the stored knots, in model units."""
    return zip(curve.times, curve.values, np.atleast_1d(hubble_rate(curve.model, curve.values)))
