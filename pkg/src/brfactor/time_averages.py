"""Closed-form double time averages of retarded-kernel terms over a pair of
sampling intervals, plus the 2-D quadrature oracle used to verify them.

All averages run t1 over (0, dt1) and t2 over (T, T+dt2), act on functions
of the lag t = t2 - t1, and are normalized by dt1*dt2.  The four corner lags

    tau1 = T + dt2 - dt1    tau2 = T + dt2    tau3 = T    tau4 = T - dt1

carry the whole schedule dependence.  Every step function goes through
`heaviside` with Theta(0) = 1/2 so that parameters landing exactly on a
kink line get the mean of the two one-sided limits.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .model import ValidationError

#: half-band around zero (relative to a caller-supplied scale) treated as
#: "exactly on the boundary"
BOUNDARY_RTOL = 1e-12


class QuadratureError(RuntimeError):
    """Quadrature failed to reach the requested tolerance.

    The best available value is attached as `estimate`.
    """

    def __init__(self, message: str, estimate: float):
        super().__init__(message)
        self.estimate = estimate


def heaviside(x: float, scale: float) -> float:
    """Unit step with Theta(0) = 1/2, the boundary band being |x| <= 1e-12*scale."""
    if abs(x) <= BOUNDARY_RTOL * scale:
        return 0.5
    return 1.0 if x > 0.0 else 0.0


class AvgKind(enum.Enum):
    """Selector for the analytic double time averages."""

    SIN_FINITE = "sin-finite"  # <sin(q t) Theta(t) Theta(r_ex - t)>
    COS_FINITE = "cos-finite"  # <cos(q t) Theta(t) Theta(r_ex - t)>
    DELTA_AT = "delta-at"  # <delta(t - r_ex)>
    DELTA_PRIME_AT = "delta-prime-at"  # <delta'(t - r_ex)>
    EPS_TERM = "eps-term"  # (1/2) <delta(t)>
    SIN_INF = "sin-inf"  # <sin(q t) Theta(t)>
    COS_INF = "cos-inf"  # <cos(q t) Theta(t)>


@dataclass(frozen=True)
class Schedule:
    """Sampling intervals (0, dt1) and (t_offset, t_offset + dt2)."""

    dt1: float
    dt2: float
    t_offset: float = 0.0

    def __post_init__(self):
        for name in ("dt1", "dt2", "t_offset"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.dt1 <= 0.0 or self.dt2 <= 0.0:
            raise ValidationError(
                f"interval lengths must be positive, got dt1={self.dt1}, dt2={self.dt2}"
            )

    @property
    def taus(self) -> tuple:
        """Corner lags (tau1, tau2, tau3, tau4)."""
        return (
            self.t_offset + self.dt2 - self.dt1,
            self.t_offset + self.dt2,
            self.t_offset,
            self.t_offset - self.dt1,
        )

    def scale(self, r_ex: float = 0.0) -> float:
        """Magnitude scale used for boundary detection in `heaviside`."""
        return max(self.dt1, self.dt2, abs(self.t_offset), r_ex, 1.0)


# alternating signs attached to the corner lags tau1..tau4
_TAU_SIGNS = (1.0, -1.0, 1.0, -1.0)


def _blocks(s: Schedule, r_ex: float) -> tuple:
    """Step-gated overlap blocks (D0, Dr, DP, const_pair) of the schedule.

    D0 and Dr are the diagonal-overlap lengths at lag 0 and lag r_ex, DP is
    the signed count of interval endpoints the line t = r_ex crosses, and
    const_pair = Theta(tau2)Theta(-tau1) - Theta(tau3)Theta(-tau4).
    """
    tau1, tau2, tau3, tau4 = s.taus
    sc = s.scale(r_ex)
    d0 = (
        heaviside(-tau4, sc)
        * heaviside(tau2, sc)
        * (min(s.dt1, tau2) - max(tau3, 0.0))
    )
    dr = (
        heaviside(r_ex - tau4, sc)
        * heaviside(tau2 - r_ex, sc)
        * (min(s.dt1, tau2 - r_ex) - max(tau3 - r_ex, 0.0))
    )
    dp = heaviside(tau2 - r_ex, sc) * heaviside(r_ex - tau1, sc) - heaviside(
        tau3 - r_ex, sc
    ) * heaviside(r_ex - tau4, sc)
    const_pair = heaviside(tau2, sc) * heaviside(-tau1, sc) - heaviside(
        tau3, sc
    ) * heaviside(-tau4, sc)
    return d0, dr, dp, const_pair


def _check_q(q) -> np.ndarray:
    qa = np.asarray(q, dtype=float)
    if np.any(qa <= 0.0) or not np.all(np.isfinite(qa)):
        raise ValidationError("q must be positive and finite for Sin/Cos averages")
    return qa


def _as_input_shape(value: np.ndarray, q) -> float:
    return float(value) if np.ndim(q) == 0 else value


def finite_avg(kind: AvgKind, q, r_ex: float, s: Schedule):
    """Analytic double average of the finite-radius kernel terms.

    Broadcasts over `q` (the step-gated blocks are q-independent), returning
    a float for scalar q.  DeltaAt / DeltaPrimeAt / EpsTerm ignore q.
    """
    if r_ex < 0.0:
        raise ValidationError(f"r_ex must be >= 0, got {r_ex}")
    norm = s.dt1 * s.dt2
    d0, dr, dp, const_pair = _blocks(s, r_ex)
    if kind is AvgKind.DELTA_AT:
        return dr / norm
    if kind is AvgKind.DELTA_PRIME_AT:
        return dp / norm
    if kind is AvgKind.EPS_TERM:
        return 0.5 * d0 / norm
    if kind not in (AvgKind.SIN_FINITE, AvgKind.COS_FINITE):
        raise ValidationError(f"unsupported finite-average kind {kind!r}")
    if r_ex <= 0.0:
        raise ValidationError("Sin/Cos finite averages need r_ex > 0")
    qa = _check_q(q)
    sc = s.scale(r_ex)
    taus = s.taus
    gates = [
        sign * heaviside(tau, sc) * heaviside(r_ex - tau, sc)
        for sign, tau in zip(_TAU_SIGNS, taus)
    ]
    if kind is AvgKind.SIN_FINITE:
        osc = sum(g * np.sin(qa * tau) for g, tau in zip(gates, taus))
        val = (
            (osc - np.sin(qa * r_ex) * dp) / qa - np.cos(qa * r_ex) * dr + d0
        ) / (qa * norm)
    else:
        osc = sum(g * np.cos(qa * tau) for g, tau in zip(gates, taus))
        val = (
            (osc - np.cos(qa * r_ex) * dp + const_pair) / qa
            + np.sin(qa * r_ex) * dr
        ) / (qa * norm)
    return _as_input_shape(val, q)


def infinite_avg(kind: AvgKind, q, s: Schedule):
    """Analytic double average with the radius gate removed (r_ex -> infinity)."""
    if kind is AvgKind.DELTA_AT:
        return finite_avg(AvgKind.DELTA_AT, q, 0.0, s)
    if kind not in (AvgKind.SIN_INF, AvgKind.COS_INF):
        raise ValidationError(f"unsupported infinite-average kind {kind!r}")
    qa = _check_q(q)
    norm = s.dt1 * s.dt2
    d0, _, _, const_pair = _blocks(s, 0.0)
    sc = s.scale(0.0)
    taus = s.taus
    gates = [
        sign * heaviside(tau, sc) for sign, tau in zip(_TAU_SIGNS, taus)
    ]
    # associate divisions exactly as in finite_avg so that the saturated
    # r_ex limit is equal bit for bit, not merely to rounding
    if kind is AvgKind.SIN_INF:
        osc = sum(g * np.sin(qa * tau) for g, tau in zip(gates, taus))
        val = (osc / qa + d0) / (qa * norm)
    else:
        osc = sum(g * np.cos(qa * tau) for g, tau in zip(gates, taus))
        val = ((osc + const_pair) / qa) / (qa * norm)
    return _as_input_shape(val, q)


def numeric_time_average(f, s: Schedule, tol: float = 1e-10, breakpoints=(0.0,)) -> float:
    """Adaptive 2-D quadrature of (1/dt1 dt2) * double integral of f(t2 - t1).

    `breakpoints` lists lag values where f has kinks (pass (0.0, r_ex) for
    radius-gated integrands); subdivision is aligned to those lines.  Raises
    QuadratureError (with the best value attached) if the error estimate
    exceeds tol.
    """
    t0 = s.t_offset
    bps = sorted({float(b) for b in breakpoints})
    inner_eps = 0.25 * tol * s.dt2
    outer_eps = 0.25 * tol * s.dt1 * s.dt2
    margin = 1e-13 * s.scale(max((abs(b) for b in bps), default=0.0))

    def inner(t1: float) -> float:
        pts = [t1 + b for b in bps if t0 + margin < t1 + b < t0 + s.dt2 - margin]
        val, _ = scipy.integrate.quad(
            lambda t2: f(t2 - t1),
            t0,
            t0 + s.dt2,
            points=pts or None,
            limit=200,
            epsabs=inner_eps,
            epsrel=1e-12,
        )
        return val

    outer_pts = []
    for b in bps:
        for edge in (t0 - b, t0 + s.dt2 - b):
            if margin < edge < s.dt1 - margin:
                outer_pts.append(edge)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.integrate.IntegrationWarning)
        total, err = scipy.integrate.quad(
            inner,
            0.0,
            s.dt1,
            points=sorted(outer_pts) or None,
            limit=200,
            epsabs=outer_eps,
            epsrel=1e-12,
        )
    norm = s.dt1 * s.dt2
    value = total / norm
    err_bound = (err + s.dt1 * inner_eps) / norm
    if err_bound > tol:
        raise QuadratureError(
            f"2-D average error estimate {err_bound:.3e} exceeds tol {tol:.3e}",
            estimate=value,
        )
    return value
