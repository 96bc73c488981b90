"""Quadrature oracles that cross-check the analytic routes numerically.

Both the factor integrand and the four-Bessel integrals oscillate with a
bounded combined frequency and decay algebraically, so the two oracles
share one scheme: an adaptive head over the first few periods, then fixed
half-period chunks integrated by Gauss-Legendre rules, with the limit of
the chunk partial sums taken by iterated averaging.  The flat (large-q)
part of the monopole and quadrupole kernels would leave a non-oscillatory
1/q^2 tail that no such extrapolation can truncate, so the quadrature is
pointed at the decaying echo part of the kernel only and the flat part
enters through its four-Bessel value.

Nothing in this module is imported by the analytic routes; it exists to
give them something independent to agree with.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import integrate

from .closed_form import CancellationWarning, ji4
from .model import FactorKind, Ji4Args, RegionPair, ValidationError
from .special_functions import angular_weight, sph_bessel
from .time_averages import QuadratureError, Schedule, heaviside

__all__ = [
    "QuadConfig",
    "QuadResult",
    "factor_fourier_numeric",
    "ji4_numeric",
    "utilde_direct",
]

# endpoint signs of the two sampling windows, in tau_1..tau_4 order
_SIGNS = (1.0, -1.0, 1.0, -1.0)

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)

#: head length, in periods of the fastest oscillation, before chunking starts
_HEAD_PERIODS = 8


@dataclass(frozen=True)
class QuadConfig:
    """Tolerances and budgets for the oscillatory quadrature oracles."""

    abs_tol: float = 1e-7
    rel_tol: float = 1e-4
    max_subdivisions: int = 200
    tail_periods: int = 400

    def __post_init__(self) -> None:
        for name in ("abs_tol", "rel_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0.0):
                raise ValidationError(f"{name} must be positive and finite, got {value!r}")
        if self.max_subdivisions < 1:
            raise ValidationError(
                f"max_subdivisions must be >= 1, got {self.max_subdivisions}"
            )
        if self.tail_periods < 8:
            raise ValidationError(f"tail_periods must be >= 8, got {self.tail_periods}")


class QuadResult(NamedTuple):
    """Oracle value together with its absolute error estimate."""

    value: float
    error: float


def _plateau(chunks: np.ndarray) -> tuple:
    """Iterated-averaging limit of the partial sums and its settling move.

    Adjacent averaging multiplies a mode of per-chunk ratio rho (on the
    unit circle for an oscillation, sub-unit for a decaying one) by
    (1 + rho)/2 per level, so every non-DC mode is damped; the level whose
    estimate moved least supplies the value and its last move the spread.
    """
    partial = np.cumsum(chunks)
    estimates = np.empty(partial.size)
    estimates[0] = partial[-1]
    row = partial
    for level in range(1, partial.size):
        row = 0.5 * (row[1:] + row[:-1])
        estimates[level] = row[-1]
    moves = np.abs(np.diff(estimates))
    best = int(np.argmin(moves))
    return float(estimates[best + 1]), float(moves[best])


def _averaged_limit(chunks: np.ndarray) -> tuple:
    """Extrapolated tail with an error estimate honest about slow modes.

    A barely-damped beat frequency can leave the full-depth plateau move
    far below the true error, so the estimate also compares the limit
    against the one taken from half as many chunks.
    """
    value, move = _plateau(chunks)
    half_value, _ = _plateau(chunks[: max(chunks.size // 2, 8)])
    floor = 4e-16 * (np.max(np.abs(np.cumsum(chunks))) + np.max(np.abs(chunks)))
    return value, float(max(move, abs(value - half_value), floor))


def _oscillatory_integral(f, omega: float, cfg: QuadConfig) -> QuadResult:
    """Integral of f over (0, inf), f oscillating no faster than omega.

    f must accept numpy arrays; the head is adaptive scalar quadrature,
    the tail is chunked at half the fastest period so that the dominant
    mode alternates chunk to chunk.
    """
    h = math.pi / omega
    q0 = 2.0 * _HEAD_PERIODS * h
    # head tolerances are fixed tight: cfg's tolerances decide when to give
    # up (the stall guard), they must not degrade the computed value
    head = integrate.quad(
        f,
        0.0,
        q0,
        epsabs=min(1e-12, 0.1 * cfg.abs_tol),
        epsrel=min(1e-11, 0.1 * cfg.rel_tol),
        limit=cfg.max_subdivisions,
        full_output=1,
    )
    edges = q0 + h * np.arange(cfg.tail_periods + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    grid = mid[:, None] + (0.5 * h) * _GL_NODES[None, :]
    vals = np.asarray(f(grid.ravel()), dtype=float).reshape(grid.shape)
    chunks = (0.5 * h) * (vals @ _GL_WEIGHTS)
    tail, tail_err = _averaged_limit(chunks)
    return QuadResult(head[0] + tail, head[1] + tail_err)


def _require_converged(result: QuadResult, cfg: QuadConfig, context: str) -> QuadResult:
    budget = max(cfg.abs_tol, cfg.rel_tol * abs(result.value))
    if not math.isfinite(result.value) or result.error > budget:
        raise QuadratureError(
            f"{context}: tail extrapolation stalled at error "
            f"{result.error:.3e} for value {result.value:.6e}",
            estimate=result.value,
        )
    return result


def _d0_gate(s: Schedule) -> float:
    """Coincidence-gate length Theta(-tau4)Theta(tau2)(min(dt1,tau2) - max(tau3,0))."""
    _, tau2, tau3, tau4 = s.taus
    sc = s.scale(0.0)
    return heaviside(-tau4, sc) * heaviside(tau2, sc) * (
        min(s.dt1, tau2) - max(tau3, 0.0)
    )


def _flat_part(l: int, s: Schedule) -> float:
    """Large-q limit of the radial kernel (zero for the odd channel).

    The monopole keeps -(3/2) of the coincidence gate against +1 from its
    sine average; the quadrupole keeps the sine average's gate alone.
    """
    if l == 1:
        return 0.0
    flat = _d0_gate(s) / (s.dt1 * s.dt2)
    return -0.5 * flat if l == 0 else flat


def _active_echoes(s: Schedule) -> list:
    """(signed gate, tau) pairs whose trig echo survives the step functions."""
    sc = s.scale(0.0)
    out = []
    for sign, tau in zip(_SIGNS, s.taus):
        gate = sign * heaviside(tau, sc)
        if gate != 0.0 and tau != 0.0:
            out.append((gate, tau))
    return out


def _echo_kernel(l: int, qa: np.ndarray, s: Schedule):
    """Decaying part of the radial kernel, one gated trig term per endpoint.

    Each term carries its own finite q -> 0 limit (tau j0(q tau), or a
    half-angle sine square over q), so nothing cancels at small q and
    nothing is subtracted at large q.
    """
    norm = s.dt1 * s.dt2
    total = np.zeros_like(qa)
    if l == 1:
        for gate, tau in _active_echoes(s):
            half = np.sin(0.5 * qa * tau)
            total = total - gate * 2.0 * half * half
        safe = np.where(qa == 0.0, 1.0, qa)
        return np.where(qa == 0.0, 0.0, total / safe) / norm
    for gate, tau in _active_echoes(s):
        total = total + gate * tau * sph_bessel(0, qa * tau)
    return total / norm


_CHANNELS = {
    (FactorKind.AXX, 0),
    (FactorKind.AXX, 2),
    (FactorKind.AXY, 2),
    (FactorKind.BXY, 1),
}


def utilde_direct(kind: FactorKind, l: int, q, s: Schedule):
    """Radial kernel in echo-plus-flat form; algebraically equal to utilde.

    Written independently from step-gated trig terms so the two can be
    compared; broadcasts over q (q >= 0 allowed, the q -> 0 limits are
    built in).
    """
    if (kind, l) not in _CHANNELS:
        raise ValidationError(f"no radial kernel for (kind={kind.value}, l={l})")
    qa = np.asarray(q, dtype=float)
    if np.any(qa < 0.0) or not np.all(np.isfinite(qa)):
        raise ValidationError("q must be >= 0 and finite")
    value = _echo_kernel(l, qa, s) + _flat_part(l, s)
    return float(value) if np.ndim(q) == 0 else value


def factor_fourier_numeric(
    kind: FactorKind, p: RegionPair, cfg: QuadConfig = QuadConfig()
) -> QuadResult:
    """Geometric factor by direct Fourier-space quadrature.

    Integrates (9 / (2 pi^2 R1 R2)) sum_l W_l * int j1(q R1) j1(q R2)
    echo_l(q) j_l(q R) dq by the half-period scheme and adds the flat
    kernel part through its four-Bessel value, whose non-oscillatory
    1/q^2 tail would otherwise defeat the extrapolation.
    """
    p.validate()
    s = Schedule(p.dt1, p.dt2, p.t_offset)
    echoes = _active_echoes(s)
    pref = 9.0 / (2.0 * math.pi**2 * p.r1 * p.r2)
    value = 0.0
    error = 0.0
    for l, w in sorted(angular_weight(kind, p.theta, p.phi).items()):
        if w == 0.0 or (l >= 1 and p.r == 0.0):
            continue  # j_l(0) = 0 for l >= 1 kills the channel exactly
        flat = _flat_part(l, s)
        if flat != 0.0:
            # at or beyond the support boundary (largest length = sum of the
            # rest) the bracket cancels to an exact zero; that cancellation
            # is benign here, so the relative-accuracy warning is noise
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", CancellationWarning)
                bracket = ji4(Ji4Args(0, 1, 1, 0, l, p.r1, p.r2, 0.0, p.r))
            value += pref * w * flat * bracket
        if not echoes:
            continue  # dead sampling window, all corner lags gated off
        omega = p.r1 + p.r2 + p.r + max(tau for _, tau in echoes)

        def integrand(qv, l=l):
            qv = np.asarray(qv, dtype=float)
            return (
                sph_bessel(1, qv * p.r1)
                * sph_bessel(1, qv * p.r2)
                * _echo_kernel(l, qv, s)
                * sph_bessel(l, qv * p.r)
            )

        part = _oscillatory_integral(integrand, omega, cfg)
        value += pref * w * part.value
        error += abs(pref * w) * part.error
    return _require_converged(
        QuadResult(value, error), cfg, f"factor_fourier_numeric({kind.value})"
    )


def ji4_numeric(args: Ji4Args, cfg: QuadConfig = QuadConfig()) -> QuadResult:
    """Four-Bessel integral int x^-n prod_i j_li(a_i x) dx by quadrature.

    Any integrable signature is accepted, not only the ones the closed
    forms cover: slots with a zero argument reduce to j_l(0) analytically,
    the rest must leave the integrand finite at the origin and decaying.
    """
    if args.n < 0 or args.n != int(args.n):
        raise ValidationError(f"n must be a non-negative integer, got {args.n}")
    slots = list(
        zip(
            (args.l1, args.l2, args.l3, args.l4),
            (args.alpha, args.beta, args.gamma, args.delta),
        )
    )
    active = []
    for l, a in slots:
        if l not in (-1, 0, 1, 2):
            raise ValidationError(f"spherical Bessel order {l} not available")
        if not (math.isfinite(a) and a >= 0.0):
            raise ValidationError(f"Bessel arguments must be finite and >= 0, got {a}")
        if a == 0.0:
            if l == -1:
                raise ValidationError("j_-1 needs a positive argument")
            if l >= 1:
                return QuadResult(0.0, 0.0)  # j_l(0) = 0 for l >= 1
            continue  # j_0(0) = 1 drops out of the product
        active.append((l, a))
    n = int(args.n)
    if sum(l for l, _ in active) - n <= -1:
        raise ValidationError("integrand is not integrable at the origin")
    if len(active) + n < 1:
        raise ValidationError("integrand does not decay")
    omega = sum(a for _, a in active)

    def integrand(xv):
        xv = np.asarray(xv, dtype=float)
        total = np.ones_like(xv)
        for l, a in active:
            total = total * sph_bessel(l, xv * a)
        if n:
            total = total / xv**n
        return total

    result = _oscillatory_integral(integrand, omega, cfg)
    signature = f"{n};{args.l1},{args.l2},{args.l3},{args.l4}"
    return _require_converged(result, cfg, f"ji4_numeric({signature})")
