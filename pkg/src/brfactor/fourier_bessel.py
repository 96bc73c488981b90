"""Fourier-Bessel series routes for the geometric factors.

Two independent expansions of the same quantity: a fixed-node series with
nodes q_n = n pi / r_ex (the radius-gated kernel saturates, so the plain
infinite-radius time averages appear), and a general-roots series over the
per-l root tables of j_l with the boundary terms kept explicitly.  Both
remove the flat (q-independent) part of the monopole kernel from the sum
and add back its closed value, which turns the slowest-converging piece of
the series into an exact term.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .closed_form import ji4
from .model import (
    FactorKind,
    FactorResult,
    Ji4Args,
    Method,
    RegionPair,
    SeriesConfig,
    ValidationError,
)
from .special_functions import angular_weight, bessel_roots, fb_weight, sph_bessel
from .time_averages import AvgKind, Schedule, finite_avg, infinite_avg

#: nodes are evaluated in vectorized blocks of this size, reduced in order
BLOCK = 128

_SUPPORTED = {
    (FactorKind.AXX, 0),
    (FactorKind.AXX, 2),
    (FactorKind.AXY, 2),
    (FactorKind.BXY, 1),
}


@dataclass(frozen=True)
class SeriesTermLog:
    """One series node: term value and compensated partial sum after it."""

    n: int
    q_n: float
    term_value: float
    partial_sum: float


def _check_pair(kind: FactorKind, l: int) -> None:
    if (kind, l) not in _SUPPORTED:
        raise ValidationError(f"no radial kernel for (kind={kind.value}, l={l})")


def utilde(kind: FactorKind, l: int, q, s: Schedule):
    """Radial multipole kernel at wavenumber q, angular constants excluded.

    These are the saturated (infinite-radius) forms: q times the sine
    average for l = 0 and 2 (the monopole also carries the -(3/2)<delta(t)>
    flat term), q times the cosine average for l = 1.  Broadcasts over q.
    """
    _check_pair(kind, l)
    if l == 0:
        return q * infinite_avg(AvgKind.SIN_INF, q, s) - 1.5 * infinite_avg(
            AvgKind.DELTA_AT, q, s
        )
    if l == 2:
        return q * infinite_avg(AvgKind.SIN_INF, q, s)
    return q * infinite_avg(AvgKind.COS_INF, q, s)


def _boundary_kernel(kind: FactorKind, l: int, q, r_ex: float, s: Schedule):
    """Radial kernel with the expansion-boundary terms kept at finite r_ex.

    Combines the radius-gated averages with the delta-type boundary terms at
    t = r_ex; at the roots of j_l the non-decaying pieces cancel against the
    gated averages.  Broadcasts over q.
    """
    _check_pair(kind, l)
    delta_r = finite_avg(AvgKind.DELTA_AT, 1.0, r_ex, s)
    dp = finite_avg(AvgKind.DELTA_PRIME_AT, 1.0, r_ex, s)
    if l == 1:
        cos_avg = finite_avg(AvgKind.COS_FINITE, q, r_ex, s)
        return (
            q * cos_avg
            - np.sin(q * r_ex) * delta_r
            - r_ex * sph_bessel(1, q * r_ex) * dp
        )
    sin_avg = finite_avg(AvgKind.SIN_FINITE, q, r_ex, s)
    if l == 0:
        delta_0 = finite_avg(AvgKind.DELTA_AT, 1.0, 0.0, s)
        eps = finite_avg(AvgKind.EPS_TERM, 1.0, 0.0, s)
        boundary = (
            delta_0
            - np.cos(q * r_ex) * delta_r
            - r_ex * sph_bessel(0, q * r_ex) * dp
        )
        return q * sin_avg - boundary - eps
    combo = np.cos(q * r_ex) - sph_bessel(0, q * r_ex) - sph_bessel(2, q * r_ex)
    return (
        q * sin_avg + combo * delta_r - r_ex * sph_bessel(2, q * r_ex) * dp
    )


def coeff_general(kind: FactorKind, l: int, n: int, r_ex: float, s: Schedule) -> float:
    """n-th general-roots coefficient: boundary kernel over the node weight.

    Spot-check API; the series route evaluates the same expressions in
    vectorized blocks over cached root tables.
    """
    if n < 1:
        raise ValidationError(f"node index must be >= 1, got {n}")
    root = bessel_roots(l, n).roots[-1]
    q = root / r_ex
    return float(_boundary_kernel(kind, l, q, r_ex, s)) / fb_weight(l, root, r_ex)


def _flat_monopole_coeff(s: Schedule) -> float:
    """q-independent part of the monopole kernels: -<delta(t)>/2."""
    return -finite_avg(AvgKind.EPS_TERM, 1.0, 0.0, s)


def _flat_head(g00: float, a: float, b: float, r: float) -> float:
    """Closed value of the flat monopole contribution, any separation r.

    Equals (12/(pi a b)) g00 ji4(0;1,1,0,0;a,b,r,0); the series being
    replaced reproduces this exactly because a, b + r <= r_ex keeps the
    node sum alias-free, and at r = 0 it reduces to 2 g00 R_< / (a b R_>^2).
    """
    return 12.0 / (math.pi * a * b) * g00 * ji4(
        Ji4Args(n=0, l1=1, l2=1, l3=0, l4=0, alpha=a, beta=b, gamma=r, delta=0.0)
    )


def _accumulate(term_iter, cfg: SeriesConfig, start: float, term_log=None):
    """Kahan-sum (n, q_n, term) triples with the windowed stopping rule.

    Stops once the largest |term| across the trailing window falls below
    tail_tol times the current |partial sum| (floored away from zero).
    Returns (total, last_n, tail_estimate, converged).
    """
    total = start
    comp = 0.0
    window = deque(maxlen=cfg.tail_window)
    used = 0
    converged = False
    for n, q_n, term in term_iter:
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        window.append(abs(term))
        if term_log is not None:
            term_log.append(
                SeriesTermLog(n=n, q_n=q_n, term_value=term, partial_sum=total)
            )
        used = n
        if len(window) == cfg.tail_window and max(window) < cfg.tail_tol * max(
            abs(total), 1e-300
        ):
            converged = True
            break
    tail = max(window) if window else 0.0
    return total, used, tail, converged


def factor_series(
    kind: FactorKind,
    p: RegionPair,
    cfg: SeriesConfig = SeriesConfig(),
    term_log=None,
) -> FactorResult:
    """Geometric factor by the fixed-node series.

    The expansion radius is r_ex = r + r2 + max(t_offset + dt2, 0) +
    rex_slack, the smallest radius through which no signal from outside can
    reach region 2 within the sampled window.  When r1 exceeds r_ex the
    region-1 ball is truncated to r1' = r_ex, which is exact for the factor
    but rescales the density normalization; the (r1'/r1)^3 volume factor
    restores it.
    """
    p.validate()
    s = Schedule(p.dt1, p.dt2, p.t_offset)
    r_ex = p.r + p.r2 + max(p.t_offset + p.dt2, 0.0) + cfg.rex_slack
    r1p = min(p.r1, r_ex)
    corr = (r1p / p.r1) ** 3
    weights = angular_weight(kind, p.theta, p.phi)
    prefac = corr * 9.0 / (2.0 * math.pi * r_ex * r1p * p.r2)
    g00 = _flat_monopole_coeff(s)
    head = corr * _flat_head(g00, r1p, p.r2, p.r) if 0 in weights else 0.0

    def nodes():
        for lo in range(1, cfg.n_max + 1, BLOCK):
            n = np.arange(lo, min(lo + BLOCK, cfg.n_max + 1))
            q = n * (math.pi / r_ex)
            acc = np.zeros_like(q)
            for l, w in sorted(weights.items()):
                rad = utilde(kind, l, q, s)
                if l == 0:
                    rad = rad - g00
                acc = acc + w * rad * sph_bessel(l, q * p.r)
            terms = prefac * sph_bessel(1, q * r1p) * sph_bessel(1, q * p.r2) * acc
            yield from zip(n.tolist(), q.tolist(), terms.tolist())

    total, used, tail, converged = _accumulate(nodes(), cfg, head, term_log)
    return FactorResult(
        value=total,
        terms_used=used,
        tail_estimate=tail,
        method=Method.SERIES_SIMPLE,
        converged=converged,
    )


def factor_series_general(
    kind: FactorKind,
    p: RegionPair,
    cfg: SeriesConfig = SeriesConfig(),
    term_log=None,
) -> FactorResult:
    """Geometric factor by the general-roots series.

    Each l channel runs over its own root table q_n = x_n^(l)/r_ex with
    r_ex = r + r1 + r2 + rex_slack and is truncated independently; the
    reported terms_used is the deepest node index across channels.
    """
    p.validate()
    s = Schedule(p.dt1, p.dt2, p.t_offset)
    r_ex = p.r + p.r1 + p.r2 + cfg.rex_slack
    weights = angular_weight(kind, p.theta, p.phi)
    g00 = _flat_monopole_coeff(s)
    totals = []
    used = 0
    tail = 0.0
    channel_status = []
    for l, w in sorted(weights.items()):
        roots = np.asarray(bessel_roots(l, cfg.n_max).roots)
        w_n = 0.5 * r_ex**3 * sph_bessel(l - 1, roots) ** 2
        chan_pref = (9.0 / (p.r1 * p.r2)) * (w / (4.0 * math.pi))

        def nodes():
            for lo in range(0, cfg.n_max, BLOCK):
                sl = slice(lo, min(lo + BLOCK, cfg.n_max))
                q = roots[sl] / r_ex
                bracket = _boundary_kernel(kind, l, q, r_ex, s)
                if l == 0:
                    bracket = bracket - g00
                terms = (
                    chan_pref
                    * (bracket / w_n[sl])
                    * sph_bessel(1, q * p.r1)
                    * sph_bessel(1, q * p.r2)
                    * sph_bessel(l, q * p.r)
                    / (q * q)
                )
                n = np.arange(lo + 1, sl.stop + 1)
                yield from zip(n.tolist(), q.tolist(), terms.tolist())

        total_l, used_l, tail_l, conv_l = _accumulate(nodes(), cfg, 0.0, term_log)
        totals.append(total_l)
        used = max(used, used_l)
        tail += tail_l
        channel_status.append((tail_l, conv_l))
    head = _flat_head(g00, p.r1, p.r2, p.r) if 0 in weights else 0.0
    value = head + math.fsum(totals)
    # a channel that sums to a structural near-zero never passes its own
    # relative stop; judge such channels against the combined magnitude
    scale = max(abs(value), 1e-300)
    converged = all(
        conv_l or tail_l <= cfg.tail_tol * scale for tail_l, conv_l in channel_status
    )
    return FactorResult(
        value=value,
        terms_used=used,
        tail_estimate=tail,
        method=Method.SERIES_GENERAL,
        converged=converged,
    )
