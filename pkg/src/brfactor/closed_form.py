"""Exact geometric factors from closed-form moment integrals of four
spherical Bessel functions.

ji4(n; l1,l2,l3,l4; alpha,beta,gamma,delta) denotes the improper integral
over x in (0, inf) of x^(-n) j_l1(alpha x) j_l2(beta x) j_l3(gamma x)
j_l4(delta x).  For the signatures needed here it reduces to finite sums
over sign permutations of the arguments; each factor kind then becomes a
weighted sum of at most ten such integrals with step-gated coefficients
built from the corner lags of the sampling schedule.
"""

from __future__ import annotations

import math
import warnings

from .model import (
    FactorKind,
    FactorResult,
    Ji4Args,
    Method,
    RegionPair,
    ValidationError,
    reverse,
)
from .special_functions import angular_weight
from .time_averages import AvgKind, Schedule, finite_avg, heaviside

#: relative half-width of the band treated as exactly zero
ZERO_BAND_RTOL = 1e-12

#: a sign sum whose total is below this fraction of its largest term is
#: reported as cancellation-limited
CANCELLATION_RTOL = 1e-8


class UnsupportedSignatureError(ValueError):
    """Requested (n; l1..l4) moment integral has no closed form here."""


class CancellationWarning(RuntimeWarning):
    """A permutation sum lost more than ~8 digits to cancellation."""


def zr(x: float, scale: float) -> float:
    """Indicator of the zero band: 1 if |x| <= 1e-12*scale, else 0."""
    if scale <= 0.0:
        raise ValidationError(f"scale must be positive, got {scale}")
    return 1.0 if abs(x) <= ZERO_BAND_RTOL * scale else 0.0


# sign patterns for the permutation sums: the second argument alternates
# every term, the third every two terms, the fourth every four terms;
# four-term sums flip their last argument every two terms instead
_SIGNS8 = tuple(
    (1.0, (-1.0) ** n, (-1.0) ** (n // 2), (-1.0) ** (n // 4)) for n in range(8)
)
_SIGNS4 = tuple((1.0, (-1.0) ** n, (-1.0) ** (n // 2)) for n in range(4))


def _checked_sum(terms: list, context: str) -> float:
    total = math.fsum(terms)
    peak = max((abs(t) for t in terms), default=0.0)
    if peak > 0.0 and abs(total) < CANCELLATION_RTOL * peak:
        warnings.warn(
            f"{context}: permutation sum cancels to {total:.3e} "
            f"against largest term {peak:.3e}",
            CancellationWarning,
            stacklevel=4,
        )
    return total


def _ji4_1100_pair(a: float, b: float) -> float:
    # both remaining arguments zero: two-term sum, equals (pi/6) R_< / R_>^2
    terms = []
    for sa, sb, _ in _SIGNS4[:2]:
        an, bn = sa * a, sb * b
        terms.append(abs(an + bn) / (an * bn) * (an * an - an * bn + bn * bn))
    return math.pi / (12.0 * a * b) * _checked_sum(terms, "ji4(0;1,1,0,0) pair")


def _ji4_1100_three(a: float, b: float, c: float) -> float:
    # one argument zero: four-term sum with a signed-square kernel
    terms = []
    for sa, sb, sc in _SIGNS4:
        an, bn, cn = sa * a, sb * b, sc * c
        s = an + bn + cn
        terms.append(
            s
            * abs(s)
            / (an * bn * cn)
            * (3.0 * (an - bn) ** 2 + 2.0 * (an + bn) * cn - cn * cn)
        )
    return math.pi / (192.0 * a * b) * _checked_sum(terms, "ji4(0;1,1,0,0) three")


def _ji4_1100_full(a: float, b: float, c: float, d: float) -> float:
    terms = []
    for sa, sb, sc, sd in _SIGNS8:
        an, bn, cn, dn = sa * a, sb * b, sc * c, sd * d
        s = an + bn + cn + dn
        terms.append(
            abs(s) ** 3
            / (an * bn * cn * dn)
            * (4.0 * an * an + (4.0 * bn - cn - dn) * (-3.0 * an + bn + cn + dn))
        )
    return math.pi / (1920.0 * a * b) * _checked_sum(terms, "ji4(0;1,1,0,0) full")


def _ji4_1102_quad(a: float, b: float, d: float) -> float:
    # third argument zero; the fourth flips sign every two terms here
    terms = []
    for sa, sb, sd in _SIGNS4:
        an, bn, dn = sa * a, sb * b, sd * d
        s = an + bn + dn
        terms.append(
            s
            * abs(s)
            / (an * bn * dn)
            * (an + bn - dn) ** 2
            * (an * an - 4.0 * an * bn + bn * bn - dn * dn)
        )
    return -math.pi / (384.0 * a * b * d * d) * _checked_sum(
        terms, "ji4(0;1,1,0,2) quad"
    )


def _ji4_1102_full(a: float, b: float, c: float, d: float) -> float:
    terms = []
    for sa, sb, sc, sd in _SIGNS8:
        an, bn, cn, dn = sa * a, sb * b, sc * c, sd * d
        s = an + bn + cn + dn
        abc = an + bn + cn
        poly = (
            abc
            * (abc - 3.0 * dn)
            * (6.0 * an * an + (6.0 * bn - cn) * (-5.0 * an + bn + cn))
            + (
                8.0 * (an * an - 12.0 * an * bn + bn * bn)
                + 9.0 * (an + bn) * cn
                + cn * cn
            )
            * dn**2
            + (24.0 * (an + bn) - 11.0 * cn) * dn**3
            - 8.0 * dn**4
        )
        terms.append(abs(s) ** 3 / (an * bn * cn * dn) * poly)
    return -math.pi / (26880.0 * a * b * d * d) * _checked_sum(
        terms, "ji4(0;1,1,0,2) full"
    )


def _ji4_11m11_full(a: float, b: float, c: float, d: float) -> float:
    # the third (cosine-kernel) argument drops out of the denominators
    terms = []
    for sa, sb, sc, sd in _SIGNS8:
        an, bn, cn, dn = sa * a, sb * b, sc * c, sd * d
        s = an + bn + cn + dn
        poly = (
            5.0 * an**3
            - 3.0 * an * an * (5.0 * bn - 3.0 * cn + 5.0 * dn)
            + (-3.0 * an + bn + cn + dn)
            * (5.0 * bn * bn + (cn - 5.0 * dn) * (4.0 * bn - cn - dn))
        )
        terms.append(abs(s) ** 3 / (an * bn * dn) * poly)
    return -math.pi / (11520.0 * a * b * c * d) * _checked_sum(
        terms, "ji4(0;1,1,-1,1) full"
    )


def _ji4_n1_1101_quad(a: float, b: float, d: float) -> float:
    terms = []
    for sa, sb, sd in _SIGNS4:
        an, bn, dn = sa * a, sb * b, sd * d
        s = an + bn + dn
        poly = (
            an**3
            - 3.0 * an * (bn * bn - 4.0 * bn * dn + dn * dn)
            + (bn + dn) * (-3.0 * an * an + bn * bn - 4.0 * bn * dn + dn * dn)
        )
        terms.append(abs(s) ** 3 / (an * bn * dn) * poly)
    return -math.pi / (1152.0 * a * b * d) * _checked_sum(
        terms, "ji4(1;1,1,0,1) quad"
    )


def ji4(args: Ji4Args) -> float:
    """Closed-form moment integral for the supported signatures.

    Zero detection of gamma and delta uses the same band as `zr` with
    scale = max(alpha, beta, gamma, delta, 1); arguments inside the band
    route to the reduced sums, so boundary parameter sets (corner lags
    landing exactly on zero) evaluate without indeterminate forms.
    """
    a, b, c, d = args.alpha, args.beta, args.gamma, args.delta
    for name, v in (("alpha", a), ("beta", b), ("gamma", c), ("delta", d)):
        if not math.isfinite(v) or v < 0.0:
            raise ValidationError(f"{name} must be finite and >= 0, got {v!r}")
    if a == 0.0 or b == 0.0:
        raise ValidationError("alpha and beta must be positive")
    scale = max(a, b, c, d, 1.0)
    c_zero = zr(c, scale) == 1.0
    d_zero = zr(d, scale) == 1.0
    sig = (args.n, args.l1, args.l2, args.l3, args.l4)
    if sig == (0, 1, 1, 0, 0):
        if c_zero and d_zero:
            return _ji4_1100_pair(a, b)
        if d_zero:
            return _ji4_1100_three(a, b, c)
        if c_zero:
            # j0 is symmetric in its two slots, so swap delta into gamma
            return _ji4_1100_three(a, b, d)
        return _ji4_1100_full(a, b, c, d)
    if sig == (0, 1, 1, 0, 2):
        if d_zero:
            return 0.0  # trailing order > 0 with zero argument
        if c_zero:
            return _ji4_1102_quad(a, b, d)
        return _ji4_1102_full(a, b, c, d)
    if sig == (0, 1, 1, -1, 1):
        if d_zero:
            return 0.0
        if c_zero:
            raise UnsupportedSignatureError(
                "ji4(0;1,1,-1,1) needs gamma > 0; the gamma = 0 case uses "
                "signature (1;1,1,0,1) instead"
            )
        return _ji4_11m11_full(a, b, c, d)
    if sig == (1, 1, 1, 0, 1):
        if not c_zero:
            raise UnsupportedSignatureError(
                "ji4(1;1,1,0,1) is only available with gamma = 0"
            )
        if d_zero:
            return 0.0
        return _ji4_n1_1101_quad(a, b, d)
    raise UnsupportedSignatureError(f"no closed form for signature {sig}")


def _tau_values(s: Schedule) -> tuple:
    """(tau0, tau1, tau2, tau3, tau4) with tau0 = 0."""
    return (0.0,) + s.taus


def _g_coefficients(s: Schedule, l: int, zr_scales: tuple) -> tuple:
    """Step-gated coefficients g_i^(l), i = 0..4, of the closed-form sum.

    The i = 0 coefficients reuse the analytic time averages: -EpsTerm for
    l = 0, the endpoint-crossing count for l = 1, and the lag-0 overlap for
    l = 2.  For i >= 1 the coefficient is (-1)^(i+1) Theta(tau_i) tau_i,
    augmented by zr(tau_i) only for l = 1.
    """
    if l == 0:
        g0 = -finite_avg(AvgKind.EPS_TERM, 1.0, 0.0, s)
    elif l == 1:
        g0 = finite_avg(AvgKind.DELTA_PRIME_AT, 1.0, 0.0, s)
    elif l == 2:
        g0 = finite_avg(AvgKind.DELTA_AT, 1.0, 0.0, s)
    else:
        raise ValidationError(f"no coefficient set for l={l}")
    norm = s.dt1 * s.dt2
    sc = s.scale(0.0)
    out = [g0]
    for i, tau in enumerate(s.taus, start=1):
        sign = 1.0 if i % 2 == 1 else -1.0
        aug = zr(tau, zr_scales[i]) if l == 1 else 0.0
        out.append(sign * heaviside(tau, sc) * (tau + aug) / norm)
    return tuple(out)


def _ji4_args(l: int, p: RegionPair, tau: float, zr_scale: float) -> Ji4Args:
    base = dict(alpha=p.r1, beta=p.r2, gamma=tau, delta=p.r)
    if l in (0, 2):
        return Ji4Args(n=0, l1=1, l2=1, l3=0, l4=l, **base)
    # l = 1: the kernel switches form when the lag sits exactly at zero
    if zr(tau, zr_scale) == 1.0:
        return Ji4Args(n=1, l1=1, l2=1, l3=0, l4=1, **base)
    return Ji4Args(n=0, l1=1, l2=1, l3=-1, l4=1, **base)


def factor_closed(kind: FactorKind, p: RegionPair) -> FactorResult:
    """Geometric factor by the exact route: a finite sum of ji4 integrals."""
    p.validate()
    s = Schedule(p.dt1, p.dt2, p.t_offset)
    taus = _tau_values(s)
    zr_scales = tuple(max(p.r1, p.r2, p.r, abs(tau), 1.0) for tau in taus)
    weights = angular_weight(kind, p.theta, p.phi)
    pieces = []
    used = 0
    for l, w in sorted(weights.items()):
        g = _g_coefficients(s, l, zr_scales)
        for i in range(5):
            if g[i] == 0.0:
                continue
            value = ji4(_ji4_args(l, p, taus[i], zr_scales[i]))
            pieces.append(w * g[i] * value)
            used += 1
    total = 9.0 / (2.0 * math.pi**2 * p.r1 * p.r2) * math.fsum(pieces)
    return FactorResult(
        value=total,
        terms_used=used,
        tail_estimate=0.0,
        method=Method.CLOSED_FORM,
        converged=True,
    )


def coincident_axx(R0: float, dt0: float) -> float:
    """A_xx for two identical concentric regions with identical intervals.

    With kappa = dt0/R0 the value is
    -(1/(8 R0^4 kappa)) (4+kappa)(2-kappa)^2 Theta(2-kappa) - 1/(R0^4 kappa),
    reducing to -1/(R0^4 kappa) once kappa >= 2.
    """
    if R0 <= 0.0 or dt0 <= 0.0:
        raise ValidationError("R0 and dt0 must be positive")
    kappa = dt0 / R0
    gate = heaviside(2.0 - kappa, max(kappa, 1.0))
    r4 = R0**4
    return (
        -(1.0 / (8.0 * r4 * kappa)) * (4.0 + kappa) * (2.0 - kappa) ** 2 * gate
        - 1.0 / (r4 * kappa)
    )


def commutator_difference(kind: FactorKind, p: RegionPair) -> float:
    """Difference of the factor and its order-swapped partner.

    This is the geometric bracket of the two sampling orders; multiply by
    i*hbar (not done here) to get a physical commutator of averaged fields.
    """
    return factor_closed(kind, p).value - factor_closed(kind, reverse(p)).value
