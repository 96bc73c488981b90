"""Spherical Bessel functions j_l for l in {-1, 0, 1, 2}, their positive
roots, Fourier-Bessel weights, and the real angular weights that contract
the multipole sums of the three factor kinds.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .model import FactorKind

# Below this argument the trigonometric closed forms of j1, j2 lose digits
# to cancellation; switch to the Maclaurin polynomials there.
SMALL_X = 1.0

# coefficients of j_l(x)/x^l as a polynomial in x^2:
# (-1)^k / (2^k k! (2k + 2l + 1)!!)
_J1_POLY = (
    1.0 / 3.0,
    -1.0 / 30.0,
    1.0 / 840.0,
    -1.0 / 45360.0,
    1.0 / 3991680.0,
    -1.0 / 518918400.0,
    1.0 / 93405312000.0,
    -1.0 / 22230464256000.0,
)
_J2_POLY = (
    1.0 / 15.0,
    -1.0 / 210.0,
    1.0 / 7560.0,
    -1.0 / 498960.0,
    1.0 / 51891840.0,
    -1.0 / 7783776000.0,
    1.0 / 1587890304000.0,
    -1.0 / 422378820864000.0,
)


def _horner(coeffs: tuple, u):
    acc = np.full_like(u, coeffs[-1]) if np.ndim(u) else coeffs[-1]
    for c in coeffs[-2::-1]:
        acc = acc * u + c
    return acc


def _j0(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(x == 0.0, 1.0, np.sin(x) / np.where(x == 0.0, 1.0, x))
    return out


def _j1(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_X
    xs = np.where(small, 1.0, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = np.sin(xs) / xs**2 - np.cos(xs) / xs
    return np.where(small, x * _horner(_J1_POLY, x * x), direct)


def _j2(x):
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SMALL_X
    xs = np.where(small, 1.0, x)
    with np.errstate(invalid="ignore", divide="ignore"):
        direct = (3.0 / xs**3 - 1.0 / xs) * np.sin(xs) - 3.0 * np.cos(xs) / xs**2
    return np.where(small, x * x * _horner(_J2_POLY, x * x), direct)


def _jm1(x):
    x = np.asarray(x, dtype=float)
    return np.cos(x) / x


_J_FUNCS = {-1: _jm1, 0: _j0, 1: _j1, 2: _j2}


def sph_bessel(l: int, x) -> float:
    """j_l(x) for l in {-1, 0, 1, 2}; scalars in, scalar out; arrays pass through.

    j_{-1}(x) = cos(x)/x requires x > 0.  The limits j_l(0) = delta_{0l}
    hold for l >= 0.
    """
    if l not in _J_FUNCS:
        raise ValueError(f"unsupported order l={l}, expected -1, 0, 1 or 2")
    if l == -1 and np.any(np.asarray(x) == 0.0):
        raise ValueError("j_{-1} is singular at x = 0")
    out = _J_FUNCS[l](x)
    if np.ndim(x) == 0:
        return float(out)
    return out


def _sph_bessel_deriv(l: int, x: float) -> float:
    # j_l'(x) = j_{l-1}(x) - (l+1)/x * j_l(x)
    return float(_J_FUNCS[l - 1](x)) - (l + 1) / x * float(_J_FUNCS[l](x))


def _refine_root(l: int, lo: float, hi: float) -> float:
    """Newton iteration on j_l safeguarded by the bracket (lo, hi)."""
    x = 0.5 * (lo + hi)
    for _ in range(100):
        f = float(_J_FUNCS[l](x))
        df = _sph_bessel_deriv(l, x)
        step = f / df if df != 0.0 else 0.0
        x_new = x - step
        if not (lo < x_new < hi):
            # bisect using the sign of f against the sign at lo
            f_lo = float(_J_FUNCS[l](lo))
            if (f < 0.0) == (f_lo < 0.0):
                lo = x
            else:
                hi = x
            x_new = 0.5 * (lo + hi)
        if abs(x_new - x) <= 1e-15 * x:
            return x_new
        x = x_new
    return x


@dataclass(frozen=True)
class BesselRootTable:
    """Ascending positive roots x with j_l(x) = 0."""

    l: int
    roots: tuple
    count: int


@functools.lru_cache(maxsize=None)
def _roots_tuple(l: int, count: int) -> tuple:
    if l == 0:
        return tuple(n * math.pi for n in range(1, count + 1))
    lower = _roots_tuple(l - 1, count + 1)
    # Roots of consecutive orders interlace: exactly one root of j_l lies
    # between consecutive roots of j_{l-1}.
    eps = 1e-9
    return tuple(
        _refine_root(l, lower[n] + eps, lower[n + 1] - eps) for n in range(count)
    )


def bessel_roots(l: int, count: int) -> BesselRootTable:
    """First `count` positive roots of j_l, l in {0, 1, 2}, to 1e-14 relative."""
    if l not in (0, 1, 2):
        raise ValueError(f"root tables exist for l in {{0, 1, 2}}, got {l}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    return BesselRootTable(l=l, roots=_roots_tuple(l, count), count=count)


def fb_weight(l: int, root: float, r_ex: float) -> float:
    """Fourier-Bessel weight w_n for a root of j_l scaled so q = root/r_ex.

    At a root of j_l the derivative reduces to j_{l-1}, so
    w = (r_ex**3 / 2) * j_{l-1}(root)**2; for l = 0 and root = n*pi this is
    r_ex**3 / (2 n**2 pi**2).
    """
    return 0.5 * r_ex**3 * float(_J_FUNCS[l - 1](root)) ** 2


def angular_weight(kind: FactorKind, theta: float, phi: float) -> dict:
    """Per-l real angular coefficients W_l(theta, phi) for the given kind.

    These are the pre-reduced real combinations of the multipole constants
    with the spherical harmonics of the displacement direction: the m = +-2
    pairs collapse to cos(2*phi) (A_xx) and sin(2*phi) (A_xy) terms, the
    dipole to cos(theta).  All three routes and the numeric oracle contract
    their radial sums against these same weights.
    """
    if kind is FactorKind.AXX:
        st2 = math.sin(theta) ** 2
        ct2 = math.cos(theta) ** 2
        return {
            0: 8.0 * math.pi / 3.0,
            2: 2.0 * math.pi * st2 * math.cos(2.0 * phi)
            - (2.0 * math.pi / 3.0) * (3.0 * ct2 - 1.0),
        }
    if kind is FactorKind.AXY:
        st2 = math.sin(theta) ** 2
        return {2: 2.0 * math.pi * st2 * math.sin(2.0 * phi)}
    if kind is FactorKind.BXY:
        return {1: -4.0 * math.pi * math.cos(theta)}
    raise ValueError(f"unknown factor kind {kind!r}")
