"""Domain types shared by all computation routes.

A factor is evaluated for a pair of space-time regions: two spheres of
radii R1 and R2 whose centres are separated by a displacement vector with
spherical coordinates (R, theta, phi), observed over the time intervals
(0, dt1) and (T, T + dt2).  Units are such that c = 1 and all lengths and
times share one common unit; factor values then carry dimension
length**-4.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, replace

TWO_PI = 2.0 * math.pi


class ValidationError(ValueError):
    """Raised when a parameter set violates its domain constraints."""


class FactorKind(enum.Enum):
    """Which geometric factor is being computed."""

    AXX = "axx"
    AXY = "axy"
    BXY = "bxy"


class Method(enum.Enum):
    """Computation route used to produce a FactorResult."""

    CLOSED_FORM = "closed"
    SERIES_SIMPLE = "series"
    SERIES_GENERAL = "series-general"
    FOURIER_NUMERIC = "numeric"


@dataclass(frozen=True)
class RegionPair:
    """Full geometric and temporal parameter set of two space-time regions.

    theta and phi locate the centre of sphere II relative to sphere I;
    they are ignored by every route when r == 0.  T may have any sign and
    the two time intervals may overlap arbitrarily.
    """

    r1: float
    r2: float
    r: float = 0.0
    theta: float = 0.0
    phi: float = 0.0
    dt1: float = 1.0
    dt2: float = 1.0
    t_offset: float = 0.0

    def validate(self) -> None:
        for name in ("r1", "r2", "r", "theta", "phi", "dt1", "dt2", "t_offset"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.r1 <= 0.0 or self.r2 <= 0.0:
            raise ValidationError(f"radii must be positive, got r1={self.r1}, r2={self.r2}")
        if self.dt1 <= 0.0 or self.dt2 <= 0.0:
            raise ValidationError(f"durations must be positive, got dt1={self.dt1}, dt2={self.dt2}")
        if self.r < 0.0:
            raise ValidationError(f"separation must be nonnegative, got r={self.r}")

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def to_dict(self) -> dict:
        return {
            "r1": self.r1,
            "r2": self.r2,
            "r": self.r,
            "theta": self.theta,
            "phi": self.phi,
            "dt1": self.dt1,
            "dt2": self.dt2,
            "t_offset": self.t_offset,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegionPair":
        return cls(**{k: float(data[k]) for k in (
            "r1", "r2", "r", "theta", "phi", "dt1", "dt2", "t_offset")})

    @classmethod
    def from_json(cls, text: str) -> "RegionPair":
        return cls.from_dict(json.loads(text))


def normalize(params: RegionPair) -> RegionPair:
    """Fold angles into theta in [0, pi], phi in [0, 2*pi); validate the rest.

    The fold preserves the direction the angles describe: a polar angle
    outside [0, pi] is reflected and phi is advanced by pi accordingly.
    """
    params.validate()
    theta = math.fmod(params.theta, TWO_PI)
    if theta < 0.0:
        theta += TWO_PI
    phi = params.phi
    if theta > math.pi:
        theta = TWO_PI - theta
        phi += math.pi
    phi = math.fmod(phi, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:  # adding 2*pi to a tiny negative rounds up to 2*pi itself
        phi = 0.0
    return replace(params, theta=theta, phi=phi)


def reverse(params: RegionPair) -> RegionPair:
    """Parameter set of the reversed factor.

    Swaps the roles of the two regions: radii and durations are
    interchanged, the displacement direction is inverted (theta -> pi -
    theta, phi -> phi + pi) and the time offset is negated.  Applying
    reverse twice recovers the original parameters (up to angle rounding
    at machine precision).
    """
    return normalize(RegionPair(
        r1=params.r2,
        r2=params.r1,
        r=params.r,
        theta=math.pi - params.theta,
        phi=params.phi + math.pi,
        dt1=params.dt2,
        dt2=params.dt1,
        t_offset=-params.t_offset,
    ))


@dataclass(frozen=True)
class SeriesConfig:
    """Expansion-radius policy and truncation controls for the series routes.

    rex_slack is added to the minimal legal expansion radius; results must
    not depend on it beyond the convergence tolerance.  The series stops
    once the largest term magnitude over the trailing tail_window terms
    falls below tail_tol times the current partial sum magnitude.
    """

    rex_slack: float = 0.0
    n_max: int = 2000
    tail_tol: float = 1e-6
    tail_window: int = 20

    def __post_init__(self) -> None:
        if self.rex_slack < 0.0:
            raise ValidationError(f"rex_slack must be >= 0, got {self.rex_slack}")
        if not (self.n_max >= self.tail_window >= 1):
            raise ValidationError(
                f"need n_max >= tail_window >= 1, got {self.n_max}, {self.tail_window}")
        if self.tail_tol <= 0.0:
            raise ValidationError(f"tail_tol must be positive, got {self.tail_tol}")


@dataclass(frozen=True)
class FactorResult:
    """A factor value (units length**-4) with convergence diagnostics."""

    value: float
    terms_used: int
    tail_estimate: float
    method: Method
    converged: bool


@dataclass(frozen=True)
class Ji4Args:
    """Signature (n; l1..l4; alpha, beta, gamma, delta) of a four-Bessel integral.

    Supported (n; l) combinations: (0; 1,1,0,0), (0; 1,1,0,2),
    (0; 1,1,-1,1) and (1; 1,1,0,1).  Parameters are nonnegative; alpha and
    beta must be positive.
    """

    n: int
    l1: int
    l2: int
    l3: int
    l4: int
    alpha: float
    beta: float
    gamma: float
    delta: float
