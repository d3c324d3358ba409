"""Closed-form effective conductivities of the doubly coated sphere assemblage.

A representative sphere has a core of radius ``r1`` (conductivity
``sigma1``), an interphase shell ``r1 < r < r2`` (``sigma2``) and an outer
coating ``r2 < r < r3`` (``sigma3``).  The reference composite removes the
interphase and lets the coating extend down to the core, keeping the core
fraction ``theta1`` fixed, so the interphase thickness is ``h = r2 - r1``.

Laminate formulas live here too; they serve as oracles for the interface
shift engine and the periodic solver.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class DomainError(ValueError):
    """Inputs outside the domain where a closed form is defined."""


class IntermediateConductivityWarning(UserWarning):
    """Interphase conductivity far outside the range of its neighbours."""


FRACTION_TOL = 1e-12
# band of interphase conductivities the first-order correction is meant for
INTERMEDIATE_FACTOR = 10.0


@dataclass(frozen=True)
class AssemblageSpec:
    r1: float
    r2: float
    r3: float
    sigma1: float
    sigma2: float
    sigma3: float

    def __post_init__(self):
        if not (0 < self.r1 <= self.r2 <= self.r3):
            raise DomainError(f"radii must satisfy 0 < r1 <= r2 <= r3, got {self.r1}, {self.r2}, {self.r3}")
        for name in ("sigma1", "sigma2", "sigma3"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be positive, got {getattr(self, name)}")

    @property
    def h(self) -> float:
        return self.r2 - self.r1

    @classmethod
    def from_fractions(cls, r1, r3, theta2, sigma1, sigma2, sigma3) -> "AssemblageSpec":
        return cls(r1, radius_from_fraction(r1, r3, theta2), r3, sigma1, sigma2, sigma3)


@dataclass(frozen=True)
class VolumeFractions:
    theta1: float
    theta2: float
    theta3: float

    def __post_init__(self):
        vals = (self.theta1, self.theta2, self.theta3)
        if min(vals) < 0 or abs(sum(vals) - 1.0) > FRACTION_TOL:
            raise DomainError(f"volume fractions must be nonnegative and sum to 1, got {vals}")

    def __iter__(self):
        return iter((self.theta1, self.theta2, self.theta3))


def volume_fractions(spec: AssemblageSpec) -> VolumeFractions:
    """Core, interphase and coating volume fractions of a doubly coated sphere."""
    a = (spec.r1 / spec.r3) ** 3
    b = (spec.r2 / spec.r3) ** 3
    return VolumeFractions(a, b - a, 1.0 - b)


def radius_from_fraction(r1: float, r3: float, theta2: float) -> float:
    """Interphase outer radius ``r2`` giving interphase fraction ``theta2``."""
    if not (0 < r1 <= r3):
        raise DomainError(f"radii must satisfy 0 < r1 <= r3, got {r1}, {r3}")
    theta_max = 1.0 - (r1 / r3) ** 3
    if not (0.0 <= theta2 <= theta_max):
        raise DomainError(f"interphase fraction {theta2} outside feasible range [0, {theta_max}]")
    return (theta2 * r3 ** 3 + r1 ** 3) ** (1.0 / 3.0)


def _check_positive(**kw):
    for name, val in kw.items():
        if not (val > 0 and math.isfinite(val)):
            raise DomainError(f"{name} must be positive and finite, got {val}")


def _check_fraction(name, val):
    if not (-FRACTION_TOL <= val <= 1 + FRACTION_TOL):
        raise DomainError(f"{name} must lie in [0, 1], got {val}")


def is_intermediate(sigma1: float, sigma2: float, sigma3: float) -> bool:
    lo = min(sigma1, sigma3) / INTERMEDIATE_FACTOR
    hi = max(sigma1, sigma3) * INTERMEDIATE_FACTOR
    return lo <= sigma2 <= hi


def _coated_sphere(core: float, coat: float, f: float) -> float:
    """Singly coated sphere, printed continued-fraction form.

    ``coat + 3 coat f / (1 - f - 3 coat / (coat - core))``; equal phases are
    the removable singularity and return ``coat``.
    """
    if core == coat or f == 0.0:
        return coat
    return coat + 3 * coat * f / (1 - f - 3 * coat / (coat - core))


def exact_sigma_star(spec_or_sigma1, sigma2=None, sigma3=None, theta1=None, theta2=None) -> float:
    """Exact effective conductivity of the doubly coated sphere assemblage.

    Call with an :class:`AssemblageSpec` or with
    ``(sigma1, sigma2, sigma3, theta1, theta2)``.
    """
    if isinstance(spec_or_sigma1, AssemblageSpec):
        spec = spec_or_sigma1
        t1, t2, t3 = volume_fractions(spec)
        s1, s2, s3 = spec.sigma1, spec.sigma2, spec.sigma3
    else:
        s1, s2, s3, t1, t2 = spec_or_sigma1, sigma2, sigma3, theta1, theta2
        _check_positive(sigma1=s1, sigma2=s2, sigma3=s3)
        _check_fraction("theta1", t1)
        _check_fraction("theta2", t2)
        t3 = 1.0 - t1 - t2
        _check_fraction("theta3", t3)

    inner_total = 1.0 - t3
    if inner_total == 0.0:
        return s3
    # core + interphase form a coated sphere of core fraction t1 / (t1 + t2)
    if s2 == s1:
        # merged core: printed inner denominator is singular here
        sigma_in = s1
    else:
        denom = t2 - 3 * s2 * inner_total / (s2 - s1)
        if denom == 0.0:
            raise DomainError("zero denominator in the interphase level of the exact formula")
        sigma_in = s2 + 3 * s2 * t1 / denom
    if sigma_in == s3 or t3 == 0.0:
        return sigma_in if t3 == 0.0 else s3
    outer = t3 - 3 * s3 / (s3 - sigma_in)
    if outer == 0.0:
        raise DomainError("zero denominator in the coating level of the exact formula")
    return s3 + 3 * s3 * inner_total / outer


def reference_sigma_star(sigma1: float, sigma3: float, theta1: float) -> float:
    """Effective conductivity of the reference (singly coated) assemblage."""
    _check_positive(sigma1=sigma1, sigma3=sigma3)
    _check_fraction("theta1", theta1)
    return _coated_sphere(sigma1, sigma3, theta1)


def delta_sigma_first_order(sigma1, sigma2, sigma3, theta1, r1, h) -> float:
    """First-order change of the assemblage conductivity from a thin interphase.

    This is ``h * d(sigma*)/dh`` at ``h = 0`` with ``r1`` and ``theta1``
    held fixed.  The expression blows up like ``1/sigma2`` for a very
    resistive interphase, where first order stops being meaningful.
    """
    _check_positive(sigma1=sigma1, sigma3=sigma3, r1=r1)
    if not sigma2 > 0:
        raise DomainError(f"interphase conductivity must be positive (formula divides by it), got {sigma2}")
    if h < 0:
        raise DomainError(f"interphase thickness must be nonnegative, got {h}")
    _check_fraction("theta1", theta1)
    num = -9 * sigma3 * theta1 * (sigma3 - sigma2) * (sigma1 ** 2 + 2 * sigma2 * sigma3)
    den = r1 * sigma2 * ((sigma3 - sigma1) * theta1 + sigma1 + 2 * sigma3) ** 2
    return h * num / den


def approx_sigma_star(sigma1, sigma2, sigma3, theta1, r1, h, warn=True) -> float:
    """Reference value plus first-order interphase correction."""
    if warn and sigma2 > 0 and not is_intermediate(sigma1, sigma2, sigma3):
        warnings.warn(
            f"sigma2={sigma2:g} is outside the intermediate band for sigma1={sigma1:g}, sigma3={sigma3:g}",
            IntermediateConductivityWarning, stacklevel=2)
    return reference_sigma_star(sigma1, sigma3, theta1) + delta_sigma_first_order(
        sigma1, sigma2, sigma3, theta1, r1, h)


def high_contrast_limit(sigma1, sigma3, theta3, product_theta2_sigma2) -> float:
    """Thin, highly conducting interphase: theta2 -> 0 with theta2*sigma2 fixed."""
    _check_positive(sigma1=sigma1, sigma3=sigma3)
    _check_fraction("theta3", theta3)
    c = product_theta2_sigma2
    if c < 0:
        raise DomainError(f"theta2*sigma2 must be nonnegative, got {c}")
    inner_total = 1.0 - theta3
    if inner_total == 0.0:
        return sigma3
    mid = sigma3 - sigma1 - 2 * c / (3 * inner_total)
    if mid == 0.0:
        return sigma3
    outer = theta3 - 3 * sigma3 / mid
    if outer == 0.0:
        raise DomainError("zero denominator in the high-contrast limit formula")
    return sigma3 + 3 * inner_total * sigma3 / outer


def low_contrast_limit(sigma1, sigma3, theta3, ratio_sigma2_over_theta2) -> float:
    """Thin, poorly conducting interphase: theta2 -> 0 with sigma2/theta2 fixed.

    ``ratio = inf`` removes the resistive term.
    """
    _check_positive(sigma1=sigma1, sigma3=sigma3)
    _check_fraction("theta3", theta3)
    ratio = ratio_sigma2_over_theta2
    if not ratio > 0:
        raise DomainError(f"sigma2/theta2 must be positive, got {ratio}")
    inner_total = 1.0 - theta3
    if inner_total == 0.0:
        return sigma3
    resist = 0.0 if math.isinf(ratio) else 1.0 / (inner_total * ratio)
    sigma_in = 3.0 / (3.0 / sigma1 + resist)
    mid = sigma3 - sigma_in
    if mid == 0.0:
        return sigma3
    outer = theta3 - 3 * sigma3 / mid
    if outer == 0.0:
        raise DomainError("zero denominator in the low-contrast limit formula")
    return sigma3 + 3 * inner_total * sigma3 / outer


def laminate_sigma_star(conductivities: Sequence[float], fractions: Sequence[float],
                        orientation: str) -> float:
    """Effective conductivity of a layered medium.

    ``parallel`` is the field along the layers (arithmetic mean),
    ``perpendicular`` is the field across them (harmonic mean).
    """
    s = np.asarray(conductivities, dtype=float)
    f = np.asarray(fractions, dtype=float)
    if s.shape != f.shape or s.ndim != 1 or s.size == 0:
        raise DomainError("need one fraction per conductivity")
    if np.any(s <= 0):
        raise DomainError("conductivities must be positive")
    if np.any(f < 0) or abs(math.fsum(f.tolist()) - 1.0) > FRACTION_TOL:
        raise DomainError(f"fractions must be nonnegative and sum to 1, got sum {f.sum()!r}")
    if orientation == "parallel":
        return math.fsum((f * s).tolist())
    if orientation == "perpendicular":
        return 1.0 / math.fsum((f / s).tolist())
    raise DomainError(f"orientation must be 'parallel' or 'perpendicular', got {orientation!r}")
