"""
Measure Module

Lebesgue measures used by the samplers and the rewiring radius: the unit n-ball,
the Gauss hypergeometric series, the two-cap lens of a priority region and the
prolate hyperspheroid of an informed set.
"""

import math

SERIES_TOLERANCE = 1e-12
SERIES_MAX_TERMS = 100_000


class MeasureDomainError(ValueError):
    """Raised when a measure is requested outside its domain."""
    pass


class NumericalError(ArithmeticError):
    """Raised when a series fails to converge."""
    pass


def unit_ball_measure(n: int) -> float:
    """
    Volume of the unit n-ball, π^{n/2} / Γ(n/2 + 1).

    Raises:
        MeasureDomainError: If n < 1
    """
    if n < 1:
        raise MeasureDomainError(f"Unit ball needs n >= 1, got {n}")
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def _non_positive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gauss_2f1(a: float, b: float, c: float, z: float) -> float:
    """
    Gauss hypergeometric function ₂F₁(a, b; c; z) by its power series.

    The series stops when a term falls below 1e-12 of the running sum, and exactly
    when a or b is a non-positive integer (the series is then a polynomial).

    Args:
        a, b, c: Parameters; c must not be a non-positive integer
        z: Argument with |z| < 1

    Returns:
        The series value

    Raises:
        MeasureDomainError: For invalid c or |z| >= 1
        NumericalError: If the series has not converged after 10^5 terms
    """
    if _non_positive_integer(c):
        raise MeasureDomainError(f"c must not be a non-positive integer, got {c}")
    if abs(z) >= 1.0:
        raise MeasureDomainError(f"Series requires |z| < 1, got {z}")

    total = 1.0
    term = 1.0
    for k in range(SERIES_MAX_TERMS):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1)) * z
        if term == 0.0:
            return total
        total += term
        if abs(term) <= SERIES_TOLERANCE * abs(total):
            return total
    raise NumericalError(
        f"2F1({a}, {b}; {c}; {z}) did not converge within {SERIES_MAX_TERMS} terms"
    )


def priority_region_measure(n: int, c: float, *, legacy_exponent: bool = False) -> float:
    """
    Measure of the lens B(x_s, c) ∩ B(x_t, c) for |x_s − x_t| = c.

    The lens is two hyperspherical caps of height h = c/2 on balls of radius r = c.
    The hypergeometric second parameter is (1 − n)/2, which reproduces the exact
    2-D lens and 3-D two-cap volumes. ``legacy_exponent=True`` evaluates the
    alternative form with 1 − n/2 (kept for comparison; it undercounts, e.g.
    π − 2 instead of 2π/3 − √3/2 at n = 2, c = 1).

    Args:
        n: Dimension (>= 2)
        c: Edge length (> 0)

    Returns:
        Lens volume, proportional to c^n

    Raises:
        MeasureDomainError: If n < 2 or c <= 0
    """
    if n < 2:
        raise MeasureDomainError(f"Priority region needs n >= 2, got {n}")
    if not c > 0.0:
        raise MeasureDomainError(f"Priority region needs c > 0, got {c}")
    r = c
    h = c / 2.0
    ratio = (r - h) / r
    b = (1.0 - n / 2.0) if legacy_exponent else (1.0 - n) / 2.0
    gamma_ratio = math.gamma(1.0 + n / 2.0) / (math.sqrt(math.pi) * math.gamma((n + 1) / 2.0))
    cap_fraction = 0.5 - ratio * gamma_ratio * gauss_2f1(0.5, b, 1.5, ratio * ratio)
    return 2.0 * unit_ball_measure(n) * r**n * cap_fraction


def informed_set_measure(n: int, c_min: float, c_best: float) -> float:
    """
    Volume of the prolate hyperspheroid with focal distance c_min and transverse
    diameter c_best; infinite when no solution bounds the set.
    """
    if math.isinf(c_best):
        return math.inf
    if c_best < c_min:
        return 0.0
    conjugate = math.sqrt(max(c_best * c_best - c_min * c_min, 0.0)) / 2.0
    return unit_ball_measure(n) * (c_best / 2.0) * conjugate ** (n - 1)
