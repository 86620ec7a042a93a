"""Closed-form exponent arithmetic and the admissibility gates on (p, q).

Everything here is a pure function of a handful of reals.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

REL_TOL = 1e-12


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise DomainError(f"alpha must lie in (0, 1), got {alpha!r}")


def sigma_of(m: float, alpha: float) -> float:
    """Intrinsic time exponent ``2 + (1 - m) * alpha``.

    ``m = 1`` is accepted and returns the parabolic value 2.
    """
    _check_alpha(alpha)
    if m < 1.0:
        raise DomainError(f"m must be >= 1, got {m!r}")
    return 2.0 + (1.0 - m) * alpha


def barenblatt_exponents(m: float, d: int) -> tuple[float, float]:
    """Return ``(alpha_B, beta_B) = (d, 1) / (d (m - 1) + 2)``."""
    if m <= 1.0:
        raise DomainError(f"Barenblatt family needs m > 1, got {m!r}")
    if d < 1:
        raise DomainError(f"dimension must be >= 1, got {d!r}")
    denom = d * (m - 1.0) + 2.0
    return d / denom, 1.0 / denom


def q_lower_bound(p: float, m: float, d: int, gamma: float = 1.0) -> float:
    """Smallest admissible q for given p.

    ``gamma = 1`` is the default bound ``2 (3 - m) p / ((2 - m) p - d)``;
    other positive values give the relaxed family ``(1 + gamma)(3 - m) p / ...``.
    """
    denom = (2.0 - m) * p - d
    if denom <= 0.0:
        return math.inf
    return (1.0 + gamma) * (3.0 - m) * p / denom


def localization_margin(p: float, q: float, m: float, d: int, alpha: float) -> float:
    """``(sigma m - 2)/(m - 1) - d/p - sigma/q``, the exponent of the rescaled source norm."""
    if m <= 1.0:
        raise DomainError("localization margin is undefined for m <= 1")
    s = sigma_of(m, alpha)
    return (s * m - 2.0) / (m - 1.0) - d / p - s / q


def violated_conditions(p: float, q: float, m: float, d: int, gamma: float = 1.0) -> list[str]:
    """Names of the integrability inequalities that fail (empty when admissible)."""
    if not 1.0 < m < 2.0:
        raise DomainError(f"admissibility needs m in (1, 2), got {m!r}")
    if p < 1.0 or q < 1.0:
        raise DomainError("p and q must be >= 1")
    bad = []
    if not p > d / (2.0 - m):
        bad.append(f"p > d/(2-m) fails: p={p}, d/(2-m)={d / (2.0 - m)}")
    else:
        qmin = q_lower_bound(p, m, d, gamma)
        if not q >= qmin:
            bad.append(f"q >= (1+gamma)(3-m)p/((2-m)p-d) fails: q={q}, bound={qmin}")
    return bad


def admissible(p: float, q: float, m: float, d: int, gamma: float = 1.0) -> bool:
    """Check the source integrability conditions.

    Strict inequality for p, non-strict for q.  ``gamma`` selects the
    relaxed q-bound variant; the default 1 is the standard condition.
    """
    return not violated_conditions(p, q, m, d, gamma)


def heat_limit_excess(p: float, q: float, d: int) -> float:
    """``1 - d/p - 2/q``; positive exactly when the m -> 1 condition holds."""
    return 1.0 - d / p - 2.0 / q


@dataclass(frozen=True)
class ExponentConfig:
    m: float
    d: int
    alpha: float
    p: float = math.inf
    q: float = math.inf

    @property
    def sigma(self) -> float:
        return sigma_of(self.m, self.alpha)

    @property
    def is_admissible(self) -> bool:
        return admissible(self.p, self.q, self.m, self.d)

    def as_dict(self) -> dict:
        out = {"m": self.m, "d": self.d, "alpha": self.alpha, "p": self.p, "q": self.q,
               "sigma": self.sigma}
        if self.m > 1.0:
            a_b, b_b = barenblatt_exponents(self.m, self.d)
            out["barenblatt_alpha"] = a_b
            out["barenblatt_beta"] = b_b
            out["localization_margin"] = localization_margin(self.p, self.q, self.m, self.d,
                                                             self.alpha)
        if 1.0 < self.m < 2.0:
            out["admissible"] = self.is_admissible
            out["violations"] = violated_conditions(self.p, self.q, self.m, self.d)
            out["q_lower_bound"] = q_lower_bound(self.p, self.m, self.d)
        return out


@dataclass(frozen=True)
class UniversalConstants:
    C_approx: float
    alpha: float
    rho: float
    delta: float
    eps: float | None = None


def universal_rho_delta(C_approx: float, alpha: float, eps: float | None = None) -> UniversalConstants:
    """Cascade radius ``(1/(2C))^(1/(1-alpha))`` and proximity ``rho^alpha / 2``.

    With these choices ``delta + C rho = rho^alpha`` holds with equality.
    ``eps`` is carried along untouched; it is not derivable in closed form.
    """
    _check_alpha(alpha)
    if not C_approx > 0.0:
        raise DomainError(f"C_approx must be positive, got {C_approx!r}")
    rho = (1.0 / (2.0 * C_approx)) ** (1.0 / (1.0 - alpha))
    delta = rho ** alpha / 2.0
    closing = delta + C_approx * rho
    if closing > rho ** alpha * (1.0 + 1e-12):
        raise AssertionError("rho/delta choice does not close the oscillation bound")
    return UniversalConstants(C_approx=C_approx, alpha=alpha, rho=rho, delta=delta, eps=eps)
