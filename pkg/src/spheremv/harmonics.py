"""Zonal spherical-harmonics transforms on S^{n-1}.

All zonal objects are reduced to one dimension via t = <axis, x>; the
inner product convention is <f, g> = omega_n^{-1} int f g dsigma, so the
normalized zonal harmonic Y_{l,0}(t) = A_l C_l^{(n-2)/2}(t) satisfies
<Y_{l,0}, Y_{l,0}> = 1.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .specfun import (
    QuadratureRule,
    gegenbauer_all,
    gegenbauer_eval,
    gegenbauer_norm_sq,
    gegenbauer_value_at_one,
    log_gamma,
)

__all__ = [
    "ZonalCoefficients",
    "ZonalProfile",
    "TripleProduct",
    "c_lambda",
    "decompose",
    "omega_n",
    "reconstruct",
    "sphere_integral",
    "triple_product_integral",
    "y_l0",
    "zonal_norm_constant",
]


def omega_n(n: int) -> float:
    """Surface measure of S^{n-1}: 2 pi^{n/2} / Gamma(n/2)."""
    if n < 2:
        raise ValueError(f"sphere dimension must be >= 2, got {n}")
    return 2.0 * math.pi ** (n / 2.0) / math.gamma(n / 2.0)


def c_lambda(lam: float) -> float:
    """Normalization constant of the weight: 1 / int (1-t^2)^{lam-1/2} dt."""
    if lam <= 0.0:
        raise ValueError(f"lam must be positive, got {lam}")
    return math.exp(log_gamma(lam + 1.0) - 0.5 * math.log(math.pi) - log_gamma(lam + 0.5))


def zonal_norm_constant(l: int, n: int) -> float:
    """A_l > 0 such that Y_{l,0} = A_l C_l^{(n-2)/2} has unit norm."""
    if l < 0 or n < 3:
        raise ValueError(f"need l >= 0 and n >= 3, got ({l}, {n})")
    lam = 0.5 * (n - 2)
    return 1.0 / math.sqrt(c_lambda(lam) * gegenbauer_norm_sq(l, lam))


def y_l0(l: int, n: int, t) :
    """Normalized zonal harmonic Y_{l,0}(t) = A_l C_l^{(n-2)/2}(t)."""
    return zonal_norm_constant(l, n) * gegenbauer_eval(l, 0.5 * (n - 2), t)


@dataclass(frozen=True)
class ZonalCoefficients:
    """Truncated spherical-harmonics decomposition (g_hat_k)_{k<=K}."""

    n: int
    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.coeffs, dtype=float)
        object.__setattr__(self, "coeffs", arr)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("coefficient array must be 1-D and nonempty")
        if not np.all(np.isfinite(arr)):
            raise ValueError("non-finite coefficient")

    @property
    def K(self) -> int:
        return self.coeffs.size - 1

    def to_json(self) -> str:
        return json.dumps(
            {"n": self.n, "K": self.K, "coeffs": [f"{c:.17g}" for c in self.coeffs]}
        )

    @classmethod
    def from_json(cls, text: str) -> "ZonalCoefficients":
        data = json.loads(text)
        return cls(n=int(data["n"]), coeffs=np.array([float(c) for c in data["coeffs"]]))

    def to_csv(self) -> str:
        lines = ["k,coeff"]
        lines += [f"{k},{c:.17g}" for k, c in enumerate(self.coeffs)]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str, n: int) -> "ZonalCoefficients":
        rows = [line for line in text.strip().splitlines()[1:] if line]
        coeffs = np.array([float(r.split(",")[1]) for r in rows])
        return cls(n=n, coeffs=coeffs)


@dataclass(frozen=True)
class ZonalProfile:
    """Samples of a zonal function g(t) on the nodes of a quadrature rule."""

    n: int
    rule: QuadratureRule
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.shape != self.rule.nodes.shape:
            raise ValueError(
                f"value count {vals.size} does not match rule order {self.rule.order}"
            )
        if not np.all(np.isfinite(vals)):
            raise ValueError("non-finite profile value")
        if self.n != self.rule.n:
            raise ValueError(f"profile dimension {self.n} != rule dimension {self.rule.n}")


def sphere_integral(profile: ZonalProfile) -> float:
    """Integral over S^{n-1} of the zonal function: omega_{n-1} * sum w_i g(t_i)."""
    return omega_n(profile.n - 1) * profile.rule.integrate(profile.values)


def decompose(profile: ZonalProfile, K: int) -> ZonalCoefficients:
    """Spherical harmonics decomposition of a zonal profile up to degree K.

    g_hat_k = c_lambda int g(t) C_k(t)/C_k(1) (1-t^2)^{(n-3)/2} dt, evaluated
    with the profile's quadrature rule, which must have order >= K + 2.
    """
    if profile.rule.order < K + 2:
        raise ValueError(
            f"quadrature order {profile.rule.order} insufficient for K={K} (need >= K+2)"
        )
    n = profile.n
    lam = 0.5 * (n - 2)
    table = gegenbauer_all(K, lam, profile.rule.nodes)
    at_one = np.array([gegenbauer_value_at_one(k, lam) for k in range(K + 1)])
    weighted = profile.rule.weights * profile.values
    coeffs = c_lambda(lam) * (table @ weighted) / at_one
    return ZonalCoefficients(n=n, coeffs=coeffs)


def reconstruct(coeffs: ZonalCoefficients, t_grid) -> np.ndarray:
    """Evaluate the truncated series sum_k g_hat_k (2k+n-2)/(n-2) C_k(t)."""
    t = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(np.abs(t) > 1.0 + 1e-14):
        raise ValueError("evaluation points must lie in [-1, 1]")
    n = coeffs.n
    lam = 0.5 * (n - 2)
    K = coeffs.K
    table = gegenbauer_all(K, lam, np.clip(t, -1.0, 1.0))
    factors = (2.0 * np.arange(K + 1) + n - 2.0) / (n - 2.0)
    return np.tensordot(coeffs.coeffs * factors, table, axes=1)


@dataclass(frozen=True)
class TripleProduct:
    """Resonance integral of Y_{l,0}^3 in the conventions the toolkit reports.

    one_d:      (A_l)^3 int C_l^3 (1-t^2)^{(n-3)/2} dt  (paper-style 1-D form)
    sigma:      full-sphere integral of Y_{l,0}^3 against dsigma
    normalized: same against omega_n^{-1} dsigma
    """

    l: int
    n: int
    one_d: float
    sigma: float
    normalized: float


def triple_product_integral(l: int, n: int) -> TripleProduct:
    """Quadrature value of the cubic self-resonance integral for Y_{l,0}."""
    if l < 0 or n < 3:
        raise ValueError(f"need l >= 0 and n >= 3, got ({l}, {n})")
    lam = 0.5 * (n - 2)
    rule = _cached_rule(n, max(2 * l + 4, 8))
    cl = gegenbauer_eval(l, lam, rule.nodes)
    cube = rule.integrate(cl**3)
    if l % 2 == 1:
        cube = 0.0  # odd integrand against an even weight
    a3 = zonal_norm_constant(l, n) ** 3
    one_d = a3 * cube
    sigma = omega_n(n - 1) * one_d
    return TripleProduct(l=l, n=n, one_d=one_d, sigma=sigma, normalized=sigma / omega_n(n))


_RULE_CACHE: dict[tuple[int, int], QuadratureRule] = {}


def _cached_rule(n: int, order: int) -> QuadratureRule:
    key = (n, order)
    if key not in _RULE_CACHE:
        from .specfun import gauss_jacobi_rule

        _RULE_CACHE[key] = gauss_jacobi_rule(n, order)
    return _RULE_CACHE[key]
