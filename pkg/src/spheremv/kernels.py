"""Built-in interaction-kernel families and their spectral decompositions.

Four named families are supported, each with a closed-form zonal
decomposition evaluated through log-Gamma differences (signs tracked via
gammasgn, so Gamma poles map cleanly to vanishing coefficients):

  transformer(beta): W(t) = -(1/beta) exp(beta t)
  onsager:           W(t) = sqrt(1 - t^2)
  opinion(p):        W(t) = -(1 + t)^p
  heat(eps):         minus the hyperspherical heat kernel at time eps

A custom kernel is any profile g(t) satisfying the weighted integrability
condition; its coefficients come from quadrature.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.special import gammasgn

from .harmonics import ZonalCoefficients, ZonalProfile, decompose
from .specfun import (
    bessel_i,
    gauss_jacobi_rule,
    gegenbauer_all,
    log_gamma,
)

__all__ = [
    "KernelSpec",
    "StabilityReport",
    "closed_form_coefficients",
    "coefficients",
    "convexity_threshold",
    "kernel_spec_from_json",
    "profile_values",
    "profile_derivative",
    "stability_check",
]

_FAMILIES = ("transformer", "onsager", "opinion", "heat", "custom")

# Truncation used when a family needs a series representation of its profile.
_SERIES_TAIL_TOL = 1e-18


@dataclass(frozen=True)
class KernelSpec:
    """Rotationally symmetric interaction kernel W(<x, y>) on S^{n-1}."""

    n: int
    family: str
    beta: Optional[float] = None
    p: Optional[float] = None
    epsilon: Optional[float] = None
    profile: Optional[Callable[[np.ndarray], np.ndarray]] = None
    profile_derivative: Optional[Callable[[np.ndarray], np.ndarray]] = None
    derivative_bound: Optional[float] = None

    def __post_init__(self):
        if self.n < 3:
            raise ValueError(f"sphere dimension must be >= 3, got {self.n}")
        if self.family not in _FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "transformer" and not (self.beta and self.beta > 0):
            raise ValueError("transformer kernel requires beta > 0")
        if self.family == "opinion" and not (self.p and self.p > 0):
            raise ValueError("opinion kernel requires p > 0")
        if self.family == "heat" and not (self.epsilon and self.epsilon > 0):
            raise ValueError("heat kernel requires epsilon > 0")
        if self.family == "custom" and self.profile is None:
            raise ValueError("custom kernel requires a profile")


def kernel_spec_from_json(data) -> KernelSpec:
    """Build a KernelSpec from a JSON string, dict, or file path."""
    if isinstance(data, str):
        try:
            obj = json.loads(data)
        except json.JSONDecodeError:
            with open(data, "r", encoding="utf-8") as fh:
                obj = json.load(fh)
    else:
        obj = data
    family = obj["family"]
    profile = None
    deriv = None
    if family == "custom":
        table = np.asarray(obj["profile"], dtype=float)
        if table.ndim != 2 or table.shape[1] != 2:
            raise ValueError("custom profile table must be rows of [t, g(t)]")
        spline = CubicSpline(table[:, 0], table[:, 1])
        profile = spline
        deriv = spline.derivative()
    return KernelSpec(
        n=int(obj["n"]),
        family=family,
        beta=obj.get("beta"),
        p=obj.get("p"),
        epsilon=obj.get("epsilon"),
        profile=profile,
        profile_derivative=deriv,
        derivative_bound=obj.get("derivative_bound"),
    )


def _heat_series_coeffs(n: int, eps: float) -> np.ndarray:
    """Coefficients -Gamma(n/2)/(2 sqrt(pi^n)) exp(-k(k+n-2) eps), truncated."""
    amp = math.gamma(n / 2.0) / (2.0 * math.pi ** (n / 2.0))
    ks = [0]
    while True:
        k = ks[-1] + 1
        if math.exp(-k * (k + n - 2.0) * eps) < _SERIES_TAIL_TOL:
            break
        ks.append(k)
        if k > 400:
            break
    k_arr = np.arange(ks[-1] + 1, dtype=float)
    return -amp * np.exp(-k_arr * (k_arr + n - 2.0) * eps)


def profile_values(spec: KernelSpec, t) -> np.ndarray:
    """Evaluate the kernel profile W(t)."""
    t = np.asarray(t, dtype=float)
    if spec.family == "transformer":
        return -np.exp(spec.beta * t) / spec.beta
    if spec.family == "onsager":
        return np.sqrt(np.clip(1.0 - t * t, 0.0, None))
    if spec.family == "opinion":
        return -((1.0 + t) ** spec.p)
    if spec.family == "heat":
        coeffs = _heat_series_coeffs(spec.n, spec.epsilon)
        from .harmonics import reconstruct

        return reconstruct(ZonalCoefficients(n=spec.n, coeffs=coeffs), t)
    return np.asarray(spec.profile(t), dtype=float)


# Clamp for singular derivatives (Onsager at |t| = 1); the event is rare
# under the dynamics and the clamp width is far below quadrature resolution.
_DERIV_CLIP = 1e-9


def profile_derivative(spec: KernelSpec, t) -> np.ndarray:
    """Evaluate W'(t), clamping t away from +-1 when the derivative is singular."""
    t = np.asarray(t, dtype=float)
    if spec.family == "transformer":
        return -np.exp(spec.beta * t)
    if spec.family == "onsager":
        tc = np.clip(t, -1.0 + _DERIV_CLIP, 1.0 - _DERIV_CLIP)
        return -tc / np.sqrt(1.0 - tc * tc)
    if spec.family == "opinion":
        tc = np.clip(t, -1.0 + _DERIV_CLIP, None) if spec.p < 1.0 else t
        return -spec.p * (1.0 + tc) ** (spec.p - 1.0)
    if spec.family == "heat":
        return _heat_derivative(spec, t, order=1)
    if spec.profile_derivative is not None:
        return np.asarray(spec.profile_derivative(t), dtype=float)
    raise ValueError("custom kernel has no derivative; supply profile_derivative")


def _heat_derivative(spec: KernelSpec, t, order: int) -> np.ndarray:
    """Derivative of the heat-kernel series via d/dt C_k^lam = 2 lam C_{k-1}^{lam+1}."""
    n = spec.n
    lam = 0.5 * (n - 2)
    coeffs = _heat_series_coeffs(n, spec.epsilon)
    K = coeffs.size - 1
    factors = coeffs * (2.0 * np.arange(K + 1) + n - 2.0) / (n - 2.0)
    scale = 1.0
    for m in range(order):
        scale *= 2.0 * (lam + m)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    if K < order:
        return np.zeros_like(t)
    table = gegenbauer_all(K - order, lam + order, t)
    return scale * (factors[order:] @ table)


def closed_form_coefficients(spec: KernelSpec, K: int) -> ZonalCoefficients:
    """Spectral decomposition (W_hat_k)_{k<=K} from the family's closed form."""
    if spec.family == "custom":
        raise ValueError("custom kernels have no closed form; use coefficients()")
    if K < 0:
        raise ValueError(f"truncation must be >= 0, got {K}")
    n = spec.n
    k = np.arange(K + 1)
    if spec.family == "transformer":
        beta = spec.beta
        pref = -(2.0 ** (0.5 * (n - 2))) * beta ** (-0.5 * n) * math.gamma(n / 2.0)
        vals = pref * np.array([bessel_i(kk + 0.5 * (n - 2), beta) for kk in k])
    elif spec.family == "onsager":
        # The profile sqrt(1 - t^2) shifts the Gegenbauer index by 1/2, so the
        # coefficients come from the lam -> lam + 1/2 connection formula: only
        # the constant term of C_{2m}^lam expanded in C_j^{lam+1/2} survives.
        lam = 0.5 * (n - 2)
        mu = lam + 0.5
        ratio = math.exp(  # c_lam / c_mu = int weight_mu / int weight_lam
            log_gamma(lam + 1.0) - log_gamma(lam + 0.5) - log_gamma(mu + 1.0) + log_gamma(mu + 0.5)
        )
        vals = np.zeros(K + 1)
        vals[0] = ratio
        for m in range(1, K // 2 + 1):
            log_mag = (
                math.log(mu)
                + log_gamma(mu)
                + log_gamma(m - 0.5)
                + log_gamma(m + lam)
                + log_gamma(2.0 * lam)
                + log_gamma(2.0 * m + 1.0)
                - math.log(2.0)
                - 0.5 * math.log(math.pi)
                - log_gamma(lam)
                - log_gamma(m + 1.0)
                - log_gamma(m + lam + 1.5)
                - log_gamma(2.0 * m + 2.0 * lam)
            )
            vals[2 * m] = -ratio * math.exp(log_mag)
    elif spec.family == "opinion":
        p = spec.p
        log_pref = (
            (n - 2.0 + p) * math.log(2.0)
            + log_gamma(n / 2.0)
            + log_gamma(0.5 * (n - 1) + p)
            + log_gamma(p + 1.0)
            - 0.5 * math.log(math.pi)
        )
        vals = np.zeros(K + 1)
        for kk in k:
            a = p + 1.0 - kk
            if a <= 0.0 and abs(a - round(a)) < 1e-13:
                continue  # Gamma pole: coefficient vanishes (integer p, k > p)
            sign = gammasgn(a)
            log_mag = log_pref - math.lgamma(a) - log_gamma(n + kk - 1.0 + p)
            vals[kk] = -sign * math.exp(log_mag)
    else:  # heat
        amp = math.gamma(n / 2.0) / (2.0 * math.pi ** (n / 2.0))
        vals = -amp * np.exp(-k * (k + n - 2.0) * spec.epsilon)
    if not np.all(np.isfinite(vals)):
        raise OverflowError("closed-form coefficient overflow; reduce K or parameters")
    return ZonalCoefficients(n=n, coeffs=vals)


def coefficients(spec: KernelSpec, K: int, quad_order: Optional[int] = None) -> ZonalCoefficients:
    """Decomposition of any kernel: closed form when available, quadrature otherwise."""
    if spec.family != "custom":
        return closed_form_coefficients(spec, K)
    order = quad_order or max(2 * K + 8, 64)
    rule = gauss_jacobi_rule(spec.n, order)
    values = profile_values(spec, rule.nodes)
    if rule.integrate(np.abs(values)) == math.inf or not np.all(np.isfinite(values)):
        raise ValueError("custom profile fails the weighted integrability condition")
    return decompose(ZonalProfile(n=spec.n, rule=rule, values=values), K)


def quadrature_coefficients(spec: KernelSpec, K: int, quad_order: Optional[int] = None) -> ZonalCoefficients:
    """Force the quadrature path even for named families (cross-check use).

    The Onsager profile sqrt(1 - t^2) is absorbed into the Jacobi weight by
    using the rule one dimension up, which makes the integrand polynomial
    and the quadrature exact; plain rules converge only algebraically there.
    """
    order = quad_order or max(2 * K + 8, 64)
    if spec.family == "onsager":
        from .harmonics import c_lambda
        from .specfun import gegenbauer_all, gegenbauer_value_at_one

        n = spec.n
        lam = 0.5 * (n - 2)
        rule_up = gauss_jacobi_rule(n + 1, order)
        table = gegenbauer_all(K, lam, rule_up.nodes)
        at_one = np.array([gegenbauer_value_at_one(k, lam) for k in range(K + 1)])
        coeffs = c_lambda(lam) * (table @ rule_up.weights) / at_one
        return ZonalCoefficients(n=n, coeffs=coeffs)
    rule = gauss_jacobi_rule(spec.n, order)
    values = profile_values(spec, rule.nodes)
    return decompose(ZonalProfile(n=spec.n, rule=rule, values=values), K)


# Round-off slack on the "all coefficients nonnegative" stability test.
_STABILITY_TOL = 1e-12


@dataclass(frozen=True)
class StabilityReport:
    stable: bool
    first_unstable: Optional[int] = None


def stability_check(coeffs: ZonalCoefficients) -> StabilityReport:
    """Stable iff every W_hat_k >= -1e-12 up to the truncation."""
    negative = np.nonzero(coeffs.coeffs < -_STABILITY_TOL)[0]
    if negative.size == 0:
        return StabilityReport(stable=True)
    return StabilityReport(stable=False, first_unstable=int(negative[0]))


def convexity_threshold(spec: KernelSpec) -> Optional[float]:
    """Uniqueness threshold gamma_o = (n-2)/(4C), C bounding |W'|, |W''|, |W'(+-1)|.

    Returns None when the needed derivative bounds do not exist (Onsager) or
    were not supplied (custom kernel without derivative_bound).
    """
    n = spec.n
    if spec.family == "transformer":
        b = spec.beta
        c = max(math.exp(b), b * math.exp(b))
    elif spec.family == "opinion":
        p = spec.p
        if p < 1.0 or (1.0 < p < 2.0):
            return None  # W' or W'' blows up at t = -1
        first = p * 2.0 ** (p - 1.0)
        second = p * (p - 1.0) * 2.0 ** (p - 2.0) if p >= 2.0 else 0.0
        c = max(first, second)
    elif spec.family == "onsager":
        return None  # W'(t) = -t/sqrt(1-t^2) is unbounded
    elif spec.family == "heat":
        grid = np.linspace(-1.0, 1.0, 4001)
        c = max(
            float(np.max(np.abs(_heat_derivative(spec, grid, order=1)))),
            float(np.max(np.abs(_heat_derivative(spec, grid, order=2)))),
        )
    else:
        if spec.derivative_bound is None:
            return None
        c = spec.derivative_bound
    return (n - 2.0) / (4.0 * c)
