"""Zonal densities, spherical convolution, free energy, and linear stability.

Densities are stored with respect to the un-normalized spherical measure
sigma, so the uniform state is rho = 1/omega_n and the mass functional is
omega_{n-1} * sum_i w_i rho(t_i) = 1 (the omega_{n-1} factor accounts for
the azimuthal directions integrated out).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .harmonics import (
    ZonalCoefficients,
    ZonalProfile,
    c_lambda,
    decompose,
    omega_n,
    reconstruct,
    zonal_norm_constant,
)
from .specfun import QuadratureRule, gegenbauer_value_at_one

__all__ = [
    "EnergyReport",
    "GammaSharp",
    "StabilitySpectrum",
    "ZonalDensity",
    "convolve",
    "entropy",
    "free_energy",
    "gamma_sharp",
    "interaction_energy",
    "linear_spectrum",
    "uniform_density",
]

_MASS_TOL = 1e-10


@dataclass(frozen=True)
class ZonalDensity:
    """Axially symmetric probability density on S^{n-1}, immutable after construction."""

    n: int
    rule: QuadratureRule
    values: np.ndarray
    coeffs: ZonalCoefficients

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if np.any(vals < 0.0):
            raise ValueError("density must be nonnegative at all nodes")
        if abs(self.mass() - 1.0) > _MASS_TOL:
            raise ValueError(f"density mass {self.mass():.3e} deviates from 1")

    def mass(self) -> float:
        return omega_n(self.n - 1) * self.rule.integrate(self.values)

    def perturbation_coefficients(self) -> np.ndarray:
        """Normalized coefficients u_hat_l of u where rho = rho_bar (1 + u).

        u_hat_l = <u, Y_{l,0}> under the omega_n^{-1} dsigma inner product;
        the l = 0 entry is zero by mass conservation.
        """
        n = self.n
        lam = 0.5 * (n - 2)
        K = self.coeffs.K
        at_one = np.array([gegenbauer_value_at_one(k, lam) for k in range(K + 1)])
        a = np.array([zonal_norm_constant(k, n) for k in range(K + 1)])
        s = a * at_one * self.coeffs.coeffs  # <rho, Y_l> per mode
        u_hat = omega_n(n) * s
        u_hat[0] = 0.0
        return u_hat

    def dominant_mode(self) -> tuple[int, float]:
        """(degree, amplitude) of the largest |u_hat_l| among l >= 1."""
        u_hat = self.perturbation_coefficients()
        l = int(np.argmax(np.abs(u_hat[1:]))) + 1
        return l, float(u_hat[l])


def make_density(
    n: int, rule: QuadratureRule, values: np.ndarray, K: int, normalize: bool = True
) -> ZonalDensity:
    """Construct a ZonalDensity (optionally renormalizing mass) with cached coefficients."""
    vals = np.asarray(values, dtype=float)
    if normalize:
        vals = vals / (omega_n(n - 1) * rule.integrate(vals))
    coeffs = decompose(ZonalProfile(n=n, rule=rule, values=vals), K)
    return ZonalDensity(n=n, rule=rule, values=vals, coeffs=coeffs)


def uniform_density(n: int, rule: QuadratureRule, K: int) -> ZonalDensity:
    return make_density(n, rule, np.full(rule.order, 1.0 / omega_n(n)), K, normalize=False)


def convolve(kernel: ZonalCoefficients, density: ZonalDensity) -> ZonalProfile:
    """W * rho on the density's node grid via the spherical convolution theorem.

    Mode p of the convolution carries the factor omega_n * W_hat_p.
    """
    if kernel.n != density.n:
        raise ValueError(f"dimension mismatch: kernel n={kernel.n}, density n={density.n}")
    K = density.coeffs.K
    if kernel.K < K:
        raise ValueError(f"kernel truncation {kernel.K} below density truncation {K}")
    conv_coeffs = omega_n(density.n) * kernel.coeffs[: K + 1] * density.coeffs.coeffs
    zc = ZonalCoefficients(n=density.n, coeffs=conv_coeffs)
    return ZonalProfile(n=density.n, rule=density.rule, values=reconstruct(zc, density.rule.nodes))


def entropy(density: ZonalDensity) -> float:
    """Relative entropy against the normalized volume measure; +inf off the positive cone."""
    if np.any(density.values <= 0.0):
        return math.inf
    wn = omega_n(density.n)
    scaled = wn * density.values
    # integral against the normalized measure: omega_n^{-1} * omega_{n-1} * sum(...)
    return (omega_n(density.n - 1) / wn) * density.rule.integrate(scaled * np.log(scaled))


def interaction_energy(kernel: ZonalCoefficients, density: ZonalDensity) -> float:
    """Interaction energy 0.5 * iint W(<x,y>) rho(x) rho(y) dsigma dsigma, spectrally.

    Equals W_hat_0 / 2 plus the quadratic form of the higher modes.
    """
    if kernel.n != density.n:
        raise ValueError("dimension mismatch between kernel and density")
    n = density.n
    wn = omega_n(n)
    u_hat = density.perturbation_coefficients()
    K = min(kernel.K, u_hat.size - 1)
    tail = 0.5 * float(np.dot(kernel.coeffs[1 : K + 1], u_hat[1 : K + 1] ** 2))
    return 0.5 * kernel.coeffs[0] + tail


@dataclass(frozen=True)
class EnergyReport:
    entropy: float
    interaction: float
    free_energy: float
    gamma: float

    def to_json(self) -> str:
        return json.dumps(
            {
                "entropy": self.entropy,
                "interaction": self.interaction,
                "free_energy": self.free_energy,
                "gamma": self.gamma,
            }
        )


def free_energy(kernel: ZonalCoefficients, density: ZonalDensity, gamma: float) -> EnergyReport:
    """Free energy gamma^{-1} * entropy + interaction, reported componentwise."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    ent = entropy(density)
    inter = interaction_energy(kernel, density)
    return EnergyReport(entropy=ent, interaction=inter, free_energy=ent / gamma + inter, gamma=gamma)


@dataclass(frozen=True)
class StabilitySpectrum:
    """Eigenvalues lambda_l = -l(n+l-2)(1 + gamma W_hat_l) of the linearized dynamics."""

    gamma: float
    eigenvalues: np.ndarray


def linear_spectrum(kernel: ZonalCoefficients, gamma: float, L: int) -> StabilitySpectrum:
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if L > kernel.K:
        raise ValueError(f"L={L} exceeds kernel truncation {kernel.K}")
    n = kernel.n
    l = np.arange(L + 1, dtype=float)
    eig = -l * (n + l - 2.0) * (1.0 + gamma * kernel.coeffs[: L + 1])
    return StabilitySpectrum(gamma=gamma, eigenvalues=eig)


@dataclass(frozen=True)
class GammaSharp:
    gamma: float
    modes: tuple[int, ...]


_TIE_TOL = 1e-12


def gamma_sharp(coeffs: ZonalCoefficients) -> GammaSharp:
    """Point of linear stability gamma_# = -1/min_{k>=1} W_hat_k with its index set."""
    tail = coeffs.coeffs[1:]
    w_min = float(np.min(tail))
    if w_min >= -_TIE_TOL:
        raise ValueError("no instability: all coefficients k >= 1 are nonnegative")
    modes = tuple(int(i) + 1 for i in np.nonzero(tail <= w_min + _TIE_TOL)[0])
    return GammaSharp(gamma=-1.0 / w_min, modes=modes)
