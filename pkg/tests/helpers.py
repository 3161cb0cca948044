"""Independent oracles shared by the test modules.

Everything here deliberately avoids the package's own quadrature and
transform code paths: inner rules come from scipy, series are summed
directly, and symbolic results come from sympy.
"""

import math

import numpy as np
from scipy.special import roots_chebyt, roots_jacobi, roots_legendre

from spheremv.harmonics import omega_n


def bessel_series(nu: float, x: float, terms: int = 200) -> float:
    """Power series I_nu(x) = sum (x/2)^{nu+2m} / (m! Gamma(nu+m+1))."""
    total = 0.0
    log_half_x = math.log(x / 2.0) if x > 0 else -math.inf
    for m in range(terms):
        log_term = (nu + 2 * m) * log_half_x - math.lgamma(m + 1) - math.lgamma(nu + m + 1)
        total += math.exp(log_term)
    return total


def outer_rule(n: int, order: int):
    """Scipy Gauss-Jacobi nodes/weights for the weight (1-t^2)^{(n-3)/2}."""
    alpha = 0.5 * (n - 3)
    return roots_jacobi(order, alpha, alpha)


def azimuthal_rule(n: int, order: int):
    """Nodes/weights/prefactor for integrating f(<v,u>) over u in S^{n-2}.

    int_{S^{n-2}} f(<v,u>) dsigma(u) = pref * sum w_c f(c).
    """
    if n == 3:
        nodes, weights = roots_chebyt(order)  # weight (1-c^2)^{-1/2}
        return nodes, weights, 2.0
    alpha = 0.5 * (n - 4)
    nodes, weights = roots_jacobi(order, alpha, alpha)
    return nodes, weights, omega_n(n - 2)


def brute_force_convolution(profile_fn, density_fn, n: int, t_eval: np.ndarray, order: int = 80):
    """(W * rho)(t) by fully nested quadrature; no spectral machinery involved.

    profile_fn(s) is W at inner product s; density_fn(s) is the zonal
    density (w.r.t. sigma) at latitude s about the symmetry axis.
    """
    s_nodes, s_weights = outer_rule(n, order)
    c_nodes, c_weights, pref = azimuthal_rule(n, order)
    out = np.empty_like(t_eval)
    for i, t in enumerate(t_eval):
        cross = np.sqrt(np.clip((1.0 - s_nodes**2) * (1.0 - t * t), 0.0, None))
        # inner products between x (latitude t) and y (latitude s, azimuth c)
        ips = s_nodes[:, None] * t + cross[:, None] * c_nodes[None, :]
        inner = pref * (profile_fn(np.clip(ips, -1.0, 1.0)) @ c_weights)
        out[i] = float(np.dot(s_weights, density_fn(s_nodes) * inner))
    return out


def brute_force_interaction(profile_fn, density_fn, n: int, order: int = 80) -> float:
    """0.5 * iint W(<x,y>) rho(x) rho(y) dsigma dsigma via nested quadrature.

    The convolution helper already carries y's azimuthal measure, so only
    one omega_{n-1} factor (for x's azimuth) appears here.
    """
    t_nodes, t_weights = outer_rule(n, order)
    conv = brute_force_convolution(profile_fn, density_fn, n, t_nodes, order)
    return 0.5 * omega_n(n - 1) * float(np.dot(t_weights, density_fn(t_nodes) * conv))


def random_smooth_density(n: int, rng: np.random.Generator):
    """Positive normalized zonal density rho(t) = exp(poly(t)) / Z w.r.t. sigma."""
    coeffs = rng.normal(scale=0.4, size=4)

    def unnormalized(t):
        t = np.asarray(t, dtype=float)
        return np.exp(coeffs[0] * t + coeffs[1] * t**2 + coeffs[2] * t**3 + coeffs[3])

    t_nodes, t_weights = outer_rule(n, 120)
    mass = omega_n(n - 1) * float(np.dot(t_weights, unnormalized(t_nodes)))

    def density(t):
        return unnormalized(t) / mass

    return density
