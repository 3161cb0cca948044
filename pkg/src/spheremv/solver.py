"""Fixed points of the Gibbs map, branch continuation, and transition scans.

The iteration is damped Picard: rho <- (1 - tau) rho + tau G(rho) with
G(rho) = exp(-gamma W*rho) / Z.  G is evaluated through one precomputed
convolution matrix per (kernel, rule) pair, so a single solve is a loop of
small dense mat-vecs.  Residuals are normalized-L2 norms of omega_n (rho -
G(rho)), i.e. measured on the scale where the uniform state is 1.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .harmonics import (
    ZonalCoefficients,
    c_lambda,
    omega_n,
    y_l0,
    zonal_norm_constant,
)
from .meanfield import (
    ZonalDensity,
    free_energy,
    make_density,
    uniform_density,
)
from .specfun import (
    QuadratureRule,
    gauss_jacobi_rule,
    gegenbauer_all,
    gegenbauer_value_at_one,
)

__all__ = [
    "BifurcationSet",
    "BranchPoint",
    "ResonanceReport",
    "SolveResult",
    "SolverConfig",
    "TransitionReport",
    "bifurcation_points",
    "competitor_energy_gap",
    "find_transition",
    "gibbs_fixed_point",
    "residual",
    "resonance_check",
    "trace_branch",
]


@dataclass(frozen=True)
class SolverConfig:
    tau: float = 0.5
    tol: float = 1e-11
    max_iters: int = 20000
    K: int = 48
    M: int = 72
    seed_amplitude: float = 1e-3

    def __post_init__(self):
        if not (0.0 < self.tau <= 1.0):
            raise ValueError(f"damping tau must lie in (0, 1], got {self.tau}")
        if self.tol <= 0.0:
            raise ValueError("tolerance must be positive")
        if self.M < self.K + 2:
            raise ValueError(f"quadrature order {self.M} must be >= K+2 = {self.K + 2}")


class GibbsOperator:
    """Gibbs map G and residual on a fixed quadrature grid, matrices precomputed."""

    def __init__(self, kernel: ZonalCoefficients, rule: QuadratureRule, K: int):
        if K > kernel.K:
            raise ValueError(f"K={K} exceeds kernel truncation {kernel.K}")
        n = rule.n
        if n != kernel.n:
            raise ValueError("dimension mismatch between kernel and rule")
        lam = 0.5 * (n - 2)
        table = gegenbauer_all(K, lam, rule.nodes)  # (K+1, M)
        at_one = np.array([gegenbauer_value_at_one(k, lam) for k in range(K + 1)])
        decomp = c_lambda(lam) * (table / at_one[:, None]) * rule.weights[None, :]
        factors = (2.0 * np.arange(K + 1) + n - 2.0) / (n - 2.0)
        recon = (table * factors[:, None]).T  # (M, K+1)
        wn = omega_n(n)
        self.n = n
        self.rule = rule
        self.K = K
        self.kernel = kernel
        self.conv_matrix = recon @ (wn * kernel.coeffs[: K + 1, None] * decomp)
        self._azimuth = omega_n(n - 1)
        self._wn = wn
        self._clam = c_lambda(lam)

    def gibbs(self, gamma: float, values: np.ndarray) -> np.ndarray:
        expo = -gamma * (self.conv_matrix @ values)
        expo -= expo.max()  # Z is scale invariant; keeps exp in range
        e = np.exp(expo)
        z = self._azimuth * float(np.dot(self.rule.weights, e))
        return e / z

    def residual_values(self, gamma: float, values: np.ndarray) -> float:
        d = values - self.gibbs(gamma, values)
        norm_sq = self._clam * float(np.dot(self.rule.weights, d * d))
        return self._wn * math.sqrt(max(norm_sq, 0.0))


@dataclass(frozen=True)
class SolveResult:
    density: ZonalDensity
    residual: float
    iterations: int
    converged: bool
    message: str = ""


def residual(kernel: ZonalCoefficients, gamma: float, density: ZonalDensity) -> float:
    """Normalized-L2 distance of rho from its Gibbs image (uniform-scale units)."""
    op = GibbsOperator(kernel, density.rule, density.coeffs.K)
    return op.residual_values(gamma, density.values)


def gibbs_fixed_point(
    kernel: ZonalCoefficients,
    gamma: float,
    init: ZonalDensity,
    config: SolverConfig = SolverConfig(),
    op: Optional[GibbsOperator] = None,
) -> SolveResult:
    """Damped Picard iteration from init until the residual drops below tol."""
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    if op is None:
        op = GibbsOperator(kernel, init.rule, init.coeffs.K)
    values = init.values.copy()
    tau = config.tau
    best_values, best_res = values, op.residual_values(gamma, values)
    iters = 0
    for iters in range(1, config.max_iters + 1):
        values = (1.0 - tau) * values + tau * op.gibbs(gamma, values)
        res = op.residual_values(gamma, values)
        if res < best_res:
            best_values, best_res = values, res
        if res <= config.tol:
            break
    density = make_density(init.n, init.rule, best_values, op.K)
    converged = best_res <= config.tol
    msg = "" if converged else f"no convergence after {config.max_iters} iterations"
    return SolveResult(
        density=density, residual=best_res, iterations=iters, converged=converged, message=msg
    )


@dataclass(frozen=True)
class BifurcationSet:
    """Bifurcation points (k, gamma_k) plus any coefficient ties that were excluded."""

    points: tuple[tuple[int, float], ...]
    ties: tuple[int, ...] = ()


_UNIQUE_TOL = 1e-12


def bifurcation_points(kernel: ZonalCoefficients) -> BifurcationSet:
    """All (k, gamma_k = -1/W_hat_k) with W_hat_k < 0 unique among the coefficients."""
    coeffs = kernel.coeffs
    negative = [k for k in range(1, coeffs.size) if coeffs[k] < -_UNIQUE_TOL]
    if not negative:
        raise ValueError("stable kernel: no bifurcation points")
    points, ties = [], []
    for k in negative:
        others = np.delete(coeffs, k)
        if np.min(np.abs(others - coeffs[k])) <= _UNIQUE_TOL:
            ties.append(k)
        else:
            points.append((k, -1.0 / coeffs[k]))
    return BifurcationSet(points=tuple(points), ties=tuple(ties))


@dataclass(frozen=True)
class BranchPoint:
    gamma: float
    density: ZonalDensity
    dominant_mode: int
    amplitude: float
    free_energy: float
    residual: float
    iterations: int


def _seeded_density(
    n: int, rule: QuadratureRule, K: int, base: np.ndarray, mode: int, amplitude: float
) -> ZonalDensity:
    bump = amplitude * y_l0(mode, n, rule.nodes) / omega_n(n)
    values = np.clip(base + bump, 1e-14, None)
    return make_density(n, rule, values, K)


def trace_branch(
    kernel: ZonalCoefficients,
    mode: int,
    gamma_grid: Sequence[float],
    config: SolverConfig = SolverConfig(),
) -> tuple[list[BranchPoint], str]:
    """Continue the non-uniform branch of the given mode along an ascending grid.

    The first point is seeded from the uniform state kicked by the mode's
    eigenvector (both signs are tried; the smaller-amplitude non-uniform
    state is kept as the branch).  Later points reuse the previous solution
    plus a small kick of the recorded sign.  Returns the traced points and
    a diagnostic string ('' when the whole grid was covered).
    """
    gamma_grid = list(gamma_grid)
    if not gamma_grid:
        return [], "empty gamma grid"
    rule = gauss_jacobi_rule(kernel.n, config.M)
    op = GibbsOperator(kernel, rule, config.K)
    uniform = uniform_density(kernel.n, rule, config.K)
    eps0 = config.seed_amplitude
    branch: list[BranchPoint] = []
    diagnostic = ""

    def solve_from(seed: ZonalDensity, gamma: float) -> SolveResult:
        return gibbs_fixed_point(kernel, gamma, seed, config, op=op)

    prev: Optional[ZonalDensity] = None
    kick_sign = 1.0
    for idx, gamma in enumerate(gamma_grid):
        if prev is None:
            candidates = []
            for sign in (+1.0, -1.0):
                seed = _seeded_density(kernel.n, rule, config.K, uniform.values, mode, sign * 10 * eps0)
                result = solve_from(seed, gamma)
                l, amp = result.density.dominant_mode()
                if result.converged and abs(amp) > 10 * config.tol:
                    candidates.append((abs(amp), sign, result))
            if not candidates:
                diagnostic = f"branch not found at gamma={gamma}"
                break
            _, kick_sign, result = min(candidates, key=lambda c: c[0])
        else:
            seed = _seeded_density(
                kernel.n, rule, config.K, prev.values, mode, kick_sign * eps0
            )
            result = solve_from(seed, gamma)
        l, amp = result.density.dominant_mode()
        if not result.converged or abs(amp) <= 10 * config.tol:
            diagnostic = f"branch lost at gamma={gamma} (fell back to uniform)"
            break
        report = free_energy(kernel, result.density, gamma)
        branch.append(
            BranchPoint(
                gamma=gamma,
                density=result.density,
                dominant_mode=l,
                amplitude=amp,
                free_energy=report.free_energy,
                residual=result.residual,
                iterations=result.iterations,
            )
        )
        prev = result.density
    return branch, diagnostic


@dataclass(frozen=True)
class ResonanceReport:
    satisfied: bool
    gamma_sharp: float
    modes: tuple[int, ...]
    witness_modes: tuple[int, ...]
    witness_coeffs: tuple[float, ...]
    u3: float
    bandwidth: float
    bandwidth_limit: float


def _combination_values(n: int, modes, coeffs, t: np.ndarray) -> np.ndarray:
    out = np.zeros_like(t)
    for m, c in zip(modes, coeffs):
        out = out + c * y_l0(m, n, t)
    return out


def harmonic_combination(
    n: int, modes: Sequence[int], coeffs: Sequence[float], rule: QuadratureRule
) -> tuple[np.ndarray, float]:
    """Sup-normalized combination of zonal harmonics and its cubic integral U3.

    Returns (values on the rule's nodes, U3 = int u^3 dsigma).
    """
    dense = np.linspace(-1.0, 1.0, 2001)
    sup = float(np.max(np.abs(_combination_values(n, modes, coeffs, dense))))
    if sup == 0.0:
        raise ValueError("zero harmonic combination")
    scaled = [c / sup for c in coeffs]
    values = _combination_values(n, modes, scaled, rule.nodes)
    u3 = omega_n(n - 1) * rule.integrate(values**3)
    return values, u3


def resonance_check(
    kernel: ZonalCoefficients, delta: float = 0.0, max_combo: int = 3
) -> ResonanceReport:
    """Search the delta-resonant modes for a sup-normalized u with nonzero cube integral.

    Single modes are scanned first, then sign/weight patterns over pairs and
    triples of resonant modes.  The bandwidth test is
    delta < min(1/4, U3^2 / (49 sigma(S^{n-1})^2)).
    """
    from .meanfield import gamma_sharp as _gamma_sharp

    gs = _gamma_sharp(kernel)
    n = kernel.n
    threshold = -(1.0 - delta) / gs.gamma
    resonant = [k for k in range(1, kernel.coeffs.size) if kernel.coeffs[k] <= threshold + 1e-15]
    rule = gauss_jacobi_rule(n, max(3 * max(resonant) + 4, 16))
    best = (0.0, (), ())
    weights = (1.0, 0.5)
    for size in range(1, min(max_combo, len(resonant)) + 1):
        for modes in itertools.combinations(resonant, size):
            patterns = itertools.product(*[[w * s for w in weights for s in (1.0, -1.0)]] * size)
            seen = set()
            for coeffs in patterns:
                key = tuple(c / coeffs[0] for c in coeffs)  # overall scale is irrelevant
                if coeffs[0] < 0 or key in seen:
                    continue
                seen.add(key)
                _, u3 = harmonic_combination(n, modes, coeffs, rule)
                if abs(u3) > abs(best[0]):
                    best = (u3, modes, coeffs)
    u3, modes, coeffs = best
    sigma_total = omega_n(n)
    limit = min(0.25, u3**2 / (49.0 * sigma_total**2))
    satisfied = abs(u3) > 1e-12 and delta < limit
    return ResonanceReport(
        satisfied=satisfied,
        gamma_sharp=gs.gamma,
        modes=gs.modes,
        witness_modes=tuple(modes),
        witness_coeffs=tuple(coeffs),
        u3=u3,
        bandwidth=delta,
        bandwidth_limit=limit,
    )


def competitor_energy_gap(
    kernel: ZonalCoefficients,
    u_values: np.ndarray,
    u3: float,
    epsilon: float,
    gamma: float,
    rule: QuadratureRule,
    K: int,
) -> float:
    """Free-energy gap F(rho_bar (1 + eps xi u)) - F(rho_bar), xi = sign(U3)."""
    n = kernel.n
    xi = 1.0 if u3 >= 0.0 else -1.0
    perturb = 1.0 + epsilon * xi * u_values
    if np.any(perturb <= 0.0):
        raise ValueError("competitor density nonpositive at some node; reduce epsilon")
    density = make_density(n, rule, perturb / omega_n(n), K, normalize=False)
    uniform = uniform_density(n, rule, K)
    return (
        free_energy(kernel, density, gamma).free_energy
        - free_energy(kernel, uniform, gamma).free_energy
    )


@dataclass(frozen=True)
class TransitionReport:
    gamma_sharp: Optional[float]
    gamma_c_bracket: Optional[tuple[float, float]]
    type: str  # "discontinuous" | "continuous-candidate" | "none"
    witness: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(
            {
                "gamma_sharp": self.gamma_sharp,
                "gamma_c_bracket": list(self.gamma_c_bracket) if self.gamma_c_bracket else None,
                "type": self.type,
                "witness": self.witness,
            },
            sort_keys=True,
        )


_GAP_TOL = 1e-12


def _best_candidate_gap(
    kernel: ZonalCoefficients,
    gamma: float,
    op: GibbsOperator,
    uniform: ZonalDensity,
    seeds: list[tuple[str, ZonalDensity]],
    competitor: Optional[tuple[np.ndarray, float, float]],
    config: SolverConfig,
) -> tuple[float, dict]:
    f_uniform = free_energy(kernel, uniform, gamma).free_energy
    best_gap, witness = 0.0, {"kind": "uniform"}
    for label, seed in seeds:
        result = gibbs_fixed_point(kernel, gamma, seed, config, op=op)
        if not result.converged:
            continue
        gap = free_energy(kernel, result.density, gamma).free_energy - f_uniform
        if gap < best_gap:
            mode, amp = result.density.dominant_mode()
            best_gap = gap
            witness = {
                "kind": "fixed-point",
                "seed": label,
                "dominant_mode": mode,
                "amplitude": amp,
                "residual": result.residual,
                "gap": gap,
            }
    if competitor is not None:
        u_values, u3, eps = competitor
        try:
            gap = competitor_energy_gap(kernel, u_values, u3, eps, gamma, op.rule, op.K)
        except ValueError:
            gap = math.inf
        if gap < best_gap:
            best_gap = gap
            witness = {"kind": "competitor", "epsilon": eps, "u3": u3, "gap": gap}
    return best_gap, witness


def find_transition(
    kernel: ZonalCoefficients,
    gamma_grid: Optional[Sequence[float]] = None,
    config: SolverConfig = SolverConfig(),
    bracket_rtol: float = 1e-3,
) -> TransitionReport:
    """Scan gamma in (0, gamma_#] for the first point where a competitor beats uniform.

    Candidates at each gamma: the uniform state, Gibbs fixed points grown
    from each unstable mode's eigenvector (several amplitudes, both signs),
    and the cubic-resonance competitor with the prescribed epsilon.
    """
    from .kernels import stability_check
    from .meanfield import gamma_sharp as _gamma_sharp

    if stability_check(kernel).stable:
        return TransitionReport(
            gamma_sharp=None, gamma_c_bracket=None, type="none", witness={"reason": "stable kernel"}
        )
    gs = _gamma_sharp(kernel)
    if gamma_grid is None:
        gamma_grid = np.geomspace(0.2 * gs.gamma, gs.gamma, 200)
    gamma_grid = np.asarray(sorted(gamma_grid), dtype=float)

    rule = gauss_jacobi_rule(kernel.n, config.M)
    op = GibbsOperator(kernel, rule, config.K)
    uniform = uniform_density(kernel.n, rule, config.K)

    try:
        bif = bifurcation_points(kernel)
        seed_modes = sorted({k for k, _ in bif.points[:4]} | set(gs.modes))
    except ValueError:
        seed_modes = list(gs.modes)
    seeds = []
    for k in seed_modes:
        for amp in (0.3, 0.8):
            for sign in (+1.0, -1.0):
                u_k = y_l0(k, kernel.n, rule.nodes)
                sup = abs(y_l0(k, kernel.n, 1.0))
                values = (1.0 + sign * amp * u_k / sup) / omega_n(kernel.n)
                seeds.append(
                    (f"mode{k}{'+' if sign > 0 else '-'}{amp}", make_density(kernel.n, rule, values, config.K))
                )

    reso = resonance_check(kernel, delta=0.0)
    competitor = None
    if abs(reso.u3) > 1e-12:
        u_values, u3 = harmonic_combination(
            kernel.n, reso.witness_modes, reso.witness_coeffs, rule
        )
        eps = min(0.5, abs(u3) / (4.0 * omega_n(kernel.n)))
        competitor = (u_values, u3, eps)

    def gap_at(gamma: float) -> tuple[float, dict]:
        return _best_candidate_gap(kernel, gamma, op, uniform, seeds, competitor, config)

    prev_gamma, prev_gap = None, None
    bracket = None
    witness = {}
    for gamma in gamma_grid:
        gap, wit = gap_at(gamma)
        if gap < -_GAP_TOL:
            if prev_gamma is None:
                bracket = (gamma_grid[0] * 0.5, gamma)
            else:
                bracket = (prev_gamma, gamma)
            witness = wit
            break
        prev_gamma, prev_gap = gamma, gap
    if bracket is None:
        return TransitionReport(
            gamma_sharp=gs.gamma,
            gamma_c_bracket=None,
            type="none",
            witness={"reason": "no sign change on the gamma grid"},
        )

    lo, hi = bracket
    while (hi - lo) / hi > bracket_rtol:
        mid = 0.5 * (lo + hi)
        gap, wit = gap_at(mid)
        if gap < -_GAP_TOL:
            hi, witness = mid, wit
        else:
            lo = mid
    step = float(np.min(np.diff(gamma_grid))) if gamma_grid.size > 1 else 0.0
    if hi <= gs.gamma - step:
        kind = "discontinuous"
    else:
        kind = "continuous-candidate"
    return TransitionReport(
        gamma_sharp=gs.gamma, gamma_c_bracket=(lo, hi), type=kind, witness=witness
    )
