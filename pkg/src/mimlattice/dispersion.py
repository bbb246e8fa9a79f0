"""Linear theory of the mass-in-mass lattice in the small-mass regime.

Closed-form quantities: the symbol matrix of the linear traveling-wave
operator, its eigenvalue branches, the critical frequencies ``Omega_mu`` and
``omega_mu``, the antiresonance masses and the kernel/adjoint-kernel scalars
used by the periodic and nanopteron solvers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "LatticeParams",
    "DispersionScalars",
    "ValidityError",
    "validity_threshold",
    "check_validity",
    "symbol_matrix",
    "lambda_pm",
    "P_mu",
    "Omega_mu",
    "solve_omega_mu",
    "omega_mu_asymptotic",
    "antiresonance_mass",
    "admissible_mass",
    "in_admissible_set",
    "kernel_scalars",
]


class ValidityError(ValueError):
    """A small-mass validity guard failed; ``guard`` names which one."""

    def __init__(self, guard: str, message: str):
        super().__init__(f"[{guard}] {message}")
        self.guard = guard


@dataclass(frozen=True)
class LatticeParams:
    """Wave speed ``c``, resonator stiffness ``kappa`` and mass ratio ``mu``."""

    c: float
    kappa: float
    mu: float

    def __post_init__(self):
        if not abs(self.c) > 1:
            raise ValueError(f"need |c| > 1, got c={self.c}")
        if not self.kappa > 0:
            raise ValueError(f"need kappa > 0, got {self.kappa}")
        if not 0 <= self.mu < 1:
            raise ValueError(f"need 0 <= mu < 1, got {self.mu}")

    def with_mu(self, mu: float) -> "LatticeParams":
        return LatticeParams(self.c, self.kappa, mu)

    @property
    def Omega(self) -> float:
        return Omega_mu(self)


@dataclass(frozen=True)
class DispersionScalars:
    Omega_mu: float
    omega_mu: float
    alpha_mu: float
    upsilon_mu: float
    z_mu: float


def P_mu(t, p: LatticeParams):
    """Discriminant polynomial of the 2x2 eigenvalue problem at ``t = cos K``."""
    k, mu = p.kappa, p.mu
    return (k - 2 * t + 2) ** 2 * mu**2 + 2 * k * (k + 2 * t - 2) * mu + k**2


def validity_threshold(kappa: float) -> float:
    """Explicit small-mass guard from the eigenvalue-monotonicity argument."""
    return min(kappa / 8.0, kappa / (4.0 * (kappa + 2.0)))


def check_validity(p: LatticeParams, n_grid: int = 10_000) -> None:
    if not 0 < p.mu < validity_threshold(p.kappa):
        raise ValidityError(
            "mu-threshold",
            f"mu={p.mu:g} outside (0, {validity_threshold(p.kappa):g})",
        )
    K = np.linspace(-np.pi, np.pi, n_grid)
    if np.min(P_mu(np.cos(K), p)) <= 0:
        raise ValidityError("discriminant", f"P_mu(cos K) <= 0 for mu={p.mu:g}")


def symbol_matrix(K: float, p: LatticeParams) -> np.ndarray:
    """Symbol of the linear operator ``D_mu`` at wavenumber ``K``."""
    s = math.sin(0.5 * K)
    return np.array(
        [
            [-(2.0 * math.cos(K) - 2.0), 2j * p.kappa * s],
            [-2j * p.mu * s, p.kappa * (1.0 + p.mu)],
        ]
    )


def lambda_pm(K, p: LatticeParams):
    """Eigenvalues ``(lambda_minus, lambda_plus)`` of ``symbol(K) diag(mu, 1)``.

    Vectorized in ``K``.  Raises :class:`ValidityError` if the discriminant
    is negative anywhere.
    """
    t = np.cos(K)
    disc = P_mu(t, p)
    if np.any(disc < 0):
        raise ValidityError("discriminant", f"P_mu(cos K) < 0 for mu={p.mu:g}")
    base = 0.5 * p.kappa + p.mu * (0.5 * p.kappa + 1.0 - t)
    root = 0.5 * np.sqrt(disc)
    return base - root, base + root


def Omega_mu(p: LatticeParams) -> float:
    """Root of the symbol ``-c^2 k^2 + kappa (1 + mu)``."""
    if not p.mu > 0:
        raise ValueError("Omega_mu needs mu > 0")
    return math.sqrt(p.kappa * (1.0 + p.mu) / (p.c**2 * p.mu))


def _g(omega: float, p: LatticeParams) -> float:
    return p.c**2 * p.mu * omega**2 - lambda_pm(omega, p)[1]


def solve_omega_mu(p: LatticeParams, tol: float = 1e-13, max_iter: int = 200) -> float:
    """Unique positive root of ``c^2 mu w^2 = lambda_plus(w)`` by bisection.

    The root lies in ``[Omega_mu, sqrt(lambda_plus(pi)) / (c sqrt(mu))]`` and
    the left side minus the right is increasing there, so bisection on that
    bracket cannot pick the wrong root.
    """
    check_validity(p)
    lo = Omega_mu(p)
    hi = math.sqrt(lambda_pm(math.pi, p)[1]) / (abs(p.c) * math.sqrt(p.mu))
    glo, ghi = _g(lo, p), _g(hi, p)
    if glo > 0 or ghi < 0:
        raise ValidityError(
            "bracket", f"no sign change on [{lo:.6g}, {hi:.6g}] for mu={p.mu:g}"
        )
    if glo == 0:
        return lo
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        gm = _g(mid, p)
        if gm == 0:
            return mid
        if gm < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * hi:
            break
    return 0.5 * (lo + hi)


def omega_mu_asymptotic(p: LatticeParams) -> float:
    """Leading behaviour of ``omega_mu - Omega_mu`` for small ``mu``.

    Expanding the square root in ``lambda_plus`` to second order gives
    ``lambda_plus(K) = kappa (1 + mu) + 2 (1 - cos K) mu^2 / kappa + O(mu^3)``,
    hence ``omega - Omega ~ (1 - cos Omega) mu^(3/2) / (kappa c^2 sqrt(kappa))``
    up to ``(1 + mu)`` factors.
    """
    Om = Omega_mu(p)
    return (1.0 - math.cos(Om)) * p.mu / (p.kappa * p.c**2 * Om)


def antiresonance_mass(n: int, p: LatticeParams) -> float:
    """Mass ratio ``mu_n`` at which ``sin(Omega_mu / 2) = 0``."""
    if n < 1:
        raise ValueError("n must be a positive integer")
    den = 4.0 * math.pi**2 * n**2 * p.c**2 - p.kappa
    if den <= 0:
        raise ValueError(f"4 pi^2 n^2 c^2 <= kappa for n={n}")
    return p.kappa / den


def admissible_mass(n: int, p: LatticeParams) -> float:
    """Mass ratio with ``Omega_mu = (2n + 1) pi``, where ``|sin(Omega/2)| = 1``."""
    den = (2 * n + 1) ** 2 * math.pi**2 * p.c**2 - p.kappa
    if den <= 0:
        raise ValueError(f"(2n+1)^2 pi^2 c^2 <= kappa for n={n}")
    return p.kappa / den


def in_admissible_set(p: LatticeParams, bound: float = 0.5) -> bool:
    """Whether ``|sin(Omega_mu / 2)| > bound``."""
    return abs(math.sin(0.5 * Omega_mu(p))) > bound


def kernel_scalars(p: LatticeParams, omega_mu: float | None = None) -> DispersionScalars:
    """Kernel vector scalar ``upsilon`` and adjoint scalar ``z`` at ``omega_mu``."""
    if omega_mu is None:
        omega_mu = solve_omega_mu(p)
    lam_plus = lambda_pm(omega_mu, p)[1]
    den = p.mu * (2.0 * math.cos(omega_mu) - 2.0) + lam_plus
    if not den > p.kappa / 4.0:
        raise ValidityError(
            "alpha-denominator", f"denominator {den:.3g} <= kappa/4 for mu={p.mu:g}"
        )
    s = math.sin(0.5 * omega_mu)
    alpha = 2.0 * p.kappa / den
    upsilon = s * alpha
    z = 2.0 * p.mu**2 * s / den
    return DispersionScalars(Omega_mu(p), omega_mu, alpha, upsilon, z)
