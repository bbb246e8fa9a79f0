"""Monatomic FPUT solitary wave and its small-mass refinement.

The profile ``sigma`` solves ``c^2 sigma'' - A(sigma + sigma^2) = 0`` and is
computed by Petviashvili iteration.  Around it we build the linearization
``H_c f = c^2 f'' - A((1 + 2 sigma) f)`` as a dense Galerkin matrix on the
cosine basis, and use it for the chord-Newton solve of the refined limit
``varsigma = sigma + mu zeta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .dispersion import LatticeParams
from .spectral import (
    DomainSpec,
    Parity,
    TrigSeries,
    apply_A,
    apply_delta,
    second_derivative,
)

__all__ = [
    "MonatomicWave",
    "RefinedLimit",
    "ConvergenceError",
    "ConditioningError",
    "petviashvili_symbol",
    "solve_sigma",
    "monatomic_residual",
    "apply_Hc",
    "hc_matrix",
    "solve_Hc",
    "hc_condition",
    "refine_limit",
    "first_component",
    "second_component",
]


_POSITIVITY_FLOOR = 1e-12


class ConvergenceError(RuntimeError):
    pass


class ConditioningError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class MonatomicWave:
    """Even, positive solitary wave of the monatomic chain at speed ``c``."""

    sigma: TrigSeries
    c: float
    residual_norm: float
    decay_fit_q: float
    iterations: int = 0
    stabilization: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def domain(self) -> DomainSpec:
        return self.sigma.domain

    def metadata(self) -> dict:
        return {
            "c": self.c,
            "half_length": self.domain.half_length,
            "num_modes": self.domain.num_modes,
            "residual": self.residual_norm,
            "decay_fit_q": self.decay_fit_q,
            "iterations": self.iterations,
            "stabilization": self.stabilization,
            "amplitude": float(self.sigma(0.0)),
        }

    def table(self) -> dict:
        return {"x": self.domain.grid, "sigma": self.sigma.samples()}


@dataclass(frozen=True, eq=False)
class RefinedLimit:
    """Core profile ``varsigma = (sigma + mu zeta1, mu zeta2)``."""

    zeta1: TrigSeries
    zeta2: TrigSeries
    mu: float
    e2_residual: float
    e1_residual: float = 0.0
    newton_iterations: int = 0

    def varsigma(self, wave: MonatomicWave) -> tuple[TrigSeries, TrigSeries]:
        return wave.sigma + self.mu * self.zeta1, self.mu * self.zeta2


# --------------------------------------------------------------------------
# solitary wave


def petviashvili_symbol(k, c: float) -> np.ndarray:
    """``m(k) = (2 - 2 cos k) / (c^2 k^2 - (2 - 2 cos k))`` with ``m(0) = 1/(c^2-1)``."""
    k = np.asarray(k, dtype=float)
    # 4 sin^2(k/2) avoids the cancellation in 2 - 2 cos k at small k
    a = 4.0 * np.sin(0.5 * k) ** 2
    den = c**2 * k**2 - a
    out = np.empty_like(k)
    small = np.abs(k) < 1e-4
    out[~small] = a[~small] / den[~small]
    # series in k^2 about 0: a = k^2 - k^4/12, den = (c^2-1) k^2 + k^4/12
    k2 = k[small] ** 2
    out[small] = (1.0 - k2 / 12.0) / ((c**2 - 1.0) + k2 / 12.0)
    return out


def monatomic_residual(sigma: TrigSeries, c: float) -> TrigSeries:
    """``c^2 sigma'' - A(sigma + sigma^2)``."""
    return c**2 * second_derivative(sigma) - apply_A(sigma + sigma * sigma)


def _inner(u: np.ndarray, v: np.ndarray) -> float:
    # cosine-coefficient inner product proportional to the L2 one
    w = np.full(len(u), 0.5)
    w[0] = 1.0
    return float(np.sum(w * u * v))


def _fit_decay(sigma: TrigSeries) -> float:
    """Exponential tail rate from a log-linear fit of ``|sigma|``.

    Uses ``x in [L/2, 0.9 L]`` where the profile is above roundoff; when the
    tail there is already at roundoff the window slides inward to where
    ``|sigma|`` lies between ``1e-12`` and ``1e-3`` of its peak.
    """
    x = sigma.domain.grid
    v = np.abs(sigma.samples())
    peak = v.max()
    L = sigma.domain.half_length
    floor = 1e-12 * peak
    mask = (x >= 0.5 * L) & (x <= 0.9 * L) & (v > floor)
    if mask.sum() < 8:
        mask = (x > 0) & (v > floor) & (v < 1e-3 * peak)
    if mask.sum() < 3:
        return float("nan")
    slope = np.polyfit(x[mask], np.log(v[mask]), 1)[0]
    return float(-slope)


def solve_sigma(
    c: float,
    domain: DomainSpec,
    tol: float = 1e-11,
    max_iter: int = 500,
    gamma: float = 2.0,
) -> MonatomicWave:
    """Petviashvili iteration for the even solitary wave.

    Iterates ``sigma <- S**gamma M[sigma^2]`` with the multiplier of
    :func:`petviashvili_symbol` and stabilizing factor
    ``S = <sigma, (c^2 k^2 - a) sigma> / <sigma, a sigma^2>`` (``a = 2 - 2 cos k``)
    until the sup-norm residual drops below ``tol``.
    """
    if not abs(c) > 1:
        raise ValueError(f"need |c| > 1, got {c}")
    c2m1 = c**2 - 1.0
    amp, width = 1.5 * c2m1, 0.5 * math.sqrt(6.0 * c2m1)
    sigma = TrigSeries.from_function(
        domain, lambda x: amp / np.cosh(width * x) ** 2, Parity.EVEN
    )
    k = domain.wavenumbers
    m = petviashvili_symbol(k, c)
    a = 4.0 * np.sin(0.5 * k) ** 2
    lin = c**2 * k**2 - a
    S = float("nan")
    res = float("inf")
    for it in range(1, max_iter + 1):
        sq = (sigma * sigma).coeffs
        S = _inner(sigma.coeffs, lin * sigma.coeffs) / _inner(sigma.coeffs, a * sq)
        if it > 5 and not 0.5 <= S <= 2.0:
            raise ConvergenceError(f"stabilization factor {S:.3g} left [0.5, 2]")
        sigma = sigma.with_coeffs(S**gamma * m * sq)
        res = monatomic_residual(sigma, c).sup_norm()
        if res < tol:
            break
    else:
        raise ConvergenceError(
            f"Petviashvili did not reach {tol:g} in {max_iter} iterations (res {res:.3g})"
        )
    v = sigma.samples()
    # the far tail sits at roundoff, so positivity is checked relative to the peak
    if np.min(v) < -_POSITIVITY_FLOOR * np.max(v):
        raise ConvergenceError(f"converged profile is not positive (min {np.min(v):.3g})")
    return MonatomicWave(sigma, float(c), res, _fit_decay(sigma), it, S)


# --------------------------------------------------------------------------
# linearization H_c


def apply_Hc(f: TrigSeries, wave: MonatomicWave) -> TrigSeries:
    """``c^2 f'' - A((1 + 2 sigma) f)`` for an even ``f``."""
    if f.parity is not Parity.EVEN:
        raise ValueError("H_c acts on even (cosine) series")
    return wave.c**2 * second_derivative(f) - apply_A(f + 2.0 * (wave.sigma * f))


def _product_matrix(s: np.ndarray) -> np.ndarray:
    """Matrix of ``f -> sigma f`` on cosine coefficients, truncated to ``N/2``."""
    n = len(s) - 1
    sp = np.zeros(2 * n + 1)
    sp[: n + 1] = s
    i = np.arange(n + 1)[:, None]
    j = np.arange(n + 1)[None, :]
    diff = i - j
    T = np.where(diff >= 0, sp[np.abs(diff)], 0.0)
    T = T + sp[i + j]
    T = T + np.where((diff <= 0) & (i > 0), sp[np.abs(diff)], 0.0)
    return 0.5 * T


def hc_matrix(wave: MonatomicWave, sigma_coeffs: np.ndarray | None = None) -> np.ndarray:
    """Dense Galerkin matrix of ``H_c`` on the cosine coefficients.

    Row 0 is identically zero because every term of ``H_c f`` has zero mean.
    """
    s = wave.sigma.coeffs if sigma_coeffs is None else np.asarray(sigma_coeffs)
    k = wave.domain.wavenumbers
    a = 2.0 - 2.0 * np.cos(k)
    H = 2.0 * a[:, None] * _product_matrix(s)
    H[np.diag_indices_from(H)] += -wave.c**2 * k**2 + a
    return H


def _hc_factor(wave: MonatomicWave, mode: str):
    key = ("hc", mode)
    if key in wave._cache:
        return wave._cache[key]
    H = hc_matrix(wave)
    if mode == "decay":
        # pin f(-L) = sum_n a_n (-1)^n to zero in place of the empty mean row
        H[0] = np.where(np.arange(H.shape[1]) % 2 == 0, 1.0, -1.0)
    elif mode == "mean_zero":
        H = H[1:, 1:]
    else:
        raise ValueError(f"unknown H_c mode {mode!r}")
    cond = np.linalg.cond(H)
    if not cond < 1e12:
        raise ConditioningError(
            f"H_c Galerkin matrix condition number {cond:.3g} exceeds 1e12"
        )
    entry = (sla.lu_factor(H), cond)
    wave._cache[key] = entry
    return entry


def hc_condition(wave: MonatomicWave, mode: str = "decay") -> float:
    return _hc_factor(wave, mode)[1]


def solve_Hc(g: TrigSeries, wave: MonatomicWave, mode: str = "decay") -> TrigSeries:
    """Solve ``H_c f = g`` for even ``f`` given even mean-zero ``g``.

    On the periodic interval ``H_c`` maps onto mean-zero functions and has a
    one-dimensional kernel close to a constant.  ``mode="decay"`` fixes that
    freedom by requiring ``f(-L) = 0``, which selects the decaying real-line
    solution; ``mode="mean_zero"`` instead restricts ``f`` to zero mean.
    """
    if g.parity is not Parity.EVEN:
        raise ValueError("H_c inverse needs an even right-hand side")
    scale = max(np.max(np.abs(g.coeffs)), 1e-300)
    if abs(g.coeffs[0]) > 1e-10 * max(1.0, scale):
        raise ValueError(f"right-hand side is not mean-zero (mean {g.coeffs[0]:.3g})")
    lu, _ = _hc_factor(wave, mode)
    rhs = np.array(g.coeffs)
    if mode == "decay":
        rhs[0] = 0.0
        f = sla.lu_solve(lu, rhs)
    else:
        f = np.zeros_like(rhs)
        f[1:] = sla.lu_solve(lu, rhs[1:])
    return TrigSeries(g.domain, Parity.EVEN, f)


# --------------------------------------------------------------------------
# refined limit


def first_component(rho1: TrigSeries, rho2: TrigSeries, p: LatticeParams) -> TrigSeries:
    """``c^2 rho1'' - A(rho1 + rho1^2) + kappa delta rho2``."""
    return (
        p.c**2 * second_derivative(rho1)
        - apply_A(rho1 + rho1 * rho1)
        + p.kappa * apply_delta(rho2)
    )


def second_component(rho1: TrigSeries, rho2: TrigSeries, p: LatticeParams) -> TrigSeries:
    """``c^2 mu rho2'' + kappa (1 + mu) rho2 - mu delta(rho1 + rho1^2)``."""
    return (
        p.c**2 * p.mu * second_derivative(rho2)
        + p.kappa * (1.0 + p.mu) * rho2
        - p.mu * apply_delta(rho1 + rho1 * rho1)
    )


def refine_limit(
    wave: MonatomicWave,
    p: LatticeParams,
    tol: float = 1e-11,
    max_iter: int = 25,
) -> RefinedLimit:
    """Correct ``sigma`` to order ``mu`` so the first equation holds exactly.

    ``zeta2 = delta(sigma + sigma^2) / kappa`` removes the order-``mu`` part
    of the second equation; ``zeta1`` then comes from chord Newton on the
    first equation with ``H_c`` as the frozen Jacobian.
    """
    if p.c != wave.c:
        raise ValueError(f"wave speed {wave.c} does not match params c={p.c}")
    sigma = wave.sigma
    zeta2 = apply_delta(sigma + sigma * sigma) / p.kappa
    rho2 = p.mu * zeta2
    rho1 = sigma
    res = first_component(rho1, rho2, p)
    r = res.sup_norm()
    it = 0
    while r >= tol:
        if it >= max_iter:
            raise ConvergenceError(
                f"refined-limit Newton stalled at residual {r:.3g} after {max_iter} steps"
            )
        rho1 = rho1 - solve_Hc(res, wave)
        res = first_component(rho1, rho2, p)
        r = res.sup_norm()
        it += 1
    zeta1 = (rho1 - sigma) / p.mu if p.mu > 0 else TrigSeries.zeros(sigma.domain, Parity.EVEN)
    e2 = second_component(rho1, rho2, p).sup_norm()
    return RefinedLimit(zeta1, zeta2, p.mu, e2, r, it)
