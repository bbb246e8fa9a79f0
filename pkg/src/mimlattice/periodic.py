"""Small-amplitude periodic traveling waves of the mass-in-mass lattice.

In the variable ``X = omega x`` a periodic solution is a pair ``phi =
(phi1, phi2)`` of a mean-zero cosine series and a sine series.  The lab-frame
profile is ``rho(x) = (mu phi1(omega x), phi2(omega x))``.  Each Fourier mode
``k`` of the linear part is a real 2x2 block; at ``omega = omega_mu`` the
``k = 1`` block is singular with kernel ``nu = (upsilon cos X, sin X)``.

The family ``phi = a (nu + psi)``, ``omega = omega_mu + xi`` is computed by
alternating a scalar solve for ``xi`` (the projection onto the adjoint kernel
``(z cos X, sin X)``) with a mode-wise inversion for ``psi``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .dispersion import DispersionScalars, LatticeParams, check_validity, kernel_scalars

__all__ = [
    "PeriodicCoeffs",
    "PeriodicFamilyPoint",
    "PeriodicConvergenceError",
    "mode_blocks",
    "gamma_apply",
    "quadratic_part",
    "nonlinear_residual",
    "adjoint_pairing",
    "kernel_vector",
    "solve_periodic",
    "verify_in_lab_frame",
    "lab_residual",
    "lipschitz_constant",
]


class PeriodicConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PeriodicCoeffs:
    """``phi1 = sum_k p[k-1] cos(kX)``, ``phi2 = sum_k s[k-1] sin(kX)``, ``k = 1..K``."""

    phi1: np.ndarray
    phi2: np.ndarray

    def __post_init__(self):
        p = np.array(self.phi1, dtype=float)
        s = np.array(self.phi2, dtype=float)
        if p.shape != s.shape or p.ndim != 1:
            raise ValueError("phi1 and phi2 must be 1-D arrays of equal length")
        p.setflags(write=False)
        s.setflags(write=False)
        object.__setattr__(self, "phi1", p)
        object.__setattr__(self, "phi2", s)

    @property
    def K_trunc(self) -> int:
        return len(self.phi1)

    @classmethod
    def zeros(cls, K: int) -> "PeriodicCoeffs":
        return cls(np.zeros(K), np.zeros(K))

    def __add__(self, other):
        return PeriodicCoeffs(self.phi1 + other.phi1, self.phi2 + other.phi2)

    def __sub__(self, other):
        return PeriodicCoeffs(self.phi1 - other.phi1, self.phi2 - other.phi2)

    def __mul__(self, scalar: float):
        return PeriodicCoeffs(scalar * self.phi1, scalar * self.phi2)

    __rmul__ = __mul__

    def norm(self) -> float:
        return float(max(np.max(np.abs(self.phi1)), np.max(np.abs(self.phi2))))

    def tail(self, modes: int = 8) -> float:
        return float(
            max(np.max(np.abs(self.phi1[-modes:])), np.max(np.abs(self.phi2[-modes:])))
        )

    def evaluate(self, X, derivative: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """Values (or ``X``-derivatives) of ``(phi1, phi2)`` at points ``X``."""
        X = np.asarray(X, dtype=float)
        k = np.arange(1, self.K_trunc + 1)
        kx = np.multiply.outer(X, k)
        c, s = np.cos(kx), np.sin(kx)
        kd = k.astype(float) ** derivative
        # cycle through derivatives of cos and sin
        r = derivative % 4
        cos_d = [c, -s, -c, s][r]
        sin_d = [s, c, -s, -c][r]
        return cos_d @ (kd * self.phi1), sin_d @ (kd * self.phi2)


@dataclass(frozen=True)
class PeriodicFamilyPoint:
    """One member ``a phi`` of the periodic family.

    ``profile`` is ``nu + psi`` and ``phi = a * profile`` solves the periodic
    problem at frequency ``omega``.
    """

    a: float
    mu: float
    omega: float
    psi: PeriodicCoeffs
    phi: PeriodicCoeffs
    profile: PeriodicCoeffs
    residual: float
    scaled_residual: float
    sweeps: int
    params: LatticeParams
    scalars: DispersionScalars

    def lab_profile(self, x, derivative: int = 0, amplitude: float = 1.0):
        """``amplitude * (mu profile1, profile2)(omega x)`` and its x-derivatives."""
        f1, f2 = self.profile.evaluate(self.omega * np.asarray(x, dtype=float), derivative)
        scale = amplitude * self.omega**derivative
        return scale * self.mu * f1, scale * f2

    def metadata(self) -> dict:
        return {
            "a": self.a,
            "mu": self.mu,
            "omega": self.omega,
            "omega_mu": self.scalars.omega_mu,
            "residual": self.residual,
            "scaled_residual": self.scaled_residual,
            "sweeps": self.sweeps,
            "K_trunc": self.psi.K_trunc,
            "tail": self.profile.tail(),
        }

    def table(self, npts: int = 256) -> dict:
        X = 2.0 * np.pi * np.arange(npts) / npts
        f1, f2 = self.phi.evaluate(X)
        return {"X": X, "phi1": f1, "phi2": f2}


# --------------------------------------------------------------------------
# linear part


def mode_blocks(omega: float, p: LatticeParams, K: int) -> np.ndarray:
    """Real 2x2 blocks of the linear operator for modes ``k = 1..K``.

    Block ``k`` maps the coefficient pair (cos of ``phi1``, sin of ``phi2``)
    to the same pair of the output.  Shape ``(K, 2, 2)``.
    """
    k = np.arange(1, K + 1, dtype=float)
    c2 = p.c**2 * p.mu * omega**2 * k**2
    s = np.sin(0.5 * omega * k)
    M = np.empty((K, 2, 2))
    M[:, 0, 0] = -c2 - p.mu * (2.0 * np.cos(omega * k) - 2.0)
    M[:, 0, 1] = 2.0 * p.kappa * s
    M[:, 1, 0] = 2.0 * p.mu**2 * s
    M[:, 1, 1] = -c2 + p.kappa * (1.0 + p.mu)
    return M


def _apply_blocks(M: np.ndarray, phi: PeriodicCoeffs) -> PeriodicCoeffs:
    v = np.stack([phi.phi1, phi.phi2], axis=1)
    out = np.einsum("kij,kj->ki", M, v)
    return PeriodicCoeffs(out[:, 0], out[:, 1])


def gamma_apply(phi: PeriodicCoeffs, omega: float, p: LatticeParams) -> PeriodicCoeffs:
    """Linear part ``c^2 mu omega^2 phi'' + D_mu[omega] diag(mu, 1) phi``."""
    return _apply_blocks(mode_blocks(omega, p, phi.K_trunc), phi)


def _square_cos(p_coeffs: np.ndarray) -> np.ndarray:
    """Cosine coefficients (modes 0..K) of the square of a cosine series."""
    K = len(p_coeffs)
    npts = 4 * (K + 1)
    z = np.zeros(npts, dtype=complex)
    z[1 : K + 1] = 0.5 * p_coeffs
    z[-K:] = 0.5 * p_coeffs[::-1]
    f = np.fft.ifft(z).real * npts
    g = np.fft.fft(f * f).real / npts
    out = 2.0 * g[: K + 1]
    out[0] = g[0]
    return out


def quadratic_part(phi: PeriodicCoeffs, omega: float, p: LatticeParams) -> PeriodicCoeffs:
    """``D_mu[omega] Q(I phi, I phi)`` with ``I = diag(mu, 1)``.

    Equals ``(-A_omega(mu^2 phi1^2), -mu delta_omega(mu^2 phi1^2))``; the mean
    of ``phi1^2`` is annihilated by both difference operators.
    """
    K = phi.K_trunc
    q = p.mu**2 * _square_cos(phi.phi1)[1:]
    k = np.arange(1, K + 1, dtype=float)
    out1 = -(2.0 * np.cos(omega * k) - 2.0) * q
    # delta maps cos(kX) to -2 sin(omega k / 2) sin(kX)
    out2 = -p.mu * (-2.0 * np.sin(0.5 * omega * k)) * q
    return PeriodicCoeffs(out1, out2)


def nonlinear_residual(phi: PeriodicCoeffs, omega: float, p: LatticeParams) -> PeriodicCoeffs:
    """Full periodic operator ``Gamma[omega] phi + D_mu[omega] Q(I phi, I phi)``."""
    if phi.K_trunc < 8:
        raise ValueError("K_trunc must be at least 8")
    return gamma_apply(phi, omega, p) + quadratic_part(phi, omega, p)


def kernel_vector(scal: DispersionScalars, K: int) -> PeriodicCoeffs:
    p1, p2 = np.zeros(K), np.zeros(K)
    p1[0], p2[0] = scal.upsilon_mu, 1.0
    return PeriodicCoeffs(p1, p2)


def adjoint_pairing(g: PeriodicCoeffs, scal: DispersionScalars) -> float:
    """``<g, (z cos X, sin X)>`` over one period, divided by ``pi``."""
    return float(scal.z_mu * g.phi1[0] + g.phi2[0])


def _solve_blocks(M: np.ndarray, g: PeriodicCoeffs, z: float) -> PeriodicCoeffs:
    """Invert the blocks at ``omega_mu`` with the ``k = 1`` constrained reduction.

    For ``k = 1`` the singular second row is replaced by the normalization
    ``z p + s = 0``, orthogonality to the adjoint kernel.
    """
    Mc = M.copy()
    rhs = np.stack([g.phi1, g.phi2], axis=1)
    Mc[0, 1, :] = (z, 1.0)
    rhs[0, 1] = 0.0
    sol = np.linalg.solve(Mc, rhs[..., None])[..., 0]
    return PeriodicCoeffs(sol[:, 0], sol[:, 1])


# --------------------------------------------------------------------------
# the family


def _xi_equation(xi, a, scal, p, psi_plus_nu):
    omega = scal.omega_mu + xi
    r = gamma_apply(psi_plus_nu, omega, p) + a * quadratic_part(psi_plus_nu, omega, p)
    return adjoint_pairing(r, scal)


def _solve_xi(a, scal, p, prof, xi0):
    f = lambda xi: _xi_equation(xi, a, scal, p, prof)
    if f(xi0) == 0.0:
        return xi0
    # the pairing is monotone in xi near 0; expand a bracket around the last value
    h = max(abs(xi0), 1e-8 * scal.omega_mu, abs(a) * 1e-3)
    lo, hi = xi0 - h, xi0 + h
    flo, fhi = f(lo), f(hi)
    for _ in range(60):
        if flo * fhi <= 0:
            break
        h *= 2.0
        lo, hi = xi0 - h, xi0 + h
        flo, fhi = f(lo), f(hi)
    else:
        raise PeriodicConvergenceError("could not bracket the frequency correction")
    return brentq(f, lo, hi, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=200)


def solve_periodic(
    a: float,
    p: LatticeParams,
    tol: float = 1e-12,
    K_trunc: int = 64,
    a_cap: float = 0.05,
    max_sweeps: int = 100,
    scalars: DispersionScalars | None = None,
) -> PeriodicFamilyPoint:
    """Periodic wave ``a (nu + psi)`` at frequency ``omega_mu + xi``.

    Each sweep solves the scalar projected equation for ``xi``, then updates
    ``psi`` by inverting the blocks at ``omega_mu`` on the complement of the
    kernel.  Stops when the scaled residual
    ``||Gamma[omega](nu + psi) + a N(nu + psi)||`` drops below ``tol``.
    """
    if abs(a) > a_cap:
        raise ValueError(f"|a|={abs(a):g} exceeds the amplitude cap {a_cap:g}")
    if K_trunc < 8:
        raise ValueError("K_trunc must be at least 8")
    check_validity(p)
    scal = scalars if scalars is not None else kernel_scalars(p)
    nu = kernel_vector(scal, K_trunc)
    M0 = mode_blocks(scal.omega_mu, p, K_trunc)
    psi = PeriodicCoeffs.zeros(K_trunc)
    xi = 0.0
    history = []
    for sweep in range(1, max_sweeps + 1):
        prof = nu + psi
        xi = _solve_xi(a, scal, p, prof, xi)
        omega = scal.omega_mu + xi
        full = gamma_apply(prof, omega, p) + a * quadratic_part(prof, omega, p)
        scaled = full.norm()
        history.append(scaled)
        if scaled < tol:
            break
        # Gamma[omega_mu] psi = Gamma[omega_mu] psi - full; pairing with the adjoint is 0
        rhs = _apply_blocks(M0, psi) - full
        psi = _solve_blocks(M0, rhs, scal.z_mu)
        if sweep > 10 and history[-1] > 0.9 * history[-6]:
            raise PeriodicConvergenceError(
                f"periodic iteration stagnated at {scaled:.3g} for a={a:g}"
            )
    else:
        raise PeriodicConvergenceError(
            f"no convergence in {max_sweeps} sweeps (residual {scaled:.3g})"
        )
    prof = nu + psi
    phi = a * prof
    residual = nonlinear_residual(phi, omega, p).norm()
    return PeriodicFamilyPoint(
        a=float(a),
        mu=p.mu,
        omega=omega,
        psi=psi,
        phi=phi,
        profile=prof,
        residual=residual,
        scaled_residual=scaled,
        sweeps=sweep,
        params=p,
        scalars=scal,
    )


def lab_residual(
    rho1, rho2, x: np.ndarray, p: LatticeParams
) -> tuple[np.ndarray, np.ndarray]:
    """Pointwise traveling-wave residual with exact lattice shifts.

    ``rho1`` and ``rho2`` are callables ``f(x, derivative=0)``.
    """
    def v(r1):
        return r1 + r1**2

    r1 = rho1(x)
    a_q = v(rho1(x + 1.0)) - 2.0 * v(r1) + v(rho1(x - 1.0))
    d_r2 = rho2(x + 0.5) - rho2(x - 0.5)
    d_v1 = v(rho1(x + 0.5)) - v(rho1(x - 0.5))
    g1 = p.c**2 * rho1(x, 2) - a_q + p.kappa * d_r2
    g2 = p.c**2 * p.mu * rho2(x, 2) + p.kappa * (1.0 + p.mu) * rho2(x) - p.mu * d_v1
    return g1, g2


def verify_in_lab_frame(pt: PeriodicFamilyPoint, domain=None, x=None) -> float:
    """Sup norm of the lab-frame residual of ``rho = a (mu phi1, phi2)(omega x)``."""
    if x is None:
        x = domain.grid if domain is not None else np.linspace(-20.0, 20.0, 801)
    rho1 = lambda t, d=0: pt.lab_profile(t, d, pt.a)[0]
    rho2 = lambda t, d=0: pt.lab_profile(t, d, pt.a)[1]
    g1, g2 = lab_residual(rho1, rho2, np.asarray(x, dtype=float), pt.params)
    return float(max(np.max(np.abs(g1)), np.max(np.abs(g2))))


def lipschitz_constant(points: list[PeriodicFamilyPoint]) -> float:
    """Largest difference quotient of ``a -> (omega, psi)`` over consecutive points."""
    pts = sorted(points, key=lambda q: q.a)
    best = 0.0
    for q0, q1 in zip(pts[:-1], pts[1:]):
        da = q1.a - q0.a
        dpsi = (q1.psi - q0.psi).norm()
        dom = abs(q1.omega - q0.omega)
        best = max(best, max(dpsi, dom) / da)
    return best
