"""Parity-split trigonometric series on a periodized interval.

Every profile in the package lives on ``[-L, L)`` sampled at ``N`` equispaced
points ``x_j = -L + 2 L j / N`` and is stored as either a cosine series
(even functions) or a sine series (odd functions) in the wavenumbers
``k_n = pi n / L``, ``n = 0 .. N/2``.  Fourier multipliers act diagonally on
the stored coefficients; products go through the grid with zero padding.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

__all__ = [
    "Parity",
    "DomainSpec",
    "TrigSeries",
    "MultiplierSymbol",
    "DomainMismatchError",
    "WeightOverflowError",
    "domain_for_frequency",
    "apply_A",
    "apply_delta",
    "derivative",
    "second_derivative",
    "pointwise_product",
    "multiply_samples",
    "weighted_norm",
    "A_SYMBOL",
    "DELTA_SYMBOL",
]


class DomainMismatchError(ValueError):
    pass


class WeightOverflowError(ValueError):
    pass


class Parity(enum.Enum):
    EVEN = "EvenCosine"
    ODD = "OddSine"

    def flip(self) -> "Parity":
        return Parity.ODD if self is Parity.EVEN else Parity.EVEN

    def times(self, other: "Parity") -> "Parity":
        return Parity.EVEN if self is other else Parity.ODD


@dataclass(frozen=True)
class DomainSpec:
    """Discretization of the real line as the periodic interval ``[-L, L)``.

    Parameters
    ----------
    half_length : float
        Half period ``L`` in lattice-spacing units.
    num_modes : int
        Number of grid points ``N``; must be a power of two.
    resonant_index : int, optional
        Mode ``n*`` whose wavenumber equals ``target_frequency`` exactly.
    target_frequency : float, optional
        The frequency pinned to mode ``n*``.
    """

    half_length: float
    num_modes: int
    resonant_index: int | None = None
    target_frequency: float | None = None

    def __post_init__(self):
        if not self.half_length > 0:
            raise ValueError("half_length must be positive")
        n = int(self.num_modes)
        if n < 4 or n & (n - 1):
            raise ValueError(f"num_modes must be a power of two >= 4, got {n}")
        if (self.resonant_index is None) != (self.target_frequency is None):
            raise ValueError("resonant_index and target_frequency go together")
        if self.resonant_index is not None:
            if self.resonant_index < 1:
                raise ValueError("resonant_index must be positive")
            if n < 4 * self.resonant_index:
                raise ValueError(
                    f"num_modes={n} < 4*resonant_index={4 * self.resonant_index}"
                )
            k = math.pi * self.resonant_index / self.half_length
            if abs(k - self.target_frequency) > 8 * np.finfo(float).eps * k:
                raise ValueError("resonant wavenumber does not match target")

    @property
    def n_half(self) -> int:
        return self.num_modes // 2

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_length / self.num_modes

    @property
    def grid(self) -> np.ndarray:
        return -self.half_length + self.spacing * np.arange(self.num_modes)

    @property
    def wavenumbers(self) -> np.ndarray:
        k = np.pi * np.arange(self.n_half + 1) / self.half_length
        if self.resonant_index is not None:
            k[self.resonant_index] = self.target_frequency
        return k

    def same_as(self, other: "DomainSpec") -> bool:
        return (
            self.num_modes == other.num_modes
            and self.half_length == other.half_length
        )

    def refined(self, factor: int = 2) -> "DomainSpec":
        """Same interval with ``factor`` times as many modes."""
        return DomainSpec(
            self.half_length,
            self.num_modes * factor,
            self.resonant_index,
            self.target_frequency,
        )


def domain_for_frequency(target: float, min_half_length: float, modes: int) -> DomainSpec:
    """Build a domain on which ``sin(target * x)`` is a single grid mode.

    The half length is ``L = pi n* / target`` with ``n*`` the smallest
    integer making ``L >= min_half_length``.
    """
    if not target > 0:
        raise ValueError("target frequency must be positive")
    ratio = target * min_half_length / math.pi
    n_star = max(1, math.ceil(ratio - 1e-9 * max(1.0, ratio)))
    if modes < 4 * n_star:
        raise ValueError(
            f"modes={modes} too small: need at least 4*n*={4 * n_star} "
            f"to resolve frequency {target:g} on L>={min_half_length:g}"
        )
    half_length = math.pi * n_star / target
    return DomainSpec(half_length, modes, n_star, float(target))


# --------------------------------------------------------------------------
# grid <-> coefficient transforms


def _synthesize(coeffs: np.ndarray, parity: Parity, npts: int) -> np.ndarray:
    # sum_n c_n cos/sin(k_n x_j) on an npts-point grid of [-L, L)
    z = np.zeros(npts, dtype=complex)
    m = min(len(coeffs), npts // 2 + 1)
    sign = np.where(np.arange(m) % 2 == 0, 1.0, -1.0)
    z[:m] = coeffs[:m] * sign
    w = np.fft.ifft(z) * npts
    return w.real if parity is Parity.EVEN else w.imag


def _analyze(values: np.ndarray, parity: Parity, n_half: int) -> np.ndarray:
    # inverse of _synthesize, truncated to modes 0..n_half
    npts = len(values)
    c = np.fft.fft(values) / npts
    m = min(n_half, npts // 2)
    out = np.zeros(n_half + 1)
    sign = np.where(np.arange(m + 1) % 2 == 0, 1.0, -1.0)
    cm = c[: m + 1] * sign
    if parity is Parity.EVEN:
        out[: m + 1] = 2.0 * cm.real
        out[0] = cm[0].real
        if m == npts // 2:
            out[m] = cm[m].real
    else:
        out[: m + 1] = -2.0 * cm.imag
        out[0] = 0.0
        if m == npts // 2:
            out[m] = 0.0
    return out


@dataclass(frozen=True, eq=False)
class TrigSeries:
    """A cosine series (``Parity.EVEN``) or sine series (``Parity.ODD``).

    ``coeffs[n]`` multiplies ``cos(k_n x)`` or ``sin(k_n x)`` for
    ``n = 0 .. N/2``.  For sine series ``coeffs[0]`` is always zero; the
    Nyquist sine coefficient is kept at the coefficient level even though
    ``sin(k_{N/2} x)`` vanishes on the grid.
    """

    domain: DomainSpec
    parity: Parity
    coeffs: np.ndarray
    weight_hint: float | None = field(default=None, compare=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        if c.shape != (self.domain.n_half + 1,):
            raise ValueError(
                f"expected {self.domain.n_half + 1} coefficients, got {c.shape}"
            )
        if self.parity is Parity.ODD:
            c[0] = 0.0
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    # construction -------------------------------------------------------

    @classmethod
    def zeros(cls, domain: DomainSpec, parity: Parity) -> "TrigSeries":
        return cls(domain, parity, np.zeros(domain.n_half + 1))

    @classmethod
    def from_samples(cls, domain: DomainSpec, values, parity: Parity) -> "TrigSeries":
        """Project grid samples onto the requested parity."""
        v = np.asarray(values, dtype=float)
        if v.shape != (domain.num_modes,):
            raise ValueError("sample array does not match the grid")
        return cls(domain, parity, _analyze(v, parity, domain.n_half))

    @classmethod
    def from_function(cls, domain: DomainSpec, func: Callable, parity: Parity) -> "TrigSeries":
        return cls.from_samples(domain, func(domain.grid), parity)

    @classmethod
    def mode(cls, domain: DomainSpec, n: int, parity: Parity, amplitude=1.0) -> "TrigSeries":
        c = np.zeros(domain.n_half + 1)
        c[n] = amplitude
        return cls(domain, parity, c)

    # evaluation ---------------------------------------------------------

    def samples(self) -> np.ndarray:
        return _synthesize(self.coeffs, self.parity, self.domain.num_modes)

    def samples_on(self, npts: int) -> np.ndarray:
        """Values on a finer uniform grid of ``npts`` points (``npts`` even)."""
        return _synthesize(self.coeffs, self.parity, npts)

    def __call__(self, x, derivative: int = 0, chunk: int = 2048) -> np.ndarray:
        """Evaluate the trigonometric interpolant (or a derivative) at ``x``."""
        x = np.asarray(x, dtype=float)
        flat = x.ravel()
        k = self.domain.wavenumbers
        c = self.coeffs * k**derivative
        # d/dx cycles cos -> -sin -> -cos -> sin
        phase = derivative % 4
        trig_is_cos = (self.parity is Parity.EVEN) == (phase % 2 == 0)
        if self.parity is Parity.EVEN:
            sign = 1.0 if phase in (0, 3) else -1.0
        else:
            sign = 1.0 if phase in (0, 1) else -1.0
        out = np.empty_like(flat)
        trig = np.cos if trig_is_cos else np.sin
        for start in range(0, len(flat), chunk):
            xs = flat[start : start + chunk]
            out[start : start + chunk] = trig(np.outer(xs, k)) @ c
        return sign * out.reshape(x.shape)

    # linear structure ---------------------------------------------------

    def _check(self, other: "TrigSeries"):
        if not self.domain.same_as(other.domain):
            raise DomainMismatchError("series live on different domains")
        if self.parity is not other.parity:
            raise ValueError("cannot add series of different parity")

    def with_coeffs(self, coeffs) -> "TrigSeries":
        return TrigSeries(self.domain, self.parity, coeffs, self.weight_hint)

    def __add__(self, other: "TrigSeries") -> "TrigSeries":
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "TrigSeries") -> "TrigSeries":
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __neg__(self) -> "TrigSeries":
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> "TrigSeries":
        if isinstance(scalar, TrigSeries):
            return pointwise_product(self, scalar)
        return self.with_coeffs(float(scalar) * self.coeffs)

    __rmul__ = __mul__

    def __truediv__(self, scalar: float) -> "TrigSeries":
        return self.with_coeffs(self.coeffs / float(scalar))

    # diagnostics --------------------------------------------------------

    @property
    def mean(self) -> float:
        return float(self.coeffs[0]) if self.parity is Parity.EVEN else 0.0

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.samples()), initial=0.0))

    def l2_norm(self) -> float:
        """Continuous L2 norm over one period, from the coefficients."""
        c = self.coeffs
        w = np.full(len(c), 0.5)
        if self.parity is Parity.EVEN:
            w[0] = 1.0
        return float(np.sqrt(2.0 * self.domain.half_length * np.sum(w * c**2)))

    def l1_norm(self) -> float:
        """Trapezoid-rule L1 norm over one period."""
        return float(self.domain.spacing * np.sum(np.abs(self.samples())))

    def integral(self) -> float:
        return 2.0 * self.domain.half_length * self.mean

    def odd_part_energy(self) -> float:
        """Energy of the grid samples in the opposite parity (0 up to roundoff)."""
        v = self.samples()
        reflected = np.roll(v[::-1], 1)
        if self.parity is Parity.EVEN:
            bad = 0.5 * (v - reflected)
        else:
            bad = 0.5 * (v + reflected)
        return float(self.domain.spacing * np.sum(bad**2))

    def coefficient_tail(self, fraction: float = 0.1) -> float:
        """Largest coefficient magnitude in the top ``fraction`` of modes."""
        n = len(self.coeffs)
        start = int(n * (1.0 - fraction))
        return float(np.max(np.abs(self.coeffs[start:]), initial=0.0))

    def __repr__(self) -> str:
        return (
            f"TrigSeries({self.parity.value}, L={self.domain.half_length:.6g}, "
            f"N={self.domain.num_modes}, sup={self.sup_norm():.3e})"
        )


# --------------------------------------------------------------------------
# Fourier multipliers


@dataclass(frozen=True)
class MultiplierSymbol:
    """Real symbol ``s(k)`` of a Fourier multiplier.

    If ``flips_parity`` is set the multiplier is ``i s(k)`` with ``s`` odd,
    so cosines become sines and vice versa (``cos -> -s sin``,
    ``sin -> s cos``).  Otherwise ``s`` must be even and parity is kept.
    """

    func: Callable[[np.ndarray], np.ndarray]
    flips_parity: bool = False

    def values(self, domain: DomainSpec) -> np.ndarray:
        return np.asarray(self.func(domain.wavenumbers), dtype=float)

    def __call__(self, f: TrigSeries) -> TrigSeries:
        s = self.values(f.domain)
        if not self.flips_parity:
            return TrigSeries(f.domain, f.parity, s * f.coeffs)
        if f.parity is Parity.EVEN:
            return TrigSeries(f.domain, Parity.ODD, -s * f.coeffs)
        return TrigSeries(f.domain, Parity.EVEN, s * f.coeffs)


def _a_symbol(k):
    return 2.0 * np.cos(k) - 2.0


def _delta_symbol(k):
    return 2.0 * np.sin(0.5 * k)


A_SYMBOL = MultiplierSymbol(_a_symbol)
DELTA_SYMBOL = MultiplierSymbol(_delta_symbol, flips_parity=True)
_D1 = MultiplierSymbol(lambda k: k, flips_parity=True)
_D2 = MultiplierSymbol(lambda k: -(k**2))


def apply_A(f: TrigSeries) -> TrigSeries:
    """Second difference ``f(x+1) - 2 f(x) + f(x-1)``."""
    return A_SYMBOL(f)


def apply_delta(f: TrigSeries) -> TrigSeries:
    """Centered half-step difference ``f(x+1/2) - f(x-1/2)``; flips parity."""
    return DELTA_SYMBOL(f)


def derivative(f: TrigSeries) -> TrigSeries:
    return _D1(f)


def second_derivative(f: TrigSeries) -> TrigSeries:
    return _D2(f)


# --------------------------------------------------------------------------
# products


def _padded_points(domain: DomainSpec) -> int:
    # modes up to N/2 times modes up to N/2 reach N; 2N points hold that exactly
    return 2 * domain.num_modes


def multiply_samples(f: TrigSeries, values_on_fine_grid, parity: Parity) -> TrigSeries:
    """Multiply ``f`` by a function given on the padded grid, then truncate.

    ``values_on_fine_grid`` are samples on the ``2N``-point grid of the same
    interval (see :func:`fine_grid`).  Use this for factors that are not
    themselves grid series, such as periodic ripples of arbitrary frequency.
    """
    m = _padded_points(f.domain)
    g = np.asarray(values_on_fine_grid, dtype=float)
    if g.shape != (m,):
        raise ValueError("factor must be sampled on the padded grid")
    prod = f.samples_on(m) * g
    return TrigSeries(f.domain, parity, _analyze(prod, parity, f.domain.n_half))


def fine_grid(domain: DomainSpec) -> np.ndarray:
    m = _padded_points(domain)
    return -domain.half_length + (2.0 * domain.half_length / m) * np.arange(m)


def pointwise_product(f: TrigSeries, g: TrigSeries) -> TrigSeries:
    """Alias-free product of two series, truncated to the common mode set."""
    if not f.domain.same_as(g.domain):
        raise DomainMismatchError("cannot multiply series on different domains")
    m = _padded_points(f.domain)
    parity = f.parity.times(g.parity)
    prod = f.samples_on(m) * g.samples_on(m)
    return TrigSeries(f.domain, parity, _analyze(prod, parity, f.domain.n_half))


def weighted_norm(f: TrigSeries, q: float, r: int = 0) -> float:
    """Discrete ``H^r`` norm of ``cosh(x)**q * f`` over one period.

    Diagnostic only; requires ``q * L < 300`` so the weight stays finite.
    """
    L = f.domain.half_length
    if q < 0 or r < 0:
        raise ValueError("q and r must be nonnegative")
    if q * L >= 300:
        raise WeightOverflowError(f"q*L = {q * L:.1f} >= 300; cosh^q overflows")
    x = f.domain.grid
    w = np.cosh(x) ** q * f.samples()
    n = len(w)
    c = np.fft.fft(w) / n
    k = np.pi * np.fft.fftfreq(n, d=1.0 / n) / L
    return float(np.sqrt(2.0 * L * np.sum((1.0 + k**2) ** r * np.abs(c) ** 2)))
