"""Closed-form convolution kernels and row-wise filtering.

All kernels are given both as pointwise evaluators (needed by the circular
harmonic tables and the fan-beam filter whose arguments are not grid-aligned)
and as tap arrays sampled at offsets ``l = j * delta``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .core import as_mu


@dataclass(frozen=True)
class Kernel:
    """Symmetric tap array at offsets ``j * delta`` for ``|j| <= half_width``."""

    kind: str
    taps: np.ndarray
    delta: float
    half_width: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.taps) != 2 * self.half_width + 1:
            raise ValueError("taps must have length 2*half_width + 1")

    def tap(self, j):
        return self.taps[self.half_width + j]


# ----------------------------------------------------------------------------
# pointwise evaluators

def ramp_kernel_value(l, cutoff):
    """Band-limited ramp kernel, the inverse transform of |w| on |w| < cutoff."""
    if cutoff < 0.0:
        raise ValueError("cutoff must be nonnegative")
    l = np.asarray(l, dtype=float)
    if cutoff == 0.0:
        return np.zeros_like(l)
    x = l * cutoff
    small = np.abs(x) < 1e-3
    xs = np.where(small, 1.0, x)
    exact = np.sin(xs) / xs + (np.cos(xs) - 1.0) / (xs * xs)
    series = 0.5 - x * x / 8.0 + x ** 4 / 144.0
    return cutoff ** 2 / math.pi * np.where(small, series, exact)


def shepp_logan_kernel_value(l, cutoff):
    """Sine-windowed ramp kernel (half-period sinc apodization)."""
    if cutoff <= 0.0:
        raise ValueError("cutoff must be positive")
    l = np.asarray(l, dtype=float)
    c = 0.5 * math.pi / cutoff
    sin_lw = np.sin(l * cutoff)

    def side(d, sgn):
        # (1 + sgn*sin(l*cutoff)) / (c - sgn*l) with the removable point at
        # c == sgn*l handled by series: (1 - cos(cutoff*d))/d -> cutoff^2*d/2.
        small = np.abs(d) < 1e-6 / cutoff
        ds = np.where(small, 1.0, d)
        exact = (1.0 + sgn * sin_lw) / ds
        series = 0.5 * cutoff ** 2 * d
        return np.where(small, series, exact)

    return cutoff / math.pi ** 2 * (side(c + l, 1.0) + side(c - l, -1.0))


def hilbert_eps_value(l, eps):
    """Regularized Hilbert kernel l / (pi * (l^2 + eps^2))."""
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    l = np.asarray(l, dtype=float)
    return l / (math.pi * (l * l + eps * eps))


def hilbert_band_value(l, cutoff):
    """Band-limited Hilbert kernel (1 - cos(l*cutoff)) / (pi * l)."""
    if cutoff <= 0.0:
        raise ValueError("cutoff must be positive")
    l = np.asarray(l, dtype=float)
    small = np.abs(l) < 1e-12 / cutoff
    ls = np.where(small, 1.0, l)
    return np.where(small, 0.0, (1.0 - np.cos(ls * cutoff)) / (math.pi * ls))


def hilbert_kl_value(n):
    """Log-form discrete Hilbert taps at integer offsets, odd in n."""
    n = np.asarray(n)
    a = np.abs(n).astype(float)
    sign = np.sign(n).astype(float)
    with np.errstate(divide="ignore", invalid="ignore"):
        big = (np.log((a * a - 1.0) / (a * a)) / a + np.log((a + 1.0) / (a - 1.0))) / math.pi
    out = np.where(a <= 1.0, 2.0 * a * math.log(2.0) / math.pi, big)
    return sign * out


def ert_ramp_kernel_value(l, cutoff, mu):
    """Band-restricted ramp for the ERT: Shepp-Logan(cutoff) minus ramp(|mu|)."""
    mu = as_mu(mu)
    if mu.imag != 0.0:
        raise ValueError("the combined ERT ramp kernel requires real mu")
    m = abs(mu.real)
    if not cutoff > m:
        raise ValueError("cutoff must exceed |mu|")
    return shepp_logan_kernel_value(l, cutoff) - ramp_kernel_value(l, m)


def lowband_sine_value(l, mu):
    """Odd kernel with frequency response -w on |w| < mu, zero outside.

    This is the imaginary part of the exp(i*mu*(s-l)) filtering flavor,
    (mu*l*cos(mu*l) - sin(mu*l)) / (pi*l^2).
    """
    mu = float(mu)
    l = np.asarray(l, dtype=float)
    x = l * mu
    small = np.abs(x) < 1e-4
    ls = np.where(small, 1.0, l)
    exact = (x * np.cos(x) - np.sin(x)) / (math.pi * ls * ls)
    series = -(mu ** 3) * l / (3.0 * math.pi) * (1.0 - x * x / 10.0)
    return np.where(small, series, exact)


# ----------------------------------------------------------------------------
# tap builders

def _offsets(half_width, delta):
    return delta * np.arange(-half_width, half_width + 1)


def ramp_kernel(cutoff, delta, half_width):
    taps = ramp_kernel_value(_offsets(half_width, delta), cutoff)
    return Kernel("ramp", taps, delta, half_width, {"cutoff": cutoff})


def shepp_logan_kernel(cutoff, delta, half_width):
    taps = shepp_logan_kernel_value(_offsets(half_width, delta), cutoff)
    return Kernel("shepp_logan", taps, delta, half_width, {"cutoff": cutoff})


def hilbert_eps_kernel(eps, delta, half_width):
    taps = hilbert_eps_value(_offsets(half_width, delta), eps)
    return Kernel("hilbert_eps", taps, delta, half_width, {"eps": eps})


def hilbert_band_kernel(cutoff, delta, half_width):
    taps = hilbert_band_value(_offsets(half_width, delta), cutoff)
    return Kernel("hilbert_band", taps, delta, half_width, {"cutoff": cutoff})


def hilbert_kl_taps(n_max):
    if n_max < 1:
        raise ValueError("n_max must be at least 1")
    taps = hilbert_kl_value(np.arange(-n_max, n_max + 1))
    return Kernel("hilbert_kl", taps, 1.0, n_max)


def ert_ramp_kernel(cutoff, mu, delta, half_width):
    taps = ert_ramp_kernel_value(_offsets(half_width, delta), cutoff, mu)
    return Kernel("ert_ramp", taps, delta, half_width,
                  {"cutoff": cutoff, "mu": float(as_mu(mu).real)})


def cos_weighted_hilbert_kernel(mu, eps, delta, half_width):
    """Taps cos(mu*l) * H_eps(l); complex when mu is complex."""
    mu = as_mu(mu)
    ls = _offsets(half_width, delta)
    weight = np.cos(mu * ls) if mu.imag else np.cos(mu.real * ls)
    taps = weight * hilbert_eps_value(ls, eps)
    return Kernel("cos_hilbert", taps, delta, half_width,
                  {"mu": mu, "eps": eps})


def lowband_sine_kernel(mu, delta, half_width):
    taps = lowband_sine_value(_offsets(half_width, delta), mu)
    return Kernel("lowband_sine", taps, delta, half_width, {"mu": float(mu)})


# ----------------------------------------------------------------------------
# row-wise convolution

def convolve_rows(rows, kernel, delta=None):
    """Discrete convolution per row: q_m = sum_j k(j*delta) p_(m-j) * delta.

    Rows are zero-extended beyond the bin range. ``kernel`` may be a Kernel or
    a raw odd-length tap array (center tap at index half_width).
    """
    if isinstance(kernel, Kernel):
        taps = kernel.taps
        if delta is None:
            delta = kernel.delta
    else:
        taps = np.asarray(kernel)
        if len(taps) % 2 != 1:
            raise ValueError("tap array must have odd length")
        if delta is None:
            raise ValueError("delta is required with raw taps")
    rows = np.atleast_2d(np.asarray(rows))
    half = (len(taps) - 1) // 2
    n_bins = rows.shape[1]
    out_dtype = np.result_type(rows.dtype, taps.dtype)
    out = np.empty(rows.shape, dtype=out_dtype)
    for k in range(rows.shape[0]):
        full = np.convolve(rows[k], taps, mode="full")
        out[k] = full[half:half + n_bins]
    return out * delta
