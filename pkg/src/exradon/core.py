"""Geometry, grids, phantoms, forward projectors and the weighted backprojection.

Conventions used throughout the package:

* a ray is labelled by an angle ``theta`` and a signed bin coordinate ``s``;
  points on the ray are ``s*(cos t, sin t) + u*(-sin t, cos t)``,
* the exponential Radon transform weights the line integral with ``exp(mu*u)``
  along the ray direction,
* sinogram value arrays have shape ``(n_angles, n_bins)``,
* image value arrays have shape ``(n, n)`` indexed ``[ix, iy]`` so that
  ``values[i, j]`` is the sample at pixel center ``(x_i, y_j)``.
"""

import json
import math
from dataclasses import dataclass, field
from importlib import resources

import numpy as np
from numba import njit, prange

MAX_ABS_MU = 32.0  # keeps exp(mu*t) representable for |t| <= 2

_TWO_PI = 2.0 * math.pi


def as_mu(mu):
    """Coerce ``mu`` (number or Attenuation) to a validated complex scalar."""
    if isinstance(mu, Attenuation):
        return mu.mu
    m = complex(mu)
    if not (math.isfinite(m.real) and math.isfinite(m.imag)):
        raise ValueError("attenuation must be finite")
    if abs(m) > MAX_ABS_MU:
        raise ValueError(f"|mu| = {abs(m):g} exceeds the supported bound {MAX_ABS_MU:g}")
    return m


def mu_is_real(mu, tol=0.0):
    return abs(as_mu(mu).imag) <= tol


@dataclass(frozen=True)
class Attenuation:
    """Uniform attenuation constant; purely imaginary values are permitted."""

    mu: complex

    def __post_init__(self):
        object.__setattr__(self, "mu", as_mu(self.mu) if not isinstance(self.mu, Attenuation) else self.mu.mu)

    @property
    def is_real(self):
        return self.mu.imag == 0.0

    @property
    def real(self):
        return self.mu.real


@dataclass(frozen=True)
class Ellipse:
    """One additive component of a phantom, contained in the closed unit disk."""

    x0: float
    y0: float
    a: float
    b: float
    angle: float = 0.0  # radians, counterclockwise
    intensity: float = 1.0

    def __post_init__(self):
        if not (self.a > 0.0 and self.b > 0.0):
            raise ValueError("ellipse semi-axes must be positive")
        if math.hypot(self.x0, self.y0) + max(self.a, self.b) > 1.0 + 1e-9:
            raise ValueError("ellipse must lie within the closed unit disk")

    def contains(self, x, y):
        """Vectorized membership test."""
        c, s = math.cos(self.angle), math.sin(self.angle)
        qx = np.asarray(x) - self.x0
        qy = np.asarray(y) - self.y0
        u = c * qx + s * qy
        v = -s * qx + c * qy
        return (u / self.a) ** 2 + (v / self.b) ** 2 <= 1.0


@dataclass(frozen=True)
class Phantom:
    """Additive list of weighted ellipses; zero outside the unit disk."""

    ellipses: tuple

    def __post_init__(self):
        object.__setattr__(self, "ellipses", tuple(self.ellipses))

    def evaluate(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        out = np.zeros(np.broadcast(x, y).shape)
        for e in self.ellipses:
            out += e.intensity * e.contains(x, y)
        return out

    def rasterize(self, grid):
        xs = grid.centers()
        vals = self.evaluate(xs[:, None], xs[None, :])
        return Image(grid, vals)

    def rotated(self, angle):
        """Phantom rigidly rotated about the origin by ``angle`` radians."""
        c, s = math.cos(angle), math.sin(angle)
        rot = [
            Ellipse(c * e.x0 - s * e.y0, s * e.x0 + c * e.y0, e.a, e.b,
                    e.angle + angle, e.intensity)
            for e in self.ellipses
        ]
        return Phantom(tuple(rot))


def make_shepp_logan():
    """The classical ten-ellipse Shepp-Logan head phantom (pinned data file)."""
    ref = resources.files("exradon").joinpath("data/shepp_logan.json")
    table = json.loads(ref.read_text())
    ells = tuple(
        Ellipse(x0, y0, a, b, math.radians(deg), rho)
        for x0, y0, a, b, deg, rho in table["ellipses"]
    )
    return Phantom(ells)


# ----------------------------------------------------------------------------
# angular subsets and grids

def _normalize_intervals(intervals):
    ivs = []
    for a, b in intervals:
        a, b = float(a), float(b)
        if not b > a:
            raise ValueError("interval must satisfy stop > start")
        if b - a > _TWO_PI + 1e-12:
            raise ValueError("interval longer than a full turn")
        ivs.append((a % _TWO_PI, a % _TWO_PI + (b - a)))
    ivs.sort()
    for (a0, b0), (a1, b1) in zip(ivs, ivs[1:]):
        if a1 < b0 - 1e-12:
            raise ValueError("intervals must be pairwise disjoint")
    if sum(b - a for a, b in ivs) > _TWO_PI + 1e-9:
        raise ValueError("total measure exceeds 2*pi")
    return tuple(ivs)


@dataclass(frozen=True)
class AngularSubset:
    """Finite union of disjoint half-open angle intervals within one turn."""

    intervals: tuple

    def __post_init__(self):
        object.__setattr__(self, "intervals", _normalize_intervals(self.intervals))

    @classmethod
    def full(cls):
        return cls(((0.0, _TWO_PI),))

    @classmethod
    def half(cls, start=0.0):
        return cls(((start, start + math.pi),))

    @property
    def measure(self):
        return sum(b - a for a, b in self.intervals)

    @property
    def is_full(self):
        return abs(self.measure - _TWO_PI) < 1e-9

    def contains(self, theta):
        t = np.asarray(theta) % _TWO_PI
        hit = np.zeros(t.shape, dtype=bool)
        for a, b in self.intervals:
            hit |= (t >= a - 1e-12) & (t < b - 1e-12)
            if b > _TWO_PI:  # interval wraps past 2*pi
                hit |= t < (b - _TWO_PI) - 1e-12
        return hit

    def shifted(self, delta):
        return AngularSubset(tuple((a + delta, b + delta) for a, b in self.intervals))

    def complement(self):
        """Complement within [0, 2*pi)."""
        marks = [0.0, _TWO_PI]
        for a, b in self.intervals:
            marks.extend((a, min(b, _TWO_PI)))
            if b > _TWO_PI:
                marks.append(b - _TWO_PI)
        marks = sorted(set(marks))
        gaps = []
        for a, b in zip(marks, marks[1:]):
            mid = 0.5 * (a + b)
            if b - a > 1e-12 and not bool(self.contains(mid)):
                gaps.append((a, b))
        return AngularSubset(tuple(gaps))

    def is_half_scan(self, tol=1e-9):
        """Total measure pi with no angle and its antipode both inside."""
        if abs(self.measure - math.pi) > tol:
            return False
        probes = np.concatenate(
            [np.linspace(a + 1e-7, b - 1e-7, 64) for a, b in self.intervals])
        return not bool(np.any(self.contains(probes) & self.contains(probes + math.pi)))


@dataclass(frozen=True)
class SinogramGrid:
    """Uniform angle samples over an AngularSubset and cell-centered bins on (-1, 1)."""

    angles: np.ndarray
    bins: np.ndarray
    delta: float
    phi: float
    subset: AngularSubset

    @classmethod
    def make(cls, n_angles, n_bins, subset=None):
        if n_angles < 4 or n_bins < 4:
            raise ValueError("need at least 4 angles and 4 bins")
        subset = subset or AngularSubset.full()
        phi = subset.measure / n_angles
        parts = []
        remaining = n_angles
        for i, (a, b) in enumerate(subset.intervals):
            n_i = remaining if i == len(subset.intervals) - 1 else int(round((b - a) / phi))
            parts.append(a + phi * np.arange(n_i))
            remaining -= n_i
        angles = np.concatenate(parts)
        delta = 2.0 / n_bins
        bins = (np.arange(n_bins) + 0.5 - n_bins / 2) * delta
        return cls(angles, bins, delta, phi, subset)

    @property
    def n_angles(self):
        return len(self.angles)

    @property
    def n_bins(self):
        return len(self.bins)

    def compatible(self, other):
        return (self.n_angles == other.n_angles and self.n_bins == other.n_bins
                and np.allclose(self.angles, other.angles)
                and abs(self.delta - other.delta) < 1e-12)


@dataclass
class Sinogram:
    """Projection samples tagged with their attenuation constant."""

    grid: SinogramGrid
    mu: complex
    values: np.ndarray

    def __post_init__(self):
        self.mu = as_mu(self.mu)
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n_angles, self.grid.n_bins):
            raise ValueError("sinogram values do not match the grid")

    def copy_with(self, values):
        return Sinogram(self.grid, self.mu, values)


@dataclass(frozen=True)
class ImageGrid:
    """Square cell-centered pixel grid over (-1, 1)^2."""

    n: int
    support_radius: float = 1.0

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("grid side must be at least 2")

    @property
    def delta(self):
        return 2.0 / self.n

    def centers(self):
        return (np.arange(self.n) + 0.5 - self.n / 2) * self.delta

    def mesh(self):
        xs = self.centers()
        return xs[:, None] * np.ones_like(xs)[None, :], np.ones_like(xs)[:, None] * xs[None, :]

    def support_mask(self, radius=None):
        r = self.support_radius if radius is None else radius
        xs = self.centers()
        return (xs[:, None] ** 2 + xs[None, :] ** 2) <= r * r


@dataclass
class Image:
    grid: ImageGrid
    values: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.shape != (self.grid.n, self.grid.n):
            raise ValueError("image values do not match the grid")
        if self.mask is not None and self.mask.shape != self.values.shape:
            raise ValueError("mask shape mismatch")

    def masked_to_disk(self, radius=None):
        keep = self.grid.support_mask(radius)
        return Image(self.grid, np.where(keep, self.values, 0.0), keep)


# ----------------------------------------------------------------------------
# analytic projector

def ellipse_chord(theta, s, ellipse):
    """Parameter interval (t0, t1) of the ray (theta, s) inside the ellipse.

    Returns None when the ray misses; tangency yields t0 == t1.
    """
    ct, st = math.cos(theta), math.sin(theta)
    ca, sa = math.cos(ellipse.angle), math.sin(ellipse.angle)
    px, py = s * ct - ellipse.x0, s * st - ellipse.y0
    dx, dy = -st, ct
    ux, uy = ca * px + sa * py, -sa * px + ca * py
    vx, vy = ca * dx + sa * dy, -sa * dx + ca * dy
    qa = (vx / ellipse.a) ** 2 + (vy / ellipse.b) ** 2
    qb = 2.0 * (ux * vx / ellipse.a ** 2 + uy * vy / ellipse.b ** 2)
    qc = (ux / ellipse.a) ** 2 + (uy / ellipse.b) ** 2 - 1.0
    disc = qb * qb - 4.0 * qa * qc
    if disc < 0.0:
        return None
    root = math.sqrt(disc)
    return ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa))


def _chord_integral(t0, t1, mu):
    """Integral of exp(mu*t) over chords [t0, t1]; arrays and complex mu welcome."""
    if abs(mu) < 1e-12:
        return t1 - t0
    return (np.exp(mu * t1) - np.exp(mu * t0)) / mu


def ert_line_integrals(phantom, mu, thetas, ss):
    """Exact exponential line integrals of a phantom at broadcastable (theta, s)."""
    mu = as_mu(mu)
    thetas = np.asarray(thetas, dtype=float)
    ss = np.asarray(ss, dtype=float)
    shape = np.broadcast(thetas, ss).shape
    out = np.zeros(shape, dtype=complex if mu.imag else float)
    ct, st = np.cos(thetas), np.sin(thetas)
    mu_eff = mu if mu.imag else mu.real
    for e in phantom.ellipses:
        ca, sa = math.cos(e.angle), math.sin(e.angle)
        px, py = ss * ct - e.x0, ss * st - e.y0
        dx, dy = -st, ct
        ux, uy = ca * px + sa * py, -sa * px + ca * py
        vx, vy = ca * dx + sa * dy, -sa * dx + ca * dy
        qa = (vx / e.a) ** 2 + (vy / e.b) ** 2
        qb = 2.0 * (ux * vx / e.a ** 2 + uy * vy / e.b ** 2)
        qc = (ux / e.a) ** 2 + (uy / e.b) ** 2 - 1.0
        disc = qb * qb - 4.0 * qa * qc
        hit = disc > 0.0
        if not np.any(hit):
            continue
        root = np.sqrt(np.where(hit, disc, 0.0))
        t0 = (-qb - root) / (2.0 * qa)
        t1 = (-qb + root) / (2.0 * qa)
        out += np.where(hit, e.intensity * _chord_integral(t0, t1, mu_eff), 0.0)
    return out


def project_analytic(phantom, mu, grid):
    """Exact ERT sinogram of an ellipse phantom (no quadrature)."""
    vals = ert_line_integrals(phantom, mu, grid.angles[:, None], grid.bins[None, :])
    return Sinogram(grid, mu, vals)


# ----------------------------------------------------------------------------
# discrete ray-driven projector and weighted backprojection (numba kernels)

_T_MAX = math.sqrt(2.0)  # covers any chord of the unit square


@njit(parallel=True, cache=True)
def _project_rays(img, n, d_img, thetas, bins, step, exp_t, out):
    half = n / 2.0
    n_steps = exp_t.shape[0]
    for k in prange(thetas.shape[0]):
        ct = math.cos(thetas[k])
        st = math.sin(thetas[k])
        for m in range(bins.shape[0]):
            s = bins[m]
            acc = 0.0
            for it in range(n_steps):
                t = -_T_MAX + it * step
                x = s * ct - t * st
                y = s * st + t * ct
                gx = x / d_img + half - 0.5
                gy = y / d_img + half - 0.5
                ix = int(math.floor(gx))
                iy = int(math.floor(gy))
                fx = gx - ix
                fy = gy - iy
                v = 0.0
                if 0 <= ix < n and 0 <= iy < n:
                    v += (1.0 - fx) * (1.0 - fy) * img[ix, iy]
                if 0 <= ix + 1 < n and 0 <= iy < n:
                    v += fx * (1.0 - fy) * img[ix + 1, iy]
                if 0 <= ix < n and 0 <= iy + 1 < n:
                    v += (1.0 - fx) * fy * img[ix, iy + 1]
                if 0 <= ix + 1 < n and 0 <= iy + 1 < n:
                    v += fx * fy * img[ix + 1, iy + 1]
                acc += v * exp_t[it]
            out[k, m] = acc * step


@njit(parallel=True, cache=True)
def _project_rays_cplx(img, n, d_img, thetas, bins, step, exp_t, out):
    half = n / 2.0
    n_steps = exp_t.shape[0]
    for k in prange(thetas.shape[0]):
        ct = math.cos(thetas[k])
        st = math.sin(thetas[k])
        for m in range(bins.shape[0]):
            s = bins[m]
            acc = 0.0 + 0.0j
            for it in range(n_steps):
                t = -_T_MAX + it * step
                x = s * ct - t * st
                y = s * st + t * ct
                gx = x / d_img + half - 0.5
                gy = y / d_img + half - 0.5
                ix = int(math.floor(gx))
                iy = int(math.floor(gy))
                fx = gx - ix
                fy = gy - iy
                v = 0.0 + 0.0j
                if 0 <= ix < n and 0 <= iy < n:
                    v += (1.0 - fx) * (1.0 - fy) * img[ix, iy]
                if 0 <= ix + 1 < n and 0 <= iy < n:
                    v += fx * (1.0 - fy) * img[ix + 1, iy]
                if 0 <= ix < n and 0 <= iy + 1 < n:
                    v += (1.0 - fx) * fy * img[ix, iy + 1]
                if 0 <= ix + 1 < n and 0 <= iy + 1 < n:
                    v += fx * fy * img[ix + 1, iy + 1]
                acc += v * exp_t[it]
            out[k, m] = acc * step


def project_discrete(image, mu, grid, step=None):
    """Ray-driven discrete ERT of a sampled image (bilinear, fixed step)."""
    mu = as_mu(mu)
    step = 0.5 * image.grid.delta if step is None else float(step)
    n_steps = int(2.0 * _T_MAX / step) + 1
    ts = -_T_MAX + step * np.arange(n_steps)
    if mu.imag == 0.0 and not np.iscomplexobj(image.values):
        exp_t = np.exp(mu.real * ts)
        out = np.empty((grid.n_angles, grid.n_bins))
        _project_rays(np.ascontiguousarray(image.values, dtype=np.float64),
                      image.grid.n, image.grid.delta, grid.angles, grid.bins,
                      step, exp_t, out)
    else:
        exp_t = np.exp(mu * ts).astype(np.complex128)
        out = np.empty((grid.n_angles, grid.n_bins), dtype=np.complex128)
        _project_rays_cplx(np.ascontiguousarray(image.values, dtype=np.complex128),
                           image.grid.n, image.grid.delta, grid.angles, grid.bins,
                           step, exp_t, out)
    return Sinogram(grid, mu, out)


@njit(parallel=True, cache=True)
def _backproject_points(rows, ct, st, wts, mu, bin0, inv_d, n_bins, pxs, pys, out, norm):
    n_pts = pxs.shape[0]
    n_ang = ct.shape[0]
    for i in prange(n_pts):
        x = pxs[i]
        y = pys[i]
        acc = 0.0
        for k in range(n_ang):
            s = x * ct[k] + y * st[k]
            t = -x * st[k] + y * ct[k]
            g = (s - bin0) * inv_d
            m0 = int(math.floor(g))
            f = g - m0
            v = 0.0
            if 0 <= m0 < n_bins:
                v += rows[k, m0] * (1.0 - f)
            if 0 <= m0 + 1 < n_bins:
                v += rows[k, m0 + 1] * f
            if v != 0.0:
                acc += math.exp(-mu * t) * v * wts[k]
        out[i] = acc * norm


@njit(parallel=True, cache=True)
def _backproject_points_cplx(rows, ct, st, wts, mu, bin0, inv_d, n_bins, pxs, pys, out, norm):
    n_pts = pxs.shape[0]
    n_ang = ct.shape[0]
    for i in prange(n_pts):
        x = pxs[i]
        y = pys[i]
        acc = 0.0 + 0.0j
        for k in range(n_ang):
            s = x * ct[k] + y * st[k]
            t = -x * st[k] + y * ct[k]
            g = (s - bin0) * inv_d
            m0 = int(math.floor(g))
            f = g - m0
            v = 0.0 + 0.0j
            if 0 <= m0 < n_bins:
                v += rows[k, m0] * (1.0 - f)
            if 0 <= m0 + 1 < n_bins:
                v += rows[k, m0 + 1] * f
            if v != 0.0 + 0.0j:
                acc += np.exp(-mu * t) * v * wts[k]
        out[i] = acc * norm


def backproject_points(rows, mu, grid, angles, weights, pxs, pys, normalization=1.0):
    """Weighted backprojection of filtered rows at arbitrary physical points.

    Evaluates ``norm * sum_k exp(-mu * t_k) * rows_k(s_k) * w_k`` with linear
    interpolation in the bin coordinate; bins outside (-1, 1) contribute zero.
    """
    mu = as_mu(mu)
    rows = np.asarray(rows)
    angles = np.asarray(angles, dtype=float)
    weights = np.broadcast_to(np.asarray(weights, dtype=float), angles.shape)
    ct, st = np.cos(angles), np.sin(angles)
    pxs = np.ascontiguousarray(pxs, dtype=np.float64).ravel()
    pys = np.ascontiguousarray(pys, dtype=np.float64).ravel()
    bin0 = float(grid.bins[0])
    inv_d = 1.0 / grid.delta
    if mu.imag == 0.0 and not np.iscomplexobj(rows):
        out = np.empty(pxs.shape[0])
        _backproject_points(np.ascontiguousarray(rows, dtype=np.float64), ct, st,
                            np.ascontiguousarray(weights), mu.real, bin0, inv_d,
                            grid.n_bins, pxs, pys, out, float(normalization))
    else:
        out = np.empty(pxs.shape[0], dtype=np.complex128)
        _backproject_points_cplx(np.ascontiguousarray(rows, dtype=np.complex128),
                                 ct, st, np.ascontiguousarray(weights), mu, bin0,
                                 inv_d, grid.n_bins, pxs, pys, out,
                                 complex(normalization))
    return out


def backproject_weighted(rows, mu, image_grid, sino_grid, angles=None, weights=None,
                         normalization=1.0):
    """Exponentially weighted backprojection onto an image grid.

    ``rows`` may be a Sinogram or a plain array defined on ``sino_grid``'s bins.
    ``angles``/``weights`` default to the sinogram grid's angles and angular
    spacing.
    """
    if isinstance(rows, Sinogram):
        sino_grid = rows.grid
        if mu is None:
            mu = rows.mu
        rows = rows.values
    if angles is None:
        angles = sino_grid.angles
    if weights is None:
        weights = sino_grid.phi
    xs = image_grid.centers()
    px = np.repeat(xs, image_grid.n)
    py = np.tile(xs, image_grid.n)
    flat = backproject_points(rows, mu, sino_grid, angles, weights, px, py,
                              normalization)
    return Image(image_grid, flat.reshape(image_grid.n, image_grid.n))


# ----------------------------------------------------------------------------
# metrics

def image_err(a, b, mask=None):
    """Relative L2 error sqrt(sum |a-b|^2 / sum |b|^2) over optionally masked pixels."""
    av = a.values if isinstance(a, Image) else np.asarray(a)
    bv = b.values if isinstance(b, Image) else np.asarray(b)
    if av.shape != bv.shape:
        raise ValueError("image grids do not match")
    if isinstance(a, Image) and isinstance(b, Image) and a.grid.n != b.grid.n:
        raise ValueError("image grids do not match")
    if mask is not None:
        av, bv = av[mask], bv[mask]
    num = float(np.sum(np.abs(av - bv) ** 2))
    den = float(np.sum(np.abs(bv) ** 2))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return math.sqrt(num / den)


def set_threads(n):
    """Cap the number of worker threads used by the numba kernels."""
    import numba

    numba.set_num_threads(int(n))
