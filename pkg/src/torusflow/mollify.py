"""Spatial and causal temporal mollification, and shared time differencing.

The spatial mollifier is a sampled compactly supported radial bump applied
as a Fourier multiplier with multiplier value exactly 1 at k=0 (means are
preserved to machine precision).  The temporal mollifier is a causal
discrete kernel whose leading weight is exactly zero, so a mollified path
at frame j depends on frames j-1, ..., j-L only.
"""

from __future__ import annotations

import numpy as np

from . import grid
from .fields import Field, FieldPath
from .grid import TWO_PI


def bump(s: np.ndarray) -> np.ndarray:
    """exp(-1/(s(1-s))) on (0,1), zero outside, C^inf at the edges."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = (s > 0.0) & (s < 1.0)
    si = s[inside]
    out[inside] = np.exp(-1.0 / (si * (1.0 - si)))
    return out


def space_multiplier(n: int, dim: int, ell: float) -> np.ndarray:
    """Fourier multiplier of convolution with a radial bump of support ell."""
    if not 0.0 < ell < np.pi:
        raise ValueError("spatial mollification scale must lie in (0, pi)")
    x = grid.grid_points(n, dim)
    xi = np.mod(x + np.pi, TWO_PI) - np.pi
    r = np.sqrt((xi ** 2).sum(axis=0))
    psi = bump(0.5 * (r / ell + 1.0))  # radial profile exp(-1/(1-(r/ell)^2)) up to scale
    h = TWO_PI / n
    psi /= psi.sum() * h ** dim
    mult = grid.coeffs_from_samples(psi, dim) * TWO_PI ** dim
    return np.ascontiguousarray(mult.real)


def mollify_space(f: Field | FieldPath, ell: float) -> Field | FieldPath:
    if isinstance(f, FieldPath):
        m = space_multiplier(f.n, f.dim, ell)
        return FieldPath(f.frames * m, f.dt, f.dim)
    m = space_multiplier(f.n, f.dim, ell)
    return Field(f.coeffs * m, f.dim)


def time_kernel(ell_t: float, dt: float) -> np.ndarray:
    """Causal averaging weights w[0..L], w[0] = 0 exactly, sum(w) = 1."""
    lag = int(round(ell_t / dt))
    if lag < 2:
        raise ValueError("temporal mollification needs ell_t >= 2*dt")
    w = bump(np.arange(lag + 1) / lag)
    return w / w.sum()


def mollify_time(path: FieldPath, ell_t: float) -> FieldPath:
    """Causal mollification (M v)_j = sum_i w_i v_{j-i}, constant extension at t=0."""
    w = time_kernel(ell_t, path.dt)
    out = np.zeros_like(path.frames)
    for i, wi in enumerate(w):
        if wi == 0.0:
            continue
        src = np.maximum(np.arange(path.n_frames) - i, 0)
        out += wi * path.frames[src]
    return FieldPath(out, path.dt, path.dim)


def fd_center(a: np.ndarray, dt: float) -> np.ndarray:
    """Centered time difference along axis 0; one-sided at the two ends."""
    out = np.empty_like(a)
    out[1:-1] = (a[2:] - a[:-2]) / (2.0 * dt)
    out[0] = (a[1] - a[0]) / dt
    out[-1] = (a[-1] - a[-2]) / dt
    return out


def fd_center4(a: np.ndarray, dt: float) -> np.ndarray:
    """Fourth-order five-point time difference along axis 0.

    One-sided fourth-order stencils cover the two frames at each end, so
    the truncation error is O(dt^4) times a fifth derivative everywhere.
    """
    if a.shape[0] < 5:
        raise ValueError("fourth-order differencing needs at least 5 frames")
    out = np.empty_like(a)
    out[2:-2] = (a[:-4] - 8.0 * a[1:-3] + 8.0 * a[3:-1] - a[4:]) / (12.0 * dt)
    out[0] = (-25.0 * a[0] + 48.0 * a[1] - 36.0 * a[2]
              + 16.0 * a[3] - 3.0 * a[4]) / (12.0 * dt)
    out[1] = (-3.0 * a[0] - 10.0 * a[1] + 18.0 * a[2]
              - 6.0 * a[3] + a[4]) / (12.0 * dt)
    out[-2] = (3.0 * a[-1] + 10.0 * a[-2] - 18.0 * a[-3]
               + 6.0 * a[-4] - a[-5]) / (12.0 * dt)
    out[-1] = (25.0 * a[-1] - 48.0 * a[-2] + 36.0 * a[-3]
               - 16.0 * a[-4] + 3.0 * a[-5]) / (12.0 * dt)
    return out


def ngb_avg(a: np.ndarray) -> np.ndarray:
    """Neighbor average (a_{j+1} + a_{j-1})/2 along axis 0; copies at the ends."""
    out = np.empty_like(a)
    out[1:-1] = 0.5 * (a[2:] + a[:-2])
    out[0] = a[0]
    out[-1] = a[-1]
    return out


def time_derivative(path: FieldPath) -> FieldPath:
    """The discrete time derivative every consumer in this package shares."""
    return FieldPath(fd_center(path.frames, path.dt), path.dt, path.dim)
