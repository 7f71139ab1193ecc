"""Fourier bookkeeping on the periodic box [0, 2*pi)^d.

Coefficient convention: f(x) = sum_k c_k exp(i k.x), with c recovered from
uniform samples by fftn(samples) / n**dim.  Grids are even-sized and the
Nyquist plane is kept identically zero, so real fields correspond to
Hermitian coefficient arrays and mode scatters (padding, truncation,
integer dilation) move coefficient values without any interpolation.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

TWO_PI = 2.0 * np.pi


def _check_grid(n: int) -> None:
    if n < 4 or n % 2:
        raise ValueError(f"grid size must be even and >= 4, got {n}")


@lru_cache(maxsize=None)
def mode_line(n: int) -> np.ndarray:
    """Integer wavenumbers in FFT storage order for an even grid of size n."""
    _check_grid(n)
    m = np.concatenate([np.arange(0, n // 2), np.arange(-(n // 2), 0)]).astype(np.int64)
    m.setflags(write=False)
    return m


@lru_cache(maxsize=None)
def modes(n: int, dim: int) -> np.ndarray:
    """Wavenumber mesh, shape (dim,) + (n,)*dim, int64."""
    axes = np.meshgrid(*([mode_line(n)] * dim), indexing="ij")
    k = np.stack(axes).astype(np.int64)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def ksq(n: int, dim: int) -> np.ndarray:
    """|k|^2 mesh, shape (n,)*dim, int64."""
    out = (modes(n, dim) ** 2).sum(axis=0)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def grid_points(n: int, dim: int) -> np.ndarray:
    """Sample locations, shape (dim,) + (n,)*dim, spacing 2*pi/n."""
    x1 = np.arange(n) * (TWO_PI / n)
    x = np.stack(np.meshgrid(*([x1] * dim), indexing="ij"))
    x.setflags(write=False)
    return x


def active_band(n: int) -> int:
    """Largest |k_i| carried on an n-grid (Nyquist excluded)."""
    return n // 2 - 1


def zero_nyquist(c: np.ndarray, dim: int) -> np.ndarray:
    """Zero the Nyquist plane along each of the dim trailing axes, in place."""
    n = c.shape[-1]
    for ax in range(-dim, 0):
        idx = [slice(None)] * c.ndim
        idx[ax] = n // 2
        c[tuple(idx)] = 0.0
    return c


def coeffs_from_samples(s: np.ndarray, dim: int) -> np.ndarray:
    """FFT of real samples on the dim trailing axes, Nyquist zeroed."""
    n = s.shape[-1]
    _check_grid(n)
    c = np.fft.fftn(s, axes=tuple(range(-dim, 0))) / float(n) ** dim
    return zero_nyquist(np.ascontiguousarray(c), dim)


def samples_from_coeffs(c: np.ndarray, dim: int, n_out: int | None = None) -> np.ndarray:
    """Real grid samples, optionally on a finer n_out grid (exact refinement)."""
    n = c.shape[-1]
    if n_out is None:
        n_out = n
    if n_out != n:
        c = scatter_modes(c, dim, n_out)
    f = np.fft.ifftn(c, axes=tuple(range(-dim, 0))) * float(n_out) ** dim
    return np.ascontiguousarray(f.real)


def band_of(c: np.ndarray, dim: int, rtol: float = 0.0) -> int:
    """Max |k_i| over nonzero modes (0 for the zero array).

    rtol > 0 ignores modes below rtol * max|c|, which separates genuine
    spectral content from FFT roundoff dust.
    """
    n = c.shape[-1]
    a = np.abs(c)
    thresh = rtol * a.max() if rtol > 0.0 else 0.0
    occ = (a > thresh).reshape((-1,) + (n,) * dim).any(axis=0)
    b = 0
    for ax in range(dim):
        line = occ.any(axis=tuple(a for a in range(dim) if a != ax))
        hit = np.abs(mode_line(n)[line])
        if hit.size:
            b = max(b, int(hit.max()))
    return b


def scatter_modes(
    c: np.ndarray,
    dim: int,
    n_out: int,
    factor: int = 1,
    strict: bool = False,
) -> np.ndarray:
    """Place mode m of c at mode factor*m on an n_out grid.

    factor=1 gives exact zero padding (n_out > n) or spectral truncation
    (n_out < n).  factor>1 is exact dilation f(x) -> f(factor*x).  With
    strict=True, raise if any nonzero mode would fall outside the target
    band instead of silently dropping it.
    """
    _check_grid(n_out)
    if factor < 1:
        raise ValueError("factor must be a positive integer")
    n_in = c.shape[-1]
    h = min(n_in // 2, (n_out // 2 - 1) // factor + 1)
    if strict and h < n_in // 2:
        b = band_of(c, dim, rtol=1e-13)  # roundoff dust may drop silently
        if b > h - 1:
            raise ValueError(
                f"mode scatter would drop content: band {b} * factor "
                f"{factor} exceeds target band {active_band(n_out)}"
            )
    m = np.concatenate([np.arange(0, h), np.arange(1 - h, 0)])
    src = m % n_in
    dst = (factor * m) % n_out
    lead = c.shape[: c.ndim - dim]
    cc = c.reshape((-1,) + (n_in,) * dim)
    out = np.zeros((cc.shape[0],) + (n_out,) * dim, dtype=complex)
    take = np.ix_(*([src] * dim))
    put = np.ix_(*([dst] * dim))
    for i in range(cc.shape[0]):
        out[i][put] = cc[i][take]
    return out.reshape(lead + (n_out,) * dim)


def product_grid(band_sum: int, out_band: int) -> int:
    """Smallest convenient grid computing a product exactly on modes <= out_band.

    Sampling on n_big aliases true mode m onto m - n_big; exactness of the
    retained band needs n_big >= band_sum + out_band + 1.
    """
    need = band_sum + out_band + 1
    return max(4, int(np.ceil(need / 8.0)) * 8)
