"""Band-limited scalar, vector and tensor fields on the periodic box.

A Field stores Fourier coefficients with component axes in front of the
dim spatial axes.  All calculus is exact multiplier algebra; all products
go through zero-padded sampling grids large enough that the retained
coefficients equal those of the true product (no aliasing in band).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import grid
from .grid import TWO_PI


@dataclass
class Field:
    coeffs: np.ndarray
    dim: int

    def __post_init__(self) -> None:
        if self.coeffs.dtype != np.complex128:
            self.coeffs = self.coeffs.astype(np.complex128)

    @property
    def n(self) -> int:
        return self.coeffs.shape[-1]

    @property
    def comp_shape(self) -> tuple[int, ...]:
        return self.coeffs.shape[: self.coeffs.ndim - self.dim]

    @property
    def rank(self) -> int:
        return len(self.comp_shape)

    @classmethod
    def from_samples(cls, samples: np.ndarray, dim: int) -> "Field":
        return cls(grid.coeffs_from_samples(np.asarray(samples, dtype=float), dim), dim)

    @classmethod
    def zero(cls, n: int, dim: int, comp_shape: tuple[int, ...] = ()) -> "Field":
        return cls(np.zeros(comp_shape + (n,) * dim, dtype=complex), dim)

    def samples(self, refine: int = 1) -> np.ndarray:
        return grid.samples_from_coeffs(self.coeffs, self.dim, self.n * refine)

    def band(self) -> int:
        return grid.band_of(self.coeffs, self.dim)

    def copy(self) -> "Field":
        return Field(self.coeffs.copy(), self.dim)

    def _like(self, other: "Field") -> None:
        if self.dim != other.dim or self.n != other.n or self.comp_shape != other.comp_shape:
            raise ValueError("field layout mismatch")

    def __add__(self, other: "Field") -> "Field":
        self._like(other)
        return Field(self.coeffs + other.coeffs, self.dim)

    def __sub__(self, other: "Field") -> "Field":
        self._like(other)
        return Field(self.coeffs - other.coeffs, self.dim)

    def __mul__(self, a: float) -> "Field":
        return Field(self.coeffs * a, self.dim)

    __rmul__ = __mul__

    def __neg__(self) -> "Field":
        return Field(-self.coeffs, self.dim)


def mean(f: Field) -> np.ndarray:
    """Spatial average; scalar or array over component axes."""
    out = f.coeffs[(...,) + (0,) * f.dim].real
    return out if f.rank else float(out)


@dataclass
class FieldPath:
    """Uniform-in-time sequence of same-layout fields (coefficient frames)."""

    frames: np.ndarray  # (n_frames,) + comp_shape + (n,)*dim
    dt: float
    dim: int

    def __post_init__(self) -> None:
        if self.frames.dtype != np.complex128:
            self.frames = self.frames.astype(np.complex128)

    @property
    def n_frames(self) -> int:
        return self.frames.shape[0]

    @property
    def n(self) -> int:
        return self.frames.shape[-1]

    @property
    def comp_shape(self) -> tuple[int, ...]:
        return self.frames.shape[1 : self.frames.ndim - self.dim]

    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.dt

    def field(self, j: int) -> Field:
        return Field(self.frames[j], self.dim)

    @classmethod
    def from_fields(cls, fs: list[Field], dt: float) -> "FieldPath":
        return cls(np.stack([f.coeffs for f in fs]), dt, fs[0].dim)

    @classmethod
    def zero(cls, n_frames: int, dt: float, n: int, dim: int,
             comp_shape: tuple[int, ...] = ()) -> "FieldPath":
        return cls(np.zeros((n_frames,) + comp_shape + (n,) * dim, dtype=complex), dt, dim)

    def copy(self) -> "FieldPath":
        return FieldPath(self.frames.copy(), self.dt, self.dim)

    def __add__(self, other: "FieldPath") -> "FieldPath":
        return FieldPath(self.frames + other.frames, self.dt, self.dim)

    def __sub__(self, other: "FieldPath") -> "FieldPath":
        return FieldPath(self.frames - other.frames, self.dt, self.dim)

    def __mul__(self, a: float) -> "FieldPath":
        return FieldPath(self.frames * a, self.dt, self.dim)

    __rmul__ = __mul__


def _kvec(f: Field) -> np.ndarray:
    k = grid.modes(f.n, f.dim)
    return k.reshape((f.dim,) + (1,) * f.rank + k.shape[1:])


def grad(f: Field) -> Field:
    """Derivative index appended last: grad(v)[..., j] = d_j v."""
    k = grid.modes(f.n, f.dim)
    parts = [1j * k[j] * f.coeffs for j in range(f.dim)]
    c = np.stack(parts, axis=f.rank)
    return Field(c, f.dim)


def div(f: Field) -> Field:
    """Contract the last component axis against the gradient: (div T)_i = d_j T_ij."""
    if f.rank < 1:
        raise ValueError("div needs at least one component axis")
    k = grid.modes(f.n, f.dim)
    c = sum(
        1j * k[j] * np.take(f.coeffs, j, axis=f.rank - 1)
        for j in range(f.dim)
    )
    return Field(c, f.dim)


def laplacian(f: Field) -> Field:
    return Field(-grid.ksq(f.n, f.dim) * f.coeffs, f.dim)


def inv_laplacian(f: Field) -> Field:
    """Zero-mean inverse: the k=0 mode of the result is zero."""
    k2 = grid.ksq(f.n, f.dim).astype(float)
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = -1.0 / k2[nz]
    return Field(inv * f.coeffs, f.dim)


def leray(v: Field) -> Field:
    """Divergence-free projection; identity on the k=0 mode."""
    if v.comp_shape != (v.dim,):
        raise ValueError("leray projection acts on vector fields")
    k = grid.modes(v.n, v.dim).astype(float)
    k2 = grid.ksq(v.n, v.dim).astype(float)
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    kdotv = np.einsum("i...,i...->...", k, v.coeffs)
    return Field(v.coeffs - k * (kdotv * inv), v.dim)


def transpose(t: Field) -> Field:
    if t.rank != 2:
        raise ValueError("transpose acts on 2-tensors")
    return Field(np.swapaxes(t.coeffs, 0, 1), t.dim)


def sym(t: Field) -> Field:
    return Field(0.5 * (t.coeffs + np.swapaxes(t.coeffs, 0, 1)), t.dim)


def trace(t: Field) -> Field:
    if t.rank != 2:
        raise ValueError("trace acts on 2-tensors")
    return Field(np.einsum("ii...->...", t.coeffs), t.dim)


def deviatoric(t: Field) -> Field:
    """Remove the pointwise trace part: t - tr(t)/d * Id."""
    tr = trace(t).coeffs / t.dim
    c = t.coeffs.copy()
    for i in range(t.dim):
        c[i, i] -= tr
    return Field(c, t.dim)


def resample(f: Field, n_out: int) -> Field:
    """Exact zero padding or spectral truncation onto an n_out grid."""
    return Field(grid.scatter_modes(f.coeffs, f.dim, n_out), f.dim)


def dilate(f: Field, factor: int, n_out: int | None = None) -> Field:
    """f(x) -> f(factor*x), exact mode scatter; raises if content would alias."""
    return Field(
        grid.scatter_modes(f.coeffs, f.dim, n_out or f.n, factor=factor, strict=True),
        f.dim,
    )


def project_band(f: Field, band: int) -> Field:
    """Zero every mode with max_i |k_i| > band."""
    k = grid.modes(f.n, f.dim)
    keep = (np.abs(k).max(axis=0) <= band).astype(float)
    return Field(f.coeffs * keep, f.dim)


_PAIRINGS = {
    "mul": "...,...->...",
    "outer": "i...,j...->ij...",
    "dot": "i...,i...->...",
    "matvec": "ij...,j...->i...",
    "vecmat": "i...,ij...->j...",
    "ddot": "ij...,ij...->...",
    # leading batch axis, one product per batch entry
    "bouter": "bi...,bj...->bij...",
    "bvecmat": "bi...,bij...->bj...",
}


def product(f: Field, g: Field, kind: str = "mul", n_out: int | None = None,
            n_big: int | None = None) -> Field:
    """Alias-free pointwise product, exact on the retained band.

    The factors are padded to a grid large enough that every retained
    coefficient equals that of the true product; callers may force a
    bigger n_big but never a smaller one.
    """
    if f.dim != g.dim:
        raise ValueError("dimension mismatch")
    if n_out is None:
        n_out = max(f.n, g.n)
    need = grid.product_grid(f.band() + g.band(), grid.active_band(n_out))
    if n_big is None:
        n_big = need
    elif n_big < need:
        raise ValueError(f"n_big={n_big} cannot hold the product exactly (need {need})")
    fs = grid.samples_from_coeffs(f.coeffs, f.dim, n_big)
    gs = grid.samples_from_coeffs(g.coeffs, g.dim, n_big)
    prod = np.einsum(_PAIRINGS[kind], fs, gs)
    c = grid.coeffs_from_samples(prod, f.dim)
    return Field(grid.scatter_modes(c, f.dim, n_out), f.dim)


def outer(u: Field, v: Field, **kw) -> Field:
    return product(u, v, kind="outer", **kw)


def dot(u: Field, v: Field, **kw) -> Field:
    return product(u, v, kind="dot", **kw)


def mul(a: Field, f: Field, **kw) -> Field:
    if a.rank != 0:
        raise ValueError("mul broadcasts a scalar field")
    return product(a, f, kind="mul", **kw)


def matvec(t: Field, v: Field, **kw) -> Field:
    return product(t, v, kind="matvec", **kw)


def ddot(s: Field, t: Field, **kw) -> Field:
    return product(s, t, kind="ddot", **kw)


def devsym_outer(u: Field, v: Field, **kw) -> Field:
    """Trace-free symmetric part of u (x) v; the removed parts are gradients
    under divergence, invisible to the Leray-projected momentum balance."""
    t = outer(u, v, **kw)
    return deviatoric(sym(t))


def parseval_l2(f: Field) -> float:
    """L2 norm over the box: (2*pi)^(d/2) * euclidean norm of coefficients."""
    return float(TWO_PI ** (0.5 * f.dim) * np.linalg.norm(f.coeffs))
