"""Symmetric trace-free anti-divergence and its bilinear refinement.

For a vector field f, antidivergence(f) is the symmetric trace-free
tensor S with div S = f - mean(f) exactly, built from the -1-homogeneous
Fourier multiplier

    S_ij(k) = -i [ (k_i f_j + k_j f_i)/|k|^2
                   - a k_i k_j (k.f)/|k|^4 - b d_ij (k.f)/|k|^2 ],

a = (d-2)/(d-1), b = 1/(d-1).  The bilinear form gains one power of the
oscillation frequency when the second argument is a dilated field.
"""

from __future__ import annotations

import numpy as np

from . import fields, grid
from .fields import Field


def antidivergence(f: Field) -> Field:
    """Symmetric trace-free S with div S = f - mean(f).

    The multiplier acts on k != 0 only, so the input mean is ignored and
    R(v) = R(v - mean v) holds exactly; the output is mean-zero.
    """
    if f.comp_shape != (f.dim,):
        raise ValueError("antidivergence acts on vector fields")
    d = f.dim
    a = (d - 2.0) / (d - 1.0)
    b = 1.0 / (d - 1.0)
    k = grid.modes(f.n, d).astype(float)
    k2 = grid.ksq(f.n, d).astype(float)
    inv = np.zeros_like(k2)
    nz = k2 > 0
    inv[nz] = 1.0 / k2[nz]
    kf = np.einsum("i...,i...->...", k, f.coeffs) * inv
    c = np.empty((d, d) + f.coeffs.shape[1:], dtype=complex)
    for i in range(d):
        for j in range(d):
            term = (k[i] * f.coeffs[j] + k[j] * f.coeffs[i]) * inv - a * k[i] * k[j] * kf * inv
            if i == j:
                term = term - b * kf
            c[i, j] = -1j * term
    return Field(c, d)


def sym_gradient(v: Field) -> Field:
    """grad v + (grad v)^T; equals antidivergence(laplacian v) when div v = 0."""
    g = fields.grad(v)
    return Field(g.coeffs + np.swapaxes(g.coeffs, 0, 1), v.dim)


def bilinear_antidivergence(b: Field, v: Field, n_out: int | None = None) -> Field:
    """Tensor B with div B = P_N(b v) - mean(b v), b scalar, v mean-zero vector.

    B = P_N(b Rv) - R(P_N(grad b . Rv) - mean) carries the full anti-divergence
    gain when v oscillates: both addends see Rv, not v.

    A vector b with a mean-zero tensor v contracts columns: the result sums
    the scalar construction over components, so div B = b.v - mean(b.v).
    """
    if b.rank == 1 and v.rank == 2:
        total = bilinear_antidivergence(Field(b.coeffs[0], b.dim),
                                        Field(v.coeffs[:, 0], v.dim), n_out=n_out)
        for l in range(1, b.dim):
            total = total + bilinear_antidivergence(
                Field(b.coeffs[l], b.dim), Field(v.coeffs[:, l], v.dim), n_out=n_out)
        return total
    if b.rank != 0:
        raise ValueError("first argument must be a scalar or vector field")
    rv = antidivergence(v)
    if n_out is None:
        n_out = max(b.n, v.n)
    t1 = fields.product(b, rv, kind="mul", n_out=n_out)
    arg = fields.product(fields.grad(b), rv, kind="vecmat", n_out=n_out)
    ac = arg.coeffs.copy()
    ac[(slice(None),) + (0,) * arg.dim] = 0.0  # exact mean removal
    t2 = antidivergence(Field(ac, arg.dim))
    return t1 - t2
