"""Norms on the box [0, 2*pi)^d with un-normalized Lebesgue measure.

Vector and tensor fields are measured through the pointwise Euclidean /
Frobenius magnitude.  Lebesgue norms use uniform grid quadrature on a
refined grid (exact for integrands whose spectrum fits the refined band);
sup norms are grid sups on the refined grid.
"""

from __future__ import annotations

import itertools

import numpy as np

from . import fields, grid
from .fields import Field
from .grid import TWO_PI


def _magnitude(samples: np.ndarray, rank: int) -> np.ndarray:
    if rank == 0:
        return np.abs(samples)
    flat = samples.reshape((-1,) + samples.shape[rank:])
    return np.sqrt((flat ** 2).sum(axis=0))


def lebesgue(f: Field, q: float, refine: int = 2) -> float:
    """L^q norm, grid quadrature on a refine*n grid; q=inf is the grid sup."""
    s = f.samples(refine=refine)
    mag = _magnitude(s, f.rank)
    if np.isinf(q):
        return float(mag.max())
    h = TWO_PI / (f.n * refine)
    return float(((mag ** q).sum() * h ** f.dim) ** (1.0 / q))


def sobolev(f: Field, s: float, r: float = 2.0, refine: int = 2) -> float:
    """Bessel-potential norm: L^r of the (1+|k|^2)^(s/2)-filtered field.

    For r=2 this is evaluated exactly through Parseval.
    """
    w = (1.0 + grid.ksq(f.n, f.dim).astype(float)) ** (0.5 * s)
    g = Field(f.coeffs * w, f.dim)
    if r == 2.0:
        return fields.parseval_l2(g)
    return lebesgue(g, r, refine=refine)


def c_norm(f: Field, order: int, refine: int = 2) -> float:
    """C^order norm: max over all |alpha| <= order of sup |d^alpha f|."""
    k = grid.modes(f.n, f.dim)
    best = 0.0
    for total in range(order + 1):
        for alpha in itertools.product(range(total + 1), repeat=f.dim):
            if sum(alpha) != total:
                continue
            mult = np.ones(k.shape[1:], dtype=complex)
            for ax, a in enumerate(alpha):
                if a:
                    mult = mult * (1j * k[ax]) ** a
            g = Field(f.coeffs * mult, f.dim)
            best = max(best, lebesgue(g, np.inf, refine=refine))
    return best


def seq_lm(values: np.ndarray, dt: float, m: float) -> float:
    """L^m norm in time of a sampled function, trapezoid rule; m=inf is max."""
    v = np.abs(np.asarray(values, dtype=float))
    if np.isinf(m):
        return float(v.max())
    return float(np.trapz(v ** m, dx=dt) ** (1.0 / m))


def window_norm(path, m: float, space_norm, start: float = 0.0) -> float:
    """L^m-in-time norm over the unit window [start, start+1].

    space_norm maps a frame Field to a float; m=inf takes the frame max.
    The window length is fixed at 1 (the laboratory always measures unit
    windows) and must land on the frame grid.
    """
    dt = path.dt
    j0 = int(round(start / dt))
    count = int(round(1.0 / dt))
    if abs(j0 * dt - start) > 1e-9 * max(1.0, abs(start)):
        raise ValueError(f"window start {start} does not land on the frame grid")
    if j0 < 0 or j0 + count >= path.n_frames:
        raise ValueError(
            f"window [{start}, {start + 1}] is not covered by the path "
            f"(frames 0..{path.n_frames - 1} at dt={dt})"
        )
    values = np.array([space_norm(path.field(j)) for j in range(j0, j0 + count + 1)])
    return seq_lm(values, dt, m)


def improved_holder_gap(a: Field, f: Field, sigma: int, q: float,
                        refine: int = 2) -> float:
    """|  ||a * f(sigma.)||_q  -  (2*pi)^(-d/q) ||a||_q ||f||_q  |.

    For slowly varying a and sigma-oscillatory f the product norm splits into
    the product of norms (with the volume factor from the measure); the gap
    decays like sigma^(-1/q) in general and vanishes identically when the
    spectra of |a|^q and |f(sigma.)|^q stay disjoint.
    """
    n_dil = max(a.n, 2 * (sigma * f.band() + 2))
    n_dil += n_dil % 2
    f_sig = fields.dilate(f, sigma, n_out=n_dil)
    af = fields.product(fields.resample(a, n_dil), f_sig, kind="mul")
    vol = TWO_PI ** (a.dim / q)
    split = lebesgue(a, q, refine=refine) * lebesgue(f, q, refine=refine) / vol
    return abs(lebesgue(af, q, refine=refine) - split)
