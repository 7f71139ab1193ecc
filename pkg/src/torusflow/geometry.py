"""Decomposition of near-identity stress tensors over fixed lattice directions.

A basis supplies lattice directions e_k and affine coefficient maps
c_k(R) = offset_k + load_k : (R - Id) with

    sum_k c_k(R) e_k (x) e_k = R        identically in R (symmetric),
    c_k(R) >= margin > 0                on the Frobenius ball B_radius(Id).

The ball bound is closed-form: an affine function's minimum over the ball
is offset_k - radius * ||load_k||_F, so positivity is certified by
construction, not by sampling (sampling is used as an extra check).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_SQRT2 = np.sqrt(2.0)


@dataclass(frozen=True)
class DirectionBasis:
    dim: int
    directions: np.ndarray  # (m, dim) integer lattice vectors
    units: np.ndarray       # (m, dim) normalized directions
    offset: np.ndarray      # (m,) coefficients at R = Id
    load: np.ndarray        # (m, dim, dim) symmetric gradients of c_k
    radius: float
    margin: float           # certified min of c_k over B_radius(Id)

    @property
    def size(self) -> int:
        return self.directions.shape[0]

    def coefficients(self, r: np.ndarray) -> np.ndarray:
        """c_k(R) for R of shape (..., dim, dim); returns (m, ...)."""
        r = np.asarray(r, dtype=float)
        dev = r - np.eye(self.dim)
        return (
            self.offset.reshape((-1,) + (1,) * (r.ndim - 2))
            + np.einsum("kij,...ij->k...", self.load, dev)
        )

    def amplitudes(self, r: np.ndarray) -> np.ndarray:
        """sqrt(c_k(R)); raises if any coefficient is not positive."""
        c = self.coefficients(r)
        if c.min() <= 0.0:
            raise ValueError(
                f"stress left the certified ball: min coefficient {c.min():.3e}"
            )
        return np.sqrt(c)

    def reconstruct(self, c: np.ndarray) -> np.ndarray:
        """sum_k c_k e_k (x) e_k, coefficient axis first; returns (..., dim, dim)."""
        ee = np.einsum("ki,kj->kij", self.units, self.units)
        return np.einsum("k...,kij->...ij", np.asarray(c), ee)

    def ball_distance(self, r: np.ndarray) -> float:
        return float(np.linalg.norm(np.asarray(r, dtype=float) - np.eye(self.dim)))


def _finish(dim: int, dirs, offset, load, radius: float) -> DirectionBasis:
    directions = np.asarray(dirs, dtype=np.int64)
    units = directions / np.linalg.norm(directions, axis=1, keepdims=True)
    offset = np.asarray(offset, dtype=float)
    load = np.asarray(load, dtype=float)
    # exactness of the reconstruction, checked in the sym-matrix vector space
    ee = np.einsum("ki,kj->kij", units, units)
    ident = np.einsum("k,kij->ij", offset, ee)
    if not np.allclose(ident, np.eye(dim), atol=1e-13):
        raise AssertionError("basis offsets do not reconstruct the identity")
    resp = np.einsum("kab,kij->abij", load, ee)
    want = 0.5 * (
        np.einsum("ai,bj->abij", np.eye(dim), np.eye(dim))
        + np.einsum("aj,bi->abij", np.eye(dim), np.eye(dim))
    )
    if not np.allclose(resp, want, atol=1e-13):
        raise AssertionError("basis loads do not reconstruct symmetric deviations")
    margin = float((offset - radius * np.linalg.norm(load, axis=(1, 2))).min())
    if margin <= 0.0:
        raise AssertionError(f"basis is not positive on its ball (margin {margin:.4f})")
    return DirectionBasis(dim, directions, units, offset, load, radius, margin)


def _sym_unit(i: int, j: int, dim: int) -> np.ndarray:
    g = np.zeros((dim, dim))
    if i == j:
        g[i, i] = 1.0
    else:
        g[i, j] = g[j, i] = 0.5
    return g


def plane_basis() -> DirectionBasis:
    """Four directions in d=2; margin (1 - 1/sqrt2)/4 ~ 0.0732 at radius 1/2."""
    gamma = 0.25 + 1.0 / (4.0 * _SQRT2)
    dirs = [(1, 0), (0, 1), (1, 1), (1, -1)]
    offset = [1.0 - gamma, 1.0 - gamma, gamma, gamma]
    load = [
        _sym_unit(0, 0, 2),
        _sym_unit(1, 1, 2),
        _sym_unit(0, 1, 2),
        -_sym_unit(0, 1, 2),
    ]
    return _finish(2, dirs, offset, load, 0.5)


# Load-sharing parameters for d=3, found by minimizing the total gradient
# weight J = |G_axis| + 2|G_pair| + (4/3)|G_body| subject to exact
# reconstruction; the optimum sits at J = 3/sqrt2, which forces radius
# < sqrt2/3 ~ 0.471.  Radius 0.4 leaves margin ~ 0.035.
_U3, _V3, _W3, _BETA3 = 0.109, -0.073, 0.095, 0.477


def space_basis(radius: float = 0.4) -> DirectionBasis:
    """Thirteen directions in d=3: axes, face diagonals, body diagonals.

    The six face diagonals alone admit exactly one affine coefficient map,
    and its ball margin is negative; the extended set shares the identity
    and the off-diagonal load so that every coefficient stays positive.
    """
    u, v, w, beta = _U3, _V3, _W3, _BETA3
    p = 1.0 - 2.0 * u - 4.0 * w / 3.0
    q = -(u + v) - 4.0 * w / 3.0
    theta = 1.0 - 4.0 * beta / 3.0
    ga = np.sqrt(p * p + 2.0 * q * q)
    gp = np.sqrt(2.0 * u * u + v * v + 0.5 * theta * theta)
    gb = np.sqrt(3.0 * w * w + 1.5 * beta * beta)
    big_j = ga + 2.0 * gp + (4.0 / 3.0) * gb
    m = (1.0 - radius * big_j) / (13.0 / 3.0)
    gamma_p = m + radius * gp
    gamma_b = m + radius * gb
    alpha = 1.0 - 2.0 * gamma_p - 4.0 * gamma_b / 3.0

    dirs: list[tuple[int, int, int]] = []
    offset: list[float] = []
    load: list[np.ndarray] = []
    for i in range(3):
        e = [0, 0, 0]
        e[i] = 1
        dirs.append(tuple(e))
        offset.append(alpha)
        g = q * np.eye(3)
        g[i, i] = p
        load.append(g)
    for (i, j) in [(0, 1), (0, 2), (1, 2)]:
        k = 3 - i - j
        for sign in (1, -1):
            e = [0, 0, 0]
            e[i], e[j] = 1, sign
            dirs.append(tuple(e))
            offset.append(gamma_p)
            g = np.zeros((3, 3))
            g[i, i] = g[j, j] = u
            g[k, k] = v
            g += sign * theta * _sym_unit(i, j, 3)
            load.append(g)
    for s in (1, -1):
        for t in (1, -1):
            dirs.append((1, s, t))
            offset.append(gamma_b)
            g = w * np.eye(3)
            g += beta * (
                s * _sym_unit(0, 1, 3)
                + t * _sym_unit(0, 2, 3)
                + s * t * _sym_unit(1, 2, 3)
            )
            load.append(g)
    return _finish(3, dirs, offset, load, radius)


def basis_for(dim: int) -> DirectionBasis:
    if dim == 2:
        return plane_basis()
    if dim == 3:
        return space_basis()
    raise ValueError("only d=2 and d=3 are supported")


def face_diagonal_margin() -> float:
    """Ball margin of the unextended six-direction set in d=3 (negative)."""
    dirs = np.array([(1, 1, 0), (1, -1, 0), (1, 0, 1), (1, 0, -1), (0, 1, 1), (0, 1, -1)])
    units = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    ee = np.einsum("ki,kj->kij", units, units)
    s2 = np.sqrt(2.0)

    def vec(sym):
        return np.array([sym[0, 0], sym[1, 1], sym[2, 2],
                         s2 * sym[0, 1], s2 * sym[0, 2], s2 * sym[1, 2]])

    e_mat = np.stack([vec(m) for m in ee], axis=1)
    l_map = np.linalg.inv(e_mat)
    offset = l_map @ vec(np.eye(3))
    return float((offset - 0.5 * np.linalg.norm(l_map, axis=1)).min())


def boundary_min_coefficient(basis: DirectionBasis, samples: int,
                             rng: np.random.Generator) -> float:
    """Monte-Carlo floor of min_k c_k(R) over the boundary sphere of the ball."""
    d = basis.dim
    best = np.inf
    for _ in range(samples):
        g = rng.standard_normal((d, d))
        s = 0.5 * (g + g.T)
        s *= basis.radius / np.linalg.norm(s)
        c = basis.coefficients(np.eye(d) + s)
        best = min(best, float(c.min()))
    return best


def worst_case_stress(basis: DirectionBasis, k: int) -> np.ndarray:
    """Boundary point of the ball where coefficient k attains its margin."""
    g = basis.load[k]
    return np.eye(basis.dim) - basis.radius * g / np.linalg.norm(g)
