"""Time concentration profiles and the initial-time ramp.

The oscillator g concentrates unit L2 mass per unit window on a 1/kappa
fraction of it and is replayed at an integer rate, so a unit of path time
holds whole periods.  Sequences are built discrete-first: the trapezoid of
g^2 over one period is normalized to 1 in the sampled values themselves,
which makes the defect primitive h return to zero at period ends to
rounding, not to quadrature error.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mollify import bump


def smoothstep(u) -> np.ndarray:
    """C-infinity ramp: 0 for u <= 0, 1 for u >= 1, strictly rising between."""
    u = np.asarray(u, dtype=float)
    lo = bump_tail(u)
    hi = bump_tail(1.0 - u)
    out = np.zeros_like(u)
    pos = lo > 0
    out[pos] = lo[pos] / (lo[pos] + hi[pos])
    return out


def bump_tail(u) -> np.ndarray:
    """exp(-1/u) for u > 0, else 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


@dataclass(frozen=True)
class OscillatorProfile:
    """Sampled concentration profile and its mass-defect primitive.

    g holds g_kappa evaluated at rate*t_j; h holds the running integral of
    g_kappa^2 - 1 in the profile's own argument, so h vanishes at every
    period boundary and |h| <= 1 - 1/kappa everywhere.
    """

    kappa: float
    rate: int
    dt: float
    g: np.ndarray
    h: np.ndarray
    frames_per_period: int

    @property
    def n_frames(self) -> int:
        return self.g.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n_frames) * self.dt

    def window_norm(self, m: float, window: int = 0) -> float:
        """Discrete L^m of g over the unit window starting at argument `window`."""
        p = self.frames_per_period
        seg = self.g[window * p: (window + 1) * p]
        if seg.size < p:
            raise ValueError("window extends past the sampled path")
        if np.isinf(m):
            return float(np.abs(seg).max())
        return float(np.mean(np.abs(seg) ** m) ** (1.0 / m))


def build_oscillator(kappa: float, rate: int, dt: float, n_frames: int,
                     allow_unresolved: bool = False,
                     phase: float = 0.0) -> OscillatorProfile:
    """Sample the rate-sped concentration profile on the frame grid.

    Needs a whole number of frames per period and at least 16 frames per
    concentration window (kappa*rate*dt <= 1/16) unless allow_unresolved.
    phase slides the concentration window within the period; every
    identity is phase-independent, so short paths can pick where the
    active burst lands.
    """
    if kappa < 2:
        raise ValueError("concentration kappa must be >= 2")
    if rate != int(rate) or rate < 1:
        raise ValueError("rate must be a positive integer")
    rate = int(rate)
    p_exact = 1.0 / (rate * dt)
    p = round(p_exact)
    if abs(p_exact - p) > 1e-9 * p_exact or p < 2:
        raise ValueError(f"1/(rate*dt) = {p_exact} is not a whole frame count")
    if kappa * rate * dt > 1.0 / 16.0 + 1e-12 and not allow_unresolved:
        raise ValueError(
            f"concentration window holds {p / kappa:.1f} frames, need 16; "
            "pass allow_unresolved to proceed"
        )
    u = np.mod(np.arange(p) / p + phase, 1.0)
    raw = np.sqrt(kappa) * bump(kappa * u)
    mean_sq = np.mean(raw ** 2)
    if mean_sq == 0.0:
        raise ValueError("concentration window fell between frames")
    period = raw / np.sqrt(mean_sq)
    reps = -(-n_frames // p)
    g = np.tile(period, reps)[:n_frames]
    gsq = np.tile(period ** 2, reps + 1)
    h = np.zeros(n_frames)
    if n_frames > 1:
        steps = ((gsq[:-1] + gsq[1:]) / 2.0 - 1.0) / p
        h[1:] = np.cumsum(steps[: n_frames - 1])
    return OscillatorProfile(float(kappa), rate, float(dt), g, h, p)


def time_cutoff(ell: float, dt: float, n_frames: int) -> np.ndarray:
    """Ramp that holds at 0 through sqrt(ell)/2 and reaches 1 at sqrt(ell)."""
    if not 0.0 < ell < 1.0:
        raise ValueError("mollification scale must sit in (0, 1)")
    half = np.sqrt(ell) / 2.0
    if half < 4.0 * dt:
        raise ValueError(f"ramp half-width {half:.2e} under 4 frames at dt={dt:.2e}")
    t = np.arange(n_frames) * dt
    return smoothstep((t - half) / half)


def ramp_derivative_constants(ell: float, dt: float) -> tuple[float, float]:
    """Measured sup|Theta^(n)| * ell^(n/2) for n in {1, 2} (centered stencils)."""
    n_frames = int(np.ceil(2.0 * np.sqrt(ell) / dt)) + 8
    theta = time_cutoff(ell, dt, n_frames)
    d1 = np.gradient(theta, dt)
    d2 = np.gradient(d1, dt)
    return (float(np.abs(d1).max() * ell ** 0.5),
            float(np.abs(d2).max() * ell))
