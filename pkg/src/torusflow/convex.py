"""One velocity iteration that trades a Reynolds stress for fast oscillations.

A pass consumes an adapted pair (velocity, stress) solving the forced
momentum balance up to the divergence of the stress, and returns a new pair
whose stress collects the mollification commutator, the rough-noise gap and
the interaction remainders of a Mikado perturbation with intermittent time
concentration.  Every transfer between slots uses the same discrete Leibniz
rule FD(fg) = FD(f) avg(g) + avg(f) FD(g), so the balance certificate
telescopes exactly: away from the kernel warm-up frames the only surviving
residual is the gap between the second-order certificate stencil and the
fourth-order stencil used to build the starting stress.  That gap shrinks
like dt^2 and does not involve the noise path.

Products are alias-free on the retained band; content that a finite grid
cannot carry is never dropped silently but stored in dedicated remainder
slots of the new stress, so the certificate stays exact at any resolution.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry, grid, mikado, noise, norms, temporal
from .antidiv import antidivergence
from .fields import (Field, FieldPath, deviatoric, devsym_outer, div, grad,
                     laplacian, leray, outer, parseval_l2, product,
                     project_band)
from .grid import TWO_PI
from .mollify import (fd_center, fd_center4, mollify_space, mollify_time,
                      ngb_avg, space_multiplier, time_kernel)

COMPONENTS = (
    "mollification",
    "noise_gap",
    "cross_interaction",
    "space_oscillation",
    "time_oscillation",
    "linear",
    "corrector",
    "startup_cutoff",
)

_OVERRIDABLE = ("concentration", "oscillation", "time_concentration",
                "time_oscillation")


# --------------------------------------------------------------------------
# parameter schedule


@dataclass(frozen=True)
class StepParams:
    """One level of the oscillation schedule, together with its provenance.

    Values follow the proved power laws in the base frequency unless an
    override shrinks them to desk scale; paper_schedule records which.
    """

    level: int
    frequency: float
    exponent: float
    dim: int
    integrability: float        # spatial exponent p, 1 <= p < 2
    time_integrability: float   # temporal exponent r >= 1
    moll_scale: float
    concentration: float
    oscillation: float
    time_concentration: float
    time_oscillation: float
    paper_schedule: bool
    overrides: tuple[str, ...]
    notes: tuple[str, ...]


def _pow(base: float, expo: float) -> float:
    try:
        return float(base) ** float(expo)
    except OverflowError:
        return math.inf


def _next_int(x: float) -> float:
    """Smallest integer strictly above x; passes through once exactness ends."""
    if not math.isfinite(x) or x >= 2.0 ** 53:
        return x
    return float(math.floor(x) + 1)


def schedule_params(level: int, frequency: float, exponent: float, dim: int,
                    integrability: float = 1.0, time_integrability: float = 1.0,
                    overrides: dict | None = None) -> StepParams:
    """Validate the smallness exponent and lay out one schedule level.

    Every inequality is checked by name; a rejection lists all violated
    ones.  Overrides may only shrink the four oscillation parameters.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if frequency <= 1.0:
        raise ValueError("base frequency must exceed 1")
    p = float(integrability)
    r = float(time_integrability)
    if not 1.0 <= p < 2.0:
        raise ValueError("spatial integrability must sit in [1, 2)")
    if r < 1.0:
        raise ValueError("temporal integrability must be >= 1")
    th = float(exponent)
    half_def = 1.0 / p - 0.5

    checks = [
        ("exponent ceiling",
         0.0 < th < 1.0 / (2 * dim + 9),
         f"need 0 < exponent < 1/{2 * dim + 9}, got {th}"),
        ("oscillation budget",
         1.0 / (2.0 * th) >= (4 * dim + 7) * th + (dim - 1) / 2.0 if th > 0 else False,
         "1/(2 exponent) must dominate the oscillation losses"),
        ("concentration budget",
         half_def * (1.0 + dim - (5 * dim + 17) * th) >= (dim + 3) * th / 2.0,
         "integrability defect too small for the concentration losses"),
        ("uniform integrability",
         half_def / th >= (dim - 1) / 2.0 if th > 0 else False,
         "integrability defect per exponent unit too small"),
        ("gradient budget",
         (dim - 1) / r >= (4 * dim + 12) * th,
         "temporal integrability too strong for the gradient losses"),
        ("joint smallness",
         (dim + 3) * th <= min(2.0 * half_def, (dim - 1) / (4.0 * r)),
         "combined exponent bound violated"),
    ]
    bad = [f"{name} ({detail})" for name, ok, detail in checks if not ok]
    if bad:
        raise ValueError("schedule rejected: " + "; ".join(bad))

    ell = _pow(frequency, -th)
    values = {
        "concentration": float(frequency),
        "oscillation": _next_int(_pow(frequency, 1.0 / (2.0 * th))),
        "time_concentration": _pow(frequency, 1.0 + dim - (5 * dim + 17) * th + 1.0 / th),
        "time_oscillation": _next_int(_pow(frequency, (dim + 6) * th)),
    }
    notes = []
    for name, val in values.items():
        if math.isinf(val):
            notes.append(f"{name} overflows float64 at this frequency")
        elif val >= 2.0 ** 53:
            notes.append(f"{name} exceeds the exact integer range")

    applied: list[str] = []
    if overrides:
        unknown = sorted(set(overrides) - set(_OVERRIDABLE))
        if unknown:
            raise ValueError(f"cannot override {unknown}; only {_OVERRIDABLE}")
        for key in _OVERRIDABLE:
            if key not in overrides:
                continue
            new = float(overrides[key])
            if not new > 0.0:
                raise ValueError(f"{key} override must be positive")
            if new > values[key]:
                raise ValueError(
                    f"{key} override {new} exceeds the schedule value "
                    f"{values[key]}; overrides may only shrink"
                )
            values[key] = new
            applied.append(key)
        notes.append("overrides active: desk-scale run off the proved schedule")

    return StepParams(
        level=int(level),
        frequency=float(frequency),
        exponent=th,
        dim=dim,
        integrability=p,
        time_integrability=r,
        moll_scale=ell,
        concentration=values["concentration"],
        oscillation=values["oscillation"],
        time_concentration=values["time_concentration"],
        time_oscillation=values["time_oscillation"],
        paper_schedule=not applied,
        overrides=tuple(applied),
        notes=tuple(notes),
    )


# --------------------------------------------------------------------------
# pointwise amplitude algebra


def stress_floor(value, level: int):
    """Smooth ramp onto the level floor 4^-(level+1).

    Returns the floor below it, the input above twice it, and in between a
    convex combination of the two; hence the result always sits inside
    [max(value, floor)/2, 2 max(value, floor)] and is monotone and smooth.
    """
    tau = 4.0 ** (-(level + 1))
    v = np.asarray(value, dtype=float)
    s = temporal.smoothstep((v - tau) / tau)
    out = tau + (v - tau) * s
    return out if out.ndim else float(out)


def amplitude_rho(stress_moll: FieldPath, level: int, radius: float | None = None,
                  refine: int = 2) -> FieldPath:
    """Pointwise energy density fed to the direction decomposition.

    Scaled so the normalized stress -R/rho stays strictly inside the
    certified coefficient ball of radius `radius` around the identity.
    """
    d = stress_moll.dim
    if radius is None:
        radius = geometry.basis_for(d).radius
    out = []
    for j in range(stress_moll.n_frames):
        s = stress_moll.field(j).samples(refine)
        frob = np.sqrt(np.einsum("ij...,ij...->...", s, s))
        rho = (2.0 / radius) * stress_floor(frob, level)
        out.append(grid.coeffs_from_samples(rho, d))
    return FieldPath(np.stack(out), stress_moll.dt, d)


def _amp_fields(stress_frame: Field, level: int, basis: geometry.DirectionBasis,
                refine: int, band: int) -> tuple[Field, Field, Field]:
    """Per-frame amplitudes (no oscillator factor), their exact squares, and
    the band-limited energy density."""
    d = stress_frame.dim
    n = stress_frame.n
    s = stress_frame.samples(refine)                       # (d, d, ng, ..)
    frob = np.sqrt(np.einsum("ij...,ij...->...", s, s))
    rho = (2.0 / basis.radius) * stress_floor(frob, level)
    mat = np.moveaxis(s, (0, 1), (-2, -1))
    arg = np.eye(d) - mat / rho[..., None, None]
    gam = basis.amplitudes(arg)                            # (m, ng, ..)
    # the box has volume (2 pi)^d while the tube profiles carry unit L2 mass,
    # so the mean of a squared block is (2 pi)^-d; the box factor restores
    # the amplitude-square identity in un-normalized measure
    amp_s = TWO_PI ** (0.5 * d) * np.sqrt(rho)[None] * gam
    amp_c = grid.scatter_modes(grid.coeffs_from_samples(amp_s, d), d, n)
    amp = project_band(Field(amp_c, d), band)
    asq = product(amp, amp, n_out=n)                       # band 2*band, exact
    rho_c = grid.scatter_modes(grid.coeffs_from_samples(rho, d), d, n)
    return amp, asq, Field(rho_c, d)


def amplitudes(stress_moll: FieldPath, rho: FieldPath, profile: temporal.OscillatorProfile,
               basis: geometry.DirectionBasis, band: int | None = None,
               refine: int = 2) -> list[FieldPath]:
    """Band-limited direction amplitudes, one scalar path per direction.

    rho must come from amplitude_rho with the same refine, so the pointwise
    decomposition identity sum_k a_k^2 e_k (x) e_k = g^2 (rho Id - R) holds
    on the sampling grid before band projection.
    """
    d = stress_moll.dim
    n = stress_moll.n
    if band is None:
        band = n // 8
    if rho.n != refine * n:
        raise ValueError("rho grid does not match the sampling refinement")
    m = basis.size
    frames = [[] for _ in range(m)]
    for j in range(stress_moll.n_frames):
        s = stress_moll.field(j).samples(refine)
        rs = rho.field(j).samples()
        mat = np.moveaxis(s, (0, 1), (-2, -1))
        arg = np.eye(d) - mat / rs[..., None, None]
        gam = basis.amplitudes(arg)
        amp_s = TWO_PI ** (0.5 * d) * np.sqrt(rs)[None] * gam
        amp_c = grid.scatter_modes(grid.coeffs_from_samples(amp_s, d), d, n)
        amp = project_band(Field(amp_c, d), band)
        for k in range(m):
            frames[k].append(profile.g[j] * amp.coeffs[k])
    return [FieldPath(np.stack(fr), stress_moll.dt, d) for fr in frames]


# --------------------------------------------------------------------------
# oscillatory building blocks at working resolution


def _grid_for_band(band: int) -> int:
    return max(8, int(math.ceil((2 * band + 2) / 8.0)) * 8)


@dataclass(frozen=True)
class _TubeKit:
    """Direction-stacked, dilated tube fields shared by every frame."""

    units: np.ndarray        # (m, d)
    w: Field                 # (m, d) profile times direction
    v: Field                 # (m, d, d) antisymmetric potential, div v = w
    psisq: Field             # (m,) squared profiles
    rv: Field                # (m, d, d) antidivergence of the centered squares
    mbar: np.ndarray         # (m,) measured means of the squared profiles
    band: int                # largest retained tube mode


def _stack_blocks(blocks: list[mikado.MikadoBlock], sigma: int) -> _TubeKit:
    dim = blocks[0].w.dim
    units = np.stack([b.unit for b in blocks])
    bw = max(b.w.band() for b in blocks)
    n_w = _grid_for_band(sigma * bw)
    n_sq = _grid_for_band(2 * sigma * bw)
    ws, vs, sqs, rvs, mbar = [], [], [], [], []
    for b in blocks:
        w = Field(grid.scatter_modes(b.w.coeffs, dim, n_w, factor=sigma, strict=True), dim)
        v = Field(grid.scatter_modes(b.v.coeffs, dim, n_w, factor=sigma, strict=True), dim)
        sq = product(b.profile, b.profile, n_out=_grid_for_band(2 * bw))
        sq = Field(grid.scatter_modes(sq.coeffs, dim, n_sq, factor=sigma, strict=True), dim)
        mbar.append(float(sq.coeffs[(0,) * dim].real))
        cen = sq.coeffs.copy()
        cen[(0,) * dim] = 0.0  # exact zero mean for the antidivergence
        vec = Field(b.unit.reshape((dim,) + (1,) * dim) * cen[None], dim)
        rvs.append(antidivergence(vec).coeffs)
        ws.append(w.coeffs)
        vs.append(v.coeffs)
        sqs.append(sq.coeffs)
    return _TubeKit(
        units=units,
        w=Field(np.stack(ws), dim),
        v=Field(np.stack(vs), dim),
        psisq=Field(np.stack(sqs), dim),
        rv=Field(np.stack(rvs), dim),
        mbar=np.asarray(mbar),
        band=sigma * bw,
    )


# --------------------------------------------------------------------------
# iteration state


@dataclass(frozen=True)
class IterationState:
    level: int
    velocity: FieldPath
    stress: FieldPath
    noise: FieldPath
    viscosity: float
    history: tuple[StepParams, ...] = ()
    certified_from: int = 1
    certified_to: int | None = None
    report: dict | None = None


@dataclass(frozen=True)
class StepNumerics:
    """Desk-scale knobs that do not belong to the proved schedule."""

    block_res: int | None = None     # tube profile grid, default grows with mu
    amp_band: int | None = None      # retained amplitude band, default n/8
    refine: int = 2                  # sampling refinement for pointwise algebra
    phase: float = 0.0               # where the concentration burst sits in its period
    tol: float = 1e-5                # certificate gate on the relative residual
    allow_unresolved: bool = True    # accept bursts narrower than 16 frames
    require_resolved: bool = False   # raise instead of keeping truncation slots


def time_derivative4(path: FieldPath) -> FieldPath:
    """Fourth-order counterpart of the shared time derivative."""
    return FieldPath(fd_center4(path.frames, path.dt), path.dt, path.dim)


def _check_pair(a: FieldPath, b: FieldPath, what: str) -> None:
    if (a.n_frames != b.n_frames or a.n != b.n or a.dim != b.dim
            or abs(a.dt - b.dt) > 1e-15 * a.dt):
        raise ValueError(f"{what} paths disagree on grid, frames or dt")


def initial_state(drift: FieldPath, noise_path: FieldPath,
                  viscosity: float) -> IterationState:
    """Wrap a smooth drift as the level-zero pair.

    The stress is built with the fourth-order stencil, so the second-order
    certificate sees exactly the stencil gap; that gap is the package's
    honest resolution floor and halves twice under dt -> dt/2.
    """
    _check_pair(drift, noise_path, "drift and noise")
    d = drift.dim
    j0 = float(np.abs(drift.frames[0]).max())
    scale = float(np.abs(drift.frames).max()) + 1.0
    if j0 > 1e-12 * scale:
        raise ValueError("drift must vanish at t=0 to keep the start adapted")
    for j in (0, drift.n_frames - 1):
        f = drift.field(j)
        dv = parseval_l2(div(f))
        if dv > 1e-8 * (1.0 + parseval_l2(f)):
            raise ValueError("drift must be divergence-free")
    dt4 = fd_center4(drift.frames, drift.dt)
    out = np.empty((drift.n_frames, d, d) + (drift.n,) * d, dtype=complex)
    for j in range(drift.n_frames):
        e = Field(dt4[j], d) - viscosity * laplacian(drift.field(j)) \
            - noise_path.field(j)
        u = Field(drift.frames[j] + noise_path.frames[j], d)
        out[j] = antidivergence(e).coeffs \
            + devsym_outer(u, u, n_out=drift.n).coeffs
    stress = FieldPath(out, drift.dt, d)
    report = residual_certificate(drift, stress, noise_path, viscosity,
                                  first=1, last=drift.n_frames - 2)
    return IterationState(
        level=0,
        velocity=drift,
        stress=stress,
        noise=noise_path,
        viscosity=float(viscosity),
        history=(),
        certified_from=1,
        certified_to=drift.n_frames - 2,
        report=report,
    )


# --------------------------------------------------------------------------
# certificate


def residual_certificate(velocity: FieldPath, stress: FieldPath,
                         noise_path: FieldPath, viscosity: float,
                         tol: float = 1e-5, first: int = 1,
                         last: int | None = None) -> dict:
    """Relative momentum-balance defect over a window of interior frames.

    The pressure never appears: the quadratic and stress divergences go
    through the divergence-free projection, which removes every gradient.
    """
    _check_pair(velocity, stress, "velocity and stress")
    j_max = velocity.n_frames - 1
    if last is None:
        last = j_max - 1
    if not 1 <= first <= last <= j_max - 1:
        raise ValueError("certificate window must be interior")
    d, n, dt = velocity.dim, velocity.n, velocity.dt
    scale = 1.0
    for j in range(first, last + 1):
        scale = max(scale, 1.0 + parseval_l2(velocity.field(j))
                    + parseval_l2(stress.field(j)))
    rel = []
    for j in range(first, last + 1):
        dv = (velocity.frames[j + 1] - velocity.frames[j - 1]) / (2.0 * dt)
        u = Field(velocity.frames[j] + noise_path.frames[j], d)
        quad = leray(div(outer(u, u, n_out=n)))
        res = (dv + quad.coeffs
               - viscosity * laplacian(velocity.field(j)).coeffs
               - noise_path.frames[j]
               - leray(div(stress.field(j))).coeffs)
        rel.append(parseval_l2(Field(res, d)) / scale)
    rel_arr = [float(x) for x in rel]
    max_rel = max(rel_arr)
    return {
        "max_rel": max_rel,
        "frame_rel": rel_arr,
        "scale": float(scale),
        "first": int(first),
        "last": int(last),
        "tol": float(tol),
        "passed": bool(max_rel <= tol),
    }


# --------------------------------------------------------------------------
# the iteration step


def _dev_arr(t: np.ndarray, d: int) -> np.ndarray:
    tr = np.einsum("ii...->...", t) / d
    out = t.copy()
    for i in range(d):
        out[i, i] -= tr
    return out


def _fd3(xm, xc, xp, dt: float, pos: str):
    if pos == "lo":
        return (xp - xc) / dt
    if pos == "hi":
        return (xc - xm) / dt
    return (xp - xm) / (2.0 * dt)


def _avg3(xm, xc, xp, pos: str):
    if pos == "mid":
        return 0.5 * (xp + xm)
    return xc


@dataclass(frozen=True)
class PerturbationSet:
    """Principal, divergence-fixing and temporal parts of one perturbation."""

    principal: FieldPath     # sum of amplitude-weighted tubes
    corrector: FieldPath     # completes the principal part to a divergence
    temporal: FieldPath      # moves the slow stress along the defect primitive

    def total(self, cutoff: np.ndarray) -> FieldPath:
        th = cutoff.reshape((-1,) + (1,) * (self.principal.frames.ndim - 1))
        frames = th * (self.principal.frames + self.corrector.frames) \
            + th ** 2 * self.temporal.frames
        return FieldPath(frames, self.principal.dt, self.principal.dim)


def perturbations(amplitude_paths: list[FieldPath], family: list[mikado.MikadoBlock],
                  oscillation: int, profile: temporal.OscillatorProfile,
                  stress_moll: FieldPath,
                  require_resolved: bool = True) -> PerturbationSet:
    """Assemble the three perturbation parts from precomputed amplitudes.

    amplitude_paths already carry the oscillator factor (see amplitudes).
    """
    d = stress_moll.dim
    n = stress_moll.n
    J = stress_moll.n_frames
    amp_band = max(p.field(j).band()
                   for p in amplitude_paths for j in range(p.n_frames))
    # band arithmetic before the kit is materialized: the dilated grid grows
    # linearly with the oscillation and would dwarf memory on a bad config
    tube_band = int(oscillation) * max(b.w.band() for b in family)
    if require_resolved and tube_band + amp_band > grid.active_band(n):
        raise ValueError(
            f"tube band {tube_band} plus amplitude band {amp_band} exceeds the "
            f"working band {grid.active_band(n)}; raise the grid or lower the "
            "oscillation"
        )
    kit = _stack_blocks(family, int(oscillation))
    wp = np.empty((J, d) + (n,) * d, dtype=complex)
    wc = np.empty_like(wp)
    wt = np.empty_like(wp)
    for j in range(J):
        amp = np.stack([p.frames[j] for p in amplitude_paths])
        if np.abs(amp).max() == 0.0:
            wp[j] = 0.0
            wc[j] = 0.0
        else:
            x = product(Field(amp[:, None], d), kit.w, n_out=n)
            wp[j] = x.coeffs.sum(axis=0)
            s = product(Field(amp[:, None, None], d), kit.v, n_out=n)
            wpc = div(Field(s.coeffs.sum(axis=0), d)).coeffs / oscillation
            wc[j] = wpc - wp[j]
        f = leray(div(stress_moll.field(j)))
        wt[j] = profile.h[j] / profile.rate * f.coeffs
    dt = stress_moll.dt
    return PerturbationSet(
        principal=FieldPath(wp, dt, d),
        corrector=FieldPath(wc, dt, d),
        temporal=FieldPath(wt, dt, d),
    )


def step(state: IterationState, params: StepParams,
         noise_path: FieldPath | None = None,
         numerics: StepNumerics | None = None) -> IterationState:
    """One full iteration: mollify, decompose, oscillate, re-certify.

    Raises if the certificate over the valid window fails; the message
    carries a per-component norm breakdown.
    """
    num = numerics or StepNumerics()
    z = noise_path if noise_path is not None else state.noise
    v, R = state.velocity, state.stress
    _check_pair(v, R, "velocity and stress")
    _check_pair(v, z, "velocity and noise")
    if params.level != state.level:
        raise ValueError(
            f"schedule level {params.level} does not match state level {state.level}"
        )
    if params.dim != v.dim:
        raise ValueError("schedule dimension does not match the fields")

    d, n, J, dt = v.dim, v.n, v.n_frames, v.dt
    nu = state.viscosity
    for name in ("oscillation", "time_oscillation"):
        val = getattr(params, name)
        if not (math.isfinite(val) and val == int(val) and val >= 1):
            raise ValueError(
                f"{name}={val} is not a desk-representable integer; "
                "shrink it through schedule overrides"
            )
    sig = int(params.oscillation)
    var = int(params.time_oscillation)
    mu, kap, ell = params.concentration, params.time_concentration, params.moll_scale
    if not (math.isfinite(mu) and math.isfinite(kap)):
        raise ValueError("concentration parameters overflow; use schedule overrides")

    basis = geometry.basis_for(d)
    block_res = num.block_res or max(16, int(math.ceil(4.0 * mu / 8.0)) * 8)
    dirs = [tuple(int(x) for x in dd) for dd in basis.directions]
    family = mikado.build_family(dirs, mu, block_res, d, strict=True)
    # band arithmetic before the kit is materialized: the dilated grid grows
    # linearly with the oscillation and would dwarf memory on a bad config
    tube_band = sig * max(b.w.band() for b in family)
    amp_band = num.amp_band or n // 8
    notes = list(params.notes)
    if tube_band + amp_band > grid.active_band(n):
        msg = (f"tube band {tube_band} plus amplitude band {amp_band} exceeds "
               f"the working band {grid.active_band(n)}")
        if num.require_resolved:
            raise ValueError(msg + "; raise the grid or lower the oscillation")
        notes.append(msg + "; the excess is kept exactly in the corrector slot")
    kit = _stack_blocks(family, sig)

    profile = temporal.build_oscillator(kap, var, dt, J,
                                        allow_unresolved=num.allow_unresolved,
                                        phase=num.phase)
    theta = temporal.time_cutoff(ell, dt, J)
    g, h = profile.g, profile.h
    c_seq = theta ** 2 * h / var
    th_avg = ngb_avg(theta)
    th_fd = fd_center(theta, dt)
    c_avg = ngb_avg(c_seq)
    c_fd = fd_center(c_seq, dt)

    kern = time_kernel(ell, dt)
    lag = kern.size - 1
    if lag * dt > 0.5 * math.sqrt(ell) + 1e-12:
        notes.append("mollifier warm-up reaches into the active window")
    mult = space_multiplier(n, d, ell)

    v1 = np.empty((J, d) + (n,) * d, dtype=complex)
    r1 = np.empty((J, d, d) + (n,) * d, dtype=complex)
    comp_l1 = {name: np.zeros(J) for name in COMPONENTS}
    comp_l2 = {name: np.zeros(J) for name in COMPONENTS}

    hist: dict[str, list[np.ndarray]] = {"v": [], "z": [], "R": [], "q": []}

    def push(key: str, arr: np.ndarray) -> None:
        hist[key].append(arr)
        if len(hist[key]) > lag + 1:
            hist[key].pop(0)

    def moll(key: str) -> np.ndarray:
        dq = hist[key]
        acc = np.zeros_like(dq[-1])
        for i in range(1, lag + 1):
            wi = kern[i]
            if wi == 0.0:
                continue
            acc += wi * dq[max(len(dq) - 1 - i, 0)]
        return acc

    zero_vec = np.zeros((d,) + (n,) * d, dtype=complex)

    def derived(j: int) -> dict:
        uj = Field(v.frames[j] + z.frames[j], d)
        pq = devsym_outer(uj, uj, n_out=n)
        push("v", mult * v.frames[j])
        push("z", mult * z.frames[j])
        push("R", mult * R.frames[j])
        push("q", mult * pq.coeffs)
        rl = Field(moll("R"), d)
        bundle = {
            "vl": moll("v"),
            "zl": moll("z"),
            "Rl": rl.coeffs,
            "mq": moll("q"),
            "F": leray(div(rl)).coeffs,
            "live": g[j] != 0.0,
        }
        if bundle["live"]:
            amp0, asq0, rho_t = _amp_fields(rl, state.level, basis,
                                            num.refine, amp_band)
            amp = g[j] * amp0.coeffs
            asq = g[j] ** 2 * asq0.coeffs
            x = product(Field(amp[:, None], d), kit.w, n_out=n)
            s = product(Field(amp[:, None, None], d), kit.v, n_out=n)
            bundle.update(
                asq=asq,
                rho=rho_t.coeffs,
                X=x.coeffs,
                wp=x.coeffs.sum(axis=0),
                wpc=div(Field(s.coeffs.sum(axis=0), d)).coeffs / sig,
            )
        else:
            bundle.update(wp=zero_vec, wpc=zero_vec)
        return bundle

    def assemble(jc: int, bm: dict, bc: dict, bp: dict, pos: str) -> None:
        thj = theta[jc]
        gj = g[jc]
        cj = c_seq[jc]
        omega = thj * bc["wpc"] + cj * bc["F"]
        v1[jc] = bc["vl"] + omega
        dz = z.frames[jc] - bc["zl"]
        vl_tot = Field(bc["vl"] + bc["zl"], d)

        slots: dict[str, np.ndarray] = {}
        slots["mollification"] = (
            deviatoric(outer(vl_tot, vl_tot, n_out=n)).coeffs - bc["mq"]
        )

        a1 = Field(v1[jc] + bc["zl"], d)
        dzf = Field(dz, d)
        t = outer(a1, dzf, n_out=n).coeffs
        slots["noise_gap"] = _dev_arr(
            t + np.swapaxes(t, 0, 1) + outer(dzf, dzf, n_out=n).coeffs, d
        )

        y = (th_avg[jc] * _fd3(bm["wpc"], bc["wpc"], bp["wpc"], dt, pos)
             - nu * laplacian(Field(omega, d)).coeffs
             + bc["zl"] - z.frames[jc])
        cross = outer(vl_tot, Field(omega, d), n_out=n).coeffs
        slots["linear"] = (antidivergence(Field(y, d)).coeffs
                           + _dev_arr(cross + np.swapaxes(cross, 0, 1), d))

        slots["time_oscillation"] = c_avg[jc] * _fd3(bm["Rl"], bc["Rl"], bp["Rl"], dt, pos)

        cut_vec = (th_fd[jc] * _avg3(bm["wpc"], bc["wpc"], bp["wpc"], pos)
                   + c_fd[jc] * _avg3(bm["F"], bc["F"], bp["F"], pos)
                   + thj ** 2 * (1.0 - gj ** 2) * bc["F"])
        slots["startup_cutoff"] = ((1.0 - thj ** 2) * bc["Rl"]
                                   + antidivergence(Field(cut_vec, d)).coeffs)

        wct = thj * (bc["wpc"] - bc["wp"]) + cj * bc["F"]
        cor = outer(Field(wct, d), Field(wct, d), n_out=n).coeffs
        if bc["live"]:
            wpf = Field(bc["wp"], d)
            xf = Field(bc["X"], d)
            ww = outer(wpf, wpf, n_out=n).coeffs
            diag = product(xf, xf, "bouter", n_out=n).coeffs
            diag_sum = diag.sum(axis=0)
            slots["cross_interaction"] = thj ** 2 * _dev_arr(ww - diag_sum, d)

            asq_f = Field(bc["asq"], d)
            gasq = grad(asq_f)
            bco = np.einsum("fd...,fd->f...", gasq.coeffs, kit.units)
            t1 = product(Field(bco[:, None, None], d), kit.rv, n_out=n).coeffs.sum(axis=0)
            t2 = product(grad(Field(bco, d)), kit.rv, "bvecmat", n_out=n).coeffs.sum(axis=0)
            t2[(slice(None),) + (0,) * d] = 0.0  # structural zero mean, kept exact
            slots["space_oscillation"] = thj ** 2 * (
                t1 - antidivergence(Field(t2, d)).coeffs
            )

            q2 = product(asq_f, kit.psisq, n_out=n).coeffs
            dd = np.einsum("f...,fi,fj->ij...", q2, kit.units, kit.units)
            dq_slot = np.einsum("f,f...,fi,fj->ij...", kit.mbar, bc["asq"],
                                kit.units, kit.units)
            dq_slot += gj ** 2 * bc["Rl"]
            for i in range(d):
                dq_slot[i, i] -= gj ** 2 * bc["rho"]
            tt = outer(Field(thj * bc["wp"], d), Field(wct, d), n_out=n).coeffs
            cor = cor + tt + np.swapaxes(tt, 0, 1)
            cor_extra = thj ** 2 * (_dev_arr(diag_sum - dd, d) + _dev_arr(dq_slot, d))
        else:
            slots["cross_interaction"] = np.zeros_like(slots["mollification"])
            slots["space_oscillation"] = np.zeros_like(slots["mollification"])
            cor_extra = 0.0
        slots["corrector"] = _dev_arr(cor, d) + cor_extra

        r1[jc] = sum(slots.values())
        for name, val in slots.items():
            fl = Field(val, d)
            comp_l2[name][jc] = parseval_l2(fl)
            comp_l1[name][jc] = norms.lebesgue(fl, 1, refine=1)

    window: list[dict] = []
    for j in range(J):
        window.append(derived(j))
        if len(window) > 3:
            window.pop(0)
        if j == 1:
            assemble(0, window[0], window[0], window[1], "lo")
        elif j >= 2:
            assemble(j - 1, window[-3], window[-2], window[-1], "mid")
    assemble(J - 1, window[-2], window[-1], window[-1], "hi")

    v1_path = FieldPath(v1, dt, d)
    r1_path = FieldPath(r1, dt, d)
    certified_from = lag + 3
    certified_to = J - 3
    if certified_from > certified_to:
        raise ValueError("path too short: no interior frames survive the warm-up")
    report = residual_certificate(v1_path, r1_path, z, nu, tol=num.tol,
                                  first=certified_from, last=certified_to)
    report["notes"] = notes
    report["components"] = {
        name: {
            "l1l1": float(norms.seq_lm(comp_l1[name], dt, 1.0)),
            "l2l2": float(norms.seq_lm(comp_l2[name], dt, 2.0)),
            "sup_l2": float(comp_l2[name].max()),
        }
        for name in COMPONENTS
    }
    if not report["passed"]:
        lines = [
            f"  {name}: sup L2 {report['components'][name]['sup_l2']:.3e}"
            for name in COMPONENTS
        ]
        raise RuntimeError(
            "balance certificate failed: relative residual "
            f"{report['max_rel']:.3e} > {num.tol:.1e} on frames "
            f"[{certified_from}, {certified_to}]\n" + "\n".join(lines)
        )
    return IterationState(
        level=state.level + 1,
        velocity=v1_path,
        stress=r1_path,
        noise=z,
        viscosity=nu,
        history=state.history + (params,),
        certified_from=certified_from,
        certified_to=certified_to,
        report=report,
    )


# --------------------------------------------------------------------------
# mollification gap of the noise (common random numbers)


def mollification_gap(dim: int, n: int, horizon: float, dt: float,
                      scales, samples: int, seed: int, nu: float = 1.0,
                      amplitude: float = 1.0) -> dict:
    """Monte Carlo L2L2 distance between the noise and its mollification.

    The same sampled paths are reused across the scales, so the comparison
    is a common-random-number ladder: shrinking the scale must shrink the
    gap, sample by sample.
    """
    spec = noise.default_spectrum(dim, n, amplitude=amplitude)
    scales = [float(s) for s in scales]
    gaps = np.zeros((samples, len(scales)))
    for s in range(samples):
        z = noise.sample_z_path(spec, horizon, dt, seed=seed + s, nu=nu)
        for i, ell in enumerate(scales):
            zl = mollify_time(mollify_space(z, ell), ell)
            vals = [parseval_l2(Field(z.frames[j] - zl.frames[j], dim))
                    for j in range(z.n_frames)]
            gaps[s, i] = norms.seq_lm(np.asarray(vals), dt, 2.0)
    return {
        "scales": scales,
        "mean": gaps.mean(axis=0).tolist(),
        "stderr": (gaps.std(axis=0, ddof=1) / math.sqrt(samples)).tolist()
        if samples > 1 else [0.0] * len(scales),
        "per_sample": gaps.tolist(),
    }


# --------------------------------------------------------------------------
# campaign driver


def shear_drift(n: int, dim: int, dt: float, n_frames: int,
                amplitude: float = 0.02) -> FieldPath:
    """Gentle single-mode shear that vanishes at t=0; the default drift."""
    frames = np.zeros((n_frames, dim) + (n,) * dim, dtype=complex)
    x = grid.grid_points(n, dim)
    cell = np.sin(x[1])
    comp = Field.from_samples(cell, dim).coeffs
    t = np.arange(n_frames) * dt
    envelope = amplitude * np.sin(np.pi * t) ** 2
    for j in range(n_frames):
        frames[j, 0] = envelope[j] * comp
    return FieldPath(frames, dt, dim)


def _weak_norm(path: FieldPath, p: float, r: float) -> float:
    sup_neg = 0.0
    sup_vals = np.zeros(path.n_frames)
    grad_vals = np.zeros(path.n_frames)
    for j in range(path.n_frames):
        f = path.field(j)
        sup_neg = max(sup_neg, norms.sobolev(f, -1.0, 1.0))
        sup_vals[j] = norms.lebesgue(f, math.inf)
        grad_vals[j] = norms.sobolev(f, 1.0, r)
    return (sup_neg + norms.seq_lm(sup_vals, path.dt, p)
            + norms.seq_lm(grad_vals, path.dt, 1.0))


def _stress_l1l1(path: FieldPath) -> float:
    vals = np.array([norms.lebesgue(path.field(j), 1.0, refine=1)
                     for j in range(path.n_frames)])
    return float(norms.seq_lm(vals, path.dt, 1.0))


@dataclass
class CampaignResult:
    rows: list[dict]
    summary: list[dict]
    params: list[StepParams]
    config: dict


def run_campaign(levels: int, samples: int, config: dict | None = None) -> CampaignResult:
    """Monte Carlo iteration ladder with per-level norm reports.

    Per sample: draw one noise path, build the level-zero pair from the
    configured drift, run `levels` iteration steps, and record the stress
    and perturbation norms of every step and component.  The summary
    aggregates means and standard errors and compares the stress smallness
    against the halving target min(previous stress^(1/2), eps/2^(q+1)).

    The all-zero pair (no drift, no noise) is a fixed point by convention:
    with nothing to correct, every level reports zero norms without
    stepping.  Stepping it anyway would inject energy at the stress floor,
    which only makes sense on states the iteration actually produces.
    """
    cfg = {
        "dim": 2, "n": 64, "dt": 1.0 / 256, "horizon": 0.15625,
        "viscosity": 1.0, "exponent": 0.05, "frequency": 2.0 ** 120,
        "integrability": 1.0, "time_integrability": 1.0,
        "noise_amplitude": 0.3, "drift_amplitude": 0.02,
        "epsilon": 0.5, "seed": 2025, "phase": 0.6,
        "tol": 1e-5, "block_res": None, "amp_band": None,
        "overrides": [
            {"concentration": 8, "oscillation": 2,
             "time_concentration": 16, "time_oscillation": 2},
        ],
    }
    if config:
        unknown = sorted(set(config) - set(cfg))
        if unknown:
            raise ValueError(f"unknown campaign keys: {unknown}")
        cfg.update(config)

    dim, n, dt = cfg["dim"], cfg["n"], cfg["dt"]
    n_frames = int(round(cfg["horizon"] / dt)) + 1
    p, r = cfg["integrability"], cfg["time_integrability"]
    over = cfg["overrides"]
    params = [
        schedule_params(q, cfg["frequency"], cfg["exponent"], dim, p, r,
                        overrides=over[min(q, len(over) - 1)])
        for q in range(levels)
    ]
    numerics = StepNumerics(block_res=cfg["block_res"], amp_band=cfg["amp_band"],
                            phase=cfg["phase"], tol=cfg["tol"])
    spec = noise.default_spectrum(dim, n, amplitude=cfg["noise_amplitude"])

    rows: list[dict] = []
    stress_by_level = np.zeros((samples, levels + 1))
    for s in range(samples):
        if cfg["noise_amplitude"] > 0.0:
            z = noise.sample_z_path(spec, cfg["horizon"], dt,
                                    seed=cfg["seed"] + s, nu=cfg["viscosity"])
        else:
            z = FieldPath.zero(n_frames, dt, n, dim, (dim,))
        w = shear_drift(n, dim, dt, n_frames, amplitude=cfg["drift_amplitude"])
        st = initial_state(w, z, cfg["viscosity"])
        stress_by_level[s, 0] = _stress_l1l1(st.stress)
        rows.append({"sample": s, "level": 0, "component": "total",
                     "norm": "stress_l1l1", "value": stress_by_level[s, 0]})
        quiescent = (stress_by_level[s, 0] == 0.0 and not np.any(z.frames)
                     and not np.any(st.velocity.frames))
        for q in range(levels):
            if quiescent:
                for nm in ("stress_l1l1", "perturbation_l2l2",
                           "perturbation_weak", "perturbation_lplp",
                           "perturbation_sup_frames", "residual_max_rel"):
                    rows.append({"sample": s, "level": q + 1,
                                 "component": "total", "norm": nm,
                                 "value": 0.0})
                for name in COMPONENTS:
                    rows.append({"sample": s, "level": q + 1,
                                 "component": name, "norm": "component_l1l1",
                                 "value": 0.0})
                continue
            new = step(st, params[q], numerics=numerics)
            omega = new.velocity - st.velocity
            stress_by_level[s, q + 1] = _stress_l1l1(new.stress)
            l2_frames = np.array([parseval_l2(omega.field(j))
                                  for j in range(omega.n_frames)])
            sup_frames = np.array([norms.lebesgue(omega.field(j), math.inf)
                                   for j in range(omega.n_frames)])
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "stress_l1l1",
                         "value": stress_by_level[s, q + 1]})
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "perturbation_l2l2",
                         "value": float(norms.seq_lm(l2_frames, dt, 2.0))})
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "perturbation_weak",
                         "value": _weak_norm(omega, p, r)})
            lp_frames = np.array([norms.lebesgue(omega.field(j), p)
                                  for j in range(omega.n_frames)])
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "perturbation_lplp",
                         "value": float(norms.seq_lm(lp_frames, dt, p))})
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "perturbation_sup_frames",
                         "value": float(norms.seq_lm(sup_frames, dt, p))})
            rows.append({"sample": s, "level": q + 1, "component": "total",
                         "norm": "residual_max_rel",
                         "value": float(new.report["max_rel"])})
            for name, entry in new.report["components"].items():
                rows.append({"sample": s, "level": q + 1, "component": name,
                             "norm": "component_l1l1", "value": entry["l1l1"]})
            st = new

    summary: list[dict] = []
    for q in range(levels + 1):
        vals = stress_by_level[:, q]
        mean = float(vals.mean())
        err = float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
        entry = {"level": q, "norm": "stress_l1l1", "mean": mean, "stderr": err}
        if q > 0:
            target = min(math.sqrt(max(stress_by_level[:, q - 1].mean(), 0.0)),
                         cfg["epsilon"] / 2.0 ** q)
            entry["target_sqrt"] = target
            entry["achieved_sqrt"] = math.sqrt(max(mean, 0.0))
            entry["met"] = bool(entry["achieved_sqrt"] <= target)
        summary.append(entry)
    return CampaignResult(rows=rows, summary=summary, params=params, config=cfg)
