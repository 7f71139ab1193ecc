"""Configuration-driven experiment runner for the whole laboratory.

    torusflow SUBCOMMAND [--config FILE] [--out DIR] [key=value ...]

Config is key=value text: the --config file is read first, then the
command-line pairs, later values winning.  Numeric values accept fractions
(dt=1/512) and powers (frequency=2^120).  The output root comes from --out,
then $TORUSFLOW_OUT, then ./torusflow-out; each subcommand writes into its
own subdirectory.

Every subcommand writes checks.csv (check, value, bound, passed) and
manifest.json (canonical config echo, config hash, seed, package versions)
and exits 0 exactly when every declared tolerance passes.  Tables besides
checks.csv, by subcommand:

  geometry-check  basis.csv   direction, base point, coefficient at the
                              identity, load matrix (row-major)
                  samples.csv case, ball_distance, min_coefficient, error
  mikado-check    tubes.csv   direction, check, value, bound, passed
  antidiv-check   sweep.csv   case, n, check, value
                  dilation.csv sigma, l1_norm
  profiles-check  profile.csv t, g, h, theta (first configured kappa)
  noise-moments   moments.csv window, m, estimate, stderr
  residual        residual.csv frame, value
  iterate         campaign.csv level, component, norm, estimate, stderr
                  residual_log.csv sample, level, value
  uniqueness      ledger.csv  t, quantity, value, stderr, bound, flag
                              (bound excludes the 3-stderr slack, which is
                              visible in the stderr column)

CSV bodies are deterministic for a fixed config and seed; manifests carry
no timestamps.
"""

from __future__ import annotations

import math
import os
import sys
from pathlib import Path

import numpy as np

from . import antidiv, convex, geometry, io, mikado, noise, norms, temporal
from . import uniqueness as uniq
from .fields import (Field, FieldPath, dilate, div, grad, laplacian, leray,
                     outer, parseval_l2, product, project_band, transpose)


class ConfigError(Exception):
    pass


def number(text: str) -> float:
    """Float literal, a/b fraction, or a^b power."""
    text = text.strip()
    try:
        if "/" in text:
            a, b = text.split("/", 1)
            return float(a) / float(b)
        if "^" in text:
            a, b = text.split("^", 1)
            return float(a) ** float(b)
        return float(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not a number: {text!r} ({exc})") from None


def parse_config_text(text: str, source: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for i, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{source}, line {i}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"{source}, line {i}: empty key")
        out[key] = value
    return out


class Config:
    """Typed access over raw key=value pairs, recording the effective values.

    The recorded values form the canonical echo: parsing the echoed text
    reproduces it verbatim (round-trip stability).
    """

    def __init__(self, raw: dict[str, str]):
        self.raw = dict(raw)
        self.used: dict[str, str] = {}

    def _fetch(self, key: str, default, conv):
        if key in self.raw:
            try:
                value = conv(self.raw[key])
            except ConfigError:
                raise
            except ValueError as exc:
                raise ConfigError(f"config key {key}: {exc}") from None
        else:
            value = default
        if value is not None:
            self.used[key] = io._cell(value)
        return value

    def get_int(self, key: str, default: int | None = None) -> int:
        return self._fetch(key, default, lambda s: int(round(number(s))))

    def get_float(self, key: str, default: float | None = None) -> float:
        return self._fetch(key, default, number)

    def get_str(self, key: str, default: str | None = None) -> str:
        return self._fetch(key, default, str)

    def get_floats(self, key: str, default: str) -> list[float]:
        text = self.raw.get(key, default)
        self.used[key] = text
        return [number(part) for part in text.split(",") if part.strip()]

    def reject_unknown(self) -> None:
        unknown = sorted(set(self.raw) - set(self.used))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")


class Checks:
    def __init__(self):
        self.rows: list[tuple[str, float, float, bool]] = []

    def within(self, name: str, value: float, bound: float) -> bool:
        ok = bool(value <= bound)
        self.rows.append((name, float(value), float(bound), ok))
        return ok

    def above(self, name: str, value: float, floor: float) -> bool:
        ok = bool(value > floor)
        self.rows.append((name, float(value), float(floor), ok))
        return ok

    @property
    def passed(self) -> bool:
        return all(ok for *_, ok in self.rows)


def _smooth_field(rng: np.random.Generator, n: int, dim: int,
                  comp: tuple[int, ...], band: int) -> Field:
    f = Field.from_samples(rng.standard_normal(comp + (n,) * dim), dim)
    return project_band(f, band)


# --------------------------------------------------------------------------
# subcommands


def cmd_geometry(cfg: Config, out: Path, checks: Checks) -> None:
    d = cfg.get_int("d", 2)
    samples = cfg.get_int("samples", 10_000)
    seed = cfg.get_int("seed", 101)
    mu = cfg.get_float("mu", 16.0)
    basis = geometry.basis_for(d)

    offsets = mikado.place_family([tuple(v) for v in basis.directions], mu, d)
    rows = []
    for k in range(basis.size):
        rows.append(tuple(basis.directions[k]) + tuple(offsets[k])
                    + (basis.offset[k],) + tuple(basis.load[k].ravel()))
    dcols = [f"k{i}" for i in range(d)] + [f"p{i}" for i in range(d)]
    lcols = [f"load{i}{j}" for i in range(d) for j in range(d)]
    io.write_csv(out / "basis.csv", dcols + ["offset"] + lcols, rows)

    rng = np.random.default_rng(seed)
    g = rng.standard_normal((samples, d, d))
    sym = 0.5 * (g + np.swapaxes(g, 1, 2))
    scale = np.linalg.norm(sym, axis=(1, 2))
    radii = basis.radius * rng.uniform(size=samples)
    dev = sym * (radii / scale)[:, None, None]
    r_mats = np.eye(d) + dev
    coeff = basis.coefficients(r_mats)
    rec = basis.reconstruct(np.sqrt(np.maximum(coeff, 0.0)) ** 2)
    err = np.linalg.norm(rec - r_mats, axis=(1, 2))
    tr_gap = np.abs(np.einsum("sii->s", r_mats) - coeff.sum(axis=0))
    io.write_csv(out / "samples.csv",
                 ["case", "ball_distance", "min_coefficient", "error"],
                 ((i, radii[i], coeff[:, i].min(), err[i]) for i in range(samples)))
    checks.within("max_reconstruction_error", float(err.max()), 1e-10)
    checks.above("min_coefficient", float(coeff.min()), 0.0)
    checks.above("certified_margin", basis.margin, 0.0)
    checks.within("max_trace_gap", float(tr_gap.max()), 1e-12)


def cmd_mikado(cfg: Config, out: Path, checks: Checks) -> None:
    d = cfg.get_int("d", 2)
    n = cfg.get_int("n", 256)
    mu = cfg.get_float("mu", 16.0)
    basis = geometry.basis_for(d)
    family = mikado.build_family([tuple(v) for v in basis.directions], mu, n, d)
    rows = []
    for b in family:
        name = "".join(str(int(x)) for x in b.direction)
        pairs = [
            ("div_w", parseval_l2(div(b.w)) / parseval_l2(grad(b.w)), 1e-10),
            ("div_ww", parseval_l2(div(outer(b.w, b.w)))
             / parseval_l2(grad(outer(b.w, b.w))), 1e-8),
            ("div_v_minus_w", parseval_l2(div(b.v) - b.w) / parseval_l2(b.w), 1e-8),
            ("skew_defect", float(np.abs((b.v + transpose(b.v)).coeffs).max()), 1e-12),
            ("profile_l2_gap", abs(parseval_l2(b.profile) - 1.0), 1e-3),
        ]
        for check, value, bound in pairs:
            ok = checks.within(f"{check}[{name}]", value, bound)
            rows.append((name, check, value, bound, ok))
    io.write_csv(out / "tubes.csv",
                 ["direction", "check", "value", "bound", "passed"], rows)


def cmd_antidiv(cfg: Config, out: Path, checks: Checks) -> None:
    cases = cfg.get_int("cases", 100)
    seed = cfg.get_int("seed", 202)
    grids = [int(x) for x in cfg.get_floats("grids", "64,128")]
    rng = np.random.default_rng(seed)
    rows = []
    worst: dict[str, float] = {}

    def record(case: int, n: int, check: str, value: float) -> None:
        rows.append((case, n, check, float(value)))
        worst[check] = max(worst.get(check, 0.0), float(value))

    for case in range(cases):
        n = grids[case % len(grids)]
        v = _smooth_field(rng, n, 2, (2,), band=6)
        rv = antidiv.antidivergence(v)
        vm = v.coeffs.copy()
        vm[(slice(None),) + (0,) * 2] = 0.0
        record(case, n, "div_r_identity",
               parseval_l2(div(rv) - Field(vm, 2)) / parseval_l2(Field(vm, 2)))
        record(case, n, "r_trace", np.abs(rv.coeffs[0, 0] + rv.coeffs[1, 1]).max())
        record(case, n, "r_symmetry",
               np.abs((rv - transpose(rv)).coeffs).max())
        sol = leray(Field(vm, 2))
        record(case, n, "r_laplace_identity",
               parseval_l2(antidiv.antidivergence(laplacian(sol))
                           - antidiv.sym_gradient(sol))
               / parseval_l2(antidiv.sym_gradient(sol)))
        b = _smooth_field(rng, n, 2, (2,), band=4)
        m = _smooth_field(rng, n, 2, (2, 2), band=6)
        mc = m.coeffs.copy()
        mc[(slice(None), slice(None)) + (0,) * 2] = 0.0
        m = Field(mc, 2)
        bb = antidiv.bilinear_antidivergence(b, m, n_out=n)
        vm_target = product(m, b, kind="matvec", n_out=n)
        tc = vm_target.coeffs.copy()
        tc[(slice(None),) + (0,) * 2] = 0.0
        record(case, n, "div_b_identity",
               parseval_l2(div(bb) - Field(tc, 2)) / parseval_l2(Field(tc, 2)))
    io.write_csv(out / "sweep.csv", ["case", "n", "check", "value"], rows)
    checks.within("div_r_identity_max", worst["div_r_identity"], 1e-10)
    checks.within("r_trace_max", worst["r_trace"], 1e-12)
    checks.within("r_symmetry_max", worst["r_symmetry"], 1e-12)
    checks.within("r_laplace_identity_max", worst["r_laplace_identity"], 1e-10)
    checks.within("div_b_identity_max", worst["div_b_identity"], 1e-10)

    # one fixed mean-zero profile, dilated: the anti-divergence buys 1/sigma
    f = _smooth_field(np.random.default_rng(seed + 1), 32, 2, (2,), band=3)
    fc = f.coeffs.copy()
    fc[(slice(None),) + (0,) * 2] = 0.0
    f = Field(fc, 2)
    sigmas = [2, 4, 8, 16]
    vals = []
    for s in sigmas:
        rf = antidiv.antidivergence(dilate(f, s, n_out=32 * s))
        vals.append(norms.lebesgue(rf, 1.0))
    slope = np.polyfit(np.log(sigmas), np.log(vals), 1)[0]
    io.write_csv(out / "dilation.csv", ["sigma", "l1_norm"], zip(sigmas, vals))
    checks.within("dilation_slope_gap", abs(slope + 1.0), 0.05)


def cmd_profiles(cfg: Config, out: Path, checks: Checks) -> None:
    dt = cfg.get_float("dt", 1.0 / 4096)
    kappas = cfg.get_floats("kappas", "16,64,256")
    rate = cfg.get_int("rate", 1)
    ells = cfg.get_floats("cutoffs", "1/16,1/64,1/256")
    n_frames = int(round(2.0 / dt)) + 1

    lm = {1.0: [], 4.0: []}
    for i, kappa in enumerate(kappas):
        prof = temporal.build_oscillator(kappa, rate, dt, n_frames)
        per = prof.frames_per_period
        for s in (0, 1):
            checks.within(f"g_l2_window{s}_gap[kappa={kappa:g}]",
                          abs(prof.window_norm(2.0, s) - 1.0), 1e-6)
        checks.within(f"h_sup[kappa={kappa:g}]", float(np.abs(prof.h).max()), 1.0)
        checks.within(f"h_period_defect[kappa={kappa:g}]",
                      abs(prof.h[per]), 1e-10)
        for m in lm:
            lm[m].append(prof.window_norm(m))
        if i == 0:
            theta = temporal.time_cutoff(ells[0], dt, n_frames)
            io.write_csv(out / "profile.csv", ["t", "g", "h", "theta"],
                         zip(prof.times, prof.g, prof.h, theta))
    for m, want in ((1.0, -0.5), (4.0, 0.25)):
        slope = np.polyfit(np.log(kappas), np.log(lm[m]), 1)[0]
        checks.within(f"g_l{m:g}_slope_gap", abs(slope - want), 0.05)

    for ell in ells:
        theta = temporal.time_cutoff(ell, dt, n_frames)
        checks.within(f"cutoff_start[ell={ell:g}]", abs(theta[0]), 0.0)
        checks.within(f"cutoff_end_gap[ell={ell:g}]", abs(theta[-1] - 1.0), 0.0)
        c1, _ = temporal.ramp_derivative_constants(ell, dt)
        checks.within(f"cutoff_slope_constant[ell={ell:g}]", c1, 8.0)
        checks.within(f"cutoff_monotone_defect[ell={ell:g}]",
                      float(np.maximum(-np.diff(theta), 0.0).max()), 0.0)


def cmd_noise(cfg: Config, out: Path, checks: Checks) -> None:
    d = cfg.get_int("d", 2)
    n = cfg.get_int("n", 8)
    amplitude = cfg.get_float("amplitude", 0.3)
    seed = cfg.get_int("seed", 3)
    var_samples = cfg.get_int("var_samples", 10_000)
    t_var = cfg.get_float("T_var", 0.5)
    dt_var = cfg.get_float("dt_var", 1.0 / 64)
    delta = cfg.get_float("delta", 0.25)
    m = cfg.get_float("m", 2.0)
    windows = cfg.get_int("windows", 5)
    mom_samples = cfg.get_int("moment_samples", 1000)
    dt_mom = cfg.get_float("dt_mom", 1.0 / 16)

    spec = noise.default_spectrum(d, n, amplitude=amplitude)
    rng = np.random.default_rng(seed)
    idx = (1,) + (0,) * (d - 1)  # mode k = (1, 0, ..)
    sq = np.empty(var_samples)
    for i in range(var_samples):
        path = noise.sample_z_path(spec, t_var, dt_var, seed=None, rng=rng)
        sq[i] = (np.abs(path.frames[-1][(slice(None),) + idx]) ** 2).sum()
    meas = float(sq.mean())
    g = float(spec.mode_std()[idx])
    lam = 1.0 + 1.0  # |k|^2 + damping at |k| = 1
    want = g ** 2 * (1.0 - math.exp(-2.0 * lam * t_var)) / (2.0 * lam)
    stderr = float(sq.std(ddof=1) / math.sqrt(var_samples))
    checks.within("ou_variance_gap", abs(meas - want), 3.0 * stderr)

    table = noise.estimate_convolution_moments(spec, delta, m, windows,
                                               mom_samples, dt_mom, seed=seed)
    io.write_csv(out / "moments.csv", ["window", "m", "estimate", "stderr"],
                 ((r["window"], r["m"], r["estimate"], r["stderr"]) for r in table))
    est = [r["estimate"] for r in table]
    checks.within("moment_flatness_ratio", max(est) / min(est), 1.5)


def cmd_residual(cfg: Config, out: Path, checks: Checks) -> None:
    d = cfg.get_int("d", 2)
    n = cfg.get_int("n", 64)
    dt = cfg.get_float("dt", 1.0 / 256)
    horizon = cfg.get_float("T", 0.15625)
    nu = cfg.get_float("nu", 1.0)
    drift = cfg.get_float("drift_amplitude", 0.0)
    amp = cfg.get_float("noise_amplitude", 0.0)
    seed = cfg.get_int("seed", 7)
    tol = cfg.get_float("tol", 1e-5)
    n_frames = int(round(horizon / dt)) + 1

    w = convex.shear_drift(n, d, dt, n_frames, amplitude=drift)
    if amp > 0.0:
        z = noise.sample_z_path(noise.default_spectrum(d, n, amplitude=amp),
                                horizon, dt, seed=seed, nu=nu)
    else:
        z = FieldPath.zero(n_frames, dt, n, d, (d,))
    state = convex.initial_state(w, z, nu)
    report = state.report
    io.write_csv(out / "residual.csv", ["frame", "value"],
                 zip(range(report["first"], report["last"] + 1),
                     report["frame_rel"]))
    checks.within("residual_max_rel", report["max_rel"], tol)


def cmd_iterate(cfg: Config, out: Path, checks: Checks) -> None:
    steps = cfg.get_int("steps", 1)
    samples = cfg.get_int("samples", 1)
    over = {
        "concentration": cfg.get_float("concentration", 8),
        "oscillation": cfg.get_float("oscillation", 2),
        "time_concentration": cfg.get_float("time_concentration", 16),
        "time_oscillation": cfg.get_float("time_oscillation", 2),
    }
    campaign_cfg = {
        "dim": cfg.get_int("d", 2),
        "n": cfg.get_int("n", 64),
        "dt": cfg.get_float("dt", 1.0 / 256),
        "horizon": cfg.get_float("T", 0.15625),
        "viscosity": cfg.get_float("nu", 1.0),
        "exponent": cfg.get_float("exponent", 0.05),
        "frequency": cfg.get_float("frequency", 2.0 ** 120),
        "integrability": cfg.get_float("p", 1.0),
        "time_integrability": cfg.get_float("r", 1.0),
        "noise_amplitude": cfg.get_float("noise_amplitude", 0.3),
        "drift_amplitude": cfg.get_float("drift_amplitude", 0.02),
        "epsilon": cfg.get_float("epsilon", 0.5),
        "seed": cfg.get_int("seed", 2025),
        "phase": cfg.get_float("phase", 0.6),
        "tol": cfg.get_float("tol", 1e-5),
        "overrides": [over],
    }
    block_res = cfg.get_int("block_res", 0)
    if block_res:
        campaign_cfg["block_res"] = block_res
    result = convex.run_campaign(steps, samples, campaign_cfg)

    groups: dict[tuple, list[float]] = {}
    for row in result.rows:
        key = (row["level"], row["component"], row["norm"])
        groups.setdefault(key, []).append(row["value"])
    table = []
    for key in sorted(groups):
        vals = np.asarray(groups[key])
        err = float(vals.std(ddof=1) / math.sqrt(len(vals))) if len(vals) > 1 else 0.0
        table.append(key + (float(vals.mean()), err))
    io.write_csv(out / "campaign.csv",
                 ["level", "component", "norm", "estimate", "stderr"], table)

    log = [(row["sample"], row["level"], row["value"])
           for row in result.rows if row["norm"] == "residual_max_rel"]
    io.write_csv(out / "residual_log.csv", ["sample", "level", "value"], log)
    tol = campaign_cfg["tol"]
    for level in range(1, steps + 1):
        vals = [v for s, lv, v in log if lv == level]
        checks.within(f"residual_max_rel[level={level}]",
                      max(vals) if vals else 0.0, tol)


def cmd_uniqueness(cfg: Config, out: Path, checks: Checks) -> None:
    d = cfg.get_int("d", 2)
    if d != 2:
        raise ConfigError("the uniqueness bench runs the 2D regularity regime")
    n = cfg.get_int("n", 64)
    dt = cfg.get_float("dt", 1.0 / 256)
    horizon = cfg.get_float("T", 0.125)
    nu = cfg.get_float("nu", 1.0)
    samples = cfg.get_int("samples", 64)
    amplitude = cfg.get_float("amplitude", 0.3)
    seed = cfg.get_int("seed", 11)
    tg_amp = cfg.get_float("tg_amplitude", 0.3)
    perturb = cfg.get_float("perturbation", 1e-6)
    gap_q = cfg.get_float("gap_q", 4.0)
    allow = cfg.get_float("gap_allow", 0.05)
    co_tol = cfg.get_float("coincidence_tol", 1e-3)

    spec = noise.default_spectrum(d, n, amplitude=amplitude)
    zero = Field.zero(n, d, (d,))
    runs = [uniq.galerkin_solve(zero, spec, dt, horizon, seed=seed + i, nu=nu)
            for i in range(samples)]
    energy = uniq.energy_check(runs)
    ledger = []
    for j, t in enumerate(energy["t"]):
        ledger.append((t, "expected_energy", energy["lhs"][j],
                       energy["stderr"][j],
                       energy["rhs"][j] + energy["allowance"][j],
                       bool(energy["flag"][j])))
    checks.within("energy_flagged_frames", int(energy["flag"].sum()), 0)

    u0 = tg_amp * uniq.taylor_green(n)
    run = uniq.galerkin_solve(u0, spec, dt, horizon, seed=seed + samples, nu=nu)
    chi = uniq.linearized_solve(run, u0)
    gap = uniq.coincidence_gap(run, chi)
    checks.within("coincidence_gap", gap, co_tol)

    rng = np.random.default_rng(seed + samples + 1)
    raw = noise.solenoidal_unit_noise(rng, d, n)
    raw[(slice(None),) + (0,) * d] = 0.0
    bump = Field(perturb * raw, d)
    run2 = uniq.galerkin_solve(u0 + bump, spec, dt, horizon,
                               increments=run.increments, nu=nu)
    gron = uniq.pathwise_gap(run, run2, q=gap_q, allow=allow)
    for j, t in enumerate(gron["t"]):
        ledger.append((t, "gap_sq", gron["gap_sq"][j], 0.0,
                       (1.0 + allow) * gron["majorant_sq"][j],
                       bool(gron["flag"][j])))
    checks.within("gronwall_flagged_frames", int(gron["flag"].sum()), 0)

    monitor = uniq.lps_monitor(run, math.inf, math.inf)
    ledger.append((float(horizon), "lps_sup_sup", monitor["value"], 0.0,
                   math.inf, not monitor["finite"]))
    checks.within("lps_finite", 0.0 if monitor["finite"] else 1.0, 0.0)
    io.write_csv(out / "ledger.csv",
                 ["t", "quantity", "value", "stderr", "bound", "flag"], ledger)


COMMANDS = {
    "geometry-check": cmd_geometry,
    "mikado-check": cmd_mikado,
    "antidiv-check": cmd_antidiv,
    "profiles-check": cmd_profiles,
    "noise-moments": cmd_noise,
    "residual": cmd_residual,
    "iterate": cmd_iterate,
    "uniqueness": cmd_uniqueness,
}


def parse_argv(argv: list[str]) -> tuple[str, dict[str, str], Path]:
    if not argv or argv[0] in ("-h", "--help"):
        raise ConfigError(__doc__.strip())
    command = argv[0]
    if command not in COMMANDS:
        known = ", ".join(sorted(COMMANDS))
        raise ConfigError(f"unknown subcommand {command!r}; choose one of {known}")
    raw: dict[str, str] = {}
    out_root = os.environ.get("TORUSFLOW_OUT", "torusflow-out")
    i = 1
    while i < len(argv):
        tok = argv[i]
        if tok == "--config":
            if i + 1 >= len(argv):
                raise ConfigError("--config needs a file path")
            path = Path(argv[i + 1])
            if not path.exists():
                raise ConfigError(f"config file not found: {path}")
            raw.update(parse_config_text(path.read_text(), str(path)))
            i += 2
        elif tok == "--out":
            if i + 1 >= len(argv):
                raise ConfigError("--out needs a directory")
            out_root = argv[i + 1]
            i += 2
        elif tok.startswith("--"):
            if i + 1 >= len(argv):
                raise ConfigError(f"flag {tok} needs a value")
            raw[tok[2:]] = argv[i + 1]
            i += 2
        elif "=" in tok:
            raw.update(parse_config_text(tok, f"argument {i}"))
            i += 1
        else:
            raise ConfigError(f"argument {i}: expected key=value or --key value, got {tok!r}")
    return command, raw, Path(out_root)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        command, raw, out_root = parse_argv(argv)
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    cfg = Config(raw)
    out = out_root / command
    out.mkdir(parents=True, exist_ok=True)
    checks = Checks()
    try:
        COMMANDS[command](cfg, out, checks)
        cfg.reject_unknown()
    except ConfigError as exc:
        print(exc, file=sys.stderr)
        return 2
    io.write_csv(out / "checks.csv", ["check", "value", "bound", "passed"],
                 checks.rows)
    io.write_manifest(out / "manifest.json", cfg.used,
                      seed=cfg.used.get("seed"))
    for name, value, bound, ok in checks.rows:
        print(f"{'PASS' if ok else 'FAIL'} {name} value={value:.6g} bound={bound:.6g}")
    failed = [name for name, *_, ok in checks.rows if not ok]
    print(f"{command}: {len(checks.rows)} checks, {len(failed)} failed -> {out}")
    return 0 if checks.passed else 1


if __name__ == "__main__":
    sys.exit(main())
