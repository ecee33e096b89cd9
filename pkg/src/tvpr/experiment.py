"""Experiment pipeline: image -> masks -> noisy magnitudes -> init -> method -> reports.

Solver parameters in an :class:`ExperimentConfig` are read as if ``A``
used an unnormalized DFT (``units="unnormalized"``, the default); they are converted with
:meth:`SolverConfig.from_unnormalized`. ``sigma`` is always on the unitary
measurement scale. Leave it unset and give ``er_target_db`` to calibrate it
so that plain ER reaches that SNR.
"""
import csv
import dataclasses
import io
import json
import logging
import os
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .admm import IterationRecord, SolverConfig, run
from .baselines import ExternalDenoiser, er_run, er_start, image_from, init_procedure, raar_step
from .errors import ConfigError, TvprError
from .measurement import generate_masks, make_sampling_set, sampling_mask, simulate_measurements
from .metrics import global_phase, snr
from .phantoms import piecewise_phantom
from .pgm import load_pgm, save_pgm

log = logging.getLogger(__name__)

METHODS = ("proposed", "non_tv", "er", "raar")

#: Experiment regimes: TV weight (unnormalized units), mask count and the
#: ER SNR that defines the noise level.
PRESETS = {
    "paper-sigma10": {"lam": 2e3, "J": 2, "er_target_db": 18.88, "er_target_masks": 2},
    "paper-sigma20": {"lam": 1e4, "J": 2, "er_target_db": 12.60, "er_target_masks": 2},
    "paper-J3": {"lam": 7e3, "J": 3, "er_target_db": 12.60, "er_target_masks": 2},
}

SUMMARY_FIELDS = ("name", "method", "J", "sigma", "lam", "iterations", "snr_init", "snr_final")


class StageError(TvprError):
    """A pipeline stage failed; ``stage`` names it and ``__cause__`` holds the error."""

    def __init__(self, stage, exc):
        super().__init__(f"stage '{stage}' failed: {type(exc).__name__}: {exc}")
        self.stage = stage
        self.cause = exc


@dataclass
class ExperimentConfig:
    name: str = "run"
    image: str = "phantom"
    size: int = 128
    J: int = 2
    sigma: Optional[float] = None
    er_target_db: Optional[float] = 18.88
    er_target_masks: Optional[int] = None
    gamma_ratio: float = 1.0
    seed_masks: int = 1
    seed_noise: int = 2
    seed_gamma: int = 3
    method: str = "proposed"
    er_iters: int = 40
    baseline_iters: int = 60
    raar_phi: float = 0.85
    units: str = "unnormalized"
    lam: float = 2e3
    alpha: float = 3.0
    gamma: float = 5e5
    eta: float = 1.0
    delta: float = 1e-2
    tau: float = 1.0
    s1: float = 1.0
    s2: float = 1.0
    s3: float = 1.0
    max_outer: int = 60
    rel_tol: float = 1e-5
    dual_sign: int = 1
    shift_fraction: float = 0.01
    anchor_margin: float = 0.05
    cg_tol: float = 1e-8
    cg_maxit: int = 300
    denoiser: Optional[str] = None
    denoiser_timeout: float = 600.0
    out: str = "out"
    preset: Optional[str] = None

    def validate(self):
        if self.J < 1:
            raise ConfigError("J must be at least 1")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.units not in ("unnormalized", "unitary"):
            raise ConfigError("units must be 'unnormalized' or 'unitary'")
        if self.image != "phantom" and not os.path.isfile(self.image):
            raise ConfigError(f"image file not found: {self.image}")
        if self.sigma is None and self.er_target_db is None:
            raise ConfigError("give either sigma or er_target_db")
        if self.sigma is not None and self.sigma < 0:
            raise ConfigError("sigma must be nonnegative")
        if not 0 < self.gamma_ratio <= 1:
            raise ConfigError("gamma_ratio must lie in (0, 1]")
        self.solver_config(16)  # raises ConfigError on bad solver scalars
        return self

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        preset = d.get("preset")
        base = {}
        if preset is not None:
            if preset not in PRESETS:
                raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            base.update(PRESETS[preset])
        base.update(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(base) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**base)

    def to_dict(self):
        return dataclasses.asdict(self)

    def solver_config(self, n):
        kw = dict(lam=0.0 if self.method == "non_tv" else self.lam, alpha=self.alpha,
                  gamma=self.gamma, eta=self.eta, delta=self.delta, s1=self.s1, s2=self.s2,
                  s3=self.s3)
        rest = dict(tau=self.tau, max_outer=self.max_outer, rel_tol=self.rel_tol,
                    dual_sign=self.dual_sign, shift_fraction=self.shift_fraction,
                    anchor_margin=self.anchor_margin, cg_tol=self.cg_tol, cg_maxit=self.cg_maxit)
        if self.units == "unnormalized":
            return SolverConfig.from_unnormalized(n, **kw, **rest)
        return SolverConfig(**kw, **rest)


@dataclass
class Report:
    summary: dict
    u: np.ndarray
    diagnostics: list = field(default_factory=list)
    wall_time: float = 0.0
    paths: dict = field(default_factory=dict)


def load_truth(cfg):
    if cfg.image == "phantom":
        return piecewise_phantom(cfg.size)
    return load_pgm(cfg.image)


def er_baseline_snr(op, f, sigma, seed_noise, iters):
    g = simulate_measurements(op, f, sigma, seed_noise)
    u, _ = er_run(op, g, er_start(op, g), iters, real_valued=True, nonnegative=True)
    return snr(u, f)


def calibrate_sigma(op, f, target_db, seed_noise, iters=60, tol_db=0.05, max_steps=40):
    """Noise level at which plain ER reaches ``target_db`` SNR, by bisection in ``log(sigma)``.

    The search is bracketed between a tiny fraction and several times the
    mean measurement magnitude.
    """
    scale = float(np.mean(np.abs(op.forward(f))))
    lo, hi = np.log(1e-4 * scale), np.log(3.0 * scale)
    mid = 0.5 * (lo + hi)
    for _ in range(max_steps):
        mid = 0.5 * (lo + hi)
        s = er_baseline_snr(op, f, float(np.exp(mid)), seed_noise, iters)
        if abs(s - target_db) <= tol_db:
            break
        if s > target_db:
            lo = mid
        else:
            hi = mid
    return float(np.exp(mid))


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except TvprError as exc:
        if isinstance(exc, StageError):
            raise
        raise StageError(name, exc) from exc
    except (OSError, ValueError, ArithmeticError) as exc:
        raise StageError(name, exc) from exc


def _baseline_trace(op, g, f, cfg, sampling):
    z = er_start(op, g)
    records = []
    prev = image_from(op, z, True, True)
    for k in range(1, cfg.baseline_iters + 1):
        if cfg.method == "er":
            z = er_run(op, g, z, 1, True, True, sampling)[1]
        else:
            z = raar_step(op, g, z, cfg.raar_phi, True, True, sampling)
        u = image_from(op, z, True, True)
        res = float(np.linalg.norm(np.where(sampling, np.abs(op.forward(u)) - g, 0.0)))
        records.append(IterationRecord(
            iteration=k, energy_finite_part=float("nan"), violation_count=0,
            primal_res_z=res, primal_res_p=float("nan"),
            rel_change=float(np.linalg.norm(u - prev) / max(np.linalg.norm(prev), 1e-300)),
            snr=snr(u, f) if np.any(u) else float("nan")))
        prev = u
    return prev, records


def diagnostics_csv(records):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(IterationRecord.CSV_FIELDS)
    for r in records:
        w.writerow(r.csv_row())
    return buf.getvalue()


def summary_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_FIELDS)
    for row in rows:
        w.writerow([_fmt(row[k]) for k in SUMMARY_FIELDS])
    return buf.getvalue()


def _fmt(x):
    if isinstance(x, float):
        return "nan" if not np.isfinite(x) else f"{x:.6g}"
    return str(x)


def run_experiment(cfg, write=True):
    """Run one configured experiment and (optionally) write its outputs under ``cfg.out``.

    Files: ``<name>.pgm`` (reconstruction), ``<name>_diagnostics.csv``,
    ``<name>_summary.csv`` and ``<name>_timing.json``. The CSV files depend
    only on the config.
    """
    _stage("config", cfg.validate)
    t0 = time.perf_counter()
    f = _stage("load_image", load_truth, cfg)
    shape = f.shape
    op = _stage("masks", generate_masks, cfg.seed_masks, cfg.J, shape)
    sigma = cfg.sigma
    if sigma is None:
        cal_J = cfg.er_target_masks or cfg.J
        cal_op = op if cal_J == cfg.J else _stage("masks", generate_masks, cfg.seed_masks, cal_J, shape)
        sigma = _stage("calibrate_sigma", calibrate_sigma, cal_op, f, cfg.er_target_db,
                       cfg.seed_noise, cfg.baseline_iters)
        log.info("calibrated sigma=%.6g for ER at %.2f dB", sigma, cfg.er_target_db)
    g = _stage("measurements", simulate_measurements, op, f, sigma, cfg.seed_noise)
    idx = _stage("sampling_set", make_sampling_set, g.size, cfg.gamma_ratio, cfg.seed_gamma)
    sampling = sampling_mask(idx, cfg.J, shape)
    sampling_arg = None if sampling.all() else sampling

    if cfg.method in ("proposed", "non_tv"):
        denoiser = ExternalDenoiser(cfg.denoiser, cfg.denoiser_timeout) if cfg.denoiser else None
        u_hat = _stage("init", init_procedure, op, g, cfg.er_iters, denoiser, sampling=sampling_arg)
        snr_init = snr(u_hat, f)
        scfg = _stage("config", cfg.solver_config, f.size)
        result = _stage("solve", run, op, g, sampling_arg, u_hat, scfg, truth=f)
        u, records = result.u, result.diagnostics
    else:
        snr_init = snr(image_from(op, er_start(op, g), True, True), f)
        u, records = _stage("solve", _baseline_trace, op, g, f, cfg, sampling)
    wall = time.perf_counter() - t0

    summary = {
        "name": cfg.name, "method": cfg.method, "J": cfg.J, "sigma": float(sigma),
        "lam": 0.0 if cfg.method == "non_tv" else (float(cfg.lam) if cfg.method == "proposed" else float("nan")),
        "iterations": len(records), "snr_init": float(snr_init), "snr_final": float(snr(u, f)),
    }
    report = Report(summary, u, records, wall)
    if write:
        os.makedirs(cfg.out, exist_ok=True)
        base = os.path.join(cfg.out, cfg.name)
        paths = {"image": base + ".pgm", "diagnostics": base + "_diagnostics.csv",
                 "summary": base + "_summary.csv", "timing": base + "_timing.json"}
        save_pgm(u * np.conj(global_phase(u, f)), paths["image"])
        with open(paths["diagnostics"], "w", newline="") as fh:
            fh.write(diagnostics_csv(records))
        with open(paths["summary"], "w", newline="") as fh:
            fh.write(summary_csv([summary]))
        with open(paths["timing"], "w") as fh:
            json.dump({"name": cfg.name, "wall_time_s": wall}, fh)
        report.paths = paths
    return report


def comparison_csv(summaries):
    """Table-style join: one row per (J, sigma) regime, one column per method."""
    regimes = {}
    for s in summaries:
        key = (s["J"], float(s["sigma"]))
        row = regimes.setdefault(key, {"initialization": float("nan")})
        row[s["method"]] = s["snr_final"]
        if s["method"] == "proposed":
            row["initialization"] = s["snr_init"]
    cols = ["er", "raar", "non_tv", "initialization", "proposed"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["J", "sigma"] + cols)
    for (J, sigma) in sorted(regimes):
        row = regimes[(J, sigma)]
        w.writerow([J, _fmt(sigma)] + [_fmt(float(row.get(c, float("nan")))) for c in cols])
    return buf.getvalue()
