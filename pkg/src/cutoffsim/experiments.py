"""Experiment orchestration: configs, runners, CSV/plot emission, manifest.

Config files use INI syntax with three sections (all keys optional
unless a command needs them)::

    [model]
    family = EhrenfestUrn      ; any Family value
    beta = 0.5                 ; family parameters by name
    q = 0.75
    r = 0.7
    l = 125
    m = 5
    omega = 0.2
    eps = 0.4
    up = 0.5
    down = 0.1666666666666667

    [grid]
    n = 250 500 1000 2000      ; strictly increasing
    eps = 0.9 0.75 0.5 0.25 0.1  ; strictly decreasing in (0,1)
    theta = 1 2 4 8 16

    [run]
    kind = independent         ; coupling flavour (independent|sandwich|cylinder)
    replicas = 10000
    seed = 7
    out = results
    stride = 1
    max_steps = 100000000
    max_states = 200000
    a_form = nlogn             ; or npow:<exponent>
    delta_rule = n             ; or n^<exponent>

Every run writes ``manifest.txt`` with one ``path,sha256,rows`` line per
emitted file; reruns of the same config are byte-identical.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import coupling as cpl
from . import nested
from .errors import ParameterError, UnsupportedFamilyError
from .evolution import MixingProfile, TvCurve, mixing_profile, tv_curve_until
from .fitting import fit_cutoff
from .hitting import (bd_hitting_moments, cantelli_check, linear_solve_hitting,
                      mc_hitting, strong_drift_diagnostic)
from .models import (BirthDeathModel, ChainModel, Family, ModelSpec,
                     build_model, delta_distribution)

DEFAULT_EPS_GRID = (0.9, 0.75, 0.5, 0.25, 0.1)
DEFAULT_THETA_GRID = (1.0, 2.0, 4.0, 8.0, 16.0)
FIGURE1_N_GRID = (50, 100, 200, 400)


@dataclass
class ExperimentConfig:
    family: Optional[Family] = None
    params: Dict[str, float] = field(default_factory=dict)
    n_grid: Sequence[int] = ()
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID
    theta_grid: Sequence[float] = DEFAULT_THETA_GRID
    kind: str = "independent"
    replicas: int = 1000
    seed: int = 0
    out: str = "results"
    stride: int = 1
    max_steps: int = 100_000_000
    max_states: int = 500_000
    a_form: str = "nlogn"
    delta_rule: str = "n"

    def __post_init__(self):
        ns = list(self.n_grid)
        if ns != sorted(set(ns)):
            raise ParameterError("n grid must be strictly increasing")
        eps = list(self.eps_grid)
        if any(not 0 < e < 1 for e in eps) or eps != sorted(set(eps), reverse=True):
            raise ParameterError("eps grid must be strictly decreasing in (0,1)")

    def model_spec(self, n: int) -> ModelSpec:
        if self.family is None:
            raise ParameterError("config lacks a [model] family")
        return ModelSpec(self.family, n, dict(self.params))

    def build(self, n: int) -> ChainModel:
        model = build_model(self.model_spec(n))
        if model.state_count > self.max_states:
            raise ParameterError(
                f"{model.model_id}: {model.state_count} states exceed the "
                f"max_states budget {self.max_states}")
        return model


_MODEL_PARAM_KEYS = ("beta", "q", "r", "omega", "l", "m", "eps", "up", "down")


def parse_config(path) -> ExperimentConfig:
    """Read an INI experiment config; see the module docstring."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    read = cp.read(path)
    if not read:
        raise FileNotFoundError(path)
    kw = {}
    if cp.has_section("model"):
        fam = cp.get("model", "family", fallback=None)
        if fam is not None:
            kw["family"] = Family(fam)
        params = {}
        for key in _MODEL_PARAM_KEYS:
            if cp.has_option("model", key):
                val = cp.getfloat("model", key)
                params[key] = int(val) if key in ("l", "m") else val
        kw["params"] = params
    if cp.has_section("grid"):
        if cp.has_option("grid", "n"):
            kw["n_grid"] = [int(v) for v in cp.get("grid", "n").split()]
        if cp.has_option("grid", "eps"):
            kw["eps_grid"] = [float(v) for v in cp.get("grid", "eps").split()]
        if cp.has_option("grid", "theta"):
            kw["theta_grid"] = [float(v) for v in cp.get("grid", "theta").split()]
    if cp.has_section("run"):
        run = cp["run"]
        for key, conv in (("kind", str), ("replicas", int), ("seed", int),
                          ("out", str), ("stride", int), ("max_steps", int),
                          ("max_states", int), ("a_form", str),
                          ("delta_rule", str)):
            if key in run:
                kw[key] = conv(run[key])
    return ExperimentConfig(**kw)


def _delta_rule_fn(rule: str) -> Callable[[int], float]:
    rule = rule.strip()
    if rule == "n":
        return lambda n: float(n)
    if rule.startswith("n^"):
        expo = float(rule[2:])
        return lambda n: float(n) ** expo
    raise ParameterError(f"unknown delta rule {rule!r} (use 'n' or 'n^<x>')")


def _a_form(spec: str):
    if spec == "nlogn":
        return "nlogn"
    if spec.startswith("npow:"):
        return ("npow", float(spec.split(":", 1)[1]))
    raise ParameterError(f"unknown a_form {spec!r} (use 'nlogn' or 'npow:<x>')")


class OutputSet:
    """Collects emitted files and writes the digest manifest."""

    def __init__(self, outdir):
        self.outdir = Path(outdir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        self.rows: Dict[str, int] = {}

    def path(self, name: str) -> Path:
        return self.outdir / name

    def add(self, name: str, rows: int) -> None:
        self.rows[name] = rows

    def write_text(self, name: str, text: str, rows: int) -> None:
        with open(self.path(name), "w", newline="\n") as fh:
            fh.write(text)
        self.add(name, rows)

    def finish(self) -> Path:
        lines = []
        for name in sorted(self.rows):
            digest = hashlib.sha256(self.path(name).read_bytes()).hexdigest()
            lines.append(f"{name},{digest},{self.rows[name]}")
        manifest = self.path("manifest.txt")
        with open(manifest, "w", newline="\n") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
        return manifest


def _default_init(model: ChainModel) -> np.ndarray:
    return delta_distribution(model.state_count, model.default_start())


def _curves_and_profiles(cfg: ExperimentConfig):
    curves, profiles = [], []
    eps_min = min(cfg.eps_grid)
    for n in cfg.n_grid:
        model = cfg.build(n)
        curve = tv_curve_until(model, _default_init(model), eps_min,
                               stride=cfg.stride, max_steps=cfg.max_steps)
        curves.append(curve)
        profiles.append(mixing_profile(curve, cfg.eps_grid))
    return curves, profiles


def _write_profiles(out: OutputSet, name: str, profiles: List[MixingProfile]):
    lines = ["model,n,eps,t"]
    for p in profiles:
        for eps, t in zip(p.eps_grid, p.t_eps):
            lines.append(f"{p.model_id},{p.n},{eps:.17g},{t}")
    out.write_text(name, "\n".join(lines) + "\n", len(lines) - 1)


def run_tv_curves(cfg: ExperimentConfig) -> Path:
    out = OutputSet(cfg.out)
    curves, profiles = _curves_and_profiles(cfg)
    for curve in curves:
        name = f"curve_{curve.model_id}.csv"
        out.add(name, curve.to_csv(out.path(name)))
    if profiles:
        _write_profiles(out, "profiles.csv", profiles)
    return out.finish()


def run_hitting(cfg: ExperimentConfig) -> Path:
    """Closed-form vs oracle vs Monte Carlo hitting of the core target.

    The target is the innermost nested set A_1 for families that define
    one and the absorbing bottom state otherwise.
    """
    out = OutputSet(cfg.out)
    summary = ["model,n,mean_closed,var_closed,mean_solve,var_solve,"
               "mc_mean,mc_ci_lo,mc_ci_hi"]
    drift_rows = ["n,Kq,Kn,descent_mean,ratio"]
    cantelli_rows = ["n,theta,tail,bound,pass"]
    for n in cfg.n_grid:
        model = cfg.build(n)
        mask, moments = _core_target(model)
        sample = mc_hitting(model, model.default_start(), mask,
                            cfg.replicas, cfg.seed)
        name = f"hitting_{model.model_id}.csv"
        out.add(name, sample.to_csv(out.path(name)))
        s = sample.summary()
        if model.state_count <= 20_000:
            ls = linear_solve_hitting(model, model.default_start(), mask)
            solve_mean, solve_var = ls.mean, ls.variance
        else:
            solve_mean = solve_var = math.nan
        summary.append(
            f"{model.model_id},{n},{moments.mean:.17g},{moments.variance:.17g},"
            f"{solve_mean:.17g},{solve_var:.17g},{s['mean']:.17g},"
            f"{s['ci99'][0]:.17g},{s['ci99'][1]:.17g}")
        if isinstance(model, BirthDeathModel):
            drift_rows.append(strong_drift_diagnostic(model).csv_row(n))
        for row in cantelli_check(sample, cfg.theta_grid):
            cantelli_rows.append(f"{n},{row['theta']:.17g},{row['tail']:.17g},"
                                 f"{row['bound']:.17g},{int(row['pass'])}")
    out.write_text("hitting_summary.csv", "\n".join(summary) + "\n",
                   len(summary) - 1)
    out.write_text("drift.csv", "\n".join(drift_rows) + "\n", len(drift_rows) - 1)
    out.write_text("cantelli.csv", "\n".join(cantelli_rows) + "\n",
                   len(cantelli_rows) - 1)
    return out.finish()


def _core_target(model: ChainModel):
    """Mask and closed-form moments of the family's core hitting target."""
    try:
        fam = nested.family_for(model)
        mask = fam.mask(1.0)
        moments = nested.zeta_moments(model, fam, 1.0)
        return mask, moments
    except UnsupportedFamilyError:
        if isinstance(model, BirthDeathModel):
            mask = np.zeros(model.state_count, dtype=bool)
            mask[0] = True
            return mask, bd_hitting_moments(model, model.default_start(), 0)
        raise


def run_coupling(cfg: ExperimentConfig) -> Path:
    out = OutputSet(cfg.out)
    tail_rows = ["n,theta,tail,delta_n"]
    for n in cfg.n_grid:
        model = cfg.build(n)
        stats = _run_one_coupling(cfg, model)
        name = f"coupling_{model.model_id}.csv"
        out.add(name, stats.to_csv(out.path(name)))
        for row in cpl.coalescence_tail(stats, cfg.theta_grid):
            tail_rows.append(f"{n},{row['theta']:.17g},{row['tail']:.17g},"
                             f"{stats.delta_n:.17g}")
    out.write_text("tails.csv", "\n".join(tail_rows) + "\n", len(tail_rows) - 1)
    return out.finish()


def _run_one_coupling(cfg: ExperimentConfig, model: ChainModel):
    if cfg.kind == "independent":
        z0 = _independent_start(model)
        return cpl.independent_coupling(model, z0, cfg.replicas, cfg.seed,
                                        step_cap=cfg.max_steps)
    if cfg.kind == "sandwich":
        theta = max(cfg.theta_grid)
        return cpl.sandwich_coupling(model, theta, cfg.replicas, cfg.seed,
                                     step_cap=cfg.max_steps)
    if cfg.kind == "cylinder":
        return cpl.cylinder_coupling(model, 0, cfg.replicas, cfg.seed,
                                     step_cap=cfg.max_steps)
    raise ParameterError(f"unknown coupling kind {cfg.kind!r}")


def _independent_start(model: ChainModel) -> int:
    if model.spec.family is Family.PARTIAL_DIFFUSIVE:
        return model.diffusive_cap
    if isinstance(model, BirthDeathModel):
        return model.state_count // 2
    raise UnsupportedFamilyError("independent coupling needs a birth-death model")


def run_hypotheses(cfg: ExperimentConfig) -> Path:
    out = OutputSet(cfg.out)
    report = nested.hypothesis_report(
        cfg.build, cfg.n_grid, _delta_rule_fn(cfg.delta_rule),
        theta_grid=cfg.theta_grid)
    out.add("hypotheses.csv", report.to_csv(out.path("hypotheses.csv")))
    return out.finish()


def run_cutoff_fit(cfg: ExperimentConfig) -> Path:
    out = OutputSet(cfg.out)
    curves, profiles = _curves_and_profiles(cfg)
    for curve in curves:
        name = f"curve_{curve.model_id}.csv"
        out.add(name, curve.to_csv(out.path(name)))
    _write_profiles(out, "profiles.csv", profiles)
    fit = fit_cutoff(profiles, _a_form(cfg.a_form))
    lines = ["field,value",
             f"a_form,{fit.a_form}",
             f"a_constant,{fit.a_constant:.17g}",
             f"b_exponent,{fit.b_exponent:.17g}",
             f"residual,{fit.residual:.17g}",
             f"cutoff_consistent,{int(fit.consistent)}"]
    for n, w in fit.window_over_time:
        lines.append(f"window_over_time_n{n},{w:.17g}")
    out.write_text("cutoff_fit.csv", "\n".join(lines) + "\n", len(lines) - 1)
    return out.finish()


def emit_plot_data(curves: Sequence[TvCurve], out: OutputSet,
                   profiles: Optional[Sequence[MixingProfile]] = None) -> None:
    """Whitespace `t tv` tables per curve, an index file, and (with
    profiles) matching tables on the t/t(1/2) axis."""
    if not curves:
        raise ParameterError("no curves to emit")
    index = []
    half = {p.n: p.t_at(0.5) for p in profiles} if profiles else {}
    for curve in curves:
        name = f"{curve.model_id}.dat"
        lines = [f"{t} {v:.17g}" for t, v in zip(curve.times, curve.tv)]
        out.write_text(name, "\n".join(lines) + "\n", len(lines))
        index.append(f"{name} {curve.model_id} {curve.n}")
        if curve.n in half and half[curve.n] > 0:
            norm = f"{curve.model_id}.norm.dat"
            lines = [f"{t / half[curve.n]:.17g} {v:.17g}"
                     for t, v in zip(curve.times, curve.tv)]
            out.write_text(norm, "\n".join(lines) + "\n", len(lines))
            index.append(f"{norm} {curve.model_id} {curve.n}")
    out.write_text("index.txt", "\n".join(index) + "\n", len(index))


def run_figure1(cfg: ExperimentConfig) -> Path:
    """The biased-segment mixing curves on a doubling n grid."""
    out = OutputSet(cfg.out)
    cfg = ExperimentConfig(
        family=cfg.family or Family.BIASED_SEGMENT,
        params=cfg.params,
        n_grid=cfg.n_grid or FIGURE1_N_GRID,
        eps_grid=cfg.eps_grid, theta_grid=cfg.theta_grid, seed=cfg.seed,
        out=cfg.out, stride=cfg.stride, max_steps=cfg.max_steps,
        max_states=cfg.max_states)
    curves, profiles = _curves_and_profiles(cfg)
    emit_plot_data(curves, out, profiles)
    _write_profiles(out, "profiles.csv", profiles)
    windows = [(p.n, p.window(0.25, 0.75) / p.t_at(0.5)) for p in profiles]
    lines = ["n,window_over_time"]
    lines += [f"{n},{w:.17g}" for n, w in windows]
    out.write_text("window_check.csv", "\n".join(lines) + "\n", len(lines) - 1)
    return out.finish()


RUNNERS = {
    "tv-curve": run_tv_curves,
    "hitting": run_hitting,
    "coupling": run_coupling,
    "hypotheses": run_hypotheses,
    "cutoff-fit": run_cutoff_fit,
    "reproduce-figure1": run_figure1,
}


def run_experiment(command: str, cfg: ExperimentConfig) -> Path:
    """Dispatch one experiment; returns the manifest path."""
    try:
        runner = RUNNERS[command]
    except KeyError:
        raise ParameterError(f"unknown experiment {command!r}") from None
    return runner(cfg)
