"""Builtin scenarios, JSON configuration, sweeps over the gain and result files."""

from __future__ import annotations

import bisect
import copy
import csv
import json
import logging
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from .certify import CertificationReport, certify, solve_reference_optimum
from .control import (ClosedLoopSystem, CostModel, OfoController, assemble_closed_loop,
                      quadratic_cost, simulate_closed_loop)
from .geometry import Box
from .integrate import IntegrationError, StepConfig, Trajectory
from .plant import PlantModel, steady_state
from .plants import gene_plant, lti_plant
from .schedule import Schedule

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = [1e-2, 1e-1, 1.0, 1e1, 1e2]
SETTLING_BAND = 1e-2  # fraction of the input box width


@dataclass
class ScenarioConfig:
    """Plain-data description of a scenario; round-trips through JSON."""

    name: str
    plant: dict
    cost: dict
    input_box: dict
    alphas: list = field(default_factory=lambda: list(DEFAULT_ALPHAS))
    schedule: dict = field(default_factory=lambda: {"breakpoints": [], "values": [{}]})
    horizon: float = 100.0
    x0: list = field(default_factory=list)
    u0: list = field(default_factory=list)
    integrator: dict = field(default_factory=dict)
    state_region: dict | None = None
    certification: dict = field(default_factory=lambda: {"density": 41, "n_random": 200, "seed": 0})
    output: dict = field(default_factory=lambda: {"directory": None, "plot": False})

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**copy.deepcopy(data))
        cfg.validate()
        return cfg

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        return cls.from_json(Path(path).read_text())

    def replace(self, **changes) -> "ScenarioConfig":
        return replace(copy.deepcopy(self), **changes)

    def validate(self) -> None:
        if self.plant.get("family") not in PLANT_FAMILIES:
            raise ValueError(f"unknown plant family {self.plant.get('family')!r}")
        if not self.alphas or any(not float(a) > 0 for a in self.alphas):
            raise ValueError("alphas must be a nonempty list of positive gains")
        if not float(self.horizon) > 0:
            raise ValueError("horizon must be positive")
        self.build_schedule()
        self.build_box()

    # -- builders --------------------------------------------------------------

    def build_box(self) -> Box:
        return Box(self.input_box["lower"], self.input_box["upper"])

    def build_plant(self, w=None) -> PlantModel:
        spec = dict(self.plant)
        family = spec.pop("family")
        region = Box(self.state_region["lower"], self.state_region["upper"]) if self.state_region else None
        plant = PLANT_FAMILIES[family](spec, self.build_box(), region)
        return plant if w is None else plant.with_disturbance(w)

    def build_cost(self, y_ref=None) -> CostModel:
        c = self.cost
        m = len(self.input_box["lower"])
        p = self.build_plant().output_dim
        cost = quadratic_cost(c["beta_u"], c["beta_y"], c.get("y_ref", 0.0), m, p)
        return cost if y_ref is None else cost.with_reference(y_ref)

    def build_schedule(self) -> Schedule:
        return Schedule(tuple(self.schedule.get("breakpoints", [])),
                        tuple(self.schedule.get("values", [{}])))

    def step_config(self) -> StepConfig:
        return StepConfig(**{**self.integrator, "max_time": float(self.horizon)})

    def initial_state(self) -> tuple[np.ndarray, np.ndarray]:
        plant = self.build_plant()
        x0 = np.asarray(self.x0, dtype=float) if self.x0 else np.zeros(plant.state_dim)
        u0 = np.asarray(self.u0, dtype=float) if self.u0 else self.build_box().midpoint
        return x0, u0

    def segments(self) -> list[tuple[float, float, dict]]:
        return self.build_schedule().segments(0.0, float(self.horizon))


def _lti_from_spec(spec: dict, box: Box, region: Box | None) -> PlantModel:
    return lti_plant(spec["A"], spec["B"], spec["C"], Bw=spec.get("Bw"), w=spec.get("w"),
                     input_box=box, state_region=region, name=spec.get("name", "lti"))


def _gene_from_spec(spec: dict, box: Box, region: Box | None) -> PlantModel:
    params = {k: spec[k] for k in ("theta1", "theta2", "gamma1", "gamma2") if k in spec}
    return gene_plant(**params, input_box=box, state_region=region)


PLANT_FAMILIES = {"lti": _lti_from_spec, "gene": _gene_from_spec}


def build_lti_scenario() -> ScenarioConfig:
    """Positive LTI plant with an unmeasured disturbance switching between +1 and -1."""
    period = 250.0
    return ScenarioConfig(
        name="lti",
        plant={"family": "lti", "A": [[-1.0, 1.0], [0.5, -1.0]], "B": [1.0, 0.0],
               "Bw": [0.9, 0.0], "C": [[0.0, 1.0]], "w": [1.0]},
        cost={"beta_u": 1.1, "beta_y": 1.0, "y_ref": [2.0]},
        input_box={"lower": [-0.7], "upper": [1.0]},
        alphas=list(DEFAULT_ALPHAS),
        schedule={"breakpoints": [period, 2 * period, 3 * period],
                  "values": [{"w": [1.0]}, {"w": [-1.0]}, {"w": [1.0]}, {"w": [-1.0]}]},
        horizon=4 * period,
        x0=[0.0, 0.0],
        u0=[0.0],
        integrator={"initial_step": 1e-3, "max_step": 1.0, "error_tolerance": 1e-6, "output_dt": 0.1},
    )


def build_gene_scenario() -> ScenarioConfig:
    """Gene expression plant tracking a piecewise-constant protein reference 0, 2, 1."""
    period = 150.0
    mu = 20.0
    return ScenarioConfig(
        name="gene",
        plant={"family": "gene", "theta1": 750.0, "theta2": 0.58, "gamma1": 4.02, "gamma2": 37.5},
        cost={"beta_u": mu / 2, "beta_y": 1.0, "y_ref": [0.0]},
        input_box={"lower": [0.0], "upper": [0.6]},
        alphas=list(DEFAULT_ALPHAS),
        schedule={"breakpoints": [period, 2 * period],
                  "values": [{"y_ref": [0.0]}, {"y_ref": [2.0]}, {"y_ref": [1.0]}]},
        horizon=3 * period,
        x0=[0.0, 0.0],
        u0=[0.0],
        state_region={"lower": [0.0, 0.0], "upper": [5.0, 5.0]},
        integrator={"initial_step": 1e-3, "max_step": 1.0, "error_tolerance": 1e-6, "output_dt": 0.1},
    )


SCENARIOS = {"lti": build_lti_scenario, "gene": build_gene_scenario}


def get_scenario(name: str) -> ScenarioConfig:
    try:
        return SCENARIOS[name]()
    except KeyError:
        raise ValueError(f"unknown scenario {name!r}; choose from {sorted(SCENARIOS)}") from None


# -- results -------------------------------------------------------------------

@dataclass
class SegmentOptimum:
    start: float
    end: float
    exogenous: dict
    u_star: np.ndarray
    x_star: np.ndarray
    y_star: np.ndarray
    residual: float


@dataclass
class AlphaRun:
    alpha: float
    trajectory: Trajectory | None
    error: str | None = None
    segment_final_u: list = field(default_factory=list)
    segment_final_y: list = field(default_factory=list)
    segment_errors: list = field(default_factory=list)
    settling_times: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def final_error(self) -> float:
        return float(self.segment_errors[-1]) if self.segment_errors else float("nan")

    @property
    def max_segment_error(self) -> float:
        return float(max(self.segment_errors)) if self.segment_errors else float("nan")


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    segments: list[SegmentOptimum]
    runs: dict[float, AlphaRun]
    certification: list[CertificationReport]

    @property
    def certified(self) -> bool:
        return bool(self.certification) and all(r.certified for r in self.certification)

    def summary(self) -> str:
        lines = [f"scenario {self.config.name}: horizon {self.config.horizon:g}, "
                 f"{len(self.segments)} segment(s)"]
        for k, s in enumerate(self.segments):
            lines.append(f"  segment {k} [{s.start:g}, {s.end:g}] {_fmt_exo(s.exogenous)}: "
                         f"u*={_fmt(s.u_star)} y*={_fmt(s.y_star)} x*={_fmt(s.x_star)}")
        if self.certification:
            lines.append(f"  certified (all segments): {self.certified}")
        lines.append("  alpha      " + "  ".join(f"err_{k:<10d}settle_{k:<6d}" for k in range(len(self.segments))))
        for a, run in sorted(self.runs.items()):
            if not run.ok:
                lines.append(f"  {a:<10g} FAILED: {run.error}")
                continue
            cells = "  ".join(f"{e:<14.3e}{t:<13.4g}" for e, t in zip(run.segment_errors, run.settling_times))
            lines.append(f"  {a:<10g} {cells}")
        return "\n".join(lines)


def _fmt(v) -> str:
    return np.array2string(np.asarray(v), precision=6, separator=",")


def _fmt_exo(exo: dict) -> str:
    return " ".join(f"{k}={_fmt(v)}" for k, v in sorted(exo.items())) or "(nominal)"


def segment_optima(config: ScenarioConfig) -> list[SegmentOptimum]:
    """Optimal steady state for each schedule segment, recomputed per segment."""
    box = config.build_box()
    out = []
    for a, b, exo in config.segments():
        plant = config.build_plant(exo.get("w"))
        cost = config.build_cost(exo.get("y_ref"))
        opt = solve_reference_optimum(cost, plant, box)
        xs = steady_state(plant, opt.u)
        out.append(SegmentOptimum(a, b, dict(exo), opt.u, xs, plant.g(xs), opt.residual))
    return out


def certify_scenario(config: ScenarioConfig) -> list[CertificationReport]:
    """One report per distinct exogenous setting of the schedule."""
    box = config.build_box()
    opts = config.certification
    x0, _ = config.initial_state()
    seen, reports = [], []
    for _, _, exo in config.segments():
        if exo in seen:
            continue
        seen.append(exo)
        plant = config.build_plant(exo.get("w"))
        cost = config.build_cost(exo.get("y_ref"))
        reports.append(certify(plant, cost, box, x0=x0, density=opts.get("density", 41),
                               n_random=opts.get("n_random", 200), seed=opts.get("seed", 0),
                               label=f"{config.name} {_fmt_exo(exo)}"))
    return reports


def build_system(config: ScenarioConfig, alpha: float) -> ClosedLoopSystem:
    plant = config.build_plant()
    controller = OfoController.for_plant(plant, alpha, config.build_box())
    return assemble_closed_loop(plant, controller, config.build_cost())


def settling_time(times, u, u_star, band: float) -> float:
    """Time after which ``||u - u*||_inf`` stays within ``band`` (inf if never)."""
    dev = np.max(np.abs(np.atleast_2d(u) - u_star), axis=1)
    outside = np.nonzero(dev > band)[0]
    if outside.size == 0:
        return 0.0
    if outside[-1] == len(dev) - 1:
        return float("inf")
    return float(times[outside[-1] + 1] - times[0])


def simulate_alpha(config: ScenarioConfig, alpha: float,
                   optima: list[SegmentOptimum] | None = None) -> AlphaRun:
    """One closed-loop run across the full schedule, with per-segment metrics."""
    optima = optima if optima is not None else segment_optima(config)
    x0, u0 = config.initial_state()
    try:
        traj = simulate_closed_loop(build_system(config, alpha), x0, u0, config.build_schedule(),
                                    config.step_config())
    except (IntegrationError, FloatingPointError, ValueError) as exc:
        log.warning("alpha=%g failed: %s", alpha, exc)
        return AlphaRun(float(alpha), None, error=f"{type(exc).__name__}: {exc}")
    run = AlphaRun(float(alpha), traj)
    band = SETTLING_BAND * float(np.max(config.build_box().width))
    u_all, y_all = traj.select("u"), traj.select("y")
    for seg in optima:
        mask = (traj.times >= seg.start) & (traj.times <= seg.end)
        end = np.nonzero(mask)[0][-1]
        run.segment_final_u.append(u_all[end].copy())
        run.segment_final_y.append(y_all[end].copy())
        run.segment_errors.append(float(np.max(np.abs(u_all[end] - seg.u_star))))
        run.settling_times.append(settling_time(traj.times[mask], u_all[mask], seg.u_star, band))
    return run


def _simulate_alpha_job(args):
    cfg_dict, alpha = args
    cfg = ScenarioConfig.from_dict(cfg_dict)
    return simulate_alpha(cfg, alpha)


def run_scenario(config: ScenarioConfig, alphas=None, run_certification: bool = True,
                 output_dir=None, plot: bool | None = None, workers: int = 1) -> ScenarioResult:
    """Certify once, then simulate every gain across the full schedule.

    A failing gain is recorded in its :class:`AlphaRun` and does not stop the
    others.  With ``output_dir`` set, per-gain CSVs, a summary and the
    certification report are written there.
    """
    config.validate()
    alphas = [float(a) for a in (alphas if alphas is not None else config.alphas)]
    if not alphas or any(not a > 0 for a in alphas):
        raise ValueError("alphas must be a nonempty list of positive gains")
    reports = certify_scenario(config) if run_certification else []
    optima = segment_optima(config)
    if workers > 1 and len(alphas) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(_simulate_alpha_job, [(config.to_dict(), a) for a in alphas]))
    else:
        runs = [simulate_alpha(config, a, optima) for a in alphas]
    result = ScenarioResult(config, optima, {r.alpha: r for r in runs}, reports)
    output_dir = output_dir if output_dir is not None else config.output.get("directory")
    if output_dir:
        write_result(result, output_dir, plot=config.output.get("plot", False) if plot is None else plot)
    return result


# -- files -----------------------------------------------------------------------

def csv_header(system_labels: list[str], m: int, p: int) -> list[str]:
    return ["t", *system_labels, *[f"ustar_{i}" for i in range(m)], *[f"ystar_{i}" for i in range(p)]]


def write_trajectory_csv(path, traj: Trajectory, config: ScenarioConfig,
                         optima: list[SegmentOptimum]) -> None:
    """Columns ``t, x_*, u_*, y_*, ustar_*, ystar_*``; one row per sample."""
    m, p = optima[0].u_star.size, optima[0].y_star.size
    ends = [s.end for s in optima]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(traj.labels, m, p))
        for t, row in zip(traj.times, traj.states):
            # left-continuous: a switch instant belongs to the segment it ends
            k = min(bisect.bisect_left(ends, t), len(optima) - 1)
            seg = optima[k]
            vals = [t, *row, *seg.u_star, *seg.y_star]
            writer.writerow([f"{v:.12g}" for v in vals])


def read_trajectory_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


def csv_name(config: ScenarioConfig, alpha: float) -> str:
    return f"{config.name}_alpha_{alpha:g}.csv"


def write_result(result: ScenarioResult, output_dir, plot: bool = False) -> Path:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for alpha, run in sorted(result.runs.items()):
        if run.trajectory is not None:
            write_trajectory_csv(out / csv_name(result.config, alpha), run.trajectory,
                                 result.config, result.segments)
    (out / f"{result.config.name}_summary.txt").write_text(result.summary() + "\n")
    if result.certification:
        text = "\n\n".join(r.summary() for r in result.certification)
        (out / f"{result.config.name}_certification.txt").write_text(text + "\n")
        (out / f"{result.config.name}_certification.json").write_text(
            json.dumps([r.to_dict() for r in result.certification], indent=2) + "\n")
    if plot:
        plot_result(result, out)
    return out


def plot_result(result: ScenarioResult, output_dir) -> Path | None:
    """Line charts of u(t) and y(t) with optimum overlays and input bounds."""
    try:
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError:
        warnings.warn("matplotlib unavailable; skipping plots")
        return None
    box = result.config.build_box()
    fig, (ax_u, ax_y) = plt.subplots(2, 1, sharex=True, figsize=(8, 6))
    for alpha, run in sorted(result.runs.items()):
        if run.trajectory is None:
            continue
        ax_u.plot(run.trajectory.times, run.trajectory.select("u")[:, 0], label=f"alpha={alpha:g}")
        ax_y.plot(run.trajectory.times, run.trajectory.select("y")[:, 0])
    for seg in result.segments:
        ax_u.hlines(seg.u_star[0], seg.start, seg.end, colors="tab:blue", linewidth=2.5, alpha=0.4)
        ax_y.hlines(seg.y_star[0], seg.start, seg.end, colors="tab:blue", linewidth=2.5, alpha=0.4)
    for bound in (box.lower[0], box.upper[0]):
        ax_u.axhline(bound, color="k", linestyle=":")
    ax_u.set_ylabel("u")
    ax_y.set_ylabel("y")
    ax_y.set_xlabel("t")
    ax_u.legend(fontsize="small")
    path = Path(output_dir) / f"{result.config.name}.png"
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def default_output_dir() -> str:
    return os.environ.get("MONOFO_OUTPUT_DIR", "ofo_output")
