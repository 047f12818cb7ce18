"""Seeded multi-run, multi-stage DE campaigns.

A campaign runs ``runs`` independent seeds; run ``k`` uses base seed
``seed + k`` and stage ``s`` of that run uses
``SeedSequence([seed + k, s]).generate_state(1)[0]``. Each stage is a full
:func:`mechsyn.de.evolve` call. A stage with a threshold stops at the end
of the first generation whose best fitness meets it. Later stages start
from the previous stage's best individual when it lies in their box.
"""
from __future__ import annotations

import configparser
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Optional, Union

import numpy as np

from mechsyn import kernels
from mechsyn.de import Bounds, DEConfig, evolve
from mechsyn.errors import ConfigurationError
from mechsyn.problems import Problem, resolve_problem
from mechsyn.repair import compose, make_elitist_init, make_sort_init

log = logging.getLogger(__name__)

BOUND_MODES = ("default", "refined", "auto")
DEFAULT_STAGE1_GENS = 3000


@dataclass
class StageSpec:
    """One optimization stage.

    ``bounds`` is ``"default"`` (the problem's search box), ``"refined"``
    (its hand-picked second-stage box), ``"auto"`` (a box around the previous
    stage's best, see :func:`refine_bounds`) or an explicit :class:`Bounds`.
    """

    g_max: int
    bounds: Union[str, Bounds] = "default"
    elitist_cg: bool = False
    threshold: Optional[float] = None
    auto_fraction: float = 0.2
    auto_min_half: float = 0.1

    def __post_init__(self):
        if int(self.g_max) != self.g_max or self.g_max < 0:
            raise ConfigurationError("stage generations must be a non-negative integer")
        if isinstance(self.bounds, str) and self.bounds not in BOUND_MODES:
            raise ConfigurationError(f"stage bounds must be one of {BOUND_MODES} or explicit")
        if self.threshold is not None and not self.threshold >= 0:
            raise ConfigurationError("threshold must be non-negative")

    def to_dict(self) -> dict:
        d = asdict(self) if not isinstance(self.bounds, Bounds) else {
            **{k: v for k, v in asdict(replace(self, bounds="default")).items() if k != "bounds"},
            "bounds": {"lower": self.bounds.lower.tolist(), "upper": self.bounds.upper.tolist()},
        }
        return d


@dataclass
class CampaignConfig:
    problem: str
    de: DEConfig
    stages: list[StageSpec]
    runs: int = 1
    output_dir: Optional[Path] = None
    workers: int = 1
    problem_options: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.stages:
            raise ConfigurationError("a campaign needs at least one stage")
        if int(self.runs) != self.runs or self.runs < 1:
            raise ConfigurationError("runs must be a positive integer")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "problem_options": dict(self.problem_options),
            "de": asdict(self.de),
            "stages": [s.to_dict() for s in self.stages],
            "runs": self.runs,
            "workers": self.workers,
        }


@dataclass
class RunRecord:
    seed: int
    stage: int
    best_x: np.ndarray
    best_fob: float
    first_hit: Optional[int]
    generations: int
    evaluations: int
    wall_time: float
    threshold: Optional[float] = None
    bounds: Optional[Bounds] = None
    history: list = field(default_factory=list, repr=False)
    stage_seed: int = 0


def stage_seed(run_seed: int, stage: int) -> int:
    return int(np.random.SeedSequence([run_seed, stage]).generate_state(1)[0])


def refine_bounds(best, outer: Bounds, fraction: float = 0.2, min_half: float = 0.1) -> Bounds:
    """Box ``best +- max(min_half, fraction * outer width)`` clipped to ``outer``."""
    best = np.asarray(best, dtype=np.float64)
    half = np.maximum(min_half, fraction * outer.width)
    lower = np.clip(best - half, outer.lower, outer.upper)
    upper = np.clip(best + half, outer.lower, outer.upper)
    return Bounds(np.minimum(lower, upper), np.maximum(lower, upper))


def default_stages(problem: Problem, gens: int, stage1_gens: int = DEFAULT_STAGE1_GENS) -> list[StageSpec]:
    """Two stages for problems with a Grashof repair, otherwise one."""
    if problem.cg is None:
        return [StageSpec(gens)]
    second = "refined" if problem.refined_bounds is not None else "auto"
    return [
        StageSpec(stage1_gens, "default", elitist_cg=True, threshold=problem.stage1_threshold),
        StageSpec(gens, second),
    ]


def _first_hit(history, threshold):
    if threshold is None:
        return None
    for g, best in history:
        if best <= threshold:
            return g
    return None


def _stage_bounds(stage: StageSpec, problem: Problem, prev_best, prev_bounds) -> Bounds:
    if isinstance(stage.bounds, Bounds):
        return stage.bounds
    if stage.bounds == "default":
        return problem.bounds
    if stage.bounds == "refined":
        if problem.refined_bounds is None:
            raise ConfigurationError(f"{problem.name} has no refined search box")
        return problem.refined_bounds
    if prev_best is None:
        raise ConfigurationError("'auto' bounds need a previous stage")
    return refine_bounds(prev_best, prev_bounds, stage.auto_fraction, stage.auto_min_half)


def run_single(problem: Problem, config: CampaignConfig, seed: int) -> list[RunRecord]:
    """All stages of one seeded run."""
    records = []
    prev_best, prev_bounds = None, problem.bounds
    for s, stage in enumerate(config.stages, 1):
        bounds = _stage_bounds(stage, problem, prev_best, prev_bounds)
        if bounds.dim != problem.layout.dim:
            raise ConfigurationError(f"stage {s} bounds have {bounds.dim} components, expected {problem.layout.dim}")
        elitist = None
        if stage.elitist_cg:
            if problem.cg is None:
                raise ConfigurationError(f"{problem.name} has no Grashof repair configuration")
            elitist = make_elitist_init(bounds, problem.cg.link_indices, problem.cg.L, problem.cg.crank_position)
        sorter = make_sort_init(problem.sort_indices) if problem.sort_indices else None
        init = compose(sorter, elitist)
        initial = None
        if prev_best is not None and bounds.contains(prev_best):
            initial = prev_best[None, :]

        sseed = stage_seed(seed, s)
        de = replace(config.de, seed=sseed, g_max=stage.g_max)
        threshold = stage.threshold
        callback = None
        if threshold is not None:
            def callback(g, best, _t=threshold):
                return best <= _t

        result = evolve(
            problem.objective,
            bounds,
            de,
            init_transform=init,
            crossover_repair=problem.sort_indices,
            initial=initial,
            callback=callback,
            workers=config.workers,
        )
        rec = RunRecord(
            seed=seed,
            stage=s,
            best_x=result.best.x,
            best_fob=result.best.fitness,
            first_hit=_first_hit(result.history, threshold),
            generations=result.generations,
            evaluations=result.evaluations,
            wall_time=result.elapsed,
            threshold=threshold,
            bounds=bounds,
            history=result.history,
            stage_seed=sseed,
        )
        log.info("seed %d stage %d: fob=%.6g after %d generations (%.1f s)",
                 seed, s, rec.best_fob, rec.generations, rec.wall_time)
        records.append(rec)
        prev_best, prev_bounds = result.best.x, bounds
    return records


def run_campaign(config: CampaignConfig, problem: Optional[Problem] = None) -> list[RunRecord]:
    """Execute every run and stage; results are also written if ``output_dir`` is set."""
    if problem is None:
        problem = resolve_problem(config.problem, **config.problem_options)
    records = []
    for k in range(config.runs):
        records.extend(run_single(problem, config, config.de.seed + k))
    if config.output_dir is not None:
        from mechsyn.export import export_results

        export_results(records, config.output_dir, problem, config)
    return records


def final_records(records: list[RunRecord]) -> list[RunRecord]:
    """Last-stage record of every run."""
    last = {}
    for r in records:
        if r.seed not in last or r.stage > last[r.seed].stage:
            last[r.seed] = r
    return [last[s] for s in sorted(last)]


# ---------------------------------------------------------------------------
# configuration files

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def _bool(text: str, key: str) -> bool:
    t = text.strip().lower()
    if t in _TRUE:
        return True
    if t in _FALSE:
        return False
    raise ConfigurationError(f"{key}: expected a boolean, got {text!r}")


def read_config_file(path) -> configparser.ConfigParser:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    path = Path(path)
    try:
        with path.open() as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}") from None
    return parser


CAMPAIGN_KEYS = {
    "problem", "seed", "runs", "pop", "gens", "cr", "f", "out", "workers",
    "fc2", "include_function_xy", "stage1_gens", "stage2_auto",
}
STAGE_KEYS = {"gens", "bounds", "lower", "upper", "elitist_cg", "threshold", "auto_fraction", "auto_min_half"}


def build_config(values: dict, stage_sections: Optional[dict] = None) -> CampaignConfig:
    """Assemble a :class:`CampaignConfig` from flat ``[campaign]`` values.

    ``stage_sections`` maps ``"stage1"``, ``"stage2"``, ... to their key/value
    dicts; without them the problem's default stage plan is used.
    """
    unknown = set(values) - CAMPAIGN_KEYS
    if unknown:
        raise ConfigurationError(f"unknown campaign keys: {', '.join(sorted(unknown))}")
    if "problem" not in values:
        raise ConfigurationError("no problem given")
    try:
        options = {}
        if values.get("fc2") not in (None, "", "exact"):
            options["fc2"] = float(values["fc2"])
        if "include_function_xy" in values:
            options["include_function_xy"] = _bool(str(values["include_function_xy"]), "include_function_xy")
        f = str(values.get("f", "dither")).strip()
        de = DEConfig(
            m=int(values.get("pop", 50)),
            g_max=int(values.get("gens", 1000)),
            cr=float(values.get("cr", 0.3)),
            f="dither" if f == "dither" else float(f),
            seed=int(values.get("seed", 0)),
        )
        problem = resolve_problem(str(values["problem"]), **options)
        if stage_sections:
            stages = [_stage_from_section(name, stage_sections[name]) for name in sorted(
                stage_sections, key=lambda n: int(n[5:]))]
        else:
            stages = default_stages(problem, de.g_max, int(values.get("stage1_gens", DEFAULT_STAGE1_GENS)))
        if values.get("stage2_auto") is not None and _bool(str(values["stage2_auto"]), "stage2_auto"):
            if len(stages) < 2:
                raise ConfigurationError("stage2_auto needs a two-stage plan")
            stages[1].bounds = "auto"
        out = values.get("out")
        return CampaignConfig(
            problem=str(values["problem"]),
            de=de,
            stages=stages,
            runs=int(values.get("runs", 1)),
            output_dir=Path(out) if out else None,
            workers=int(values.get("workers", 1)),
            problem_options=options,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigurationError):
            raise
        raise ConfigurationError(str(exc)) from None


def _stage_from_section(name: str, sec: dict) -> StageSpec:
    unknown = set(sec) - STAGE_KEYS
    if unknown:
        raise ConfigurationError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
    if "gens" not in sec:
        raise ConfigurationError(f"[{name}] needs gens")
    if "lower" in sec or "upper" in sec:
        if not ("lower" in sec and "upper" in sec):
            raise ConfigurationError(f"[{name}] needs both lower and upper")
        bounds = Bounds(_floats(sec["lower"]), _floats(sec["upper"]))
    else:
        bounds = sec.get("bounds", "default").strip()
    return StageSpec(
        g_max=int(sec["gens"]),
        bounds=bounds,
        elitist_cg=_bool(sec.get("elitist_cg", "false"), "elitist_cg"),
        threshold=float(sec["threshold"]) if sec.get("threshold") else None,
        auto_fraction=float(sec.get("auto_fraction", 0.2)),
        auto_min_half=float(sec.get("auto_min_half", 0.1)),
    )


def config_from_file(path, overrides: Optional[dict] = None) -> CampaignConfig:
    """Read an INI-style config; ``overrides`` (e.g. CLI flags) win over the file."""
    parser = read_config_file(path)
    values = dict(parser["campaign"]) if parser.has_section("campaign") else {}
    for s in parser.sections():
        if s != "campaign" and not (s.startswith("stage") and s[5:].isdigit()):
            raise ConfigurationError(f"{path}: unknown section [{s}]")
    stages = {s: dict(parser[s]) for s in parser.sections() if s.startswith("stage")}
    values.update({k: v for k, v in (overrides or {}).items() if v is not None})
    if stages and "gens" in (overrides or {}) and overrides["gens"] is not None:
        last = max(stages, key=lambda n: int(n[5:]))
        stages[last]["gens"] = str(overrides["gens"])
    return build_config(values, stages or None)


def backend() -> str:
    return kernels.BACKEND
