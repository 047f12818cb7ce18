import json
import math

import numpy as np
import pytest

from mechsyn.campaign import (
    CampaignConfig, StageSpec, build_config, config_from_file, default_stages, final_records,
    refine_bounds, run_campaign, stage_seed,
)
from mechsyn.de import Bounds, DEConfig
from mechsyn.errors import ConfigurationError
from mechsyn.export import export_curve, export_results, load_result
from mechsyn.problems import builtin_problem
from oracles import point_to_polyline


def small(problem="path18-prescribed", **kw):
    values = {"problem": problem, "pop": 20, "gens": 15, "stage1_gens": 10, "seed": 3, "runs": 2}
    values.update(kw)
    return build_config(values)


def test_refine_bounds_clamped():
    outer = Bounds([0.0, 0.0], [1.0, 10.0])
    b = refine_bounds([0.05, 5.0], outer)
    assert b.lower.tolist() == pytest.approx([0.0, 3.0])
    assert b.upper.tolist() == pytest.approx([0.25, 7.0])


def test_default_stage_plans():
    two = default_stages(builtin_problem("path18-prescribed"), 100)
    assert [s.bounds for s in two] == ["default", "refined"]
    assert two[0].elitist_cg and two[0].threshold == 5e-2
    assert [s.bounds for s in default_stages(builtin_problem("path18-free"), 100)] == ["default", "auto"]
    assert len(default_stages(builtin_problem("ackermann"), 100)) == 1


def test_config_validation():
    with pytest.raises(ConfigurationError):
        CampaignConfig("ackermann", DEConfig(), [])
    with pytest.raises(ConfigurationError):
        CampaignConfig("ackermann", DEConfig(), [StageSpec(1)], runs=0)
    with pytest.raises(ConfigurationError):
        StageSpec(5, "sideways")
    with pytest.raises(ConfigurationError):
        build_config({"problem": "ackermann", "colour": "red"})
    with pytest.raises(ConfigurationError):
        build_config({"problem": "ackermann", "stage2_auto": "yes"})
    with pytest.raises(LookupError):
        build_config({"problem": "nope"})


def test_g_max_zero_records_best_initial():
    cfg = build_config({"problem": "ackermann", "pop": 10, "gens": 0, "seed": 1})
    (rec,) = run_campaign(cfg)
    assert rec.generations == 0 and rec.evaluations == 10
    assert rec.history == [(0, rec.best_fob)]


def test_runs_use_consecutive_seeds_and_stage_seeds_differ():
    recs = run_campaign(small())
    assert [(r.seed, r.stage) for r in recs] == [(3, 1), (3, 2), (4, 1), (4, 2)]
    assert len({r.stage_seed for r in recs}) == 4
    assert stage_seed(3, 1) == recs[0].stage_seed
    assert [r.seed for r in final_records(recs)] == [3, 4]


def test_stage1_threshold_and_elitist():
    p = builtin_problem("path18-prescribed")
    cfg = CampaignConfig("path18-prescribed", DEConfig(m=30, seed=0),
                         [StageSpec(200, "default", elitist_cg=True, threshold=1.0)])
    (rec,) = run_campaign(cfg, p)
    # stops at the first generation meeting the threshold
    assert rec.first_hit == rec.generations
    assert all(f > 1.0 for _, f in rec.history[:-1]) and rec.best_fob <= 1.0


def test_stage2_starts_from_stage1_best():
    recs = run_campaign(small(stage2_auto="true", runs=1))
    s1, s2 = recs
    assert s2.bounds.contains(s1.best_x)
    assert s2.history[0][1] <= s1.best_fob


def test_explicit_stage_bounds(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text(
        "[campaign]\nproblem = ackermann\npop = 10\nseed = 2\n"
        "[stage1]\ngens = 3\nlower = 0.2 -0.5 0.3\nupper = 0.3 -0.4 0.4\n"
    )
    cfg = config_from_file(ini)
    (rec,) = run_campaign(cfg)
    assert rec.bounds.lower.tolist() == [0.2, -0.5, 0.3]


@pytest.mark.parametrize("text", [
    "[campaign]\nproblem = ackermann\n[stagex]\ngens = 3\n",
    "[campaign]\nproblem = ackermann\n[stage1]\nbounds = default\n",
    "[campaign]\nproblem = ackermann\n[stage1]\ngens = 3\nlower = 0 0 0\n",
    "not an ini file",
])
def test_bad_config_files(tmp_path, text):
    ini = tmp_path / "bad.ini"
    ini.write_text(text)
    with pytest.raises(ConfigurationError):
        config_from_file(ini)


def test_cli_overrides_file(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[campaign]\nproblem = ackermann\npop = 10\ngens = 5\nseed = 2\n")
    cfg = config_from_file(ini, {"seed": 9, "gens": None})
    assert cfg.de.seed == 9 and cfg.stages[0].g_max == 5


def test_export_round_trip_and_summary(tmp_path):
    cfg = small(runs=3)
    p = builtin_problem("path18-prescribed")
    recs = run_campaign(cfg, p)
    export_results(recs, tmp_path, p, cfg)
    for r in recs:
        doc = load_result(tmp_path / f"run-s{r.seed}-stage{r.stage}.json")
        assert doc["fob"] == r.best_fob
        assert abs(p.evaluate(doc["x"]) - doc["fob"]) <= 1e-12
        assert list(doc["parameters"]) == list(p.layout.names)
        assert doc["config"] == cfg.to_dict()
        hist = (tmp_path / f"run-s{r.seed}-stage{r.stage}-history.tsv").read_text().splitlines()
        assert len(hist) == len(r.history) + 1
    rows = (tmp_path / "summary.tsv").read_text().splitlines()[1:]
    fobs = [float(row.split("\t")[2]) for row in rows]
    assert len(rows) == len(recs) and fobs == sorted(fobs)


def test_reruns_are_byte_identical(tmp_path):
    for d in ("a", "b"):
        cfg = small(out=str(tmp_path / d))
        run_campaign(cfg)
    files = sorted(f.name for f in (tmp_path / "a").iterdir())
    for name in files:
        if name == "summary.tsv":
            continue
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_echo_not_mutated(tmp_path):
    cfg = small(out=str(tmp_path))
    before = json.dumps(cfg.to_dict(), sort_keys=True)
    run_campaign(cfg)
    assert json.dumps(cfg.to_dict(), sort_keys=True) == before


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    cfg = small(out=str(blocker / "sub"), runs=1)
    with pytest.raises(OSError):
        run_campaign(cfg)


def test_curve_export_near_targets(tmp_path):
    p = builtin_problem("path18-prescribed")
    paths = export_curve(p, p.references["reference"].x, tmp_path, 2000)
    assert {q.name for q in paths} == {"curve.tsv", "curve.svg"}
    data = np.genfromtxt(tmp_path / "curve.tsv", names=True, delimiter="\t")
    xy = np.column_stack([data["px"], data["py"]])
    assert np.all(data["feasible"] == 1)
    worst = max(point_to_polyline(t, xy) for t in p.task.points)
    assert worst < 0.05
    assert (tmp_path / "curve.svg").read_text().lstrip().startswith("<?xml")


def test_curve_export_flags_gaps(tmp_path):
    p = builtin_problem("path18-prescribed")
    x = p.references["reference"].x.copy()
    x[2:6] = [1.0, 0.9, 0.5, 0.5]
    export_curve(p, x, tmp_path, 200)
    data = np.genfromtxt(tmp_path / "curve.tsv", names=True, delimiter="\t")
    bad = data["feasible"] == 0
    assert bad.any() and np.all(np.isnan(data["px"][bad]))


def test_steering_sweep_export(tmp_path):
    p = builtin_problem("ackermann")
    export_curve(p, p.references["reference"].x, tmp_path)
    lines = (tmp_path / "sweep.tsv").read_text().splitlines()
    assert lines[0] == "delta1_deg\tdelta_ack_deg\tdelta2_deg\terror_deg"
    assert len(lines) == 802
    assert (tmp_path / "sweep.svg").exists()
