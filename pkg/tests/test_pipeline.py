from __future__ import annotations

import copy
import filecmp
import json

import pytest
import yaml

from conftest import pipeline_workspace
from tweetmine.ingest import ConfigError
from tweetmine.pipeline import STAGES, StageError, load_assignments, load_config, run_pipeline
from tweetmine.synth import GroundTruth, plant_geo_correlation, write_planted_survey


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("pipe")
    cfg = pipeline_workspace(root)
    first = run_pipeline(cfg, root / "out")
    return root, cfg, first


def tree_equal(a, b) -> bool:
    cmp = filecmp.dircmp(a, b)

    def walk(c):
        if c.left_only or c.right_only or c.funny_files:
            return False
        _, mismatch, errors = filecmp.cmpfiles(c.left, c.right, c.common_files, shallow=False)
        return not mismatch and not errors and all(walk(s) for s in c.subdirs.values())

    return walk(cmp)


def test_first_run_executes_everything(workspace):
    _, _, first = workspace
    assert list(first) == list(STAGES)
    assert not any(r.cached for r in first.values())


def test_rerun_is_cached_and_identical(workspace, tmp_path):
    root, cfg, first = workspace
    again = run_pipeline(cfg, root / "out")
    assert all(r.cached for r in again.values())
    fresh = run_pipeline(cfg, tmp_path / "fresh")
    assert not any(r.cached for r in fresh.values())
    assert tree_equal(root / "out", tmp_path / "fresh")


def test_counts_are_consistent(workspace):
    root, _, first = workspace
    c = {k: r.counts for k, r in first.items()}
    assert c["ingest"]["total_parsed"] - c["ingest"]["duplicates"] == c["ingest"]["retained_after_dedup"]
    assert c["ingest"]["retained_after_dedup"] - c["ingest"]["irrelevant"] - c["ingest"]["non_english"] == c["ingest"]["rows"]
    g = c["geocode"]
    assert g["coordinates"] + g["place"] + g["user_location"] == g["geocoded"] == g["rows"] - g["unresolved"]
    assert c["classify"]["promotional"] + c["classify"]["consumer"] == c["classify"]["rows"]
    lda = c["lda"]
    assert lda["documents_in_scope"] == g["geocoded"]
    assert lda["assigned"] + lda["unassigned"] == lda["documents_in_scope"]
    assignments = load_assignments(root / "out" / "lda" / "assignments.jsonl")
    assert len(assignments) == lda["documents_in_scope"]
    manifest = json.loads((root / "out" / "manifest.json").read_text())
    assert manifest["stages"]["lda"]["counts"] == lda
    assert "cached" not in json.dumps(manifest)


def test_changed_cutoff_reruns_from_lda(workspace, tmp_path):
    root, cfg, _ = workspace
    out = tmp_path / "out"
    run_pipeline(cfg, out)
    cfg2 = copy.deepcopy(cfg)
    cfg2["topicmodel"]["cutoff"] = 0.3
    res = run_pipeline(cfg2, out)
    assert [res[s].cached for s in STAGES] == [True, True, True, False, False, False]


def test_changed_survey_reruns_only_analysis(workspace, tmp_path):
    root, cfg, _ = workspace
    out = tmp_path / "out"
    run_pipeline(cfg, out)
    truth = GroundTruth.load(root / "data")
    write_planted_survey(plant_geo_correlation(truth, target_rho=0.0, seed=5), tmp_path / "s.csv")
    cfg2 = copy.deepcopy(cfg)
    cfg2["inputs"]["survey"] = [str(tmp_path / "s.csv")]
    res = run_pipeline(cfg2, out)
    assert [res[s].cached for s in STAGES] == [True, True, True, True, False, False]


def test_tampered_output_triggers_rerun(workspace, tmp_path):
    _, cfg, _ = workspace
    out = tmp_path / "out"
    run_pipeline(cfg, out)
    (out / "classify" / "corpus.jsonl").write_text("", encoding="utf-8")
    res = run_pipeline(cfg, out)
    assert not res["classify"].cached and res["geocode"].cached


def test_missing_gazetteer_is_config_error(workspace, tmp_path):
    _, cfg, _ = workspace
    bad = copy.deepcopy(cfg)
    del bad["inputs"]["gazetteer"]
    with pytest.raises(ConfigError, match="inputs.gazetteer"):
        run_pipeline(bad, tmp_path / "out")


def test_unmatched_records_glob(workspace, tmp_path):
    _, cfg, _ = workspace
    bad = copy.deepcopy(cfg)
    bad["inputs"]["records"] = [str(tmp_path / "nothing*.jsonl")]
    with pytest.raises(FileNotFoundError):
        run_pipeline(bad, tmp_path / "out")


def test_broken_gazetteer_names_stage(workspace, tmp_path):
    _, cfg, _ = workspace
    bad = copy.deepcopy(cfg)
    (tmp_path / "gaz.tsv").write_text("not a gazetteer\n", encoding="utf-8")
    bad["inputs"]["gazetteer"] = str(tmp_path / "gaz.tsv")
    with pytest.raises(StageError) as err:
        run_pipeline(bad, tmp_path / "out")
    assert err.value.stage == "geocode"


def test_yaml_paths_relative_to_config(workspace, tmp_path):
    root, cfg, _ = workspace
    conf = copy.deepcopy(cfg)
    conf["inputs"]["keywords"] = "data/keywords.txt"
    path = root / "pipeline.yaml"
    path.write_text(yaml.safe_dump(conf), encoding="utf-8")
    loaded = load_config(path, {"topicmodel": {"K": 7}})
    assert loaded["inputs"]["keywords"] == str(root / "data" / "keywords.txt")
    assert loaded["topicmodel"]["K"] == 7 and loaded["topicmodel"]["beta"] == 0.01
