import json
import shutil
from pathlib import Path

import numpy as np
import pytest
from PIL import Image

from dumbbench.cli import EXIT_CONFIG, EXIT_MISSING, EXIT_OK, build_parser, effective_config, main
from dumbbench.config import RunConfig
from dumbbench.harness import read_cells

CONFIGS = Path(__file__).resolve().parents[1] / "configs"
SMOKE = str(CONFIGS / "smoke.json")


@pytest.fixture(scope="module")
def smoke_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    assert main(["run-all", "--config", SMOKE, "--out", str(out), "-q"]) == EXIT_OK
    root = RunConfig.load(SMOKE).run_dir(str(out))
    return out, root


def test_help_and_bad_flags(capsys):
    assert main(["--help"]) == EXIT_OK
    assert main(["run-all", "--bogus"]) == EXIT_CONFIG
    assert main([]) == EXIT_CONFIG
    capsys.readouterr()


def test_bad_config_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"tasks": ["nope"]}))
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    bad.write_text("{not json")
    assert main(["gen-data", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["gen-data", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG
    assert main(["gen-data", "--config", SMOKE, "--task", "hard", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_missing_prerequisites_exit_2(tmp_path, caplog):
    for cmd in ("report", "run-matrix", "tune-attacks", "train-all"):
        assert main([cmd, "--config", SMOKE, "--out", str(tmp_path)]) == EXIT_MISSING, cmd
    assert "train-all" in caplog.text or "gen-data" in caplog.text


def test_overrides_and_hash():
    args = build_parser().parse_args(["run-all", "--config", SMOKE, "--seed", "5", "--jobs", "3", "--out", "x"])
    cfg = effective_config(args)
    assert (cfg.seed, cfg.jobs, cfg.out) == (5, 3, "x")
    base = RunConfig.load(SMOKE)
    assert cfg.config_hash() != base.config_hash()
    args = build_parser().parse_args(["run-all", "--config", SMOKE, "--jobs", "3", "--out", "elsewhere"])
    # execution-only settings do not change the run directory name
    assert effective_config(args).config_hash() == base.config_hash()


def test_smoke_run_layout(smoke_run, capsys):
    out, root = smoke_run
    assert root.parent == out and root.name == RunConfig.load(SMOKE).config_hash()
    stored = json.loads((root / "config.json").read_text())
    assert stored["config_hash"] == root.name
    cells = read_cells(root / "results" / "cells.csv")
    # 8 models: 64 ordered FGSM pairs and 2 x 8 cells per transform
    assert len(cells) == 64 + 2 * 16
    assert {c.attack for c in cells} == {"FGSM", "BoxBlur", "Grayscale"}
    assert all(c.status in ("ok", "eval-pool-exhausted") for c in cells)
    assert any(c.status == "ok" for c in cells)
    for name in ("case_asr.csv", "summary.json", "baseline.csv", "tuning_traces.csv"):
        assert (root / "report" / name).exists()
    assert len(list((root / "models").glob("*.dmb"))) == 8


def test_rerun_is_noop_and_report_reproducible(smoke_run, capsys):
    out, root = smoke_run
    before = {p.name: p.read_bytes() for p in (root / "report").iterdir()}
    csv_before = (root / "results" / "cells.csv").read_bytes()
    assert main(["run-all", "--config", SMOKE, "--out", str(out), "-q"]) == EXIT_OK
    assert capsys.readouterr().out.strip() == str(root / "report")
    assert (root / "results" / "cells.csv").read_bytes() == csv_before
    assert main(["report", "--config", SMOKE, "--out", str(out), "-q"]) == EXIT_OK
    after = {p.name: p.read_bytes() for p in (root / "report").iterdir()}
    assert after == before


def test_resume_and_parallel_give_same_table(smoke_run, tmp_path):
    out, root = smoke_run
    reference = (root / "results" / "cells.csv").read_bytes()
    copy = tmp_path / root.name
    shutil.copytree(root, copy)
    progress = copy / "results" / "progress.jsonl"
    lines = progress.read_text().splitlines()
    # drop the last finished unit and tear the one before it
    progress.write_text("\n".join(lines[:-2]) + "\n" + lines[-2][:40])
    (copy / "results" / "cells.csv").unlink()
    assert main(["run-matrix", "--config", SMOKE, "--out", str(tmp_path), "--resume", "-q"]) == EXIT_OK
    assert (copy / "results" / "cells.csv").read_bytes() == reference
    assert main(["run-matrix", "--config", SMOKE, "--out", str(tmp_path), "--jobs", "2", "-q"]) == EXIT_OK
    assert (copy / "results" / "cells.csv").read_bytes() == reference


def test_ingest_replaces_dataset(tmp_path):
    rng = np.random.default_rng(0)
    src = tmp_path / "folder"
    for cls in ("neg", "pos"):
        (src / cls).mkdir(parents=True)
        for i in range(60):
            Image.fromarray(rng.integers(0, 256, (40, 40, 3), dtype=np.uint8)).save(src / cls / f"{i}.png")
    code = main(["ingest", "--config", SMOKE, "--out", str(tmp_path / "runs"), "--path", str(src), "--task", "easy", "--source", "B", "-q"])
    assert code == EXIT_OK
    root = RunConfig.load(SMOKE).run_dir(str(tmp_path / "runs"))
    manifest = json.loads((root / "data" / "easy-B" / "manifest.json").read_text())
    assert sum(int(v) for part in manifest["counts"].values() for v in part.values()) == 120
    assert main(["ingest", "--config", SMOKE, "--path", str(src), "--task", "hard", "--source", "A"]) == EXIT_CONFIG
