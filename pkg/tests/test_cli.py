import numpy as np
import pytest

import retinacode as rc
from retinacode.cli import main

TINY_CONFIG = """
[dataset]
source = synthetic
n_images = 220
glyph_size = 10
seed = 7

[retina]
width = 16

[network]
widths = 256 64 32 64 256
init_seed = 11

[train]
steps = 50
batch_size = 4
learning_rate = 1e-3
seed = 1
snapshots = 0 25 50
probe_size = 16
probe_seed = 21

[analysis]
n_trials = 64
n_readout = 220
tsne_points = 48
tsne_perplexity = 8
tsne_iters = 120

[perturb]
n_stimuli = 4
n_values = 5

[curriculum]
phase_steps = 12 12
eval_every = 6
eval_size = 8
"""


@pytest.fixture()
def config_path(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text(TINY_CONFIG)
    return path


def run(args):
    return main([str(a) for a in args])


def test_missing_config_file(tmp_path):
    code = run(["train", "--config", tmp_path / "absent.ini"])
    assert code == 2


def test_missing_dataset_path(tmp_path, config_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(TINY_CONFIG + "\n[dataset]\nsource = idx\nimages = /nope.idx\nlabels = /nope2.idx\n")
    # configparser keeps the last value for duplicate sections
    bad.write_text(TINY_CONFIG.replace("source = synthetic",
                                       "source = idx\nimages = /nope.idx\nlabels = /nope2.idx"))
    code = run(["train", "--config", bad, "--out", tmp_path / "out"])
    assert code == 2
    assert "/nope.idx" in capsys.readouterr().err


def test_train_zero_steps_checkpoint_equals_init(tmp_path, config_path):
    out = tmp_path / "out"
    code = run(["train", "--config", config_path, "--out", out, "--steps", 0])
    assert code == 0
    params, step, metadata = rc.load_checkpoint(out / "checkpoint.ckpt")
    fresh = rc.init_params(rc.LayerSpec(widths=(256, 64, 32, 64, 256)), seed=11)
    assert params.allclose(fresh)
    assert step == 0
    lines = (out / "train_log.csv").read_text().strip().splitlines()
    assert lines == ["step,batch_mse"]


def test_train_analyze_reproducible_manifests(tmp_path, config_path):
    outs = [tmp_path / f"t{i}" for i in range(2)]
    for out in outs:
        assert run(["train", "--config", config_path, "--out", out]) == 0
    m0 = (outs[0] / "manifest.txt").read_bytes()
    m1 = (outs[1] / "manifest.txt").read_bytes()
    assert m0 == m1

    # analysis reruns are byte-identical too
    aouts = [tmp_path / f"a{i}" for i in range(2)]
    for aout in aouts:
        assert run(["analyze", "--config", config_path, "--out", aout,
                    "--checkpoint", outs[0] / "checkpoint.ckpt"]) == 0
    assert ((aouts[0] / "manifest.txt").read_bytes()
            == (aouts[1] / "manifest.txt").read_bytes())
    for line in (aouts[0] / "manifest.txt").read_text().splitlines():
        digest, name = line.split(None, 1)
        assert (aouts[0] / name).exists()


def test_train_emits_declared_artifacts(tmp_path, config_path):
    out = tmp_path / "out"
    assert run(["train", "--config", config_path, "--out", out]) == 0
    for name in ("checkpoint.ckpt", "train_log.csv", "development.csv",
                 "snapshot_0.pgm", "snapshot_25.pgm", "snapshot_50.pgm",
                 "ctp_candidates.csv", "manifest.txt"):
        assert (out / name).exists(), name
    # no stray files beyond manifest + declared artifacts
    listed = {line.split(None, 1)[1] for line in
              (out / "manifest.txt").read_text().splitlines()}
    on_disk = {p.name for p in out.iterdir()} - {"manifest.txt"}
    assert listed == on_disk


def test_train_reduces_probe_mse(tmp_path, config_path):
    out = tmp_path / "out"
    assert run(["train", "--config", config_path, "--out", out,
                "--steps", 2000]) == 0
    rows = (out / "development.csv").read_text().strip().splitlines()[1:]
    by_step = {}
    for row in rows:
        step, _, *_rest, probe_mse = row.split(",")
        by_step[int(step)] = float(probe_mse)
    assert by_step[2000] < 0.5 * by_step[0]


def test_analyze_wrong_retina_width(tmp_path, config_path):
    out = tmp_path / "out"
    assert run(["train", "--config", config_path, "--out", out, "--steps", 5]) == 0
    other = tmp_path / "other.ini"
    other.write_text(TINY_CONFIG.replace("width = 16", "width = 8")
                     .replace("widths = 256 64 32 64 256", "widths = 64 32 64"))
    code = run(["analyze", "--config", other, "--out", tmp_path / "a",
                "--checkpoint", out / "checkpoint.ckpt"])
    assert code == 3


def test_perturb_and_roles(tmp_path, config_path):
    out = tmp_path / "out"
    assert run(["train", "--config", config_path, "--out", out, "--steps", 30]) == 0
    pout = tmp_path / "p"
    code = run(["perturb", "--config", config_path, "--out", pout,
                "--checkpoint", out / "checkpoint.ckpt", "--role", "x"])
    assert code == 0
    files = {p.name for p in pout.iterdir()}
    assert any(name.startswith("modulation_unit") and name.endswith(".pgm")
               for name in files)
    assert "invariance.csv" in files

    code = run(["perturb", "--config", config_path, "--out", tmp_path / "p2",
                "--checkpoint", out / "checkpoint.ckpt", "--role", "bogus"])
    assert code == 2


def test_curriculum_empty_and_default(tmp_path, config_path):
    out = tmp_path / "out"
    assert run(["train", "--config", config_path, "--out", out, "--steps", 20]) == 0

    cout = tmp_path / "c0"
    code = run(["curriculum", "--config", config_path, "--out", cout,
                "--checkpoint", out / "checkpoint.ckpt", "--phase-steps", ""])
    assert code == 0
    params, _, _ = rc.load_checkpoint(cout / "checkpoint_start_0.ckpt")
    original, _, _ = rc.load_checkpoint(out / "checkpoint.ckpt")
    assert params.allclose(original)

    cout2 = tmp_path / "c1"
    code = run(["curriculum", "--config", config_path, "--out", cout2,
                "--checkpoint", out / "checkpoint.ckpt"])
    assert code == 0
    files = {p.name for p in cout2.iterdir()}
    assert "curriculum.csv" in files
    assert "plasticity.csv" in files
    assert "delta_layer0.pgm" in files


def test_render_preview(tmp_path, config_path):
    out = tmp_path / "r"
    assert run(["render", "--config", config_path, "--out", out, "digit:3"]) == 0
    assert (out / "render_digit3.pgm").exists()
    assert run(["render", "--config", config_path, "--out", out, "symbol_x"]) == 0
    grid = rc.pgm.read_pgm(out / "render_symbol_x.pgm")
    assert grid.max() > 0.5
    assert run(["render", "--config", config_path, "--out", out, "blob"]) == 2
