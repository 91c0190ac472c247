"""Drive the whole pipeline through the command-line interface.

Writes a small INI config, then runs train -> analyze -> perturb ->
curriculum -> render as subcommands, the way a batch experiment would.
Every artifact lands under demos/out/cli with a digest manifest.
"""

import subprocess
import sys
from pathlib import Path

BASE = Path(__file__).resolve().parent / "out" / "cli"
BASE.mkdir(parents=True, exist_ok=True)

CONFIG = BASE / "run.ini"
CONFIG.write_text("""\
[dataset]
source = synthetic
n_images = 300
glyph_size = 10
seed = 7

[retina]
width = 16

[network]
widths = 256 64 32 64 256

[train]
steps = 3000
batch_size = 16
learning_rate = 1e-3
snapshots = 0 200 1000 3000
probe_size = 32

[analysis]
n_trials = 96
n_readout = 300
tsne_points = 120
tsne_perplexity = 20
tsne_iters = 400

[perturb]
role = x
n_stimuli = 6

[curriculum]
phase_steps = 800 800
eval_every = 80
eval_size = 48
learning_rate = 1e-3
batch_size = 16
""")


def run(*args):
    cmd = [sys.executable, "-m", "retinacode.cli", *map(str, args)]
    print("$", " ".join(cmd[2:]))
    subprocess.run(cmd, check=True)


run("train", "--config", CONFIG, "--out", BASE / "train")
run("analyze", "--config", CONFIG, "--out", BASE / "analysis",
    "--checkpoint", BASE / "train" / "checkpoint.ckpt")
run("perturb", "--config", CONFIG, "--out", BASE / "perturb",
    "--checkpoint", BASE / "train" / "checkpoint.ckpt", "--role", "x")
run("curriculum", "--config", CONFIG, "--out", BASE / "curriculum",
    "--checkpoint", BASE / "train" / "checkpoint.ckpt")
run("render", "--config", CONFIG, "--out", BASE / "render", "symbol_x")

print("\nartifacts:")
for sub in ("train", "analysis", "perturb", "curriculum", "render"):
    manifest = BASE / sub / "manifest.txt"
    n = len(manifest.read_text().splitlines())
    print(f"  {sub}: {n} files (see {manifest})")
