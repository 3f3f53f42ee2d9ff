"""Short synthetic session set, a quick training run, then one reconstructed mesh.

A scaled-down version of the full experiment so it finishes in about a minute.
Run: python demos/train_and_reconstruct.py [output_dir]
"""

import os
import sys

from foldcap.cnn import TrainConfig
from foldcap.evaluation import reconstruct
from foldcap.kinematics import default_pattern, export_obj
from foldcap.motion import generate_sessions
from foldcap.pipeline import run_c2f


def main(out_dir):
    os.makedirs(out_dir, exist_ok=True)
    pattern = default_pattern("accordion-p")
    sims = generate_sessions(pattern, sessions=3, minutes=2.0, material="cloth", seed=1)
    print(f"generated {len(sims)} sessions of {len(sims[0].recording)} frames")

    def progress(epoch, tr, val):
        print(f"  epoch {epoch:2d}  train {tr:.5f}  val {val:.5f}")

    cfg = TrainConfig(batch_size=512, max_epochs=12, seed=1)
    result = run_c2f(pattern, [(s.recording, s.targets) for s in sims], cfg, progress=progress)
    ev = result.evaluation
    for lab, r2, err in zip(ev.labels, ev.r2, ev.rmse_cm):
        print(f"{lab:9s} R2 {r2:.3f}  RMSE {err:.2f} cm")

    mid = len(result.predictions) // 2
    rec = reconstruct(pattern, result.predictions[mid])
    path = os.path.join(out_dir, "predicted_frame.obj")
    export_obj(rec.mesh, path)
    print(f"predicted primitives {result.predictions[mid].round(2)} -> {path}")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "demo_out")
