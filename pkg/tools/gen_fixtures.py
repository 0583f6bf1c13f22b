"""Regenerate the frozen test fixtures under tests/fixtures/.

Every artifact is deterministic: fixed specs, fixed seeds, deterministic
JSON serialization. Run from the repository root after installing the
package: python3 tools/gen_fixtures.py
"""

import pathlib

import numpy as np

import handsmooth as hs
from handsmooth import formats

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "tests" / "fixtures"


def motion_demo() -> hs.MotionSpec:
    # sinusoid parameters left unset: the generator samples them from its rng
    return hs.MotionSpec(
        num_frames=8,
        fps=30.0,
        wrist=hs.WristPath(
            kind="line",
            start=np.zeros(3),
            direction=np.array([1.0, 0.0, 0.0]),
            speed=0.05,
        ),
        rig=hs.RigSpec(num_views=1),
    )


def noise_demo() -> hs.NoiseSpec:
    return hs.NoiseSpec(
        sigma_position=0.005,
        sigma_orient=0.02,
        sigma_pose=0.02,
        sigma_pixel=1.0,
        visibility_dropout=0.1,
        seed=3,
    )


def acceptance_motion() -> hs.MotionSpec:
    base = np.array([0.50, 0.70, 0.40])
    return hs.MotionSpec(
        num_frames=60,
        fps=30.0,
        amplitude=np.concatenate([base + 0.03 * i for i in range(5)]),
        frequency=0.5 + 0.04 * np.arange(15),
        phase=0.4 * np.arange(15),
        wrist=hs.WristPath(
            kind="line",
            start=np.zeros(3),
            direction=np.array([1.0, 0.2, 0.0]),
            speed=0.05,
        ),
        orient_start=np.array([0.2, -0.1, 0.3]),
        orient_rate=np.array([0.3, 0.2, -0.25]),
        rig=hs.RigSpec(num_views=2),
    )


def acceptance_noise() -> hs.NoiseSpec:
    return hs.NoiseSpec(
        sigma_position=0.01,
        sigma_orient=0.05,
        sigma_pose=0.05,
        sigma_pixel=0.0,
        visibility_dropout=0.0,
        seed=7,
    )


def small_sequence() -> hs.SequenceFile:
    spec = hs.MotionSpec(
        num_frames=3,
        fps=30.0,
        amplitude=np.full(15, 0.3),
        frequency=np.full(15, 0.8),
        phase=np.zeros(15),
        wrist=hs.WristPath(
            kind="line",
            start=np.zeros(3),
            direction=np.array([1.0, 0.0, 0.0]),
            speed=0.05,
        ),
        rig=hs.RigSpec(num_views=1),
    )
    noise = hs.NoiseSpec(sigma_position=0.004, sigma_pose=0.03, seed=5)
    rng = np.random.default_rng(noise.seed)
    skeleton = hs.load_skeleton()
    gt, rig = hs.generate_sequence(spec, rng)
    init = hs.corrupt_trajectory(gt, noise, rng)
    obs = hs.render_observations(gt, rig, skeleton, noise, rng)
    return hs.SequenceFile.for_model(
        hs.DEFAULT_MODEL, skeleton, init, obs, ground_truth=gt
    )


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    formats.save_motion_spec(FIXTURES / "motion_demo.json", motion_demo())
    formats.save_noise_spec(FIXTURES / "noise_demo.json", noise_demo())
    formats.save_motion_spec(FIXTURES / "acceptance_motion.json", acceptance_motion())
    formats.save_noise_spec(FIXTURES / "acceptance_noise.json", acceptance_noise())

    seq = small_sequence()
    formats.save_sequence(FIXTURES / "sequence_small.json", seq)

    refined, report = hs.smooth(
        seq.init,
        seq.observations,
        seq.skeleton,
        hs.SmootherConfig(max_iters=2),
    )
    report.initial_metrics = hs.evaluate(
        seq.init, seq.ground_truth, seq.observations, seq.skeleton
    ).to_dict()
    report.final_metrics = hs.evaluate(
        refined, seq.ground_truth, seq.observations, seq.skeleton
    ).to_dict()
    report.save(FIXTURES / "loss_report.json")

    metric = hs.evaluate(seq.init, seq.ground_truth, seq.observations, seq.skeleton)
    formats.dump_json(metric.to_dict(), FIXTURES / "metric_report.json")

    for p in sorted(FIXTURES.iterdir()):
        print(f"wrote {p.relative_to(ROOT)} ({p.stat().st_size} bytes)")


if __name__ == "__main__":
    main()
