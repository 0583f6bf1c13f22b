"""Command-line interface.

Subcommands: generate (synthetic benchmark files), smooth (trajectory
refinement), eval (metrics against ground truth), perturb (camera extrinsic
noise), gradcheck (autodiff verification against finite differences).

Exit codes: 0 success, 1 usage or schema error, 2 numerical failure
(divergence, degenerate observations, domain errors). Set HANDSMOOTH_LOG to
DEBUG/INFO/WARNING to control log verbosity.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import camera as cam
from . import formats, metrics, smoother, synth
from .errors import (
    AutodiffDomainError,
    DegenerateObservationError,
    DivergedError,
    SchemaError,
    SpecError,
)
from .hand_model import DEFAULT_MODEL, load_skeleton
from .objective import MIN_FRAMES, REPROJECTION_NORMS, LossWeights, SequenceObservation

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here reserves 2 for
    numerical failures, so usage errors exit 1 instead."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_at_least(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid integer {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}")
        return value

    return parse


def _float_at_least(minimum: float, strict: bool = False):
    def parse(text: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid number {text!r}") from None
        if not np.isfinite(value) or value < minimum or (strict and value == minimum):
            bound = ">" if strict else ">="
            raise argparse.ArgumentTypeError(f"must be {bound} {minimum}")
        return value

    return parse


def cmd_generate(args) -> int:
    motion = formats.load_motion_spec(args.motion_spec)
    noise = formats.load_noise_spec(args.noise_spec)
    seed = noise.seed if args.seed is None else args.seed
    rng = np.random.default_rng(seed)
    skeleton = load_skeleton()
    gt, rig = synth.generate_sequence(motion, rng)
    init = synth.corrupt_trajectory(gt, noise, rng)
    obs = synth.render_observations(gt, rig, skeleton, noise, rng)
    seq = formats.SequenceFile.for_model(
        DEFAULT_MODEL, skeleton, init, obs, ground_truth=gt
    )
    formats.save_sequence(args.output, seq)
    print(
        f"wrote {args.output}: {gt.num_frames} frames, "
        f"{rig.num_views} views, seed {seed}"
    )
    return 0


def cmd_smooth(args) -> int:
    seq = formats.load_sequence(args.input)
    config = smoother.SmootherConfig(
        learning_rate=args.lr,
        lr_min=args.lr_min,
        max_iters=args.iters,
        weights=LossWeights(
            acce_pose=args.lambda_pose,
            acce_orients=args.lambda_orients,
            acce_position=args.lambda_position,
            reprojection=args.lambda_2d,
        ),
        weight_decay=args.weight_decay,
        adam_beta1=args.adam_beta1,
        adam_beta2=args.adam_beta2,
        adam_eps=args.adam_eps,
        optimize_shape=args.optimize_shape,
        reprojection_norm=args.norm,
    )
    try:
        refined, report = smoother.smooth(
            seq.init, seq.observations, seq.skeleton, config
        )
    except DivergedError as e:
        if args.report and e.report is not None:
            e.report.save(args.report)
            log.info("flushed partial report to %s", args.report)
        raise
    if seq.ground_truth is not None:
        report.initial_metrics = metrics.evaluate(
            seq.init, seq.ground_truth, seq.observations, seq.skeleton, args.norm
        ).to_dict()
        report.final_metrics = metrics.evaluate(
            refined, seq.ground_truth, seq.observations, seq.skeleton, args.norm
        ).to_dict()
    out_seq = formats.SequenceFile(
        skeleton=seq.skeleton,
        skeleton_ref=seq.skeleton_ref,
        init=refined,
        observations=seq.observations,
        ground_truth=seq.ground_truth,
    )
    formats.save_sequence(args.output, out_seq)
    if args.report:
        report.save(args.report)
    first = report.entries[0].total
    last = report.entries[-1].total
    print(
        f"wrote {args.output}: total loss {first:.6g} -> {last:.6g} "
        f"after {args.iters} iterations"
    )
    if report.non_improving:
        print("warning: final loss is not below the initial loss", file=sys.stderr)
    return 0


def cmd_eval(args) -> int:
    seq = formats.load_sequence(args.pred)
    gt = seq.ground_truth
    if args.against is not None:
        other = formats.load_sequence(args.against)
        gt = other.ground_truth if other.ground_truth is not None else other.init
    if gt is None:
        raise SpecError(
            "no ground truth: the file has none and --against was not given"
        )
    if gt.num_frames != seq.init.num_frames:
        raise SchemaError(
            f"ground truth has {gt.num_frames} frames, "
            f"prediction has {seq.init.num_frames}"
        )
    report = metrics.evaluate(seq.init, gt, seq.observations, seq.skeleton, args.norm)
    print(report.format_table())
    if args.json is not None:
        formats.dump_json(report.to_dict(), args.json)
    return 0


def cmd_perturb(args) -> int:
    seq = formats.load_sequence(args.input)
    rng = np.random.default_rng(args.seed)
    views = tuple(
        (intr, cam.perturb_extrinsics(extr, rng, args.range))
        for intr, extr in seq.rig.views
    )
    obs = SequenceObservation(
        landmarks_2d=seq.observations.landmarks_2d,
        visibility=seq.observations.visibility,
        rig=cam.CameraRig(views=views),
    )
    out_seq = formats.SequenceFile(
        skeleton=seq.skeleton,
        skeleton_ref=seq.skeleton_ref,
        init=seq.init,
        observations=obs,
        ground_truth=seq.ground_truth,
    )
    formats.save_sequence(args.output, out_seq)
    print(
        f"wrote {args.output}: camera translations perturbed within "
        f"(-{args.range}, {args.range}) m, seed {args.seed}"
    )
    return 0


def cmd_gradcheck(args) -> int:
    errs = synth.gradient_sweep(args.frames, args.views, args.seeds)
    failures = [
        (seed, err) for seed, err in enumerate(errs) if not err < args.tolerance
    ]
    for seed, err in failures:
        print(f"seed {seed}: max relative error {err:.3e} >= {args.tolerance:.1e}")
    worst = max(errs)
    passed = len(errs) - len(failures)
    print(
        f"gradcheck: {passed}/{len(errs)} instances within {args.tolerance:.1e}, "
        f"worst {worst:.3e}"
    )
    return 2 if failures else 0


def build_parser() -> _Parser:
    parser = _Parser(prog="handsmooth", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="synthesize a benchmark sequence file")
    p.add_argument("motion_spec", help="motion spec JSON path")
    p.add_argument("noise_spec", help="noise spec JSON path")
    p.add_argument("output", help="sequence file to write")
    p.add_argument(
        "--seed",
        type=int,
        default=None,
        help="RNG seed (default: the noise spec's seed field)",
    )
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("smooth", help="refine a trajectory against observations")
    p.add_argument("input", help="sequence file to refine")
    p.add_argument("output", help="refined sequence file to write")
    p.add_argument("--lr", type=_float_at_least(0.0, strict=True), default=1e-2)
    p.add_argument("--lr-min", type=_float_at_least(0.0), default=0.0)
    p.add_argument("--iters", type=_int_at_least(1), default=500)
    p.add_argument("--lambda-pose", type=_float_at_least(0.0), default=0.5,
                   help="joint-rotation acceleration weight")
    p.add_argument("--lambda-orients", type=_float_at_least(0.0), default=0.5,
                   help="wrist-orientation acceleration weight")
    p.add_argument("--lambda-position", type=_float_at_least(0.0), default=0.5,
                   help="wrist-position acceleration weight")
    p.add_argument("--lambda-2d", type=_float_at_least(0.0), default=1.0,
                   help="reprojection weight")
    p.add_argument("--weight-decay", type=_float_at_least(0.0), default=0.0)
    p.add_argument("--adam-beta1", type=float, default=0.9)
    p.add_argument("--adam-beta2", type=float, default=0.999)
    p.add_argument("--adam-eps", type=_float_at_least(0.0, strict=True), default=1e-8)
    p.add_argument("--optimize-shape", action="store_true",
                   help="let the shared shape coefficients move too")
    p.add_argument("--norm", choices=REPROJECTION_NORMS, default="l2")
    p.add_argument("--report", default=None,
                   help="loss trace path (.json for JSON, else CSV)")
    p.set_defaults(func=cmd_smooth)

    p = sub.add_parser("eval", help="score a trajectory against ground truth")
    p.add_argument("pred", help="sequence file whose trajectory is scored")
    p.add_argument("--against", default=None,
                   help="sequence file supplying ground truth when pred has none")
    p.add_argument("--json", default=None, help="also write the metrics as JSON")
    p.add_argument("--norm", choices=REPROJECTION_NORMS, default="l2")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("perturb", help="add noise to camera translations")
    p.add_argument("input", help="sequence file to read")
    p.add_argument("output", help="sequence file to write")
    p.add_argument("--range", type=_float_at_least(0.0), default=0.5,
                   help="uniform noise half-width in meters")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("gradcheck", help="verify gradients against finite differences")
    p.add_argument("--frames", type=_int_at_least(MIN_FRAMES), default=5)
    p.add_argument("--views", type=_int_at_least(1), default=2)
    p.add_argument("--seeds", type=_int_at_least(1), default=100)
    p.add_argument("--tolerance", type=_float_at_least(0.0, strict=True), default=1e-4)
    p.set_defaults(func=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    level = os.environ.get("HANDSMOOTH_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DegenerateObservationError, AutodiffDomainError, DivergedError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (SchemaError, SpecError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
