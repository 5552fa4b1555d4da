"""Command-line surface: synth, flow, smooth, eval, compare, plot.

Every subcommand validates its configuration up front, writes the exact
configuration used as ``run_config.json`` into its output directory, and
is deterministic given its inputs. Exit codes: 0 success, 2 configuration
error, 3 I/O or format error, 4 sequencing error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

from . import synth
from .errors import ConfigError, FormatError, InvalidInputError, SequencingError, ToolError
from .flow import FlowParams, MotionUncertaintyParams, estimate_flow
from .formats import (
    FLOW_DIR,
    FRAMES_DIR,
    SequenceManifest,
    flow_path,
    frame_path,
    probs_path,
    mask_path,
    read_flo,
    read_frame,
    read_manifest,
    read_mask,
    read_prob_planes,
    write_flo,
    write_frame,
    write_manifest,
    write_mask,
    write_prob_planes,
)
from .metrics import UssWeights, evaluate_masks, fill_uss, frame_mean_series, pooled_robust_stats
from .plotting import write_metric_chart
from .reports import read_metrics_csv, write_compare_json, write_metrics_csv, write_summary_json
from .smoother import FusionParams, parse_fusion_mode, run_sequence

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_SEQUENCING = 4

METRIC_TITLES = {
    "tiou": "Temporal IoU",
    "wiou": "Warped IoU",
    "boundary_f": "Boundary F-score",
    "uss": "Unified Stability Score",
}


@dataclass
class RunConfig:
    """Everything that parameterizes a run; serialized into each output dir."""

    command: str
    output_dir: str
    seed: int | None
    flow: FlowParams
    motion: MotionUncertaintyParams
    fusion: FusionParams
    threshold: float
    boundary_tolerance: float
    uss_weights: UssWeights
    uss_scope: str

    def write(self, directory) -> None:
        payload = asdict(self)
        path = Path(directory) / "run_config.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _add_flow_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("flow estimation")
    g.add_argument("--pyramid-levels", type=int, default=5)
    g.add_argument("--pyramid-scale", type=float, default=0.5)
    g.add_argument("--window-radius", type=int, default=7)
    g.add_argument("--flow-iterations", type=int, default=3)
    g.add_argument("--poly-neighborhood", type=int, default=5)
    g.add_argument("--poly-sigma", type=float, default=1.1)


def _add_fusion_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("fusion")
    g.add_argument("--epsilon", type=float, default=1e-6)
    g.add_argument("--kappa-min", type=float, default=0.05)
    g.add_argument("--kappa-max", type=float, default=0.95)
    g.add_argument("--threshold", type=float, default=0.5)
    g.add_argument("--sigma-floor", type=float, default=0.5)
    g.add_argument("--fixed-sigma", action="store_true",
                   help="use sigma-floor directly instead of the adaptive median")
    g.add_argument("--normalize-entropy", action="store_true")
    g.add_argument("--fusion-mode", default="adaptive",
                   help="adaptive | passthrough | fixed:<w>")
    g.add_argument("--disable-motion-uncertainty", action="store_true")
    g.add_argument("--disable-entropy", action="store_true")


def _add_metric_args(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("metrics")
    g.add_argument("--boundary-tolerance", type=float, default=2.0)
    g.add_argument("--uss-alpha", type=float, default=0.4)
    g.add_argument("--uss-beta", type=float, default=0.3)
    g.add_argument("--uss-gamma", type=float, default=0.3)
    g.add_argument("--uss-scope", choices=("per-run", "pooled"), default="per-run")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tpsmooth",
        description="Temporal smoothing of segmentation probability maps, with a stability evaluation harness.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic benchmark sequence")
    p.add_argument("--out", required=True)
    p.add_argument("--preset", default="flicker-disk", choices=synth.PRESET_NAMES)
    p.add_argument("--scene-json", help="JSON file with {scene: ..., degradation: ...} specs")
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--width", type=int, default=64)
    p.add_argument("--height", type=int, default=64)
    p.add_argument("--frames", type=int, default=60)
    p.add_argument("--fps", type=float, default=30.0)
    p.add_argument("--noise-std", type=float, help="override preset logit noise std")
    p.add_argument("--jitter-std", type=float, help="override preset jitter std")
    p.add_argument("--flicker-prob", type=float, help="override preset flicker probability")
    p.add_argument("--flicker-scale", type=float, help="override preset flicker scale")
    p.add_argument("--dropout-prob", type=float, help="override preset dropout probability")

    p = sub.add_parser("flow", help="estimate flow for consecutive frame pairs")
    p.add_argument("--frames", required=True, help="sequence dir or directory of PGM frames")
    p.add_argument("--out", required=True)
    p.add_argument("--bidirectional", action="store_true")
    _add_flow_args(p)

    p = sub.add_parser("smooth", help="refine a probability-map sequence")
    p.add_argument("--in", dest="input", required=True, help="sequence dir with frames/ and probs/")
    p.add_argument("--out", required=True)
    p.add_argument("--verify", action="store_true",
                   help="assert fusion invariants on every pixel while running")
    _add_flow_args(p)
    _add_fusion_args(p)

    p = sub.add_parser("eval", help="compute stability metrics for a mask sequence")
    p.add_argument("--run", required=True, help="run dir with manifest.json and masks/")
    p.add_argument("--frames", help="frames for flow estimation (defaults to <run>/frames)")
    p.add_argument("--flow", help="directory of precomputed flow_fwd_*.flo files")
    p.add_argument("--out", help="output dir (defaults to the run dir)")
    _add_flow_args(p)
    _add_metric_args(p)

    p = sub.add_parser("compare", help="joint report for a baseline and an enhanced run")
    p.add_argument("--baseline", required=True, help="run dir containing metrics.csv")
    p.add_argument("--enhanced", required=True, help="run dir containing metrics.csv")
    p.add_argument("--out", required=True)
    _add_metric_args(p)

    p = sub.add_parser("plot", help="render per-frame metric charts to SVG")
    p.add_argument("--baseline", required=True, help="baseline metrics.csv")
    p.add_argument("--enhanced", required=True, help="enhanced metrics.csv")
    p.add_argument("--out", required=True)

    return parser


def _flow_params(args) -> FlowParams:
    return FlowParams(
        pyramid_levels=args.pyramid_levels,
        pyramid_scale=args.pyramid_scale,
        window_radius=args.window_radius,
        iterations_per_level=args.flow_iterations,
        poly_neighborhood=args.poly_neighborhood,
        poly_sigma=args.poly_sigma,
    )


def _fusion_params(args) -> FusionParams:
    mode, weight = parse_fusion_mode(args.fusion_mode)
    return FusionParams(
        epsilon=args.epsilon,
        kappa_min=args.kappa_min,
        kappa_max=args.kappa_max,
        normalize_entropy=args.normalize_entropy,
        fusion_mode=mode,
        fixed_weight=weight,
        disable_motion_uncertainty=args.disable_motion_uncertainty,
        disable_entropy=args.disable_entropy,
    )


def _run_config(args, command: str, out_dir: str) -> RunConfig:
    flow = _flow_params(args) if hasattr(args, "pyramid_levels") else FlowParams()
    if hasattr(args, "sigma_floor"):
        motion = MotionUncertaintyParams(args.sigma_floor, not args.fixed_sigma)
    else:
        motion = MotionUncertaintyParams()
    fusion = _fusion_params(args) if hasattr(args, "fusion_mode") else FusionParams()
    if hasattr(args, "uss_alpha"):
        weights = UssWeights(args.uss_alpha, args.uss_beta, args.uss_gamma)
        scope = args.uss_scope
        tolerance = args.boundary_tolerance
    else:
        weights = UssWeights()
        scope = "per-run"
        tolerance = 2.0
    return RunConfig(
        command=command,
        output_dir=str(out_dir),
        seed=getattr(args, "seed", None),
        flow=flow,
        motion=motion,
        fusion=fusion,
        threshold=getattr(args, "threshold", 0.5),
        boundary_tolerance=tolerance,
        uss_weights=weights,
        uss_scope=scope,
    )


# ---------------------------------------------------------------------------
# Subcommand bodies


def cmd_synth(args) -> int:
    out = Path(args.out)
    if args.scene_json:
        payload = json.loads(Path(args.scene_json).read_text(encoding="utf-8"))
        scene = synth.scene_from_dict(payload.get("scene", {}))
        degr = synth.degradation_from_dict(payload.get("degradation", {}))
        preset_name = f"file:{args.scene_json}"
    else:
        scene, degr = synth.preset(
            args.preset, seed=args.seed, width=args.width, height=args.height, frame_count=args.frames
        )
        preset_name = args.preset
    overrides = {
        "logit_noise_std": args.noise_std,
        "jitter_std": args.jitter_std,
        "flicker_prob": args.flicker_prob,
        "flicker_scale": args.flicker_scale,
        "dropout_prob": args.dropout_prob,
    }
    fields = {k: (v if v is not None else getattr(degr, k)) for k, v in overrides.items()}
    degr = synth.DegradationSpec(seed=degr.seed, **fields)

    generated = synth.generate(scene)
    probs = synth.degrade(generated.gt_masks, degr)

    manifest = SequenceManifest(
        width=scene.width,
        height=scene.height,
        frame_count=scene.frame_count,
        object_ids=tuple(generated.object_ids),
        fps=args.fps,
        source=f"synth:{preset_name}:seed={scene.seed}",
    )
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, manifest)
    for t, frame in enumerate(generated.frames):
        path = frame_path(out, t)
        path.parent.mkdir(parents=True, exist_ok=True)
        write_frame(path, frame)
        write_prob_planes(out, t, probs[t], manifest)
        for oid, mask in generated.gt_masks[t].items():
            mpath = mask_path(out, t, oid, gt=True)
            mpath.parent.mkdir(parents=True, exist_ok=True)
            write_mask(mpath, mask)
    gt_flow_dir = out / "gt_flow"
    gt_flow_dir.mkdir(parents=True, exist_ok=True)
    for t, fl in enumerate(generated.gt_flow):
        write_flo(gt_flow_dir / f"flow_fwd_{t:06d}.flo", fl)
    (out / "scene.json").write_text(
        json.dumps({"scene": synth.scene_to_dict(scene), "degradation": synth.degradation_to_dict(degr)},
                   indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    _run_config(args, "synth", out).write(out)
    print(f"wrote {scene.frame_count} frames to {out}")
    return EXIT_OK


def _resolve_frames_dir(path_text: str) -> Path:
    path = Path(path_text)
    if (path / FRAMES_DIR).is_dir():
        return path / FRAMES_DIR
    return path


def _sorted_frame_paths(frames_dir: Path) -> list[Path]:
    paths = sorted(frames_dir.glob("*.pgm"))
    if not paths:
        raise InvalidInputError(f"no PGM frames in {frames_dir}")
    return paths


def cmd_flow(args) -> int:
    frames_dir = _resolve_frames_dir(args.frames)
    paths = _sorted_frame_paths(frames_dir)
    if len(paths) < 2:
        raise InvalidInputError("need at least 2 frames for flow")
    params = _flow_params(args)
    out = Path(args.out)
    (out / FLOW_DIR).mkdir(parents=True, exist_ok=True)
    prev = read_frame(paths[0])
    for t in range(1, len(paths)):
        cur = read_frame(paths[t])
        write_flo(flow_path(out, t - 1), estimate_flow(prev, cur, params))
        if args.bidirectional:
            write_flo(flow_path(out, t - 1, backward=True), estimate_flow(cur, prev, params))
        prev = cur
    _run_config(args, "flow", out).write(out)
    n = len(paths) - 1
    print(f"wrote {n * 2 if args.bidirectional else n} flow files to {out / FLOW_DIR}")
    return EXIT_OK


def cmd_smooth(args) -> int:
    seq = Path(args.input)
    out = Path(args.out)
    manifest = read_manifest(seq)
    flow_params = _flow_params(args)
    motion_params = MotionUncertaintyParams(args.sigma_floor, not args.fixed_sigma)
    fusion_params = _fusion_params(args)

    def frames():
        for t in range(manifest.frame_count):
            path = frame_path(seq, t)
            if not path.exists():
                raise SequencingError(f"manifest declares frame {t} but {path} is missing")
            yield read_frame(path)

    def probs():
        for t in range(manifest.frame_count):
            path = probs_path(seq, t)
            if not path.exists():
                raise SequencingError(f"manifest declares frame {t} but {path} is missing")
            yield read_prob_planes(seq, t, manifest)

    out.mkdir(parents=True, exist_ok=True)
    write_manifest(out, manifest)
    _run_config(args, "smooth", out).write(out)

    diag_rows = []
    for result in run_sequence(
        frames(),
        probs(),
        flow_params,
        motion_params,
        fusion_params,
        threshold=args.threshold,
        verify=args.verify,
        expected_frames=manifest.frame_count,
    ):
        write_prob_planes(out, result.frame_index, result.refined, manifest)
        for oid, mask in result.masks.items():
            mpath = mask_path(out, result.frame_index, oid)
            mpath.parent.mkdir(parents=True, exist_ok=True)
            write_mask(mpath, mask)
        for oid in manifest.object_ids:
            row = result.diagnostics.scalar_row(oid)
            diag_rows.append((result.frame_index, oid, row))

    with (out / "diagnostics.csv").open("w", encoding="utf-8") as fh:
        fh.write("frame,object,flow_mag,mean_residual,mean_motion_unc,mean_entropy,mean_blend\n")
        for t, oid, row in diag_rows:
            cells = [str(t), str(oid)] + [
                "" if row[k] is None else f"{row[k]:.6g}"
                for k in ("flow_mag", "mean_residual", "mean_motion_unc", "mean_entropy", "mean_blend")
            ]
            fh.write(",".join(cells) + "\n")
    print(f"smoothed {manifest.frame_count} frames into {out}")
    return EXIT_OK


def _load_masks(run: Path, manifest: SequenceManifest) -> list[dict]:
    masks = []
    for t in range(manifest.frame_count):
        per_obj = {}
        for oid in manifest.object_ids:
            path = mask_path(run, t, oid)
            if not path.exists():
                raise InvalidInputError(f"missing mask file {path}")
            per_obj[oid] = read_mask(path)
        masks.append(per_obj)
    return masks


def cmd_eval(args) -> int:
    run = Path(args.run)
    out = Path(args.out) if args.out else run
    manifest = read_manifest(run)
    masks = _load_masks(run, manifest)

    flows = []
    if args.flow:
        flow_dir = Path(args.flow)
        for t in range(manifest.frame_count - 1):
            path = flow_dir / f"flow_fwd_{t:06d}.flo"
            if not path.exists():
                path = flow_dir / FLOW_DIR / f"flow_fwd_{t:06d}.flo"
            if not path.exists():
                raise InvalidInputError(f"missing flow file for pair {t}->{t + 1} under {args.flow}")
            flows.append(read_flo(path))
    else:
        frames_dir = _resolve_frames_dir(args.frames) if args.frames else run / FRAMES_DIR
        if not frames_dir.is_dir():
            raise InvalidInputError(
                "eval needs frames (--frames) or precomputed flow (--flow); "
                f"no frames directory at {frames_dir}"
            )
        params = _flow_params(args)
        paths = _sorted_frame_paths(frames_dir)
        if len(paths) != manifest.frame_count:
            raise InvalidInputError(
                f"{len(paths)} frames found, manifest declares {manifest.frame_count}"
            )
        prev = read_frame(paths[0])
        for t in range(1, len(paths)):
            cur = read_frame(paths[t])
            flows.append(estimate_flow(prev, cur, params))
            prev = cur

    weights = UssWeights(args.uss_alpha, args.uss_beta, args.uss_gamma)
    records = evaluate_masks(masks, flows, args.boundary_tolerance, weights)
    out.mkdir(parents=True, exist_ok=True)
    write_metrics_csv(out / "metrics.csv", records)
    write_summary_json(out / "summary.json", records)
    _run_config(args, "eval", out).write(out)
    print(f"evaluated {manifest.frame_count} frames; reports in {out}")
    return EXIT_OK


def _pooled_stats_by_object(base_records, enh_records):
    def series(records):
        per_obj: dict[int, dict[str, list[float]]] = {}
        for rec in sorted(records, key=lambda r: (r.object_id, r.frame_index)):
            comp = per_obj.setdefault(rec.object_id, {"wiou": [], "boundary_f": [], "persistence": []})
            comp["wiou"].append(rec.wiou)
            comp["boundary_f"].append(rec.boundary_f)
            comp["persistence"].append(1.0 - rec.dropout)
        return per_obj

    base, enh = series(base_records), series(enh_records)
    if set(base) != set(enh):
        raise InvalidInputError("runs track different object ids")
    stats: dict[int, dict[str, tuple[float, float]]] = {}
    for oid in base:
        stats[oid] = {
            key: pooled_robust_stats(base[oid][key], enh[oid][key])
            for key in ("wiou", "boundary_f", "persistence")
        }
    return stats


def cmd_compare(args) -> int:
    base_records = read_metrics_csv(Path(args.baseline) / "metrics.csv")
    enh_records = read_metrics_csv(Path(args.enhanced) / "metrics.csv")
    b_frames = sorted({r.frame_index for r in base_records})
    e_frames = sorted({r.frame_index for r in enh_records})
    if b_frames != e_frames:
        raise InvalidInputError(
            f"frame ranges differ: baseline has {len(b_frames)} frames, enhanced {len(e_frames)}"
        )
    weights = UssWeights(args.uss_alpha, args.uss_beta, args.uss_gamma)
    if args.uss_scope == "pooled":
        stats = _pooled_stats_by_object(base_records, enh_records)
        fill_uss(base_records, weights, stats)
        fill_uss(enh_records, weights, stats)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    payload = write_compare_json(
        out / "compare_report.json",
        base_records,
        enh_records,
        extra={
            "baseline_run": str(args.baseline),
            "enhanced_run": str(args.enhanced),
            "uss_scope": args.uss_scope,
        },
    )
    _run_config(args, "compare", out).write(out)
    tiou = payload["metrics"]["tiou"]
    print(f"tiou: {tiou['baseline_mean']} -> {tiou['enhanced_mean']}; report in {out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    base_records = read_metrics_csv(args.baseline)
    enh_records = read_metrics_csv(args.enhanced)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for metric, title in METRIC_TITLES.items():
        frames_b, base = frame_mean_series(base_records, metric)
        frames_e, enh = frame_mean_series(enh_records, metric)
        if frames_b.shape != frames_e.shape or (frames_b != frames_e).any():
            raise InvalidInputError(f"runs cover different frames for metric {metric}")
        write_metric_chart(
            out / f"{metric}.svg",
            title,
            frames_b.tolist(),
            [("baseline", base.tolist()), ("enhanced", enh.tolist())],
        )
    print(f"wrote {len(METRIC_TITLES)} charts to {out}")
    return EXIT_OK


COMMANDS = {
    "synth": cmd_synth,
    "flow": cmd_flow,
    "smooth": cmd_smooth,
    "eval": cmd_eval,
    "compare": cmd_compare,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SequencingError as exc:
        print(f"sequencing error: {exc}", file=sys.stderr)
        return EXIT_SEQUENCING
    except (FormatError, InvalidInputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_IO
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ToolError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
