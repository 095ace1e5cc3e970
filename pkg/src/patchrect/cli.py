"""Batch command-line tool: defend images, evaluate detections, build attack fixtures, benchmark.

Exit codes: 0 success, 1 internal error, 2 input problem (missing or
undecodable files, bad arguments), 3 backend failure (remote service
unreachable or misbehaving), 4 schema violation in a JSON input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import statistics
import sys
import time
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict
from datetime import datetime, timezone
from pathlib import Path

from .config import BACKENDS, REMOTE_MODES, VARIANTS, DefenseConfig, load_config_file
from .evaluation import (
    SchemaError,
    ap50,
    asr_creating,
    asr_hiding,
    average_recall,
    EvalReport,
    load_coco_annotations,
    load_detections,
)
from .patches import PatchPlacement, apply_patch, paste_geometry, synth_noise_patch
from .pipeline import defend
from .raster import PngError, load_png, save_mask_png, save_png
from .regeneration import BackendError, BackendUnavailableError, backend_from_config

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_SCHEMA = 4

SWEEP_RATIOS = (0.2, 0.25, 0.3)


class CliError(Exception):
    """Fatal CLI problem carrying its exit code."""

    def __init__(self, message: str, exit_code: int = EXIT_INPUT) -> None:
        super().__init__(message)
        self.exit_code = exit_code


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _collect_pngs(raw: str) -> list[Path]:
    p = Path(raw)
    if p.is_file():
        return [p]
    if p.is_dir():
        found = sorted(p.glob("*.png"))
        if not found:
            raise CliError(f"no .png files in directory {p}", EXIT_INPUT)
        return found
    raise CliError(f"input path does not exist: {p}", EXIT_INPUT)


_CONFIG_FIELDS = (
    "n_grids",
    "steps",
    "canonical_size",
    "blur_kernel",
    "degeneracy_epsilon",
    "variant",
    "backend",
    "backend_url",
    "backend_timeout",
    "remote_mode",
    "constant_value",
    "seed",
    "workers",
)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="JSON config file (flags override it)")
    parser.add_argument("--n-grids", type=int, dest="n_grids")
    parser.add_argument("--steps", type=int)
    parser.add_argument("--canonical-size", type=int, dest="canonical_size")
    parser.add_argument("--blur-kernel", type=int, dest="blur_kernel")
    parser.add_argument("--degeneracy-epsilon", type=float, dest="degeneracy_epsilon")
    parser.add_argument("--variant", choices=VARIANTS)
    parser.add_argument("--backend", choices=BACKENDS)
    parser.add_argument("--backend-url", dest="backend_url")
    parser.add_argument("--backend-timeout", type=float, dest="backend_timeout")
    parser.add_argument("--remote-mode", choices=REMOTE_MODES, dest="remote_mode")
    parser.add_argument("--constant-value", type=float, dest="constant_value")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--workers", type=int)
    parser.add_argument(
        "--no-rectification",
        action="store_true",
        help="skip localization; output the raw regeneration",
    )


def _config_from_args(args: argparse.Namespace) -> DefenseConfig:
    file_values = load_config_file(args.config) if args.config else None
    overrides = {name: getattr(args, name, None) for name in _CONFIG_FIELDS}
    if getattr(args, "no_rectification", False):
        overrides["rectification_enabled"] = False
    try:
        return DefenseConfig.from_sources(file_values, overrides)
    except ValueError as exc:
        raise CliError(f"bad configuration: {exc}", EXIT_INPUT) from exc


def _failure_category(exc: Exception) -> str:
    if isinstance(exc, BackendError):
        return "backend"
    if isinstance(exc, (FileNotFoundError, PngError)):
        return "input"
    return "internal"


_FAILURE_EXIT = {"backend": EXIT_BACKEND, "input": EXIT_INPUT, "internal": EXIT_INTERNAL}


def cmd_defend(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    backend = backend_from_config(cfg)
    inputs = _collect_pngs(args.inputs)
    out_dir = Path(args.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def one(path: Path) -> dict:
        image = load_png(path)
        result = defend(image, cfg, backend)
        outputs = {
            "defended": f"{path.stem}.defended.png",
            "mask": f"{path.stem}.mask.png",
            "regen": f"{path.stem}.regen.png",
        }
        save_png(result.output, out_dir / outputs["defended"])
        save_mask_png(result.adv_mask, out_dir / outputs["mask"])
        save_png(result.regen, out_dir / outputs["regen"])
        return {
            "input": str(path),
            "sha256": _sha256(path),
            "width": image.width,
            "height": image.height,
            "outputs": outputs,
            "flagged_fraction": result.flagged_fraction,
            "timings": dict(result.timings),
        }

    results: list[dict] = []
    failures: list[dict] = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [(path, pool.submit(one, path)) for path in inputs]
        for path, future in futures:  # input order keeps the manifest deterministic
            try:
                results.append(future.result())
            except Exception as exc:  # noqa: BLE001 - every failure is reported per image
                failures.append(
                    {
                        "input": str(path),
                        "category": _failure_category(exc),
                        "error": type(exc).__name__,
                        "message": str(exc),
                    }
                )

    manifest = {
        "command": "defend",
        "created_utc": _utc_now(),
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "backend": asdict(backend.info),
        "results": results,
        "failures": failures,
    }
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    print(f"defended {len(results)}/{len(inputs)} image(s) -> {out_dir}")
    for failure in failures:
        print(f"FAILED [{failure['category']}] {failure['input']}: {failure['message']}",
              file=sys.stderr)
    for category in ("backend", "input", "internal"):
        if any(f["category"] == category for f in failures):
            return _FAILURE_EXIT[category]
    return EXIT_OK


def _parse_category(raw: str | None):
    if raw is None:
        return None
    return int(raw) if raw.lstrip("-").isdigit() else raw


def cmd_eval(args: argparse.Namespace) -> int:
    truths = load_coco_annotations(args.ground_truth)
    detections = load_detections(args.detections)
    report = EvalReport()

    if args.mode in ("map", "ar"):
        report.ap50 = ap50(detections, truths)
        report.ar = average_recall(detections, truths)
        images = {g.image_id for g in truths} | {d.image_id for d in detections}
        report.per_image = {
            str(image_id): {
                "ground_truth": sum(g.image_id == image_id for g in truths),
                "detections": sum(d.image_id == image_id for d in detections),
            }
            for image_id in sorted(images, key=repr)
        }
    elif args.mode == "asr-hiding":
        targets = [g for g in truths if not g.is_patch]
        if not targets:
            raise CliError("asr-hiding needs non-patch ground-truth targets", EXIT_INPUT)
        kwargs = {}
        if args.score_threshold is not None:
            kwargs["score_threshold"] = args.score_threshold
        if args.iou_threshold is not None:
            kwargs["iou_threshold"] = args.iou_threshold
        report.asr = asr_hiding(detections, targets, **kwargs)
        report.per_image = {
            str(t.image_id): {"targets": sum(x.image_id == t.image_id for x in targets)}
            for t in targets
        }
    else:  # asr-creating
        patches = [g for g in truths if g.is_patch]
        if not patches:
            raise CliError(
                "asr-creating needs ground-truth boxes marked is_patch", EXIT_INPUT
            )
        kwargs = {"targeted_class": _parse_category(args.targeted_class)}
        if args.score_threshold is not None:
            kwargs["score_threshold"] = args.score_threshold
        if args.iou_threshold is not None:
            kwargs["iou_threshold"] = args.iou_threshold
        report.asr = asr_creating(detections, patches, **kwargs)
        report.per_image = {
            str(p.image_id): {"patches": sum(x.image_id == p.image_id for x in patches)}
            for p in patches
        }

    payload = json.dumps(report.to_dict(), indent=2)
    print(payload)
    if args.output:
        Path(args.output).write_text(payload + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_attack_fixture(args: argparse.Namespace) -> int:
    inputs = _collect_pngs(args.inputs)
    truths = [g for g in load_coco_annotations(args.targets) if not g.is_patch]
    if args.patch:
        patch = load_png(args.patch)
        patch_desc = {"source": str(args.patch)}
    else:
        patch = synth_noise_patch(args.synth_side, args.synth_seed)
        patch_desc = {"source": "synthetic-noise", "side": args.synth_side, "seed": args.synth_seed}

    raw = json.loads(Path(args.targets).read_text(encoding="utf-8"))
    file_to_id = {
        img["file_name"]: img["id"]
        for img in raw.get("images", [])
        if isinstance(img, dict) and "file_name" in img and "id" in img
    }

    def image_id_for(path: Path):
        if path.name in file_to_id:
            return file_to_id[path.name]
        return int(path.stem) if path.stem.isdigit() else path.stem

    ratios = list(SWEEP_RATIOS) if args.sweep else [args.ratio]
    out_root = Path(args.output_dir)
    records: list[dict] = []
    missing: list[str] = []
    for ratio in ratios:
        out_dir = out_root / f"ratio_{ratio:.2f}" if args.sweep else out_root
        out_dir.mkdir(parents=True, exist_ok=True)
        placement = PatchPlacement(ratio, (args.offset_x, args.offset_y))
        for path in inputs:
            image_id = image_id_for(path)
            boxes = [g.bbox for g in truths if g.image_id == image_id]
            if not boxes:
                if str(path) not in missing:
                    missing.append(str(path))
                continue
            image = load_png(path)
            rows = []
            for box in boxes:
                left, top, pw, ph = paste_geometry(patch, box, placement)
                image = apply_patch(image, patch, box, placement)
                rows.append(
                    {
                        "bbox": [box.x, box.y, box.w, box.h],
                        "patch_width": pw,
                        "patch_height": ph,
                        "left": left,
                        "top": top,
                    }
                )
            out_name = f"{path.stem}.attacked.png"
            save_png(image, out_dir / out_name)
            records.append(
                {
                    "input": str(path),
                    "image_id": image_id,
                    "ratio": ratio,
                    "output": str((out_dir / out_name).relative_to(out_root)),
                    "boxes": rows,
                }
            )

    manifest = {
        "command": "attack-fixture",
        "created_utc": _utc_now(),
        "patch": patch_desc,
        "ratios": ratios,
        "images": records,
        "missing_targets": missing,
    }
    out_root.mkdir(parents=True, exist_ok=True)
    (out_root / "placements.json").write_text(
        json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
    )
    print(f"patched {len(records)} image/ratio combination(s) -> {out_root}")
    if missing:
        for path in missing:
            print(f"FAILED [input] {path}: no ground-truth boxes for this image", file=sys.stderr)
        return EXIT_INPUT
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    cfg = _config_from_args(args)
    backend = backend_from_config(cfg)
    inputs = _collect_pngs(args.corpus)

    regen_samples: list[float] = []
    rect_samples: list[float] = []
    t_start = time.perf_counter()
    for path in inputs:
        image = load_png(path)
        result = defend(image, cfg, backend)
        regen_samples.append(result.timings["regeneration_s"])
        rect_samples.append(result.timings["rectification_s"])
    total = time.perf_counter() - t_start

    def stage(samples: list[float]) -> dict:
        return {
            "samples_s": samples,
            "mean_s": statistics.mean(samples),
            "median_s": statistics.median(samples),
        }

    report = {
        "command": "bench",
        "created_utc": _utc_now(),
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "backend": asdict(backend.info),
        "image_count": len(inputs),
        "stages": {"regeneration": stage(regen_samples), "rectification": stage(rect_samples)},
        "total_s": total,
    }
    if args.output:
        Path(args.output).write_text(json.dumps(report, indent=2) + "\n", encoding="utf-8")
    if args.json:
        print(json.dumps(report, indent=2))
    else:
        print(f"benchmark over {len(inputs)} image(s), backend {backend.info.name}")
        print(f"{'stage':<14}{'mean (s)':>10}{'median (s)':>12}")
        for name, samples in (("regeneration", regen_samples), ("rectification", rect_samples)):
            print(f"{name:<14}{statistics.mean(samples):>10.4f}{statistics.median(samples):>12.4f}")
        print(f"total wall time: {total:.3f}s")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="patchrect",
        description="Defend object-detector inputs against adversarial patches.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_defend = sub.add_parser("defend", help="defend a PNG file or a directory of PNGs")
    p_defend.add_argument("inputs", help="input PNG file or directory")
    p_defend.add_argument("--output-dir", required=True)
    _add_config_flags(p_defend)
    p_defend.set_defaults(func=cmd_defend)

    p_eval = sub.add_parser("eval", help="score detector outputs against ground truth")
    p_eval.add_argument("--ground-truth", required=True, metavar="JSON")
    p_eval.add_argument("--detections", required=True, metavar="JSON")
    p_eval.add_argument(
        "--mode", required=True, choices=("map", "ar", "asr-hiding", "asr-creating")
    )
    p_eval.add_argument("--score-threshold", type=float, dest="score_threshold")
    p_eval.add_argument("--iou-threshold", type=float, dest="iou_threshold")
    p_eval.add_argument("--targeted-class", dest="targeted_class")
    p_eval.add_argument("--output", metavar="JSON")
    p_eval.set_defaults(func=cmd_eval)

    p_attack = sub.add_parser("attack-fixture", help="paste patches onto victim boxes")
    p_attack.add_argument("inputs", help="input PNG file or directory")
    p_attack.add_argument("--targets", required=True, metavar="JSON",
                          help="ground-truth boxes to attack")
    p_attack.add_argument("--output-dir", required=True)
    p_attack.add_argument("--patch", metavar="PNG", help="patch image to paste")
    p_attack.add_argument("--synth-side", type=int, default=64, dest="synth_side",
                          help="side of the synthetic noise patch (when --patch is omitted)")
    p_attack.add_argument("--synth-seed", type=int, default=0, dest="synth_seed")
    p_attack.add_argument("--ratio", type=float, default=0.2,
                          help="patch height as a fraction of the box diagonal")
    p_attack.add_argument("--sweep", action="store_true",
                          help=f"ignore --ratio and emit one set per ratio in {SWEEP_RATIOS}")
    p_attack.add_argument("--offset-x", type=int, default=0, dest="offset_x")
    p_attack.add_argument("--offset-y", type=int, default=0, dest="offset_y")
    p_attack.set_defaults(func=cmd_attack_fixture)

    p_bench = sub.add_parser("bench", help="time the defense stages over a corpus")
    p_bench.add_argument("corpus", help="directory of PNG images")
    p_bench.add_argument("--output", metavar="JSON", help="also write the report to a file")
    p_bench.add_argument("--json", action="store_true", help="print the JSON report to stdout")
    _add_config_flags(p_bench)
    p_bench.set_defaults(func=cmd_bench)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except BackendUnavailableError as exc:
        print(f"backend unreachable: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND
    except (FileNotFoundError, PngError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except Exception:  # noqa: BLE001 - last-resort diagnostics for exit code 1
        traceback.print_exc()
        return EXIT_INTERNAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
