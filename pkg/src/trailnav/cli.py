"""Command-line entry point: replay, simulate, dataprep and eval.

Every run writes a JSON file that embeds the effective configuration and
seed next to its CSV outputs, so any output directory can be reproduced.
Errors exit with the code of their error class (see ``trailnav.errors``).
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from trailnav import __version__
from trailnav.config import RunConfig, describe
from trailnav.errors import EmptyDirectory, IoFailure, MalformedImage, TrailNavError
from trailnav.mask_core import SegMask, load_mask, save_mask
from trailnav.planner import CommandLog, Pipeline

log = logging.getLogger("trailnav")

MASK_SUFFIXES = {".png", ".pgm", ".pnm", ".bmp", ".tif", ".tiff"}


def _write_json(path: Path, obj) -> None:
    try:
        path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _open_out(path: Path):
    try:
        return open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc


def _out_dir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out}: {exc}") from exc
    return out


def _list_files(directory, suffixes=None) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise EmptyDirectory(f"{d} is not a directory")
    files = sorted(p for p in d.iterdir() if p.is_file() and not p.name.startswith("."))
    if suffixes is not None:
        files = [p for p in files if p.suffix.lower() in suffixes]
    if not files:
        raise EmptyDirectory(f"no input files in {d}")
    return files


def build_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    for item in getattr(args, "set", None) or []:
        cfg.set(item)
    if getattr(args, "seed", None) is not None:
        cfg.update({"seed": args.seed})
    return cfg


def _meta(cfg: RunConfig, command: str, **extra) -> dict:
    return {"tool": "trailnav", "version": __version__, "command": command,
            "seed": cfg["seed"], "config": cfg.as_dict(), **extra}


# --- replay --------------------------------------------------------------

def cmd_replay(args) -> int:
    cfg = build_config(args)
    if args.no_compensation:
        cfg.update({"comp.enabled": False})
    files = _list_files(args.mask_dir)
    out = _out_dir(args.out)
    pipe = Pipeline(cfg.pipeline_config())
    load_errors = []
    rejects = stops = 0
    last = None
    with _open_out(out / "commands.csv") as fh:
        writer = CommandLog(fh, record_latency=args.record_latency)
        for path in files:
            try:
                mask = load_mask(path)
            except TrailNavError as exc:
                log.warning("skipping %s: %s", path.name, exc)
                load_errors.append({"file": path.name, "error": type(exc).__name__})
                mask = None
            res = pipe(mask)
            rejects += not res.valid_frame
            stops += res.command.safety_stop
            writer.write(res)
            last = res.command
    summary = _meta(cfg, "replay", frames=len(files), rejects=rejects, safety_stops=stops,
                    load_errors=load_errors,
                    final_command={"yaw_rate": last.yaw_rate, "lat_vel": last.lateral_velocity,
                                   "fwd_vel": last.forward_velocity, "safety_stop": last.safety_stop})
    _write_json(out / "summary.json", summary)
    print(f"replayed {len(files)} frames, {rejects} rejected -> {out}")
    return 0


# --- simulate ------------------------------------------------------------

def _plot_trace(result, world, path: Path) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    s = np.linspace(0.0, world.length, 400)
    cx, cy = [], []
    for v in s:
        x, y, _ = world.pose_at(v)
        cx.append(x)
        cy.append(y)
    tr = np.array([row[1:3] for row in result.trace])
    fig, ax = plt.subplots(figsize=(5, 5))
    # y is to the right of the heading, so plot (y, x) for a map view
    ax.plot(cy, cx, "k--", lw=1, label="centerline")
    ax.plot(tr[:, 1], tr[:, 0], "r-", lw=1.5, label="robot")
    ax.set_aspect("equal")
    ax.set_xlabel("right [m]")
    ax.set_ylabel("forward [m]")
    ax.legend(loc="best")
    fig.savefig(path, dpi=100)
    plt.close(fig)


def cmd_simulate(args) -> int:
    from trailnav.sim import TrailWorld, run_episode
    from trailnav.sim.scenarios import SWEEP_SPEEDS

    cfg = build_config(args)
    if args.no_compensation:
        cfg.update({"comp.enabled": False})
    world = TrailWorld.load(args.world)
    if args.sweep:
        speeds = SWEEP_SPEEDS
    elif args.speed is not None:
        speeds = (args.speed,)
    else:
        speeds = (cfg["planner.forward_speed"],)
    out = _out_dir(args.out)
    duration = None if cfg["sim.duration_s"] == "auto" else float(cfg["sim.duration_s"])
    records = []
    for speed in speeds:
        run_cfg = cfg.with_speed(speed)
        result = run_episode(world, run_cfg.noise(), run_cfg.sim_pipeline_config(), run_cfg.camera(),
                             duration=duration, substep=run_cfg["sim.substep_s"])
        tag = f"v{speed:.2f}"
        with _open_out(out / f"trace_{tag}.csv") as fh:
            result.write_trace(fh)
        with _open_out(out / f"commands_{tag}.csv") as fh:
            result.write_commands(fh, record_latency=args.record_latency)
        if args.emit_plots:
            _plot_trace(result, world, out / f"trace_{tag}.png")
        records.append({"speed": speed, "compensation": run_cfg["comp.enabled"],
                        "trace_csv": f"trace_{tag}.csv", "commands_csv": f"commands_{tag}.csv",
                        **result.metrics.to_dict()})
        m = result.metrics
        print(f"speed {speed:.2f} m/s: completed={m.completed} max_dev={m.max_lateral_dev:.3f} m "
              f"rms_dev={m.rms_lateral_dev:.3f} m")
    _write_json(out / "metrics.json", _meta(cfg, "simulate", world=world.to_dict(), runs=records))
    return 0


# --- dataprep ------------------------------------------------------------

def _read_id_grid(path: Path) -> np.ndarray:
    try:
        with Image.open(path) as im:
            if im.mode not in ("L", "P"):
                raise MalformedImage(f"{path}: expected single-channel ids, got mode {im.mode}")
            return np.asarray(im)
    except (UnidentifiedImageError, OSError) as exc:
        raise MalformedImage(f"{path}: {exc}") from exc


def _mask_name(path: Path) -> str:
    return path.stem + ".png"


def cmd_relabel(args) -> int:
    from trailnav.dataprep import LabelMap, relabel

    label_map = LabelMap.load(args.map) if args.map else LabelMap.cityscapes()
    out = _out_dir(args.out)
    files = _list_files(args.src_dir, MASK_SUFFIXES)
    for path in files:
        save_mask(relabel(_read_id_grid(path), label_map), out / _mask_name(path))
    _write_json(out / "relabel.json", {"label_map": label_map.name, "files": [p.name for p in files],
                                       "mapping": {str(k): int(v) for k, v in sorted(label_map.mapping.items())}})
    print(f"relabeled {len(files)} grids -> {out}")
    return 0


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected WIDTHxHEIGHT, got {text!r}") from exc
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size must be positive")
    return w, h


def cmd_boxes(args) -> int:
    from trailnav.dataprep import boxes_to_mask, read_box_csv

    groups = read_box_csv(args.csv)
    out = _out_dir(args.out)
    stats = {}
    for image, boxes in groups.items():
        mask = boxes_to_mask(boxes, args.size)
        save_mask(mask, out / _mask_name(Path(image)))
        stats[image] = {"boxes": len(boxes), "traversable_fraction": mask.count(1) / (mask.width * mask.height)}
    _write_json(out / "boxes.json", {"size": list(args.size), "images": stats})
    print(f"rasterized {len(groups)} images -> {out}")
    return 0


def cmd_augment(args) -> int:
    from trailnav.dataprep import augment

    out = _out_dir(args.out)
    files = _list_files(args.src_dir, MASK_SUFFIXES)
    records = []
    for i, path in enumerate(files):
        # one stream per image keeps results independent of directory size
        rng = np.random.default_rng([args.seed, i])
        mask, rec = augment(load_mask(path), rng)
        save_mask(mask, out / _mask_name(path))
        records.append({"file": path.name, **rec.to_dict()})
    _write_json(out / "augment.json", {"seed": args.seed, "records": records})
    print(f"augmented {len(files)} masks -> {out}")
    return 0


# --- eval ----------------------------------------------------------------

EVAL_HEADER = ("image", "evaluated_pixels", "cross_entropy", "iou_traversable", "iou_untraversable",
               "pixel_accuracy")


def _load_prediction(path: Path):
    from trailnav.evalkit import ProbMask

    if path.suffix.lower() == ".npy":
        try:
            arr = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise MalformedImage(f"{path}: {exc}") from exc
        try:
            return ProbMask(arr)
        except ValueError as exc:
            raise MalformedImage(f"{path}: {exc}") from exc
    return load_mask(path)


def _cell(v) -> str:
    return "" if v is None else repr(float(v))


def cmd_eval(args) -> int:
    from trailnav.errors import DimensionMismatch
    from trailnav.evalkit import evaluate, overlap_metrics

    gt_files = _list_files(args.gt_dir, MASK_SUFFIXES)
    preds = {p.stem: p for p in _list_files(args.pred_dir, MASK_SUFFIXES | {".npy"})}
    out = _out_dir(args.out)
    rows, missing = [], []
    gt_all, pred_all = [], []
    ce_sum, ce_pixels = 0.0, 0
    for gpath in gt_files:
        ppath = preds.get(gpath.stem)
        if ppath is None:
            missing.append(gpath.name)
            continue
        gt, pred = load_mask(gpath), _load_prediction(ppath)
        rep = evaluate(gt, pred)
        hard = pred if isinstance(pred, SegMask) else pred.argmax()
        gt_all.append(gt.data.ravel())
        pred_all.append(hard.data.ravel())
        if rep.cross_entropy is not None:
            ce_sum += rep.cross_entropy * rep.evaluated_pixels
            ce_pixels += rep.evaluated_pixels
        rows.append((gpath.stem, rep))
    if not rows:
        raise DimensionMismatch("no ground-truth file has a matching prediction")
    pooled = overlap_metrics(SegMask(np.concatenate(gt_all)[np.newaxis, :]),
                             SegMask(np.concatenate(pred_all)[np.newaxis, :]))
    with _open_out(out / "per_image.csv") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(EVAL_HEADER)
        for name, rep in rows:
            iou = rep.per_class_iou
            w.writerow([name, rep.evaluated_pixels, _cell(rep.cross_entropy), _cell(iou["traversable"]),
                        _cell(iou["untraversable"]), _cell(rep.pixel_accuracy)])
    report = {
        "images": len(rows),
        "missing_predictions": missing,
        "cross_entropy": ce_sum / ce_pixels if ce_pixels else None,
        **pooled,
    }
    _write_json(out / "report.json", report)
    print(f"evaluated {len(rows)} images: accuracy={pooled['pixel_accuracy']:.4f}")
    return 0


# --- parser --------------------------------------------------------------

def _add_config_args(p) -> None:
    p.add_argument("--config", help="config file (JSON or key = value lines)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key (repeatable)")
    p.add_argument("--seed", type=int, help="RNG seed (overrides config)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="trailnav", description="Trail-following navigation from segmentation masks.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log debug output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("replay", help="run the pipeline over a directory of masks")
    p.add_argument("mask_dir")
    p.add_argument("--out", default="replay_out")
    p.add_argument("--record-latency", action="store_true", help="fill the latency_ms column (output no longer deterministic)")
    p.add_argument("--no-compensation", action="store_true")
    _add_config_args(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("simulate", help="closed-loop run on a trail world")
    p.add_argument("world")
    p.add_argument("--out", default="sim_out")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--speed", type=float, help="forward speed, m/s")
    g.add_argument("--sweep", action="store_true", help="run each of 0.2, 0.4, 0.6, 0.8, 1.0 m/s")
    p.add_argument("--no-compensation", action="store_true")
    p.add_argument("--record-latency", action="store_true")
    p.add_argument("--emit-plots", action="store_true", help="write trace plots (needs matplotlib)")
    _add_config_args(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("dataprep", help="dataset preparation")
    dsub = p.add_subparsers(dest="dataprep_command", required=True)
    d = dsub.add_parser("relabel", help="map source class ids to the three navigation classes")
    d.add_argument("src_dir")
    d.add_argument("--out", required=True)
    d.add_argument("--map", help="label map JSON (default: Cityscapes ids)")
    d.set_defaults(func=cmd_relabel)
    d = dsub.add_parser("boxes", help="rasterize rectangle labels (CSV image,x,y,w,h)")
    d.add_argument("csv")
    d.add_argument("--size", type=_parse_size, required=True, metavar="WxH")
    d.add_argument("--out", required=True)
    d.set_defaults(func=cmd_boxes)
    d = dsub.add_parser("augment", help="random flip and small rotation of masks")
    d.add_argument("src_dir")
    d.add_argument("--out", required=True)
    d.add_argument("--seed", type=int, default=0)
    d.set_defaults(func=cmd_augment)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("gt_dir")
    p.add_argument("pred_dir")
    p.add_argument("--out", default="eval_out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("config", help="list every config key with its default")
    p.set_defaults(func=lambda a: print(describe()) or 0)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except TrailNavError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ImportError as exc:
        print(f"error: missing optional dependency: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
