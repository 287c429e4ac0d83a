"""Command-line entry point orchestrating the pipeline.

Subcommands: preprocess, segment, edges, augment, split, train, eval,
predict. Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric
failure. Every run prints its resolved configuration and seed so results
can be replayed exactly.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import augment as aug
from . import config as cfgmod
from . import dataset, edge, filters, imgcore, metrics, nn, report, segment
from .errors import DataError, NumericError
from .rng import Rng, mix64

CONFIG_ENV_VAR = "LEAFPIPE_CONFIG"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we want exit code 1
        raise UsageError(f"{self.prog}: {message}")


def _add_common_seed(p, default=0):
    p.add_argument("--seed", type=int, default=default, help="random seed")


def build_parser() -> _Parser:
    parser = _Parser(prog="leafpipe",
                     description="Leaf-disease image pipeline: preprocessing, "
                                 "segmentation, edges, augmentation, CNN training.",
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    fmt = dict(formatter_class=argparse.ArgumentDefaultsHelpFormatter)

    p = sub.add_parser("preprocess", help="resize/grayscale/blur images", **fmt)
    p.add_argument("--input", required=True, help="input image file or directory")
    p.add_argument("--output", required=True, help="output image file or directory")
    p.add_argument("--size", type=int, default=256, help="target square size")
    p.add_argument("--gray", action="store_true", help="convert to grayscale")
    p.add_argument("--blur-sigma", type=float, default=0.0,
                   help="Gaussian blur sigma (0 disables)")

    p = sub.add_parser("segment", help="Otsu threshold an image", **fmt)
    p.add_argument("--image", required=True, help="input image")
    p.add_argument("--out", required=True, help="output binary image (P5)")
    p.add_argument("--report", default=None, help="also write the threshold report here")

    p = sub.add_parser("edges", help="Canny edge detection", **fmt)
    p.add_argument("--image", required=True, help="input image")
    p.add_argument("--out", required=True, help="output edge map (P5, {0,255})")
    p.add_argument("--sigma", type=float, default=1.0, help="Gaussian width")
    p.add_argument("--low", type=float, default=0.1,
                   help="low threshold, fraction of max gradient magnitude")
    p.add_argument("--high", type=float, default=0.2,
                   help="high threshold, fraction of max gradient magnitude")

    p = sub.add_parser("augment", help="write augmented copies of a directory", **fmt)
    p.add_argument("--input", required=True, help="input image directory")
    p.add_argument("--output", required=True, help="output directory")
    p.add_argument("--count", type=int, default=1, help="augmented copies per image")
    _add_common_seed(p)
    p.add_argument("--mode", choices=["joint", "one_per_copy"], default="joint",
                   help="apply gated operators jointly, or one operator per copy")
    p.add_argument("--probability", type=float, default=0.5,
                   help="per-operator gate probability in joint mode")
    for op in ("scale", "rotate", "flip", "gamma", "pca", "noise"):
        p.add_argument(f"--no-{op}", action="store_true", help=f"disable {op}")
    p.add_argument("--threads", type=int, default=1,
                   help="worker threads (any value gives identical outputs)")

    p = sub.add_parser("split", help="write a train/test split manifest", **fmt)
    p.add_argument("--data", required=True, help="dataset root (class-per-folder)")
    p.add_argument("--out", required=True, help="manifest CSV path")
    p.add_argument("--ratio", type=float, default=0.8, help="train fraction")
    _add_common_seed(p)
    p.add_argument("--no-stratified", action="store_true",
                   help="plain shuffle instead of per-class stratification")

    p = sub.add_parser("train", help="train the CNN on a dataset", **fmt)
    p.add_argument("--data", required=True, help="dataset root (class-per-folder)")
    p.add_argument("--config", default=None,
                   help=f"pipeline config file (default: ${CONFIG_ENV_VAR} or built-ins)")
    p.add_argument("--out", required=True, help="checkpoint output path (.lpnn)")
    p.add_argument("--history-csv", default=None,
                   help="history CSV path (default: history.csv next to --out)")
    p.add_argument("--split-out", default=None,
                   help="split manifest path (default: split_manifest.csv next to --out)")
    p.add_argument("--plot", default=None,
                   help="history figure path (default: history.png next to --out)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--epochs", type=int, default=None, help="override config epochs")

    p = sub.add_parser("eval", help="evaluate a checkpoint on the test partition", **fmt)
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--data", required=True, help="dataset root")
    p.add_argument("--split-manifest", required=True,
                   help="manifest from training; guards against train-set evaluation")
    p.add_argument("--confusion-csv", default=None,
                   help="confusion CSV path (default: confusion.csv next to --model)")
    p.add_argument("--plot", default=None,
                   help="confusion figure path (default: confusion.png next to --model)")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")

    p = sub.add_parser("predict", help="classify a single image", **fmt)
    p.add_argument("--model", required=True, help="checkpoint path")
    p.add_argument("--image", required=True, help="image to classify")

    return parser


# ---------------------------------------------------------------------------
# subcommand implementations
# ---------------------------------------------------------------------------


def _iter_image_files(root: Path):
    return sorted(p for p in root.rglob("*")
                  if p.is_file() and p.suffix.lower() in dataset.IMAGE_SUFFIXES)


def _preprocess_image(src: Path, args) -> imgcore.ImageBuffer:
    img = imgcore.resize(imgcore.load_image(src), args.size, args.size)
    if args.gray:
        img = imgcore.to_grayscale(img)
    if args.blur_sigma > 0:
        img = filters.gaussian_blur(img, sigma=args.blur_sigma)
    return img


def _suffix_for(img: imgcore.ImageBuffer, suffix: str) -> str:
    if suffix.lower() in (".pgm", ".ppm"):
        return ".pgm" if img.channels == 1 else ".ppm"
    return suffix


def cmd_preprocess(args) -> int:
    src = Path(args.input)
    if src.is_dir():
        files = _iter_image_files(src)
        if not files:
            raise DataError(f"no images under {src}")
        out_root = Path(args.output)
        for f in files:
            img = _preprocess_image(f, args)
            target = (out_root / f.relative_to(src)).with_suffix(
                _suffix_for(img, f.suffix))
            target.parent.mkdir(parents=True, exist_ok=True)
            imgcore.save_image(img, target)
        print(f"preprocessed {len(files)} images -> {out_root}")
    else:
        img = _preprocess_image(src, args)
        dst = Path(args.output)
        dst.parent.mkdir(parents=True, exist_ok=True)
        imgcore.save_image(img, dst)
        print(f"preprocessed {src} -> {args.output}")
    return 0


def cmd_segment(args) -> int:
    img = imgcore.to_grayscale(imgcore.load_image(args.image))
    result = segment.otsu_threshold(segment.histogram(img))
    binary = segment.binarize(img, result.t)
    imgcore.save_image(binary, args.out)
    lines = [
        f"threshold_bin = {result.t}",
        f"omega1 = {result.omega1:.6f}",
        f"omega2 = {result.omega2:.6f}",
        f"var1 = {result.var1:.6f}",
        f"var2 = {result.var2:.6f}",
        f"within_class_variance = {result.within_class_variance:.6f}",
    ]
    text = "\n".join(lines)
    print(text)
    if args.report:
        Path(args.report).write_text(text + "\n")
    print(f"binary image -> {args.out}")
    return 0


def cmd_edges(args) -> int:
    img = imgcore.load_image(args.image)
    edges = edge.canny(img, sigma=args.sigma, low=args.low, high=args.high)
    imgcore.save_image(edges.to_image(), args.out)
    print(f"edge map ({int(edges.bits.sum())} on-pixels) -> {args.out}")
    return 0


def cmd_augment(args) -> int:
    src = Path(args.input)
    if not src.is_dir():
        raise DataError(f"input directory not found: {src}")
    files = _iter_image_files(src)
    if not files:
        raise DataError(f"no images under {src}")
    out_root = Path(args.output)
    out_root.mkdir(parents=True, exist_ok=True)
    if args.count < 1:
        raise UsageError("--count must be >= 1")

    cfg = aug.AugmentConfig(
        seed=args.seed,
        scale=not args.no_scale,
        rotate=not args.no_rotate,
        flip=not args.no_flip,
        gamma=not args.no_gamma,
        pca=not args.no_pca,
        noise=not args.no_noise,
        probability=args.probability,
        mode=args.mode,
    )
    print(f"augment: seed = {args.seed}, mode = {cfg.mode}, "
          f"operators = {','.join(cfg.enabled_operators()) or 'none'}")

    color_pca = None
    if cfg.pca:
        rgb = [imgcore.load_image(f) for f in files[:64]]
        rgb = [im for im in rgb if im.channels == 3]
        if rgb:
            color_pca = aug.fit_color_pca(rgb)

    def work(task):
        index, f, copy = task
        img = imgcore.load_image(f)
        rng = Rng(mix64(args.seed, index, copy))
        trace: list = []
        out_img = aug.augment(img, cfg, rng, pca=color_pca, trace=trace)
        rel = f.relative_to(src)
        suffix = _suffix_for(out_img, f.suffix)
        target = out_root / rel.parent / f"{f.stem}_aug{copy:03d}{suffix}"
        target.parent.mkdir(parents=True, exist_ok=True)
        imgcore.save_image(out_img, target)
        ops = "|".join(name for name, _ in trace)
        params = "|".join(f"{name}={value:.6g}" for name, value in trace)
        return (str(f), str(target), ops, params)

    tasks = [(i, f, c) for i, f in enumerate(files) for c in range(args.count)]
    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            rows = list(pool.map(work, tasks))
    else:
        rows = [work(t) for t in tasks]

    manifest = out_root / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "output", "operators", "parameters"])
        writer.writerows(rows)
    print(f"wrote {len(rows)} augmented images and {manifest}")
    return 0


def cmd_split(args) -> int:
    ds = dataset.scan_dataset(args.data)
    sp = dataset.split(ds, ratio=args.ratio, seed=args.seed,
                       stratified=not args.no_stratified)
    dataset.export_split_manifest(sp, args.out, root=args.data)
    print(f"split: seed = {args.seed}, ratio = {args.ratio}, "
          f"train = {len(sp.train)}, test = {len(sp.test)} -> {args.out}")
    return 0


def _load_pipeline_config(args) -> cfgmod.PipelineConfig:
    overrides: dict = {"data_root": args.data}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "epochs", None) is not None:
        overrides["epochs"] = args.epochs
    path = args.config or os.environ.get(CONFIG_ENV_VAR)
    if path:
        return cfgmod.load_config(path, overrides)
    return cfgmod.parse_config("", overrides)


def _fit_color_pca(cfg: cfgmod.PipelineConfig, pipeline: dataset.BatchPipeline,
                   items) -> aug.ColorPCA | None:
    if not (cfg.augment and cfg.pca and cfg.channels == "rgb"):
        return None
    sample = []
    for path, _ in items[: cfg.pca_sample_images]:
        try:
            img = imgcore.load_image(path)
        except DataError:
            if pipeline.strict:
                raise
            continue
        if img.channels == 3:
            sample.append(imgcore.resize(img, cfg.image_size, cfg.image_size))
    return aug.fit_color_pca(sample) if sample else None


def cmd_train(args) -> int:
    cfg = _load_pipeline_config(args)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    history_csv = Path(args.history_csv) if args.history_csv else out.parent / "history.csv"
    split_out = Path(args.split_out) if args.split_out else out.parent / "split_manifest.csv"
    plot_path = Path(args.plot) if args.plot else out.parent / "history.png"

    print("resolved config:")
    for line in cfg.describe().splitlines():
        print(f"  {line}")

    ds = dataset.scan_dataset(cfg.data_root)
    sp = dataset.split(ds, ratio=cfg.split_ratio, seed=cfg.seed,
                       stratified=cfg.stratified)
    print(f"dataset: {len(ds.items)} images, {ds.num_classes} classes "
          f"{ds.classes}; train = {len(sp.train)}, test = {len(sp.test)}")

    color_pca = _fit_color_pca(cfg, cfg.to_pipeline(), sp.train)
    pipeline = cfg.to_pipeline(color_pca=color_pca)
    train_cfg = cfg.to_train_config()
    net = nn.build_network(cfg.arch, cfg.input_shape(), ds.num_classes,
                           seed=cfg.seed, precision=cfg.precision,
                           weight_init=cfg.weight_init)
    print(f"network: {len(net.layers)} layers, {net.param_count} parameters")

    def sink(rec: metrics.EpochRecord):
        print(f"epoch {rec.epoch:3d}: train_loss={rec.train_loss:.4f} "
              f"train_acc={rec.train_acc:.4f} val_loss={rec.val_loss:.4f} "
              f"val_acc={rec.val_acc:.4f}")

    history = nn.train(net, sp, train_cfg, pipeline, sink=sink)

    meta = cfg.preprocess_meta()
    meta["classes"] = ",".join(sp.classes)
    meta["seed"] = str(cfg.seed)
    meta["arch"] = cfg.arch
    meta["precision"] = cfg.precision
    nn.save_checkpoint(net, out, meta=meta)
    metrics.export_history(history, history_csv)
    dataset.export_split_manifest(sp, split_out, root=cfg.data_root)
    print(f"checkpoint -> {out}")
    print(f"history CSV -> {history_csv}")
    print(f"split manifest -> {split_out}")
    if not args.no_plot:
        report.plot_history(history, plot_path)
        print(f"history figure -> {plot_path}")
    return 0


def _classes_from_meta(net: nn.Network) -> list[str]:
    names = net.meta.get("classes", "")
    classes = [c for c in names.split(",") if c]
    if len(classes) != net.num_classes:
        raise DataError("checkpoint metadata lists "
                        f"{len(classes)} classes for a {net.num_classes}-way model")
    return classes


def cmd_eval(args) -> int:
    net = nn.load_checkpoint(args.model)
    classes = _classes_from_meta(net)
    pipeline = cfgmod.pipeline_from_meta(net.meta)
    if not Path(args.data).is_dir():
        raise DataError(f"dataset root not found: {args.data}")
    sp = dataset.load_split_manifest(args.split_manifest, classes, root=args.data)
    if not sp.test:
        raise DataError(f"manifest {args.split_manifest} has no test rows")
    print(f"eval: model = {args.model}, test items = {len(sp.test)}")

    trues, preds = [], []
    for batch in pipeline.batches(sp.test, batch_size=32, train=False):
        logits = net.logits(batch.inputs)
        preds.extend(int(i) for i in logits.argmax(axis=1))
        trues.extend(int(t) for t in batch.labels)
    if not trues:
        raise DataError("no readable test images")
    cm = metrics.confusion(trues, preds, net.num_classes)

    acc = metrics.accuracy(cm)
    macro_p = metrics.macro_average(metrics.precision(cm))
    macro_r = metrics.macro_average(metrics.recall(cm))
    print(f"accuracy = {acc:.6f}")
    print(f"macro_precision = {macro_p:.6f}" if macro_p is not None
          else "macro_precision = undefined")
    print(f"macro_recall = {macro_r:.6f}" if macro_r is not None
          else "macro_recall = undefined")

    model_dir = Path(args.model).parent
    confusion_csv = Path(args.confusion_csv) if args.confusion_csv else model_dir / "confusion.csv"
    metrics.export_confusion(cm, classes, confusion_csv)
    print(f"confusion CSV -> {confusion_csv}")
    if not args.no_plot:
        plot_path = Path(args.plot) if args.plot else model_dir / "confusion.png"
        report.plot_confusion(cm, classes, plot_path)
        print(f"confusion figure -> {plot_path}")
    return 0


def cmd_predict(args) -> int:
    net = nn.load_checkpoint(args.model)
    classes = _classes_from_meta(net)
    pipeline = cfgmod.pipeline_from_meta(net.meta)
    img = imgcore.load_image(args.image)
    x = pipeline.prepare(img)
    index, probs = nn.predict(net, x)
    print(f"{classes[index]} p={probs[index]:.6f}")
    return 0


_HANDLERS = {
    "preprocess": cmd_preprocess,
    "segment": cmd_segment,
    "edges": cmd_edges,
    "augment": cmd_augment,
    "split": cmd_split,
    "train": cmd_train,
    "eval": cmd_eval,
    "predict": cmd_predict,
}


def run(argv=None) -> int:
    """Parse and dispatch; returns the process exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help()
            return 1
        return _HANDLERS[args.command](args)
    except SystemExit as exc:  # argparse --help
        code = exc.code if exc.code is not None else 0
        return int(code) if isinstance(code, int) else 1
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
