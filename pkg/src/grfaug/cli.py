"""Command-line front end.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical or
validation failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import imageio, pipeline, spectral
from .grf import FieldSpec, synthesize_field
from .pipeline import AugmentConfig, ConfigError, SampledTransform

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_VALIDATION = 0, 1, 2, 3
MANIFEST_VERSION = 1
MANIFEST_NAME = "manifest.json"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _pair(cast):
    def parse(text):
        parts = text.replace(",", " ").split()
        if len(parts) != 2:
            raise argparse.ArgumentTypeError(f"expected two values, got {text!r}")
        return [cast(p) for p in parts]
    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="grfaug", description="Gaussian random field image augmentation")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser, required=True)

    aug = sub.add_parser("augment", help="augment an image or a directory of images")
    aug.add_argument("--input", required=True, help="PNG/PPM file or directory")
    aug.add_argument("--output", required=True, help="output directory")
    aug.add_argument("--config", help="JSON config file")
    aug.add_argument("--profile", choices=("paper", "none"), default="paper",
                     help="'paper' resizes to 224x224 unless the config says otherwise")
    aug.add_argument("--gamma-range", type=_pair(float), metavar="LO,HI")
    aug.add_argument("--alpha-range", type=_pair(float), metavar="LO,HI")
    aug.add_argument("--probability", type=float)
    aug.add_argument("--transforms", help="comma-separated subset of " +
                     ",".join(k.value for k in pipeline.ALL_KINDS))
    aug.add_argument("--composition-size", type=int)
    aug.add_argument("--interpolation", choices=("bilinear", "nearest"))
    aug.add_argument("--padding", choices=("edge", "zero"))
    aug.add_argument("--resize", type=_pair(int), metavar="W,H")
    aug.add_argument("--seed", type=int)
    aug.add_argument("--count", type=int, default=1, help="variants per input image")
    aug.add_argument("--threads", type=int, default=1)
    aug.add_argument("--replay", help="manifest whose recorded transforms are re-applied")

    fld = sub.add_parser("field", help="write one random field")
    fld.add_argument("--width", type=int, required=True)
    fld.add_argument("--height", type=int, required=True)
    fld.add_argument("--gamma", type=float, required=True)
    fld.add_argument("--alpha", type=float, default=1.0)
    fld.add_argument("--seed", type=int, default=0)
    fld.add_argument("--out", required=True, help="grayscale PNG path")
    fld.add_argument("--raw", help="also write a GRF1 float32 grid here")

    spc = sub.add_parser("spectrum", help="check the power-law slope of synthesized fields")
    spc.add_argument("--gamma", type=float, required=True)
    spc.add_argument("--size", type=int, default=256)
    spc.add_argument("--trials", type=int, default=64)
    spc.add_argument("--seed", type=int, default=0)
    spc.add_argument("--bins", type=int)
    spc.add_argument("--tolerance", type=float, default=0.5,
                     help="exit 3 if |slope + gamma| exceeds this")
    spc.add_argument("--out", required=True, help="CSV path")

    bench = sub.add_parser("bench", help="measure throughput")
    bench.add_argument("--size", type=int, default=224)
    bench.add_argument("--iterations", type=int, default=20)
    bench.add_argument("--threads", type=int, default=1)
    bench.add_argument("--seed", type=int, default=0)
    return parser


def config_from_args(args) -> AugmentConfig:
    data = {}
    if args.config:
        text = Path(args.config).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: config must be a JSON object")
    overrides = {
        "gamma_range": args.gamma_range,
        "alpha_range": args.alpha_range,
        "probability": args.probability,
        "transforms": args.transforms.split(",") if args.transforms else None,
        "composition_size": args.composition_size,
        "interpolation": args.interpolation,
        "padding": args.padding,
        "resize_to": args.resize,
        "seed": args.seed,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    if args.profile == "paper" and "resize_to" not in data:
        data["resize_to"] = list(pipeline.PAPER_RESIZE)
    return AugmentConfig.from_dict(data)


def _digest(images) -> str:
    h = hashlib.sha256()
    for img in images:
        h.update(imageio.to_uint8(img).tobytes())
    return h.hexdigest()


def run_augment(args) -> int:
    if args.count < 1:
        raise UsageError("--count must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    replay = None
    if args.replay:
        replay = json.loads(Path(args.replay).read_text())
        if replay.get("version") != MANIFEST_VERSION:
            raise ConfigError(f"unsupported manifest version {replay.get('version')!r}")
        config = AugmentConfig.from_dict(replay["config"])
    else:
        config = config_from_args(args)

    sources = imageio.list_images(args.input)
    if not sources:
        print(f"no PNG/PPM images in {args.input}", file=sys.stderr)
        return EXIT_IO
    images = [imageio.read_image(p) for p in sources]
    out_dir = Path(args.output)
    out_dir.mkdir(parents=True, exist_ok=True)

    if replay is not None:
        by_name = {p.name: img for p, img in zip(sources, images)}
        jobs = []
        for entry in replay["entries"]:
            if entry["input"] not in by_name:
                raise FileNotFoundError(f"replay input {entry['input']} not found in {args.input}")
            t = SampledTransform.from_dict(entry["transform"]) if entry["transform"] else None
            jobs.append((entry, by_name[entry["input"]], t))
    else:
        jobs = []
        for k, (path, img) in enumerate(zip(sources, images)):
            for j in range(args.count):
                index = k * args.count + j
                entry = {
                    "input": path.name,
                    "output": f"{path.stem}_aug{j}.png",
                    "image_index": index,
                    "variant": j,
                }
                jobs.append((entry, img, pipeline.sample_transform(config, index)))

    def work(job):
        entry, img, t = job
        return pipeline.augment_one(img, config, entry["image_index"], t)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            outputs = list(pool.map(work, jobs))
    else:
        outputs = [work(job) for job in jobs]

    entries = []
    for (entry, _, t), out in zip(jobs, outputs):
        name = Path(entry["output"]).name
        imageio.write_png(out_dir / name, out)
        entries.append({
            "input": entry["input"],
            "output": name,
            "image_index": entry["image_index"],
            "variant": entry["variant"],
            "applied": t is not None,
            "transform": t.to_dict() if t is not None else None,
        })
    manifest = {"version": MANIFEST_VERSION, "config": config.to_dict(), "entries": entries}
    (out_dir / MANIFEST_NAME).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    print(f"wrote {len(entries)} images to {out_dir}")
    return EXIT_OK


def run_field(args) -> int:
    spec = FieldSpec(args.width, args.height, args.gamma, args.alpha, args.seed)
    f = synthesize_field(spec)
    imageio.write_png(args.out, imageio.field_to_gray(f.values, spec.alpha))
    if args.raw:
        imageio.write_field_raw(args.raw, f.values)
    return EXIT_OK


def run_spectrum(args) -> int:
    if args.size < 4 or args.trials < 1:
        raise UsageError("--size must be >= 4 and --trials >= 1")
    fields = (
        synthesize_field(FieldSpec(args.size, args.size, args.gamma, 1.0, args.seed + t))
        for t in range(args.trials)
    )
    est = spectral.with_fit(spectral.ensemble_power_spectrum(fields, args.bins))
    expected = spectral.expected_power(est, args.gamma)
    with open(args.out, "w") as fh:
        fh.write("k,power,expected_power\n")
        for k, p, e in zip(est.k_bins, est.power, expected):
            fh.write(f"{k:.9g},{p:.9g},{e:.9g}\n")
        lo, hi = est.fit_range
        fh.write(f"# fitted_slope={est.fitted_slope:.6f} gamma={args.gamma:g} "
                 f"fit_range={lo:.4g}:{hi:.4g} trials={args.trials} size={args.size}\n")
    ok = abs(est.fitted_slope + args.gamma) <= args.tolerance
    print(f"fitted slope {est.fitted_slope:.4f} (expected {-args.gamma:g}): {'ok' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_VALIDATION


def bench_config(seed: int) -> AugmentConfig:
    """Heaviest default-range setting: three composed kinds, color included."""
    return AugmentConfig(probability=1.0, transforms=pipeline.ALL_KINDS,
                         composition_size=3, seed=seed)


def run_bench(args) -> int:
    if args.iterations < 1:
        raise UsageError("--iterations must be >= 1")
    if args.size < 1 or args.threads < 1:
        raise UsageError("--size and --threads must be >= 1")
    n, size = args.iterations, args.size
    start = time.perf_counter()
    for i in range(n):
        synthesize_field(FieldSpec(size, size, 8.5, 1 / 3, args.seed + i))
    field_s = time.perf_counter() - start

    rng = np.random.default_rng(args.seed)
    images = [rng.random((size, size, 3)) for _ in range(n)]
    config = bench_config(args.seed)
    start = time.perf_counter()
    outputs = pipeline.augment_batch(images, config, threads=args.threads)
    aug_s = time.perf_counter() - start

    report = {
        "size": size,
        "iters": n,
        "threads": args.threads,
        "fields_per_s": n / max(field_s, 1e-12),
        "augments_per_s": n / max(aug_s, 1e-12),
        "ms_per_augment": 1000.0 * aug_s / n,
        "output_sha256": _digest(outputs),
    }
    print(f"fields:   {report['fields_per_s']:.1f}/s at {size}x{size}")
    print(f"augments: {report['augments_per_s']:.1f}/s ({report['ms_per_augment']:.1f} ms each, "
          f"{args.threads} thread(s))")
    print(json.dumps(report, sort_keys=True))
    return EXIT_OK


COMMANDS = {"augment": run_augment, "field": run_field, "spectrum": run_spectrum, "bench": run_bench}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ConfigError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, pipeline.AugmentError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
