"""Command line front end: apply, fit, compress, bench, export, inspect, serve.

Exit codes: 0 success, 1 runtime failure, 2 usage error.  All numeric output
uses 6 significant digits so scripted consumers see stable text.
"""

from __future__ import annotations

import argparse
import hashlib
import statistics
import sys
import time

import numpy as np

from . import __version__
from .als import cp_als_compress
from .color import mean_delta_e00, psnr
from .lowrank import (
    CpFactors,
    LorLutModel,
    component_curves,
    compose_lut,
    dense_param_count,
    reconstruct_residual,
    residual_param_count,
)
from .luts import apply_lut, identity_lut, lut_grid_size
from .model_io import (
    MODEL_FORMAT_LINE,
    load_image,
    read_cube,
    read_model,
    save_image,
    write_cube,
    write_model,
)
from .optim import FitConfig, apply_lut_model, fit_image_pair
from .losses import LossWeights


class CliError(Exception):
    """Runtime failure reported with exit code 1."""


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _parse_scales(text: str, parser: argparse.ArgumentParser) -> np.ndarray:
    try:
        return np.array([float(p) for p in text.split(",") if p.strip() != ""])
    except ValueError:
        parser.error(f"--scales must be comma-separated numbers, got {text!r}")


def _read_text(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise CliError(f"{path} is not a text document: {exc}") from exc


def _load_model_or_cube(path: str) -> tuple[LorLutModel | None, np.ndarray | None]:
    """Returns (model, None) for a model file, (None, lut) for a cube."""
    text = _read_text(path)
    head = text.lstrip().splitlines()
    if head and head[0].strip() == MODEL_FORMAT_LINE:
        model, _ = read_model(text)
        return model, None
    return None, read_cube(text)


def _load_image(path: str) -> np.ndarray:
    try:
        return load_image(path)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot load image {path}: {exc}") from exc


def cmd_apply(args: argparse.Namespace) -> int:
    model, lut = _load_model_or_cube(args.transform)
    if model is not None:
        scales = None
        if args.scales is not None:
            scales = _parse_scales(args.scales, args.parser)
            if scales.size != model.rank:
                args.parser.error(
                    f"--scales expects {model.rank} values for this model, got {scales.size}"
                )
        lut = compose_lut(model, scales)
    elif args.scales is not None:
        args.parser.error("--scales applies to model files, not cube files")

    image = _load_image(args.input)
    out = apply_lut(lut, image, kind=args.interp)
    try:
        save_image(args.output, out)
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot write {args.output}: {exc}") from exc

    if args.reference is not None:
        ref = _load_image(args.reference)
        if ref.shape != out.shape:
            raise CliError(
                f"reference dimensions {ref.shape} do not match output {out.shape}"
            )
        written = np.round(np.clip(out, 0.0, 1.0) * 255.0) / 255.0
        print(f"PSNR {_fmt(psnr(written, ref))} dB")
    return 0


def cmd_fit(args: argparse.Namespace) -> int:
    input_img = _load_image(args.input)
    target = _load_image(args.target)
    if input_img.shape != target.shape:
        raise CliError(
            f"input {input_img.shape[1]}x{input_img.shape[0]} and target "
            f"{target.shape[1]}x{target.shape[0]} dimensions differ"
        )
    bases = []
    for path in args.basis or []:
        _, lut = _load_model_or_cube(path)
        if lut is None:
            raise CliError(f"basis {path} must be a cube file")
        bases.append(lut)
    weights = LossWeights(l1=args.l1, delta_e=args.delta_e, tv=args.tv, l2=args.l2)
    config = FitConfig(
        steps=args.steps,
        base_lr=args.lr,
        weights=weights,
        rank=args.rank,
        num_bases=len(bases),
        grid_size=args.grid,
        rng_seed=args.seed,
    )
    try:
        model, report = fit_image_pair(input_img, target, config, bases=bases)
    except RuntimeError as exc:
        raise CliError(str(exc)) from exc

    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(write_model(model, meta=report.as_json_dict()))
    print(f"steps {report.steps}")
    print(f"final loss {_fmt(report.final_loss)}")
    print(f"PSNR {_fmt(report.psnr)} dB")
    print(f"SSIM {_fmt(report.ssim) if report.ssim is not None else 'n/a'}")
    print(f"deltaE00 {_fmt(report.mean_de00)}")
    return 0


def cmd_compress(args: argparse.Namespace) -> int:
    lut = read_cube(_read_text(args.cube))
    g = lut_grid_size(lut)
    residual = lut - identity_lut(g)
    result = cp_als_compress(residual, args.rank, max_iters=args.max_iters)
    model = LorLutModel(grid_size=g, factors=result.factors)
    meta = {
        "source": "compress",
        "relative_error": result.relative_error,
        "sweeps": result.sweeps,
    }
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(write_model(model, meta=meta))
    print(f"relative error {_fmt(result.relative_error)}")
    print(f"sweeps {result.sweeps}")
    print(
        f"parameters {residual_param_count(g, args.rank)} vs {dense_param_count(g)} dense"
    )
    return 0


def _parse_resolution(
    text: str, parser: argparse.ArgumentParser
) -> tuple[int, int]:
    parts = text.lower().split("x")
    if len(parts) == 2:
        try:
            w, h = int(parts[0]), int(parts[1])
            if w > 0 and h > 0:
                return w, h
        except ValueError:
            pass
    parser.error(f"--resolution must look like 1920x1080, got {text!r}")


def cmd_bench(args: argparse.Namespace) -> int:
    width, height = _parse_resolution(args.resolution, args.parser)
    rng = np.random.default_rng(args.seed)
    image = rng.random((height, width, 3))
    factors = CpFactors(
        us=rng.normal(0.0, args.grid**-0.5, (args.rank, args.grid)),
        vs=rng.normal(0.0, args.grid**-0.5, (args.rank, args.grid)),
        ws=rng.normal(0.0, args.grid**-0.5, (args.rank, args.grid)),
        cs=rng.normal(0.0, 0.1, (args.rank, 3)),
    )
    lut = identity_lut(args.grid) + reconstruct_residual(factors)

    digest = hashlib.sha256()
    digest.update(image.tobytes())
    digest.update(lut.tobytes())
    print(f"checksum {digest.hexdigest()[:16]}")

    recon_ms = _time_repeats(lambda: reconstruct_residual(factors), args.repeat)
    print(
        f"reconstruct grid={args.grid} rank={args.rank} "
        f"mean_ms={_fmt(statistics.fmean(recon_ms))} "
        f"stddev_ms={_fmt(statistics.pstdev(recon_ms))}"
    )

    apply_ms = _time_repeats(
        lambda: apply_lut(lut, image, kind=args.interp), args.repeat
    )
    mean_ms = statistics.fmean(apply_ms)
    mpps = (width * height / 1e6) / (mean_ms / 1e3)
    print(
        f"apply interp={args.interp} resolution={width}x{height} grid={args.grid} "
        f"mean_ms={_fmt(mean_ms)} stddev_ms={_fmt(statistics.pstdev(apply_ms))} "
        f"mpps={_fmt(mpps)}"
    )
    return 0


def _time_repeats(fn, repeats: int) -> list[float]:
    fn()
    times = []
    for _ in range(repeats):
        started = time.perf_counter()
        fn()
        times.append((time.perf_counter() - started) * 1e3)
    return times


def cmd_export_cube(args: argparse.Namespace) -> int:
    model, _ = _load_model_or_cube(args.model)
    if model is None:
        raise CliError(f"{args.model} is not a model file")
    scales = None
    if args.scales is not None:
        scales = _parse_scales(args.scales, args.parser)
        if scales.size != model.rank:
            args.parser.error(
                f"--scales expects {model.rank} values for this model, got {scales.size}"
            )
    with open(args.output, "w", encoding="utf-8") as fh:
        fh.write(write_cube(compose_lut(model, scales)))
    return 0


def cmd_inspect(args: argparse.Namespace) -> int:
    model, _ = _load_model_or_cube(args.model)
    if model is None:
        raise CliError(f"{args.model} is not a model file")
    print(f"grid {model.grid_size}")
    print(f"bases {model.num_bases}")
    print(f"rank {model.rank}")
    for k, alpha in enumerate(model.alphas):
        print(f"alpha {k} {_fmt(alpha)}")
    for r in range(model.rank):
        curves = component_curves(model.factors, r)
        print(f"component {r}")
        print(f"  magnitude {_fmt(curves['magnitude'])}")
        print("  c " + " ".join(_fmt(x) for x in curves["c"]))
        for key in ("u", "v", "w"):
            print(f"  {key} " + " ".join(_fmt(x) for x in curves[key]))
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    preload = None
    if args.model is not None:
        preload, _ = read_model(_read_text(args.model))
        print(f"preloaded model grid={preload.grid_size} rank={preload.rank}")
    app = create_app(
        max_sessions=args.max_sessions,
        ttl_s=args.ttl,
        fit_step_cap=args.fit_step_cap,
        default_model=preload,
        static_dir=args.static,
    )
    print(f"lorlut {__version__} serving on http://{args.host}:{args.port}")
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    except (OSError, SystemExit) as exc:
        raise CliError(f"server failed: {exc}") from exc
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lorlut", description="Low-rank 3D LUT engine"
    )
    parser.add_argument("--version", action="version", version=f"lorlut {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("apply", help="run an image through a model or cube")
    p.add_argument("transform", help="model file or .cube file")
    p.add_argument("input", help="input image (PNG or P6)")
    p.add_argument("output", help="output image path")
    p.add_argument("--scales", help="comma-separated per-component scales")
    p.add_argument(
        "--interp", choices=("trilinear", "tetrahedral"), default="trilinear"
    )
    p.add_argument("--reference", help="image to report PSNR against")
    p.set_defaults(func=cmd_apply)

    p = sub.add_parser("fit", help="fit a model to an input/target image pair")
    p.add_argument("input")
    p.add_argument("target")
    p.add_argument("output", help="output model path")
    p.add_argument("--rank", type=int, default=8)
    p.add_argument("--grid", type=int, default=33)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--lr", type=float, default=5e-3)
    p.add_argument("--l1", type=float, default=1.0)
    p.add_argument("--delta-e", type=float, default=0.0)
    p.add_argument("--tv", type=float, default=1e-3)
    p.add_argument("--l2", type=float, default=1e-3)
    p.add_argument(
        "--basis",
        action="append",
        metavar="CUBE",
        help="add a basis LUT (repeatable); fusion weights are fitted",
    )
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("compress", help="factor an existing cube into a model")
    p.add_argument("cube")
    p.add_argument("output", help="output model path")
    p.add_argument("--rank", type=int, default=8)
    p.add_argument("--max-iters", type=int, default=200)
    p.set_defaults(func=cmd_compress)

    p = sub.add_parser("bench", help="time residual reconstruction and apply")
    p.add_argument("--resolution", default="1920x1080")
    p.add_argument("--grid", type=int, default=33)
    p.add_argument("--rank", type=int, default=32)
    p.add_argument(
        "--interp", choices=("trilinear", "tetrahedral"), default="trilinear"
    )
    p.add_argument("--repeat", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("export-cube", help="compose a model and write a cube")
    p.add_argument("model")
    p.add_argument("output", help="output cube path")
    p.add_argument("--scales", help="comma-separated per-component scales")
    p.set_defaults(func=cmd_export_cube)

    p = sub.add_parser("inspect", help="print per-component factor curves")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)

    p = sub.add_parser("serve", help="run the viewer HTTP service")
    p.add_argument("model", nargs="?", help="model preloaded into new sessions")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--max-sessions", type=int, default=16)
    p.add_argument("--ttl", type=float, default=1800.0)
    p.add_argument("--fit-step-cap", type=int, default=2000)
    p.add_argument("--static", help="directory of viewer files to host at /")
    p.set_defaults(func=cmd_serve)

    for sp in sub.choices.values():
        sp.set_defaults(parser=sp)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
