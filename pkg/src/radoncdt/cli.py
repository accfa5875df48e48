"""Command-line front end.

Exit codes: 0 success, 1 experiment acceptance failure (the transform space
did not beat the image space), 2 usage or data error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .datasets import SynthConfig
from .errors import RadonCDTError, TemplateMismatch
from .experiment import KINDS, run_experiment
from .gridio import RcdtRepresentation, load_pgm, normalize_density, read_grid, save_pgm, write_grid
from .radon import RadonConfig, default_t_count, radon_forward
from .rcdt import (
    Template,
    builtin_image,
    image_hash,
    interpolate_pair,
    rcd_distance,
    rcdt_forward,
    rcdt_inverse,
    transform_distance,
)

GLOBAL_DEFAULTS = {"seed": 0, "angles": 180, "template": "builtin:gaussian", "out": None}
OUTPUT_MAXVAL = 65535


class UsageError(Exception):
    pass


def _add_globals(parser, suppress: bool):
    def default(name):
        return argparse.SUPPRESS if suppress else GLOBAL_DEFAULTS[name]

    parser.add_argument("--seed", type=int, default=default("seed"), help="random seed")
    parser.add_argument("--angles", type=int, default=default("angles"), help="number of projection angles")
    parser.add_argument("--template", default=default("template"),
                        help="template PGM path, builtin:gaussian or builtin:disk")
    parser.add_argument("--out", default=default("out"), help="output file")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="radoncdt", description="Radon-CDT image transform tools")
    _add_globals(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _add_globals(common, suppress=True)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("radon", parents=[common], help="sinogram of a PGM image")
    p.add_argument("--input", required=True)

    p = sub.add_parser("transform", parents=[common], help="Radon-CDT of a PGM image")
    p.add_argument("--input", required=True)

    p = sub.add_parser("invert", parents=[common], help="image from a stored representation")
    p.add_argument("--input", required=True)
    p.add_argument("--size", type=int, default=None, help="builtin template size (inferred if omitted)")

    p = sub.add_parser("distance", parents=[common], help="distance between two PGM images")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--mode", choices=("rcd", "transform"), default="rcd")

    p = sub.add_parser("interpolate", parents=[common], help="transform-space interpolation")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--alpha", type=float, required=True)

    p = sub.add_parser("experiment", parents=[common], help="separability experiment with CSV and PNG report")
    p.add_argument("--kind", choices=KINDS, default="synthetic")
    p.add_argument("--family", choices=("translation", "scaling", "both"), default="translation")
    p.add_argument("--n", type=int, default=100, help="samples per class")
    p.add_argument("--sigma", type=float, default=0.08)
    p.add_argument("--grid", type=int, default=64)
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--outdir", default=None)
    return parser


def _validate(args):
    if args.angles < 1:
        raise UsageError("--angles must be at least 1")
    needs_out = {"radon", "transform", "invert", "interpolate"}
    if args.command in needs_out and not args.out:
        raise UsageError(f"{args.command} requires --out")
    if args.command == "interpolate" and not 0.0 <= args.alpha <= 1.0:
        raise UsageError("--alpha must lie in [0, 1]")
    if args.command == "experiment":
        if args.folds < 2:
            raise UsageError("--folds must be at least 2")
        if args.n < args.folds:
            raise UsageError("--n must be at least --folds")
        if args.outdir is None and args.out is None:
            raise UsageError("experiment requires --outdir")


def _load_image(path) -> np.ndarray:
    return normalize_density(load_pgm(path))


def _template(source: str, shape, config: RadonConfig) -> Template:
    if source.startswith("builtin:"):
        return Template.builtin(source.split(":", 1)[1], shape, config)
    img = _load_image(source)
    if img.shape != tuple(shape):
        raise TemplateMismatch(f"template is {img.shape[1]}x{img.shape[0]}, images are {shape[1]}x{shape[0]}")
    return Template(img, config)


def _template_for(rep: RcdtRepresentation, source: str, size, config: RadonConfig) -> Template:
    """Rebuild the template of a stored representation, matching by hash."""
    if not source.startswith("builtin:"):
        img = _load_image(source)
        return Template(img, config)
    name = source.split(":", 1)[1]
    k = rep.shape[0]
    sizes = [size] if size else [n for n in range(1, k + 1) if default_t_count((n, n)) == k]
    for n in sizes:
        if image_hash(builtin_image(name, n)) == rep.template_hash:
            return Template.builtin(name, n, config)
    raise TemplateMismatch(f"template mismatch: representation was not computed against {source}")


def cmd_radon(args) -> int:
    img = _load_image(args.input)
    write_grid(radon_forward(img, RadonConfig(args.angles)), args.out)
    return 0


def cmd_transform(args) -> int:
    img = _load_image(args.input)
    template = _template(args.template, img.shape, RadonConfig(args.angles))
    write_grid(rcdt_forward(img, template), args.out)
    return 0


def cmd_invert(args) -> int:
    rep = read_grid(args.input)
    if not isinstance(rep, RcdtRepresentation):
        raise TemplateMismatch("input is not a transform representation")
    template = _template_for(rep, args.template, args.size, RadonConfig(rep.shape[1]))
    save_pgm(rcdt_inverse(rep, template), args.out, maxval=OUTPUT_MAXVAL)
    return 0


def cmd_distance(args) -> int:
    a, b = _load_image(args.a), _load_image(args.b)
    config = RadonConfig(args.angles)
    if args.mode == "rcd":
        d = rcd_distance(a, b, config)
    else:
        template = _template(args.template, a.shape, config)
        d = transform_distance(rcdt_forward(a, template), rcdt_forward(b, template))
    print(f"{d:.6e}")
    return 0


def cmd_interpolate(args) -> int:
    a, b = _load_image(args.a), _load_image(args.b)
    template = _template(args.template, a.shape, RadonConfig(args.angles))
    img = interpolate_pair(rcdt_forward(a, template), rcdt_forward(b, template), args.alpha, template)
    save_pgm(img, args.out, maxval=OUTPUT_MAXVAL)
    return 0


def cmd_experiment(args) -> int:
    config = SynthConfig(size=args.grid, sigma=args.sigma, n_per_class=args.n, seed=args.seed, family=args.family)
    template = _template(args.template, (args.grid, args.grid), RadonConfig(args.angles))
    outdir = Path(args.outdir or args.out)
    result = run_experiment(args.kind, config, template, args.folds, outdir)
    print(f"image-space accuracy: {result.image_accuracy:.4f}")
    print(f"rcdt-space accuracy: {result.rcdt_accuracy:.4f}")
    return 0 if result.rcdt_accuracy >= result.image_accuracy else 1


COMMANDS = {
    "radon": cmd_radon,
    "transform": cmd_transform,
    "invert": cmd_invert,
    "distance": cmd_distance,
    "interpolate": cmd_interpolate,
    "experiment": cmd_experiment,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        _validate(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"radoncdt: {exc}", file=sys.stderr)
        return 2
    except (RadonCDTError, OSError) as exc:
        print(f"radoncdt {args.command}: {exc}", file=sys.stderr)
        return 2


def run():
    sys.exit(main())
