"""Command-line interface.

Exit codes: 0 success, 1 usage or input error, 2 self-check failure.
"""

import argparse
from concurrent.futures import ThreadPoolExecutor
import math
from pathlib import Path
import sys

import numpy as np

from . import coeffio
from .contourlet import BINOMIAL_5, GaussianKernel, contourlet_decompose, contourlet_reconstruct
from .errors import IrsrError
from .image import bicubic_resize, load_pgm, save_pgm
from .metrics import psnr, report
from .selfcheck import format_result, run_checks
from .spectral import comparison_csv, radial_spectrum, spectral_fidelity_loss

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_SELFCHECK = 2

# perturbed synthesis kernel used to demonstrate that selfcheck catches a broken pyramid
FAULT_KERNEL = GaussianKernel((1 / 16, 5 / 16, 4 / 16, 5 / 16, 1 / 16))


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _g(x):
    return "%.17g" % x


def _parse_dirs(text):
    try:
        dirs = [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"--dirs must be a comma-separated list of integers, got {text!r}") from None
    if not dirs or any(d < 1 or d > 255 for d in dirs):
        raise UsageError("--dirs entries must lie in 1..255")
    return dirs


def _level_spec(args):
    if args.dirs is None:
        return [3] * (4 if args.levels is None else args.levels)
    dirs = _parse_dirs(args.dirs)
    if args.levels is not None and args.levels != len(dirs):
        raise UsageError(f"--levels {args.levels} but --dirs lists {len(dirs)} orders")
    return dirs


def cmd_decompose(args, out):
    image = load_pgm(args.input)
    spec = _level_spec(args)
    coeffs = contourlet_decompose(image, spec)
    coeffio.save_coefficients(coeffs, args.output)
    print(f"subbands {coeffs.subband_count}", file=out)
    print(f"base {coeffs.base.shape[0]}x{coeffs.base.shape[1]} energy {_g(np.sum(coeffs.base ** 2))}",
          file=out)
    for i, (sb, d) in enumerate(zip(coeffs.directional, coeffs.level_spec)):
        energy = sum(float(np.sum(b ** 2)) for b in sb.subbands)
        h, w = sb.shape
        print(f"level {i} {h}x{w} directions {sb.count} energy {_g(energy)}", file=out)


def cmd_reconstruct(args, out):
    coeffs = coeffio.load_coefficients(args.coeffs)
    image = contourlet_reconstruct(coeffs)
    save_pgm(image, args.output)
    if args.reference is not None:
        ref = load_pgm(args.reference)
        value = psnr(ref, image)
        print(f"psnr {'inf' if math.isinf(value) else _g(value)}", file=out)


def _pgm_files(directory):
    return sorted(p for p in Path(directory).iterdir() if p.suffix.lower() == ".pgm")


def _degrade_one(src, dst, scale):
    save_pgm(bicubic_resize(load_pgm(src), 1.0 / scale), dst)


def cmd_degrade(args, out):
    src = Path(args.input)
    if src.is_dir():
        dst = Path(args.output)
        dst.mkdir(parents=True, exist_ok=True)
        files = _pgm_files(src)
        with ThreadPoolExecutor() as pool:
            list(pool.map(lambda f: _degrade_one(f, dst / f.name, args.scale), files))
        for f in files:
            print(f"{f.name} -> {dst / f.name}", file=out)
    else:
        _degrade_one(src, args.output, args.scale)


def _report_one(ref, test, peak):
    return report(load_pgm(ref), load_pgm(test), peak).to_json()


def cmd_metrics(args, out):
    ref, test = Path(args.ref), Path(args.test)
    if ref.is_dir():
        names = [f.name for f in _pgm_files(ref)]
        missing = [n for n in names if not (test / n).exists()]
        if missing:
            raise UsageError(f"{test}: missing {', '.join(missing)}")
        with ThreadPoolExecutor() as pool:
            lines = list(pool.map(lambda n: _report_one(ref / n, test / n, args.peak), names))
        for name, line in zip(names, lines):
            print('{"file": "%s", %s' % (name, line[1:]), file=out)
    else:
        print(_report_one(ref, test, args.peak), file=out)


def cmd_spectrum(args, out):
    ref, test = load_pgm(args.ref), load_pgm(args.test)
    if ref.shape != test.shape:
        raise UsageError(f"image shapes differ: {ref.shape} vs {test.shape}")
    hists = {"ref": radial_spectrum(ref, args.bins), "test": radial_spectrum(test, args.bins)}
    Path(args.out_csv).write_text(comparison_csv(hists))
    print(f"spectral_fidelity_loss {_g(spectral_fidelity_loss(ref, test))}", file=out)


def cmd_selfcheck(args, out):
    kernel = FAULT_KERNEL if args.fault_kernel else BINOMIAL_5
    results = run_checks(args.seed, synthesis_kernel=kernel)
    for r in results:
        print(format_result(r), file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
    return EXIT_OK if failed == 0 else EXIT_SELFCHECK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser():
    parser = _Parser(prog="irsr", description="Contourlet, spectral and metric tools for IR images.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("decompose", help="contourlet-decompose a PGM into a CRG1 file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--levels", type=_positive_int)
    p.add_argument("--dirs", help="direction orders per level, coarsest first, e.g. 3,3,3,3")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("reconstruct", help="rebuild a PGM from a CRG1 file")
    p.add_argument("coeffs")
    p.add_argument("output")
    p.add_argument("--reference", help="PGM to report PSNR against")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("degrade", help="bicubic downscale by 2 or 4")
    p.add_argument("input", help="PGM file or directory of PGM files")
    p.add_argument("output")
    p.add_argument("--scale", type=int, choices=(2, 4), required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("metrics", help="PSNR/MSE/SSIM report as JSON")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("--peak", type=float, default=255.0)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("spectrum", help="radial spectrum CSV and spectral fidelity loss")
    p.add_argument("ref")
    p.add_argument("test")
    p.add_argument("out_csv")
    p.add_argument("--bins", type=_positive_int, default=64)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("selfcheck", help="run the numerical self-checks")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fault-kernel", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_selfcheck)
    return parser


def main(argv=None, out=None):
    out = sys.stdout if out is None else out
    args = build_parser().parse_args(argv)
    if getattr(args, "peak", 1.0) <= 0:
        print("irsr: error: --peak must be positive", file=sys.stderr)
        return EXIT_USAGE
    try:
        code = args.func(args, out)
    except (UsageError, IrsrError, OSError, ValueError) as exc:
        print(f"irsr {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
