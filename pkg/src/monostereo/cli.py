"""Command-line interface.

Reports go to stdout as ``key=value`` lines (keys ``[a-z0-9_]+``, floats in
shortest round-trip form); ``--json-out FILE`` also writes them as one JSON
object.  Exit status: 0 success, 1 operational error, 2 usage error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from monostereo import __version__, io
from monostereo.core import MonoStereoError, ParameterError, mask_and
from monostereo.dssi import DEFAULT_BETA, DEFAULT_Q, dssi_loss, sparse_loss
from monostereo.edge import DEFAULT_STRIP_WIDTH, edge_mask
from monostereo.inpaint import DEFAULT_TIMEOUT, BackendError, InpaintBackend
from monostereo.metrics import evaluate
from monostereo.pipeline import (
    DEFAULT_D_MAX,
    DEFAULT_D_MIN,
    DEFAULT_MIX,
    DEFAULT_SEED,
    DEFAULT_TAU,
    GenerationConfig,
    MixSpec,
    generate_batch,
    mix_stream,
)

BACKEND_ENV = "MONOSTEREO_INPAINT_COMMAND"


class UsageError(Exception):
    pass


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def emit_report(report: dict, json_out=None, stream=None) -> None:
    stream = stream or sys.stdout
    for key, value in report.items():
        print(f"{key}={format_value(value)}", file=stream)
    if json_out:
        Path(json_out).write_text(json.dumps(report, sort_keys=False) + "\n", encoding="utf-8")


def parse_report(text: str) -> dict:
    """Inverse of :func:`emit_report` for numeric and boolean values."""
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        key, sep, raw = line.partition("=")
        if not sep or not key or not key.replace("_", "").isalnum() or key != key.lower():
            raise ValueError(f"malformed report line {line!r}")
        if raw in ("true", "false"):
            out[key] = raw == "true"
        else:
            try:
                out[key] = int(raw)
            except ValueError:
                try:
                    out[key] = float(raw)
                except ValueError:
                    out[key] = raw
    return out


def _add_backend_args(p):
    p.add_argument("--backend", choices=("builtin", "external"), default="builtin",
                   help="hole filler (default: builtin)")
    p.add_argument("--backend-command", default=None,
                   help=f"external command template with {{image}} {{mask}} {{output}} (default: ${BACKEND_ENV})")
    p.add_argument("--timeout", type=float, default=DEFAULT_TIMEOUT,
                   help=f"external backend timeout in seconds (default: {DEFAULT_TIMEOUT:g})")


def _backend(args) -> InpaintBackend:
    if args.backend == "builtin":
        return InpaintBackend()
    command = args.backend_command or os.environ.get(BACKEND_ENV)
    if not command:
        raise UsageError(f"--backend external needs --backend-command or ${BACKEND_ENV}")
    try:
        return InpaintBackend("external", command, args.timeout)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None


def _weights(text):
    sources = []
    for item in text.split(","):
        name, sep, weight = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected name=weight, got {item!r}")
        try:
            sources.append((name.strip(), float(weight)))
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad weight in {item!r}") from None
    return tuple(sources)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="monostereo", description="Stereo sample generation, supervision losses and stereo metrics.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="synthesise stereo samples from a manifest of images + relative depth")
    g.add_argument("--manifest", required=True, type=Path)
    g.add_argument("--out", required=True, type=Path)
    g.add_argument("--seed", type=int, default=DEFAULT_SEED)
    g.add_argument("--d-min", type=float, default=DEFAULT_D_MIN)
    g.add_argument("--d-max", type=float, default=DEFAULT_D_MAX)
    g.add_argument("--tau", type=float, default=DEFAULT_TAU)
    g.add_argument("--strip-width", type=int, default=DEFAULT_STRIP_WIDTH)
    g.add_argument("--jobs", type=int, default=1)
    _add_backend_args(g)
    g.add_argument("--json-out", type=Path)

    e = sub.add_parser("edge-mask", help="horizontal disparity-drop edge mask")
    e.add_argument("--disparity", required=True, type=Path, help=".pfm or KITTI .png disparity")
    e.add_argument("--relative", action="store_true", help="treat input as relative depth (16-bit PNG / 65535)")
    e.add_argument("--alpha", type=float, default=None, help="scale a relative map before detection")
    e.add_argument("--tau", type=float, default=DEFAULT_TAU)
    e.add_argument("--out", type=Path, help="write the mask as an 8-bit PNG")
    e.add_argument("--json-out", type=Path)

    i = sub.add_parser("inpaint", help="fill holes in an image")
    i.add_argument("--image", required=True, type=Path)
    i.add_argument("--mask", required=True, type=Path, help="8-bit PNG, nonzero = hole")
    i.add_argument("--out", required=True, type=Path)
    i.add_argument("--workdir", type=Path, default=None)
    _add_backend_args(i)
    i.add_argument("--json-out", type=Path)

    for name, help_text in (("align", "least-squares alignment and DSSI report"),
                            ("loss", "sparse, DSSI and combined losses")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--pred", required=True, type=Path, help=".pfm or KITTI .png predicted disparity")
        p.add_argument("--mono", required=True, type=Path, help="relative depth (.pfm or 16-bit .png)")
        p.add_argument("--mono-mask", type=Path, help="8-bit PNG restricting the alignment pixels")
        p.add_argument("--q", type=float, default=DEFAULT_Q)
        p.add_argument("--iterations", type=int, default=1)
        if name == "loss":
            p.add_argument("--gt", required=True, type=Path, help=".pfm or KITTI .png ground truth")
            p.add_argument("--beta", type=float, default=DEFAULT_BETA)
        p.add_argument("--json-out", type=Path)

    v = sub.add_parser("eval", help="EPE, D1 and >2px against ground truth")
    v.add_argument("--pred", required=True, type=Path)
    v.add_argument("--gt", required=True, type=Path)
    v.add_argument("--mask", type=Path, help="optional extra evaluation mask (8-bit PNG)")
    v.add_argument("--json-out", type=Path)

    m = sub.add_parser("mix", help="print a seeded stream of dataset ids")
    m.add_argument("--count", type=int, required=True)
    m.add_argument("--seed", type=int, default=DEFAULT_SEED)
    m.add_argument("--weights", type=_weights, default=DEFAULT_MIX,
                   help="name=weight,... (default: synthetic=5,generated-mono=6,real=1)")
    m.add_argument("--out", type=Path, help="write ids here instead of stdout")
    return parser


# -- subcommands -------------------------------------------------------------------

def _generate(args):
    try:
        cfg = GenerationConfig(
            d_min=args.d_min, d_max=args.d_max, tau=args.tau, strip_width=args.strip_width,
            seed=args.seed, inpaint_backend=_backend(args),
        )
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    manifest = io.load_manifest(args.manifest)
    out_manifest, failures = generate_batch(manifest, args.out, cfg, jobs=args.jobs)
    for failure in failures:
        print(json.dumps({"failure": failure}, sort_keys=True), file=sys.stderr)
    emit_report({
        "samples": len(manifest.samples),
        "generated": len(manifest.samples) - len(failures),
        "failed": len(failures),
        "manifest": str(out_manifest),
    }, args.json_out)
    return 1 if failures else 0


def _edge_mask(args):
    if not args.tau >= 0:
        raise UsageError("--tau must be non-negative")
    field = io.read_relative_depth(args.disparity) if args.relative else io.read_disparity(args.disparity)
    values = field.values * (args.alpha if args.alpha is not None else 1.0)
    mask = edge_mask(values, args.tau) & field.valid
    if args.out:
        io.write_mask(mask, args.out)
    emit_report({"height": mask.shape[0], "width": mask.shape[1], "tau": args.tau,
                 "edge_pixels": int(mask.sum())}, args.json_out)
    return 0


def _inpaint(args):
    backend = _backend(args)
    image = io.read_image(args.image)
    holes = io.read_mask(args.mask)
    workdir = args.workdir
    if backend.kind == "external" and workdir is None:
        workdir = args.out.resolve().parent / f".{args.out.stem}.inpaint"
    filled = backend.run(image, holes, workdir)
    io.write_image(filled, args.out)
    emit_report({"holes": int(holes.sum()), "backend": backend.kind}, args.json_out)
    return 0


def _load_pred_mono(args):
    if not 0 < args.q < 1:
        raise UsageError("--q must lie in (0, 1)")
    if args.iterations < 1:
        raise UsageError("--iterations must be >= 1")
    pred = io.read_disparity(args.pred)
    mono = io.read_relative_depth(args.mono)
    if pred.shape != mono.shape:
        raise MonoStereoError(f"pred shape {pred.shape} does not match mono shape {mono.shape}")
    mask = mask_and(pred.valid, mono.valid)
    if args.mono_mask:
        mask = mask_and(mask, io.read_mask(args.mono_mask))
    return pred, mono, mask


def _dssi_fields(rep):
    return {
        "a": rep.alignment_initial.scale,
        "b": rep.alignment_initial.shift,
        "a_refined": rep.alignment_refined.scale,
        "b_refined": rep.alignment_refined.shift,
        "tau_l": rep.threshold,
        "inlier_count": rep.inlier_count,
        "fallback": rep.fallback,
        "dssi": rep.loss,
    }


def _align(args):
    pred, mono, mask = _load_pred_mono(args)
    rep = dssi_loss(pred.values, mono.values, mask, q=args.q, iterations=args.iterations)
    emit_report({"pixels": int(mask.sum()), **_dssi_fields(rep)}, args.json_out)
    return 0


def _loss(args):
    pred, mono, mask = _load_pred_mono(args)
    gt = io.read_disparity(args.gt)
    valid = mask_and(gt.valid, pred.valid)
    if args.beta < 0:
        raise UsageError("--beta must be non-negative")
    rep = dssi_loss(pred.values, mono.values, mask, q=args.q, iterations=args.iterations)
    sparse = sparse_loss(pred.values, gt.values, valid)
    report = {"pixels": int(mask.sum()), **_dssi_fields(rep)}
    report.update(sparse=sparse, beta=args.beta, total=sparse + args.beta * rep.loss)
    emit_report(report, args.json_out)
    return 0


def _eval(args):
    pred = io.read_disparity(args.pred)
    gt = io.read_disparity(args.gt)
    valid = gt.valid
    if args.mask:
        valid = mask_and(valid, io.read_mask(args.mask))
    emit_report(evaluate(pred.values, gt.values, valid).as_dict(), args.json_out)
    return 0


def _mix(args):
    if args.count < 0:
        raise UsageError("--count must be non-negative")
    try:
        spec = MixSpec(args.weights)
    except ParameterError as exc:
        raise UsageError(str(exc)) from None
    stream = mix_stream(spec, args.seed)
    ids = [next(stream) for _ in range(args.count)]
    text = "".join(f"{i}\n" for i in ids)
    if args.out:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


COMMANDS = {
    "generate": _generate,
    "edge-mask": _edge_mask,
    "inpaint": _inpaint,
    "align": _align,
    "loss": _loss,
    "eval": _eval,
    "mix": _mix,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except (MonoStereoError, OSError) as exc:
        diag = {"error": type(exc).__name__, "message": str(exc)}
        if isinstance(exc, BackendError) and exc.diagnostics:
            diag["diagnostics"] = exc.diagnostics
        print(json.dumps(diag, sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
