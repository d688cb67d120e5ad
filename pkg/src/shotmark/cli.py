"""Command-line entry points: embed, simulate, locate, extract, eval.

Also home of the evaluation bookkeeping: per-shot records of IoU, NC, and
runtime against the simulator's ground truth, written as deterministic CSV
tables (timings are opt-in precisely because they are not deterministic).
"""

import argparse
import csv
import io
import json
import sys
import time
from dataclasses import dataclass, fields as dataclass_fields

import numpy as np

from .bbox import Quadrilateral
from .embedder import MarkParams, mark_image
from .errors import LocalizationFailed, NoWatermarkFound, ShotmarkError
from .imgio import load_image, save_image
from .metrics import area_proportion, iou
from .payload import embed_payload, extract_payload, nc
from .pipeline import run_pipeline
from .rectify import rectify
from .simulator import BACKGROUND_SPECS, ShotConfig, simulate_shot

CSV_COLUMNS = ("image_id", "psnr_constraint", "area_proportion",
               "angle_offset", "iou", "nc", "runtime_ms")


@dataclass
class EvalRecord:
    image_id: str
    psnr_constraint: float
    area_proportion: float
    angle_offset: float
    iou: float
    nc: float = None
    runtime_ms: float = None


def bits_to_hex(bits) -> str:
    """Pack a 0/1 sequence into hex, first bit = most significant."""
    bits = np.asarray(bits, dtype=np.int64).ravel()
    if bits.size == 0:
        raise ValueError("empty payload")
    digits = []
    for i in range(0, bits.size, 4):
        nib = 0
        for b in bits[i:i + 4]:
            nib = (nib << 1) | int(b)
        nib <<= max(0, 4 - (bits.size - i))
        digits.append(f"{nib:x}")
    return "".join(digits)


def hex_to_bits(text: str, nbits: int) -> np.ndarray:
    """First `nbits` bits of a hex string, most significant bit first."""
    if nbits < 1:
        raise ValueError("nbits must be >= 1")
    if len(text) * 4 < nbits:
        raise ValueError(f"hex payload {text!r} shorter than {nbits} bits")
    value = int(text, 16)
    width = len(text) * 4
    return np.array([(value >> (width - 1 - i)) & 1 for i in range(nbits)],
                    dtype=np.int64)


def parse_config_file(path) -> dict:
    """Flat key=value config; '#' starts a comment; values are auto-typed."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value, got {raw!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            try:
                out[key] = int(value)
            except ValueError:
                try:
                    out[key] = float(value)
                except ValueError:
                    out[key] = value
    return out


def build_params(config: dict = None, target_psnr: float = None) -> MarkParams:
    """MarkParams from a config dict, with an optional CLI psnr override."""
    config = dict(config or {})
    if target_psnr is not None:
        config["target_psnr"] = target_psnr
    known = {f.name for f in dataclass_fields(MarkParams)}
    unknown = set(config) - known
    if unknown:
        raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return MarkParams(**config)


def parse_grid(spec: str) -> dict:
    """Grid spec 'psnr=34.5;area=0.5,0.4;angle=0,10,20' -> lists of floats."""
    grid = {"psnr": [], "area": [], "angle": []}
    for part in spec.split(";"):
        part = part.strip()
        if not part:
            continue
        if "=" not in part:
            raise ValueError(f"grid part {part!r} is not key=values")
        key, values = part.split("=", 1)
        key = key.strip()
        if key not in grid:
            raise ValueError(f"unknown grid axis {key!r}")
        grid[key] = [float(v) for v in values.split(",") if v.strip()]
    for axis, values in grid.items():
        if not values:
            raise ValueError(f"grid axis {axis!r} has no values")
    return grid


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def records_to_csv(records) -> str:
    """Records plus one mean row per (psnr, area, angle) cell, as CSV text."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    cells = {}
    for rec in records:
        writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])
        key = (rec.psnr_constraint, rec.area_proportion, rec.angle_offset)
        cells.setdefault(key, []).append(rec)
    for key in sorted(cells):
        group = cells[key]
        ncs = [r.nc for r in group if r.nc is not None]
        mean = EvalRecord("mean", *key,
                          iou=float(np.mean([r.iou for r in group])),
                          nc=float(np.mean(ncs)) if ncs else None)
        writer.writerow([_fmt(getattr(mean, col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def read_manifest(path) -> list:
    """Corpus manifest CSV rows as dicts (file, truth, psnr, area, angle, ...)."""
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def eval_sweep(manifest_path, grid: dict, params: MarkParams = None,
               include_timings: bool = False, log=None) -> str:
    """Run the pipeline over every manifest row inside the grid; CSV out.

    Rows whose (psnr, area, angle) fall outside the grid are ignored; rows
    whose files are missing are skipped with a warning on `log`. Failed
    localizations score IoU 0 rather than aborting the sweep.
    """
    rows = read_manifest(manifest_path)
    records = []
    for row in rows:
        cell = (float(row["psnr"]), float(row["area"]), float(row["angle"]))
        if not (any(abs(cell[0] - v) < 1e-9 for v in grid["psnr"])
                and any(abs(cell[1] - v) < 1e-9 for v in grid["area"])
                and any(abs(cell[2] - v) < 1e-9 for v in grid["angle"])):
            continue
        try:
            shot = load_image(row["file"])
            with open(row["truth"], encoding="utf-8") as fh:
                truth = Quadrilateral.from_dict(json.load(fh))
        except (OSError, ShotmarkError, KeyError, ValueError) as exc:
            if log is not None:
                print(f"warning: skipping {row.get('file', '?')}: {exc}", file=log)
            continue
        payload_hex = (row.get("payload") or "").strip()
        nbits = int(row["nbits"]) if (row.get("nbits") or "").strip() else None
        nominal = _parse_size(row["nominal"]) if (row.get("nominal") or "").strip() else None
        t0 = time.perf_counter()
        box_iou, got_nc = 0.0, None
        try:
            result = run_pipeline(shot, params, nbits=nbits, nominal_size=nominal)
            box_iou = iou(result.quad, truth)
            if payload_hex and result.readout is not None:
                got_nc = nc(hex_to_bits(payload_hex, nbits), result.readout)
        except (NoWatermarkFound, LocalizationFailed):
            pass
        elapsed_ms = (time.perf_counter() - t0) * 1000.0
        records.append(EvalRecord(
            image_id=row["file"], psnr_constraint=cell[0],
            area_proportion=cell[1], angle_offset=cell[2], iou=box_iou,
            nc=got_nc, runtime_ms=elapsed_ms if include_timings else None))
    return records_to_csv(records)


def _parse_size(text: str) -> tuple:
    try:
        w, h = text.lower().split("x")
        return int(w), int(h)
    except ValueError as exc:
        raise ValueError(f"expected WIDTHxHEIGHT, got {text!r}") from exc


def _annotate(shot: np.ndarray, quad: Quadrilateral, path) -> None:
    from PIL import Image, ImageDraw

    arr = np.clip(np.round(np.asarray(shot, dtype=np.float64)), 0, 255).astype(np.uint8)
    im = Image.fromarray(arr).convert("RGB")
    draw = ImageDraw.Draw(im)
    walk = [tuple(p) for p in quad.perimeter()]
    draw.line(walk + walk[:1], fill=(255, 32, 32), width=3)
    im.save(path)


def _write_json(payload: dict, path) -> None:
    if path is None or path == "-":
        json.dump(payload, sys.stdout, indent=2)
        sys.stdout.write("\n")
    else:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")


def cmd_embed(args) -> int:
    params = build_params(_load_config(args), args.psnr)
    img = load_image(args.infile)
    marked, report = mark_image(img, params)
    info = {"imagePsnr": round(report.image_psnr, 4),
            "convergedFraction": round(report.converged_fraction, 4),
            "blocks": len(report.blocks)}
    if args.payload:
        if args.nbits is None:
            raise ValueError("--payload requires --nbits")
        marked = embed_payload(marked, hex_to_bits(args.payload, args.nbits),
                               block_side=params.block_side)
        info["payloadBits"] = args.nbits
    save_image(args.out, marked)
    if args.report:
        _write_json(info, args.report)
    return 0


def cmd_simulate(args) -> int:
    marked = load_image(args.infile)
    cfg = ShotConfig(area_proportion=args.area, angle_offset=args.angle,
                     content_scale=args.scale,
                     illumination_gain=args.gain,
                     illumination_gamma=args.gamma,
                     noise_sigma=args.noise, jpeg_quality=args.jpeg,
                     background=args.background, seed=args.seed)
    shot, truth = simulate_shot(marked, cfg)
    save_image(args.out, shot)
    truth_path = args.truth or f"{args.out}.json"
    _write_json(truth.as_dict(), truth_path)
    if args.manifest:
        _append_manifest(args, truth_path)
    return 0


def _append_manifest(args, truth_path) -> None:
    columns = ("file", "truth", "psnr", "area", "angle", "seed",
               "payload", "nbits", "nominal")
    try:
        new = not open(args.manifest, encoding="utf-8").readline()
    except OSError:
        new = True
    with open(args.manifest, "a", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if new:
            writer.writerow(columns)
        writer.writerow([args.out, truth_path, _fmt(args.psnr), _fmt(args.area),
                         _fmt(args.angle), args.seed, args.payload or "",
                         args.nbits if args.nbits is not None else "",
                         args.nominal or ""])


def cmd_locate(args) -> int:
    params = build_params(_load_config(args))
    shot = load_image(args.infile)
    report = {"found": False}
    quad = None
    try:
        result = run_pipeline(shot, params)
        quad = result.quad
        report = {"found": True, "quad": quad.as_dict(),
                  "scaleIndex": result.scale_index,
                  "localCost": result.candidate.local_cost,
                  "timings": {k: round(v, 3) for k, v in result.timings.items()}}
    except NoWatermarkFound:
        report["reason"] = "no watermark found"
    except LocalizationFailed:
        report["reason"] = "localization failed"
    _write_json(report, args.report)
    if args.annotate and quad is not None:
        _annotate(shot, quad, args.annotate)
    return 0


def cmd_extract(args) -> int:
    params = build_params(_load_config(args))
    img = load_image(args.infile)
    if args.quad:
        with open(args.quad, encoding="utf-8") as fh:
            quad = Quadrilateral.from_dict(json.load(fh))
        img = rectify(img, quad)
    nominal = _parse_size(args.nominal) if args.nominal else None
    readout = extract_payload(img, args.nbits, nominal_size=nominal,
                              block_side=params.block_side)
    value = None
    if args.expected:
        value = nc(hex_to_bits(args.expected, args.nbits), readout)
    _write_json({"bits": bits_to_hex(readout.bits), "nc": value,
                 "confidence": round(readout.confidence, 4),
                 "windowsUsed": readout.windows_used}, args.payload_out)
    return 0


def cmd_eval(args) -> int:
    params = build_params(_load_config(args))
    table = eval_sweep(args.manifest, parse_grid(args.grid), params,
                       include_timings=args.timings, log=sys.stderr)
    with open(args.csv, "w", newline="", encoding="utf-8") as fh:
        fh.write(table)
    return 0


def _load_config(args) -> dict:
    return parse_config_file(args.config) if args.config else {}


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shotmark",
        description="Camera-shot-robust watermark embedding, localization, "
                    "and payload extraction.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value parameter file")

    p = sub.add_parser("embed", help="embed the localization watermark")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--psnr", type=float, default=None,
                   help="target block PSNR in dB (default 34.5)")
    p.add_argument("--payload", help="payload bits as hex")
    p.add_argument("--nbits", type=int, help="payload length in bits")
    p.add_argument("--report", help="write an embedding report JSON here")
    add_common(p)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("simulate", help="synthesize a camera shot of a marked image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--area", type=float, default=0.5)
    p.add_argument("--angle", type=float, default=0.0)
    p.add_argument("--scale", type=float, default=1.25)
    p.add_argument("--gain", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--jpeg", type=int, default=None)
    p.add_argument("--background", choices=BACKGROUND_SPECS, default="texture")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--truth", help="truth quad JSON path (default: OUT.json)")
    p.add_argument("--manifest", help="append a row to this corpus manifest CSV")
    p.add_argument("--psnr", type=float, default=34.5,
                   help="embedding PSNR recorded in the manifest")
    p.add_argument("--payload", help="payload hex recorded in the manifest")
    p.add_argument("--nbits", type=int, help="payload length recorded in the manifest")
    p.add_argument("--nominal", help="native WxH recorded in the manifest")
    add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("locate", help="find the marked quadrilateral in a shot")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--report", help="report JSON path (default: stdout)")
    p.add_argument("--annotate", help="write the shot with the box drawn on it")
    add_common(p)
    p.set_defaults(func=cmd_locate)

    p = sub.add_parser("extract", help="read the payload from a shot or rectified image")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--quad", help="quad JSON; when given, the image is rectified first")
    p.add_argument("--payload-out", dest="payload_out",
                   help="extraction report JSON path (default: stdout)")
    p.add_argument("--nbits", type=int, required=True)
    p.add_argument("--nominal", help="native content size WxH for resampling sync")
    p.add_argument("--expected", help="expected payload hex; adds an nc field")
    add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("eval", help="sweep a corpus manifest and tabulate IoU/NC")
    p.add_argument("--manifest", required=True)
    p.add_argument("--grid", required=True,
                   help="'psnr=34.5;area=0.5,0.4,0.3;angle=0,10,20'")
    p.add_argument("--csv", required=True)
    p.add_argument("--timings", action="store_true",
                   help="include runtime_ms (makes the CSV nondeterministic)")
    add_common(p)
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ShotmarkError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
