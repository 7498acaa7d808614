"""Readers and writers for disparity maps, images and dataset manifests.

Formats
-------
PFM
    Single-channel ``Pf`` files, rows stored bottom-up, endianness given by
    the sign of the scale line.  Non-finite values load as invalid pixels
    and invalid pixels are written as ``+inf``.
KITTI PNG
    16-bit greyscale, ``disparity = stored / 256``, stored ``0`` = invalid.
Relative depth
    ``.pfm`` as is, or 16-bit PNG normalised by 65535.
Images
    8-bit PNG (read/write) and JPEG (read only), normalised to ``[0, 1]``.
Manifest
    JSON lines.  The first line is a header ``{"manifest_version": 1,
    "config": {...}}``; each further line is one sample record.
"""
from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from monostereo.core import DisparityField, FormatError, MonoStereoError, ParameterError, as_image

MANIFEST_VERSION = 1


# -- PFM ---------------------------------------------------------------------

def read_pfm(path) -> DisparityField:
    with open(path, "rb") as fh:
        data = fh.read()
    lines = []
    pos = 0
    for _ in range(3):
        end = data.find(b"\n", pos)
        if end < 0:
            raise FormatError(f"{path}: truncated PFM header")
        lines.append(data[pos:end].strip())
        pos = end + 1
    kind, dims, scale_line = lines
    if kind == b"PF":
        raise FormatError(f"{path}: 3-channel PFM is not a disparity map")
    if kind != b"Pf":
        raise FormatError(f"{path}: not a PFM file (header {kind!r})")
    m = re.fullmatch(rb"(\d+)\s+(\d+)", dims)
    if m is None:
        raise FormatError(f"{path}: malformed PFM dimensions {dims!r}")
    width, height = int(m.group(1)), int(m.group(2))
    try:
        scale = float(scale_line)
    except ValueError:
        raise FormatError(f"{path}: malformed PFM scale {scale_line!r}") from None
    if scale == 0 or not np.isfinite(scale):
        raise FormatError(f"{path}: invalid PFM scale {scale}")
    dtype = np.dtype("<f4") if scale < 0 else np.dtype(">f4")
    expected = width * height * 4
    payload = data[pos:]
    if len(payload) < expected:
        raise FormatError(f"{path}: truncated PFM payload ({len(payload)} of {expected} bytes)")
    raw = np.frombuffer(payload[:expected], dtype=dtype).reshape(height, width)[::-1]
    values = raw.astype(np.float32).astype(np.float64)
    valid = np.isfinite(values)
    return DisparityField(np.where(valid, values, 0.0), valid)


def write_pfm(disp, path) -> None:
    """Write little-endian single-channel PFM (values rounded to float32)."""
    if isinstance(disp, DisparityField):
        values = np.where(disp.valid, disp.values, np.inf)
    else:
        values = np.asarray(disp, dtype=np.float64)
    if values.ndim != 2:
        raise FormatError(f"PFM needs a 2-D field, got shape {values.shape}")
    height, width = values.shape
    payload = np.ascontiguousarray(values[::-1], dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(b"Pf\n%d %d\n-1.0\n" % (width, height))
        fh.write(payload)


# -- PNG helpers ---------------------------------------------------------------

def _open(path) -> Image.Image:
    try:
        im = Image.open(path)
        im.load()
    except (OSError, SyntaxError) as exc:
        if isinstance(exc, FileNotFoundError):
            raise
        raise FormatError(f"{path}: cannot decode image ({exc})") from exc
    return im


def _read_uint16(path) -> np.ndarray:
    im = _open(path)
    if im.mode not in ("I;16", "I;16B", "I;16L"):
        raise FormatError(f"{path}: expected a 16-bit single-channel PNG, got mode {im.mode}")
    return np.array(im, dtype=np.uint16)


def _write_uint16(arr: np.ndarray, path) -> None:
    Image.fromarray(np.ascontiguousarray(arr, dtype=np.uint16)).save(path, format="PNG")


def read_kitti_png(path) -> DisparityField:
    stored = _read_uint16(path)
    valid = stored != 0
    return DisparityField(stored.astype(np.float64) / 256.0, valid)


def write_kitti_png(disp, path) -> None:
    """Encode disparity as ``round(256 * d)``; invalid pixels store 0.

    Valid pixels that would encode to 0 are stored as 1 (1/256 px) so they
    stay valid, following the devkit.  Values beyond 255.996 px raise.
    """
    if not isinstance(disp, DisparityField):
        disp = DisparityField.dense(disp)
    valid = disp.valid
    if np.any(disp.values[valid] < 0):
        raise ParameterError("KITTI PNG cannot store negative disparity")
    stored = np.floor(disp.values * 256.0 + 0.5)
    if np.any(stored[valid] > 65535):
        raise ParameterError("disparity too large for KITTI PNG (max 65535/256)")
    stored = np.where(valid, np.maximum(stored, 1), 0)
    _write_uint16(stored, path)


def read_relative_depth(path) -> DisparityField:
    path = Path(path)
    ext = path.suffix.lower()
    if ext == ".pfm":
        field = read_pfm(path)
    elif ext == ".png":
        stored = _read_uint16(path)
        field = DisparityField(stored.astype(np.float64) / 65535.0, np.ones(stored.shape, dtype=bool))
    else:
        raise FormatError(f"{path}: relative depth must be .pfm or 16-bit .png")
    try:
        return DisparityField(field.values, field.valid, relative=True)
    except ParameterError as exc:
        raise FormatError(f"{path}: {exc}") from None


def write_relative_depth_png(values, path) -> None:
    values = np.asarray(values, dtype=np.float64)
    if values.size and (values.min() < 0 or values.max() > 1):
        raise ParameterError("relative depth must lie within [0, 1]")
    _write_uint16(np.floor(values * 65535.0 + 0.5), path)


def read_disparity(path) -> DisparityField:
    """Metric disparity by extension: ``.pfm`` or KITTI 16-bit ``.png``."""
    ext = Path(path).suffix.lower()
    if ext == ".pfm":
        return read_pfm(path)
    if ext == ".png":
        return read_kitti_png(path)
    raise FormatError(f"{path}: unsupported disparity format {ext!r}")


# -- 8-bit images ---------------------------------------------------------------

def to_bytes(image) -> np.ndarray:
    """Quantise ``[0, 1]`` values to uint8, rounding halves away from zero."""
    image = np.asarray(image, dtype=np.float64)
    return np.floor(np.clip(image, 0.0, 1.0) * 255.0 + 0.5).astype(np.uint8)


def from_bytes(data) -> np.ndarray:
    return np.asarray(data, dtype=np.float64) / 255.0


def read_image(path) -> np.ndarray:
    im = _open(path)
    if im.format not in ("PNG", "JPEG"):
        raise FormatError(f"{path}: unsupported image format {im.format}")
    if im.mode == "RGB":
        arr = np.array(im)
    elif im.mode == "RGBA":
        arr = np.array(im)[..., :3]
    elif im.mode in ("L", "P"):
        arr = np.array(im.convert("RGB"))
    else:
        raise FormatError(f"{path}: unsupported image mode {im.mode} (need 8-bit RGB or greyscale)")
    return from_bytes(arr)


def write_image(image, path) -> None:
    image = as_image(image)
    Image.fromarray(to_bytes(image)).save(path, format="PNG")


def read_mask(path) -> np.ndarray:
    """Single-channel 8-bit mask; any nonzero value counts as set."""
    im = _open(path)
    if im.mode not in ("L", "1", "P"):
        raise FormatError(f"{path}: expected a single-channel 8-bit mask, got mode {im.mode}")
    return np.array(im.convert("L")) != 0


def write_mask(mask, path) -> None:
    mask = np.asarray(mask, dtype=bool)
    Image.fromarray(np.where(mask, 255, 0).astype(np.uint8)).save(path, format="PNG")


# -- manifest --------------------------------------------------------------------

class ManifestError(MonoStereoError):
    pass


@dataclass
class SampleRecord:
    id: str
    dataset_id: str
    left_path: Path
    right_path: Path | None = None
    rel_depth_path: Path | None = None
    gt_disp_path: Path | None = None
    extra: dict = field(default_factory=dict)

    PATH_KEYS = ("left_path", "right_path", "rel_depth_path", "gt_disp_path")

    def to_json(self, base: Path | None = None) -> dict:
        out = {"id": self.id, "dataset_id": self.dataset_id}
        for key in self.PATH_KEYS:
            value = getattr(self, key)
            if value is not None:
                value = Path(value)
                if base is not None:
                    value = Path(os.path.relpath(value, base))
                out[key] = value.as_posix()
        out.update(self.extra)
        return out


@dataclass
class Manifest:
    samples: list
    config: dict = field(default_factory=dict)
    version: int = MANIFEST_VERSION


def load_manifest(path, check_paths: bool = True) -> Manifest:
    """Parse a manifest; relative paths resolve against the manifest's directory."""
    path = Path(path)
    base = path.parent
    with open(path, encoding="utf-8") as fh:
        lines = [line for line in fh.read().splitlines() if line.strip()]
    if not lines:
        raise ManifestError(f"{path}: empty manifest")
    try:
        records = [json.loads(line) for line in lines]
    except json.JSONDecodeError as exc:
        raise ManifestError(f"{path}: invalid JSON ({exc})") from None
    header = records[0]
    if not isinstance(header, dict) or "manifest_version" not in header:
        raise ManifestError(f"{path}: first line must be a header with 'manifest_version'")
    if header["manifest_version"] != MANIFEST_VERSION:
        raise ManifestError(f"{path}: unsupported manifest version {header['manifest_version']}")

    samples, seen, problems = [], set(), []
    for lineno, rec in enumerate(records[1:], start=2):
        if not isinstance(rec, dict):
            problems.append(f"line {lineno}: record must be an object")
            continue
        missing = [k for k in ("id", "dataset_id", "left_path") if k not in rec]
        if missing:
            problems.append(f"line {lineno}: missing {', '.join(missing)}")
            continue
        sid = str(rec["id"])
        if sid in seen:
            problems.append(f"line {lineno}: duplicate id {sid!r}")
            continue
        seen.add(sid)
        paths = {}
        for key in SampleRecord.PATH_KEYS:
            if rec.get(key) is not None:
                p = Path(rec[key])
                paths[key] = p if p.is_absolute() else base / p
                if check_paths and not paths[key].exists():
                    problems.append(f"line {lineno}: {key} {rec[key]!r} does not exist")
        extra = {k: v for k, v in rec.items() if k not in ("id", "dataset_id", *SampleRecord.PATH_KEYS)}
        samples.append(SampleRecord(sid, str(rec["dataset_id"]), extra=extra, **paths))
    if problems:
        raise ManifestError(f"{path}: " + "; ".join(problems))
    return Manifest(samples, dict(header.get("config", {})), header["manifest_version"])


def write_manifest(manifest: Manifest, path) -> None:
    path = Path(path)
    base = path.parent
    lines = [json.dumps({"manifest_version": manifest.version, "config": manifest.config}, sort_keys=True)]
    for rec in manifest.samples:
        lines.append(json.dumps(rec.to_json(base), sort_keys=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
