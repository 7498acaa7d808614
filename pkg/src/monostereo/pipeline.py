"""Stereo sample generation from single images and dataset mixing.

A sample is made by scaling relative depth with a random factor, warping the
left image into a right view with edge-aware background carry, and filling
the remaining holes.  Each sample draws its randomness from
``(seed, index)`` alone, so shards and worker pools reproduce the same
output.
"""
from __future__ import annotations

import math
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from monostereo.core import DimensionError, DisparityField, MonoStereoError, ParameterError, as_image
from monostereo.edge import DEFAULT_STRIP_WIDTH, build_carry_plan, edge_mask, warp_with_carry
from monostereo.inpaint import InpaintBackend
from monostereo.warp import forward_warp, sample_alpha, scale_disparity
from monostereo import io

# None of these come from a published setting; they are working defaults.
DEFAULT_D_MIN = 32.0
DEFAULT_D_MAX = 96.0
DEFAULT_TAU = 3.0
DEFAULT_Q = 0.8
DEFAULT_BETA = 1.0
DEFAULT_SEED = 0

GENERATED_DATASET_ID = "generated-mono"
DEFAULT_MIX = (("synthetic", 5.0), (GENERATED_DATASET_ID, 6.0), ("real", 1.0))


@dataclass(frozen=True)
class GenerationConfig:
    d_min: float = DEFAULT_D_MIN
    d_max: float = DEFAULT_D_MAX
    tau: float = DEFAULT_TAU
    strip_width: int = DEFAULT_STRIP_WIDTH
    q: float = DEFAULT_Q
    beta: float = DEFAULT_BETA
    seed: int = DEFAULT_SEED
    inpaint_backend: InpaintBackend = field(default_factory=InpaintBackend)

    def __post_init__(self):
        if not (math.isfinite(self.d_min) and math.isfinite(self.d_max) and 0 < self.d_min <= self.d_max):
            raise ParameterError(f"need 0 < d_min <= d_max, got {self.d_min}, {self.d_max}")
        if not (math.isfinite(self.tau) and self.tau > 0):
            raise ParameterError(f"tau must be positive, got {self.tau}")
        if int(self.strip_width) != self.strip_width or self.strip_width < 1:
            raise ParameterError(f"strip_width must be a positive integer, got {self.strip_width}")
        if not 0 < self.q < 1:
            raise ParameterError(f"q must be in (0, 1), got {self.q}")
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ParameterError(f"beta must be non-negative, got {self.beta}")
        if not (0 <= int(self.seed) < 2**64) or int(self.seed) != self.seed:
            raise ParameterError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["inpaint_backend"] = {"kind": self.inpaint_backend.kind, "command": self.inpaint_backend.command}
        return d


def sample_seed(seed: int, index: int) -> int:
    """Per-sample 64-bit seed derived from the global seed and the sample index."""
    state = np.random.SeedSequence((int(seed), int(index))).generate_state(1, dtype=np.uint64)
    return int(state[0])


@dataclass(frozen=True, eq=False)
class StereoSample:
    left: np.ndarray
    right: np.ndarray
    disparity_gt: DisparityField
    hole_mask_pre_inpaint: np.ndarray
    carry_mask: np.ndarray
    alpha_used: float
    provenance: dict


class SampleError(MonoStereoError):
    """A generation stage failed for one sample."""

    def __init__(self, sample_id, stage, cause):
        super().__init__(f"sample {sample_id!r} failed at {stage}: {cause}")
        self.sample_id = sample_id
        self.stage = stage
        self.cause = cause

    def as_dict(self) -> dict:
        return {
            "id": self.sample_id,
            "stage": self.stage,
            "error": type(self.cause).__name__,
            "message": str(self.cause),
        }


def generate_sample(image, rel_depth, cfg: GenerationConfig | None = None, index: int = 0,
                    source_id: str | None = None, workdir=None) -> StereoSample:
    cfg = cfg or GenerationConfig()
    sid = source_id if source_id is not None else str(index)
    stage = "validate"
    try:
        image = as_image(image)
        if not isinstance(rel_depth, DisparityField):
            rel_depth = DisparityField.dense(rel_depth, relative=True)
        if not rel_depth.is_dense:
            raise ParameterError("relative depth must be dense")
        if rel_depth.shape != image.shape[:2]:
            raise DimensionError(f"depth shape {rel_depth.shape} does not match image {image.shape[:2]}")

        stage = "scale"
        seed = sample_seed(cfg.seed, index)
        alpha = sample_alpha(seed, cfg.d_min, cfg.d_max)
        disp = scale_disparity(rel_depth, alpha)

        stage = "warp"
        plain = forward_warp(image, disp)
        edges = edge_mask(disp, cfg.tau)
        plan = build_carry_plan(disp, edges, cfg.strip_width)
        carried = warp_with_carry(image, disp, plan)

        stage = "inpaint"
        if cfg.inpaint_backend.kind == "external" and workdir is None:
            with tempfile.TemporaryDirectory(prefix="monostereo-") as tmp:
                right = cfg.inpaint_backend.run(carried.right_image, carried.hole_mask, tmp)
        else:
            right = cfg.inpaint_backend.run(carried.right_image, carried.hole_mask, workdir)
    except MonoStereoError as exc:
        raise SampleError(sid, stage, exc) from exc

    provenance = {"source_id": sid, "index": int(index), "seed": int(cfg.seed), "sample_seed": seed}
    return StereoSample(
        left=image,
        right=right,
        disparity_gt=disp,
        hole_mask_pre_inpaint=plain.hole_mask,
        carry_mask=plain.hole_mask & ~carried.hole_mask,
        alpha_used=alpha,
        provenance=provenance,
    )


# -- batch generation ------------------------------------------------------------

def _safe_name(sid: str) -> str:
    if not sid or sid in (".", "..") or "/" in sid or "\\" in sid or "\0" in sid:
        raise ParameterError(f"sample id {sid!r} cannot be used as a file name")
    return sid


def _generate_one(task):
    index, record, out_dir, cfg = task
    sid = record.id
    try:
        name = _safe_name(sid)
        if record.rel_depth_path is None:
            raise SampleError(sid, "load", ParameterError("record has no rel_depth_path"))
        try:
            image = io.read_image(record.left_path)
            rel = io.read_relative_depth(record.rel_depth_path)
        except (MonoStereoError, OSError) as exc:
            raise SampleError(sid, "load", exc) from exc
        sample = generate_sample(image, rel, cfg, index=index, source_id=sid)
        out = Path(out_dir)
        paths = {
            "left_path": out / "left" / f"{name}.png",
            "right_path": out / "right" / f"{name}.png",
            "gt_disp_path": out / "disparity" / f"{name}.pfm",
            "hole_mask_path": out / "holes" / f"{name}.png",
        }
        try:
            io.write_image(sample.left, paths["left_path"])
            io.write_image(sample.right, paths["right_path"])
            io.write_pfm(sample.disparity_gt, paths["gt_disp_path"])
            io.write_mask(sample.hole_mask_pre_inpaint, paths["hole_mask_path"])
        except (MonoStereoError, OSError) as exc:
            raise SampleError(sid, "write", exc) from exc
    except SampleError as exc:
        return None, exc.as_dict()
    except MonoStereoError as exc:
        return None, SampleError(sid, "validate", exc).as_dict()

    hole_path = paths.pop("hole_mask_path")
    rec = io.SampleRecord(
        sid,
        GENERATED_DATASET_ID,
        extra={
            "alpha": sample.alpha_used,
            "hole_mask_path": Path(hole_path.relative_to(out_dir)).as_posix(),
            "index": index,
            "sample_seed": sample.provenance["sample_seed"],
            "source_dataset_id": record.dataset_id,
        },
        **paths,
    )
    return rec, None


def generate_batch(manifest: io.Manifest, out_dir, cfg: GenerationConfig | None = None, jobs: int = 1,
                   progress=sys.stderr):
    """Generate every sample of ``manifest`` into ``out_dir``.

    Returns ``(output_manifest_path, failures)`` where ``failures`` is a list
    of structured error dicts.  Output files do not depend on ``jobs``.
    """
    cfg = cfg or GenerationConfig()
    if jobs < 1:
        raise ParameterError(f"jobs must be >= 1, got {jobs}")
    out_dir = Path(out_dir)
    for sub in ("left", "right", "disparity", "holes"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    tasks = [(i, rec, out_dir, cfg) for i, rec in enumerate(manifest.samples)]
    total = len(tasks)

    def report(done, result):
        if progress is not None:
            rec, failure = result
            status = "ok" if failure is None else f"FAILED ({failure['stage']})"
            print(f"[{done}/{total}] {tasks[done - 1][1].id} {status}", file=progress, flush=True)

    results = []
    if jobs == 1 or total <= 1:
        for task in tasks:
            results.append(_generate_one(task))
            report(len(results), results[-1])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for result in pool.map(_generate_one, tasks):
                results.append(result)
                report(len(results), result)

    records = [rec for rec, _ in results if rec is not None]
    failures = [fail for _, fail in results if fail is not None]
    out_manifest = out_dir / "manifest.jsonl"
    io.write_manifest(io.Manifest(records, cfg.to_dict()), out_manifest)
    return out_manifest, failures


# -- dataset mixing -----------------------------------------------------------------

@dataclass(frozen=True)
class MixSpec:
    sources: tuple = DEFAULT_MIX

    def __post_init__(self):
        sources = tuple((str(name), float(w)) for name, w in self.sources)
        if not sources:
            raise ParameterError("mix needs at least one source")
        for name, w in sources:
            if not (math.isfinite(w) and w > 0):
                raise ParameterError(f"weight for {name!r} must be positive, got {w}")
        if len({name for name, _ in sources}) != len(sources):
            raise ParameterError("duplicate dataset id in mix")
        object.__setattr__(self, "sources", sources)

    @property
    def ids(self):
        return [name for name, _ in self.sources]

    @property
    def probabilities(self) -> np.ndarray:
        w = np.array([w for _, w in self.sources])
        return w / w.sum()


def mix_stream(spec: MixSpec, seed: int = DEFAULT_SEED, chunk: int = 4096):
    """Endless i.i.d. stream of dataset ids drawn with probability proportional to weight."""
    ids = spec.ids
    probs = spec.probabilities
    rng = np.random.default_rng(seed)
    while True:
        for k in rng.choice(len(ids), size=chunk, p=probs):
            yield ids[k]

