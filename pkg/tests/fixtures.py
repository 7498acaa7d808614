"""On-disk fixtures shared by the CLI and acceptance tests."""
import json
from pathlib import Path

import numpy as np

from monostereo.io import write_image, write_relative_depth_png


def card_depth(rng, h, w):
    """Background ramp with a few rectangular foreground cards."""
    rel = np.tile(np.linspace(0.1, 0.3, w), (h, 1))
    for _ in range(3):
        r0, c0 = rng.integers(0, h // 2), rng.integers(0, w // 2)
        rel[r0:r0 + h // 3, c0:c0 + w // 4] = rng.uniform(0.5, 1.0)
    return rel


def scene_manifest(root, count=20, h=48, w=64, seed=0):
    """Write ``count`` image + relative-depth pairs and their manifest; return its path."""
    root = Path(root)
    (root / "images").mkdir(parents=True, exist_ok=True)
    (root / "depth").mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    lines = [{"manifest_version": 1, "config": {}}]
    for i in range(count):
        write_image(rng.random((h, w, 3)), root / "images" / f"img{i:03d}.png")
        write_relative_depth_png(card_depth(rng, h, w), root / "depth" / f"img{i:03d}.png")
        lines.append({
            "id": f"img{i:03d}",
            "dataset_id": "fixture",
            "left_path": f"images/img{i:03d}.png",
            "rel_depth_path": f"depth/img{i:03d}.png",
        })
    path = root / "manifest.jsonl"
    path.write_text("".join(json.dumps(x) + "\n" for x in lines))
    return path


def tree_bytes(root):
    """Map of relative path -> file bytes for every file below ``root``."""
    root = Path(root)
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}
