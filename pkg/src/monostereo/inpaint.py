"""Hole filling for warped right views.

Two backends share one guarantee: pixels outside the hole mask come back
exactly as they went in.

``builtin``
    Deterministic row propagation.  Holes opened by the warp are revealed
    background, which sits to the right of the hole, so each hole pixel takes
    the nearest known pixel to its right, else to its left.  Rows with no
    known pixel take the image mean.
``external``
    Runs a user command (for example a diffusion inpainter) through files.
    The command template must contain ``{image}``, ``{mask}`` and
    ``{output}``; they are replaced by paths of an 8-bit RGB PNG, an 8-bit
    mask PNG (255 = hole) and the PNG the command must write.
"""
from __future__ import annotations

import logging
import shlex
import subprocess
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from monostereo import kernels
from monostereo.core import DimensionError, EmptySelectionError, MonoStereoError, ParameterError, as_image, as_mask
from monostereo.io import read_image, write_image, write_mask

logger = logging.getLogger(__name__)

PLACEHOLDERS = ("{image}", "{mask}", "{output}")
DEFAULT_TIMEOUT = 600.0


class BackendError(MonoStereoError):
    """The external command failed; ``diagnostics`` holds its captured output."""

    def __init__(self, message, diagnostics=""):
        super().__init__(message)
        self.diagnostics = diagnostics


class ProtocolError(MonoStereoError):
    pass


class BackendTimeout(BackendError):
    pass


@dataclass(frozen=True)
class InpaintBackend:
    """``kind`` is ``"builtin"`` or ``"external"``; external needs ``command``."""

    kind: str = "builtin"
    command: str | None = None
    timeout: float = DEFAULT_TIMEOUT

    def __post_init__(self):
        if self.kind not in ("builtin", "external"):
            raise ParameterError(f"unknown inpaint backend {self.kind!r}")
        if self.kind == "external":
            check_template(self.command)

    def run(self, image, holes, workdir=None) -> np.ndarray:
        if self.kind == "builtin":
            return inpaint_builtin(image, holes)
        if workdir is None:
            raise ParameterError("the external backend needs a working directory")
        return inpaint_external(image, holes, self.command, workdir, timeout=self.timeout)


def check_template(command) -> None:
    if not command:
        raise ParameterError("external inpaint backend needs a command template")
    missing = [p for p in PLACEHOLDERS if p not in command]
    if missing:
        raise ParameterError(f"command template lacks placeholder(s) {', '.join(missing)}")


def _prepare(image, holes):
    image = as_image(image)
    holes = as_mask(holes)
    if holes.shape != image.shape[:2]:
        raise DimensionError(f"hole mask shape {holes.shape} does not match image {image.shape[:2]}")
    return image, holes


def inpaint_builtin(image, holes) -> np.ndarray:
    image, holes = _prepare(image, holes)
    if not holes.any():
        return np.array(image)
    if holes.all():
        raise EmptySelectionError("every pixel is a hole; nothing to propagate from")
    out, empty = kernels.impl.fill_rows(np.ascontiguousarray(image), np.ascontiguousarray(holes))
    if empty.any():
        warnings.warn(f"{int(empty.sum())} row(s) entirely holes; filled with the image mean", RuntimeWarning)
        out[empty] = image[~holes].mean(axis=0)
    return out


def inpaint_external(image, holes, command_template: str, workdir, timeout: float = DEFAULT_TIMEOUT) -> np.ndarray:
    """Delegate hole filling to an external command, then re-composite known pixels."""
    image, holes = _prepare(image, holes)
    check_template(command_template)
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    paths = {
        "image": (workdir / "inpaint_image.png").resolve(),
        "mask": (workdir / "inpaint_mask.png").resolve(),
        "output": (workdir / "inpaint_output.png").resolve(),
    }
    if paths["output"].exists():
        paths["output"].unlink()
    write_image(image, paths["image"])
    write_mask(holes, paths["mask"])

    command = command_template
    for key, value in paths.items():
        command = command.replace("{" + key + "}", str(value))
    argv = shlex.split(command)
    logger.debug("running inpaint backend: %s", argv)
    try:
        proc = subprocess.run(argv, cwd=workdir, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired as exc:
        raise BackendTimeout(f"inpaint backend timed out after {timeout} s", str(exc.stderr or "")) from None
    except OSError as exc:
        raise BackendError(f"cannot run inpaint backend: {exc}") from None
    if proc.returncode != 0:
        raise BackendError(
            f"inpaint backend exited with status {proc.returncode}",
            (proc.stdout or "") + (proc.stderr or ""),
        )
    if not paths["output"].exists():
        raise ProtocolError(f"inpaint backend did not write {paths['output']}")
    try:
        filled = read_image(paths["output"])
    except MonoStereoError as exc:
        raise ProtocolError(f"unreadable inpaint output: {exc}") from None
    if filled.shape != image.shape:
        raise ProtocolError(f"inpaint output has shape {filled.shape}, expected {image.shape}")
    return np.where(holes[..., None], filled, image)
