"""Small shared helpers: seed derivation, deterministic formatting, hashing."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def subseed(seed: int, tag: str) -> int:
    """Derive a stable child seed from a root seed and a stage tag.

    Every source of randomness in the pipeline draws from one root seed
    through this function, so stages stay independent and reproducible.
    """
    digest = hashlib.blake2s(f"{seed}:{tag}".encode()).digest()
    return int.from_bytes(digest[:8], "little") % (2**63)


def fmt_float(x: float) -> str:
    """Shortest round-trip decimal form; stable across runs and platforms."""
    return repr(float(x))


def canonical_json(obj) -> str:
    """Deterministic JSON used for cache keys and config echoes."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def cache_key(obj) -> str:
    return hashlib.sha256(canonical_json(obj).encode()).hexdigest()[:16]


def file_sha256(path: Path | str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def rel_posix(path: Path | str, base: Path | str) -> str:
    """Relative POSIX path string from base to path (may contain '..')."""
    import os

    return Path(os.path.relpath(Path(path), Path(base))).as_posix()


def save_png(path: Path | str, image) -> None:
    from PIL import Image

    Image.fromarray(image).save(str(path), format="PNG")


def load_image(path: Path | str):
    """PNG/JPEG file as an (H, W, 3) uint8 array."""
    import numpy as np
    from PIL import Image

    with Image.open(str(path)) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)
