"""Deterministic run manifests.

The manifest holds only reproducible content (versions, seeds, config
hash, thresholds, counts, output digests) so reruns with the same inputs
are byte-identical; wall-clock timings go to a separate timings file.
"""

import hashlib
import json
import math
import platform
from pathlib import Path

from . import __version__


def _sanitize(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {k: _sanitize(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_sanitize(v) for v in value]
    return value


def canonical_json(payload) -> str:
    return json.dumps(_sanitize(payload), sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def versions() -> dict:
    import numpy

    from ._accel import NUMBA_ENABLED

    out = {
        "linkforge": __version__,
        "python": platform.python_version(),
        "numpy": numpy.__version__,
        "numba_enabled": NUMBA_ENABLED,
    }
    if NUMBA_ENABLED:
        import numba

        out["numba"] = numba.__version__
    return out


def write_manifest(outdir, command: str, payload: dict, timings: dict | None = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {"command": command, "versions": versions(), **payload}
    path = outdir / "manifest.json"
    path.write_text(canonical_json(manifest), encoding="utf-8")
    if timings is not None:
        (outdir / "timings.json").write_text(
            canonical_json({"command": command, "seconds": timings}), encoding="utf-8")
    return path
