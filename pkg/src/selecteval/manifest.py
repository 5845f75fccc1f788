"""Run manifests: every artifact-producing command records its parameters,
input/output digests and seeds next to the artifact, so identical reruns can
be verified by comparing manifest files byte for byte."""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from . import __version__


def file_digest(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def manifest_path(artifact: str | Path) -> Path:
    return Path(str(artifact) + ".manifest.json")


def write_manifest(
    artifact: str | Path,
    command: str,
    parameters: dict,
    inputs: list[str | Path] | None = None,
    outputs: list[str | Path] | None = None,
    seeds: dict | None = None,
) -> Path:
    """Write ``<artifact>.manifest.json``. Output digests are computed last,
    so the named outputs must already exist."""
    manifest = {
        "command": command,
        "tool_version": __version__,
        "parameters": parameters,
        "seeds": seeds or {},
        "inputs": {str(p): file_digest(p) for p in (inputs or [])},
        "outputs": {str(p): file_digest(p) for p in (outputs or [])},
    }
    path = manifest_path(artifact)
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path
