"""Deterministic CSV/JSON emitters with config-recording headers.

Every output file starts with comment lines recording the full run
configuration and the artifact version, so identical configs reproduce
byte-identical files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Mapping, Sequence


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return ";".join(_fmt(v) for v in value)
    return str(value)


def meta_lines(meta: Mapping[str, object], version: str) -> list[str]:
    lines = [f"# artifact_version={version}"]
    for key in sorted(meta):
        lines.append(f"# {key}={_fmt(meta[key])}")
    return lines


def write_csv(
    path: Path,
    meta: Mapping[str, object],
    columns: Sequence[str],
    rows: Iterable[Sequence[object]],
    version: str,
) -> None:
    out = meta_lines(meta, version)
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(out) + "\n")


def write_json(
    path: Path, meta: Mapping[str, object], payload: Mapping[str, object], version: str
) -> None:
    doc = {
        "artifact_version": version,
        "config": {k: _fmt(v) for k, v in sorted(meta.items())},
        **payload,
    }
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
