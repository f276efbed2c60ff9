"""Run records and deterministic CSV emission.

Every output CSV starts with comment lines pinning the config hash, seed
and schema version, and every data row repeats the hash, so a results file
can always be traced back to the exact run that made it.  Floats are
written with repr (shortest round-trip form), which makes re-runs with the
same inputs byte-identical.  Wall-clock and host facts go to a sidecar
JSON that is allowed to differ between runs.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from pathlib import Path

from .config import LearnConfig, ScenarioConfig, config_to_dict

SCHEMA_VERSION = 1


def config_hash(scen: ScenarioConfig, learn: LearnConfig) -> str:
    """16-hex digest of the canonical JSON form of both configs."""
    blob = json.dumps({"scenario": config_to_dict(scen), "learn": config_to_dict(learn)},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(v)
    return str(v)


def write_csv(path: str | Path, columns: list[str], rows: list[list],
              header: dict[str, object]) -> None:
    """Atomically write a commented CSV (temp file + rename)."""
    path = Path(path)
    lines = [f"# {k}={v}" for k, v in header.items()]
    lines.append(",".join(columns))
    lines += [",".join(fmt_cell(v) for v in row) for row in rows]
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)


def read_csv(path: str | Path) -> tuple[dict[str, str], list[str], list[list[str]]]:
    """Parse a commented CSV back into (header, columns, string rows)."""
    header: dict[str, str] = {}
    columns: list[str] = []
    rows: list[list[str]] = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            header[k] = v
        elif not columns:
            columns = line.split(",")
        elif line:
            rows.append(line.split(","))
    return header, columns, rows


def write_meta(path: str | Path, **facts) -> None:
    Path(path).write_text(json.dumps(facts, indent=2, sort_keys=True) + "\n")
