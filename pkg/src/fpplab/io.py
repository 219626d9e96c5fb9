"""Delimited output with provenance.

Every table starts with a comment line carrying the twelve-digit config
hash, then a header row, then data rows.  Floats are written with repr,
the shortest round-trip form, so identical runs produce identical bytes.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence


def format_cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(
    path, header: Sequence[str], rows: Iterable[Sequence], config_hash: str
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        f.write(f"# config_hash={config_hash}\n")
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(format_cell(c) for c in row) + "\n")
    return path


def read_csv(path) -> tuple[str, list[str], list[list[str]]]:
    """Inverse of write_csv at the text level: (hash, header, raw rows)."""
    with open(path, "r", newline="") as f:
        first = f.readline().rstrip("\n")
        if not first.startswith("# config_hash="):
            raise ValueError(f"{path} lacks the config hash line")
        config_hash = first.split("=", 1)[1]
        header = f.readline().rstrip("\n").split(",")
        rows = [line.rstrip("\n").split(",") for line in f if line.strip()]
    return config_hash, header, rows


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")
    return path
