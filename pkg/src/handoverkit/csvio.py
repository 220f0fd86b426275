"""CSV reading/writing with a reproducibility comment header.

Every CSV this package writes starts with a single comment line:

    # schema_version=1 seed=<seed> generated=<iso timestamp>

The timestamp is omitted when deterministic output is requested, making
reruns byte-identical. Readers skip any leading '#' lines.
"""
from __future__ import annotations

import csv
from datetime import datetime, timezone

SCHEMA_VERSION = 1


def header_comment(seed: int | None, timestamp: bool = True) -> str:
    parts = [f"# schema_version={SCHEMA_VERSION}"]
    if seed is not None:
        parts.append(f"seed={seed}")
    if timestamp:
        parts.append(f"generated={datetime.now(timezone.utc).isoformat()}")
    return " ".join(parts)


def write_rows(path, fieldnames, rows, seed: int | None = None, timestamp: bool = True) -> None:
    """Write dict rows with the standard comment header."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(header_comment(seed, timestamp) + "\n")
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def read_rows(path) -> list:
    """Read dict rows, skipping leading comment lines."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))


def fmt(value: float) -> str:
    """Full-precision float formatting (round-trips exactly)."""
    return repr(float(value))
