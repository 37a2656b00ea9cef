"""Deterministic CSV/JSON writers and the run manifest."""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path

from .errors import OutputUnwritable


def fmt(value):
    """17 significant digits for floats, plain text for everything else."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, float) or hasattr(value, "dtype") and value.dtype.kind == "f":
        return format(float(value), ".17g")
    return str(value)


def csv_text(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def json_text(obj):
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def atomic_write(path, text):
    """Write ``text`` to ``path`` via a temporary file and rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise OutputUnwritable(f"cannot write {path}: {exc}") from exc
    return path


def sha256_file(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, meta, files):
    """``manifest.json`` listing every file with its size and SHA-256."""
    out_dir = Path(out_dir)
    entries = [
        {"path": str(Path(f).relative_to(out_dir)), "bytes": Path(f).stat().st_size, "sha256": sha256_file(f)}
        for f in files
    ]
    manifest = dict(meta)
    manifest["files"] = entries
    return atomic_write(out_dir / "manifest.json", json_text(manifest))
