"""Fiducial files and the JSON-lines solution catalog.

Fiducial file::

    d <N>
    <re_0> <im_0>
    ...
    <re_N-1> <im_N-1>
    # meta {"label": ..., "cost_gap": ..., ...}

Line one is the dimension, then one ``re im`` line per component written
with Python's shortest round-trip float repr. Optional metadata follows on
``# meta`` lines. Catalog lines are JSON objects tagged with ``schema``.
"""

from __future__ import annotations

import json
import math
import os
import threading
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

CATALOG_SCHEMA = "siclab.solution/1"


class FormatError(ValueError):
    pass


@dataclass
class SolutionRecord:
    d: int
    vector: np.ndarray
    label: str | None = None
    cost_gap: float | None = None
    stabilizer_order: int | None = None
    stabilizer_generators: list | None = None
    zauner_class: int | None = None
    fingerprint: str | None = None
    seed: int | None = None
    trial: int | None = None
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat())

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=complex)
        if self.vector.shape != (self.d,):
            raise FormatError(f"vector has shape {self.vector.shape}, expected ({self.d},)")
        if not np.all(np.isfinite(self.vector)):
            raise FormatError("vector contains non-finite values")

    def metadata(self) -> dict:
        out = asdict(self)
        out.pop("vector")
        out.pop("d")
        return out

    def to_json(self) -> dict:
        return {"schema": CATALOG_SCHEMA, "d": self.d,
                "vector": [[float(z.real), float(z.imag)] for z in self.vector],
                **self.metadata()}

    @classmethod
    def from_json(cls, obj: dict) -> "SolutionRecord":
        if obj.get("schema") != CATALOG_SCHEMA:
            raise FormatError(f"unsupported catalog schema {obj.get('schema')!r}")
        obj = dict(obj)
        obj.pop("schema")
        try:
            vec = [complex(float(re), float(im)) for re, im in obj.pop("vector")]
            d = int(obj.pop("d"))
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"malformed catalog record: {exc}") from None
        known = {f for f in cls.__dataclass_fields__} - {"d", "vector"}
        return cls(d, np.array(vec, dtype=complex), **{k: v for k, v in obj.items() if k in known})


def _parse_float(tok: str, lineno: int) -> float:
    try:
        x = float(tok)
    except ValueError:
        raise FormatError(f"line {lineno}: cannot parse {tok!r} as a number") from None
    if not math.isfinite(x):
        raise FormatError(f"line {lineno}: non-finite value {tok!r}")
    return x


def format_fiducial(record: SolutionRecord) -> str:
    lines = [f"d {record.d}"]
    lines += [f"{float(z.real)!r} {float(z.imag)!r}" for z in record.vector]
    lines.append("# meta " + json.dumps(record.metadata(), sort_keys=True))
    return "\n".join(lines) + "\n"


def write_fiducial(record: SolutionRecord, path) -> Path:
    path = Path(path)
    path.write_text(format_fiducial(record), encoding="utf-8")
    return path


def parse_fiducial(text: str) -> SolutionRecord:
    lines = text.splitlines()
    body = [(i + 1, ln.strip()) for i, ln in enumerate(lines) if ln.strip() and not ln.startswith("#")]
    meta = {}
    for ln in lines:
        if ln.startswith("# meta "):
            try:
                meta = json.loads(ln[len("# meta "):])
            except json.JSONDecodeError as exc:
                raise FormatError(f"malformed metadata line: {exc}") from None
    if not body:
        raise FormatError("empty fiducial file")
    lineno, header = body[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != "d" or not parts[1].isdigit() or int(parts[1]) < 1:
        raise FormatError(f"line {lineno}: expected header 'd <N>', got {header!r}")
    d = int(parts[1])
    entries = body[1:]
    if len(entries) != d:
        raise FormatError(f"expected {d} component lines, found {len(entries)}")
    vec = []
    for lineno, ln in entries:
        toks = ln.split()
        if len(toks) != 2:
            raise FormatError(f"line {lineno}: expected '<re> <im>', got {ln!r}")
        vec.append(complex(_parse_float(toks[0], lineno), _parse_float(toks[1], lineno)))
    known = {f for f in SolutionRecord.__dataclass_fields__} - {"d", "vector"}
    return SolutionRecord(d, np.array(vec, dtype=complex), **{k: v for k, v in meta.items() if k in known})


def read_fiducial(path) -> SolutionRecord:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise FormatError(f"{path}: {exc.strerror}") from None
    try:
        return parse_fiducial(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


_append_lock = threading.Lock()


def catalog_append(record: SolutionRecord, path) -> None:
    """Append one JSON line; the whole line goes out in a single write."""
    path = Path(path)
    line = (json.dumps(record.to_json(), sort_keys=True) + "\n").encode("utf-8")
    with _append_lock:
        try:
            fd = os.open(path, os.O_WRONLY | os.O_APPEND | os.O_CREAT, 0o644)
            try:
                os.write(fd, line)
            finally:
                os.close(fd)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot append to catalog {path}: {exc.strerror}") from None


def read_catalog(path) -> list[SolutionRecord]:
    path = Path(path)
    if not path.exists():
        return []
    out = []
    with path.open(encoding="utf-8") as fh:
        for lineno, ln in enumerate(fh, 1):
            if not ln.strip():
                continue
            if not ln.endswith("\n"):
                # partial trailing line from an in-progress writer
                break
            try:
                obj = json.loads(ln)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: {exc}") from None
            out.append(SolutionRecord.from_json(obj))
    return out
