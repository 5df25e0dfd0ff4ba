"""Flow-record types and CSV / JSON-lines ingestion.

Throughput is always bits/second. When a record carries no throughput it is
derived from ``bytes * 8 / duration``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable

FIELDS = ("flow_id", "src", "dst", "bytes", "duration", "throughput")
REQUIRED = FIELDS[:5]

FORMATS = {"csv": "csv", "jsonl": "jsonl", "json-lines": "jsonl"}


class FlowParseError(ValueError):
    """A flow file row could not be turned into a FlowRecord."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)


class DuplicateFlowIdError(FlowParseError):
    pass


def compute_throughput(nbytes: int, duration: float) -> float:
    """Average throughput in bits/second of ``nbytes`` octets over ``duration`` seconds."""
    if not duration > 0:
        raise ValueError(f"duration must be positive, got {duration!r}")
    return nbytes * 8 / duration


@dataclass(frozen=True)
class FlowRecord:
    flow_id: str
    src: str
    dst: str
    bytes: int
    duration: float
    throughput: float

    @classmethod
    def from_counts(cls, flow_id: str, src: str, dst: str, nbytes: int, duration: float) -> FlowRecord:
        return cls(flow_id, src, dst, nbytes, duration, compute_throughput(nbytes, duration))

    def as_dict(self) -> dict:
        return {
            "flow_id": self.flow_id,
            "src": self.src,
            "dst": self.dst,
            "bytes": self.bytes,
            "duration": self.duration,
            "throughput": self.throughput,
        }


def _to_bytes(raw, line: int) -> int:
    if isinstance(raw, bool):
        raise FlowParseError("non-numeric bytes", line)
    if isinstance(raw, int):
        value = raw
    elif isinstance(raw, str):
        try:
            value = int(raw.strip())
        except ValueError:
            raise FlowParseError(f"non-numeric bytes {raw!r}", line) from None
    else:
        raise FlowParseError(f"non-numeric bytes {raw!r}", line)
    if value < 0:
        raise FlowParseError("negative bytes", line)
    return value


def _to_real(raw, name: str, line: int) -> float:
    if isinstance(raw, bool) or not isinstance(raw, (int, float, str)):
        raise FlowParseError(f"non-numeric {name} {raw!r}", line)
    try:
        value = float(raw)
    except ValueError:
        raise FlowParseError(f"non-numeric {name} {raw!r}", line) from None
    if not math.isfinite(value):
        raise FlowParseError(f"non-finite {name}", line)
    return value


def _build(row: dict, line: int) -> FlowRecord:
    for name in REQUIRED:
        value = row.get(name)
        if value is None or (isinstance(value, str) and value.strip() == ""):
            raise FlowParseError(f"missing field {name!r}", line)
    nbytes = _to_bytes(row["bytes"], line)
    duration = _to_real(row["duration"], "duration", line)
    if duration <= 0:
        raise FlowParseError("non-positive duration", line)
    raw_tp = row.get("throughput")
    if raw_tp is None or (isinstance(raw_tp, str) and raw_tp.strip() == ""):
        throughput = compute_throughput(nbytes, duration)
    else:
        throughput = _to_real(raw_tp, "throughput", line)
        if throughput < 0:
            raise FlowParseError("negative throughput", line)
    return FlowRecord(str(row["flow_id"]), str(row["src"]), str(row["dst"]), nbytes, duration, throughput)


def _iter_csv(text: str):
    reader = csv.reader(io.StringIO(text, newline=""))
    header = None
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        if header is None:
            header = [cell.strip() for cell in row]
            missing = [name for name in REQUIRED if name not in header]
            if missing:
                raise FlowParseError(f"header lacks column(s) {', '.join(missing)}", line)
            continue
        if len(row) != len(header):
            raise FlowParseError(f"expected {len(header)} fields, got {len(row)}", line)
        yield line, dict(zip(header, row))


def _iter_jsonl(text: str):
    for line, raw in enumerate(text.splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise FlowParseError(f"invalid JSON ({exc.msg})", line) from None
        if not isinstance(obj, dict):
            raise FlowParseError("expected a JSON object", line)
        yield line, obj


def parse_flow_records(source: bytes | BinaryIO, format: str = "csv") -> list[FlowRecord]:
    """Parse flow records from UTF-8 encoded CSV or JSON-lines content.

    Records come back in input order. A missing or empty ``throughput`` is
    derived from bytes and duration. Raises FlowParseError (with the 1-based
    line number) on malformed rows and DuplicateFlowIdError on a repeated
    ``flow_id``.
    """
    try:
        fmt = FORMATS[format]
    except KeyError:
        raise ValueError(f"unknown flow format {format!r}") from None
    data = source if isinstance(source, (bytes, bytearray)) else source.read()
    try:
        text = bytes(data).decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise FlowParseError(f"input is not valid UTF-8: {exc}") from None

    rows = _iter_csv(text) if fmt == "csv" else _iter_jsonl(text)
    records = []
    seen: dict[str, int] = {}
    for line, row in rows:
        rec = _build(row, line)
        if rec.flow_id in seen:
            raise DuplicateFlowIdError(
                f"duplicate flow_id {rec.flow_id!r} (first seen at line {seen[rec.flow_id]})", line
            )
        seen[rec.flow_id] = line
        records.append(rec)
    return records


def format_for_path(path: str | Path) -> str:
    suffix = Path(path).suffix.lower()
    return "jsonl" if suffix in (".jsonl", ".ndjson", ".json") else "csv"


def read_flow_records(path: str | Path, format: str | None = None) -> list[FlowRecord]:
    with open(path, "rb") as fh:
        return parse_flow_records(fh, format or format_for_path(path))


def serialize_flow_records(records: Iterable[FlowRecord], format: str = "csv") -> bytes:
    """Inverse of parse_flow_records; floats use repr so re-parsing is exact."""
    fmt = FORMATS[format]
    out = io.StringIO(newline="")
    if fmt == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(FIELDS)
        for r in records:
            writer.writerow([r.flow_id, r.src, r.dst, r.bytes, repr(r.duration), repr(r.throughput)])
    else:
        for r in records:
            out.write(json.dumps(r.as_dict()) + "\n")
    return out.getvalue().encode("utf-8")
