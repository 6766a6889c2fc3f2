from __future__ import annotations

import csv
import io
import logging
import math
from pathlib import Path
from typing import Any, Iterable, Sequence

from pshlab.errors import EmitError
from pshlab.families import LevelSetCloud
from pshlab.result import to_plain

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.17g"
CLOUD_COLUMNS = ("task", "kind", "c", "index", "coords", "value", "uncertainty", "member", "borderline", "unresolved")
KERNEL_COLUMNS = ("re_z", "im_z", "re_w", "im_w", "K", "logK")


# ##################################################################
# format cell
# floats with 17 significant digits, non-finite values spelled out
def format_cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return FLOAT_FORMAT % value
    if isinstance(value, dict) and set(value) == {"re", "im"}:
        return f"{format_cell(_number(value['re']))}{_signed(_number(value['im']))}j"
    if isinstance(value, (list, tuple)):
        return " ".join(format_cell(v) for v in value)
    if value is None:
        return ""
    return str(value)


def _number(value: Any) -> Any:
    # to_plain spells non-finite floats as strings
    if value in ("inf", "-inf", "nan"):
        return float(value)
    return value


def _signed(value: Any) -> str:
    text = format_cell(float(value))
    return text if text.startswith("-") else "+" + text


def rows_to_csv(rows: Iterable[Sequence[Any]], columns: Sequence[str]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_cell(v) for v in row])
    return buffer.getvalue()


def write_text(path: str | Path, text: str) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    except OSError as err:
        raise EmitError(f"cannot write {path}: {err.strerror or err}", str(path)) from err
    logger.debug("wrote %d bytes to %s", len(text), path)
    return path


# ##################################################################
# emit json
# the report as sorted-key json without timings, byte-identical for
# repeated runs of the same scenario and seed
def emit_json(report: Any, path: str | Path, timings: bool = False) -> Path:
    return write_text(path, report.to_json(timings=timings) + "\n")


# ##################################################################
# emit csv
# every cloud inside the report flattened to one row per grid point
def emit_csv(report: Any, path: str | Path) -> Path:
    rows = []
    for result in report.to_dict()["results"]:
        for cloud in _clouds(result.get("payload") or {}):
            rows.extend(_cloud_rows(result["task"], cloud))
    return write_text(path, rows_to_csv(rows, CLOUD_COLUMNS))


def emit_cloud_csv(cloud: LevelSetCloud, path: str | Path, task: str = "") -> Path:
    return write_text(path, rows_to_csv(_cloud_rows(task, to_plain(cloud)), CLOUD_COLUMNS))


def _clouds(payload: Any) -> Iterable[dict]:
    if isinstance(payload, dict):
        if "points" in payload and "kind" in payload and "grid" in payload:
            yield payload
            return
        for key in sorted(payload):
            yield from _clouds(payload[key])


def _cloud_rows(task: str, cloud: dict) -> list[list[Any]]:
    return [
        [
            task,
            cloud["kind"],
            _number(cloud["c"]),
            p["index"],
            p["coords"],
            _number(p["value"]),
            _number(p["uncertainty"]),
            p["member"],
            p["borderline"],
            p["unresolved"],
        ]
        for p in cloud["points"]
    ]


# ##################################################################
# emit kernel csv
# bergman kernel samples: re/im of z and w, K and log K (-inf on the
# structural zero set)
def emit_kernel_csv(samples: Iterable[tuple[complex, complex, float]], path: str | Path) -> Path:
    rows = []
    for z, w, k in samples:
        z, w = complex(z), complex(w)
        log_k = math.log(k) if k > 0 else -math.inf
        rows.append([z.real, z.imag, w.real, w.imag, float(k), log_k])
    return write_text(path, rows_to_csv(rows, KERNEL_COLUMNS))


def emit_rows_csv(rows: Sequence[dict[str, Any]], path: str | Path) -> Path:
    columns = list(rows[0]) if rows else []
    return write_text(path, rows_to_csv(([r[c] for c in columns] for r in rows), columns))
