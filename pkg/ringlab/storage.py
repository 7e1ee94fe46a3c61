"""
File outputs: atomic writes, JSON sidecars and sweep record export.

Every artifact is written to a temporary file beside its destination and
renamed into place, so a failed run never leaves a partial file behind.
"""

import csv
import io
import json
import logging
import os
import tempfile
from typing import Any, Dict, List, Optional, Sequence

from ringlab.schemas import ScanRecord

logger = logging.getLogger(__name__)

CSV_HEADER = [
    "lambda", "alpha", "N", "dt", "seed", "m", "r", "mu_analytic", "mu_numeric",
    "E_uniform", "E_soliton", "branch", "drift_rate", "residual", "status",
]


def sidecar_path(path: str) -> str:
    return f"{path}.json"


def mirror_path(path: str) -> str:
    """JSON mirror of a CSV table: same stem, .json suffix"""
    stem, extension = os.path.splitext(path)
    if not extension or extension == ".json":
        return f"{path}.records.json"
    return f"{stem}.json"


def atomic_write_text(path: str, text: str) -> str:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp_path = tempfile.mkstemp(prefix=".ringlab-", suffix=".tmp", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.remove(tmp_path)
        raise
    logger.info(f"Wrote {path}")
    return path


def write_json(path: str, payload: Any) -> str:
    return atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def read_json(path: str) -> Any:
    with open(path, encoding="utf-8") as handle:
        return json.load(handle)


def format_value(value: Any) -> str:
    """CSV cell: floats with 17 significant digits, absent values empty"""
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return f"{value:.16e}"
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def record_row(record: ScanRecord) -> List[str]:
    data = record.model_dump(by_alias=True)
    return [format_value(data[key]) for key in CSV_HEADER]


def records_to_csv(records: Sequence[ScanRecord]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for record in records:
        writer.writerow(record_row(record))
    return buffer.getvalue()


def records_to_json(records: Sequence[ScanRecord]) -> List[Dict[str, Any]]:
    return [record.model_dump(mode="json", by_alias=True) for record in records]


def write_records(
    path: str,
    records: Sequence[ScanRecord],
    config: Optional[Dict[str, Any]] = None,
    extra: Optional[Dict[str, Any]] = None,
) -> Dict[str, str]:
    """
    Write a sweep table as CSV plus its JSON mirror and sidecar

    Args:
        path: CSV destination
        records: rows in output order
        config: effective run configuration echoed into the sidecar
        extra: additional sidecar entries (e.g. measured orders)

    Returns:
        Dict mapping artifact kind to written path
    """
    sidecar = {"config": config or {}, "rows": len(records), "header": CSV_HEADER}
    if extra:
        sidecar.update(extra)
    return {
        "csv": atomic_write_text(path, records_to_csv(records)),
        "json": write_json(mirror_path(path), records_to_json(records)),
        "sidecar": write_json(sidecar_path(path), sidecar),
    }
