# src/hols/validate.py
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import HolsError, ParseError, ValidationError
from .graph import VertexIdMap, load_edge_list, parse_edge_line, parse_label_line
from .logging_utils import LOGGER_NAME

logger = logging.getLogger(LOGGER_NAME)


@dataclass
class LineError:
    line_number: int  # ファイル上の行番号（1始まり。file_errorは0）
    reason: str
    raw: str


def _as_line_error(line_number: int, raw: bytes, e: ParseError | ValidationError) -> LineError:
    return LineError(line_number, e.reason, raw.decode("utf-8", errors="replace").rstrip("\r\n"))


def validate_edge_lines(lines: Iterable[bytes]) -> list[LineError]:
    errors: list[LineError] = []
    for i, raw in enumerate(lines, start=1):
        try:
            parse_edge_line(i, raw)
        except (ParseError, ValidationError) as e:
            errors.append(_as_line_error(i, raw, e))
    return errors


def validate_label_lines(lines: Iterable[bytes], idmap: VertexIdMap | None = None, one_based: bool = False) -> list[LineError]:
    """
    Rule:
      - 'vertex_id class_id' の2列
      - idmap があれば vertex_id は辺リストに存在すること
      - 同じ頂点に異なるクラスを付けない
    """
    errors: list[LineError] = []
    seen: dict[int, int] = {}
    for i, raw in enumerate(lines, start=1):
        try:
            parsed = parse_label_line(i, raw, one_based=one_based)
        except (ParseError, ValidationError) as e:
            errors.append(_as_line_error(i, raw, e))
            continue
        if parsed is None:
            continue
        v, c = parsed
        if idmap is not None and v not in idmap:
            errors.append(_as_line_error(i, raw, ValidationError(f"vertex_unknown: {v}", i)))
            continue
        if v in seen and seen[v] != c:
            errors.append(_as_line_error(i, raw, ValidationError(f"class_collision: vertex {v} labeled {seen[v]} and {c}", i)))
            continue
        seen[v] = c
    return errors


def write_errors_csv(path: Path, errors: Iterable[tuple[str, LineError]]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["file", "line_number", "reason", "raw"])
        for source, e in errors:
            writer.writerow([source, e.line_number, e.reason, e.raw])


def run_validate(graph_path: Path, labels_path: Path | None, errors_csv: Path, one_based: bool = False) -> int:
    logger.info(f"validate: start graph={graph_path} labels={labels_path}")

    found: list[tuple[str, LineError]] = []
    try:
        with graph_path.open("rb") as f:
            edge_errors = validate_edge_lines(f)
        found.extend((graph_path.name, e) for e in edge_errors)

        if labels_path is not None:
            idmap = None
            if not edge_errors:
                with graph_path.open("rb") as f:
                    _, idmap = load_edge_list(f)
            with labels_path.open("rb") as f:
                found.extend((labels_path.name, e) for e in validate_label_lines(f, idmap, one_based=one_based))

    except (OSError, HolsError) as e:
        file_error = LineError(0, f"file_error: {type(e).__name__}: {e}", "")
        write_errors_csv(errors_csv, [("", file_error)])
        logger.exception(f"validate: file_error graph={graph_path}")
        print(f"INVALID: file_error -> {errors_csv}")
        return 2

    write_errors_csv(errors_csv, found)
    logger.info(f"validate: errors={len(found)} errors_csv={errors_csv}")

    if found:
        print(f"INVALID: {len(found)} error(s). -> {errors_csv}")
        logger.info("validate: finished status=INVALID")
        return 2

    print("VALID: no errors.")
    logger.info("validate: finished status=VALID")
    return 0
