"""Deterministic JSON/CSV report emission.

Reports serialize to byte-identical JSON for identical inputs: keys are
sorted, floats go through repr, and no clock or host state is included
unless explicitly requested.
"""

from __future__ import annotations

import dataclasses
import json
import os
from typing import Iterable, List, Optional, Sequence

import numpy as np

SCHEMA_VERSION = 1


def to_jsonable(obj):
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):
        return obj
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return [to_jsonable(v) for v in obj.tolist()]
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def assertion(name: str, value, tolerance, passed: bool,
              target=None) -> dict:
    rec = {"name": name, "value": to_jsonable(value),
           "tolerance": to_jsonable(tolerance), "passed": bool(passed)}
    if target is not None:
        rec["target"] = to_jsonable(target)
    return rec


def build_report(command: str, config: dict, seed: Optional[int],
                 results: dict, assertions: Sequence[dict],
                 timing_s: Optional[float] = None) -> dict:
    rep = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": to_jsonable(config),
        "seed": seed,
        "results": to_jsonable(results),
        "assertions": list(assertions),
        "passed": all(a["passed"] for a in assertions),
    }
    if timing_s is not None:
        rep["timing_s"] = float(timing_s)
    return rep


def json_bytes(report: dict) -> bytes:
    return (json.dumps(to_jsonable(report), sort_keys=True, indent=2)
            + "\n").encode()


def write_json(report: dict, path: str) -> None:
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(json_bytes(report))


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def write_csv(path: str, header: Sequence[str],
              rows: Iterable[Sequence]) -> None:
    lines: List[str] = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    parent = os.path.dirname(os.path.abspath(path))
    os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write("\n".join(lines) + "\n")
