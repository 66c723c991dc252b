"""JSON reports and their schema."""
from __future__ import annotations

import json
import platform
from functools import lru_cache
from importlib import resources

import jsonschema
import numba
import numpy as np


@lru_cache(maxsize=1)
def schema() -> dict:
    text = resources.files("slowbond").joinpath("schema/report.json").read_text(encoding="utf-8")
    return json.loads(text)


def versions() -> dict:
    from . import __version__

    return {"python": platform.python_version(), "numpy": np.__version__,
            "numba": numba.__version__, "slowbond": __version__}


def _plain(x):
    """Numpy scalars and arrays to JSON-native values."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, np.generic):
        return x.item()
    return x


def build_report(cfg, checks: list[dict], summary: dict, seconds: float, files: list[str]) -> dict:
    names = [c["name"] for c in checks]
    if len(set(names)) != len(names):
        raise ValueError("duplicate check names in report")
    report = {
        "schema_version": 1,
        "kind": cfg.kind,
        "config": _plain(cfg.to_dict()),
        "checks": _plain(checks),
        "passed": all(c["passed"] for c in checks),
        "summary": _plain(summary),
        "timing": {"seconds": float(seconds)},
        "versions": versions(),
        "files": list(files),
    }
    validate(report)
    return report


def validate(report: dict) -> None:
    jsonschema.validate(report, schema())


def write_report(report: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        report = json.load(fh)
    validate(report)
    return report
