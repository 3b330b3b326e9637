"""Regression baselines for empirical ratio intervals.

Baselines are keyed by a hash of everything that determines the interval
(suite section, grid sizes, domain length and base seed).  A missing key is
not a failure: the run reports the freshly measured interval as the new
baseline and writes it next to the report.
"""

from __future__ import annotations

import json
from importlib import resources
from pathlib import Path

from .config import spec_hash
from .report import Check

__all__ = ["baseline_key", "load_baselines", "compare_interval", "save_baselines"]


def baseline_key(suite: str, section: dict, sizes, length: float, seed: int) -> str:
    return f"{suite}:{spec_hash({'section': section, 'sizes': list(sizes), 'length': length, 'seed': seed})}"


def load_baselines(path=None) -> dict:
    if path is None:
        text = resources.files("paracomm").joinpath("data/baselines.json").read_text()
    else:
        p = Path(path)
        if not p.is_file():
            return {}
        text = p.read_text()
    return json.loads(text)


def save_baselines(path, table: dict) -> None:
    Path(path).write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")


def compare_interval(name: str, interval: dict, baseline: dict | None, tol: float) -> list[Check]:
    """One check per interval endpoint: relative change <= tol."""
    if baseline is None:
        return []
    checks = []
    for q, (lo, hi) in sorted(interval.items()):
        if q not in baseline:
            continue
        blo, bhi = baseline[q]
        for label, v, b in (("min", lo, blo), ("max", hi, bhi)):
            rel = abs(v - b) / abs(b) if b != 0 else abs(v)
            checks.append(Check(f"{name} baseline {q} {label}", rel, tol))
    return checks
