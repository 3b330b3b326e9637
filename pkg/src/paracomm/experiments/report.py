"""Report records and their JSON / CSV serialization."""

from __future__ import annotations

import csv
import json
import math
import platform
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import scipy

__all__ = ["Check", "CaseRecord", "SuiteResult", "ExperimentReport", "environment_stamp", "CSV_HEADER"]

CSV_HEADER = ("suite", "case", "seed", "n", "quantity", "value")


def _clean(x):
    """JSON-safe plain Python value (numpy scalars, tuples, non-finite floats)."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


@dataclass
class Check:
    """One asserted comparison ``value <op> limit``."""

    name: str
    value: float
    limit: float
    op: str = "<="

    @property
    def passed(self) -> bool:
        v, lim = float(self.value), float(self.limit)
        if not math.isfinite(v):
            return False
        return {"<=": v <= lim, ">=": v >= lim, ">": v > lim, "<": v < lim, "==": v == lim}[self.op]

    def to_dict(self) -> dict:
        return _clean({"name": self.name, "value": self.value, "limit": self.limit, "op": self.op, "passed": self.passed})


@dataclass
class CaseRecord:
    """Inputs (recipe and its hash), measured values and asserted checks."""

    case: str
    seed: object
    n: int
    spec: dict
    spec_hash: str
    values: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        return _clean(
            {
                "case": self.case,
                "seed": self.seed,
                "n": self.n,
                "spec": self.spec,
                "spec_hash": self.spec_hash,
                "values": self.values,
                "checks": [c.to_dict() for c in self.checks],
                "notes": self.notes,
                "passed": self.passed,
            }
        )


@dataclass
class SuiteResult:
    suite: str
    cases: list
    summary: dict = field(default_factory=dict)
    checks: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.cases) and all(c.passed for c in self.checks)

    def failures(self) -> list[str]:
        out = [f"{self.suite}/{c.case}: {k.name}" for c in self.cases for k in c.checks if not k.passed]
        out += [f"{self.suite}: {k.name}" for k in self.checks if not k.passed]
        return out

    def to_dict(self) -> dict:
        return _clean(
            {
                "suite": self.suite,
                "passed": self.passed,
                "summary": self.summary,
                "checks": [c.to_dict() for c in self.checks],
                "cases": [c.to_dict() for c in self.cases],
            }
        )


def environment_stamp(extra: dict | None = None) -> dict:
    stamp = {
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "platform": platform.platform(),
    }
    stamp.update(extra or {})
    return _clean(stamp)


@dataclass
class ExperimentReport:
    """Everything a run produced.  Only ``environment`` varies between
    repeated runs of the same configuration."""

    config: dict
    results: list
    environment: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def payload(self) -> dict:
        """The reproducible part of the report."""
        return _clean(
            {
                "config": self.config,
                "passed": self.passed,
                "suites": {r.suite: r.to_dict() for r in self.results},
            }
        )

    def to_dict(self) -> dict:
        d = self.payload()
        d["environment"] = self.environment
        return d

    def csv_rows(self):
        for r in self.results:
            for c in r.cases:
                seed = c.seed if not isinstance(c.seed, (list, tuple)) else "-".join(map(str, c.seed))
                for q, v in c.values.items():
                    if isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool):
                        yield (r.suite, c.case, seed, c.n, q, repr(float(v)))

    def write(self, out_dir) -> tuple[Path, Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        rp = out / "report.json"
        rp.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        cp = out / "ratios.csv"
        with cp.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            w.writerows(self.csv_rows())
        return rp, cp
