"""Run configured suites and assemble the report."""

from __future__ import annotations

import logging
import time
from pathlib import Path

from .baselines import load_baselines, save_baselines
from .config import ExperimentConfig
from .report import ExperimentReport, environment_stamp
from .suites import SUITE_FUNCS

__all__ = ["run_experiment"]

log = logging.getLogger(__name__)


def run_experiment(cfg: ExperimentConfig, out_dir=None, update_baselines: bool = False) -> ExperimentReport:
    """Execute ``cfg.suites()`` in order; write outputs when ``out_dir`` is given.

    Intervals with no stored baseline are written to ``<out>/baselines.json``
    (merged with the loaded table), and also to the configured baseline file
    when ``update_baselines`` is set.
    """
    baselines = load_baselines(cfg.baselines)
    dump_dir = Path(out_dir) / "fields" if (out_dir is not None and cfg.dump_fields) else None
    results, timings = [], {}
    for name in cfg.suites():
        log.info("running suite %s", name)
        t0 = time.perf_counter()
        res = SUITE_FUNCS[name](cfg, baselines, dump_dir)
        timings[name] = round(time.perf_counter() - t0, 3)
        log.info("suite %s: %s in %.1f s", name, "pass" if res.passed else "FAIL", timings[name])
        results.append(res)

    fresh = {r.summary["baseline_key"]: r.summary["interval"] for r in results if r.summary.get("baseline") == "established"}
    report = ExperimentReport(cfg.to_dict(), results, environment_stamp({"runtime_seconds": timings}))
    if out_dir is not None:
        report.write(out_dir)
        if fresh:
            save_baselines(Path(out_dir) / "baselines.json", {**baselines, **fresh})
    if update_baselines and fresh:
        if cfg.baselines is None:
            raise ValueError("update_baselines needs a writable baseline path in the config")
        save_baselines(cfg.baselines, {**baselines, **fresh})
    return report
