"""Verification suites, configuration, reports and the command-line harness."""

from .config import ConfigError, ExperimentConfig, dump_config, load_config
from .report import CaseRecord, Check, ExperimentReport, SuiteResult
from .runner import run_experiment
from .suites import suite_carleson, suite_equivalence, suite_identities, suite_theorem1

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "dump_config",
    "load_config",
    "CaseRecord",
    "Check",
    "ExperimentReport",
    "SuiteResult",
    "run_experiment",
    "suite_carleson",
    "suite_equivalence",
    "suite_identities",
    "suite_theorem1",
]
