"""Batch verification of curvature identities."""

from .checks import CHECKS, SUITES, Check
from .runner import (
    CheckRecord,
    ConvergenceTable,
    NotDifferential,
    SuiteConfig,
    VerificationReport,
    convergence_study,
    run,
)
from .schema import ConfigError

__all__ = [
    "CHECKS",
    "SUITES",
    "Check",
    "CheckRecord",
    "ConfigError",
    "ConvergenceTable",
    "NotDifferential",
    "SuiteConfig",
    "VerificationReport",
    "convergence_study",
    "run",
]
