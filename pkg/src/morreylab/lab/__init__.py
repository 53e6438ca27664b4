"""Experiment harness: corpora, experiments, search, convergence and reports."""

from .corpus import Corpus, FunctionSpec, build_corpus, default_specs, zero_corpus
from .experiments import EXPERIMENTS, Workspace, run_experiment
from .search import adversarial_search
from .convergence import convergence_study
from .report import ExperimentReport, InstanceResult, read_report, write_report

__all__ = [
    "Corpus", "FunctionSpec", "build_corpus", "default_specs", "zero_corpus",
    "EXPERIMENTS", "Workspace", "run_experiment", "adversarial_search", "convergence_study",
    "ExperimentReport", "InstanceResult", "read_report", "write_report",
]
