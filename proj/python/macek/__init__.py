"""Multi-expert-agent object classification kernel.

A CenterAgent routes tag queries to per-class expert agents under a degree
of confidence; agents score queries against K/M/D-region feature tables,
learn new features online, and keep their K-regions globally disjoint
through a raise/fall consultation protocol. Everything runs under a
deterministic seeded scheduler.
"""

import json as _json

from macek._core import (
    ExpertAgent,
    FeatureCollection,
    KernelError,
    LearningParams,
    Simulation,
    Thresholds,
    TimeIntervalMemory,
    generate_corpus,
    preprocess_text,
)
from macek._core import compare_baseline as _compare_baseline
from macek._core import run_scenario as _run_scenario

__all__ = [
    "ExpertAgent",
    "FeatureCollection",
    "KernelError",
    "LearningParams",
    "Simulation",
    "Thresholds",
    "TimeIntervalMemory",
    "compare_baseline",
    "generate_corpus",
    "preprocess_text",
    "run_scenario",
    "simulation",
]


def run_scenario(corpus_path, manifest_path, config=None, metrics_path="", trace_path="",
                 snapshot_path=""):
    """Run a scenario over a corpus file; returns the totals as a dict."""
    config_json = _json.dumps(config or {})
    totals = _run_scenario(str(corpus_path), str(manifest_path), config_json,
                           str(metrics_path), str(trace_path), str(snapshot_path))
    return _json.loads(totals)


def compare_baseline(corpus_path, manifest_path, config=None):
    """Selective dispatch vs the consult-everyone baseline; returns a dict."""
    config_json = _json.dumps(config or {})
    return _json.loads(_compare_baseline(str(corpus_path), str(manifest_path), config_json))


def simulation(base_sets, config=None):
    """Build a Simulation from {class: iterable_of_features} and a config dict."""
    if isinstance(base_sets, dict):
        base_sets = list(base_sets.items())
    sets = [(c, set(features)) for c, features in base_sets]
    return Simulation(sets, _json.dumps(config or {}))
