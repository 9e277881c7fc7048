"""Python bindings for the pptlab prompt-tuning toolkit."""

import json

from ._pptlab import (
    PptlabError,
    Vocabulary,
    count_tunable,
    format_cell,
    label_counts,
    normalize,
    option_config,
    render,
    reserved_words,
    sample_fewshot,
    tokenize,
    verbalizer,
)
from . import _pptlab

__all__ = [
    "PptlabError",
    "Vocabulary",
    "build_nsp3",
    "build_nss",
    "build_pseudo_ssc",
    "build_unified_mc",
    "count_tunable",
    "format_cell",
    "label_counts",
    "normalize",
    "option_config",
    "render",
    "render_report",
    "reserved_words",
    "run_experiment",
    "sample_fewshot",
    "tokenize",
    "verbalizer",
]


def _records(lines):
    return [json.loads(line) for line in lines]


def build_nsp3(documents, n, seed):
    """Three-way next sentence examples; documents are lists of sentences."""
    return _records(_pptlab.build_nsp3(documents, n, seed))


def build_nss(documents, n, seed, num_options=6):
    return _records(_pptlab.build_nss(documents, n, seed, num_options))


def build_unified_mc(documents, n, seed):
    return _records(_pptlab.build_unified_mc(documents, n, seed))


def build_pseudo_ssc(documents, n, seed):
    return _records(_pptlab.build_pseudo_ssc(documents, n, seed))


def run_experiment(method, task, workdir, seeds=(10, 20, 30, 40, 50), samples=32, epochs=50, f1=False):
    """Tune one method over seeds; returns the result record as a dict."""
    line = _pptlab.run_experiment(method, str(task), str(workdir), list(seeds), samples, epochs, f1)
    return json.loads(line)


def render_report(results, layout="main"):
    """Render result dicts (or JSON lines) into (csv, markdown, warnings)."""
    lines = [r if isinstance(r, str) else json.dumps(r) for r in results]
    return _pptlab.render_report(lines, layout)
