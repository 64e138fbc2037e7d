"""Agent engine for bi-temporal remote sensing change analysis."""

import json as _json

from . import _changegpt
from ._changegpt import (
    Error,
    Server,
    changed_pixels,
    class_pixels,
    classify_error,
    difference_fraction,
    estimate_latency,
    format_filename,
    parse_filename,
    precision,
    recall,
)

__all__ = [
    "Error",
    "Server",
    "ask",
    "changed_pixels",
    "class_pixels",
    "classify_error",
    "cli",
    "difference_fraction",
    "estimate_latency",
    "evaluate",
    "format_filename",
    "list_tools",
    "mcnemar",
    "parse_completion",
    "parse_filename",
    "precision",
    "recall",
    "segmentation_scores",
]


def ask(pre, cur, question, backend="http", fixtures="", pair_id=None, crop=None,
        crop_parent="pre", max_steps=12, remotes=None, export_dir=None):
    """Answers one question about an image pair.

    Returns a dict with answer, status, tools_used and trace. With export_dir
    the session (images, log, history) is saved there afterwards.
    """
    return _json.loads(_changegpt.ask(
        str(pre), str(cur), question, backend, str(fixtures), pair_id,
        None if crop is None else tuple(crop), crop_parent, max_steps, remotes or {},
        None if export_dir is None else str(export_dir)))


def evaluate(dataset, backend, fixtures="", max_steps=12):
    """Runs a JSON Lines dataset; returns a dict with report, summary and traces."""
    return _json.loads(_changegpt.evaluate(str(dataset), backend, str(fixtures), max_steps))


def list_tools(fixtures=""):
    return _json.loads(_changegpt.list_tools(str(fixtures)))


def parse_completion(text):
    """Parses one model completion into thought plus action or final answer."""
    return _json.loads(_changegpt.parse_completion(text))


def mcnemar(b, c):
    return _json.loads(_changegpt.mcnemar(b, c))


def segmentation_scores(pred_png, gt_png):
    return _json.loads(_changegpt.segmentation_scores(str(pred_png), str(gt_png)))


def cli(args):
    """Runs the command-line tool in-process; returns (exit_code, stdout, stderr)."""
    return _changegpt.cli([str(a) for a in args])
