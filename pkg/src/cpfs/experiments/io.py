"""CSV writers shared by the command line and the demos."""
from __future__ import annotations

import csv
import io
import json
import math
from importlib import metadata

import numpy as np

from .stats import MCEstimate

RESULT_COLUMNS = ["experiment", "param_json", "estimate", "ci_lo", "ci_hi", "n", "censored",
                  "bound_value", "bound_vacuous", "seed"]
SWEEP_COLUMNS = ["lambda", "estimate", "ci_lo", "ci_hi"]
VERIFY_COLUMNS = ["check_name", "instance_id", "deviation", "tolerance", "pass"]


def tool_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, bool):
        return "1" if x else "0"
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _json_safe(x):
    if isinstance(x, np.generic):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def dump_json(obj) -> str:
    """Strict JSON; non-finite floats become the strings ``inf``/``nan``."""
    return json.dumps(_json_safe(obj), sort_keys=True, default=str, allow_nan=False)


def header_lines(config: dict, seed) -> list[str]:
    return [f"# cpfs {tool_version()}",
            "# config " + dump_json(config),
            f"# seed {seed}"]


def result_row(experiment: str, params: dict, est: MCEstimate | None = None,
               bound: float | None = None, vacuous: bool | None = None, seed=None,
               value: float | None = None) -> list[str]:
    """One results row; ``value`` stands in for the estimate of a
    deterministic quantity (no interval)."""
    if est is not None:
        vals = [est.point, est.lo, est.hi, est.n, est.censored]
        seed = est.seed if seed is None else seed
    else:
        vals = [value, None, None, None, None]
    return [experiment, dump_json(params)] + [fmt(v) for v in vals] + \
        [fmt(bound), fmt(vacuous), fmt(seed)]


def render(columns: list[str], rows, config: dict | None = None, seed=None) -> str:
    buf = io.StringIO()
    if config is not None:
        for line in header_lines(config, seed):
            buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def read_rows(text: str) -> list[dict]:
    """Parse a CSV written by ``render``, skipping ``#`` header lines."""
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))
