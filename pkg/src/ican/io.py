"""CSV ingestion and output, JSON reports and study configuration files."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .data import PairedSample


class DataError(ValueError):
    """Malformed or unusable input data."""


def _parse_float(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite value {text!r}")
    return v


def load_csv(path) -> PairedSample:
    """Read two comma-separated numeric columns, with an optional header line.

    The first line is taken as a header if it does not parse as numbers.
    Blank lines are ignored.  The data are not normalized.

    Raises
    ------
    DataError
        On a malformed row (the message names its 1-based line number) or
        when fewer than two rows remain.
    """
    path = Path(path)
    xs, ys = [], []
    with path.open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            cells = [c.strip() for c in row]
            if not any(cells):
                continue
            try:
                if len(cells) != 2:
                    raise ValueError(f"expected 2 columns, found {len(cells)}")
                x, y = _parse_float(cells[0]), _parse_float(cells[1])
            except ValueError as exc:
                if lineno == 1:
                    continue
                raise DataError(f"{path}: line {lineno}: {exc}") from None
            xs.append(x)
            ys.append(y)
    if len(xs) < 2:
        raise DataError(f"{path}: need at least 2 data rows, found {len(xs)}")
    return PairedSample(np.array(xs), np.array(ys), provenance=str(path))


def format_number(v: float) -> str:
    """Shortest decimal that reads back to the same double."""
    return repr(float(v))


def write_columns(path, header, columns) -> None:
    cols = [np.asarray(c, dtype=float) for c in columns]
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in zip(*cols):
            fh.write(",".join(format_number(v) for v in row) + "\n")


def write_csv(path, sample: PairedSample) -> None:
    write_columns(path, ("x", "y"), (sample.x, sample.y))


def write_truth_csv(path, sample: PairedSample) -> None:
    if sample.truth is None:
        raise ValueError("sample carries no ground truth")
    tr = sample.truth
    write_columns(path, ("t", "nx", "ny"), (tr.t, tr.nx, tr.ny))


def write_rows(path, rows: list[dict]) -> None:
    """Write a list of flat dicts as CSV (numbers in shortest round-trip form)."""
    if not rows:
        raise ValueError("no rows to write")
    keys = list(rows[0])
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(keys) + "\n")
        for r in rows:
            fh.write(",".join(format_number(r[k]) if isinstance(r[k], float) else str(r[k])
                              for k in keys) + "\n")


def ican_report(result, n_curve: int = 200) -> dict:
    """JSON-ready summary of an :class:`~ican.algorithm.IcanResult`.

    Latent values and the curve are reported in normalized coordinates;
    ``normalization`` holds the offsets and scales that produced them.
    """
    lo, hi = result.curve.t_range
    grid = np.linspace(lo, hi, n_curve)
    u, v = result.curve.evaluate(grid)
    norm_ = None
    if result.normalization is not None:
        (mx, sx), (my, sy) = result.normalization
        norm_ = {"x": {"offset": mx, "scale": sx}, "y": {"offset": my, "scale": sy}}
    p = result.pvalues
    return {
        "decision": result.decision.value,
        "var_ratio": float(result.var_ratio),
        "p_values": {"nxny": float(p[0]), "nxt": float(p[1]), "nyt": float(p[2])},
        "iterations": int(result.iterations_used),
        "config": asdict(result.config) if result.config is not None else None,
        "normalization": norm_,
        "t_hat": [float(t) for t in result.t_hat],
        "curve_eval": {"grid": grid.tolist(), "u": u.tolist(), "v": v.tolist()},
    }


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n")


# -- study configuration ------------------------------------------------------

def _distribution(desc: dict):
    from scipy import stats

    kind = desc.get("dist", "normal")
    if kind == "normal":
        return stats.norm(desc.get("mean", 0.0), desc["std"])
    if kind == "uniform":
        lo, hi = desc["low"], desc["high"]
        if not hi > lo:
            raise DataError("uniform distribution needs high > low")
        return stats.uniform(lo, hi - lo)
    raise DataError(f"unknown distribution {kind!r}")


def _curve(desc: dict):
    kind = desc.get("kind", "exp")
    if kind == "exp":
        k, c = float(desc.get("rate", 4.0)), float(desc.get("center", 0.5))
        if k == 0:
            raise DataError("exp curve needs a nonzero rate")
        return (lambda t: np.exp(k * (np.asarray(t, dtype=float) - c)) / k,
                lambda y: np.log(k * np.asarray(y, dtype=float)) / k + c)
    if kind == "linear":
        a, b = float(desc.get("slope", 1.0)), float(desc.get("intercept", 0.0))
        if a == 0:
            raise DataError("linear curve needs a nonzero slope")
        return (lambda t: a * np.asarray(t, dtype=float) + b,
                lambda y: (np.asarray(y, dtype=float) - b) / a)
    raise DataError(f"unknown curve kind {kind!r}")


STUDY_DEFAULTS = {
    "curve": {"kind": "exp", "rate": 4.0, "center": 0.5},
    "noise_x": {"dist": "normal", "std": 0.1},
    "noise_y": {"dist": "normal", "std": 0.1},
    "latent": {"dist": "normal", "mean": 0.5, "std": 0.2},
    "ell_values": [1, 2, 4, 8],
    "t_points": [0.25, 0.5, 0.75],
    "samples_per_ell": 100000,
    "order": 2,
    "seeds": 1,
    "seed": 0,
    "bandwidth": None,
}


def load_study_config(path):
    """Parse a study JSON file into (ScalingStudy, settings dict).

    Missing keys take the values in ``STUDY_DEFAULTS``.  Evaluation points
    are given as latent values ``t_points`` and mapped through v.
    """
    from .moments import ScalingStudy

    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise DataError(f"{path}: top level must be an object")
    unknown = set(raw) - set(STUDY_DEFAULTS)
    if unknown:
        raise DataError(f"{path}: unknown keys {sorted(unknown)}")
    cfg = {**STUDY_DEFAULTS, **raw}
    try:
        v, w = _curve(cfg["curve"])
        study = ScalingStudy(
            v, w, _distribution(cfg["noise_x"]), _distribution(cfg["noise_y"]),
            _distribution(cfg["latent"]), tuple(float(e) for e in cfg["ell_values"]),
            tuple(float(a) for a in v(np.asarray(cfg["t_points"], dtype=float))))
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"{path}: {exc}") from None
    return study, cfg
