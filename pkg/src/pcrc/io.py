"""File formats: matrix CSV, ensemble JSON and result JSON.

All writers print floats with 17 significant digits, which round-trips
float64 exactly, so read -> write -> read is lossless and write is stable.
"""

from __future__ import annotations

import json
import math
from importlib import resources
from pathlib import Path

import numpy as np

from .core import as_matrix
from .ensemble import Ensemble
from .errors import ValidationError


def fmt(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise ValidationError(f"cannot serialize non-finite value {x!r}")
    s = format(x, ".17g")
    return "0" if s == "-0" else s


def parse_matrix_csv(text: str, name: str = "matrix") -> np.ndarray:
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append([float(tok) for tok in line.split(",")])
        except ValueError:
            raise ValidationError(f"{name}: line {lineno} is not a list of decimal numbers") from None
    if not rows or any(len(r) != len(rows) for r in rows):
        raise ValidationError(f"{name}: expected n lines of n comma-separated values")
    return as_matrix(rows, name)


def format_matrix_csv(a) -> str:
    a = np.asarray(a, dtype=float)
    return "".join(",".join(fmt(v) for v in row) + "\n" for row in a)


def fixture_path(name: str) -> Path:
    """Path of a matrix fixture shipped with the package (e.g. ``fx3``)."""
    base = resources.files("pcrc") / "fixtures"
    path = Path(str(base / f"{name}.csv"))
    if not path.exists():
        available = sorted(p.stem for p in Path(str(base)).glob("*.csv"))
        raise ValidationError(f"unknown fixture {name!r}; available: {', '.join(available)}")
    return path


def resolve(path: str) -> Path:
    if path.startswith("fixture:"):
        return fixture_path(path[len("fixture:"):])
    return Path(path)


def read_matrix(path) -> np.ndarray:
    p = resolve(str(path))
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc.strerror}") from None
    return parse_matrix_csv(text, str(p))


def write_text(path, text: str) -> None:
    Path(path).write_text(text, newline="\n")


def write_matrix(path, a) -> None:
    write_text(path, format_matrix_csv(a))


def dumps(obj, indent: int = 0) -> str:
    """JSON text with 17-significant-digit floats; insertion order is kept."""
    pad = "  " * (indent + 1)
    end = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj)
    if obj is None:
        return "null"
    return json.dumps(obj)


def ensemble_to_dict(x: Ensemble) -> dict:
    d = {"n": x.n, "samples": [{"weight": w, "matrix": a} for w, a in x]}
    if x.seed is not None:
        d["seed"] = x.seed
    if x.law is not None:
        d["law"] = x.law
    return d


def format_ensemble_json(x: Ensemble) -> str:
    return dumps(ensemble_to_dict(x)) + "\n"


def parse_ensemble_json(text: str, name: str = "ensemble") -> Ensemble:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{name}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(d, dict) or "n" not in d or "samples" not in d:
        raise ValidationError(f"{name}: expected an object with 'n' and 'samples'")
    samples = d["samples"]
    if not isinstance(samples, list) or not samples:
        raise ValidationError(f"{name}: 'samples' must be a non-empty array")
    try:
        weights = [float(s["weight"]) for s in samples]
        mats = np.array([s["matrix"] for s in samples], dtype=float)
    except (KeyError, TypeError, ValueError):
        raise ValidationError(f"{name}: every sample needs a numeric 'weight' and a square 'matrix'") from None
    n = int(d["n"])
    if mats.ndim != 3 or mats.shape[1:] != (n, n):
        raise ValidationError(f"{name}: sample matrices do not match n={n}")
    return Ensemble(np.array(weights), mats, seed=d.get("seed"), law=d.get("law"))


def read_ensemble(path) -> Ensemble:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {p}: {exc.strerror}") from None
    return parse_ensemble_json(text, str(p))


def write_ensemble(path, x: Ensemble) -> None:
    write_text(path, format_ensemble_json(x))
