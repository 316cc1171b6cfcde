"""Deterministic JSON/CSV emission with 17-significant-digit floats."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from . import __version__
from .solution import Solution


def fmt_float(x: float) -> str:
    return "%.17g" % x


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return fmt_float(x) if math.isfinite(x) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) for v in seq):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in seq) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text; non-finite floats become ``null``, dict order is kept."""
    return _encode(obj, indent, 0) + "\n"


def provenance(command: str, config: dict) -> dict:
    return {"package": "chemolayer", "version": __version__, "command": command, "config": config}


def solution_record(sol: Solution) -> dict:
    return {
        "spec": sol.spec.to_dict(),
        "eps": sol.eps,
        "nodes": sol.nodes,
        "psi": sol.psi,
        "mu_eps": sol.mu_eps,
        "slope_R": sol.slope_R,
        "K_eps": sol.K_eps,
        "solver_path": sol.solver_path,
        "iterations": sol.iterations,
        "residual": sol.achieved_residual,
    }


def load_solution_record(text: str) -> dict:
    rec = json.loads(text)
    rec["nodes"] = np.array(rec["nodes"], dtype=float)
    rec["psi"] = np.array(rec["psi"], dtype=float)
    return rec


def csv_text(header, rows) -> str:
    lines = [",".join(header)]
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                cells.append(fmt_float(float(v)))
            elif v is None:
                cells.append("")
            else:
                cells.append(str(v))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def profile_csv(sol: Solution) -> str:
    return csv_text(["r", "psi"], zip(sol.nodes, sol.psi))


def sweep_csv(sweep) -> str:
    keys = ["eps", "status"]
    for rec in sweep.records:
        for k in rec:
            if k not in keys:
                keys.append(k)
    rows = [[rec.get(k) for k in keys] for rec in sweep.records]
    return csv_text(keys, rows)


def write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path
