"""Versioned JSON/CSV files and plot scripts.

Every file carries ``"schema_version"``.  Floats are written with Python's
shortest round-trip representation (JSON) or 17 significant digits (CSV),
so reading a file back reproduces every number bit for bit.
"""

from __future__ import annotations

import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ._validation import parse_grid
from .errors import ContractError
from .geometry import make_frame
from .kwave import GridSample, ImplicitProfile, KWaveSolution, NewtonSettings, WaveSurface
from .models import get_model

SCHEMA_VERSION = 1


def atomic_write(path, data: str | bytes) -> Path:
    """Write ``data`` to a temporary file in the target directory, then rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    mode = "wb" if isinstance(data, bytes) else "w"
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, mode, **({} if mode == "wb" else {"encoding": "utf-8", "newline": ""})) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=False, allow_nan=False) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write(path, dumps(obj))


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _check_version(doc: dict, what: str):
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ContractError(f"{what} has schema_version {version!r}; this build reads version {SCHEMA_VERSION}")


# -- profiles ------------------------------------------------------------------


def profiles_from_doc(doc) -> list[ImplicitProfile]:
    """Profiles from ``{"schema_version": 1, "profiles": [...]}`` (or a bare list)."""
    if isinstance(doc, dict):
        _check_version(doc, "psi spec")
        doc = doc["profiles"]
    return [ImplicitProfile.from_dict(p) for p in doc]


def read_profiles(path) -> list[ImplicitProfile]:
    return profiles_from_doc(read_json(path))


# -- solutions -----------------------------------------------------------------


def solution_to_doc(solution: KWaveSolution) -> dict:
    surface = solution.surface
    frame = solution.frame
    if frame.model is None:
        raise ContractError("only frames built from a catalogue model can be serialized")
    return {
        "schema_version": SCHEMA_VERSION,
        "model": frame.model.config(),
        "frame": {
            "selectors": list(frame.selectors),
            "tracked": bool(frame.tracked),
            "certified": bool(frame.commuting_certified),
        },
        "base_state": surface.base_state.tolist(),
        "rgrid": [a.to_dict() for a in surface.grid],
        "profiles": [p.to_dict() for p in solution.profiles],
        "newton": solution.newton.to_dict(),
        "surface": {
            "path_error": float(surface.path_error),
            "values": surface.values.tolist(),
            "lambda_values": surface.lambda_values.tolist(),
        },
    }


def solution_from_doc(doc: dict) -> KWaveSolution:
    _check_version(doc, "solution file")
    model = get_model(doc["model"]["name"], **doc["model"].get("params", {}))
    fr = doc["frame"]
    frame = make_frame(model, fr["selectors"], tracked=bool(fr.get("tracked", False)))
    frame.commuting_certified = bool(fr.get("certified", False))
    axes = parse_grid(doc["rgrid"], "r-grid")
    surf = doc["surface"]
    values = np.array(surf["values"], dtype=float)
    lam = np.array(surf["lambda_values"], dtype=float)
    shape = tuple(a.n for a in axes)
    if values.shape != shape + (model.q,) or lam.shape != shape + (frame.k, model.p):
        raise ContractError(f"surface arrays {values.shape}, {lam.shape} do not match the r-grid {shape}")
    surface = WaveSurface(frame, np.array(doc["base_state"], dtype=float), axes, values, lam, float(surf["path_error"]))
    profiles = [ImplicitProfile.from_dict(p) for p in doc["profiles"]]
    return KWaveSolution(surface, profiles, NewtonSettings(**doc.get("newton", {})))


def write_solution(path, solution: KWaveSolution) -> Path:
    return write_json(path, solution_to_doc(solution))


def read_solution(path) -> KWaveSolution:
    return solution_from_doc(read_json(path))


# -- samples -------------------------------------------------------------------


def _fmt(v: float) -> str:
    return "nan" if not np.isfinite(v) else format(float(v), ".17g")


def sample_columns(solution: KWaveSolution) -> list[str]:
    model = solution.frame.model
    coords = list(model.coordinate_names) if model is not None else [f"x{i + 1}" for i in range(solution.p)]
    states = list(model.state_names) if model is not None else [f"u{i + 1}" for i in range(solution.q)]
    return coords + [f"r{s + 1}" for s in range(solution.k)] + states + ["newton_iters", "jac_cond", "resolved"]


def sample_to_csv(solution: KWaveSolution, sample: GridSample) -> str:
    """One row per grid point in lexicographic order; unresolved points carry NaN."""
    buf = io.StringIO()
    buf.write(",".join(sample_columns(solution)) + "\n")
    p, k, q = solution.p, solution.k, solution.q
    xs = sample.x.reshape(-1, p)
    rs = sample.r.reshape(-1, k)
    us = sample.u.reshape(-1, q)
    its = sample.iterations.reshape(-1)
    cond = sample.jac_cond.reshape(-1)
    res = sample.resolved.reshape(-1)
    for i in range(xs.shape[0]):
        r = rs[i] if res[i] else np.full(k, np.nan)
        row = [_fmt(v) for v in xs[i]] + [_fmt(v) for v in r] + [_fmt(v) for v in us[i]]
        row += [str(int(its[i])), _fmt(cond[i]), "1" if res[i] else "0"]
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def write_sample_csv(path, solution: KWaveSolution, sample: GridSample) -> Path:
    return atomic_write(path, sample_to_csv(solution, sample))


def gnuplot_script(csv_name: str, solution: KWaveSolution, sample: GridSample) -> str:
    """A plain gnuplot script plotting every state component over the x-grid."""
    cols = sample_columns(solution)
    p, k = solution.p, solution.k
    lines = [
        "# gnuplot script; run with: gnuplot -p <this file>",
        "set datafile separator ','",
        "set datafile missing 'nan'",
        f"set xlabel '{cols[0]}'",
    ]
    state_cols = range(p + k + 1, p + k + solution.q + 1)
    if p == 2:
        lines += [f"set ylabel '{cols[1]}'", "set view map", "set key off"]
        for c in state_cols:
            lines += [
                f"set title '{cols[c - 1]}'",
                f"splot '{csv_name}' skip 1 using 1:2:{c} with points pointtype 5 pointsize 0.5 palette",
                "pause -1",
            ]
    else:
        lines += [f"plot '{csv_name}' skip 1 using 1:{c} with lines title '{cols[c - 1]}'" for c in state_cols]
    return "\n".join(lines) + "\n"


def write_plot(csv_path, solution: KWaveSolution, sample: GridSample) -> Path:
    csv_path = Path(csv_path)
    return atomic_write(csv_path.with_suffix(".gp"), gnuplot_script(csv_path.name, solution, sample))
