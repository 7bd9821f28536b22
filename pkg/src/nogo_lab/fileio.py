"""Scenario, model, and report files.

One JSON family serves all artifacts, discriminated by ``kind``:

* ``scenario`` - labeled operators (matrices, or unit rays expanded to
  rank-one projectors on load), contexts as label arrays with optional
  ``productSign``, optional ``state``;
* ``model``    - a phase-space model: points, weights, per-label value rows,
  registered observables, and the state;
* reports      - produced by the CLI; canonical bytes via :func:`report_bytes`
  so identical configurations yield identical files.

Complex numbers are two-element ``[re, im]`` arrays (plain reals accepted on
input); matrices are row-major nested arrays.  Parse failures raise
:class:`FormatError` naming the offending field.
"""

from __future__ import annotations

import json
import os
from importlib import resources

import numpy as np

from .errors import FormatError
from .feasibility import (
    DICHOTOMIC,
    PROJECTOR,
    Context,
    Scenario,
    make_item,
    make_scenario,
)
from .hvmodel import HVModel, PhaseSpace
from .quantum import Density, Observable

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "matrix_to_json",
    "matrix_from_json",
    "load_scenario",
    "save_scenario",
    "scenario_to_json",
    "load_model",
    "save_model",
    "model_to_json",
    "resolve_input_path",
    "bundled_names",
    "report_bytes",
]


def _complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(m: np.ndarray) -> list:
    return [[_complex_to_json(complex(v)) for v in row] for row in np.asarray(m)]


def _entry_from_json(v, where: str) -> complex:
    if isinstance(v, (int, float)):
        return complex(v, 0.0)
    if isinstance(v, list) and len(v) == 2 and all(isinstance(x, (int, float)) for x in v):
        return complex(v[0], v[1])
    raise FormatError(f"{where}: matrix entry must be a number or [re, im], got {v!r}")


def matrix_from_json(data, where: str = "matrix") -> np.ndarray:
    if not isinstance(data, list) or not data or not all(isinstance(r, list) for r in data):
        raise FormatError(f"{where}: expected a nested array")
    n = len(data)
    if any(len(r) != n for r in data):
        raise FormatError(f"{where}: matrix must be square")
    return np.array(
        [[_entry_from_json(v, where) for v in row] for row in data],
        dtype=np.complex128,
    )


def _vector_from_json(data, where: str) -> np.ndarray:
    if not isinstance(data, list) or not data:
        raise FormatError(f"{where}: expected a nonempty array")
    return np.array([_entry_from_json(v, where) for v in data], dtype=np.complex128)


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise FormatError(f"{where}: missing required field {key!r}")
    return obj[key]


def _load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    if not isinstance(data, dict):
        raise FormatError(f"{path}: top level must be an object")
    return data


# ---------------------------------------------------------------------------
# Scenarios


def scenario_from_json(data: dict, where: str = "scenario") -> Scenario:
    dim = _require(data, "dim", where)
    if not isinstance(dim, int) or dim < 1:
        raise FormatError(f"{where}: dim must be a positive integer")
    raw_items = _require(data, "items", where)
    if not isinstance(raw_items, dict) or not raw_items:
        raise FormatError(f"{where}: items must be a nonempty object")

    items = {}
    for label, spec in raw_items.items():
        iw = f"{where}.items[{label}]"
        if not isinstance(spec, dict):
            raise FormatError(f"{iw}: expected an object")
        kind = spec.get("kind", PROJECTOR)
        if kind not in (PROJECTOR, DICHOTOMIC):
            raise FormatError(f"{iw}: kind must be {PROJECTOR!r} or {DICHOTOMIC!r}")
        if "ray" in spec:
            v = _vector_from_json(spec["ray"], f"{iw}.ray")
            if len(v) != dim:
                raise FormatError(f"{iw}.ray: expected length {dim}")
            norm = np.linalg.norm(v)
            if norm < 1e-12:
                raise FormatError(f"{iw}.ray: zero vector")
            v = v / norm
            mat = np.outer(v, v.conj())
        elif "matrix" in spec:
            mat = matrix_from_json(spec["matrix"], f"{iw}.matrix")
        else:
            raise FormatError(f"{iw}: needs a 'matrix' or a 'ray'")
        items[label] = make_item(label, kind, mat)

    contexts = []
    for k, raw in enumerate(data.get("contexts", [])):
        cw = f"{where}.contexts[{k}]"
        if not isinstance(raw, dict):
            raise FormatError(f"{cw}: expected an object")
        labels = _require(raw, "labels", cw)
        if not isinstance(labels, list) or not all(isinstance(l, str) for l in labels):
            raise FormatError(f"{cw}.labels: expected an array of strings")
        sign = raw.get("productSign")
        if sign is not None and sign not in (-1, 1):
            raise FormatError(f"{cw}.productSign: must be -1 or 1")
        contexts.append(Context(labels=tuple(labels), product_sign=sign))

    state = None
    if data.get("state") is not None:
        state = Density.from_matrix(
            matrix_from_json(data["state"], f"{where}.state"), tol=1e-7
        )
    name = data.get("name", os.path.splitext(os.path.basename(where))[0])
    scenario = make_scenario(dim, items, contexts, state=state, name=name)
    return scenario


def scenario_to_json(s: Scenario) -> dict:
    out = {
        "schemaVersion": SCHEMA_VERSION,
        "kind": "scenario",
        "name": s.name,
        "dim": s.dim,
        "items": {
            label: {"kind": item.kind, "matrix": matrix_to_json(item.mat)}
            for label, item in sorted(s.items.items())
        },
        "contexts": [
            {
                "labels": list(c.labels),
                **({"productSign": c.product_sign} if c.product_sign is not None else {}),
            }
            for c in s.contexts
        ],
    }
    if s.state is not None:
        out["state"] = matrix_to_json(s.state.mat)
    return out


def load_scenario(path: str) -> Scenario:
    data = _load_json(path)
    if data.get("kind", "scenario") != "scenario":
        raise FormatError(f"{path}: kind {data.get('kind')!r} is not a scenario")
    return scenario_from_json(data, where=path)


def save_scenario(s: Scenario, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_json(s), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Models


def model_from_json(data: dict, where: str = "model") -> HVModel:
    """Deserialize a phase-space model.

    Structural validation only: weights that fail the measure axioms or
    table values off the spectrum load fine and are the checkers' business.
    """
    dim = _require(data, "dim", where)
    state = Density.from_matrix(
        matrix_from_json(_require(data, "state", where), f"{where}.state"), tol=1e-7
    )
    raw_obs = _require(data, "observables", where)
    if not isinstance(raw_obs, dict) or not raw_obs:
        raise FormatError(f"{where}.observables: expected a nonempty object")
    observables = {}
    for label, mat in raw_obs.items():
        m = matrix_from_json(mat, f"{where}.observables[{label}]")
        if m.shape[0] != dim:
            raise FormatError(f"{where}.observables[{label}]: wrong dimension")
        observables[label] = Observable.from_matrix(m, tol=1e-7)

    points = _require(data, "points", where)
    if not isinstance(points, list) or not all(isinstance(p, str) for p in points):
        raise FormatError(f"{where}.points: expected an array of strings")
    weights = _require(data, "weights", where)
    if not isinstance(weights, list) or len(weights) != len(points):
        raise FormatError(f"{where}.weights: expected {len(points)} numbers")
    values = _require(data, "values", where)
    if not isinstance(values, dict) or set(values) != set(observables):
        raise FormatError(f"{where}.values: must give one row per observable label")
    table = {}
    for label, row in values.items():
        if not isinstance(row, list) or len(row) != len(points):
            raise FormatError(f"{where}.values[{label}]: expected {len(points)} numbers")
        table[label] = np.array([float(v) for v in row])

    space = PhaseSpace(points=tuple(points), weights=np.array([float(w) for w in weights]))
    return HVModel(space=space, registered=observables, values=table, state=state)


def model_to_json(m: HVModel) -> dict:
    return {
        "schemaVersion": SCHEMA_VERSION,
        "kind": "model",
        "dim": m.state.dim,
        "state": matrix_to_json(m.state.mat),
        "observables": {
            label: matrix_to_json(obs.mat) for label, obs in sorted(m.registered.items())
        },
        "points": list(m.space.points),
        "weights": [float(w) for w in m.space.weights],
        "values": {
            label: [float(v) for v in row] for label, row in sorted(m.values.items())
        },
    }


def load_model(path: str) -> HVModel:
    data = _load_json(path)
    if data.get("kind") != "model":
        raise FormatError(f"{path}: kind {data.get('kind')!r} is not a model")
    return model_from_json(data, where=path)


def save_model(m: HVModel, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_json(m), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Bundled fixtures and reports


def bundled_names() -> list[str]:
    root = resources.files("nogo_lab") / "scenarios"
    return sorted(p.name for p in root.iterdir() if p.name.endswith((".scenario", ".model")))


def resolve_input_path(name_or_path: str) -> str:
    """Existing filesystem path, or the bundled fixture with that name."""
    if os.path.exists(name_or_path):
        return name_or_path
    base = os.path.basename(name_or_path)
    candidates = [base] if "." in base else [base + ".scenario", base + ".model"]
    root = resources.files("nogo_lab") / "scenarios"
    for cand in candidates:
        member = root / cand
        if member.is_file():
            return str(member)
    raise FormatError(
        f"no such file {name_or_path!r} and no bundled fixture named "
        f"{' or '.join(candidates)} (bundled: {', '.join(bundled_names())})"
    )


def report_bytes(report: dict) -> bytes:
    """Canonical bytes for a structured report: sorted keys, two-space
    indent, trailing newline.  Identical reports hash identically."""
    return (json.dumps(report, indent=2, sort_keys=True) + "\n").encode("utf-8")
