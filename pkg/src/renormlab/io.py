"""Structured-text (JSON) round trips for spaces, operators, groups,
functions, and class registries.

Spaces serialize either as a closed-form tag with parameters (builtins and
products of builtins) or as an explicit matrix; operators carry the weight
as a constant or vector and the maps as point-id lists.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import space as space_mod
from .operators import GroupSpec, WeightedComposition
from .space import CompactSet, SampledSpace, product

__all__ = [
    "space_to_dict", "space_from_dict", "load_space", "save_space",
    "operator_to_dict", "operator_from_dict", "load_operator", "save_operator",
    "group_to_dict", "group_from_dict", "load_group", "save_group",
    "function_to_dict", "function_from_dict", "load_function", "save_function",
    "dump_json",
]


def dump_json(obj, path: str | Path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _builtin_form(form: dict) -> dict | None:
    """Reconstructible closed-form parameters, or None."""
    kind = form.get("form")
    if kind in ("line", "circle", "remark25", "onepoint01N"):
        return form
    if kind == "product":
        a = _builtin_form(form["a"])
        b = _builtin_form(form["b"])
        if a and b:
            return {"form": "product", "a": a, "b": b}
    return None


def space_to_dict(space: SampledSpace) -> dict:
    doc = {
        "name": space.name,
        "points": list(space.points),
        "resolution": space.resolution,
        "isolated": [bool(b) for b in space.isolated],
        "exhaustion": [
            {"label": ks.label, "members": list(ks.members)} for ks in space.exhaustion
        ],
    }
    form = _builtin_form(space.metric_form)
    if form is not None:
        doc["metric"] = form
    else:
        doc["metric"] = {"form": "matrix", "values": np.round(space.dmat, 12).tolist()}
    return doc


def _space_from_form(form: dict) -> SampledSpace:
    kind = form["form"]
    if kind == "line":
        return space_mod._line(step=form["step"], window=tuple(form["window"]))
    if kind == "circle":
        return space_mod._circle(count=form["count"])
    if kind == "remark25":
        return space_mod._remark25(n_max=form["n_max"])
    if kind == "onepoint01N":
        return space_mod._onepoint01N(n_max=form["n_max"])
    if kind == "product":
        return product(_space_from_form(form["a"]), _space_from_form(form["b"]))
    raise ValueError(f"unknown metric form {kind!r}")


def space_from_dict(doc: dict) -> SampledSpace:
    metric = doc["metric"]
    if metric.get("form") != "matrix":
        space = _space_from_form(metric)
        if list(space.points) != list(doc["points"]):
            raise ValueError("closed-form space does not reproduce the stored points")
        return space
    points = tuple(doc["points"])
    exhaustion = tuple(
        CompactSet(tuple(e["members"]), e.get("label", "")) for e in doc["exhaustion"]
    )
    return SampledSpace(
        name=doc.get("name", "space"),
        points=points,
        dmat=np.asarray(metric["values"], dtype=float),
        exhaustion=exhaustion,
        resolution=float(doc["resolution"]),
        isolated=np.asarray(doc["isolated"], dtype=bool),
        metric_form={"form": "matrix"},
    )


def operator_to_dict(op: WeightedComposition) -> dict:
    w = op.weight
    weight = {"form": "const", "value": float(w[0])} if np.all(w == w[0]) else {
        "form": "vector", "values": w.tolist(),
    }
    return {
        "label": op.label,
        "weight": weight,
        "forward": [op.space.points[i] for i in op.forward],
        "backward": [op.space.points[i] for i in op.backward],
        "form": op.form,
        "allowed_defects": sorted(op.space.points[i] for i in op.allowed_defects),
    }


def operator_from_dict(doc: dict, space: SampledSpace) -> WeightedComposition:
    wdoc = doc["weight"]
    if wdoc["form"] == "const":
        weight = np.full(space.n, float(wdoc["value"]))
    else:
        weight = np.asarray(wdoc["values"], dtype=float)
    fwd = np.asarray([space.index(p) for p in doc["forward"]], dtype=np.intp)
    bwd = np.asarray([space.index(p) for p in doc["backward"]], dtype=np.intp)
    defects = frozenset(space.index(p) for p in doc.get("allowed_defects", []))
    return WeightedComposition(
        space=space, weight=weight, forward=fwd, backward=bwd,
        label=doc.get("label", ""), form=doc.get("form"), allowed_defects=defects,
    )


def group_to_dict(group: GroupSpec) -> dict:
    return {
        "label": group.label,
        "word_cap": group.word_cap,
        "closure_tag": group.closure_tag,
        "generators": [operator_to_dict(g) for g in group.generators],
    }


def group_from_dict(doc: dict, space: SampledSpace) -> GroupSpec:
    gens = tuple(operator_from_dict(g, space) for g in doc["generators"])
    return GroupSpec(
        generators=gens,
        word_cap=int(doc["word_cap"]),
        closure_tag=bool(doc.get("closure_tag", False)),
        label=doc.get("label", ""),
    )


def function_to_dict(space: SampledSpace, values: np.ndarray) -> dict:
    return {"values": {p: float(v) for p, v in zip(space.points, values)}}


def function_from_dict(doc: dict, space: SampledSpace) -> np.ndarray:
    vals = doc["values"]
    if isinstance(vals, dict):
        return np.asarray([vals[p] for p in space.points], dtype=float)
    return np.asarray(vals, dtype=float)


def load_space(path: str | Path) -> SampledSpace:
    return space_from_dict(json.loads(Path(path).read_text()))


def save_space(space: SampledSpace, path: str | Path) -> None:
    dump_json(space_to_dict(space), path)


def load_operator(path: str | Path, space: SampledSpace) -> WeightedComposition:
    return operator_from_dict(json.loads(Path(path).read_text()), space)


def save_operator(op: WeightedComposition, path: str | Path) -> None:
    dump_json(operator_to_dict(op), path)


def load_group(path: str | Path, space: SampledSpace) -> GroupSpec:
    return group_from_dict(json.loads(Path(path).read_text()), space)


def save_group(group: GroupSpec, path: str | Path) -> None:
    dump_json(group_to_dict(group), path)


def load_function(path: str | Path, space: SampledSpace) -> np.ndarray:
    return function_from_dict(json.loads(Path(path).read_text()), space)


def save_function(space: SampledSpace, values: np.ndarray, path: str | Path) -> None:
    dump_json(function_to_dict(space, values), path)
