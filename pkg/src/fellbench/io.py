"""File formats and report objects for the command-line front end.

One self-describing JSON layout serves all five file kinds (bundle,
action, representation, witness, report). Complex matrices are nested
arrays of [re, im] pairs; reports keep a fixed field order so identical
inputs and seed produce byte-identical output.
"""

from __future__ import annotations

import hashlib
import json
from typing import Optional

import numpy as np

from . import linalg as la
from .absorption import Representation, Witness
from .bundle import FellBundle, make_bundle
from .groupoids import Action, PartialBijection
from .semigroup import InverseSemigroup, from_mult_table


class ParseError(Exception):
    pass


def encode_matrix(m: np.ndarray) -> list:
    m = la.as_complex(m)
    return [[[float(x.real), float(x.imag)] for x in row] for row in m]


def decode_matrix(data, n: Optional[int] = None) -> np.ndarray:
    try:
        arr = np.asarray(data, dtype=float)
        if arr.ndim != 3 or arr.shape[2] != 2:
            raise ValueError
        if n is not None and arr.shape[:2] != (n, n):
            raise ValueError
    except (ValueError, TypeError) as exc:
        raise ParseError(f"malformed complex matrix: {exc}") from exc
    return arr[..., 0] + 1j * arr[..., 1]


def semigroup_to_dict(sg: InverseSemigroup) -> dict:
    out = {"size": sg.size, "unit": sg.unit, "mult": sg.mult.tolist()}
    if sg.names is not None:
        out["names"] = list(sg.names)
    return out


def semigroup_from_dict(data: dict) -> InverseSemigroup:
    try:
        return from_mult_table(data["mult"], data["unit"], names=data.get("names"))
    except KeyError as exc:
        raise ParseError(f"semigroup block missing field {exc}") from exc


def bundle_to_dict(bundle: FellBundle) -> dict:
    fibers = []
    for s in bundle.semigroup.elements():
        f = bundle.fibers[s]
        fibers.append({"s": s, "basis": [encode_matrix(m) for m in f]})
    return {"kind": "bundle", "name": bundle.name,
            "semigroup": semigroup_to_dict(bundle.semigroup),
            "carrier_dim": bundle.carrier_dim, "fibers": fibers}


def bundle_from_dict(data: dict, tol: float = la.DEFAULT_TOL, validate: bool = True) -> FellBundle:
    if data.get("kind") != "bundle":
        raise ParseError("not a bundle file")
    try:
        sg = semigroup_from_dict(data["semigroup"])
        n = int(data["carrier_dim"])
        fibers = [np.zeros((0, n, n), dtype=complex) for _ in range(sg.size)]
        for block in data["fibers"]:
            s = int(block["s"])
            if not 0 <= s < sg.size:
                raise ParseError(f"fiber label {s} out of range")
            mats = [decode_matrix(m, n) for m in block["basis"]]
            if mats:
                fibers[s] = np.array(mats)
        name = str(data.get("name", "bundle"))
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed bundle file: {exc}") from exc
    return make_bundle(sg, fibers, carrier_dim=n, name=name, tol=tol, validate=validate)


def action_to_dict(action: Action) -> dict:
    return {"kind": "action", "space_size": action.space_size,
            "maps": [[[int(x), int(y)] for x, y in pb.pairs] for pb in action.maps]}


def action_from_dict(data: dict, sg: InverseSemigroup) -> Action:
    if data.get("kind") != "action":
        raise ParseError("not an action file")
    try:
        maps = tuple(PartialBijection(tuple((int(x), int(y)) for x, y in pairs))
                     for pairs in data["maps"])
        return Action(semigroup=sg, space_size=int(data["space_size"]), maps=maps)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed action file: {exc}") from exc


def representation_to_dict(rep: Representation) -> dict:
    maps = []
    for s in rep.bundle.semigroup.elements():
        maps.append({"s": s, "images": [encode_matrix(m) for m in rep.images[s]]})
    return {"kind": "representation", "dim": rep.dim_h, "maps": maps}


def representation_from_dict(data: dict, bundle: FellBundle) -> Representation:
    if data.get("kind") != "representation":
        raise ParseError("not a representation file")
    try:
        d = int(data["dim"])
        images = [np.zeros((bundle.fiber_dim(s), d, d), dtype=complex)
                  for s in bundle.semigroup.elements()]
        for block in data["maps"]:
            s = int(block["s"])
            mats = [decode_matrix(m, d) for m in block["images"]]
            if len(mats) != bundle.fiber_dim(s):
                raise ParseError(f"representation at {s} must list one image per "
                                 f"fiber basis element")
            if mats:
                images[s] = np.array(mats)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed representation file: {exc}") from exc
    return Representation(bundle=bundle, dim_h=d, images=tuple(images))


def witness_to_dict(witness: Witness) -> dict:
    sections = []
    for xi in witness.sections:
        sections.append([{"s": int(s), "matrix": encode_matrix(m)}
                         for s, m in sorted(xi.items())])
    return {"kind": "witness", "sections": sections}


def witness_from_dict(data: dict, carrier_dim: int) -> Witness:
    if data.get("kind") != "witness":
        raise ParseError("not a witness file")
    try:
        sections = []
        for sec in data["sections"]:
            xi = {}
            for item in sec:
                xi[int(item["s"])] = decode_matrix(item["matrix"], carrier_dim)
            sections.append(xi)
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed witness file: {exc}") from exc
    return Witness(sections=sections)


def load_json(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc


def dump_json(obj: dict, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1)
        fh.write("\n")


def digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()[:16]


def make_report(command: str, inputs: dict, verdict: str, metrics: dict,
                seed: int, tolerances: dict) -> dict:
    return {"command": command, "inputs": inputs, "verdict": verdict,
            "metrics": metrics, "seed": seed, "tolerances": tolerances}


def print_report(report: dict) -> None:
    print(json.dumps(report, indent=1))
