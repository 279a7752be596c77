"""JSON files for configs and simulated snapshots (complex numbers as ``[re, im]``)."""

import json
from pathlib import Path

from .array_model import ArrayGeometry, Snapshots, SourceConfig
from .covariance import complex_from_json, complex_to_json


def load_json(path):
    with open(path) as fh:
        return json.load(fh)


def dump_json(obj, path=None, indent=None) -> str:
    text = json.dumps(obj, indent=indent, sort_keys=True)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def snapshots_to_dict(snaps: Snapshots) -> dict:
    return {
        "geometry": snaps.geometry.to_dict(),
        "truth": snaps.truth.to_dict() if snaps.truth is not None else None,
        "l": snaps.l,
        "x": complex_to_json(snaps.x),
        "y": complex_to_json(snaps.y),
    }


def snapshots_from_dict(d: dict) -> Snapshots:
    truth = SourceConfig.from_dict(d["truth"]) if d.get("truth") else None
    return Snapshots(complex_from_json(d["x"]), complex_from_json(d["y"]),
                     ArrayGeometry.from_dict(d["geometry"]), truth)


def save_snapshots(snaps: Snapshots, path) -> None:
    dump_json(snapshots_to_dict(snaps), path)


def load_snapshots(path) -> Snapshots:
    return snapshots_from_dict(load_json(path))
