"""Model files and hypergraph export."""

from __future__ import annotations

import json
import math

from .spinmodel import GeneralPauli, IndependentXZ, Interaction, SpinModel

FORMAT = "spacetime-spin-model/1"


def _channel_dict(ch) -> dict | None:
    if isinstance(ch, IndependentXZ):
        return {"kind": "independent_xz", "p_x": ch.p_x, "p_z": ch.p_z}
    if isinstance(ch, GeneralPauli):
        return {"kind": "general", "p_i": ch.p_i, "p_x": ch.p_x, "p_y": ch.p_y, "p_z": ch.p_z}
    return None


def _channel_from(d):
    if d is None:
        return None
    if d["kind"] == "independent_xz":
        return IndependentXZ(d["p_x"], d["p_z"])
    return GeneralPauli(d["p_i"], d["p_x"], d["p_y"], d["p_z"])


def _finite(v: float):
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def model_to_dict(model: SpinModel) -> dict:
    return {
        "format": FORMAT,
        "header": {
            "spins": model.num_spins,
            "interactions": len(model.interactions),
            "css": model.css_split is not None,
            "num_qubits": model.num_qubits,
            "num_layers": model.num_layers,
            "log_offset": model.log_offset,
            "simplified": model.simplified,
            "channel": _channel_dict(model.channel),
        },
        "spin_origin": list(model.spin_origin),
        "spin_flavors": list(model.spin_flavors),
        "records": [
            {
                "spins": list(i.spins),
                "K": _finite(i.coupling),
                "p": i.p,
                "weights": list(i.weights),
                "members": [list(m) for m in i.members],
            }
            for i in model.interactions
        ],
    }


def model_from_dict(d: dict) -> SpinModel:
    if d.get("format") != FORMAT:
        raise ValueError("not a spin model file")
    h = d["header"]
    inters = tuple(
        Interaction(tuple(r["spins"]), float(r["p"]),
                    tuple((m[0], int(m[1]), int(m[2])) for m in r["members"]), tuple(r["weights"]))
        for r in d["records"])
    return SpinModel(h["spins"], inters, h["num_qubits"], h["num_layers"], h["log_offset"],
                     tuple(d["spin_origin"]), tuple(d["spin_flavors"]),
                     _channel_from(h["channel"]), h["simplified"])


def save_model(model: SpinModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh, indent=1)


def load_model(path) -> SpinModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def graph_export(model: SpinModel) -> dict:
    """Vertices are spins, hyperedges are interactions with their weights."""
    return {
        "vertices": [{"id": s, "flavor": (model.spin_flavors[s] if model.spin_flavors else None)}
                     for s in range(model.num_spins)],
        "hyperedges": [{"id": c, "spins": list(i.spins), "K": _finite(i.coupling),
                        "w_x": i.weights[0], "w_z": i.weights[1]}
                       for c, i in enumerate(model.interactions)],
    }
