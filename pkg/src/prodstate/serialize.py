"""JSON codecs for every object the toolkit reads or writes.

All files are JSON with complex numbers stored as [re, im] pairs; floats go
through Python's shortest-round-trip repr, so save/load is exact.  Every
payload carries an "object" tag and the top-level file a format_version,
which keeps the formats auditable at desk scale.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .cover import Cover, CoverOverrides, CoverParams
from .discrete import DiscreteClass
from .hardness import Tensor4
from .instances import Graph
from .mps import MatrixProductState
from .states import ProductParams, QuantumState

__all__ = [
    "FORMAT_VERSION",
    "canonical_dumps",
    "digest",
    "from_json",
    "load_json",
    "save_json",
    "to_json",
]

FORMAT_VERSION = 1


def _pairs(values: np.ndarray) -> list:
    flat = np.asarray(values, dtype=complex).reshape(-1)
    return [[float(v.real), float(v.imag)] for v in flat]


def _unpairs(pairs, shape) -> np.ndarray:
    arr = np.array([complex(re, im) for re, im in pairs], dtype=complex)
    return arr.reshape(shape)


def state_to_json(s: QuantumState) -> dict:
    return {
        "object": "state",
        "n": s.n,
        "local_dim": s.local_dim,
        "kind": s.kind,
        "normalized": s.normalized,
        "basis": "site1-most-significant",
        "data": _pairs(s.data),
    }


def state_from_json(d: dict) -> QuantumState:
    dim = d["local_dim"] ** d["n"]
    shape = (dim,) if d["kind"] == "pure" else (dim, dim)
    return QuantumState(n=d["n"], local_dim=d["local_dim"], kind=d["kind"],
                        data=_unpairs(d["data"], shape),
                        normalized=d.get("normalized", True))


def params_to_json(p: ProductParams) -> dict:
    return {"object": "product-params", "z": _pairs(np.array(p.z))}


def params_from_json(d: dict) -> ProductParams:
    return ProductParams(tuple(complex(re, im) for re, im in d["z"]))


def cover_to_json(c: Cover) -> dict:
    return {
        "object": "cover",
        "m": c.m,
        "eta": c.params.eta,
        "eps": c.params.eps,
        "delta": c.params.delta,
        "overrides": dataclasses.asdict(c.params.overrides),
        "members": [params_to_json(p) for p in c.members],
    }


def cover_from_json(d: dict) -> Cover:
    params = CoverParams(d["eta"], d["eps"], d["delta"],
                         CoverOverrides(**d["overrides"]))
    members = tuple(params_from_json(m) for m in d["members"])
    return Cover(members=members, m=d["m"], params=params)


def mps_to_json(m: MatrixProductState) -> dict:
    return {
        "object": "mps",
        "n": m.n,
        "local_dim": m.local_dim,
        "tensors": [{"shape": list(t.shape), "data": _pairs(t)}
                    for t in m.tensors],
    }


def mps_from_json(d: dict) -> MatrixProductState:
    return MatrixProductState(
        [_unpairs(t["data"], tuple(t["shape"])) for t in d["tensors"]])


def tensor_to_json(t: Tensor4) -> dict:
    return {"object": "tensor4", "side": t.side, "data": _pairs(t.entries)}


def tensor_from_json(d: dict) -> Tensor4:
    side = d["side"]
    return Tensor4(_unpairs(d["data"], (side,) * 4))


def class_to_json(c: DiscreteClass) -> dict:
    return {
        "object": "discrete-class",
        "gamma": c.gamma,
        "site_states": [[_pairs(phi) for phi in menu] for menu in c.site_states],
    }


def class_from_json(d: dict) -> DiscreteClass:
    menus = [[_unpairs(phi, (len(phi),)) for phi in menu]
             for menu in d["site_states"]]
    return DiscreteClass(menus, gamma=d["gamma"])


def graph_to_json(g: Graph) -> dict:
    return {
        "object": "graph",
        "n_vertices": g.n_vertices,
        "edges": sorted([int(s), int(t)] for s, t in g.edges),
    }


def graph_from_json(d: dict) -> Graph:
    return Graph(d["n_vertices"], frozenset(tuple(e) for e in d["edges"]))


_ENCODERS = {
    QuantumState: state_to_json,
    ProductParams: params_to_json,
    Cover: cover_to_json,
    MatrixProductState: mps_to_json,
    Tensor4: tensor_to_json,
    DiscreteClass: class_to_json,
    Graph: graph_to_json,
}

_DECODERS = {
    "state": state_from_json,
    "product-params": params_from_json,
    "cover": cover_from_json,
    "mps": mps_from_json,
    "tensor4": tensor_from_json,
    "discrete-class": class_from_json,
    "graph": graph_from_json,
}


def to_json(obj) -> dict:
    """Encode any toolkit object as a tagged JSON-ready dict."""
    try:
        return _ENCODERS[type(obj)](obj)
    except KeyError:
        raise TypeError(f"no JSON encoding for {type(obj).__name__}") from None


def from_json(d: dict):
    """Decode a tagged dict produced by to_json."""
    tag = d.get("object")
    if tag not in _DECODERS:
        raise ValueError(f"unknown object tag {tag!r}")
    return _DECODERS[tag](d)


def canonical_dumps(payload) -> str:
    """Deterministic JSON text: sorted keys, stable float repr."""
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def digest(payload) -> str:
    """sha256 of the canonical JSON text of a payload."""
    return hashlib.sha256(canonical_dumps(payload).encode()).hexdigest()


def save_json(path, payload) -> None:
    text = canonical_dumps({"format_version": FORMAT_VERSION, **payload})
    Path(path).write_text(text)


def load_json(path) -> dict:
    d = json.loads(Path(path).read_text())
    version = d.get("format_version")
    if version != FORMAT_VERSION:
        raise ValueError(f"unsupported format_version {version!r}")
    return d
