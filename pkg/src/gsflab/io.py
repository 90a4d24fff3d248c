"""JSON state files and helpers that make results JSON-serializable."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .indist import IndistState, IndistTerm
from .linalg import herm_eig
from .multidof import DistState, DofLayout, build_dist_state

SCHEMA_VERSION = 1


def _check_version(doc: dict):
    v = doc.get("v", SCHEMA_VERSION)
    if v != SCHEMA_VERSION:
        raise ValueError(f"unsupported state schema version {v!r}")


def state_from_dict(doc: dict):
    """Build a :class:`DistState` or :class:`IndistState` from a parsed state document."""
    if not isinstance(doc, dict):
        raise ValueError("state document must be a JSON object")
    _check_version(doc)
    kind = doc.get("kind")
    try:
        n, d = int(doc["n"]), int(doc["d"])
        if kind == "distinguishable":
            amps = [(tuple(a["labels"]), complex(a.get("re", 0.0), a.get("im", 0.0)))
                    for a in doc["amplitudes"]]
            return build_dist_state(DofLayout(n, d), amps)
        if kind == "indistinguishable":
            stats = doc["statistics"]
            if stats not in ("boson", "fermion"):
                raise ValueError(f"statistics must be 'boson' or 'fermion', got {stats!r}")
            terms = [IndistTerm(t["r1"], tuple(t["dofs1"]), t["r2"], tuple(t["dofs2"]),
                                complex(t.get("re", 0.0), t.get("im", 0.0)))
                     for t in doc["terms"]]
            return IndistState(terms, 1 if stats == "boson" else -1, n, d, doc["regions"])
    except KeyError as exc:
        raise ValueError(f"state document is missing field {exc}") from None
    raise ValueError(f"unknown state kind {kind!r}")


def load_state(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: invalid JSON ({exc})") from None
    return state_from_dict(doc)


def state_to_dict(state) -> dict:
    """Inverse of :func:`state_from_dict`. Distinguishable states must be pure."""
    if isinstance(state, IndistState):
        return {
            "v": SCHEMA_VERSION,
            "kind": "indistinguishable",
            "statistics": "boson" if state.eta == 1 else "fermion",
            "n": state.n,
            "d": state.d,
            "regions": list(state.regions),
            "terms": [{"r1": t.region1, "dofs1": list(t.dofs1), "r2": t.region2,
                       "dofs2": list(t.dofs2), "re": t.amplitude.real, "im": t.amplitude.imag}
                      for t in state.terms],
        }
    if isinstance(state, DistState):
        w, v = herm_eig(state.matrix)
        if w[-1] < 1 - 1e-9:
            raise ValueError("only pure distinguishable states have an amplitude form")
        ket = v[:, -1]
        k = int(np.argmax(np.abs(ket)))
        ket = ket * np.exp(-1j * np.angle(ket[k]))
        dims = state.rho.dims
        amps = []
        for idx in np.ndindex(*dims):
            a = ket[np.ravel_multi_index(idx, dims)]
            if abs(a) > 1e-14:
                amps.append({"labels": list(idx), "re": float(a.real), "im": float(a.imag)})
        return {"v": SCHEMA_VERSION, "kind": "distinguishable", "n": state.n, "d": state.d,
                "amplitudes": amps}
    raise TypeError(f"cannot serialize {type(state).__name__}")


def save_state(state, path):
    Path(path).write_text(json.dumps(state_to_dict(state), sort_keys=True, indent=2) + "\n",
                          encoding="utf-8")


def jsonable(obj):
    """Recursively convert numpy values, complex numbers and NaN into JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return None if math.isnan(f) or math.isinf(f) else f
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    return obj
