# nr_fso_bench/utils/serialization.py

import json
import math
from dataclasses import is_dataclass, fields
from enum import Enum
from pathlib import Path

import numpy as np

_INDENT = 2


def deep_to_dict(value, *, _seen=None):
    """Recursively convert bench objects, numpy values and common Python objects to JSON-serializable primitives."""
    if _seen is None:
        _seen = set()

    # None / primitives
    if value is None or isinstance(value, (str, bool, int)):
        return value
    if isinstance(value, float):
        # JSON has no inf/nan; +inf is the "no noise" sentinel in configs
        if math.isnan(value):
            return None
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value

    # numpy scalars
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return deep_to_dict(float(value), _seen=_seen)
    if isinstance(value, np.complexfloating):
        return {"re": float(value.real), "im": float(value.imag)}

    if isinstance(value, Enum):
        return value.value
    if isinstance(value, Path):
        return str(value)

    # numpy arrays -> (nested) lists
    if isinstance(value, np.ndarray):
        if np.iscomplexobj(value):
            return {"re": deep_to_dict(value.real, _seen=_seen), "im": deep_to_dict(value.imag, _seen=_seen)}
        return [deep_to_dict(v, _seen=_seen) for v in value.tolist()]

    # Avoid cycles
    obj_id = id(value)
    if obj_id in _seen:
        return None
    _seen.add(obj_id)

    try:
        # Anything with to_dict()
        if hasattr(value, "to_dict") and callable(value.to_dict):
            return deep_to_dict(value.to_dict(), _seen=_seen)

        # Dataclasses; asdict() would deep-copy numpy arrays, walk fields instead
        if is_dataclass(value) and not isinstance(value, type):
            return {f.name: deep_to_dict(getattr(value, f.name), _seen=_seen)
                    for f in fields(value) if not f.name.startswith("_")}

        if isinstance(value, (list, tuple, set, frozenset)):
            items = sorted(value, key=str) if isinstance(value, (set, frozenset)) else value
            return [deep_to_dict(v, _seen=_seen) for v in items]

        if isinstance(value, dict):
            return {str(k): deep_to_dict(v, _seen=_seen) for k, v in value.items()}

        if hasattr(value, "__dict__"):
            return {str(k): deep_to_dict(v, _seen=_seen)
                    for k, v in value.__dict__.items()
                    if not k.startswith("_")}
        return str(value)
    finally:
        _seen.discard(obj_id)


def delete_none(_dict):
    """Delete None values recursively from all of the dictionaries, tuples, lists, sets"""
    if isinstance(_dict, dict):
        for key, value in list(_dict.items()):
            if isinstance(value, (list, dict, tuple, set)):
                _dict[key] = delete_none(value)
            elif value is None or key is None:
                del _dict[key]

    elif isinstance(_dict, (list, set, tuple)):
        _dict = type(_dict)(delete_none(item) for item in _dict if item is not None)

    return _dict


def dumps(value) -> str:
    """Stable JSON text: identical inputs give byte-identical output."""
    body = delete_none(deep_to_dict(value))
    return json.dumps(body, indent=_INDENT, sort_keys=True) if _INDENT != 0 else json.dumps(body, sort_keys=True)
