"""JSON file formats for instances, menus and bucket mechanisms.

Instance: ``{"k": int, "items": [{"values": [...], "probs": [...]}, ...]}``.

Menu: ``{"n": int, "components": [{"blocks": [[...], ...],
"options": [{"x": [...], "price": number}, ...]}, ...]}``; ``n`` may be
omitted when there is at least one component.

Floats are written with 17 significant digits so every double survives a
round trip unchanged.
"""

from __future__ import annotations

import json
import math
from typing import Any

import numpy as np

from .buckets import BucketMechanism
from .dist import Marginal, ProductDistribution, make_product
from .errors import InvalidDistribution, LengthMismatch, ValidationError
from .menu import ItemPermutationGroup, MenuOption, SymmetricComponent, SymmetricMenu


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        raise ValueError("NaN cannot be serialised")
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _is_scalar_list(x) -> bool:
    return isinstance(x, list) and all(isinstance(v, (int, float, bool, str)) or v is None for v in x)


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with 17-significant-digit floats; flat lists stay on one line."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (np.floating,)):
        obj = float(obj)
    if isinstance(obj, (np.integer,)):
        obj = int(obj)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, tuple):
        obj = list(obj)
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if _is_scalar_list(obj):
            return "[" + ", ".join(dumps(v, indent) for v in obj) + "]"
        inner = (",\n").join(pad + dumps(v, indent, _level + 1) for v in obj)
        return "[\n" + inner + "\n" + end + "]"
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        inner = (",\n").join(pad + json.dumps(str(k)) + ": " + dumps(v, indent, _level + 1) for k, v in obj.items())
        return "{\n" + inner + "\n" + end + "}"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _num(x) -> float:
    if isinstance(x, str):
        if x in ("inf", "Infinity"):
            return math.inf
        raise ValidationError(f"expected a number, got {x!r}")
    return float(x)


# instances


def instance_to_dict(D: ProductDistribution) -> dict:
    return {
        "k": D.k,
        "items": [{"values": m.values.tolist(), "probs": m.probs.tolist()} for m in D.marginals],
    }


def instance_from_dict(d: dict) -> ProductDistribution:
    if not isinstance(d, dict) or "items" not in d or "k" not in d:
        raise ValidationError('instance must be an object with "k" and "items"')
    items = d["items"]
    if not isinstance(items, list) or not items:
        raise ValidationError('"items" must be a non-empty list')
    marginals = []
    for i, it in enumerate(items):
        try:
            values = [float(v) for v in it["values"]]
            probs = [float(p) for p in it["probs"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f'marginal {i}: needs numeric "values" and "probs" ({exc})') from None
        if len(values) != len(probs):
            raise LengthMismatch(f"marginal {i}: {len(values)} values but {len(probs)} probs")
        marginals.append((values, probs))
    k = d["k"]
    if isinstance(k, bool) or not isinstance(k, int):
        raise ValidationError(f'"k" must be an integer, got {k!r}')
    return make_product(marginals, k)


def instance_exact_from_dict(d: dict) -> ProductDistribution:
    """Parse without merging or dropping atoms (for atom-exact round trips)."""
    return ProductDistribution(
        tuple(Marginal(np.array(it["values"], dtype=float), np.array(it["probs"], dtype=float)) for it in d["items"]),
        d["k"],
    )


# menus


def menu_to_dict(M: SymmetricMenu) -> dict:
    return {
        "n": M.n,
        "components": [
            {
                "blocks": [list(b) for b in c.group.blocks],
                "options": [{"x": o.alloc.tolist(), "price": o.price} for o in c.options],
            }
            for c in M.components
        ],
    }


def menu_from_dict(d: dict) -> SymmetricMenu:
    if not isinstance(d, dict) or "components" not in d:
        raise ValidationError('menu must be an object with "components"')
    comps = []
    for ci, c in enumerate(d["components"]):
        try:
            group = ItemPermutationGroup(tuple(tuple(int(i) for i in b) for b in c["blocks"]))
            opts = tuple(MenuOption(np.array(o["x"], dtype=float), _num(o["price"])) for o in c["options"])
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"component {ci}: malformed ({exc})") from None
        comps.append(SymmetricComponent(group, opts))
    if "n" in d:
        n = int(d["n"])
    elif comps:
        n = comps[0].group.n
    else:
        raise InvalidDistribution('an empty menu needs an explicit "n"')
    return SymmetricMenu(tuple(comps), n)


# bucket mechanisms


def buckets_to_dict(bm: BucketMechanism) -> dict:
    return {
        "n": bm.n,
        "eps": bm.eps,
        "srev": bm.srev,
        "b0": [{"item": i, "price": p} for i, p in bm.b0],
        "buckets": [{"items": list(items), "price": p} for items, p in bm.buckets],
        "joint": None if bm.joint is None else {"items": list(bm.joint[0]), "price": bm.joint[1]},
        "dropped": list(bm.dropped),
    }


def buckets_from_dict(d: dict) -> BucketMechanism:
    joint = d.get("joint")
    return BucketMechanism(
        b0=tuple((int(e["item"]), float(e["price"])) for e in d["b0"]),
        buckets=tuple((tuple(int(i) for i in e["items"]), float(e["price"])) for e in d["buckets"]),
        joint=None if joint is None else (tuple(int(i) for i in joint["items"]), float(joint["price"])),
        dropped=tuple(int(i) for i in d.get("dropped", [])),
        eps=float(d["eps"]),
        n=int(d["n"]),
        srev=float(d["srev"]),
    )


def read_json(path: str) -> Any:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None


def write_json(path: str, obj: Any) -> None:
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")
