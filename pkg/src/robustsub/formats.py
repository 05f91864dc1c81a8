"""JSON (de)serialization of instances, constraints and decision trees."""
from __future__ import annotations

import json
from pathlib import Path

from .applications import DEFAULT_SUPPORT_CAP, instance_from_descriptor
from .model import Instance, Prior, TableUtility, ValidationError

VERSION = "asm-1"


def instance_to_dict(inst: Instance, materialize: bool = False) -> dict:
    """Instance as an ``asm-1`` document.

    With ``materialize`` the utility is written as a full table over every
    subset of the ground set, independent of the generator that produced it.
    """
    util = inst.utility.to_dict()
    if materialize and util["type"] != "table":
        import itertools

        rows = []
        for r in range(inst.n + 1):
            for s in itertools.combinations(range(inst.n), r):
                rows.append({"set": list(s), "values": inst.utility_vector(s).tolist()})
        util = {"type": "table", "rows": rows}
    return {
        "version": VERSION,
        "n": inst.n,
        "num_states": inst.num_states,
        "prior": [{"states": list(r), "prob": p} for r, p in zip(inst.realizations, inst.prior.probs)],
        "utility": util,
    }


def instance_from_dict(d: dict, support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    if d.get("version", VERSION) != VERSION:
        raise ValidationError(f"unsupported instance version {d.get('version')!r}")
    try:
        n = int(d["n"])
        num_states = int(d["num_states"])
        prior = Prior.from_pairs((tuple(e["states"]), float(e["prob"])) for e in d["prior"])
        util = d["utility"]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed instance document: {exc}") from None
    if util.get("type") == "table":
        rows = {tuple(r["set"]): r["values"] for r in util["rows"]}
        return Instance(n, num_states, prior, TableUtility(prior.realizations, rows))
    inst = instance_from_descriptor(util, support_cap)
    if inst.n != n or inst.num_states != num_states:
        raise ValidationError("instance header disagrees with its application descriptor")
    mine = dict(zip(inst.realizations, inst.prior.probs))
    theirs = dict(zip(prior.realizations, prior.probs))
    if mine.keys() != theirs.keys() or any(abs(mine[r] - theirs[r]) > 1e-9 for r in mine):
        raise ValidationError("prior in file disagrees with the one implied by the application descriptor")
    return inst


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def save_instance(inst: Instance, path: str | Path, materialize: bool = False):
    Path(path).write_text(dumps(instance_to_dict(inst, materialize)) + "\n")


def load_instance(path: str | Path, support_cap: int = DEFAULT_SUPPORT_CAP) -> Instance:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: not valid JSON ({exc})") from None
    return instance_from_dict(doc, support_cap)


def load_json_arg(text: str) -> dict:
    """Parse an inline JSON argument or read it from ``@file``."""
    if text.startswith("@"):
        text = Path(text[1:]).read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON argument: {exc}") from None
