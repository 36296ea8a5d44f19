"""Report documents: deterministic structured output and a text rendering.

Structured output is JSON with sorted keys and every real number written
with 17 significant digits (``%.17g``), so a fixed (config, seed) pair
always produces the same bytes.  Non-finite numbers are written as the
strings ``"inf"``, ``"-inf"`` and ``"nan"``.

Schema ``twinmetric.report/1``::

    {
      "schema": "twinmetric.report/1",
      "kind": "verify" | "roots" | "congruence" | "realify",
      "passed": bool,
      ... kind-specific fields ...
    }

A verify report carries ``config``, ``suite``, ``seed`` and ``checks``, a
list sorted by name whose entries hold ``name``, ``check``, ``passed``,
``residuals``, ``tolerances``, ``values``, ``plan`` ({name, count, seed})
and, on domain failures, ``error``.  ``wall_time`` appears only when
timings were requested, since it would break byte-identity.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict

import numpy as np

SCHEMA = "twinmetric.report/1"


def _number(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    if x == 0:
        return "0"  # folds -0.0 as well
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return format(x, ".17g")


def _plain(obj):
    """numpy scalars/arrays and complex numbers to JSON-friendly values."""
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, np.generic):
        return _plain(obj.item())
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    return obj


def dumps(doc, indent: int = 2) -> str:
    """Deterministic JSON text for ``doc``."""

    def emit(obj, level: int) -> str:
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if obj is None:
            return "null"
        if isinstance(obj, bool):
            return "true" if obj else "false"
        if isinstance(obj, int):
            return str(obj)
        if isinstance(obj, float):
            return _number(obj)
        if isinstance(obj, str):
            return json.dumps(obj)
        if isinstance(obj, list):
            if not obj:
                return "[]"
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
                return "[" + ", ".join(emit(v, 0) for v in obj) + "]"
            return "[\n" + ",\n".join(pad + emit(v, level + 1) for v in obj) + "\n" + end + "]"
        if isinstance(obj, dict):
            if not obj:
                return "{}"
            items = sorted(obj.items())
            body = ",\n".join(f"{pad}{json.dumps(k)}: {emit(v, level + 1)}" for k, v in items)
            return "{\n" + body + "\n" + end + "}"
        raise TypeError(f"cannot serialize {type(obj).__name__}")

    return emit(_plain(doc), 0) + "\n"


def loads(text: str) -> dict:
    return json.loads(text)


def verify_document(config: str, suite: str, seed: int, results, timings: bool = False) -> dict:
    checks = []
    for r in results:
        entry = asdict(r)
        if not timings:
            entry.pop("wall_time")
        if entry.get("error") is None:
            entry.pop("error")
        checks.append(entry)
    return {
        "schema": SCHEMA,
        "kind": "verify",
        "config": config,
        "suite": suite,
        "seed": seed,
        "passed": all(r.passed for r in results),
        "checks": checks,
    }


def _fmt(v) -> str:
    if isinstance(v, float):
        return format(v, ".17g")
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return f"{v['re']:.17g}{v['im']:+.17g}j"
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render_text(doc: dict) -> str:
    """Human-readable summary of any report document."""
    doc = loads(dumps(doc))  # same number normalization as the structured form
    kind = doc.get("kind")
    lines = []
    status = "PASS" if doc.get("passed") else "FAIL"
    if kind == "verify":
        lines.append(f"suite {doc['suite']} ({doc['config']}, seed {doc['seed']}): {status}")
        for c in doc["checks"]:
            mark = "PASS" if c["passed"] else "FAIL"
            lines.append(f"  [{mark}] {c['name']} ({c['check']})")
            if "error" in c:
                lines.append(f"      error: {c['error']}")
            for k in sorted(c.get("residuals", {})):
                tol = c["tolerances"].get(k)
                lines.append(f"      {k} = {_fmt(c['residuals'][k])}  (tol {_fmt(tol)})")
            for k in sorted(c.get("values", {})):
                lines.append(f"      {k}: {_fmt(c['values'][k])}")
    else:
        lines.append(f"{kind}: {status}")
        for k in sorted(doc):
            if k in ("schema", "kind", "passed"):
                continue
            v = doc[k]
            if isinstance(v, list) and v and isinstance(v[0], list):
                lines.append(f"  {k}:")
                lines.extend("    " + " ".join(_fmt(x) for x in row) for row in v)
            elif isinstance(v, list) and v and isinstance(v[0], dict):
                lines.append(f"  {k}:")
                for item in v:
                    lines.append("    " + ", ".join(f"{a}={_fmt(b)}" for a, b in sorted(item.items())))
            else:
                lines.append(f"  {k}: {_fmt(v)}")
    return "\n".join(lines) + "\n"
