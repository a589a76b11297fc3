"""Line-oriented reports.

Structured form::

    #ledgerknow-report v1
    command<TAB>"suite"
    status<TAB>"pass"
    ...

Every line after the header is ``key<TAB>json-value``; keys are unique and
emitted in a fixed order (``command``, ``status``, ``digest`` first, the rest
sorted).  Values are compact JSON with sorted object keys, so equal reports
are byte-identical.
"""

from __future__ import annotations

import json
from typing import Any

HEADER = "#ledgerknow-report v1"
_FIRST = ("command", "status", "digest")


class ReportError(ValueError):
    pass


def _order(report: dict[str, Any]) -> list[str]:
    head = [k for k in _FIRST if k in report]
    return head + sorted(k for k in report if k not in _FIRST)


def dump_structured(report: dict[str, Any]) -> str:
    lines = [HEADER]
    for key in _order(report):
        if "\t" in key or "\n" in key:
            raise ReportError(f"bad key {key!r}")
        lines.append(f"{key}\t{json.dumps(report[key], sort_keys=True, separators=(',', ':'))}")
    return "\n".join(lines) + "\n"


def load_structured(text: str) -> dict[str, Any]:
    lines = text.splitlines()
    if not lines or lines[0] != HEADER:
        raise ReportError("missing report header")
    out: dict[str, Any] = {}
    for n, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        key, sep, value = line.partition("\t")
        if not sep:
            raise ReportError(f"line {n}: expected key<TAB>value")
        if key in out:
            raise ReportError(f"line {n}: duplicate key {key!r}")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError as e:
            raise ReportError(f"line {n}: {e}") from e
    return out


def _text_value(v: Any, indent: int) -> list[str]:
    pad = "  " * indent
    if isinstance(v, dict):
        out = []
        for k in sorted(v):
            sub = v[k]
            if isinstance(sub, (dict, list, tuple)) and sub:
                out.append(f"{pad}{k}:")
                out.extend(_text_value(sub, indent + 1))
            else:
                out.append(f"{pad}{k}: {_scalar(sub)}")
        return out
    if isinstance(v, (list, tuple)):
        out = []
        for item in v:
            if isinstance(item, (dict, list, tuple)) and item:
                out.append(f"{pad}-")
                out.extend(_text_value(item, indent + 1))
            else:
                out.append(f"{pad}- {_scalar(item)}")
        return out
    return [f"{pad}{_scalar(v)}"]


def _scalar(v: Any) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if v is None:
        return "-"
    if isinstance(v, (dict, list, tuple)):
        return json.dumps(v)
    return str(v)


def dump_text(report: dict[str, Any]) -> str:
    lines = []
    for key in _order(report):
        v = report[key]
        if isinstance(v, (dict, list, tuple)) and v:
            lines.append(f"{key}:")
            lines.extend(_text_value(v, 1))
        else:
            lines.append(f"{key}: {_scalar(v)}")
    return "\n".join(lines) + "\n"


def render(report: dict[str, Any], fmt: str) -> str:
    if fmt == "structured":
        return dump_structured(report)
    if fmt == "text":
        return dump_text(report)
    raise ReportError(f"unknown format {fmt!r}")
