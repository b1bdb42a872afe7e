"""Check records, suite reports and their JSON / CSV serialisation.

JSON layout (schema ``qkcurv.report/1``)::

    {
      "schema": "qkcurv.report/1",
      "suite": "<suite name>",
      "model": {"family": ..., "n": ..., "scal": ..., "eps": ..., "dim": ...},
      "seed": <int>,
      "passed": <bool>,
      "wall_time": <seconds>,
      "records": [
        {"name": ..., "anchor": ..., "value": ..., "bound": ..., "passed": ...,
         "status": "pass" | "fail" | "skipped", "witness": {...} | null, "reason": ...},
        ...
      ]
    }

Keys are sorted and floats are written with 17 significant digits, so two
runs with the same seed differ only in ``wall_time``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Optional

REPORT_SCHEMA = "qkcurv.report/1"
STATUSES = ("pass", "fail", "skipped")
CSV_FIELDS = ("suite", "name", "anchor", "status", "passed", "value", "bound", "reason")


@dataclass
class CheckRecord:
    name: str
    anchor: str
    value: Optional[float]
    bound: Optional[float]
    passed: bool
    status: str = ""
    witness: Optional[dict] = None
    reason: str = ""

    def __post_init__(self):
        if not self.status:
            self.status = "pass" if self.passed else "fail"
        if self.status not in STATUSES:
            raise ValueError(f"unknown status {self.status!r}")

    @classmethod
    def skipped(cls, name: str, anchor: str, reason: str) -> "CheckRecord":
        return cls(name, anchor, None, None, True, "skipped", None, reason)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "anchor": self.anchor,
            "value": self.value,
            "bound": self.bound,
            "passed": self.passed,
            "status": self.status,
            "witness": self.witness,
            "reason": self.reason,
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CheckRecord":
        return cls(**{k: payload[k] for k in ("name", "anchor", "value", "bound", "passed", "status", "witness", "reason")})


def upper(name: str, anchor: str, value: float, bound: float, witness: Optional[dict] = None) -> CheckRecord:
    """Record that passes when ``value <= bound``."""
    return CheckRecord(name, anchor, float(value), float(bound), bool(value <= bound), witness=witness)


def lower(name: str, anchor: str, value: float, bound: float, witness: Optional[dict] = None) -> CheckRecord:
    """Record that passes when ``value >= bound``."""
    return CheckRecord(name, anchor, float(value), float(bound), bool(value >= bound), witness=witness)


def near(name: str, anchor: str, value: float, target: float, tol: float, witness: Optional[dict] = None) -> CheckRecord:
    """Record that passes when ``|value - target| <= tol``; ``bound`` stores the target."""
    rec = CheckRecord(name, anchor, float(value), float(target), bool(abs(value - target) <= tol), witness=witness)
    if not rec.passed:
        rec.reason = f"|value - target| = {abs(value - target):.3e} exceeds {tol:.1e}"
    return rec


@dataclass
class CheckReport:
    suite: str
    model: dict
    records: list[CheckRecord] = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0
    schema: str = REPORT_SCHEMA

    @property
    def passed(self) -> bool:
        """True when every record that actually ran passed."""
        return all(r.passed for r in self.records if r.status != "skipped")

    def add(self, record: CheckRecord) -> CheckRecord:
        self.records.append(record)
        return record

    def failures(self) -> list[CheckRecord]:
        return [r for r in self.records if r.status == "fail"]

    def to_dict(self) -> dict:
        return {
            "schema": self.schema,
            "suite": self.suite,
            "model": self.model,
            "seed": self.seed,
            "passed": self.passed,
            "wall_time": self.wall_time,
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "CheckReport":
        if payload.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {payload.get('schema')!r}")
        return cls(
            suite=payload["suite"],
            model=payload["model"],
            records=[CheckRecord.from_dict(r) for r in payload["records"]],
            wall_time=payload["wall_time"],
            seed=payload["seed"],
        )

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for r in self.records:
            writer.writerow({
                "suite": self.suite,
                "name": r.name,
                "anchor": r.anchor,
                "status": r.status,
                "passed": r.passed,
                "value": _fmt_float(r.value) if r.value is not None else "",
                "bound": _fmt_float(r.bound) if r.bound is not None else "",
                "reason": r.reason,
            })
        return buf.getvalue()

    def emit(self, fmt: str) -> str:
        if fmt == "json":
            return self.to_json()
        if fmt == "csv":
            return self.to_csv()
        raise ValueError(f"unknown format {fmt!r}")


def _fmt_float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = format(x, ".17g")
    # keep floats recognisable as floats after parsing
    if all(c not in text for c in ".en"):
        text += ".0"
    return text


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with sorted keys and 17-significant-digit floats."""
    return _encode(obj, indent, 0) + "\n"


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, (bool, str)):
        return json.dumps(obj, ensure_ascii=False)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    if hasattr(obj, "item") and hasattr(obj, "dtype"):
        return _encode(obj.item(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k), ensure_ascii=False)}: {_encode(obj[k], indent, level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + _encode(v, indent, level + 1) for v in obj) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")
