"""Report rows and their text, JSON and CSV renderings.

Numbers leave the process as decimal strings with 15 significant digits.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

PASS = "pass"
FAIL = "fail"
PRECONDITION = "precondition_failed"
EXIT_CODES = {PASS: 0, FAIL: 1, PRECONDITION: 2}
USAGE_EXIT = 3

CSV_HEADER = ("inequality_id", "function", "a", "b", "lower", "value", "upper", "slack_lower", "slack_upper", "status")


def fmt(x: float) -> str:
    return format(float(x), ".15g")


@dataclass(frozen=True)
class ReportRow:
    inequality_id: str
    function: str
    a: float
    b: float
    lower: float
    value: float
    upper: float
    status: str
    message: str = ""

    @property
    def slack_lower(self) -> float:
        return self.value - self.lower

    @property
    def slack_upper(self) -> float:
        return self.upper - self.value

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.status]

    @classmethod
    def judged(cls, inequality_id: str, function: str, a, b, lower, value, upper, tol: float) -> "ReportRow":
        """Row whose status is pass exactly when both slacks are >= -tol."""
        ok = value - lower >= -tol and upper - value >= -tol
        return cls(inequality_id, function, a, b, lower, value, upper, PASS if ok else FAIL)

    @classmethod
    def precondition(cls, inequality_id: str, function: str, a, b, message: str) -> "ReportRow":
        nan = math.nan
        return cls(inequality_id, function, a, b, nan, nan, nan, PRECONDITION, message)

    def fields(self) -> dict[str, str]:
        return {
            "inequality_id": self.inequality_id,
            "function": self.function,
            "a": fmt(self.a),
            "b": fmt(self.b),
            "lower": fmt(self.lower),
            "value": fmt(self.value),
            "upper": fmt(self.upper),
            "slack_lower": fmt(self.slack_lower),
            "slack_upper": fmt(self.slack_upper),
            "status": self.status,
        }


def worst_exit(rows) -> int:
    return max((r.exit_code for r in rows), default=0)


def to_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_HEADER, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r.fields())
    return buf.getvalue()


def to_json(rows, summary: dict | None = None) -> str:
    out = []
    for r in rows:
        d = r.fields()
        if r.message:
            d["message"] = r.message
        out.append(d)
    doc = {"rows": out}
    if summary is not None:
        doc["summary"] = summary
    return json.dumps(doc, indent=2) + "\n"


def _short(x: float) -> str:
    return format(float(x), ".10g")


def to_text(rows) -> str:
    lines = []
    for r in rows:
        where = f"[{_short(r.a)}, {_short(r.b)}]"
        if r.status == PRECONDITION:
            lines.append(f"{r.inequality_id:<6} {r.function}  on {where}: {r.status}: {r.message}")
            continue
        lines.append(
            f"{r.inequality_id:<6} {r.function}  on {where}: "
            f"lower={_short(r.lower)} value={_short(r.value)} upper={_short(r.upper)}  {r.status}"
        )
    return "\n".join(lines) + "\n"


def render(rows, fmt_name: str, summary: dict | None = None) -> str:
    if fmt_name == "csv":
        return to_csv(rows)
    if fmt_name == "json":
        return to_json(rows, summary)
    return to_text(rows)
