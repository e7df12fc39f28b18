"""Report container and its JSON, CSV and text-table renderings.

A report is a dict of scalar metadata plus named sections, each a list of
flat rows. All three formats are produced from that one structure; CSV uses
the long layout ``section,row,field,value`` so it can be parsed back.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

SECTIONS = ("states", "coefficients", "slopes", "checks")


@dataclass
class Report:
    meta: dict
    sections: dict = field(default_factory=dict)

    def add(self, section: str, row: dict):
        self.sections.setdefault(section, []).append(row)

    @property
    def checks(self) -> list:
        return self.sections.get("checks", [])

    @property
    def passed(self) -> bool:
        return all(row["passed"] for row in self.checks)

    def to_dict(self) -> dict:
        out = {"meta": dict(self.meta)}
        for name in _ordered(self.sections):
            out[name] = [dict(r) for r in self.sections[name]]
        return out


def _ordered(sections):
    known = [s for s in SECTIONS if s in sections]
    return known + sorted(s for s in sections if s not in SECTIONS)


def _plain(value):
    """numpy scalars to builtins so json/csv see ordinary values."""
    if hasattr(value, "item"):
        return value.item()
    return value


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return _plain(obj)


def to_json(report: Report) -> str:
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(_clean(report.to_dict()), indent=1) + "\n"


def _fmt(value, digits):
    value = _plain(value)
    if isinstance(value, bool) or value is None:
        return json.dumps(value)
    if isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            return repr(value)
        return format(value, f".{digits}g")
    return str(value)


def to_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "row", "field", "value"])
    d = _clean(report.to_dict())
    for key, value in d["meta"].items():
        w.writerow(["meta", 0, key, _fmt(value, 17)])
    for name in _ordered(report.sections):
        for i, row in enumerate(d[name]):
            for key, value in row.items():
                w.writerow([name, i, key, _fmt(value, 17)])
    return buf.getvalue()


def to_table(report: Report) -> str:
    d = _clean(report.to_dict())
    lines = []
    width = max((len(k) for k in d["meta"]), default=0)
    for key, value in d["meta"].items():
        lines.append(f"{key:<{width}}  {_fmt(value, 9)}")
    for name in _ordered(report.sections):
        rows = d[name]
        if not rows:
            continue
        cols = list(dict.fromkeys(k for r in rows for k in r))
        cells = [[_fmt(r[c], 9) if c in r else "" for c in cols] for r in rows]
        widths = [max(len(c), *(len(row[i]) for row in cells)) for i, c in enumerate(cols)]
        lines.append("")
        lines.append(f"[{name}]")
        lines.append("  ".join(c.rjust(wd) for c, wd in zip(cols, widths)))
        for row in cells:
            lines.append("  ".join(v.rjust(wd) for v, wd in zip(row, widths)))
    return "\n".join(lines) + "\n"


RENDERERS = {"json": to_json, "csv": to_csv, "table": to_table}


def render(report: Report, fmt: str) -> str:
    return RENDERERS[fmt](report)


def parse_value(text: str):
    """Inverse of the CSV value formatting."""
    if text in ("true", "false", "null"):
        return json.loads(text)
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def from_csv(text: str) -> dict:
    """Rebuild the :meth:`Report.to_dict` structure from CSV output."""
    out = {"meta": {}}
    for rec in csv.DictReader(io.StringIO(text)):
        value = parse_value(rec["value"])
        if rec["section"] == "meta":
            out["meta"][rec["field"]] = value
            continue
        rows = out.setdefault(rec["section"], [])
        i = int(rec["row"])
        while len(rows) <= i:
            rows.append({})
        rows[i][rec["field"]] = value
    return out
