"""Method-level summaries, statistical comparison and report rendering.

Per case, the "overall" value of a metric is the mean over the foreground
classes where it is defined; the "sub-cortical" value is the DGM entry. A
method's summary is the mean of those per-case values. An infinite HD95
(class missing from one mask) propagates into the mean and sets
``hd95_infinite``.

Record files
------------
CSV, header ``case_id,method,class_code,class_name,dsc,iou,hd95``; one row
per case and class, undefined values left empty, infinite HD95 written
``inf``. JSON: ``{"records": [{"case_id", "method", "per_class":
[{"class_code", "class_name", "dsc", "iou", "hd95"}]}]}`` with ``null`` for
undefined and the string ``"inf"`` for infinity.

Summary JSON
------------
``{"summaries": [...MethodSummary fields...], "metadata": {...},
"comparisons": {metric: {"kruskal": {...}, "dunn": {...}}}}``, floats at full
precision.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import defaultdict
from dataclasses import asdict, dataclass, fields
from decimal import ROUND_HALF_EVEN, Decimal

from .errors import InconsistentCases, InfiniteValues, NoRecords
from .metrics import ClassMetrics, MetricsRecord
from .stats import DunnPair, DunnResult, GroupedScores, KruskalResult, dunn_posthoc, kruskal_wallis
from .volume import TissueClass

METRICS = ("dsc", "iou", "hd95")
SUBCORTICAL_CLASS = TissueClass.DGM
SAMPLE_UNITS = ("case_mean", "case_class")

CSV_COLUMNS = (
    "method",
    "n_cases",
    "dsc_overall",
    "dsc_subcortical",
    "iou_overall",
    "iou_subcortical",
    "hd95_overall",
    "hd95_subcortical",
)
RECORD_COLUMNS = ("case_id", "method", "class_code", "class_name", "dsc", "iou", "hd95")

METADATA = {
    "subcortical_definition": "DGM class (label 4)",
    "overall_definition": "mean over defined foreground classes per case, then mean over cases",
    "undefined_values": "excluded from class averages",
}


@dataclass
class MethodSummary:
    method: str
    dsc_overall: float
    dsc_subcortical: float
    iou_overall: float
    iou_subcortical: float
    hd95_overall: float
    hd95_subcortical: float
    n_cases: int
    hd95_infinite: bool = False


# ---------------------------------------------------------------------------
# aggregation


def _mean(values) -> float:
    values = [v for v in values if v is not None]
    if not values:
        return math.nan
    if any(math.isinf(v) for v in values):
        return math.inf
    return math.fsum(values) / len(values)


def case_overall(record: MetricsRecord, metric: str) -> float:
    return _mean(getattr(m, metric) for m in record.per_class)


def case_subcortical(record: MetricsRecord, metric: str) -> float:
    value = getattr(record.get(SUBCORTICAL_CLASS), metric)
    return math.nan if value is None else value


def _by_method(records) -> dict[str, list[MetricsRecord]]:
    records = list(records)
    if not records:
        raise NoRecords("no metrics records given")
    grouped: dict[str, list[MetricsRecord]] = defaultdict(list)
    for r in records:
        grouped[r.method].append(r)
    case_sets = {m: sorted(r.case_id for r in rs) for m, rs in grouped.items()}
    reference = next(iter(case_sets.values()))
    for method, cases in case_sets.items():
        if len(set(cases)) != len(cases):
            raise InconsistentCases(f"method {method!r} has duplicate case ids")
        if cases != reference:
            diff = sorted(set(cases) ^ set(reference))
            raise InconsistentCases(f"method {method!r} case set differs: {diff}")
    # case order fixed by id so results do not depend on input order
    return {m: sorted(rs, key=lambda r: r.case_id) for m, rs in sorted(grouped.items())}


def aggregate(records) -> list[MethodSummary]:
    """Table-style summary per method, sorted by descending overall DSC."""
    out = []
    for method, rs in _by_method(records).items():
        row = {"method": method, "n_cases": len(rs)}
        for metric in METRICS:
            overall = [case_overall(r, metric) for r in rs]
            sub = [case_subcortical(r, metric) for r in rs]
            row[f"{metric}_overall"] = _mean(v for v in overall if not math.isnan(v))
            row[f"{metric}_subcortical"] = _mean(v for v in sub if not math.isnan(v))
        row["hd95_infinite"] = math.isinf(row["hd95_overall"]) or math.isinf(row["hd95_subcortical"])
        out.append(MethodSummary(**row))
    out.sort(key=lambda s: (-_sort_key(s.dsc_overall), s.method))
    return out


def _sort_key(v: float) -> float:
    return -math.inf if math.isnan(v) else v


# ---------------------------------------------------------------------------
# statistics


def grouped_scores(records, metric: str, sample_unit: str = "case_mean") -> GroupedScores:
    """One value per case per method (``case_mean``), or per case and class (``case_class``)."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
    if sample_unit not in SAMPLE_UNITS:
        raise ValueError(f"sample_unit must be one of {SAMPLE_UNITS}, got {sample_unit!r}")
    groups = {}
    for method, rs in _by_method(records).items():
        if sample_unit == "case_mean":
            values = [case_overall(r, metric) for r in rs]
        else:
            values = [getattr(m, metric) for r in rs for m in r.per_class]
            values = [math.nan if v is None else v for v in values]
        if any(math.isinf(v) for v in values):
            raise InfiniteValues(
                f"{method!r} has infinite {metric}: a class is missing from prediction or ground truth; "
                "inspect the empty-mask cases or compare with dsc/iou"
            )
        groups[method] = [v for v in values if not math.isnan(v)]
    return GroupedScores.from_mapping(groups, metric)


def compare_methods(records, metric: str, adjustment: str = "bonferroni", sample_unit: str = "case_mean"):
    scores = grouped_scores(records, metric, sample_unit)
    return {"kruskal": kruskal_wallis(scores), "dunn": dunn_posthoc(scores, adjustment), "sample_unit": sample_unit}


# ---------------------------------------------------------------------------
# rendering


def round4(value: float) -> str:
    """Four decimals, half-to-even on the shortest decimal form of the float."""
    if math.isnan(value):
        return "n/a"
    if math.isinf(value):
        return "inf"
    return str(Decimal(repr(float(value))).quantize(Decimal("0.0001"), rounding=ROUND_HALF_EVEN))


def _num(value):
    if value is None:
        return None
    if isinstance(value, float) and math.isinf(value):
        return "inf" if value > 0 else "-inf"
    if isinstance(value, float) and math.isnan(value):
        return None
    return value


def _unnum(value):
    if value is None:
        return math.nan
    if value == "inf":
        return math.inf
    if value == "-inf":
        return -math.inf
    return value


def _comparison_dict(comp) -> dict:
    k: KruskalResult = comp["kruskal"]
    d: DunnResult = comp["dunn"]
    return {
        "sample_unit": comp.get("sample_unit", "case_mean"),
        "kruskal": {"h": k.h, "df": k.df, "p": k.p, "tie_correction": k.tie_correction},
        "dunn": {"adjustment": d.adjustment, "pairs": [asdict(p) for p in d.pairs]},
    }


def _render_text(summaries, comparison) -> str:
    name_w = max([len("Method")] + [len(s.method) for s in summaries])
    col_w = 9
    metric_hdr = " ".join(f"{label:^{2 * col_w - 1}}" for label in ("DSC", "IoU", "HD95")).rstrip()
    sub_hdr = " ".join(f"{h:>{col_w - 1}}" for _ in METRICS for h in ("Overall", "Sub-cort"))
    lines = [f"{'Method':<{name_w}}  {metric_hdr}", f"{'':<{name_w}}  {sub_hdr}"]
    for s in summaries:
        cells = [
            s.dsc_overall,
            s.dsc_subcortical,
            s.iou_overall,
            s.iou_subcortical,
            s.hd95_overall,
            s.hd95_subcortical,
        ]
        row = " ".join(f"{round4(c):>{col_w - 1}}" for c in cells)
        flag = "  (inf HD95: empty-mask case)" if s.hd95_infinite else ""
        lines.append(f"{s.method:<{name_w}}  {row}{flag}")
    lines.append("")
    lines.append(f"Sub-cortical = {METADATA['subcortical_definition']}; cases per method: "
                 + ", ".join(f"{s.method}={s.n_cases}" for s in summaries))
    for metric, comp in (comparison or {}).items():
        k, d = comp["kruskal"], comp["dunn"]
        lines.append("")
        lines.append(
            f"[{metric}] Kruskal-Wallis H = {k.h:.4f}, df = {k.df}, p = {k.p:.4g} "
            f"(sample unit: {comp.get('sample_unit', 'case_mean')})"
        )
        lines.append(f"[{metric}] Dunn post-hoc, p adjusted by {d.adjustment}:")
        for p in d.pairs:
            star = " *" if p.p_adjusted < 0.05 else ""
            lines.append(f"    {p.method_a} vs {p.method_b}: z = {p.z:+.4f}, p_raw = {p.p_raw:.4g}, "
                         f"p_adj = {p.p_adjusted:.4g}{star}")
    return "\n".join(lines) + "\n"


def _render_csv(summaries) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for s in summaries:
        w.writerow([s.method, s.n_cases] + [repr(float(getattr(s, c))) for c in CSV_COLUMNS[2:]])
    return buf.getvalue()


def _render_json(summaries, comparison) -> str:
    doc = {
        "summaries": [{k: _num(v) for k, v in asdict(s).items()} for s in summaries],
        "metadata": dict(METADATA),
        "comparisons": {m: _comparison_dict(c) for m, c in (comparison or {}).items()},
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def render(summaries, comparison=None, fmt: str = "text") -> bytes:
    """Render summaries (and optional ``{metric: compare_methods(...)}``) as text, csv or json."""
    if fmt == "text":
        out = _render_text(summaries, comparison)
    elif fmt == "csv":
        out = _render_csv(summaries)
    elif fmt == "json":
        out = _render_json(summaries, comparison)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    return out.encode("utf-8")


def parse_summaries_json(data) -> list[MethodSummary]:
    doc = json.loads(data)
    names = {f.name for f in fields(MethodSummary)}
    return [MethodSummary(**{k: _unnum(v) if k not in ("method", "n_cases", "hd95_infinite") else v
                             for k, v in row.items() if k in names}) for row in doc["summaries"]]


def parse_comparison_json(data) -> dict:
    doc = json.loads(data)
    out = {}
    for metric, c in doc.get("comparisons", {}).items():
        k = c["kruskal"]
        out[metric] = {
            "kruskal": KruskalResult(k["h"], k["df"], k["p"], k["tie_correction"]),
            "dunn": DunnResult(tuple(DunnPair(**p) for p in c["dunn"]["pairs"]), c["dunn"]["adjustment"]),
            "sample_unit": c["sample_unit"],
        }
    return out


# ---------------------------------------------------------------------------
# record files


def records_to_json(records) -> str:
    doc = {
        "records": [
            {
                "case_id": r.case_id,
                "method": r.method,
                "per_class": [
                    {
                        "class_code": int(m.tissue),
                        "class_name": m.tissue.display_name,
                        "dsc": m.dsc,
                        "iou": m.iou,
                        "hd95": _num(m.hd95),
                    }
                    for m in r.per_class
                ],
            }
            for r in records
        ]
    }
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def records_to_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(RECORD_COLUMNS)
    for r in records:
        for m in r.per_class:
            cells = []
            for v in (m.dsc, m.iou, m.hd95):
                cells.append("" if v is None else ("inf" if math.isinf(v) else repr(float(v))))
            w.writerow([r.case_id, r.method, int(m.tissue), m.tissue.display_name, *cells])
    return buf.getvalue()


def _opt_float(v):
    if v is None or v == "":
        return None
    if v == "inf":
        return math.inf
    return float(v)


def records_from_json(text: str) -> list[MetricsRecord]:
    out = []
    for r in json.loads(text)["records"]:
        per_class = tuple(
            ClassMetrics(TissueClass(c["class_code"]), _opt_float(c["dsc"]), _opt_float(c["iou"]), _opt_float(c["hd95"]))
            for c in sorted(r["per_class"], key=lambda c: c["class_code"])
        )
        out.append(MetricsRecord(r["case_id"], r["method"], per_class))
    return out


def records_from_csv(text: str) -> list[MetricsRecord]:
    rows = defaultdict(dict)
    order = []
    for row in csv.DictReader(io.StringIO(text)):
        key = (row["case_id"], row["method"])
        if key not in rows:
            order.append(key)
        code = int(row["class_code"])
        rows[key][code] = ClassMetrics(
            TissueClass(code), _opt_float(row["dsc"]), _opt_float(row["iou"]), _opt_float(row["hd95"])
        )
    return [MetricsRecord(c, m, tuple(rows[(c, m)][k] for k in sorted(rows[(c, m)]))) for c, m in order]


def load_records(path) -> list[MetricsRecord]:
    with open(path, encoding="utf-8", newline="") as fh:
        text = fh.read()
    if str(path).lower().endswith(".csv"):
        return records_from_csv(text)
    return records_from_json(text)


def save_records(records, path) -> None:
    text = records_to_csv(records) if str(path).lower().endswith(".csv") else records_to_json(records)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
