"""Evaluation tables: reflectance error summaries, grasp-outcome summaries,
and pairwise significance matrices.

Conventions carried through every renderer: standard deviations divide by n
(population estimator, switchable via ddof), empty cells serialize as "" in
CSV and "-" in aligned text, and significance stars mark p < 0.05 (*) and
p < 0.01 (**).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import Manifest, PredictionRecord, Split
from .errors import DataError
from .grasp import GraspOutcome, GraspTrialResult

SPLIT_LABELS = {Split.TRAIN: "known", Split.TEST: "unseen"}


def _mean_std(values: "list[float]", ddof: int = 0) -> tuple[float, float]:
    arr = np.asarray(values, dtype=float)
    return float(np.mean(arr)), float(np.std(arr, ddof=ddof))


@dataclass
class ErrorSummary:
    """Absolute-error statistics for one method on one split."""

    method_id: str
    split: str  # "known" | "unseen"
    mean_abs_error: float
    std_abs_error: float
    n: int
    per_category: dict[str, tuple[float, float, int]] = field(default_factory=dict)


def reflectance_error_table(
    predictions: list[PredictionRecord],
    manifest: Manifest,
    ddof: int = 0,
) -> list[ErrorSummary]:
    """Per-trial absolute errors aggregated per method and split.

    Every predicted object must carry a calibrated alpha; the per-category
    breakdown uses the same estimator so the weighted category means
    recombine exactly into the overall mean.
    """
    buckets: dict[tuple[str, Split], list[tuple[str, float]]] = {}
    for rec in predictions:
        obj = manifest.object(rec.object_id)
        if obj.true_alpha is None:
            raise DataError(f"object {rec.object_id!r} has no ground-truth alpha")
        error = abs(rec.predicted_alpha - obj.true_alpha)
        buckets.setdefault((rec.method_id, obj.split), []).append(
            (obj.category.value, error)
        )
    summaries = []
    for (method_id, split), pairs in sorted(
        buckets.items(), key=lambda kv: (kv[0][0], kv[0][1].value)
    ):
        # canonical order makes aggregation bit-exact under input permutation
        pairs = sorted(pairs)
        errors = [e for _, e in pairs]
        mean, std = _mean_std(errors, ddof)
        per_category: dict[str, tuple[float, float, int]] = {}
        for category in sorted({c for c, _ in pairs}):
            cat_errors = [e for c, e in pairs if c == category]
            cat_mean, cat_std = _mean_std(cat_errors, ddof)
            per_category[category] = (cat_mean, cat_std, len(cat_errors))
        summaries.append(
            ErrorSummary(
                method_id=method_id,
                split=SPLIT_LABELS[split],
                mean_abs_error=mean,
                std_abs_error=std,
                n=len(errors),
                per_category=per_category,
            )
        )
    return summaries


@dataclass
class GraspSummaryRow:
    """One method's row: distance stats over underreach trials only, force
    stats over overreach trials only; a cell with no trials stays None."""

    method_id: str
    distance_mean_mm: float | None
    distance_std_mm: float | None
    distance_n: int
    force_mean_n: float | None
    force_std_n: float | None
    force_n: int


def grasp_summary(results: list[GraspTrialResult], ddof: int = 0) -> list[GraspSummaryRow]:
    if not results:
        raise DataError("grasp_summary needs at least one result")
    methods = sorted({r.method_id for r in results})
    rows = []
    for method in methods:
        distances = [
            r.distance_error_mm
            for r in results
            if r.method_id == method and r.outcome is GraspOutcome.UNDERREACH
        ]
        forces = [
            r.force_n
            for r in results
            if r.method_id == method and r.outcome is GraspOutcome.OVERREACH
        ]
        d_mean, d_std = _mean_std(distances, ddof) if distances else (None, None)
        f_mean, f_std = _mean_std(forces, ddof) if forces else (None, None)
        rows.append(
            GraspSummaryRow(
                method_id=method,
                distance_mean_mm=d_mean,
                distance_std_mm=d_std,
                distance_n=len(distances),
                force_mean_n=f_mean,
                force_std_n=f_std,
                force_n=len(forces),
            )
        )
    return rows


def distance_samples(results: list[GraspTrialResult]) -> dict[str, list[float]]:
    """Underreach distance errors per method (significance-test input)."""
    samples: dict[str, list[float]] = {}
    for r in results:
        if r.outcome is GraspOutcome.UNDERREACH:
            samples.setdefault(r.method_id, []).append(float(r.distance_error_mm))
    return samples


def force_samples(results: list[GraspTrialResult]) -> dict[str, list[float]]:
    """Overreach contact forces per method (significance-test input)."""
    samples: dict[str, list[float]] = {}
    for r in results:
        if r.outcome is GraspOutcome.OVERREACH:
            samples.setdefault(r.method_id, []).append(float(r.force_n))
    return samples


# ---------------------------------------------------------------------------
# significance


@dataclass
class SignificanceMatrix:
    """Lower-triangular pairwise p-values; None marks insufficient samples."""

    method_ids: list[str]
    p_values: dict[tuple[str, str], float | None]
    test: str
    correction: str
    notes: list[str] = field(default_factory=list)

    def p(self, a: str, b: str) -> float | None:
        if (a, b) in self.p_values:
            return self.p_values[(a, b)]
        return self.p_values[(b, a)]


def _pairwise_p(x: list[float], y: list[float], test: str) -> float:
    if test == "mann-whitney":
        pooled = set(x) | set(y)
        if len(pooled) == 1:
            return 1.0  # rank test convention: identical samples are indistinguishable
        return float(stats.mannwhitneyu(x, y, alternative="two-sided").pvalue)
    if test == "welch":
        if len(set(x)) == 1 and len(set(y)) == 1:
            return 1.0 if set(x) == set(y) else 0.0
        return float(stats.ttest_ind(x, y, equal_var=False).pvalue)
    raise DataError(f"unknown test {test!r} (use 'mann-whitney' or 'welch')")


def _apply_correction(
    raw: dict[tuple[str, str], float | None], correction: str
) -> dict[tuple[str, str], float | None]:
    if correction == "none":
        return dict(raw)
    keys = [k for k, v in raw.items() if v is not None]
    values = [raw[k] for k in keys]
    m = len(values)
    adjusted = dict(raw)
    if correction == "bonferroni":
        for k, v in zip(keys, values):
            adjusted[k] = min(1.0, v * m)
        return adjusted
    if correction == "holm":
        order = sorted(range(m), key=lambda i: values[i])
        running = 0.0
        for rank, idx in enumerate(order):
            p = min(1.0, values[idx] * (m - rank))
            running = max(running, p)
            adjusted[keys[idx]] = running
        return adjusted
    raise DataError(f"unknown correction {correction!r} (use none, bonferroni or holm)")


def significance_matrix(
    samples: dict[str, list[float]],
    test: str = "mann-whitney",
    correction: str = "none",
) -> SignificanceMatrix:
    """All-pairs two-sample p-values over per-method samples.

    Pairs where either side has fewer than two samples get a None cell and a
    note rather than failing the whole matrix.
    """
    methods = sorted(samples)
    if len(methods) < 2:
        raise DataError("significance needs at least two methods")
    raw: dict[tuple[str, str], float | None] = {}
    notes: list[str] = []
    for a, b in itertools.combinations(methods, 2):
        xa, xb = samples[a], samples[b]
        if len(xa) < 2 or len(xb) < 2:
            raw[(a, b)] = None
            notes.append(
                f"{a} vs {b}: insufficient samples ({len(xa)} vs {len(xb)})"
            )
            continue
        raw[(a, b)] = _pairwise_p(list(xa), list(xb), test)
    adjusted = _apply_correction(raw, correction)
    for key, value in adjusted.items():
        if value is not None and not 0.0 <= value <= 1.0:
            raise DataError(f"p-value out of range for {key}: {value}")
    return SignificanceMatrix(
        method_ids=methods,
        p_values=adjusted,
        test=test,
        correction=correction,
        notes=notes,
    )


def stars(p: float | None) -> str:
    if p is None:
        return "-"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return f"{p:.3f}"


# ---------------------------------------------------------------------------
# rendering


def _cell(mean: float | None, std: float | None, markers: str = "") -> str:
    if mean is None:
        return "-"
    body = f"{mean:.3f} +/- {std:.3f}"
    if markers == "best":
        return f"**{body}**"
    if markers == "second":
        return f"_{body}_"
    return body


def _column_markers(values: list[float | None]) -> list[str]:
    """Mark best (lowest) and second-best values in one column."""
    present = sorted(
        (v, i) for i, v in enumerate(values) if v is not None
    )
    marks = [""] * len(values)
    if present:
        marks[present[0][1]] = "best"
    if len(present) > 1:
        marks[present[1][1]] = "second"
    return marks


def _aligned(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = [
        "  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
        for row in rows
    ]
    return "\n".join(lines) + "\n"


def render_error_table(
    summaries: list[ErrorSummary],
    pretraining: dict[str, str] | None = None,
    markers: bool = False,
) -> str:
    """Aligned text table: method, pre-training tag, known and unseen columns."""
    methods = sorted({s.method_id for s in summaries})
    by_key = {(s.method_id, s.split): s for s in summaries}
    known_means = [
        by_key[(m, "known")].mean_abs_error if (m, "known") in by_key else None
        for m in methods
    ]
    unseen_means = [
        by_key[(m, "unseen")].mean_abs_error if (m, "unseen") in by_key else None
        for m in methods
    ]
    known_marks = _column_markers(known_means) if markers else [""] * len(methods)
    unseen_marks = _column_markers(unseen_means) if markers else [""] * len(methods)
    rows = [["Method", "Pre-training", "Known objects", "Unseen objects"]]
    for i, method in enumerate(methods):
        known = by_key.get((method, "known"))
        unseen = by_key.get((method, "unseen"))
        rows.append(
            [
                method,
                (pretraining or {}).get(method, "-"),
                _cell(
                    known.mean_abs_error if known else None,
                    known.std_abs_error if known else None,
                    known_marks[i],
                ),
                _cell(
                    unseen.mean_abs_error if unseen else None,
                    unseen.std_abs_error if unseen else None,
                    unseen_marks[i],
                ),
            ]
        )
    return _aligned(rows)


def error_table_csv(summaries: list[ErrorSummary]) -> str:
    lines = ["method_id,split,mean_abs_error,std_abs_error,n,category,cat_mean,cat_std,cat_n"]
    for s in summaries:
        lines.append(
            f"{s.method_id},{s.split},{repr(s.mean_abs_error)},{repr(s.std_abs_error)},{s.n},,,,"
        )
        for category, (mean, std, n) in sorted(s.per_category.items()):
            lines.append(
                f"{s.method_id},{s.split},,,,{category},{repr(mean)},{repr(std)},{n}"
            )
    return "\n".join(lines) + "\n"


def render_grasp_summary(rows: list[GraspSummaryRow], markers: bool = False) -> str:
    """Aligned text: distance column over underreach, force over overreach."""
    d_marks = (
        _column_markers([r.distance_mean_mm for r in rows])
        if markers
        else [""] * len(rows)
    )
    f_marks = (
        _column_markers([r.force_mean_n for r in rows]) if markers else [""] * len(rows)
    )
    out = [["Method", "Distance error [mm]", "Force [N]"]]
    for i, row in enumerate(rows):
        out.append(
            [
                row.method_id,
                _cell(row.distance_mean_mm, row.distance_std_mm, d_marks[i]),
                _cell(row.force_mean_n, row.force_std_n, f_marks[i]),
            ]
        )
    return _aligned(out)


def grasp_summary_csv(rows: list[GraspSummaryRow]) -> str:
    lines = [
        "method_id,distance_mean_mm,distance_std_mm,distance_n,force_mean_n,force_std_n,force_n"
    ]
    for r in rows:
        d_mean = repr(r.distance_mean_mm) if r.distance_mean_mm is not None else ""
        d_std = repr(r.distance_std_mm) if r.distance_std_mm is not None else ""
        f_mean = repr(r.force_mean_n) if r.force_mean_n is not None else ""
        f_std = repr(r.force_std_n) if r.force_std_n is not None else ""
        lines.append(
            f"{r.method_id},{d_mean},{d_std},{r.distance_n},{f_mean},{f_std},{r.force_n}"
        )
    return "\n".join(lines) + "\n"


def render_significance(matrix: SignificanceMatrix) -> str:
    """Lower-triangular aligned table with star thresholds 0.05 and 0.01."""
    methods = matrix.method_ids
    rows = [[""] + methods[:-1]]
    for i, row_method in enumerate(methods[1:], start=1):
        cells = [row_method]
        for col_method in methods[:i]:
            cells.append(stars(matrix.p(row_method, col_method)))
        cells += [""] * (len(methods) - 1 - i)
        rows.append(cells)
    table = _aligned(rows)
    footer = f"test: {matrix.test}; correction: {matrix.correction}; *) p < 0.05, **) p < 0.01\n"
    return table + footer


def significance_csv(matrix: SignificanceMatrix) -> str:
    lines = ["method_a,method_b,p_value"]
    for a, b in itertools.combinations(matrix.method_ids, 2):
        p = matrix.p(a, b)
        lines.append(f"{a},{b},{repr(p) if p is not None else ''}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# fusion comparison table (backbone / pre-training / input modal / combined by / unseen)


@dataclass
class FusionRow:
    backbone: str
    pretraining: str
    input_modal: str
    combined_by: str
    unseen_mean: float
    unseen_std: float


FUSION_COLUMNS = [
    "Backbone",
    "Pre-training dataset",
    "Input modal",
    "Combined by",
    "Unseen objects",
]


def render_fusion_table(rows: list[FusionRow], markers: bool = False) -> str:
    marks = (
        _column_markers([r.unseen_mean for r in rows]) if markers else [""] * len(rows)
    )
    out = [list(FUSION_COLUMNS)]
    for i, r in enumerate(rows):
        out.append(
            [
                r.backbone,
                r.pretraining,
                r.input_modal,
                r.combined_by,
                _cell(r.unseen_mean, r.unseen_std, marks[i]),
            ]
        )
    return _aligned(out)


def fusion_table_csv(rows: list[FusionRow]) -> str:
    lines = ["backbone,pretraining,input_modal,combined_by,unseen_mean,unseen_std"]
    for r in rows:
        lines.append(
            f"{r.backbone},{r.pretraining},{r.input_modal},{r.combined_by},"
            f"{repr(r.unseen_mean)},{repr(r.unseen_std)}"
        )
    return "\n".join(lines) + "\n"


def recombine_overall_mean(summary: ErrorSummary) -> float:
    """Category means recombined by their counts (must equal the overall mean)."""
    total = sum(n for _, _, n in summary.per_category.values())
    if total == 0:
        raise DataError("summary has no per-category data")
    return (
        sum(mean * n for mean, _, n in summary.per_category.values()) / total
    )


def check_partition(results: list[GraspTrialResult]) -> bool:
    """Every non-clean trial contributes to exactly one summary cell."""
    for r in results:
        has_distance = r.distance_error_mm is not None
        has_force = r.force_n is not None
        if has_distance and has_force:
            return False
        if r.outcome is GraspOutcome.CLEAN_GRASP and (has_distance or has_force):
            return False
        if r.outcome is not GraspOutcome.CLEAN_GRASP and not (has_distance or has_force):
            return False
    return True
