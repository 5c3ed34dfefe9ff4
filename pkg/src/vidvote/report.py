"""Render an evaluation into a deterministic report bundle.

Four files, all byte-stable for fixed inputs (no timestamps, no locale,
fixed float formatting):

    results.json    machine-readable counts, rates, intervals, p-values
    summary.txt     percentage confusion matrices and the test tables
    roc.svg         ROC scatter with confidence-interval error bars
    pvalues_tpr.csv / pvalues_fpr.csv   pairwise Welch p-value matrices

Pairwise t-tests are only meaningful after the one-way ANOVA rejects
equality of the configurations, so the pairwise tables and CSVs are
emitted only when the ANOVA p-value falls below the report's gate; the
summary says so either way. Welch's unequal-variance, unpaired variant
is used throughout and the header states that, since a paired test over
the same folds would give different numbers.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .evaluation import EvalReport
from .stats import anova_one_way, confidence_interval, pairwise_t_tests

WELCH_NOTE = "Pairwise tests: two-sided Welch t-tests (unequal variance, unpaired by fold)."


def _pct(value):
    return f"{100.0 * value:5.1f} %"


def _matrix_block(configuration_id, cm):
    lines = [f"configuration: {configuration_id}"]
    lines.append(f"{'':14}{'classified pos':>16}{'classified neg':>16}")
    try:
        row_pos = (_pct(cm.tpr), _pct(1.0 - cm.tpr))
    except ValidationError:
        row_pos = ("   n/a", "   n/a")
    try:
        row_neg = (_pct(cm.fpr), _pct(1.0 - cm.fpr))
    except ValidationError:
        row_neg = ("   n/a", "   n/a")
    lines.append(f"{'actual pos':14}{row_pos[0]:>16}{row_pos[1]:>16}")
    lines.append(f"{'actual neg':14}{row_neg[0]:>16}{row_neg[1]:>16}")
    return lines


def _interval(samples, alpha):
    if len(samples) < 2:
        mean = float(samples[0])
        return mean, mean
    return confidence_interval(samples, alpha)


def _safe_rate(cm, name):
    """Rate value, or None where the denominator class is absent."""
    try:
        return getattr(cm, name)
    except ValidationError:
        return None


def _rate_summary(label, rates, alpha):
    if not rates:
        return f"mean {label} n/a"
    lo, hi = _interval(np.asarray(rates), alpha)
    return f"mean {label} {float(np.mean(rates)):.4f}  ci [{lo:.4f}, {hi:.4f}]"


def _svg_roc(report: EvalReport, alpha):
    size, margin = 480, 50
    span = size - 2 * margin
    palette = ("#1f6f8b", "#c1403d", "#3a7d44", "#8a4f9e", "#b87b1f", "#476d7c", "#a83279", "#556b2f")

    def sx(fpr):
        return margin + fpr * span

    def sy(tpr):
        return margin + (1.0 - tpr) * span

    def fmt(v):
        return f"{v:.3f}"

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{size}" height="{size}" '
        f'viewBox="0 0 {size} {size}">',
        f'<rect x="0" y="0" width="{size}" height="{size}" fill="white"/>',
        f'<rect x="{margin}" y="{margin}" width="{span}" height="{span}" fill="none" '
        'stroke="black" stroke-width="1"/>',
    ]
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        x, y = sx(tick), sy(tick)
        parts.append(
            f'<line x1="{fmt(x)}" y1="{size - margin}" x2="{fmt(x)}" y2="{size - margin + 6}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{fmt(x)}" y="{size - margin + 20}" font-family="monospace" '
            f'font-size="11" text-anchor="middle">{tick:.2f}</text>'
        )
        parts.append(
            f'<line x1="{margin - 6}" y1="{fmt(y)}" x2="{margin}" y2="{fmt(y)}" '
            'stroke="black" stroke-width="1"/>'
        )
        parts.append(
            f'<text x="{margin - 10}" y="{fmt(y + 4)}" font-family="monospace" '
            f'font-size="11" text-anchor="end">{tick:.2f}</text>'
        )
    parts.append(
        f'<text x="{size // 2}" y="{size - 10}" font-family="monospace" font-size="12" '
        'text-anchor="middle">false positive rate</text>'
    )
    parts.append(
        f'<text x="14" y="{size // 2}" font-family="monospace" font-size="12" '
        f'text-anchor="middle" transform="rotate(-90 14 {size // 2})">true positive rate</text>'
    )
    for i, result in enumerate(report.results):
        color = palette[i % len(palette)]
        tprs = [v for v in (_safe_rate(m, "tpr") for m in result.fold_matrices) if v is not None]
        fprs = [v for v in (_safe_rate(m, "fpr") for m in result.fold_matrices) if v is not None]
        if not tprs or not fprs:
            continue  # a rate axis with no defined folds has no plottable point
        tprs, fprs = np.asarray(tprs), np.asarray(fprs)
        tpr_lo, tpr_hi = _interval(tprs, alpha)
        fpr_lo, fpr_hi = _interval(fprs, alpha)
        cx, cy = sx(float(fprs.mean())), sy(float(tprs.mean()))
        clamp = lambda v: min(max(v, 0.0), 1.0)
        parts.append(
            f'<line x1="{fmt(sx(clamp(fpr_lo)))}" y1="{fmt(cy)}" '
            f'x2="{fmt(sx(clamp(fpr_hi)))}" y2="{fmt(cy)}" stroke="{color}" stroke-width="1"/>'
        )
        parts.append(
            f'<line x1="{fmt(cx)}" y1="{fmt(sy(clamp(tpr_lo)))}" '
            f'x2="{fmt(cx)}" y2="{fmt(sy(clamp(tpr_hi)))}" stroke="{color}" stroke-width="1"/>'
        )
        parts.append(f'<circle cx="{fmt(cx)}" cy="{fmt(cy)}" r="3.5" fill="{color}"/>')
        parts.append(
            f'<text x="{fmt(cx + 6)}" y="{fmt(cy - 6)}" font-family="monospace" '
            f'font-size="11" fill="{color}">{result.configuration_id}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _pvalue_csv(path, ids, matrix):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([""] + list(ids))
        for i, row_id in enumerate(ids):
            row = [row_id]
            for j in range(len(ids)):
                row.append("" if i == j else f"{matrix[i][j]:.6f}")
            writer.writerow(row)


def _pvalue_lines(title, ids, matrix):
    width = max(len(i) for i in ids) + 2
    lines = [title, " " * width + "".join(f"{i:>{width}}" for i in ids)]
    for i, row_id in enumerate(ids):
        cells = []
        for j in range(len(ids)):
            if i == j:
                cells.append(f"{'-':>{width}}")
            else:
                mark = "*" if matrix[i][j] < 0.05 else " "
                cells.append(f"{matrix[i][j]:>{width - 1}.4f}{mark}")
        lines.append(f"{row_id:>{width}}" + "".join(cells))
    return lines


def render_report(report: EvalReport, out_dir) -> dict:
    """Write the bundle; returns {name: path} for every file written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    alpha = report.alpha
    ids = [r.configuration_id for r in report.results]
    folds = len(report.results[0].fold_matrices)

    data = {
        "alpha": alpha,
        "anova_gate": report.anova_gate,
        "method_note": WELCH_NOTE,
        "configurations": [],
    }
    lines = [
        "Cross-validation report",
        f"configurations: {len(ids)}   folds: {folds}   alpha: {alpha}",
        WELCH_NOTE,
        "",
    ]
    all_rates_defined = True
    for result in report.results:
        cm = result.mean_matrix
        fold_rows = []
        tprs, fprs = [], []
        for m in result.fold_matrices:
            tpr, fpr = _safe_rate(m, "tpr"), _safe_rate(m, "fpr")
            if tpr is not None:
                tprs.append(tpr)
            if fpr is not None:
                fprs.append(fpr)
            fold_rows.append(
                {"tp": m.tp, "fn": m.fn, "fp": m.fp, "tn": m.tn, "tpr": tpr, "fpr": fpr}
            )
        if len(tprs) < len(fold_rows) or len(fprs) < len(fold_rows):
            all_rates_defined = False
        entry = {
            "id": result.configuration_id,
            "folds": fold_rows,
            "mean": {"tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn},
            "mean_tpr": float(np.mean(tprs)) if tprs else None,
            "mean_fpr": float(np.mean(fprs)) if fprs else None,
            "mean_accuracy": float(result.accuracies.mean()),
            "ci_tpr": list(_interval(np.asarray(tprs), alpha)) if tprs else None,
            "ci_fpr": list(_interval(np.asarray(fprs), alpha)) if fprs else None,
        }
        data["configurations"].append(entry)
        lines.extend(_matrix_block(result.configuration_id, cm))
        lines.append(
            _rate_summary("tpr", tprs, alpha) + "   " + _rate_summary("fpr", fprs, alpha)
        )
        lines.append("")

    paths = {
        "results": out / "results.json",
        "summary": out / "summary.txt",
        "roc": out / "roc.svg",
    }

    can_test = len(ids) >= 2 and folds >= 2 and all_rates_defined
    if can_test:
        tpr_groups = [list(r.tprs) for r in report.results]
        fpr_groups = [list(r.fprs) for r in report.results]
        for metric, groups in (("tpr", tpr_groups), ("fpr", fpr_groups)):
            f_stat, p = anova_one_way(groups)
            data[f"anova_{metric}"] = {"F": f_stat, "p": p}
            lines.append(f"ANOVA over {metric}: F = {f_stat:.4f}, p = {p:.6f}")
            if p < report.anova_gate:
                matrix = pairwise_t_tests(groups)
                data[f"pairwise_{metric}"] = [
                    [None if i == j else matrix[i][j] for j in range(len(ids))]
                    for i in range(len(ids))
                ]
                lines.append("")
                lines.extend(
                    _pvalue_lines(f"pairwise Welch p-values ({metric}), * marks p < 0.05:", ids, matrix)
                )
                csv_path = out / f"pvalues_{metric}.csv"
                _pvalue_csv(csv_path, ids, matrix)
                paths[f"pvalues_{metric}"] = csv_path
            else:
                lines.append(
                    f"  not significant at the {report.anova_gate} gate; pairwise tests omitted"
                )
            lines.append("")
    elif not all_rates_defined:
        lines.append("statistical tests skipped: some folds have undefined rates")
        lines.append("")
    else:
        lines.append("statistical tests skipped: need >= 2 configurations and >= 2 folds")
        lines.append("")

    with open(paths["results"], "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(paths["summary"], "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines))
    with open(paths["roc"], "w", encoding="utf-8") as fh:
        fh.write(_svg_roc(report, alpha))
    return paths
