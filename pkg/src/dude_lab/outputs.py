"""CSV tables and standalone SVG line charts for sweep results."""

from __future__ import annotations

import csv
import io
import math
import os
import tempfile
import warnings
from pathlib import Path

from .experiments import SCENARIO_LABELS, SWEEP_UNITS, SweepResult
from .model import AssociationCase

CSV_HEADER = (
    "sweep_key,sweep_value,scenario,pr_case1,pr_case2,pr_case3,pr_case4,"
    "se_case1,se_case2,se_case4,se_avg,ee_case1,ee_case2,ee_case4,ee_avg,"
    "mc_se_avg,mc_se_stderr,mc_pr_case1,mc_pr_case2,mc_pr_case4,flags"
).split(",")

C1, C2, C3, C4 = AssociationCase


class SkipWithWarning(UserWarning):
    """Chart skipped because the sweep has fewer than two grid points."""


def atomic_write(path, data: str) -> Path:
    """Write via a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise
    return path


def _num(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else f"{v:.17e}"


def csv_rows(result: SweepResult) -> list:
    rows = []
    for r in result.rows:
        m, e = r.metrics, r.mc
        row = [r.key, _num(r.value), r.scenario]
        if m is None:
            row += [""] * 12
        else:
            p = m.probabilities
            row += [_num(x) for x in p.as_tuple()]
            row += [_num(m.se[c]) for c in (C1, C2, C4)] + [_num(m.se_avg)]
            row += [_num(m.ee[c]) for c in (C1, C2, C4)] + [_num(m.ee_avg)]
        if e is None:
            row += [""] * 5
        else:
            ep = e.probabilities
            row += [_num(e.se_avg[0]), _num(e.se_avg[1])] + [_num(ep[c]) for c in (C1, C2, C4)]
        row.append(";".join(r.flags))
        rows.append(row)
    return rows


def csv_text(result: SweepResult) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    w.writerows(csv_rows(result))
    return buf.getvalue()


def emit_csv(result: SweepResult, path) -> Path:
    return atomic_write(path, csv_text(result))


# svg --------------------------------------------------------------------------------

WIDTH, HEIGHT = 720, 460
MARGIN = dict(left=80, right=230, top=40, bottom=60)
CASE_COLOURS = {"case1": "#1f77b4", "case2": "#d62728", "case3": "#7f7f7f", "case4": "#2ca02c", "avg": "#000000"}
SCENARIO_DASH = {"decoupled_pa": "", "decoupled": "6,4", "coupled": "2,3"}

FAMILIES = {
    "probabilities": ("Association probability", [("case1", C1), ("case2", C2), ("case4", C4)]),
    "se": ("Spectral efficiency [bit/s/Hz]", [("case1", C1), ("case2", C2), ("case4", C4), ("avg", None)]),
    "ee": ("Energy efficiency [bit/J]", [("case1", C1), ("case2", C2), ("case4", C4), ("avg", None)]),
}


def _value(row, family, case):
    m = row.metrics
    if family == "probabilities":
        return m.probabilities[case]
    table, avg = (m.se, m.se_avg) if family == "se" else (m.ee, m.ee_avg)
    return avg if case is None else table[case]


def _ticks(lo, hi, n=5):
    if hi == lo:
        return [lo]
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 2.5, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step - 1e-9) * step
    out, t = [], start
    while t <= hi + 1e-9 * step:
        out.append(round(t, 12))
        t += step
    return out


def _fmt(v):
    return f"{v:.6g}"


def svg_text(result: SweepResult, family: str) -> str | None:
    """SVG document for one metric family, or None when no series has 2 points."""
    ylabel, curves = FAMILIES[family]
    series = []
    for scen in result.spec.scenarios:
        for name, case in curves:
            pts = []
            for r in result.select(scen):
                if r.failed:
                    continue
                y = _value(r, family, case)
                if math.isfinite(y):
                    pts.append((r.value, y))
            if len(pts) >= 2:
                series.append((scen, name, pts))
    if not series:
        return None
    xs = [x for *_, pts in series for x, _ in pts]
    ys = [y for *_, pts in series for _, y in pts]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(0.0, min(ys)), max(ys)
    if y1 <= y0:
        y1 = y0 + 1.0
    y1 += 0.05 * (y1 - y0)
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def px(x):
        return MARGIN["left"] + (x - x0) / (x1 - x0) * pw

    def py(y):
        return MARGIN["top"] + (1.0 - (y - y0) / (y1 - y0)) * ph

    key = result.spec.key
    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<rect x="{MARGIN["left"]}" y="{MARGIN["top"]}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>',
    ]
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{px(t):.2f}" y1="{MARGIN["top"] + ph}" x2="{px(t):.2f}" y2="{MARGIN["top"] + ph + 5}" stroke="#444"/>')
        out.append(f'<text x="{px(t):.2f}" y="{MARGIN["top"] + ph + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{MARGIN["left"] - 5}" y1="{py(t):.2f}" x2="{MARGIN["left"]}" y2="{py(t):.2f}" stroke="#444"/>')
        out.append(f'<text x="{MARGIN["left"] - 8}" y="{py(t) + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    out.append(
        f'<text x="{MARGIN["left"] + pw / 2:.1f}" y="{HEIGHT - 15}" text-anchor="middle">'
        f"{key}: {SWEEP_UNITS[key]}</text>"
    )
    out.append(
        f'<text transform="translate(20,{MARGIN["top"] + ph / 2:.1f}) rotate(-90)" text-anchor="middle">{ylabel}</text>'
    )
    lx, ly = WIDTH - MARGIN["right"] + 15, MARGIN["top"] + 10
    for i, (scen, name, pts) in enumerate(series):
        colour = CASE_COLOURS[name]
        dash = SCENARIO_DASH[scen]
        dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
        path = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        out.append(
            f'<polyline class="series" data-scenario="{scen}" data-curve="{name}" points="{path}" '
            f'fill="none" stroke="{colour}" stroke-width="1.8"{dash_attr}/>'
        )
        yy = ly + 16 * i
        out.append(f'<line x1="{lx}" y1="{yy}" x2="{lx + 24}" y2="{yy}" stroke="{colour}" stroke-width="1.8"{dash_attr}/>')
        label = "average" if name == "avg" else name.replace("case", "Case ")
        out.append(f'<text x="{lx + 30}" y="{yy + 4}">{label}, {SCENARIO_LABELS[scen]}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def emit_svg(result: SweepResult, path) -> list:
    """Write ``<stem>_{probabilities,se,ee}.svg`` next to ``path``; returns the paths.

    Fewer than two grid points issues a SkipWithWarning and writes nothing.
    """
    path = Path(path)
    if len(result.spec.grid) < 2:
        warnings.warn("fewer than 2 grid points; no chart written", SkipWithWarning, stacklevel=2)
        return []
    stem = path.with_suffix("") if path.suffix == ".svg" else path
    written = []
    for family in FAMILIES:
        text = svg_text(result, family)
        if text is None:
            continue
        written.append(atomic_write(f"{stem}_{family}.svg", text))
    return written
