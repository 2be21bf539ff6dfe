"""Self-contained SVG line charts for the training log.

No rendering dependency: charts are assembled as plain SVG text with fixed
number formatting, so identical inputs give byte-identical files. Missing
values (the epoch-0 NMI-vs-previous entry) become gaps, never zeros.
"""

from pathlib import Path

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"]

_W, _H = 720, 440
_ML, _MR, _MT, _MB = 64, 24, 42, 48


def _ticks(lo, hi, n=5):
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def _fmt(v):
    return f"{v:.4g}"


def line_chart_svg(series, title, y_label=""):
    """Build one chart; ``series`` is a list of (name, [(x, y-or-None), ...])."""
    xs = [x for _, pts in series for x, _ in pts]
    ys = [y for _, pts in series for _, y in pts if y is not None]
    x_lo, x_hi = (min(xs), max(xs)) if xs else (0.0, 1.0)
    y_lo, y_hi = (min(ys), max(ys)) if ys else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.05 * (y_hi - y_lo)
    y_lo, y_hi = y_lo - pad, y_hi + pad

    px = lambda x: _ML + (x - x_lo) / (x_hi - x_lo) * (_W - _ML - _MR)
    py = lambda y: _H - _MB - (y - y_lo) / (y_hi - y_lo) * (_H - _MT - _MB)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}" font-family="sans-serif" font-size="12">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
        f'<text x="{_W / 2:.1f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
    ]
    for t in _ticks(x_lo, x_hi):
        x = px(t)
        parts.append(f'<line x1="{x:.2f}" y1="{_H - _MB}" x2="{x:.2f}" y2="{_H - _MB + 5}" stroke="#444"/>')
        parts.append(f'<text x="{x:.2f}" y="{_H - _MB + 18}" text-anchor="middle">{_fmt(t)}</text>')
    for t in _ticks(y_lo, y_hi):
        y = py(t)
        parts.append(f'<line x1="{_ML - 5}" y1="{y:.2f}" x2="{_ML}" y2="{y:.2f}" stroke="#444"/>')
        parts.append(f'<text x="{_ML - 8}" y="{y + 4:.2f}" text-anchor="end">{_fmt(t)}</text>')
    parts.append(
        f'<line x1="{_ML}" y1="{_MT}" x2="{_ML}" y2="{_H - _MB}" stroke="#444"/>'
        f'<line x1="{_ML}" y1="{_H - _MB}" x2="{_W - _MR}" y2="{_H - _MB}" stroke="#444"/>'
    )
    parts.append(f'<text x="{_W / 2:.1f}" y="{_H - 12}" text-anchor="middle">epoch</text>')
    if y_label:
        parts.append(
            f'<text x="16" y="{_H / 2:.1f}" text-anchor="middle" '
            f'transform="rotate(-90 16 {_H / 2:.1f})">{y_label}</text>'
        )

    for s, (name, pts) in enumerate(series):
        color = PALETTE[s % len(PALETTE)]
        segment = []
        segments = []
        for x, y in pts:
            if y is None:
                if segment:
                    segments.append(segment)
                segment = []
            else:
                segment.append((px(x), py(y)))
        if segment:
            segments.append(segment)
        for seg in segments:
            if len(seg) > 1:
                coords = " ".join(f"{x:.2f},{y:.2f}" for x, y in seg)
                parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')
            for x, y in seg:
                parts.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="2" fill="{color}"/>')
        lx = _ML + 10 + s * 150
        parts.append(f'<line x1="{lx}" y1="{_MT - 8}" x2="{lx + 18}" y2="{_MT - 8}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text x="{lx + 22}" y="{_MT - 4}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_metric_charts(rows, out_dir):
    """One SVG per logged metric plus a combined chart; returns written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    per_metric = {
        "loss": [(m.epoch, m.loss) for m in rows],
        "nmi_prev": [(m.epoch, m.nmi_prev) for m in rows],
        "nmi_labels": [(m.epoch, m.nmi_labels) for m in rows],
        "purity": [(m.epoch, m.purity) for m in rows],
    }
    written = []
    for name, pts in per_metric.items():
        path = out / f"{name}.svg"
        path.write_text(line_chart_svg([(name, pts)], title=name, y_label=name), encoding="utf-8")
        written.append(path)
    combined = [(name, pts) for name, pts in per_metric.items()]
    path = out / "combined.svg"
    path.write_text(line_chart_svg(combined, title="training metrics"), encoding="utf-8")
    written.append(path)
    return written
