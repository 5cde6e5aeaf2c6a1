"""Minimal log-log line plots as standalone SVG documents."""

import math

import numpy as np

_COLOURS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")
WIDTH = 640
HEIGHT = 420
MARGIN = 56


def _ticks(lo, hi):
    a, b = math.floor(lo), math.ceil(hi)
    step = max(1, int(math.ceil((b - a) / 8)))
    return list(range(a, b + 1, step))


def _escape(text):
    return (str(text).replace("&", "&amp;").replace("<", "&lt;")
            .replace(">", "&gt;"))


def loglog_svg(series, title="", xlabel="log10 x", ylabel="log10 y", path=None):
    """Plot (label, x, y) series on log10 axes; non-positive points dropped.

    Axis annotations are log10 values. Returns the SVG text and writes it
    to ``path`` when given.
    """
    cleaned = []
    for label, x, y in series:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        ok = np.isfinite(x) & np.isfinite(y) & (x > 0) & (y > 0)
        if np.count_nonzero(ok) >= 2:
            cleaned.append((label, np.log10(x[ok]), np.log10(y[ok])))
    if not cleaned:
        lx0, lx1, ly0, ly1 = 0.0, 1.0, 0.0, 1.0
    else:
        lx0 = min(float(c[1].min()) for c in cleaned)
        lx1 = max(float(c[1].max()) for c in cleaned)
        ly0 = min(float(c[2].min()) for c in cleaned)
        ly1 = max(float(c[2].max()) for c in cleaned)
    if lx1 - lx0 < 1e-12:
        lx0, lx1 = lx0 - 0.5, lx1 + 0.5
    if ly1 - ly0 < 1e-12:
        ly0, ly1 = ly0 - 0.5, ly1 + 0.5
    pw, ph = WIDTH - 2 * MARGIN, HEIGHT - 2 * MARGIN

    def px(v):
        return MARGIN + (v - lx0) / (lx1 - lx0) * pw

    def py(v):
        return HEIGHT - MARGIN - (v - ly0) / (ly1 - ly0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
           f'viewBox="0 0 {WIDTH} {HEIGHT}">',
           f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
           f'<rect x="{MARGIN}" y="{MARGIN}" width="{pw}" height="{ph}" '
           'fill="none" stroke="black"/>']
    for v in _ticks(lx0, lx1):
        if lx0 <= v <= lx1:
            x = px(v)
            out.append(f'<line x1="{x:.2f}" y1="{HEIGHT - MARGIN}" x2="{x:.2f}" '
                       f'y2="{HEIGHT - MARGIN + 5}" stroke="black"/>')
            out.append(f'<text x="{x:.2f}" y="{HEIGHT - MARGIN + 18}" font-size="11" '
                       f'text-anchor="middle">{v}</text>')
    for v in _ticks(ly0, ly1):
        if ly0 <= v <= ly1:
            y = py(v)
            out.append(f'<line x1="{MARGIN - 5}" y1="{y:.2f}" x2="{MARGIN}" '
                       f'y2="{y:.2f}" stroke="black"/>')
            out.append(f'<text x="{MARGIN - 8}" y="{y + 4:.2f}" font-size="11" '
                       f'text-anchor="end">{v}</text>')
    for i, (label, lx, ly) in enumerate(cleaned):
        colour = _COLOURS[i % len(_COLOURS)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(lx, ly))
        out.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5" '
                   f'points="{pts}"/>')
        out.append(f'<text x="{MARGIN + 8}" y="{MARGIN + 16 + 14 * i}" font-size="11" '
                   f'fill="{colour}">{_escape(label)}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="{MARGIN / 2:.0f}" font-size="13" '
               f'text-anchor="middle">{_escape(title)}</text>')
    out.append(f'<text x="{WIDTH / 2:.0f}" y="{HEIGHT - 12}" font-size="12" '
               f'text-anchor="middle">{_escape(xlabel)}</text>')
    out.append(f'<text x="14" y="{HEIGHT / 2:.0f}" font-size="12" text-anchor="middle" '
               f'transform="rotate(-90 14 {HEIGHT / 2:.0f})">{_escape(ylabel)}</text>')
    out.append("</svg>")
    text = "\n".join(out) + "\n"
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
