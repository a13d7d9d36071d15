"""
Minimal structural SVG emission for report plots.

Every plotted datum is an element carrying ``data-*`` attributes with the
underlying values, so tests (and downstream tools) can assert on point
counts and coordinates instead of rasterized output.
"""

import math
from xml.sax.saxutils import quoteattr

__all__ = ["sigma_curves_svg", "bias_scatter_svg", "forest_svg"]

_W, _H = 640, 420
_PAD = 50


def _fmt(v: float) -> str:
    return format(v, ".9g")


class _Axes:
    def __init__(self, x_range, y_range):
        self.x0, self.x1 = x_range
        self.y0, self.y1 = y_range
        if self.x1 == self.x0:
            self.x1 = self.x0 + 1.0
        if self.y1 == self.y0:
            self.y1 = self.y0 + 1.0

    def px(self, x):
        return _PAD + (x - self.x0) / (self.x1 - self.x0) * (_W - 2 * _PAD)

    def py(self, y):
        return _H - _PAD - (y - self.y0) / (self.y1 - self.y0) * (_H - 2 * _PAD)


def _document(title: str, body: list) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f"<title>{title}</title>",
        f'<rect x="0" y="0" width="{_W}" height="{_H}" fill="white"/>',
    ]
    return "\n".join(head + body + ["</svg>"]) + "\n"


def sigma_curves_svg(models, c_range=(7.0, 10.0), samples=60) -> str:
    """Fitted variability curves, one path per group."""
    from .variability import evaluate_sigma

    c0, c1 = c_range
    cs = [c0 + (c1 - c0) * i / (samples - 1) for i in range(samples)]
    ys = [evaluate_sigma(m, c) for m in models for c in cs]
    ax = _Axes((c0, c1), (0.0, max(ys) * 1.1 if ys else 1.0))
    body = []
    for m in models:
        label = m.group_key[0].value + (f"/{m.group_key[1]}" if m.group_key[1] else "")
        pts = " ".join(
            f"{ax.px(c):.2f},{ax.py(evaluate_sigma(m, c)):.2f}" for c in cs
        )
        body.append(
            f'<polyline fill="none" stroke="steelblue" points="{pts}" '
            f"data-group={quoteattr(label)} "
            f'data-alpha="{_fmt(m.alpha)}" data-beta="{_fmt(m.beta)}" '
            f'data-gamma="{_fmt(m.gamma)}"/>'
        )
    return _document("intrinsic judging error variability", body)


def bias_scatter_svg(estimates, ecdf_points, alpha=0.01) -> str:
    """Scatter of bias coefficient vs SN mark count with the wECDF overlay.

    Statistically significant estimates (p < alpha) are class "sig".
    """
    if not estimates:
        raise ValueError("no estimates to plot")
    xs = [float(e.n_sn_marks) for e in estimates]
    ys = [e.beta_sn for e in estimates]
    ax = _Axes((0.0, max(xs) * 1.05), (min(min(ys), 0.0) - 0.1, max(ys) + 0.1))
    body = [
        f'<line x1="{_PAD}" y1="{ax.py(0.0):.2f}" x2="{_W - _PAD}" '
        f'y2="{ax.py(0.0):.2f}" stroke="gray" stroke-dasharray="4 3"/>'
    ]
    for e in estimates:
        sig = e.p_sn < alpha
        body.append(
            f'<circle cx="{ax.px(e.n_sn_marks):.2f}" cy="{ax.py(e.beta_sn):.2f}" '
            f'r="4" fill="{"#14306e" if sig else "#9ecbff"}" '
            f'class="{"sig" if sig else "nonsig"}" '
            f"data-key={quoteattr('/'.join(str(k) for k in e.key))} "
            f'data-beta-sn="{_fmt(e.beta_sn)}" data-n-sn="{e.n_sn_marks}" '
            f'data-p="{_fmt(e.p_sn)}"/>'
        )
    if ecdf_points:
        # wECDF drawn against the right-hand axis (F in [0, 1])
        fy = _Axes((ax.x0, ax.x1), (0.0, 1.0))
        bx = _Axes((min(p[0] for p in ecdf_points) - 0.1,
                    max(p[0] for p in ecdf_points) + 0.1), (0.0, 1.0))
        path = []
        prev_f = 0.0
        for x, f in ecdf_points:
            px, pf0, pf1 = bx.px(x), fy.py(prev_f), fy.py(f)
            cmd = "M" if not path else "L"
            path.append(f"{cmd}{px:.2f},{pf0:.2f} L{px:.2f},{pf1:.2f}")
            prev_f = f
        body.append(
            f'<path d="{" ".join(path)}" fill="none" stroke="darkorange" '
            f'class="wecdf" data-n="{len(ecdf_points)}"/>'
        )
    return _document("national bias estimates", body)


def forest_svg(estimates) -> str:
    """95% confidence intervals, one horizontal line per group."""
    if not estimates:
        raise ValueError("no estimates to plot")
    finite = [e for e in estimates if all(map(math.isfinite, e.ci95_sn))]
    lo = min((e.ci95_sn[0] for e in finite), default=-1.0)
    hi = max((e.ci95_sn[1] for e in finite), default=1.0)
    ax = _Axes((min(lo, 0.0), max(hi, 0.0)), (0.0, float(len(estimates) + 1)))
    body = [
        f'<line x1="{ax.px(0.0):.2f}" y1="{_PAD}" x2="{ax.px(0.0):.2f}" '
        f'y2="{_H - _PAD}" stroke="gray" stroke-dasharray="4 3"/>'
    ]
    for i, e in enumerate(sorted(estimates, key=lambda e: -e.beta_sn), start=1):
        y = ax.py(float(i))
        key = "/".join(str(k) for k in e.key)
        if all(map(math.isfinite, e.ci95_sn)):
            body.append(
                f'<line x1="{ax.px(e.ci95_sn[0]):.2f}" y1="{y:.2f}" '
                f'x2="{ax.px(e.ci95_sn[1]):.2f}" y2="{y:.2f}" stroke="black" '
                f"class=\"ci\" data-key={quoteattr(key)} "
                f'data-lo="{_fmt(e.ci95_sn[0])}" data-hi="{_fmt(e.ci95_sn[1])}"/>'
            )
        body.append(
            f'<circle cx="{ax.px(e.beta_sn):.2f}" cy="{y:.2f}" r="3" '
            f"fill=\"black\" data-key={quoteattr(key)} "
            f'data-beta-sn="{_fmt(e.beta_sn)}"/>'
        )
    return _document("national bias confidence intervals", body)
