"""
Plot data from saved reports, as CSV tables or static SVG.

SVG is assembled from string templates with fixed-precision coordinates,
so the same report always yields the same bytes.
"""

import math

import numpy as np

from errors import NotFoundError, ValidationError
from report import AnalysisReport, rows_to_csv
from validators import format_number

PLOT_KINDS = ('dtv-vs-n', 'digit-profile', 'sweep', 'gc-curve')
PLOT_FORMATS = ('csv', 'svg')
CURVE_SAMPLES = 50

WIDTH, HEIGHT = 640, 400
MARGIN = {'top': 40, 'right': 20, 'bottom': 50, 'left': 70}

# Series colours
BLUE = '#1f77b4'
ORANGE = '#ff7f0e'
GREEN = '#2ca02c'
RED = '#d62728'
GREY = '#7f7f7f'
PALETTE = (BLUE, ORANGE, GREEN, RED, '#9467bd', '#8c564b', '#e377c2', '#17becf')


def _escape(text: str) -> str:
    """Escape XML special characters."""
    return str(text).replace('&', '&amp;').replace('<', '&lt;').replace('>', '&gt;').replace('"', '&quot;')


class SvgCanvas:
    """Chart area with linear or log10 axes mapped onto a fixed pixel frame."""

    def __init__(self, title: str, x_range, y_range, x_label: str, y_label: str,
                 log_x: bool = False, log_y: bool = False):
        self.log_x, self.log_y = log_x, log_y
        self.x0, self.x1 = self._axis(x_range, log_x)
        self.y0, self.y1 = self._axis(y_range, log_y)
        self.left = MARGIN['left']
        self.right = WIDTH - MARGIN['right']
        self.top = MARGIN['top']
        self.bottom = HEIGHT - MARGIN['bottom']
        self.parts = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
            f'viewBox="0 0 {WIDTH} {HEIGHT}">',
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="#ffffff"/>',
            f'<text x="{WIDTH / 2:.1f}" y="24" text-anchor="middle" font-size="14">{_escape(title)}</text>',
            f'<line x1="{self.left}" y1="{self.bottom}" x2="{self.right}" y2="{self.bottom}" stroke="#000000"/>',
            f'<line x1="{self.left}" y1="{self.top}" x2="{self.left}" y2="{self.bottom}" stroke="#000000"/>',
            f'<text x="{(self.left + self.right) / 2:.1f}" y="{HEIGHT - 12}" text-anchor="middle" '
            f'font-size="12">{_escape(x_label)}</text>',
            f'<text x="16" y="{(self.top + self.bottom) / 2:.1f}" text-anchor="middle" font-size="12" '
            f'transform="rotate(-90 16 {(self.top + self.bottom) / 2:.1f})">{_escape(y_label)}</text>',
        ]
        self._ticks()

    @staticmethod
    def _axis(bounds, log: bool) -> tuple[float, float]:
        low, high = (float(v) for v in bounds)
        if log:
            if low <= 0 or high <= 0:
                raise ValidationError("Log axis needs positive values")
            low, high = math.log10(low), math.log10(high)
        if high == low:
            high = low + 1.0
        return low, high

    def px(self, x: float) -> float:
        value = math.log10(x) if self.log_x else x
        return self.left + (value - self.x0) / (self.x1 - self.x0) * (self.right - self.left)

    def py(self, y: float) -> float:
        value = math.log10(y) if self.log_y else y
        return self.bottom - (value - self.y0) / (self.y1 - self.y0) * (self.bottom - self.top)

    def _ticks(self, count: int = 4):
        for i in range(count + 1):
            fx = self.x0 + (self.x1 - self.x0) * i / count
            fy = self.y0 + (self.y1 - self.y0) * i / count
            x_value = 10 ** fx if self.log_x else fx
            y_value = 10 ** fy if self.log_y else fy
            x = self.left + (self.right - self.left) * i / count
            y = self.bottom - (self.bottom - self.top) * i / count
            self.parts.append(f'<text x="{x:.1f}" y="{self.bottom + 16}" text-anchor="middle" '
                              f'font-size="10">{x_value:.4g}</text>')
            self.parts.append(f'<text x="{self.left - 6}" y="{y + 4:.1f}" text-anchor="end" '
                              f'font-size="10">{y_value:.4g}</text>')

    def circle(self, x, y, color: str, title: str | None = None):
        tooltip = f'<title>{_escape(title)}</title>' if title else ''
        self.parts.append(f'<circle cx="{self.px(x):.2f}" cy="{self.py(y):.2f}" r="3" fill="{color}">'
                          f'{tooltip}</circle>')

    def polyline(self, points, color: str):
        coords = ' '.join(f'{self.px(x):.2f},{self.py(y):.2f}' for x, y in points)
        self.parts.append(f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>')

    def bar(self, x_left: float, x_right: float, y: float, color: str, title: str | None = None):
        top = self.py(y)
        tooltip = f'<title>{_escape(title)}</title>' if title else ''
        self.parts.append(f'<rect x="{self.px(x_left):.2f}" y="{top:.2f}" '
                          f'width="{self.px(x_right) - self.px(x_left):.2f}" height="{self.bottom - top:.2f}" '
                          f'fill="{color}">{tooltip}</rect>')

    def label(self, x, text: str):
        self.parts.append(f'<text x="{self.px(x):.2f}" y="{self.bottom + 30}" text-anchor="middle" '
                          f'font-size="10">{_escape(text)}</text>')

    def legend(self, entries):
        for i, (name, color) in enumerate(entries):
            y = self.top + 4 + 16 * i
            self.parts.append(f'<rect x="{self.right - 130}" y="{y}" width="10" height="10" fill="{color}"/>')
            self.parts.append(f'<text x="{self.right - 115}" y="{y + 9}" font-size="10">{_escape(name)}</text>')

    def render(self) -> str:
        return '\n'.join(self.parts) + '\n</svg>\n'


def _block(report: dict, name: str):
    if name not in report:
        raise NotFoundError(f"Report has no '{name}' block")
    return report[name]


def curve_samples(a: float, b: float, n_min: int, n_max: int, count: int = CURVE_SAMPLES) -> list[dict]:
    """Fitted m = a*N + b*sqrt(N) at integer N log-spaced over [n_min, n_max]."""
    sizes = np.unique(np.rint(np.geomspace(max(n_min, 1), max(n_max, 1), count)).astype(np.int64))
    return [{'N': int(n), 'expected': format_number(a * n + b * math.sqrt(n))} for n in sizes.tolist()]


def dtv_vs_n_rows(report: dict) -> list[dict]:
    model = _block(report, 'model')
    scores = _block(report, 'scores')
    if not scores:
        raise NotFoundError("Report 'scores' block is empty")

    rows = [{'series': 'observed', 'label': s['label'], 'N': s['N'], 'value': s['dtv']}
            for s in sorted(scores, key=lambda s: (s['N'], s['label']))]
    sizes = [s['N'] for s in scores]
    for sample in curve_samples(model['a'], model['b'], min(sizes), max(sizes)):
        rows.append({'series': 'fitted', 'label': '', 'N': sample['N'], 'value': sample['expected']})
    return rows


def digit_profile_rows(report: dict) -> list[dict]:
    """Bars per last digit; substitution reports give a before and an after series."""
    if 'digit_profile' in report:
        series = {'count': report['digit_profile']}
    elif 'substitution' in report:
        block = report['substitution']
        series = {'before': block['digit_profile_before'], 'after': block['digit_profile_after']}
    else:
        raise NotFoundError("Report has no 'digit_profile' block")

    return [{'series': name, 'digit': d, 'count': int(profile.get(str(d), 0))}
            for name, profile in series.items() for d in range(10)]


def sweep_rows(report: dict) -> list[dict]:
    return list(_block(report, 'sweep')['rows'])


def gc_curve_rows(report: dict) -> list[dict]:
    return list(_block(report, 'gc_curve'))


def dtv_vs_n_svg(rows: list[dict]) -> str:
    observed = [r for r in rows if r['series'] == 'observed']
    fitted = [r for r in rows if r['series'] == 'fitted']
    sizes = [r['N'] for r in rows]
    values = [r['value'] for r in rows]
    canvas = SvgCanvas('DTV against N', (min(sizes), max(sizes)), (min(0, min(values)), max(values)),
                       'N', 'DTV', log_x=min(sizes) > 0)
    canvas.polyline([(r['N'], r['value']) for r in fitted], ORANGE)
    for r in observed:
        canvas.circle(r['N'], r['value'], BLUE, r['label'])
    canvas.legend([('observed', BLUE), ('fitted aN + b sqrt(N)', ORANGE)])
    return canvas.render()


def digit_profile_svg(rows: list[dict]) -> str:
    names = list(dict.fromkeys(r['series'] for r in rows))
    peak = max([r['count'] for r in rows] + [1])
    canvas = SvgCanvas('Last-digit profile', (0, 10), (0, peak), 'last digit', 'count')
    width = 0.8 / len(names)
    for r in rows:
        offset = 0.1 + width * names.index(r['series'])
        color = PALETTE[names.index(r['series']) % len(PALETTE)]
        canvas.bar(r['digit'] + offset, r['digit'] + offset + width, r['count'], color, f"{r['series']} {r['digit']}")
    for d in range(10):
        canvas.label(d + 0.5, str(d))
    canvas.legend([(n, PALETTE[i % len(PALETTE)]) for i, n in enumerate(names)])
    return canvas.render()


def sweep_svg(rows: list[dict]) -> str:
    thresholds = [r['threshold'] for r in rows]
    included = [r['included'] for r in rows]
    tops = list(dict.fromkeys(r['top_label'] for r in rows if r['top_label'] is not None))
    canvas = SvgCanvas('Top label per size threshold', (min(thresholds), max(thresholds)),
                       (0, max(included)), 'threshold N', 'histograms included', log_x=min(thresholds) > 0)
    for r in rows:
        color = GREY if r['top_label'] is None else PALETTE[tops.index(r['top_label']) % len(PALETTE)]
        canvas.circle(r['threshold'], r['included'], color, r['top_label'] or r.get('skipped') or '')
    canvas.legend([(t, PALETTE[i % len(PALETTE)]) for i, t in enumerate(tops[:len(PALETTE)])])
    return canvas.render()


def gc_curve_svg(rows: list[dict]) -> str:
    sizes = [r['N'] for r in rows]
    deviations = [r['deviation'] for r in rows]
    positive = all(d > 0 for d in deviations)
    canvas = SvgCanvas('Mean |DTV/N - TV(D)| against N', (min(sizes), max(sizes)),
                       (min(deviations), max(deviations)) if positive else (0, max(deviations + [1.0])),
                       'N', 'mean deviation', log_x=True, log_y=positive)
    canvas.polyline(list(zip(sizes, deviations)), BLUE)
    for n, d in zip(sizes, deviations):
        canvas.circle(n, d, BLUE, f"N={n}")
    return canvas.render()


PLOT_BUILDERS = {
    'dtv-vs-n': (dtv_vs_n_rows, dtv_vs_n_svg),
    'digit-profile': (digit_profile_rows, digit_profile_svg),
    'sweep': (sweep_rows, sweep_svg),
    'gc-curve': (gc_curve_rows, gc_curve_svg),
}


def emit_plot_data(report, kind: str, fmt: str = 'csv') -> str:
    """
    Render one plot kind from a report as CSV or SVG text.

    Raises:
        ValidationError: unknown kind or format
        NotFoundError: the report lacks the block the kind needs
    """
    if kind not in PLOT_BUILDERS:
        raise ValidationError(f"Unknown plot kind '{kind}'. Use one of: {', '.join(PLOT_KINDS)}")
    if fmt not in PLOT_FORMATS:
        raise ValidationError(f"Unknown plot format '{fmt}'. Use csv or svg")

    if isinstance(report, AnalysisReport):
        report = report.to_dict()
    to_rows, to_svg = PLOT_BUILDERS[kind]
    rows = to_rows(report)
    if not rows:
        raise NotFoundError(f"Report has no data for plot '{kind}'")
    return rows_to_csv(rows) if fmt == 'csv' else to_svg(rows)
