"""
Score diagnostics: size bias, renormalization demo, IQR outliers,
chi-square sample-size behaviour and the unique-size threshold sweep.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from engine import DEFAULT_FIT_MODE, Dataset, assign_ranks, fit_arrays
from errors import NoDataError, RenormalizationError, SingularFitError, ValidationError
from histogram import Histogram, dtv

logger = logging.getLogger('tvor.diagnostics')

DEFAULT_IQR_MULTIPLIER = 1.5
DEFAULT_LARGEST_SUBSET = 7

# Near-uniform fixture: 10 bins around 500, alternating +-11
NEAR_UNIFORM_BINS = 10
NEAR_UNIFORM_RIPPLE = 0.022
NEAR_UNIFORM_TOTALS = (5000, 10000, 20000, 40000)


@dataclass(frozen=True)
class RegressionLine:
    slope: float
    intercept: float
    r: float
    n: int

    def predict(self, x):
        return self.slope * x + self.intercept

    def to_dict(self) -> dict:
        return {'slope': self.slope, 'intercept': self.intercept, 'r': self.r, 'n': self.n}


@dataclass(frozen=True)
class BiasReport:
    convention: str
    correlation: float
    line: RegressionLine

    def to_dict(self) -> dict:
        return {'convention': self.convention, 'correlation': self.correlation, 'line': self.line.to_dict()}


@dataclass(frozen=True)
class RenormalizedScore:
    label: str
    N: int
    d_abs: float
    divisor: float
    renormalized: float
    original_rank: int
    rank: int

    def to_dict(self) -> dict:
        return {
            'rank': self.rank,
            'original_rank': self.original_rank,
            'label': self.label,
            'N': self.N,
            'd_abs': self.d_abs,
            'divisor': self.divisor,
            'renormalized': self.renormalized,
        }


@dataclass(frozen=True)
class RenormalizationDemo:
    """Output of the critiqued division; never a ranking to act on."""
    line: RegressionLine
    scores: tuple[RenormalizedScore, ...]
    endorsed: bool = False

    def to_dict(self) -> dict:
        return {
            'endorsed': self.endorsed,
            'note': 'demonstration of division by a fitted linear trend in N; not a valid scoring procedure',
            'line': self.line.to_dict(),
            'scores': [s.to_dict() for s in self.scores],
        }


@dataclass(frozen=True)
class IqrVerdict:
    q1: float
    q3: float
    iqr: float
    k: float
    upper_fence: float
    outlier_labels: frozenset = field(default_factory=frozenset)

    def to_dict(self) -> dict:
        return {
            'q1': self.q1,
            'q3': self.q3,
            'iqr': self.iqr,
            'k': self.k,
            'upper_fence': self.upper_fence,
            'quartile_method': 'linear interpolation at p*(n-1)',
            'outlier_labels': sorted(self.outlier_labels),
        }


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    p_value: float
    dof: int
    N: int

    def to_dict(self) -> dict:
        return {'N': self.N, 'dof': self.dof, 'statistic': self.statistic, 'p_value': self.p_value}


@dataclass(frozen=True)
class SweepRow:
    threshold: int
    included: int
    top_label: str | None
    skipped: str | None = None

    def to_dict(self) -> dict:
        return {
            'threshold': self.threshold,
            'included': self.included,
            'top_label': self.top_label,
            'skipped': self.skipped,
        }


@dataclass(frozen=True)
class SweepReport:
    rows: tuple[SweepRow, ...]
    fit_mode: str

    @property
    def thresholds(self) -> list[int]:
        return [r.threshold for r in self.rows]

    @property
    def top_label_per_threshold(self) -> list[str | None]:
        return [r.top_label for r in self.rows]

    @property
    def included_count_per_threshold(self) -> list[int]:
        return [r.included for r in self.rows]

    def top_label_counts(self) -> dict[str, int]:
        """How many thresholds each label came out on top."""
        counts = {}
        for row in self.rows:
            if row.top_label is not None:
                counts[row.top_label] = counts.get(row.top_label, 0) + 1
        return dict(sorted(counts.items(), key=lambda item: (-item[1], item[0])))

    def to_dict(self) -> dict:
        return {
            'fit_mode': self.fit_mode,
            'threshold_count': len(self.rows),
            'skipped_count': sum(1 for r in self.rows if r.skipped),
            'top_label_counts': self.top_label_counts(),
            'rows': [r.to_dict() for r in self.rows],
        }


def _as_float_arrays(xs, ys) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValidationError("Inputs must be equal-length sequences")
    if x.size < 2:
        raise NoDataError("Need at least 2 points")
    return x, y


def _centered_sums(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float, float, float]:
    mean_x = math.fsum(x) / x.size
    mean_y = math.fsum(y) / y.size
    dx = x - mean_x
    dy = y - mean_y
    return mean_x, mean_y, math.fsum(dx * dx), math.fsum(dy * dy), math.fsum(dx * dy)


def pearson_correlation(xs, ys) -> float:
    """
    Product-moment correlation coefficient.

    Raises:
        SingularFitError: either input has zero variance
    """
    x, y = _as_float_arrays(xs, ys)
    _, _, sxx, syy, sxy = _centered_sums(x, y)
    if sxx == 0.0 or syy == 0.0:
        raise SingularFitError("Correlation undefined: zero variance input")
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def fit_line(xs, ys) -> RegressionLine:
    """
    Ordinary least-squares line y = slope*x + intercept.

    r is reported as 0.0 when ys is constant (the line is then exact).

    Raises:
        SingularFitError: all xs equal
    """
    x, y = _as_float_arrays(xs, ys)
    mean_x, mean_y, sxx, syy, sxy = _centered_sums(x, y)
    if sxx == 0.0:
        raise SingularFitError("Regression undefined: all x values equal")

    slope = sxy / sxx
    intercept = mean_y - slope * mean_x
    r = 0.0 if syy == 0.0 else max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))
    return RegressionLine(slope, intercept, r, int(x.size))


def bias_report(scores, use_signed: bool = True) -> BiasReport:
    """Correlation and regression line of d' against N, signed or absolute."""
    scores = list(scores)
    if len(scores) < 2:
        raise NoDataError("Bias report needs at least 2 scores")

    sizes = [s.N for s in scores]
    values = [s.d_signed if use_signed else s.d_abs for s in scores]
    line = fit_line(sizes, values)
    correlation = pearson_correlation(sizes, values)
    return BiasReport('signed' if use_signed else 'absolute', correlation, line)


def renormalize_demo(scores, line: RegressionLine) -> RenormalizationDemo:
    """
    Divide each |d'| by slope*N + intercept and re-rank.

    Reproduces a procedure for demonstration only; the output is tagged
    as not endorsed.

    Raises:
        RenormalizationError: the divisor is zero or negative for some histogram
    """
    logger.warning("renormalize_demo divides scores by a linear trend in N; output is demonstrative only")

    scores = list(scores)
    original = {s.label: s.rank for s in assign_ranks(scores)}
    transformed = []
    for s in scores:
        divisor = line.slope * s.N + line.intercept
        if not divisor > 0.0:
            raise RenormalizationError(
                f"Non-positive divisor {divisor!r} at N={s.N} for histogram '{s.label}'", s.label)
        transformed.append((s, divisor, s.d_abs / divisor))

    transformed.sort(key=lambda item: (-item[2], -item[0].N, item[0].label))
    results = tuple(
        RenormalizedScore(s.label, s.N, s.d_abs, divisor, value, original[s.label], i)
        for i, (s, divisor, value) in enumerate(transformed, start=1)
    )
    return RenormalizationDemo(line, results)


def largest_subset_slope(scores, k: int = DEFAULT_LARGEST_SUBSET) -> RegressionLine:
    """Regression of |d'| on N restricted to the k largest histograms."""
    scores = list(scores)
    if k < 2 or k > len(scores):
        raise ValidationError(f"k must be between 2 and {len(scores)}, got {k}")

    largest = sorted(scores, key=lambda s: (-s.N, s.label))[:k]
    return fit_line([s.N for s in largest], [s.d_abs for s in largest])


def quartiles(values) -> tuple[float, float]:
    """First and third quartiles, linear interpolation at position p*(n-1)."""
    data = np.asarray(values, dtype=np.float64)
    q1, q3 = np.percentile(data, [25.0, 75.0], method='linear')
    return float(q1), float(q3)


def iqr_outliers(values, k: float = DEFAULT_IQR_MULTIPLIER) -> IqrVerdict:
    """
    Flag labels whose value strictly exceeds q3 + k*iqr.

    Args:
        values: mapping label -> value, or iterable of (label, value)

    Raises:
        NoDataError: fewer than 4 values
    """
    items = list(values.items()) if hasattr(values, 'items') else list(values)
    if len(items) < 4:
        raise NoDataError(f"IQR outliers need at least 4 values, got {len(items)}")
    if k < 0:
        raise ValidationError("IQR multiplier must be non-negative")

    q1, q3 = quartiles([v for _, v in items])
    iqr = q3 - q1
    fence = q3 + k * iqr
    outliers = frozenset(label for label, v in items if v > fence)
    return IqrVerdict(q1, q3, iqr, float(k), fence, outliers)


def chi_square_uniform(h: Histogram) -> ChiSquareResult:
    """
    Pearson chi-square of the counts against a uniform distribution.

    statistic = sum (x_i - N/n)^2 / (N/n), evaluated in exact integer
    arithmetic as sum (n*x_i - N)^2 / (n*N); p from the chi-square survival
    function with n-1 degrees of freedom.
    """
    size, bins = h.N, h.n
    if size <= 0:
        raise NoDataError(f"Chi-square needs a non-empty histogram, '{h.label}' is empty")
    if bins < 2:
        raise ValidationError(f"Chi-square needs at least 2 bins, '{h.label}' has {bins}")

    numerator = sum((bins * int(x) - size) ** 2 for x in h.counts.tolist())
    statistic = numerator / (bins * size)
    dof = bins - 1
    p_value = 1.0 if statistic == 0 else float(special.gammaincc(dof / 2.0, statistic / 2.0))
    return ChiSquareResult(statistic, p_value, dof, size)


def chi_square_scaling(h: Histogram, scales) -> list[tuple[int, ChiSquareResult]]:
    """Chi-square of the same shape scaled by each integer factor."""
    return [(int(c), chi_square_uniform(h.scaled(c))) for c in scales]


def near_uniform_shape(total: int = NEAR_UNIFORM_TOTALS[0], bins: int = NEAR_UNIFORM_BINS,
                       ripple: float = NEAR_UNIFORM_RIPPLE, label: str = 'near_uniform') -> Histogram:
    """
    Uniform counts with an alternating +ripple/-ripple relative deviation.

    With the defaults the 5000-element shape has p close to 0.98 and its
    2x, 4x and 8x scalings fall towards p close to 0.02.
    """
    if bins < 2 or total % bins != 0:
        raise ValidationError("total must be a positive multiple of bins (bins >= 2)")

    expected = total // bins
    delta = int(round(expected * ripple))
    counts = [expected + (delta if i % 2 == 0 else -delta) for i in range(bins)]
    if bins % 2 == 1:
        counts[-1] = expected
    return Histogram(label, 0, counts)


def threshold_sweep(ds: Dataset, mode: str = DEFAULT_FIT_MODE) -> SweepReport:
    """
    Re-run TVOR once per unique histogram size.

    For each unique N in ascending order, histograms smaller than it are
    dropped, the model is refitted and the top label recorded. Thresholds
    that leave fewer than 2 histograms or a singular fit are reported as
    skipped. DTVs are computed once and reused across thresholds.
    """
    if len(ds) == 0:
        raise NoDataError("Threshold sweep needs a non-empty dataset")

    labels = ds.labels
    sizes = np.array([h.N for h in ds], dtype=np.int64)
    variations = np.array([dtv(h) for h in ds], dtype=np.int64)

    rows = []
    for threshold in np.unique(sizes).tolist():
        keep = np.flatnonzero(sizes >= threshold)
        if keep.size < 2:
            rows.append(SweepRow(threshold, int(keep.size), None, 'fewer than 2 histograms'))
            continue
        try:
            a, b = fit_arrays(sizes[keep], variations[keep], mode)
        except SingularFitError as e:
            logger.info(f"Sweep threshold {threshold} skipped: {e.message}")
            rows.append(SweepRow(threshold, int(keep.size), None, 'singular fit'))
            continue

        N = sizes[keep].astype(np.float64)
        root = np.sqrt(N)
        d_abs = np.abs((variations[keep] - (a * N + b * root)) / root)
        tied = keep[np.flatnonzero(d_abs == d_abs.max())]
        top = min(tied.tolist(), key=lambda i: (-int(sizes[i]), labels[i]))
        rows.append(SweepRow(threshold, int(keep.size), labels[top]))

    return SweepReport(tuple(rows), mode)
