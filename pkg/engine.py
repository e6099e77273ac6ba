"""
TVOR engine: expected-DTV model fitting, d' scoring and ranking.

The expected DTV of a histogram with N elements is modelled as
m = a*N + b*sqrt(N); the score is d' = (DTV - m) / sqrt(N).
Ranking orders histograms by |d'|.

Fitting:
- raw_ols minimizes sum (V - aN - b sqrt(N))^2
- normalized_ols minimizes sum ((V - aN - b sqrt(N)) / sqrt(N))^2
Both are solved in closed form from 2x2 normal equations, with sums
accumulated by math.fsum so results do not depend on input order.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from errors import ConflictError, NoDataError, SingularFitError, ValidationError
from histogram import Histogram, dtv

logger = logging.getLogger('tvor.engine')

FIT_MODES = ('raw_ols', 'normalized_ols')
DEFAULT_FIT_MODE = 'raw_ols'
DEFAULT_MIN_SIZE = 100
DEFAULT_DEBIAS_TOL = 1e-9
DEFAULT_DEBIAS_MAX_ITER = 10

# Relative determinant below which a 2x2 design counts as singular
SINGULAR_RTOL = 1e-12


@dataclass(frozen=True)
class Dataset:
    """
    Histograms with unique labels, all of size >= min_size_filter.
    dropped_labels names the histograms the size filter removed at load.
    """
    histograms: tuple[Histogram, ...]
    min_size_filter: int = DEFAULT_MIN_SIZE
    dropped_labels: tuple[str, ...] = ()

    def __post_init__(self):
        seen = set()
        for h in self.histograms:
            if h.label in seen:
                raise ConflictError(f"Duplicate histogram label '{h.label}'")
            seen.add(h.label)
            if h.N < self.min_size_filter:
                raise ValidationError(
                    f"Histogram '{h.label}' has N={h.N} below min_size_filter={self.min_size_filter}")

    @classmethod
    def from_histograms(cls, histograms, min_size_filter: int = DEFAULT_MIN_SIZE) -> 'Dataset':
        """Build a dataset, dropping histograms smaller than min_size_filter."""
        histograms = list(histograms)
        kept = tuple(h for h in histograms if h.N >= min_size_filter)
        dropped = tuple(h.label for h in histograms if h.N < min_size_filter)
        if dropped:
            logger.info(f"Dropped {len(dropped)} histograms with N < {min_size_filter}")
        return cls(kept, min_size_filter, dropped)

    @property
    def labels(self) -> list[str]:
        return [h.label for h in self.histograms]

    @property
    def dropped_below_min_size(self) -> int:
        return len(self.dropped_labels)

    def __len__(self):
        return len(self.histograms)

    def __iter__(self):
        return iter(self.histograms)

    def get(self, label: str) -> Histogram | None:
        for h in self.histograms:
            if h.label == label:
                return h
        return None

    def subset(self, predicate) -> 'Dataset':
        return Dataset(tuple(h for h in self.histograms if predicate(h)), self.min_size_filter, self.dropped_labels)


@dataclass(frozen=True)
class TvorModel:
    a: float
    b: float
    fit_mode: str
    n_fitted: int

    def expected(self, N) -> float:
        return self.a * N + self.b * math.sqrt(N)

    def to_dict(self) -> dict:
        return {'a': self.a, 'b': self.b, 'fit_mode': self.fit_mode, 'n_fitted': self.n_fitted}


@dataclass(frozen=True)
class ScoreRecord:
    label: str
    N: int
    dtv: int
    expected: float
    d_signed: float
    d_abs: float
    rank: int = 0

    def to_dict(self) -> dict:
        return {
            'rank': self.rank,
            'label': self.label,
            'N': self.N,
            'dtv': self.dtv,
            'expected': self.expected,
            'd_signed': self.d_signed,
            'd_abs': self.d_abs,
        }


@dataclass(frozen=True)
class DebiasResult:
    """
    Cumulative additive correction a1*sqrt(N) + b1 removed from d_signed.
    passes holds the (a1, b1) regressed at each iteration.
    """
    a1: float
    b1: float
    adjusted_scores: tuple[ScoreRecord, ...]
    passes: tuple[tuple[float, float], ...] = field(default=())

    @property
    def iterations(self) -> int:
        return len(self.passes)


def solve_normal_equations(s11: float, s12: float, s22: float, t1: float, t2: float,
                           context: str = "fit") -> tuple[float, float]:
    """
    Solve [[s11, s12], [s12, s22]] @ (x1, x2) = (t1, t2) by Cramer's rule.

    Raises:
        SingularFitError: determinant is zero relative to the diagonal
    """
    det = s11 * s22 - s12 * s12
    if not math.isfinite(det) or abs(det) <= SINGULAR_RTOL * abs(s11 * s22) or det == 0.0:
        raise SingularFitError(f"Singular {context}: degenerate design matrix")
    x1 = (t1 * s22 - s12 * t2) / det
    x2 = (s11 * t2 - s12 * t1) / det
    return x1, x2


def fit_arrays(sizes: np.ndarray, variations: np.ndarray, mode: str) -> tuple[float, float]:
    if mode not in FIT_MODES:
        raise ValidationError(f"Unknown fit mode '{mode}'. Use one of: {', '.join(FIT_MODES)}")
    if sizes.size < 2:
        raise SingularFitError(f"Need at least 2 histograms to fit, got {sizes.size}")

    N = sizes.astype(np.float64)
    V = variations.astype(np.float64)
    root = np.sqrt(N)

    if mode == 'raw_ols':
        # features (N, sqrt N), target V
        s11 = math.fsum(N * N)
        s12 = math.fsum(N * root)
        s22 = math.fsum(N)
        t1 = math.fsum(V * N)
        t2 = math.fsum(V * root)
    else:
        # features (sqrt N, 1), target V / sqrt N
        s11 = math.fsum(N)
        s12 = math.fsum(root)
        s22 = float(N.size)
        t1 = math.fsum(V)
        t2 = math.fsum(V / root)

    return solve_normal_equations(s11, s12, s22, t1, t2, context=f"{mode} fit")


def fit_model(ds: Dataset, mode: str = DEFAULT_FIT_MODE) -> TvorModel:
    """
    Fit m = a*N + b*sqrt(N) over every histogram in the dataset.

    Raises:
        SingularFitError: fewer than 2 histograms or all N equal
        ValidationError: unknown mode
    """
    sizes = np.array([h.N for h in ds], dtype=np.int64)
    variations = np.array([dtv(h) for h in ds], dtype=np.int64)
    a, b = fit_arrays(sizes, variations, mode)
    logger.debug(f"Fitted {mode} on {len(ds)} histograms: a={a!r} b={b!r}")
    return TvorModel(a, b, mode, len(ds))


def score(model: TvorModel, h: Histogram) -> ScoreRecord:
    """
    Score one histogram: d_signed = (DTV - a*N - b*sqrt(N)) / sqrt(N).

    Raises:
        NoDataError: the histogram is empty (N = 0)
    """
    size = h.N
    if size <= 0:
        raise NoDataError(f"Cannot score empty histogram '{h.label}'")

    variation = dtv(h)
    root = math.sqrt(size)
    expected = model.a * size + model.b * root
    d_signed = (variation - expected) / root
    return ScoreRecord(h.label, size, variation, expected, d_signed, abs(d_signed))


def rank_key(record: ScoreRecord):
    """Descending |d'|, then descending N, then label."""
    return (-record.d_abs, -record.N, record.label)


def assign_ranks(records) -> list[ScoreRecord]:
    ordered = sorted(records, key=rank_key)
    return [replace(r, rank=i) for i, r in enumerate(ordered, start=1)]


def rank(ds: Dataset, model: TvorModel) -> list[ScoreRecord]:
    """Score every histogram and order by descending |d'| with a deterministic tie-break."""
    return assign_ranks(score(model, h) for h in ds)


def fit_and_rank(ds: Dataset, mode: str = DEFAULT_FIT_MODE) -> tuple[TvorModel, list[ScoreRecord]]:
    model = fit_model(ds, mode)
    return model, rank(ds, model)


def debias_iterative(scores, max_iter: int = DEFAULT_DEBIAS_MAX_ITER,
                     tol: float = DEFAULT_DEBIAS_TOL) -> DebiasResult:
    """
    Remove the additive size trend from signed scores.

    Each pass regresses d_signed on (sqrt N, 1), giving (a1, b1), and
    subtracts a1*sqrt(N) + b1. Stops once |a1| and |b1| are both below tol
    or after max_iter passes. Adjusted records are re-ranked.

    Raises:
        SingularFitError: fewer than 2 scores or all N equal
    """
    scores = list(scores)
    if len(scores) < 2:
        raise SingularFitError("Need at least 2 scores to debias")

    N = np.array([s.N for s in scores], dtype=np.float64)
    root = np.sqrt(N)
    d = np.array([s.d_signed for s in scores], dtype=np.float64)

    s11 = math.fsum(N)
    s12 = math.fsum(root)
    s22 = float(N.size)

    total_a1, total_b1 = 0.0, 0.0
    passes = []
    for _ in range(max_iter):
        a1, b1 = solve_normal_equations(s11, s12, s22, math.fsum(d * root), math.fsum(d),
                                        context="debias regression")
        passes.append((a1, b1))
        d = d - (a1 * root + b1)
        total_a1 += a1
        total_b1 += b1
        if abs(a1) < tol and abs(b1) < tol:
            break
    else:
        logger.warning(f"Debias did not converge below tol={tol} in {max_iter} passes")

    adjusted = [
        replace(s, d_signed=float(value), d_abs=abs(float(value)), rank=0)
        for s, value in zip(scores, d)
    ]
    return DebiasResult(total_a1, total_b1, tuple(assign_ranks(adjusted)), tuple(passes))
