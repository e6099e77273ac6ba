"""
Monte Carlo machinery for DTV behaviour.

- DiscreteDistribution: bin probabilities over consecutive integer keys
- sampling of histograms with numpy's PCG64 generator (seeded, portable)
- expected-DTV estimation and convergence curves
- synthetic dataset / record generators with optional digit heaping
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from engine import Dataset
from errors import ValidationError
from histogram import Histogram
from records import PersonRecord, RecordSet

logger = logging.getLogger('tvor.simulation')

PROBABILITY_TOLERANCE = 1e-12
HEAPING_DIGITS = (0, 2, 5)

# Defaults for the generated fixtures
BETA_SHAPE = (2.0, 3.0)
DEFAULT_BINS = 60
DEFAULT_ORIGIN = 1880


def make_rng(seed) -> np.random.Generator:
    """PCG64 generator from an int seed or a SeedSequence."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def child_seeds(seed, count: int) -> list[np.random.SeedSequence]:
    """Deterministic independent seed streams for count sub-tasks."""
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return root.spawn(count)


@dataclass(frozen=True)
class DiscreteDistribution:
    probabilities: np.ndarray = field(repr=False)
    origin: int = 0

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=np.float64).copy()
        if p.ndim != 1 or p.size < 1:
            raise ValidationError("Distribution needs at least one bin")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValidationError("Probabilities must be finite and non-negative")
        if abs(math.fsum(p) - 1.0) > PROBABILITY_TOLERANCE:
            raise ValidationError(f"Probabilities must sum to 1, got {math.fsum(p)!r}")
        p.flags.writeable = False
        object.__setattr__(self, 'probabilities', p)
        object.__setattr__(self, 'origin', int(self.origin))

    @property
    def n(self) -> int:
        return int(self.probabilities.size)

    @classmethod
    def uniform(cls, bins: int, origin: int = 0) -> 'DiscreteDistribution':
        if bins < 1:
            raise ValidationError("bins must be >= 1")
        return cls(np.full(bins, 1.0 / bins), origin)

    @classmethod
    def from_weights(cls, weights, origin: int = 0) -> 'DiscreteDistribution':
        w = np.asarray(weights, dtype=np.float64)
        total = math.fsum(w)
        if not total > 0:
            raise ValidationError("Weights must have a positive sum")
        return cls(w / total, origin)


@dataclass(frozen=True)
class DtvEstimate:
    mean: float
    std_error: float
    trials: int
    N: int

    def to_dict(self) -> dict:
        return {'N': self.N, 'trials': self.trials, 'mean': self.mean, 'std_error': self.std_error}


@dataclass(frozen=True)
class ConvergencePoint:
    N: int
    deviation: float

    def to_dict(self) -> dict:
        return {'N': self.N, 'deviation': self.deviation}


@dataclass(frozen=True)
class HistogramSpec:
    """One synthetic histogram: its distribution, size and heaping fraction."""
    label: str
    distribution: DiscreteDistribution
    size: int
    heaping: float = 0.0


def theoretical_dtv(d: DiscreteDistribution) -> float:
    """Total variation of the bin probabilities: sum |p_i - p_(i-1)|."""
    if d.n < 2:
        return 0.0
    return math.fsum(np.abs(np.diff(d.probabilities)))


def discretize_beta(alpha: float, beta: float, bins: int, origin: int = 0) -> DiscreteDistribution:
    """
    Exact bin masses of a beta density over equal-width subintervals of [0, 1],
    from differences of the regularized incomplete beta function.
    """
    if not (alpha > 0 and beta > 0):
        raise ValidationError("Beta shape parameters must be positive")
    if bins < 2:
        raise ValidationError("bins must be >= 2")

    edges = np.linspace(0.0, 1.0, bins + 1)
    cdf = special.betainc(alpha, beta, edges)
    cdf[0], cdf[-1] = 0.0, 1.0
    masses = np.clip(np.diff(cdf), 0.0, None)
    return DiscreteDistribution(masses / math.fsum(masses), origin)


def shift_distribution(d: DiscreteDistribution, offset: int) -> DiscreteDistribution:
    """Move every bin offset keys to the right; probabilities are unchanged."""
    if offset < 0:
        raise ValidationError("offset must be >= 0")
    return DiscreteDistribution(d.probabilities, d.origin + int(offset))


def sample_histogram(d: DiscreteDistribution, N: int, seed, label: str = 'sample') -> Histogram:
    """
    Tally N categorical draws over the distribution's full bin range,
    zero-count bins included.
    """
    if N < 1:
        raise ValidationError("Sample size must be >= 1")
    counts = make_rng(seed).multinomial(int(N), d.probabilities)
    return Histogram(label, d.origin, counts)


def _sample_dtvs(d: DiscreteDistribution, N: int, trials: int, seed) -> np.ndarray:
    counts = make_rng(seed).multinomial(int(N), d.probabilities, size=int(trials))
    if d.n < 2:
        return np.zeros(trials, dtype=np.int64)
    return np.abs(np.diff(counts, axis=1)).sum(axis=1)


def estimate_expected_dtv(d: DiscreteDistribution, N: int, trials: int, seed) -> DtvEstimate:
    """Sample mean and standard error of DTV over independent histograms of size N."""
    if trials < 2:
        raise ValidationError("trials must be >= 2")
    if N < 1:
        raise ValidationError("Sample size must be >= 1")

    values = _sample_dtvs(d, N, trials, seed).astype(np.float64)
    mean = math.fsum(values) / trials
    std = float(np.std(values, ddof=1))
    return DtvEstimate(mean, std / math.sqrt(trials), int(trials), int(N))


def estimate_curve(d: DiscreteDistribution, sizes, trials: int, seed) -> list[DtvEstimate]:
    """estimate_expected_dtv over several sizes with independent seed streams."""
    sizes = [int(s) for s in sizes]
    return [estimate_expected_dtv(d, s, trials, child) for s, child in zip(sizes, child_seeds(seed, len(sizes)))]


def fit_randomness_term(estimates, alpha: float) -> float:
    """
    Smallest c with mean <= alpha*N + c*sqrt(N) at every estimated size:
    the operational coefficient of the randomness term.
    """
    estimates = list(estimates)
    if not estimates:
        raise ValidationError("Need at least one estimate")
    return max((e.mean - alpha * e.N) / math.sqrt(e.N) for e in estimates)


def glivenko_cantelli_curve(d: DiscreteDistribution, sizes, trials: int, seed) -> list[ConvergencePoint]:
    """
    Mean |DTV/N - theoretical DTV| per sample size.

    Raises:
        ValidationError: sizes not strictly ascending or trials < 1
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValidationError("sizes must be non-empty and strictly ascending")
    if trials < 1:
        raise ValidationError("trials must be >= 1")

    alpha = theoretical_dtv(d)
    points = []
    for size, child in zip(sizes, child_seeds(seed, len(sizes))):
        values = _sample_dtvs(d, size, trials, child).astype(np.float64)
        deviation = math.fsum(np.abs(values / size - alpha)) / trials
        points.append(ConvergencePoint(size, deviation))
    return points


def _nearest_heaped_index(h: Histogram, digits) -> np.ndarray:
    """Per bin, index of the nearest in-range bin whose key ends in digits (-1 if none)."""
    keys = h.keys.tolist()
    heaped = [i for i, k in enumerate(keys) if k % 10 in digits]
    targets = np.full(h.n, -1, dtype=np.int64)
    for i, key in enumerate(keys):
        if key % 10 in digits or not heaped:
            continue
        # ties go to the lower key
        targets[i] = min(heaped, key=lambda j: (abs(j - i), j))
    return targets


def inject_heaping(h: Histogram, fraction: float, seed, digits=HEAPING_DIGITS) -> Histogram:
    """
    Move a Binomial(count, fraction) share of every bin whose key does not
    end in one of digits onto the nearest bin whose key does. N is preserved.
    """
    if not 0.0 <= fraction <= 1.0:
        raise ValidationError("Heaping fraction must be within [0, 1]")
    if fraction == 0.0:
        return h

    rng = make_rng(seed)
    counts = h.counts.copy()
    targets = _nearest_heaped_index(h, set(digits))
    for i, target in enumerate(targets.tolist()):
        if target < 0:
            continue
        moved = int(rng.binomial(int(h.counts[i]), fraction))
        counts[i] -= moved
        counts[target] += moved
    return Histogram(h.label, h.origin, counts)


def make_synthetic_dataset(spec, seed, min_size_filter: int = 1) -> Dataset:
    """
    Sample one histogram per HistogramSpec, applying heaping where requested.

    Raises:
        ValidationError: duplicate labels, bad sizes or heaping fractions
    """
    spec = list(spec)
    labels = [s.label for s in spec]
    if len(set(labels)) != len(labels):
        duplicates = sorted({l for l in labels if labels.count(l) > 1})
        raise ValidationError(f"Duplicate labels in synthetic spec: {', '.join(duplicates)}")

    histograms = []
    for item, child in zip(spec, child_seeds(seed, len(spec))):
        if item.size < 1:
            raise ValidationError(f"Synthetic histogram '{item.label}' needs size >= 1")
        sample_seed, heap_seed = child.spawn(2)
        h = sample_histogram(item.distribution, item.size, sample_seed, item.label)
        histograms.append(inject_heaping(h, item.heaping, heap_seed))

    logger.debug(f"Sampled {len(histograms)} synthetic histograms")
    return Dataset.from_histograms(histograms, min_size_filter)


def same_smoothness_spec(seed, count: int = 200, min_size: int = 100, max_size: int = 100000,
                         bins: int = 50, jitter: float = 0.1) -> list[HistogramSpec]:
    """
    Histograms of similar but not identical smoothness: beta(2, 3)-like
    shapes with each shape parameter jittered by +-jitter (relative) and
    sizes log-uniform over [min_size, max_size].
    """
    rng = make_rng(seed)
    alphas = BETA_SHAPE[0] * (1.0 + rng.uniform(-jitter, jitter, count))
    betas = BETA_SHAPE[1] * (1.0 + rng.uniform(-jitter, jitter, count))
    sizes = np.rint(np.exp(rng.uniform(math.log(min_size), math.log(max_size), count))).astype(np.int64)
    return [
        HistogramSpec(f"list_{i:04d}", discretize_beta(a, b, bins, DEFAULT_ORIGIN), int(n))
        for i, (a, b, n) in enumerate(zip(alphas.tolist(), betas.tolist(), sizes.tolist()))
    ]


def planted_outlier_spec(smooth_count: int = 60, min_size: int = 500, max_size: int = 20000,
                         planted_size: int = 5000, heaping: float = 0.3,
                         bins: int = DEFAULT_BINS, planted_label: str = 'planted') -> list[HistogramSpec]:
    """smooth_count beta(2, 3) histograms at log-spaced sizes plus one heaped histogram."""
    distribution = discretize_beta(*BETA_SHAPE, bins, DEFAULT_ORIGIN)
    sizes = np.rint(np.geomspace(min_size, max_size, smooth_count)).astype(np.int64).tolist()
    spec = [HistogramSpec(f"smooth_{i:03d}", distribution, int(n)) for i, n in enumerate(sizes)]
    spec.append(HistogramSpec(planted_label, distribution, planted_size, heaping))
    return spec


def make_synthetic_records(count: int, seed, list_id: str = 'synthetic', heaping: float = 0.3,
                           alternative_rate: float = 0.25, missing_rate: float = 0.02,
                           flagged_year: int = 1942, flagged_share: float = 1 / 3) -> RecordSet:
    """
    Person records with beta(2, 3) birth years and randomized alternative
    years, some differing by whole decades.

    Roughly flagged_share of the records get death_year = flagged_year and
    birth years drawn from a heaped sample; the rest get unheaped birth
    years and another death year. A missing_rate share has no stated birth year.
    """
    if count < 0:
        raise ValidationError("count must be >= 0")
    if count == 0:
        return RecordSet(())

    flag_seed, plain_seed, heaped_seed, heap_seed, record_seed = child_seeds(seed, 5)
    rng = make_rng(flag_seed)
    flagged = rng.random(count) < flagged_share
    n_flagged = int(flagged.sum())

    distribution = discretize_beta(*BETA_SHAPE, DEFAULT_BINS, DEFAULT_ORIGIN)
    plain_years = sample_histogram(distribution, count - n_flagged, plain_seed).expand() if n_flagged < count else []
    heaped_years = []
    if n_flagged:
        heaped = inject_heaping(sample_histogram(distribution, n_flagged, heaped_seed), heaping, heap_seed)
        heaped_years = heaped.expand()

    rng = make_rng(record_seed)
    plain_years = [plain_years[i] for i in rng.permutation(len(plain_years)).tolist()]
    heaped_years = [heaped_years[i] for i in rng.permutation(len(heaped_years)).tolist()]
    other_death_years = [y for y in range(flagged_year - 1, flagged_year + 4) if y != flagged_year]
    offsets = np.array([-30, -20, -10, -5, -3, -2, -1, 1, 2, 3, 5, 10, 20, 30])

    records = []
    for i, is_flagged in enumerate(flagged.tolist()):
        birth_year = int(heaped_years.pop() if is_flagged else plain_years.pop())
        alternatives = frozenset()
        if rng.random() < alternative_rate:
            picks = rng.choice(offsets, size=int(rng.integers(1, 4)), replace=False)
            alternatives = frozenset(birth_year + int(o) for o in picks.tolist())
        death_year = flagged_year if is_flagged else other_death_years[int(rng.integers(len(other_death_years)))]
        stated = None if rng.random() < missing_rate else birth_year
        records.append(PersonRecord(
            id=f"{list_id}-{i:06d}",
            list_id=list_id,
            birth_year=stated,
            alternative_years=alternatives,
            attributes={'death_year': str(death_year), 'disputed': 'true' if alternatives else 'false'},
        ))
    return RecordSet(tuple(records))
