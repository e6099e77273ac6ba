"""
Histogram representation and per-histogram metrics.

- Histogram: integer-keyed consecutive bins, empty interior bins stored as 0
- dtv: discrete total variation (sum of absolute adjacent differences)
- whipple_index: digit preference for terminal digits 0 and 5 in an age window
- last_digit_profile: counts of years by last digit
"""

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from errors import NoDataError, ValidationError
from validators import validate_counts, validate_window


# Whipple bands: (exclusive upper bound, label), checked in order
WHIPPLE_BANDS = (
    (105.0, 'highly_accurate'),
    (110.0, 'fairly_accurate'),
    (125.0, 'approximate'),
    (175.0, 'rough'),
)
WHIPPLE_WORST = 'very_rough_bad'

DEFAULT_WHIPPLE_WINDOW = (23, 62)
HEAPED_DIGITS = (0, 5)


@dataclass(frozen=True)
class Histogram:
    """
    Ordered bins over the consecutive keys origin..origin+n-1.

    counts is stored as a read-only int64 array.
    """
    label: str
    origin: int
    counts: np.ndarray = field(repr=False)

    def __post_init__(self):
        counts = np.asarray(self.counts)
        valid, error = validate_counts(counts.ravel())
        if counts.ndim != 1 or not valid:
            raise ValidationError(f"Histogram '{self.label}': {error or 'counts must be one-dimensional'}")

        counts = counts.astype(np.int64, copy=True)
        counts.flags.writeable = False
        object.__setattr__(self, 'counts', counts)
        object.__setattr__(self, 'origin', int(self.origin))

    @property
    def n(self) -> int:
        return int(self.counts.size)

    @property
    def N(self) -> int:
        return int(self.counts.sum())

    @property
    def keys(self) -> np.ndarray:
        return np.arange(self.origin, self.origin + self.n, dtype=np.int64)

    def count_at(self, key: int) -> int:
        index = key - self.origin
        if 0 <= index < self.n:
            return int(self.counts[index])
        return 0

    def expand(self) -> list[int]:
        """Sorted multiset of keys, the inverse of histogram_from_years."""
        return np.repeat(self.keys, self.counts).tolist()

    def scaled(self, factor: int) -> 'Histogram':
        if factor < 0:
            raise ValidationError("Scale factor must be non-negative")
        return Histogram(self.label, self.origin, self.counts * int(factor))

    def reversed(self) -> 'Histogram':
        return Histogram(self.label, self.origin, self.counts[::-1])

    def shifted(self, offset: int) -> 'Histogram':
        return Histogram(self.label, self.origin + int(offset), self.counts)

    def __eq__(self, other):
        if not isinstance(other, Histogram):
            return NotImplemented
        return (self.label == other.label and self.origin == other.origin
                and np.array_equal(self.counts, other.counts))

    def __hash__(self):
        return hash((self.label, self.origin, self.counts.tobytes()))


@dataclass(frozen=True)
class DigitProfile:
    """Counts of values by last decimal digit."""
    counts_by_last_digit: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.counts_by_last_digit)

    def __getitem__(self, digit: int) -> int:
        return self.counts_by_last_digit[digit]

    def to_dict(self) -> dict:
        return {str(d): c for d, c in enumerate(self.counts_by_last_digit)}


@dataclass(frozen=True)
class WhippleResult:
    index: float
    classification: str
    ages_in_window: int

    def to_dict(self) -> dict:
        return {
            'index': self.index,
            'classification': self.classification,
            'ages_in_window': self.ages_in_window,
        }


def dtv(h: Histogram) -> int:
    """
    Discrete total variation: sum of |x_i - x_(i-1)| over adjacent bins.
    A single-bin histogram has DTV 0.
    """
    if h.n < 2:
        return 0
    return int(np.abs(np.diff(h.counts)).sum())


def classify_whipple(index: float) -> str:
    for upper, label in WHIPPLE_BANDS:
        if index < upper:
            return label
    return WHIPPLE_WORST


def whipple_index(ages, window: tuple[int, int] = DEFAULT_WHIPPLE_WINDOW) -> WhippleResult:
    """
    Whipple's index over an inclusive age window.

    index = 500 * (in-window ages ending in 0 or 5) / (in-window ages),
    so 100 means no preference and 500 means every age ends in 0 or 5.

    Raises:
        ValidationError: window empty or its length not a multiple of 5
        NoDataError: no ages fall inside the window
    """
    window, error = validate_window(window)
    if error:
        raise ValidationError(error)
    low, high = window

    ages = np.asarray(list(ages), dtype=np.int64)
    in_window = ages[(ages >= low) & (ages <= high)]
    if in_window.size == 0:
        raise NoDataError(f"No data in window {low}-{high}")

    heaped = int(np.isin(np.mod(in_window, 10), HEAPED_DIGITS).sum())
    index = 500.0 * heaped / int(in_window.size)

    return WhippleResult(index, classify_whipple(index), int(in_window.size))


def whipple_from_years(years, window: tuple[int, int] = DEFAULT_WHIPPLE_WINDOW,
                       reference_year: int = 1942) -> WhippleResult:
    """Whipple's index of birth years, read as ages at reference_year."""
    return whipple_index([reference_year - y for y in years], window)


def last_digit_profile(years) -> DigitProfile:
    """Tally years by last digit; negative years use the non-negative remainder."""
    counts = [0] * 10
    for year in years:
        counts[int(year) % 10] += 1
    return DigitProfile(tuple(counts))


def histogram_last_digit_profile(h: Histogram) -> DigitProfile:
    counts = [0] * 10
    for key, count in zip(h.keys.tolist(), h.counts.tolist()):
        counts[key % 10] += count
    return DigitProfile(tuple(counts))


def histogram_from_years(years, label: str) -> Histogram:
    """
    Tally years into a histogram spanning min(years)..max(years).

    Raises:
        NoDataError: no years given
    """
    years = [int(y) for y in years]
    if not years:
        raise NoDataError(f"No years to build histogram '{label}'")

    origin = min(years)
    counts = np.zeros(max(years) - origin + 1, dtype=np.int64)
    for year, count in Counter(years).items():
        counts[year - origin] = count

    return Histogram(label, origin, counts)
