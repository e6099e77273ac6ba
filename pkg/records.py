"""
Record-level experiments on individual person entries.

- closest-alternative birth-year substitution with digit profiles
- splitting a record set by an attribute (e.g. recorded death year)
- adding extra histograms to a dataset and re-ranking
- excluding named lists from a dataset
"""

import logging
from dataclasses import dataclass, field
from types import MappingProxyType

import numpy as np

from engine import DEFAULT_FIT_MODE, DEFAULT_MIN_SIZE, Dataset, TvorModel, ScoreRecord, fit_and_rank
from errors import ConflictError, NoDataError, NotFoundError, ValidationError
from histogram import (
    DEFAULT_WHIPPLE_WINDOW,
    DigitProfile,
    Histogram,
    WhippleResult,
    histogram_from_years,
    last_digit_profile,
    whipple_from_years,
)

logger = logging.getLogger('tvor.records')


@dataclass(frozen=True)
class PersonRecord:
    """
    One listed person. alternative_years never contains birth_year;
    it is normalized away at construction.
    """
    id: str
    list_id: str
    birth_year: int | None
    alternative_years: frozenset = field(default_factory=frozenset)
    attributes: MappingProxyType = field(default_factory=dict, hash=False)

    def __post_init__(self):
        alternatives = frozenset(int(y) for y in self.alternative_years)
        if self.birth_year is not None:
            object.__setattr__(self, 'birth_year', int(self.birth_year))
            alternatives = alternatives - {self.birth_year}
        object.__setattr__(self, 'alternative_years', alternatives)
        object.__setattr__(self, 'attributes', MappingProxyType(dict(self.attributes)))

    @property
    def disputed(self) -> bool:
        return self.attributes.get('disputed', 'false').lower() == 'true'

    def with_birth_year(self, year: int | None, alternatives=None) -> 'PersonRecord':
        return PersonRecord(
            self.id,
            self.list_id,
            year,
            self.alternative_years if alternatives is None else alternatives,
            dict(self.attributes),
        )


@dataclass(frozen=True)
class RecordSet:
    records: tuple[PersonRecord, ...]

    def __post_init__(self):
        seen = set()
        for record in self.records:
            if record.id in seen:
                raise ConflictError(f"Duplicate record id '{record.id}'")
            seen.add(record.id)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    @property
    def attribute_keys(self) -> set[str]:
        keys = set()
        for record in self.records:
            keys.update(record.attributes)
        return keys

    @property
    def list_ids(self) -> list[str]:
        return sorted({r.list_id for r in self.records})

    def birth_years(self) -> list[int]:
        return [r.birth_year for r in self.records if r.birth_year is not None]

    def for_list(self, list_id: str) -> 'RecordSet':
        subset = tuple(r for r in self.records if r.list_id == list_id)
        if not subset:
            raise NotFoundError(f"Unknown list '{list_id}'")
        return RecordSet(subset)

    def without_alternatives(self) -> 'RecordSet':
        return RecordSet(tuple(r.with_birth_year(r.birth_year, frozenset()) for r in self.records))


@dataclass(frozen=True)
class IngestionReport:
    records_total: int = 0
    records_without_year: int = 0
    lists_total: int = 0
    lists_kept: int = 0
    lists_below_min_size: int = 0

    def to_dict(self) -> dict:
        return {
            'records_total': self.records_total,
            'records_without_year': self.records_without_year,
            'lists_total': self.lists_total,
            'lists_kept': self.lists_kept,
            'lists_below_min_size': self.lists_below_min_size,
        }


@dataclass(frozen=True)
class SubstitutionReport:
    substituted_count: int
    digit_profile_before: DigitProfile
    digit_profile_after: DigitProfile
    abs_diff_histogram: Histogram
    tie_flagged_ids: tuple[str, ...] = ()
    skipped_without_birth_year: tuple[str, ...] = ()

    def digit_shift(self) -> dict[str, dict[str, int]]:
        return digit_shift(self.digit_profile_before, self.digit_profile_after)

    def to_dict(self) -> dict:
        diffs = self.abs_diff_histogram
        return {
            'substituted_count': self.substituted_count,
            'digit_profile_before': self.digit_profile_before.to_dict(),
            'digit_profile_after': self.digit_profile_after.to_dict(),
            'digit_shift': self.digit_shift(),
            'abs_diff_counts': {str(k): c for k, c in zip(diffs.keys.tolist(), diffs.counts.tolist()) if c},
            'tie_flagged': list(self.tie_flagged_ids),
            'skipped_without_birth_year': list(self.skipped_without_birth_year),
        }


@dataclass(frozen=True)
class SplitResult:
    match: Histogram
    rest: Histogram
    match_records: int
    rest_records: int
    missing_attribute: int

    def to_dict(self) -> dict:
        return {
            'match': {'label': self.match.label, 'records': self.match_records, 'N': self.match.N},
            'rest': {'label': self.rest.label, 'records': self.rest_records, 'N': self.rest.N},
            'missing_attribute': self.missing_attribute,
        }


def digit_shift(before: DigitProfile, after: DigitProfile) -> dict[str, dict[str, int]]:
    """Per last digit, how many years were created and how many disappeared."""
    shift = {}
    for digit in range(10):
        delta = after[digit] - before[digit]
        shift[str(digit)] = {'created': max(delta, 0), 'disappeared': max(-delta, 0)}
    return shift


def closest_alternative(birth_year: int, alternatives) -> tuple[int, bool]:
    """
    Alternative year nearest to birth_year; equidistant candidates resolve
    to the smaller year and are flagged as a tie.
    """
    ordered = sorted(alternatives, key=lambda y: (abs(y - birth_year), y))
    best = ordered[0]
    tie = len(ordered) > 1 and abs(ordered[1] - birth_year) == abs(best - birth_year)
    return best, tie


def substitute_closest(rs: RecordSet) -> tuple[RecordSet, SubstitutionReport]:
    """
    Replace every stated birth year that has alternatives by the closest one.

    Records with alternatives but no stated birth year are skipped and
    listed in the report.
    """
    before = last_digit_profile(rs.birth_years())

    updated, differences, ties, skipped = [], [], [], []
    for record in rs:
        if not record.alternative_years:
            updated.append(record)
            continue
        if record.birth_year is None:
            skipped.append(record.id)
            updated.append(record)
            continue

        chosen, tie = closest_alternative(record.birth_year, record.alternative_years)
        if tie:
            ties.append(record.id)
        differences.append(abs(chosen - record.birth_year))
        remaining = (record.alternative_years - {chosen}) | {record.birth_year}
        updated.append(record.with_birth_year(chosen, remaining))

    if ties:
        logger.info(f"{len(ties)} records had equidistant alternatives; smaller year chosen")
    if skipped:
        logger.info(f"{len(skipped)} records with alternatives but no stated birth year skipped")

    result = RecordSet(tuple(updated))
    report = SubstitutionReport(
        substituted_count=len(differences),
        digit_profile_before=before,
        digit_profile_after=last_digit_profile(result.birth_years()),
        abs_diff_histogram=difference_histogram(differences),
        tie_flagged_ids=tuple(ties),
        skipped_without_birth_year=tuple(skipped),
    )
    return result, report


def difference_histogram(differences, label: str = 'abs_diff') -> Histogram:
    """Histogram of non-negative differences over keys 0..max."""
    counts = np.bincount(np.asarray(differences, dtype=np.int64), minlength=1)
    return Histogram(label, 0, counts)


def split_by_attribute(rs: RecordSet, key: str, value: str,
                       labels: tuple[str, str] | None = None) -> SplitResult:
    """
    Partition records by exact attribute equality and build one histogram
    per side. Records lacking the attribute go to the rest side.

    Raises:
        ValidationError: key is not an attribute of any record
        NoDataError: one of the sides has no birth years
    """
    if key not in rs.attribute_keys:
        raise ValidationError(f"Unknown attribute '{key}'")

    match_label, rest_label = labels or (f"{key}={value}", f"{key}!={value}")
    match_years, rest_years = [], []
    match_records = rest_records = missing = 0
    for record in rs:
        if key not in record.attributes:
            missing += 1
        if record.attributes.get(key) == value:
            match_records += 1
            if record.birth_year is not None:
                match_years.append(record.birth_year)
        else:
            rest_records += 1
            if record.birth_year is not None:
                rest_years.append(record.birth_year)

    if missing:
        logger.info(f"{missing} records lack attribute '{key}' and were put on the rest side")
    if not match_years and not rest_years:
        raise NoDataError(f"Neither side of the split on {key}={value} has birth years")
    if not match_years:
        raise NoDataError(f"No birth years among records with {key}={value}")
    if not rest_years:
        raise NoDataError(f"No birth years among records with {key}!={value}")

    return SplitResult(
        histogram_from_years(match_years, match_label),
        histogram_from_years(rest_years, rest_label),
        match_records,
        rest_records,
        missing,
    )


def augment_and_rank(ds: Dataset, extra, mode: str = DEFAULT_FIT_MODE) -> tuple[TvorModel, list[ScoreRecord]]:
    """
    Add extra histograms to the dataset, refit over the union and re-rank.
    Extra histograms bypass the dataset's size filter.

    Raises:
        ConflictError: an extra label already exists in the dataset
    """
    extra = list(extra)
    existing = set(ds.labels)
    collisions = sorted({h.label for h in extra if h.label in existing})
    if collisions:
        raise ConflictError(f"Labels already in dataset: {', '.join(collisions)}")

    union = Dataset(tuple(ds.histograms) + tuple(extra), min_size_filter=0)
    return fit_and_rank(union, mode)


def exclude_lists(ds: Dataset, labels) -> Dataset:
    """
    Drop the named histograms. Labels the size filter already removed are
    accepted and have nothing left to drop.

    Raises:
        NotFoundError: some labels were never part of the dataset
    """
    labels = set(labels)
    unknown = sorted(labels - set(ds.labels) - set(ds.dropped_labels))
    if unknown:
        raise NotFoundError(f"Unknown labels: {', '.join(unknown)}")

    filtered = sorted(labels & set(ds.dropped_labels))
    if filtered:
        logger.info(f"Already below min_size_filter: {', '.join(filtered)}")
    result = ds.subset(lambda h: h.label not in labels)
    logger.info(f"Excluded {len(ds) - len(result)} of {len(ds)} histograms, {len(result)} remain")
    return result


def record_set_to_dataset(rs: RecordSet, min_size_filter: int = DEFAULT_MIN_SIZE) -> tuple[Dataset, IngestionReport]:
    """
    One birth-year histogram per list. Records without a birth year are
    excluded and counted; lists with no birth years at all are dropped.
    """
    years_by_list = {}
    without_year = 0
    for record in rs:
        years = years_by_list.setdefault(record.list_id, [])
        if record.birth_year is None:
            without_year += 1
        else:
            years.append(record.birth_year)

    histograms = [histogram_from_years(years, list_id)
                  for list_id, years in sorted(years_by_list.items()) if years]
    dataset = Dataset.from_histograms(histograms, min_size_filter)

    if without_year:
        logger.info(f"{without_year} records without a birth year excluded")
    report = IngestionReport(
        records_total=len(rs),
        records_without_year=without_year,
        lists_total=len(years_by_list),
        lists_kept=len(dataset),
        lists_below_min_size=len(years_by_list) - len(dataset),
    )
    return dataset, report


def whipple_by_list(rs: RecordSet, window=DEFAULT_WHIPPLE_WINDOW,
                    reference_year: int = 1942) -> dict[str, WhippleResult | None]:
    """Whipple's index of each list's birth years; None where the window is empty."""
    results = {}
    for list_id in rs.list_ids:
        years = rs.for_list(list_id).birth_years()
        try:
            results[list_id] = whipple_from_years(years, window, reference_year)
        except NoDataError:
            results[list_id] = None
    return results


def split_and_augment(rs: RecordSet, key: str, value: str, ds: Dataset,
                      mode: str = DEFAULT_FIT_MODE) -> tuple[SplitResult, TvorModel, list[ScoreRecord]]:
    """Split records on key=value and rank both sides inside the dataset."""
    split = split_by_attribute(rs, key, value)
    model, scores = augment_and_rank(ds, (split.match, split.rest), mode)
    return split, model, scores
