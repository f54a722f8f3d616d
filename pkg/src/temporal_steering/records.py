"""Measurement-record CSV files and finite-sample steering estimates.

File format (UTF-8, LF or CRLF line endings)::

    basis_a,outcome_a,basis_b,outcome_b,trial_id
    z,1,z,-1,0
    x,-1,z,1,1

Only rows with ``basis_a == basis_b`` enter the estimate; the others are
kept and counted.
"""

import csv
import io
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .steering import BASES, OUTCOMES, ConditionalTable, steering_parameter

HEADER = ("basis_a", "outcome_a", "basis_b", "outcome_b", "trial_id")


class RecordsFormatError(ValueError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class OutcomeRecord(NamedTuple):
    basis_a: str
    outcome_a: int
    basis_b: str
    outcome_b: int
    trial_id: int

    @property
    def matched(self):
        return self.basis_a == self.basis_b


def _read_text(source):
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, str):
        return source
    else:
        data = source.read()
        if isinstance(data, str):
            return data
    return data.decode("utf-8")


def _parse_basis(value, line):
    if value not in BASES:
        raise RecordsFormatError(line, f"unknown basis {value!r}")
    return value


def _parse_outcome(value, line):
    if value not in ("1", "-1"):
        raise RecordsFormatError(line, f"outcome must be 1 or -1, got {value!r}")
    return int(value)


def parse_records(source):
    """Parse a records CSV from bytes, text or a readable stream."""
    text = _read_text(source)
    if text.startswith("\ufeff"):
        text = text[1:]
    rows = csv.reader(io.StringIO(text, newline=""))
    records = []
    header_seen = False
    for row in rows:
        line = rows.line_num
        if not header_seen:
            if tuple(c.strip() for c in row) != HEADER:
                raise RecordsFormatError(line, f"bad header, expected {','.join(HEADER)}")
            header_seen = True
            continue
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != len(HEADER):
            raise RecordsFormatError(line, f"expected {len(HEADER)} fields, got {len(row)}")
        ba, oa, bb, ob, tid = (c.strip() for c in row)
        try:
            trial = int(tid)
        except ValueError:
            raise RecordsFormatError(line, f"trial_id must be an integer, got {tid!r}") from None
        if trial < 0:
            raise RecordsFormatError(line, "trial_id must be nonnegative")
        records.append(
            OutcomeRecord(
                _parse_basis(ba, line),
                _parse_outcome(oa, line),
                _parse_basis(bb, line),
                _parse_outcome(ob, line),
                trial,
            )
        )
    if not header_seen:
        raise RecordsFormatError(1, "missing header")
    return records


def write_records(records, stream):
    """Write records as CSV text with LF line endings."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(HEADER)
    for r in records:
        writer.writerow((r.basis_a, r.outcome_a, r.basis_b, r.outcome_b, r.trial_id))


@dataclass(frozen=True)
class CountTable:
    """``counts[i, a_idx, b_idx]`` over matched-basis trials, ``i`` indexing ``BASES``."""

    counts: np.ndarray
    mismatched: int = 0

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=np.int64)
        if c.shape != (len(BASES), 2, 2) or np.any(c < 0):
            raise ValueError("counts must be a nonnegative (3, 2, 2) array")
        object.__setattr__(self, "counts", c)

    @property
    def totals(self):
        return self.counts.sum(axis=(1, 2))

    @property
    def total(self):
        return int(self.counts.sum())


def _codes(records):
    """Category code ``4 * basis + 2 * a_idx + b_idx`` per record, -1 if mismatched."""
    codes = np.empty(len(records), dtype=np.int64)
    for k, r in enumerate(records):
        if r.basis_a != r.basis_b:
            codes[k] = -1
        else:
            codes[k] = (
                4 * BASES.index(r.basis_a)
                + 2 * OUTCOMES.index(r.outcome_a)
                + OUTCOMES.index(r.outcome_b)
            )
    return codes


def _counts_from_codes(codes):
    matched = codes[codes >= 0]
    counts = np.bincount(matched, minlength=4 * len(BASES)).reshape(len(BASES), 2, 2)
    return CountTable(counts, int(np.sum(codes < 0)))


def count_records(records):
    return _counts_from_codes(_codes(records))


def _table_from_counts(counts, smoothing, bases):
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")
    if bases is None:
        bases = tuple(b for b, n in zip(BASES, counts.totals) if n > 0)
        if not bases:
            raise ValueError("no matched-basis records")
    idx = [BASES.index(b) for b in bases]
    c = counts.counts[idx].astype(float)
    totals = c.sum(axis=(1, 2), keepdims=True)
    if smoothing == 0 and np.any(totals == 0):
        empty = [b for b, t in zip(bases, totals.ravel()) if t == 0]
        raise ValueError(f"no matched-basis records for basis {', '.join(empty)}")
    return ConditionalTable((c + smoothing) / (totals + 4 * smoothing), tuple(bases))


def estimate_table(records, smoothing=0.0, bases=None):
    """Joint-probability estimate with additive smoothing.

    ``bases`` defaults to every basis that has matched records.
    """
    return _table_from_counts(count_records(records), smoothing, bases)


def bootstrap_uncertainty(records, resamples=200, seed=0, smoothing=0.0, bases=None):
    """Nonparametric bootstrap of the steering parameter over trials.

    Resample ``k`` draws from its own generator seeded by ``(seed, k)``,
    so the result depends only on the data, ``resamples`` and ``seed``.
    Returns ``(s_mean, s_std)``.
    """
    if resamples < 2:
        raise ValueError("need at least 2 resamples")
    if len(records) < 2:
        raise ValueError("need at least 2 records to bootstrap")
    codes = _codes(records)
    if bases is None:
        bases = _table_from_counts(_counts_from_codes(codes), smoothing, None).bases
    n = len(codes)
    values = np.empty(resamples)
    for k in range(resamples):
        rng = np.random.default_rng([seed, k])
        sample = codes[rng.integers(n, size=n)]
        table = _table_from_counts(_counts_from_codes(sample), smoothing, bases)
        values[k] = steering_parameter(table).s_value
    return float(values.mean()), float(values.std(ddof=1))


def sample_records(table, trials, seed):
    """Draw matched-basis records from a known table.

    The basis is uniform over ``table.bases``; ``(a, b)`` follows that
    basis block.
    """
    rng = np.random.default_rng(seed)
    which = rng.integers(table.n_bases, size=trials)
    u = rng.random(trials)
    cdf = np.cumsum(table.joint.reshape(table.n_bases, 4), axis=1)
    cell = np.minimum((u[:, None] > cdf[which]).sum(axis=1), 3)
    signs = np.array(OUTCOMES)
    a = signs[cell // 2]
    b = signs[cell % 2]
    return [
        OutcomeRecord(table.bases[w], int(x), table.bases[w], int(y), k)
        for k, (w, x, y) in enumerate(zip(which, a, b))
    ]


def records_from_samples(samples):
    """Wrap ``steering.simulate_ordering`` output as records."""
    return [
        OutcomeRecord(BASES[i], int(a), BASES[i], int(b), k)
        for k, (i, a, b) in enumerate(np.asarray(samples))
    ]
