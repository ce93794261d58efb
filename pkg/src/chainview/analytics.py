"""The five aggregations over view records.

All accumulation is exact (integers and Fractions); floats appear only
when rendering, and for the standard deviation, which is irrational in
general. Whale membership is decided exactly, without going through the
float threshold.
"""
from __future__ import annotations

import logging
import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Collection, Iterable, List, NamedTuple, Optional, Tuple

from .errors import EmptyInputError
from .model import COIN

log = logging.getLogger(__name__)


class DateIO(NamedTuple):
    date: str
    avg_inputs: Fraction
    avg_outputs: Fraction


def avg_io_by_date(records: Iterable) -> List[DateIO]:
    """Mean number of inputs and outputs per transaction, grouped by date."""
    acc = defaultdict(lambda: [0, 0, 0])
    for r in records:
        a = acc[r.date]
        a[0] += 1
        a[1] += len(r.inputs)
        a[2] += len(r.outputs)
    return [DateIO(d, Fraction(i, n), Fraction(o, n))
            for d, (n, i, o) in sorted(acc.items())]


def protocol_counts(records: Iterable, min_count: int = 1000) -> List[Tuple[str, int]]:
    """Records per protocol, keeping only counts strictly above ``min_count``."""
    counts = Counter(r.protocol for r in records)
    kept = [(p, c) for p, c in counts.items() if c > min_count]
    return sorted(kept, key=lambda pc: (-pc[1], pc[0]))


class Bucket(NamedTuple):
    label: str
    count: int
    avg_btc: Optional[Fraction]


def bucket_label(index: int, width) -> str:
    return f"{_num(index * width)}-{_num((index + 1) * width)}"


def _num(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else str(float(x))


def avg_output_by_rate_bucket(records: Iterable, bucket_width=300, n_buckets: int = 7
                              ) -> List[Bucket]:
    """Average ``outputSum`` (BTC) per half-open exchange-rate bucket.

    Every regular bucket is reported, empty ones with ``avg_btc`` None.
    Rates at or beyond the last bucket land in an overflow bucket.
    """
    width = Fraction(Decimal(bucket_width))
    sums = [0] * (n_buckets + 1)
    counts = [0] * (n_buckets + 1)
    for r in records:
        k = math.floor(Fraction(r.rate) / width)
        if k < 0:
            raise ValueError(f"negative rate {r.rate} for {r.txHash}")
        k = min(k, n_buckets)
        sums[k] += r.outputSum
        counts[k] += 1
    if counts[n_buckets]:
        log.warning("%d records above %s USD put in overflow bucket",
                    counts[n_buckets], _num(width * n_buckets))
    out = []
    for k in range(n_buckets + 1):
        if k == n_buckets and not counts[k]:
            break
        label = bucket_label(k, width) if k < n_buckets else f"{_num(width * n_buckets)}+"
        avg = Fraction(sums[k], counts[k] * COIN) if counts[k] else None
        out.append(Bucket(label, counts[k], avg))
    return out


def fee_usd(record) -> Fraction:
    return Fraction(record.fee, COIN) * Fraction(record.rate)


@dataclass
class WhaleReport:
    mean: Fraction
    variance: Fraction
    whales: list
    count: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.variance)

    @property
    def threshold(self) -> float:
        return float(self.mean) + 2 * self.sigma


def whale_transactions(records: Iterable, exclude: Collection[str] = ()) -> WhaleReport:
    """Transactions whose USD fee exceeds mean + 2 population sigma.

    ``exclude`` is a set of txHashes (e.g. coinbases) left out of both the
    statistics and the result.
    """
    items = [(r, fee_usd(r)) for r in records if r.txHash not in exclude]
    if not items:
        raise EmptyInputError("whale detection needs at least one fee record")
    n = len(items)
    mean = sum((f for _, f in items), Fraction(0)) / n
    variance = sum(((f - mean) ** 2 for _, f in items), Fraction(0)) / n
    # f > mean + 2*sigma  <=>  f - mean > 0 and (f - mean)^2 > 4*variance
    whales = [(r, f) for r, f in items if f > mean and (f - mean) ** 2 > 4 * variance]
    whales.sort(key=lambda rf: (-rf[1], rf[0].txHash))
    return WhaleReport(mean, variance, [r for r, _ in whales], n)


def daily_tx_to_tag_prefix(records: Iterable, prefix: str) -> List[Tuple[str, int]]:
    """Distinct transactions per date paying an address whose tag starts with ``prefix``."""
    seen = defaultdict(set)
    for r in records:
        if r.tag.startswith(prefix):
            seen[r.date].add(r.txHash)
    return [(d, len(txs)) for d, txs in sorted(seen.items())]


def coinbase_txids(fee_records: Iterable) -> set:
    """First transaction of every block, relying on scan order of a fees view."""
    firsts = {}
    for r in fee_records:
        firsts.setdefault(r.blockHash, r.txHash)
    return set(firsts.values())
