"""BTC/USD daily exchange rates from a CSV file or a Coindesk-shaped HTTP API.

HTTP lookups are cached per date in a ``date,rate`` CSV so later runs can
replay offline.
"""
from __future__ import annotations

import csv
import json
import logging
import os
import threading
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Dict, Optional

import requests

from ..errors import DateNotCoveredError, FetchFailedError, MalformedLineError

log = logging.getLogger(__name__)

DEFAULT_RATES_URL = "https://api.coindesk.com/v1/bpi/historical/close.json"
RATES_URL_ENV = "CHAINVIEW_RATES_URL"


def _parse_rate(text, line_number=0) -> Decimal:
    try:
        rate = Decimal(str(text).strip())
    except InvalidOperation:
        raise MalformedLineError(line_number, str(text)) from None
    if not rate.is_finite() or rate < 0:
        raise MalformedLineError(line_number, str(text))
    return rate


def read_rates_csv(path) -> Dict[str, Decimal]:
    rates = {}
    with open(path, encoding="utf-8", newline="") as fh:
        for number, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            if number == 1 and row[0].strip().lower() == "date":
                continue
            if len(row) != 2:
                raise MalformedLineError(number, ",".join(row))
            rates[row[0].strip()] = _parse_rate(row[1], number)
    return rates


def write_rates_csv(path, rates: Dict[str, Decimal]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "rate"])
        for day in sorted(rates):
            w.writerow([day, str(rates[day])])


class RateTable:
    """date (YYYY-MM-DD) -> USD per BTC.

    With ``url`` set, unknown dates are fetched once and appended to
    ``cache_path``; with ``url`` None the table is purely file-backed and
    lookups outside it raise DateNotCoveredError.
    """

    def __init__(self, rates: Optional[Dict[str, Decimal]] = None, *, url: Optional[str] = None,
                 cache_path=None, session: Optional[requests.Session] = None, timeout=10.0):
        self.rates: Dict[str, Decimal] = {k: _parse_rate(v) for k, v in (rates or {}).items()}
        self.url = url
        self.cache_path = Path(cache_path) if cache_path else None
        self.timeout = timeout
        self._session = session
        self._lock = threading.Lock()

    @property
    def source(self) -> str:
        return "http-endpoint" if self.url else "file"

    @classmethod
    def from_csv(cls, path) -> "RateTable":
        return cls(read_rates_csv(path))

    @classmethod
    def from_http(cls, cache_path=None, url: Optional[str] = None, **kw) -> "RateTable":
        url = url or os.environ.get(RATES_URL_ENV) or DEFAULT_RATES_URL
        rates = {}
        if cache_path and Path(cache_path).exists():
            rates = read_rates_csv(cache_path)
        return cls(rates, url=url, cache_path=cache_path, **kw)

    def __contains__(self, day):
        return day in self.rates

    def __len__(self):
        return len(self.rates)

    def get(self, day: str) -> Decimal:
        try:
            return self.rates[day]
        except KeyError:
            pass
        if self.url is None:
            raise DateNotCoveredError(day)
        with self._lock:
            if day not in self.rates:
                self._fetch(day)
        return self.rates[day]

    def _fetch(self, day: str) -> None:
        session = self._session or requests
        try:
            resp = session.get(self.url, params={"start": day, "end": day}, timeout=self.timeout)
            resp.raise_for_status()
            payload = json.loads(resp.text, parse_float=Decimal, parse_int=Decimal)
        except (requests.RequestException, ValueError) as exc:
            raise FetchFailedError(f"rate fetch for {day} failed: {exc}") from exc
        bpi = payload.get("bpi") if isinstance(payload, dict) else None
        if not isinstance(bpi, dict) or day not in bpi:
            raise DateNotCoveredError(day)
        rate = _parse_rate(bpi[day])
        self.rates[day] = rate
        if self.cache_path is not None:
            new_file = not self.cache_path.exists()
            with open(self.cache_path, "a", encoding="utf-8", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                if new_file:
                    w.writerow(["date", "rate"])
                w.writerow([day, str(rate)])
        log.debug("fetched rate %s for %s", rate, day)


def get_rate(table: RateTable, day: str) -> Decimal:
    return table.get(day)
