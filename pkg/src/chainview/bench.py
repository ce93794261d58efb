"""Create / query / size measurements per view and sink on a synthetic chain."""
from __future__ import annotations

import logging
import time
from pathlib import Path
from typing import Iterable, List, Optional

from . import analytics
from .chaingen import GenSpec, synthesize, synthetic_rates
from .enrichment.opreturn import ProtocolTable
from .enrichment.rates import RateTable
from .enrichment.tags import TagMap
from .errors import UnsupportedSchemaError
from .sinks import SINK_SUFFIX, make_sink, read_records
from .sources import synthetic_source
from .views import build_basic, build_fees, build_opreturn, build_rates, build_tags

log = logging.getLogger(__name__)

VIEWS = ("basic", "opreturn", "rates", "fees", "tags")

QUERIES = {
    "basic": analytics.avg_io_by_date,
    "opreturn": analytics.protocol_counts,
    "rates": analytics.avg_output_by_rate_bucket,
    "fees": analytics.whale_transactions,
    "tags": lambda recs: analytics.daily_tx_to_tag_prefix(recs, "SatoshiDICE"),
}


def run_bench(n_blocks: int = 10_000, seed: int = 42, out_dir=".", views: Iterable[str] = VIEWS,
              sinks: Iterable[str] = ("jsonl", "csv", "sql"),
              spec: Optional[GenSpec] = None) -> List[dict]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    spec = spec or GenSpec(seed=seed, n_blocks=n_blocks, network="mainnet")
    t0 = time.perf_counter()
    chain = synthesize(spec)
    log.info("generated %d blocks / %d txs in %.2fs", spec.n_blocks, chain.truth.tx_count,
             time.perf_counter() - t0)
    source = synthetic_source(chain)
    rates = RateTable(synthetic_rates(chain.truth))
    tags = TagMap(chain.truth.tags)
    protocols = ProtocolTable.default()

    rows = []
    for view in views:
        for sink_kind in sinks:
            path = out_dir / f"{view}{SINK_SUFFIX[sink_kind]}"
            row = {"view": view, "sink": sink_kind, "records": None, "create_s": None,
                   "query_s": None, "size_bytes": None}
            sink = make_sink(sink_kind, path)
            t0 = time.perf_counter()
            try:
                if view == "basic":
                    report = build_basic(source, sink)
                elif view == "opreturn":
                    report = build_opreturn(source, sink, protocols, start=0)
                elif view == "rates":
                    report = build_rates(source, sink, rates)
                elif view == "fees":
                    report = build_fees(source, sink, rates)
                else:
                    report = build_tags(source, sink, tags, network=spec.network)
            except UnsupportedSchemaError:
                row["note"] = "unsupported"
                rows.append(row)
                continue
            row["create_s"] = round(time.perf_counter() - t0, 4)
            row["records"] = report.records
            row["size_bytes"] = path.stat().st_size
            t0 = time.perf_counter()
            records = read_records(path, view)
            if records:
                QUERIES[view](records)
            row["query_s"] = round(time.perf_counter() - t0, 4)
            rows.append(row)
            log.info("%s/%s: %s", view, sink_kind, row)
    return rows


def format_table(rows: List[dict]) -> str:
    header = f"{'view':<9} {'sink':<6} {'records':>9} {'create_s':>9} {'query_s':>9} {'size':>12}"
    lines = [header, "-" * len(header)]
    for r in rows:
        if r.get("note"):
            lines.append(f"{r['view']:<9} {r['sink']:<6} {r['note']:>9}")
            continue
        lines.append(f"{r['view']:<9} {r['sink']:<6} {r['records']:>9} {r['create_s']:>9.3f} "
                     f"{r['query_s']:>9.3f} {r['size_bytes']:>12}")
    return "\n".join(lines)

