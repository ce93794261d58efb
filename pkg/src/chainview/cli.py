"""chainview command line: gen, scan, build, analyze, bench."""
from __future__ import annotations

import csv
import functools
import json
import logging
import os
import sys
from fractions import Fraction
from pathlib import Path

import click

from . import analytics
from .chaingen import GenSpec, synthesize, synthetic_rates
from .enrichment.opreturn import ProtocolTable
from .enrichment.rates import RateTable, write_rates_csv
from .enrichment.tags import TagMap, load_tags
from .errors import ChainviewError
from .navigator import deep_scan
from .parser import NETWORK_MAGIC
from .sinks import make_sink, read_records
from .sources import FileSource, RpcSource, synthetic_source
from .views import VIEW_BUILDERS

log = logging.getLogger("chainview")

NETWORKS = list(NETWORK_MAGIC)


def source_options(fn):
    opts = [
        click.option("--source", "source_kind", type=click.Choice(["files", "rpc", "synthetic"]),
                     default="files", show_default=True),
        click.option("--blocks-dir", type=click.Path(exists=True),
                     help="Directory of blk*.dat files, or a single block file."),
        click.option("--rpc-url", default="http://127.0.0.1:8332/", show_default=True),
        click.option("--network", type=click.Choice(NETWORKS), default="mainnet",
                     show_default=True),
        click.option("--seed", type=int, default=42, show_default=True,
                     help="Synthetic source seed."),
        click.option("--blocks", "n_blocks", type=int, default=200, show_default=True,
                     help="Synthetic source length."),
        click.option("--start", type=int, default=None),
        click.option("--end", type=int, default=None),
        click.option("--prefetch", type=int, default=0, help="Blocks fetched ahead."),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def open_source(source_kind, blocks_dir, rpc_url, network, seed, n_blocks):
    if source_kind == "files":
        if not blocks_dir:
            raise click.UsageError("--blocks-dir is required with --source files")
        if os.path.isfile(blocks_dir):
            return FileSource([blocks_dir], network)
        return FileSource.from_dir(blocks_dir, network)
    if source_kind == "rpc":
        return RpcSource(rpc_url)
    return synthetic_source(synthesize(GenSpec(seed=seed, n_blocks=n_blocks, network=network)))


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ChainviewError as exc:
            raise click.ClickException(str(exc)) from exc
    return wrapper


@click.group()
@click.option("-v", "--verbose", count=True)
def main(verbose):
    """Scan a Bitcoin chain into enriched views and analyse them."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--blocks", "n_blocks", type=int, default=200, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True, help="Block file to write.")
@click.option("--truth", type=click.Path(dir_okay=False), help="Ground truth JSON.")
@click.option("--rates", "rates_out", type=click.Path(dir_okay=False),
              help="Also write a date,rate CSV covering the chain.")
@click.option("--tags", "tags_out", type=click.Path(dir_okay=False),
              help="Also write the address<TAB>tag file of the planted services.")
@click.option("--fork-at", type=int, default=None)
@click.option("--network", type=click.Choice(NETWORKS), default="mainnet", show_default=True)
@click.option("--txs-per-block", nargs=2, type=int, default=(0, 20), show_default=True)
@handle_errors
def gen(seed, n_blocks, out, truth, rates_out, tags_out, fork_at, network, txs_per_block):
    """Generate a deterministic synthetic chain."""
    chain = synthesize(GenSpec(seed=seed, n_blocks=n_blocks, fork_at=fork_at, network=network,
                               txs_per_block=tuple(txs_per_block)))
    chain.write(out)
    if truth:
        Path(truth).write_text(chain.truth.to_json(), encoding="utf-8")
    if rates_out:
        write_rates_csv(rates_out, synthetic_rates(chain.truth))
    if tags_out:
        TagMap(chain.truth.tags).write(tags_out)
    click.echo(json.dumps({"blocks": n_blocks, "txs": chain.truth.tx_count,
                           "orphans": len(chain.truth.orphan_hashes), "out": out}))


@main.command()
@source_options
@handle_errors
def scan(source_kind, blocks_dir, rpc_url, network, seed, n_blocks, start, end, prefetch):
    """Deep scan from genesis; prints {blocks, txs, utxo_peak, warnings}."""
    source = open_source(source_kind, blocks_dir, rpc_url, network, seed, n_blocks)
    with source:
        report = deep_scan(source, 0 if start is None else start, end, prefetch=prefetch)
    click.echo(json.dumps(report.as_dict()))


@main.command()
@click.argument("view", type=click.Choice(list(VIEW_BUILDERS)))
@click.option("--sink", "sink_kind", type=click.Choice(["jsonl", "csv", "sql"]), default="jsonl",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option("--rates", "rates_path", type=click.Path(exists=True, dir_okay=False),
              help="date,rate CSV (rates and fees views).")
@click.option("--rates-http", is_flag=True,
              help="Fetch rates over HTTP (CHAINVIEW_RATES_URL), caching into --rates-cache.")
@click.option("--rates-cache", type=click.Path(dir_okay=False))
@click.option("--tags", "tags_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--protocols", "protocols_path", type=click.Path(exists=True, dir_okay=False))
@source_options
@handle_errors
def build(view, sink_kind, out, rates_path, rates_http, rates_cache, tags_path, protocols_path,
          source_kind, blocks_dir, rpc_url, network, seed, n_blocks, start, end, prefetch):
    """Build one view into a sink."""
    kwargs = {"start": start, "end": end, "prefetch": prefetch}
    if view in ("rates", "fees"):
        if rates_http:
            kwargs["rates"] = RateTable.from_http(rates_cache)
        elif rates_path:
            kwargs["rates"] = RateTable.from_csv(rates_path)
        else:
            raise click.UsageError(f"the {view} view needs --rates PATH or --rates-http")
        if view == "fees" and start is None:
            kwargs["start"] = 0
    elif view == "tags":
        if not tags_path:
            raise click.UsageError("the tags view needs --tags PATH")
        kwargs["tags"] = load_tags(tags_path)
        kwargs["network"] = network
    elif view == "opreturn":
        kwargs["protocols"] = (ProtocolTable.load(protocols_path) if protocols_path
                               else ProtocolTable.default())

    source = open_source(source_kind, blocks_dir, rpc_url, network, seed, n_blocks)
    with source:
        report = VIEW_BUILDERS[view](source, make_sink(sink_kind, out), **kwargs)
    click.echo(json.dumps(report.as_dict()))


def _fmt(x, places=6):
    if x is None:
        return ""
    if isinstance(x, Fraction):
        scaled = round(x * 10 ** places)
        sign = "-" if scaled < 0 else ""
        whole, frac = divmod(abs(scaled), 10 ** places)
        return f"{sign}{whole}.{frac:0{places}d}"
    if isinstance(x, float):
        return f"{x:.{places}f}"
    return x


ANALYSES = ("avg-io", "protocols", "rate-buckets", "whales", "tag-daily")
ANALYSIS_VIEW = {"avg-io": "basic", "protocols": "opreturn", "rate-buckets": "rates",
                 "whales": "fees", "tag-daily": "tags"}


@main.command()
@click.argument("analysis", type=click.Choice(ANALYSES))
@click.option("--in", "in_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Output of any sink (.jsonl, .csv, .sql).")
@click.option("--format", "fmt", type=click.Choice(["csv", "jsonl"]), default="csv",
              show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), help="Defaults to stdout.")
@click.option("--min-count", type=int, default=1000, show_default=True)
@click.option("--bucket-width", type=float, default=300, show_default=True)
@click.option("--buckets", "n_buckets", type=int, default=7, show_default=True)
@click.option("--prefix", default="SatoshiDICE", show_default=True)
@click.option("--exclude-coinbase", is_flag=True)
@handle_errors
def analyze(analysis, in_path, fmt, out, min_count, bucket_width, n_buckets, prefix,
            exclude_coinbase):
    """Run one analytic over a view file."""
    records = read_records(in_path, ANALYSIS_VIEW[analysis])
    if analysis == "avg-io":
        header = ["date", "avg_in", "avg_out"]
        rows = [list(r) for r in analytics.avg_io_by_date(records)]
    elif analysis == "protocols":
        header = ["protocol", "count"]
        rows = [list(r) for r in analytics.protocol_counts(records, min_count)]
    elif analysis == "rate-buckets":
        width = int(bucket_width) if float(bucket_width).is_integer() else bucket_width
        header = ["bucket", "avg_btc", "count"]
        rows = [[b.label, b.avg_btc, b.count]
                for b in analytics.avg_output_by_rate_bucket(records, width, n_buckets)]
    elif analysis == "whales":
        exclude = analytics.coinbase_txids(records) if exclude_coinbase else ()
        rep = analytics.whale_transactions(records, exclude)
        click.echo(json.dumps({"mean_usd": float(rep.mean), "sigma_usd": rep.sigma,
                               "threshold_usd": rep.threshold, "records": rep.count,
                               "whales": len(rep.whales)}), err=True)
        header = ["txHash", "blockHash", "date", "fee", "rate", "fee_usd"]
        rows = [[r.txHash, r.blockHash, r.date, r.fee, str(r.rate), analytics.fee_usd(r)]
                for r in rep.whales]
    else:
        header = ["date", "count"]
        rows = [list(r) for r in analytics.daily_tx_to_tag_prefix(records, prefix)]

    fh = open(out, "w", encoding="utf-8", newline="") if out else sys.stdout
    try:
        if fmt == "csv":
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            w.writerows([_fmt(v) for v in row] for row in rows)
        else:
            for row in rows:
                fh.write(json.dumps(dict(zip(header, (_fmt(v) for v in row)))) + "\n")
    finally:
        if out:
            fh.close()


@main.command()
@click.option("--blocks", "n_blocks", type=int, default=10_000, show_default=True)
@click.option("--seed", type=int, default=42, show_default=True)
@click.option("--out-dir", type=click.Path(file_okay=False), default="bench-out",
              show_default=True)
@click.option("--json", "as_json", is_flag=True, help="Emit one JSON object per row.")
@handle_errors
def bench(n_blocks, seed, out_dir, as_json):
    """Create/query/size per view and sink on a synthetic chain (report only)."""
    from .bench import format_table, run_bench

    rows = run_bench(n_blocks, seed, out_dir)
    if as_json:
        for row in rows:
            click.echo(json.dumps(row))
    else:
        click.echo(format_table(rows))


if __name__ == "__main__":
    main()
