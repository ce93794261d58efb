"""Height-ordered access to a chain: raw block files, a JSON-RPC node, or memory.

All sources answer the same three questions (best height, hash at a
height, block for a hash); :func:`iterate` turns that into an ordered
stream of ``(height, block)`` pairs.
"""
from __future__ import annotations

import abc
import itertools
import logging
import os
import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import requests

from .errors import (AuthFailedError, ChainviewError, GenesisNotFoundError, ParseError,
                     RangeError, RpcError, ScanError, SourceError, UnreachableError)
from .model import ZERO_HASH, Block, Hash256, double_sha256
from .parser import NETWORK_MAGIC, iter_block_records, parse_block

log = logging.getLogger(__name__)

RPC_USER_ENV = "CHAINVIEW_RPC_USER"
RPC_PASS_ENV = "CHAINVIEW_RPC_PASS"


class ChainSource(abc.ABC):
    @abc.abstractmethod
    def best_height(self) -> int: ...

    @abc.abstractmethod
    def hash_at(self, height: int) -> Hash256: ...

    @abc.abstractmethod
    def block_by_hash(self, block_hash: Hash256) -> Block: ...

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


class MemorySource(ChainSource):
    """Main-chain blocks held as serialized payloads, parsed on demand."""

    def __init__(self, payloads: Sequence[bytes]):
        self._payloads: Dict[Hash256, bytes] = {}
        self._chain: List[Hash256] = []
        for raw in payloads:
            h = double_sha256(raw[:80])
            self._payloads[h] = raw
            self._chain.append(h)

    @classmethod
    def from_blocks(cls, blocks: Iterable[Block]) -> "MemorySource":
        return cls([b.serialize() for b in blocks])

    def best_height(self) -> int:
        if not self._chain:
            raise RangeError("source holds no blocks")
        return len(self._chain) - 1

    def hash_at(self, height: int) -> Hash256:
        if not 0 <= height < len(self._chain):
            raise RangeError(f"height {height} outside 0..{len(self._chain) - 1}")
        return self._chain[height]

    def block_by_hash(self, block_hash: Hash256) -> Block:
        try:
            return parse_block(self._payloads[block_hash])
        except KeyError:
            raise SourceError(f"unknown block {block_hash}") from None


def synthetic_source(chain) -> MemorySource:
    """Source over the main chain of a :class:`chaingen.SyntheticChain`."""
    return MemorySource(chain.main_chain_payloads())


# -- block files -------------------------------------------------------------

@dataclass
class FileIndex:
    by_hash: Dict[Hash256, Tuple[str, int, int]] = field(default_factory=dict)
    main_chain: List[Hash256] = field(default_factory=list)
    orphans: int = 0


def _scan_headers(paths, magic):
    """Pass 1: header hash -> location, plus prev links, in first-seen order."""
    locations: Dict[Hash256, Tuple[str, int, int]] = {}
    prev_of: Dict[Hash256, Hash256] = {}
    for path in paths:
        path = os.fspath(path)
        with open(path, "rb") as fh:
            for offset, payload in iter_block_records(fh, magic):
                if len(payload) < 80:
                    raise ParseError(f"{path}: record at byte {offset} shorter than a header")
                h = double_sha256(payload[:80])
                if h in locations:
                    continue
                locations[h] = (path, offset, len(payload))
                prev_of[h] = Hash256(payload[4:36])
    return locations, prev_of


def build_file_index(paths, genesis_hash: Optional[Hash256] = None,
                     magic: bytes = NETWORK_MAGIC["mainnet"]) -> FileIndex:
    """Index blk-style files and resolve the main chain by block count.

    At each fork the branch with the most descendants wins; equal branches
    fall back to first-seen order. With ``genesis_hash`` None the first block
    whose parent is the zero hash is taken as genesis.
    """
    locations, prev_of = _scan_headers(list(paths), magic)
    if genesis_hash is None:
        genesis_hash = next((h for h, p in prev_of.items() if p == ZERO_HASH), None)
    if genesis_hash is None or genesis_hash not in locations:
        raise GenesisNotFoundError(f"genesis {genesis_hash} not present in block files")

    children: Dict[Hash256, List[Hash256]] = {}
    for h, p in prev_of.items():
        if h != genesis_hash:
            children.setdefault(p, []).append(h)

    # longest path below each node, computed iteratively (chains are deep)
    depth: Dict[Hash256, int] = {}
    stack = [(genesis_hash, False)]
    while stack:
        node, expanded = stack.pop()
        kids = children.get(node, ())
        if expanded:
            depth[node] = 1 + max((depth[k] for k in kids), default=0)
            continue
        stack.append((node, True))
        stack.extend((k, False) for k in kids)

    main_chain = [genesis_hash]
    node = genesis_hash
    while children.get(node):
        best = None
        for kid in children[node]:
            if best is None or depth[kid] > depth[best]:
                best = kid
        main_chain.append(best)
        node = best

    index = FileIndex(locations, main_chain, len(locations) - len(main_chain))
    log.info("indexed %d blocks, main chain %d, %d orphaned",
             len(locations), len(main_chain), index.orphans)
    return index


class FileSource(ChainSource):
    def __init__(self, paths, network: str = "mainnet", genesis_hash: Optional[Hash256] = None):
        self.paths = [os.fspath(p) for p in paths]
        self.magic = NETWORK_MAGIC[network]
        self.index = build_file_index(self.paths, genesis_hash, self.magic)
        self._handles = {}
        self._lock = threading.Lock()

    @classmethod
    def from_dir(cls, blocks_dir, network="mainnet", **kw) -> "FileSource":
        paths = sorted(p for p in (os.path.join(blocks_dir, n) for n in os.listdir(blocks_dir))
                       if os.path.basename(p).startswith("blk") and p.endswith(".dat"))
        return cls(paths, network, **kw)

    def best_height(self) -> int:
        return len(self.index.main_chain) - 1

    def hash_at(self, height: int) -> Hash256:
        if not 0 <= height < len(self.index.main_chain):
            raise RangeError(f"height {height} outside 0..{self.best_height()}")
        return self.index.main_chain[height]

    def block_by_hash(self, block_hash: Hash256) -> Block:
        try:
            path, offset, length = self.index.by_hash[block_hash]
        except KeyError:
            raise SourceError(f"unknown block {block_hash}") from None
        with self._lock:
            fh = self._handles.get(path)
            if fh is None:
                fh = self._handles[path] = open(path, "rb")
            fh.seek(offset)
            payload = fh.read(length)
        return parse_block(payload)

    def close(self) -> None:
        with self._lock:
            for fh in self._handles.values():
                fh.close()
            self._handles.clear()


# -- JSON-RPC ----------------------------------------------------------------

class RpcSource(ChainSource):
    """Bitcoin Core JSON-RPC 1.0 client (getblockcount/getblockhash/getblock)."""

    def __init__(self, endpoint: str, user: Optional[str] = None, password: Optional[str] = None,
                 timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout
        self._session = requests.Session()
        user = user if user is not None else os.environ.get(RPC_USER_ENV)
        password = password if password is not None else os.environ.get(RPC_PASS_ENV)
        if user is not None:
            self._session.auth = (user, password or "")
        self._ids = itertools.count(1)

    def call(self, method: str, *params):
        body = {"jsonrpc": "1.0", "id": next(self._ids), "method": method, "params": list(params)}
        try:
            resp = self._session.post(self.endpoint, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise UnreachableError(f"{self.endpoint}: {exc}") from exc
        if resp.status_code in (401, 403):
            raise AuthFailedError(f"{self.endpoint}: HTTP {resp.status_code}")
        try:
            payload = resp.json()
        except ValueError:
            raise RpcError(resp.status_code, f"non-JSON response: {resp.text[:200]!r}") from None
        err = payload.get("error") if isinstance(payload, dict) else None
        if err:
            raise RpcError(err.get("code"), err.get("message"))
        if resp.status_code != 200 or not isinstance(payload, dict):
            raise RpcError(resp.status_code, "unexpected response")
        return payload.get("result")

    def best_height(self) -> int:
        return int(self.call("getblockcount"))

    def hash_at(self, height: int) -> Hash256:
        return Hash256.from_hex(self.call("getblockhash", height))

    def block_by_hash(self, block_hash: Hash256) -> Block:
        raw_hex = self.call("getblock", block_hash.to_hex(), 0)
        try:
            raw = bytes.fromhex(raw_hex)
        except (TypeError, ValueError):
            raise ParseError(f"getblock returned non-hex payload for {block_hash}") from None
        return parse_block(raw)

    def close(self) -> None:
        self._session.close()


def rpc_source(endpoint: str, credentials: Optional[Tuple[str, str]] = None, **kw) -> RpcSource:
    user, password = credentials if credentials else (None, None)
    return RpcSource(endpoint, user, password, **kw)


# -- iteration ---------------------------------------------------------------

def _fetch(source: ChainSource, height: int) -> Block:
    return replace(source.block_by_hash(source.hash_at(height)), height=height)


def iterate(source: ChainSource, start: int = 0, end: Optional[int] = None,
            prefetch: int = 0) -> Iterator[Tuple[int, Block]]:
    """Yield ``(height, block)`` for start..end inclusive, strictly ascending.

    Each step fetches the hash at the height, then the block by hash.
    ``prefetch`` > 0 fetches that many blocks ahead on worker threads;
    delivery order is unchanged.
    """
    best = source.best_height()
    if end is None:
        end = best
    if not (0 <= start <= end <= best):
        raise RangeError(f"range {start}..{end} invalid for chain with best height {best}")

    if prefetch <= 0:
        for height in range(start, end + 1):
            try:
                block = _fetch(source, height)
            except ChainviewError as exc:
                raise ScanError(height, exc) from exc
            yield height, block
        return

    with ThreadPoolExecutor(max_workers=prefetch) as pool:
        pending = deque()
        heights = iter(range(start, end + 1))
        for height in itertools.islice(heights, prefetch):
            pending.append((height, pool.submit(_fetch, source, height)))
        while pending:
            height, fut = pending.popleft()
            try:
                block = fut.result()
            except ChainviewError as exc:
                for _, f in pending:
                    f.cancel()
                raise ScanError(height, exc) from exc
            nxt = next(heights, None)
            if nxt is not None:
                pending.append((nxt, pool.submit(_fetch, source, nxt)))
            yield height, block
