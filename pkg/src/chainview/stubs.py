"""In-process HTTP test doubles: a regtest-style JSON-RPC node and a
Coindesk-shaped historical rate endpoint. Used by the test suite and for
offline demos; they bind to 127.0.0.1 on an ephemeral port."""
from __future__ import annotations

import base64
import json
import threading
from decimal import Decimal
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Dict, Sequence
from urllib.parse import parse_qs, urlparse

from .model import double_sha256

RPC_INVALID_PARAMETER = -8
RPC_METHOD_NOT_FOUND = -32601
RPC_INVALID_ADDRESS_OR_KEY = -5


class _Server:
    handler_cls = None

    def __init__(self):
        self._httpd = ThreadingHTTPServer(("127.0.0.1", 0), self.handler_cls)
        self._httpd.stub = self
        self._thread = None
        self.requests = 0

    @property
    def url(self) -> str:
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}/"

    def start(self):
        self._thread = threading.Thread(target=self._httpd.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self):
        self._httpd.shutdown()
        self._httpd.server_close()

    def __enter__(self):
        return self.start()

    def __exit__(self, *exc):
        self.stop()


class _Quiet(BaseHTTPRequestHandler):
    def log_message(self, *args):
        pass

    def _send(self, status, payload):
        body = json.dumps(payload).encode()
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)


class _RpcHandler(_Quiet):
    def do_POST(self):
        stub = self.server.stub
        stub.requests += 1
        auth = self.headers.get("Authorization", "")
        if auth != stub.expected_auth:
            self.send_response(401)
            self.send_header("WWW-Authenticate", 'Basic realm="jsonrpc"')
            self.send_header("Content-Length", "0")
            self.end_headers()
            return
        length = int(self.headers.get("Content-Length", 0))
        try:
            req = json.loads(self.rfile.read(length))
        except ValueError:
            self._send(500, {"result": None, "error": {"code": -32700, "message": "Parse error"},
                             "id": None})
            return
        status, result, error = stub.dispatch(req.get("method"), req.get("params") or [])
        self._send(status, {"result": result, "error": error, "id": req.get("id")})


class StubRpcServer(_Server):
    """Serves getblockcount / getblockhash / getblock (verbosity 0) over a
    fixed list of main-chain block payloads."""

    handler_cls = _RpcHandler

    def __init__(self, payloads: Sequence[bytes], user: str = "user", password: str = "pass"):
        super().__init__()
        self.payloads = list(payloads)
        self.hashes = [double_sha256(p[:80]) for p in self.payloads]
        self.by_hash = {h.to_hex(): p for h, p in zip(self.hashes, self.payloads)}
        token = base64.b64encode(f"{user}:{password}".encode()).decode()
        self.expected_auth = f"Basic {token}"

    def dispatch(self, method, params):
        if method == "getblockcount":
            return 200, len(self.payloads) - 1, None
        if method == "getblockhash":
            height = params[0] if params else None
            if not isinstance(height, int) or not 0 <= height < len(self.payloads):
                return 500, None, {"code": RPC_INVALID_PARAMETER,
                                   "message": "Block height out of range"}
            return 200, self.hashes[height].to_hex(), None
        if method == "getblock":
            payload = self.by_hash.get(params[0] if params else None)
            if payload is None:
                return 500, None, {"code": RPC_INVALID_ADDRESS_OR_KEY,
                                   "message": "Block not found"}
            verbosity = params[1] if len(params) > 1 else 1
            if verbosity != 0:
                return 500, None, {"code": RPC_INVALID_PARAMETER,
                                   "message": "stub only serves verbosity 0"}
            return 200, payload.hex(), None
        return 404, None, {"code": RPC_METHOD_NOT_FOUND, "message": "Method not found"}


class _RateHandler(_Quiet):
    def do_GET(self):
        stub = self.server.stub
        stub.requests += 1
        query = parse_qs(urlparse(self.path).query)
        start = query.get("start", [None])[0]
        end = query.get("end", [start])[0]
        if start is None:
            self._send(400, {"error": "start required"})
            return
        bpi = {d: float(r) for d, r in sorted(stub.rates.items()) if start <= d <= end}
        self._send(200, {"bpi": bpi, "disclaimer": "chainview stub"})


class StubRateServer(_Server):
    handler_cls = _RateHandler

    def __init__(self, rates: Dict[str, Decimal]):
        super().__init__()
        self.rates = dict(rates)
