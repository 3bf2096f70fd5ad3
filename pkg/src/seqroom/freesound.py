"""Typed client for the Freesound text-search API.

Builds search requests (text query, duration filter, pagination), parses
responses into SoundRef values, and keeps the HTTP layer behind an
injected transport so every test can run on recorded fixtures. The API
key lives only inside the transport; it never appears in request
descriptors, results, or logs.
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

from .core import DecodeError, SoundRef

log = logging.getLogger(__name__)

API_BASE = "https://freesound.org"
SEARCH_PATH = "/apiv2/search/text/"
RESULT_FIELDS = "id,name,duration,previews,username,license"
PREVIEW_KEY = "preview-hq-mp3"
DEFAULT_PAGE_SIZE = 15
RETRY_BACKOFF_S = 0.5


class TransportError(Exception):
    """Upstream request failed. ``kind`` is network, auth, or http_status."""

    def __init__(self, kind: str, detail: str = "", status: Optional[int] = None):
        self.kind = kind
        self.status = status
        super().__init__(f"{kind}: {detail}" if detail else kind)


@dataclass(frozen=True)
class SearchRequest:
    query: str
    min_duration_s: Optional[float] = None
    max_duration_s: Optional[float] = None
    page: int = 1
    page_size: int = DEFAULT_PAGE_SIZE

    def __post_init__(self):
        if not self.query.strip():
            raise ValueError("query must be non-empty")
        if (
            self.min_duration_s is not None
            and self.max_duration_s is not None
            and self.min_duration_s > self.max_duration_s
        ):
            raise ValueError("min_duration_s > max_duration_s")
        if self.page < 1:
            raise ValueError("page must be >= 1")
        if not 1 <= self.page_size <= 50:
            raise ValueError("page_size must be in 1..50")


@dataclass(frozen=True)
class SearchResults:
    total: int
    results: tuple[SoundRef, ...]


@dataclass(frozen=True)
class RequestDescriptor:
    """Upstream request, sans credentials: path plus query parameters."""

    path: str
    params: dict

    def cache_key(self) -> str:
        return json.dumps({"path": self.path, "params": self.params}, sort_keys=True)


@dataclass
class TransportResponse:
    status: int
    body: str


# A transport turns a descriptor into a response; credentials are its concern.
Transport = Callable[[RequestDescriptor], TransportResponse]


def build_query(req: SearchRequest) -> RequestDescriptor:
    """Duration bounds become the upstream filter ``duration:[min TO max]``;
    an open lower bound renders as 0, an open upper bound as ``*``."""
    params = {
        "query": req.query,
        "fields": RESULT_FIELDS,
        "page": req.page,
        "page_size": req.page_size,
    }
    if req.min_duration_s is not None or req.max_duration_s is not None:
        lo = 0 if req.min_duration_s is None else req.min_duration_s
        hi = "*" if req.max_duration_s is None else req.max_duration_s
        params["filter"] = f"duration:[{_num(lo)} TO {_num(hi)}]"
    return RequestDescriptor(path=SEARCH_PATH, params=params)


def _num(x) -> str:
    if isinstance(x, float) and x.is_integer():
        return str(int(x))
    return str(x)


def parse_results(body: str) -> SearchResults:
    """Map an upstream response body onto SearchResults.

    Entries without a high-quality mp3 preview cannot be played and are
    dropped; a single warning reports how many.
    """
    try:
        obj = json.loads(body)
    except (json.JSONDecodeError, TypeError) as err:
        raise DecodeError("malformed_json", str(err)) from err
    if not isinstance(obj, dict):
        raise DecodeError("malformed_json", "response must be a JSON object")
    if "count" not in obj:
        raise DecodeError("missing_field", "count")
    if "results" not in obj:
        raise DecodeError("missing_field", "results")

    sounds = []
    dropped = 0
    for raw in obj["results"]:
        for key in ("id", "name", "duration"):
            if key not in raw:
                raise DecodeError("missing_field", f"results[].{key}")
        preview = (raw.get("previews") or {}).get(PREVIEW_KEY)
        if not preview:
            dropped += 1
            continue
        sounds.append(
            SoundRef(
                freesound_id=raw["id"],
                name=raw["name"],
                duration_s=raw["duration"],
                preview_url=preview,
                username=raw.get("username", ""),
                license=raw.get("license", ""),
            )
        )
    if dropped:
        log.warning("dropped %d search result(s) without a %s preview", dropped, PREVIEW_KEY)
    return SearchResults(total=obj["count"], results=tuple(sounds))


class FreesoundClient:
    """Search client with a pluggable transport and one-retry policy."""

    def __init__(self, transport: Transport, *, retry_backoff_s: float = RETRY_BACKOFF_S,
                 sleep: Callable[[float], None] = time.sleep):
        self._transport = transport
        self._retry_backoff_s = retry_backoff_s
        self._sleep = sleep

    def search(self, req: SearchRequest) -> SearchResults:
        descriptor = build_query(req)
        response = self._send_with_retry(descriptor)
        if response.status in (401, 403):
            raise TransportError("auth", "upstream rejected credentials", status=response.status)
        if response.status != 200:
            raise TransportError(
                "http_status", f"upstream returned {response.status}", status=response.status
            )
        return parse_results(response.body)

    def _send_with_retry(self, descriptor: RequestDescriptor) -> TransportResponse:
        try:
            return self._transport(descriptor)
        except TransportError as err:
            if err.kind != "network":
                raise
            self._sleep(self._retry_backoff_s)
            return self._transport(descriptor)


def http_transport(api_key: str, *, base_url: str = API_BASE, timeout_s: float = 10.0) -> Transport:
    """Real HTTP transport. The token stays inside this closure."""
    import httpx

    def send(descriptor: RequestDescriptor) -> TransportResponse:
        try:
            response = httpx.get(
                base_url + descriptor.path,
                params=descriptor.params,
                headers={"Authorization": f"Token {api_key}"},
                timeout=timeout_s,
            )
        except httpx.HTTPError as err:
            # Never include the request (the auth header rides on it).
            raise TransportError("network", type(err).__name__) from None
        return TransportResponse(status=response.status_code, body=response.text)

    return send


class FixtureTransport:
    """Transport backed by a directory of recorded request/response pairs.

    Each fixture is ``<name>.request.json`` holding {"path":..., "params":...}
    next to ``<name>.response.json`` holding {"status":..., "json":...}.
    """

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._by_key: dict[str, TransportResponse] = {}
        for req_file in sorted(self.directory.glob("*.request.json")):
            raw = json.loads(req_file.read_text())
            descriptor = RequestDescriptor(path=raw["path"], params=raw["params"])
            resp_file = req_file.with_name(req_file.name.replace(".request.", ".response."))
            raw_resp = json.loads(resp_file.read_text())
            self._by_key[descriptor.cache_key()] = TransportResponse(
                status=raw_resp["status"], body=json.dumps(raw_resp["json"])
            )

    def __call__(self, descriptor: RequestDescriptor) -> TransportResponse:
        response = self._by_key.get(descriptor.cache_key())
        if response is None:
            raise TransportError("network", f"no fixture for {descriptor.path} {descriptor.params}")
        return response


class FlakyTransport:
    """Wraps a transport to fail the first N calls. Test helper for retries."""

    def __init__(self, inner: Transport, failures: int = 1):
        self.inner = inner
        self.failures = failures
        self.calls = 0

    def __call__(self, descriptor: RequestDescriptor) -> TransportResponse:
        self.calls += 1
        if self.calls <= self.failures:
            raise TransportError("network", "synthetic transient failure")
        return self.inner(descriptor)
