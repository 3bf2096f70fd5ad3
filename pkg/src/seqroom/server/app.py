"""HTTP + WebSocket service wiring.

The asyncio event loop is the per-room serial executor: every room
mutation happens inside a synchronous Room call, so two frames for the
same room can never interleave, while connection I/O, room listing, and
the search proxy all stay concurrent. Outbound frames go through
per-connection queues; a slow reader never stalls room processing.
"""

from __future__ import annotations

import asyncio
import contextlib
import json
import logging
import os
import tempfile
import time
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse
from fastapi.staticfiles import StaticFiles
from starlette.concurrency import run_in_threadpool

from .. import core
from ..core import DecodeError
from ..freesound import (
    FreesoundClient,
    SearchRequest,
    Transport,
    TransportError,
    http_transport,
)
from ..protocol import Envelope, decode_message, encode_message
from .config import ServerConfig
from .rooms import Room, RoomRegistry

log = logging.getLogger(__name__)

PLACEHOLDER_PAGE = """<!doctype html>
<html><head><title>seqroom</title></head>
<body>
<h1>seqroom server</h1>
<p>No web UI bundle is configured. Point --static-dir at a built bundle,
or use the API: <a href="/api/rooms">/api/rooms</a>, /api/search, /ws.</p>
</body></html>
"""


class ConnectionHub:
    """Send queues for live connections, keyed by (room id, client id)."""

    def __init__(self):
        self._queues: dict[tuple[str, str], asyncio.Queue] = {}

    def register(self, room_id: str, client_id: str) -> asyncio.Queue:
        queue: asyncio.Queue = asyncio.Queue()
        self._queues[(room_id, client_id)] = queue
        return queue

    def unregister(self, room_id: str, client_id: str) -> None:
        self._queues.pop((room_id, client_id), None)

    def dispatch(self, room: Room, outbound) -> None:
        for client_id, env in outbound:
            queue = self._queues.get((room.id, client_id))
            if queue is not None:
                queue.put_nowait(encode_message(env))


def create_app(
    config: Optional[ServerConfig] = None,
    *,
    registry: Optional[RoomRegistry] = None,
    search_transport: Optional[Transport] = None,
) -> FastAPI:
    config = config or ServerConfig()
    registry = registry or RoomRegistry(config)
    hub = ConnectionHub()

    if search_transport is None and config.freesound_api_key:
        search_transport = http_transport(config.freesound_api_key)
    search_client = FreesoundClient(search_transport) if search_transport else None

    @contextlib.asynccontextmanager
    async def lifespan(app: FastAPI):
        dump_task = None
        if config.snapshot_dump_path:
            dump_task = asyncio.create_task(
                _dump_loop(registry, config.snapshot_dump_path, config.snapshot_dump_interval_s)
            )
        yield
        if dump_task is not None:
            dump_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await dump_task
            dump_snapshots(registry, config.snapshot_dump_path)

    app = FastAPI(title="seqroom", lifespan=lifespan)
    app.state.config = config
    app.state.registry = registry
    app.state.hub = hub

    @app.get("/api/rooms")
    async def api_rooms():
        return registry.list_rooms()

    @app.get("/api/search")
    async def api_search(
        q: str = "",
        min_dur: Optional[float] = Query(default=None),
        max_dur: Optional[float] = Query(default=None),
        page: int = 1,
    ):
        if search_client is None:
            return JSONResponse({"error": "not_configured"}, status_code=503)
        if not q.strip():
            return JSONResponse({"error": "bad_request", "detail": "empty query"}, status_code=400)
        try:
            request = SearchRequest(
                query=q, min_duration_s=min_dur, max_duration_s=max_dur, page=page
            )
        except ValueError as err:
            return JSONResponse({"error": "bad_request", "detail": str(err)}, status_code=400)
        try:
            # Threadpool keeps the upstream round-trip off the room executor.
            results = await run_in_threadpool(search_client.search, request)
        except (TransportError, DecodeError) as err:
            return JSONResponse({"error": "upstream", "detail": str(err)}, status_code=502)
        return {
            "total": results.total,
            "results": [core.sound_to_obj(s) for s in results.results],
        }

    @app.websocket("/ws")
    async def ws_endpoint(websocket: WebSocket):
        await websocket.accept()
        room_id = websocket.query_params.get("room")
        name = websocket.query_params.get("name")

        if room_id is None:
            # No query params: the first frame must be a hello.
            try:
                hello = decode_message(await websocket.receive_text())
            except DecodeError as err:
                await websocket.send_text(
                    encode_message(Envelope(type="error", reason="malformed", detail=str(err)))
                )
                await websocket.close(code=1002)
                return
            if hello.type != "hello":
                await websocket.send_text(
                    encode_message(Envelope(type="error", reason="hello_required"))
                )
                await websocket.close(code=1002)
                return
            room_id, name = hello.room, hello.desired_name

        room = registry.get(room_id)
        if room is None:
            await websocket.send_text(
                encode_message(Envelope(type="error", reason="no_such_room"))
            )
            await websocket.close(code=1008)
            return

        client_id, outbound = room.join(name or "anon")
        queue = hub.register(room.id, client_id)
        hub.dispatch(room, outbound)
        log.info("join room=%s client=%s", room.id, client_id)

        async def sender():
            while True:
                await websocket.send_text(await queue.get())

        sender_task = asyncio.create_task(sender())
        try:
            while True:
                raw = await websocket.receive_text()
                try:
                    env = decode_message(raw)
                except DecodeError as err:
                    queue.put_nowait(
                        encode_message(Envelope(type="error", reason="malformed", detail=str(err)))
                    )
                    continue
                hub.dispatch(room, room.handle_frame(client_id, env))
        except WebSocketDisconnect:
            pass
        finally:
            sender_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await sender_task
            hub.unregister(room.id, client_id)
            hub.dispatch(room, room.disconnect(client_id))
            log.info("leave room=%s client=%s", room.id, client_id)

    static_dir = config.static_dir
    if static_dir and Path(static_dir).is_dir():
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        async def index():
            return HTMLResponse(PLACEHOLDER_PAGE)

    return app


def dump_snapshots(registry: RoomRegistry, path: str) -> None:
    """Write all room states to one JSON file, atomically."""
    payload = {"dumped_at": time.time(), "rooms": registry.snapshot_all()}
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=str(target.parent), prefix=".seqroom-dump-")
    try:
        with os.fdopen(fd, "w") as fh:
            json.dump(payload, fh)
        os.replace(tmp, target)
    except BaseException:
        with contextlib.suppress(OSError):
            os.unlink(tmp)
        raise


async def _dump_loop(registry: RoomRegistry, path: str, interval_s: float) -> None:
    while True:
        await asyncio.sleep(interval_s)
        try:
            dump_snapshots(registry, path)
        except OSError as err:
            log.warning("snapshot dump failed: %s", err)
