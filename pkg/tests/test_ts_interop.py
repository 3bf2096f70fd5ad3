"""Cross-implementation check: the browser client's compiled replica applies
a broadcast log produced by this server and lands on the same state."""

import json
import random
import shutil
import subprocess
from pathlib import Path

import pytest

from seqroom import core
from seqroom.protocol import Envelope, encode_message, op_wire_encode
from seqroom.server.config import ServerConfig
from seqroom.server.rooms import Room
from strategies import random_valid_op

FRONTEND = Path(__file__).parent.parent / "frontend"

RUNNER_MJS = """
import {{ Replica }} from "{replica_url}";

const chunks = [];
process.stdin.on("data", (c) => chunks.push(c));
process.stdin.on("end", () => {{
  const transcript = JSON.parse(Buffer.concat(chunks).toString());
  const replica = new Replica();
  for (const frame of transcript.frames) replica.handle(frame);
  process.stdout.write(
    JSON.stringify({{
      state: replica.visibleState(),
      lastSeq: replica.lastSeq,
      seqGaps: replica.seqGaps,
      users: replica.users,
      chat: replica.chatLog.length,
    }})
  );
}});
"""


def ensure_frontend_built() -> Path:
    dist = FRONTEND / "dist" / "replica.js"
    if dist.exists():
        return dist
    if shutil.which("tsc") is None:
        pytest.skip("tsc unavailable; cannot build the frontend bundle")
    build = subprocess.run(
        ["npm", "run", "build"], cwd=FRONTEND, capture_output=True, text=True
    )
    if build.returncode != 0 or not dist.exists():
        pytest.skip(f"frontend build failed: {build.stderr[-500:]}")
    return dist


@pytest.mark.skipif(shutil.which("node") is None, reason="node unavailable")
def test_ts_replica_replays_python_server_log(tmp_path):
    replica_js = ensure_frontend_built()

    rng = random.Random(4242)
    room = Room("alpha", ServerConfig(rooms=["alpha"], rate_limit_ops_per_s=None))

    frames: list[str] = []
    observer_id, outbound = room.join("ts-observer")

    def capture(outbound):
        for cid, env in outbound:
            if cid == observer_id:
                frames.append(encode_message(env))

    capture(outbound)
    driver_id, outbound = room.join("driver")
    capture(outbound)

    for i in range(300):
        if i % 11 == 0:
            capture(room.handle_frame(driver_id, Envelope(type="chat", text=f"note {i}")))
        elif i % 37 == 0:
            # An invalid op: rejected to the driver, invisible to the observer.
            bad = Envelope(type="op", epoch=room.state.epoch + 5,
                           payload=op_wire_encode(core.RemoveTrack(0), f"bad-{i}"))
            capture(room.handle_frame(driver_id, bad))
        else:
            op = random_valid_op(rng, room.state)
            env = Envelope(type="op", epoch=room.state.epoch, payload=op_wire_encode(op, f"d-{i}"))
            capture(room.handle_frame(driver_id, env))
    capture(room.disconnect(driver_id))

    transcript = {"frames": [json.loads(f) for f in frames]}
    runner = tmp_path / "replay.mjs"
    runner.write_text(RUNNER_MJS.format(replica_url=replica_js.resolve().as_uri()))
    proc = subprocess.run(
        ["node", str(runner)],
        input=json.dumps(transcript),
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 0, proc.stderr

    result = json.loads(proc.stdout)
    assert result["seqGaps"] == 0
    assert result["lastSeq"] == room.next_seq - 1
    assert result["users"] == ["ts-observer"]
    # int/float representation may differ (24 vs 24.0); compare values.
    assert result["state"] == json.loads(core.snapshot_encode(room.state))
