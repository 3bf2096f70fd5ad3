"""Acceptance gate: one test per release criterion.

Each criterion runs at its stated size and tolerance; the conftest hook
prints a PASS/FAIL line per criterion in the terminal summary.
"""

import random
from pathlib import Path

import pytest

from seqroom import core
from seqroom.freesound import (
    FixtureTransport,
    FreesoundClient,
    SearchRequest,
    TransportError,
    build_query,
)
from seqroom.protocol import ClientReplica, Envelope, decode_message, encode_message, op_wire_encode
from seqroom.server.config import ServerConfig
from seqroom.server.rooms import Room
from seqroom.sim import STRUCTURAL_HEAVY_MIX, SimPlan, run_sim
from strategies import random_state, random_valid_op

FIXTURES = Path(__file__).parent / "fixtures" / "freesound"


def make_room(room_id="room0", **overrides) -> Room:
    defaults = dict(rooms=[room_id], rate_limit_ops_per_s=None)
    defaults.update(overrides)
    return Room(room_id, ServerConfig(**defaults))


def deliver(replica: ClientReplica, outbound, client_id) -> list[Envelope]:
    responses = []
    for cid, env in outbound:
        if cid == client_id:
            responses.extend(replica.handle(env))
    return responses


def test_convergence_fuzz():
    """Convergence fuzz: 4 clients x 250 random ops, structural-heavy mix,
    20 seeds; all client hashes equal the server's, 0 gaps, each run < 10 s."""
    for seed in range(20):
        report = run_sim(
            SimPlan(
                seed=seed,
                clients=4,
                ops_per_client=250,
                op_mix=dict(STRUCTURAL_HEAVY_MIX),
            ),
            in_process=True,
        )
        assert report.converged, f"seed {seed}: {report.errors}"
        server_hash = report.server_snapshot_hashes["room0"]
        assert set(report.final_snapshot_hashes.values()) == {server_hash}, f"seed {seed}"
        assert report.seq_gaps == 0, f"seed {seed}"
        assert set(report.rejects) <= {"stale_epoch"}, f"seed {seed}: {report.rejects}"
        assert report.replay_ok and report.discipline_violations == 0, f"seed {seed}"
        assert report.wall_time_s < 10.0, f"seed {seed}: {report.wall_time_s:.2f}s"


def test_splice_oracle_equivalence():
    """Splice-oracle equivalence: 10,000 random add/remove sequences match a
    reference list-splice oracle element-wise."""
    rng = random.Random(2024)
    next_tag = 0
    for _ in range(10_000):
        state = core.empty_state()
        oracle: list[int] = []
        applied = 0
        for _ in range(rng.randint(1, 12)):
            if oracle and (len(oracle) >= 16 or rng.random() < 0.5):
                idx = rng.randrange(len(oracle))
                state = core.apply(state, core.RemoveTrack(idx))
                del oracle[idx]
            else:
                next_tag += 1
                sound = core.SoundRef(next_tag, f"s{next_tag}", 1.0, "https://x/p.mp3", "u", "CC0")
                state = core.apply(state, core.AddTrack(sound=sound))
                oracle.append(next_tag)
            applied += 1
            assert [t.sound.freesound_id for t in state.tracks] == oracle
            assert state.epoch == applied


def test_structural_echo_discipline():
    """Echo discipline: the author's track count is unchanged until the
    server's echo of their add-track comes back, then +1."""
    room = make_room()
    client_id, outbound = room.join("ana")
    replica = ClientReplica()
    deliver(replica, outbound, client_id)

    env = replica.prepare_op(core.AddTrack())
    assert len(replica.visible_state().tracks) == 0

    outbound = room.handle_frame(client_id, env)
    # Broadcast exists, but until this client consumes it nothing changed.
    assert len(replica.visible_state().tracks) == 0

    deliver(replica, outbound, client_id)
    assert len(replica.visible_state().tracks) == 1
    assert replica.discipline_violations == 0


def test_epoch_guard_race():
    """Epoch guard: a remove/set-step race never corrupts the server; the
    loser is rejected with stale_epoch and reconverges after resync."""
    for remove_first in (True, False):
        room = make_room()
        a, out_a = room.join("ana")
        replica_a = ClientReplica()
        deliver(replica_a, out_a, a)
        b, out_b = room.join("bo")
        replica_b = ClientReplica()
        deliver(replica_b, out_b, b)
        deliver(replica_a, out_b, a)

        setup = [core.AddTrack(), core.AddTrack()]
        for op in setup:
            outbound = room.handle_frame(a, Envelope(type="op", epoch=room.state.epoch, payload=op_wire_encode(op, f"s{room.state.epoch}")))
            deliver(replica_a, outbound, a)
            deliver(replica_b, outbound, b)
        assert len(room.state.tracks) == 2

        # Both clients act on epoch 2 concurrently; arrival order decides.
        remove_env = replica_a.prepare_op(core.RemoveTrack(0))
        step_env = replica_b.prepare_op(core.SetStep(1, 0, True))
        first, second = (
            ((a, remove_env, replica_a), (b, step_env, replica_b))
            if remove_first
            else ((b, step_env, replica_b), (a, remove_env, replica_a))
        )
        out_first = room.handle_frame(*_send(first))
        out_second = room.handle_frame(*_send(second))

        # Server state is never corrupted: snapshot still satisfies every invariant.
        core.snapshot_decode(core.snapshot_encode(room.state))

        if remove_first:
            rejects = [env for cid, env in out_second if env.type == "reject"]
            assert len(rejects) == 1 and rejects[0].reason == "stale_epoch"
            assert [(cid, env.type) for cid, env in out_second] == [(b, "reject")]
        else:
            assert all(env.type == "op" for _, env in out_first + out_second)

        resync_frames = []
        for outbound in (out_first, out_second):
            resync_frames += deliver(replica_a, outbound, a)
            resync_frames += deliver(replica_b, outbound, b)
        for request in resync_frames:
            originator = replica_b if remove_first else replica_a
            outbound = room.handle_frame(b if remove_first else a, request)
            deliver(originator, outbound, b if remove_first else a)

        server_snapshot = core.snapshot_encode(room.state)
        assert replica_a.visible_snapshot() == server_snapshot
        assert replica_b.visible_snapshot() == server_snapshot


def _send(entry):
    client_id, env, _replica = entry
    return client_id, env


def test_snapshot_join_equivalence():
    """Snapshot-join equivalence: a late joiner after 500 broadcasts matches
    a replay-from-genesis client exactly."""
    rng = random.Random(404)
    room = make_room()
    a, outbound = room.join("genesis")
    genesis = ClientReplica()
    deliver(genesis, outbound, a)

    i = 0
    while room.next_seq <= 500:
        i += 1
        if i % 7 == 0:
            outbound = room.handle_frame(a, Envelope(type="chat", text=f"note {i}"))
        else:
            op = random_valid_op(rng, room.state)
            outbound = room.handle_frame(
                a,
                Envelope(type="op", epoch=room.state.epoch, payload=op_wire_encode(op, f"a-{i}")),
            )
        deliver(genesis, outbound, a)
    assert room.next_seq > 500

    late_id, outbound = room.join("late")
    late = ClientReplica()
    deliver(late, outbound, late_id)
    deliver(genesis, outbound, a)

    assert late.visible_snapshot() == genesis.visible_snapshot()
    assert late.visible_snapshot() == core.snapshot_encode(room.state)


def test_round_trip():
    """Round-trip: 1,000 randomized states survive snapshot encode/decode and
    every protocol message kind survives encode/decode."""
    rng = random.Random(777)
    for _ in range(1_000):
        state = random_state(rng)
        assert core.snapshot_decode(core.snapshot_encode(state)) == state

    state_obj = core.state_to_obj(core.empty_state())
    envelopes = [
        Envelope(type="hello", room="alpha", desired_name="ana"),
        Envelope(type="snapshot", room="alpha", seq=7, client="c2", state=state_obj,
                 users=["ana"], chat=[{"seq": 1, "from": "ana", "text": "yo"}]),
        Envelope(type="op", room="alpha", seq=8, epoch=1, client="c1",
                 payload=op_wire_encode(core.SetGain(1, 0.5), "c1-4")),
        Envelope(type="reject", room="alpha", op_id="c1-4", reason="stale_epoch"),
        Envelope(type="chat", room="alpha", seq=9, from_name="bo", text="hello"),
        Envelope(type="presence", room="alpha", seq=10, event="joined", name="cai", count=3),
        Envelope(type="ping"),
        Envelope(type="pong"),
        Envelope(type="resync", room="alpha"),
        Envelope(type="error", reason="no_such_room"),
    ]
    for env in envelopes:
        assert decode_message(encode_message(env)) == env, env.type


def test_room_isolation():
    """Room isolation: a two-room fuzz with two clients each sees zero
    cross-room deliveries."""
    report = run_sim(
        SimPlan(seed=31, clients=4, ops_per_client=120, rooms=2, chat_probability=0.1),
        in_process=True,
    )
    assert report.isolation_violations == 0
    assert report.converged
    assert report.passed


def test_search_fixtures():
    """Search fixtures: the guitar fixture parses to non-empty results, the
    duration filter renders as duration:[0 TO 1], and a 401 maps to auth."""
    client = FreesoundClient(FixtureTransport(FIXTURES), sleep=lambda s: None)

    results = client.search(SearchRequest(query="guitar"))
    assert results.total > 0 and len(results.results) > 0
    assert all(s.preview_url for s in results.results)

    descriptor = build_query(SearchRequest(query="kick", min_duration_s=0, max_duration_s=1))
    assert descriptor.params["filter"] == "duration:[0 TO 1]"

    with pytest.raises(TransportError) as err:
        client.search(SearchRequest(query="unauthorized-probe"))
    assert err.value.kind == "auth"


def test_timing_math():
    """Timing math: step intervals for 120/60/240 bpm are exactly
    0.125/0.25/0.0625 seconds."""
    assert core.step_interval_s(120) == 0.125
    assert core.step_interval_s(60) == 0.25
    assert core.step_interval_s(240) == 0.0625
