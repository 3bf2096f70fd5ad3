"""Wire codec: envelopes and operation payloads."""

import json
import random

import pytest
from hypothesis import given, settings, strategies as st

from seqroom import core
from seqroom.protocol import (
    Envelope,
    decode_message,
    encode_message,
    op_wire_decode,
    op_wire_encode,
)
from strategies import random_sound, random_state, random_valid_op


class TestEnvelopeCodec:
    def test_op_envelope_round_trip(self):
        env = Envelope(
            type="op",
            room="alpha",
            seq=42,
            epoch=3,
            client="c1",
            payload={"kind": "set_step", "track": 2, "step": 5, "active": True, "op_id": "c1-9"},
        )
        assert decode_message(encode_message(env)) == env

    def test_spec_op_frame_decodes_to_set_step(self):
        text = (
            '{"v":1,"type":"op","room":"alpha","seq":42,"epoch":3,"client":"c1",'
            '"payload":{"kind":"set_step","track":2,"step":5,"active":true}}'
        )
        env = decode_message(text)
        assert (env.v, env.type, env.room, env.seq, env.epoch, env.client) == (
            1,
            "op",
            "alpha",
            42,
            3,
            "c1",
        )
        op, _ = op_wire_decode(env.payload)
        assert op == core.SetStep(2, 5, True)

    def test_unknown_kind(self):
        with pytest.raises(core.DecodeError) as err:
            decode_message('{"v":1,"type":"upgrade_me"}')
        assert err.value.code == "unknown_kind"

    def test_malformed_json(self):
        with pytest.raises(core.DecodeError) as err:
            decode_message("{nope")
        assert err.value.code == "malformed_json"

    def test_missing_required_field(self):
        with pytest.raises(core.DecodeError) as err:
            decode_message('{"v":1,"type":"hello","room":"alpha"}')
        assert err.value.code == "missing_field"

    def test_unknown_extra_fields_ignored(self):
        text = '{"v":1,"type":"ping","shiny_new_field":123,"another":{"x":1}}'
        env = decode_message(text)
        assert env.type == "ping"

    def test_from_field_round_trip(self):
        env = Envelope(type="chat", room="a", seq=2, from_name="ana", text="hi")
        text = encode_message(env)
        assert '"from":"ana"' in text
        assert decode_message(text) == env

    def test_every_kind_round_trips(self):
        state_obj = core.state_to_obj(core.empty_state())
        envs = [
            Envelope(type="hello", room="alpha", desired_name="ana"),
            Envelope(
                type="snapshot",
                room="alpha",
                seq=7,
                client="c2",
                state=state_obj,
                users=["ana", "bo"],
                chat=[{"seq": 3, "from": "ana", "text": "yo"}],
            ),
            Envelope(
                type="op",
                room="alpha",
                seq=8,
                epoch=1,
                client="c1",
                payload=op_wire_encode(core.SetGain(1, 0.5), "c1-4"),
            ),
            Envelope(type="reject", room="alpha", op_id="c1-4", reason="stale_epoch", detail="x"),
            Envelope(type="chat", room="alpha", seq=9, from_name="bo", text="hello"),
            Envelope(type="presence", room="alpha", seq=10, event="joined", name="cai", count=3),
            Envelope(type="ping"),
            Envelope(type="pong"),
            Envelope(type="resync", room="alpha"),
            Envelope(type="error", reason="no_such_room"),
        ]
        for env in envs:
            assert decode_message(encode_message(env)) == env, env.type


class TestOpWireCodec:
    def test_set_gain_payload_shape(self):
        payload = op_wire_encode(core.SetGain(1, 0.5), "c9-3")
        assert payload == {"kind": "set_gain", "track": 1, "gain": 0.5, "op_id": "c9-3"}

    def test_out_of_range_step_still_decodes(self):
        # Range checking is validate's job, not decoding's.
        op, op_id = op_wire_decode(
            {"kind": "set_step", "track": 0, "step": 99, "active": True, "op_id": "x"}
        )
        assert op == core.SetStep(0, 99, True)
        assert op_id == "x"

    def test_unknown_kind(self):
        with pytest.raises(core.DecodeError) as err:
            op_wire_decode({"kind": "transmogrify", "op_id": "x"})
        assert err.value.code == "unknown_kind"

    def test_missing_field(self):
        with pytest.raises(core.DecodeError) as err:
            op_wire_decode({"kind": "set_step", "track": 0, "op_id": "x"})
        assert err.value.code == "missing_field"

    def test_wrong_type_counts_as_missing(self):
        with pytest.raises(core.DecodeError) as err:
            op_wire_decode({"kind": "set_step", "track": "zero", "step": 1, "active": True, "op_id": "x"})
        assert err.value.code == "missing_field"

    def test_bool_not_accepted_as_int(self):
        with pytest.raises(core.DecodeError):
            op_wire_decode({"kind": "set_step", "track": True, "step": 1, "active": True, "op_id": "x"})

    def test_sound_value_ranges_left_to_validate(self):
        payload = {
            "kind": "load_sample",
            "track": 0,
            "sound": {
                "freesound_id": -3,
                "name": "broken",
                "duration_s": -1,
                "preview_url": "u",
                "username": "n",
                "license": "l",
            },
            "op_id": "x",
        }
        op, _ = op_wire_decode(payload)
        rejection = core.validate(
            core.SequencerState(tracks=(core.Track(cells=(False,) * 16),)), op, 0
        )
        assert rejection.reason == core.VALUE_OUT_OF_RANGE

    @settings(max_examples=120, deadline=None)
    @given(st.integers(0, 2**32))
    def test_round_trip_all_variants_randomized(self, seed):
        rng = random.Random(seed)
        state = random_state(rng)
        op = random_valid_op(rng, state)
        op_id = f"c{rng.randint(1, 9)}-{rng.randint(1, 999)}"
        decoded, decoded_id = op_wire_decode(json.loads(json.dumps(op_wire_encode(op, op_id))))
        assert decoded == op
        assert decoded_id == op_id

    def test_each_kind_string(self):
        rng = random.Random(1)
        sound = random_sound(rng)
        cases = {
            "set_step": core.SetStep(0, 1, True),
            "set_gain": core.SetGain(0, 0.4),
            "add_track": core.AddTrack(sound=sound),
            "remove_track": core.RemoveTrack(0),
            "load_sample": core.LoadSample(0, sound),
            "set_segment": core.SetSegment(0, 0.1, 0.2),
            "set_bpm": core.SetBpm(99),
        }
        for kind, op in cases.items():
            assert op_wire_encode(op, "x")["kind"] == kind
