import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from digitpad.config import GlobalConfig
from digitpad.dataset import load_templates
from digitpad.session import Session


@pytest.fixture()
def config():
    return GlobalConfig(confidence_threshold=0.0).validate()


@pytest.fixture()
def session(tiny_model, config):
    return Session(tiny_model, config)


def frame_msg(t, wrench):
    return {"type": "frame", "t": t, "wrench": list(wrench)}


def drive_frames(session, frames):
    out = []
    for i, w in enumerate(frames):
        out.extend(session.handle(frame_msg(i * 0.02, w)))
    return out


def embed_sequence(seq, lead=40, tail=280):
    frames = [[0.0] * 6] * lead
    frames += [row.tolist() for row in seq.wrench]
    frames += [[0.0] * 6] * tail
    return frames


def template_stroke_points(digit=3, duration_ms=2000.0, n=120):
    tpl = load_templates()[digit]
    poly = tpl.polyline
    seg = np.linalg.norm(np.diff(poly, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    u = np.linspace(0.0, s[-1], n)
    return [{"x": float(np.interp(v, s, poly[:, 0])),
             "y": float(np.interp(v, s, poly[:, 1])),
             "t_ms": float(i * duration_ms / (n - 1))}
            for i, v in enumerate(u)]


# --- happy path -------------------------------------------------------------------

def test_frame_stream_produces_ordered_events(session, small_synth_dataset):
    seq = next(s for s in small_synth_dataset.sequences
               if s.label in session.config.task_registry.tasks)
    out = drive_frames(session, embed_sequence(seq))
    types = [m["type"] for m in out]
    assert types[0] == "touch_started"
    assert "prediction" in types
    assert types.index("touch_started") < types.index("prediction")
    # hfsm reaches confirmation and speaks the command
    assert any(m["type"] == "hfsm_state" and m["state"].startswith("AwaitingConfirmation")
               for m in out)
    assert any(m["type"] == "action" and m["action"] == "speak" for m in out)


def test_confirm_touch_starts_motion(session, small_synth_dataset):
    config = session.config
    seq = next(s for s in small_synth_dataset.sequences
               if s.label in config.task_registry.tasks)
    drive_frames(session, embed_sequence(seq))
    out = session.handle({"type": "confirm_touch"})
    actions = [m for m in out if m["type"] == "action"]
    assert actions and actions[0]["action"] == "start_motion"
    assert any(m["type"] == "hfsm_state" and m["state"].startswith("Motion") for m in out)


def test_stroke_message_classifies(session):
    out = session.handle({"type": "stroke", "points": template_stroke_points(3)})
    types = [m["type"] for m in out]
    assert "touch_started" in types
    assert "prediction" in types
    pred = next(m for m in out if m["type"] == "prediction")
    assert len(pred["probabilities"]) == 10
    assert abs(sum(pred["probabilities"]) - 1.0) < 1e-9


def test_reset_returns_to_idle(session, small_synth_dataset):
    drive_frames(session, embed_sequence(small_synth_dataset.sequences[2]))
    out = session.handle({"type": "reset"})
    assert out[-1]["type"] == "hfsm_state"
    assert out[-1]["state"] == "Idle"


def test_arm_touch_and_double_tap(session, small_synth_dataset):
    config = session.config
    seq = next(s for s in small_synth_dataset.sequences
               if s.label in config.task_registry.tasks)
    drive_frames(session, embed_sequence(seq))
    session.handle({"type": "confirm_touch"})
    out = session.handle({"type": "arm_touch"})
    assert any(m.get("action") == "stop_motion" for m in out)
    out = session.handle({"type": "double_tap"})
    assert any(m.get("action") == "resume_motion" for m in out)


# --- timers ---------------------------------------------------------------------------

def test_confirmation_timeout_fires(session, small_synth_dataset):
    config = session.config
    seq = next(s for s in small_synth_dataset.sequences
               if s.label in config.task_registry.tasks)
    drive_frames(session, embed_sequence(seq))
    requests = session.pop_timer_requests()
    assert len(requests) == 1
    req = requests[0]
    assert req.timer_id == "confirm"
    assert req.duration == config.confirm_timeout_s
    out = session.fire_timer(req.timer_id, req.generation)
    assert out[-1]["type"] == "hfsm_state"
    assert out[-1]["state"] == "Idle"


def test_stale_timer_ignored(session, small_synth_dataset):
    config = session.config
    seq = next(s for s in small_synth_dataset.sequences
               if s.label in config.task_registry.tasks)
    drive_frames(session, embed_sequence(seq))
    req = session.pop_timer_requests()[0]
    session.handle({"type": "confirm_touch"})  # leaves AwaitingConfirmation
    assert session.fire_timer(req.timer_id, req.generation) == []


# --- protocol robustness ------------------------------------------------------------------

def test_malformed_json_keeps_session(session):
    out = session.handle_text("{not json")
    assert out[0]["type"] == "error"
    # session still works afterwards
    ok = session.handle(frame_msg(0.0, [0.0] * 6))
    assert ok == []


def test_unknown_type_is_error(session):
    out = session.handle({"type": "fly_to_moon"})
    assert out[0]["type"] == "error"
    assert "fly_to_moon" in out[0]["message"]


def test_bad_wrench_is_error(session):
    out = session.handle({"type": "frame", "t": 0.0, "wrench": [1, 2, 3]})
    assert out[0]["type"] == "error"
    out = session.handle({"type": "frame", "t": 0.0, "wrench": [1, 2, "x", 0, 0, 0]})
    assert out[0]["type"] == "error"
    out = session.handle({"type": "frame", "t": 0.0,
                          "wrench": [0, 0, float("nan"), 0, 0, 0]})
    assert out[0]["type"] == "error"


def test_bad_stroke_is_error(session):
    out = session.handle({"type": "stroke", "points": []})
    assert out[0]["type"] == "error"
    out = session.handle({"type": "stroke", "points": [{"x": 1}]})
    assert out[0]["type"] == "error"


@settings(max_examples=120, deadline=None)
@given(st.recursive(
    st.none() | st.booleans() | st.floats(allow_nan=False) | st.text(max_size=20),
    lambda children: st.lists(children, max_size=4)
    | st.dictionaries(st.text(max_size=8), children, max_size=4),
    max_leaves=12,
))
def test_fuzz_never_crashes(tiny_model, payload):
    session = Session(tiny_model, GlobalConfig().validate())
    out = session.handle_text(json.dumps(payload))
    assert all(isinstance(m, dict) and "seq" in m for m in out)


def test_fuzz_raw_text_never_crashes(tiny_model):
    session = Session(tiny_model, GlobalConfig().validate())
    for junk in ["", "\x00\x01", "]][[", "42", '"str"', "null",
                 '{"type": 7}', '{"no_type": true}']:
        out = session.handle_text(junk)
        assert all(m["type"] == "error" for m in out)


# --- sequence numbers ------------------------------------------------------------------------

def test_sequence_numbers_strictly_increase(session, small_synth_dataset):
    out = drive_frames(session, embed_sequence(small_synth_dataset.sequences[8]))
    out += session.handle({"type": "reset"})
    seqs = [m["seq"] for m in out]
    assert seqs == sorted(seqs)
    assert len(set(seqs)) == len(seqs)


def test_consecutive_strokes_stay_on_one_time_axis(session):
    # the stream classifier sees strictly increasing timestamps even though
    # every stroke message starts its own clock at zero
    times = []
    original = session.stream.push_frame
    session.stream.push_frame = lambda frame: (times.append(frame.t), original(frame))[1]
    session.handle({"type": "stroke", "points": template_stroke_points(1)})
    session.handle({"type": "stroke", "points": template_stroke_points(2)})
    assert len(times) > 200
    assert all(t2 > t1 for t1, t2 in zip(times, times[1:]))


def test_two_sessions_do_not_share_counters(tiny_model, config, small_synth_dataset):
    a = Session(tiny_model, config)
    b = Session(tiny_model, config)
    out_a = drive_frames(a, embed_sequence(small_synth_dataset.sequences[1]))
    out_b = b.handle({"type": "reset"})
    assert out_b[0]["seq"] == 1  # unaffected by session a's traffic
    assert out_a[0]["seq"] == 1
