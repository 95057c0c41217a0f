import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cohstream.errors import ValidationError
from cohstream.online import SlidingTransformState
from cohstream.wavelet import ndwt

RNG = np.random.default_rng(314159)


def _assert_matches_batch(state, stream, start, w, levels, atol=1e-10):
    batch = ndwt(stream[..., start : start + w], levels)
    live = state.pyramid()
    assert np.max(np.abs(live.smooth - batch.smooth)) <= atol
    assert np.max(np.abs(live.detail - batch.detail)) <= atol


@pytest.mark.parametrize("w,levels", [(8, 3), (16, 4), (64, 6)])
def test_slides_match_batch_transform(w, levels):
    stream = RNG.standard_normal(w + 200)
    state = SlidingTransformState(stream[:w], levels)
    for i in range(200):
        state.slide(stream[w + i])
        _assert_matches_batch(state, stream, i + 1, w, levels)


def test_multichannel_slides_match_batch():
    w, levels = 32, 5
    stream = RNG.standard_normal((3, w + 100))
    state = SlidingTransformState(stream[:, :w], levels)
    for i in range(100):
        state.slide(stream[:, w + i])
        _assert_matches_batch(state, stream, i + 1, w, levels)


def test_write_count_per_slide():
    for levels in (3, 5, 8):
        w = 1 << levels
        state = SlidingTransformState(RNG.standard_normal(w), levels)
        writes = state.slide(0.7)
        assert writes == 2 ** (levels + 1) - 1
        assert writes == state.writes_per_slide


def test_total_writes_accumulate():
    state = SlidingTransformState(RNG.standard_normal(16), 4)
    for _ in range(13):
        state.slide(RNG.standard_normal())
    assert state.total_slot_writes == 13 * (2**5 - 1)
    assert state.slides_done == 13


def test_shallow_pyramid_writes_fewer_slots():
    """levels < log2(w) stops the update cascade early."""
    state = SlidingTransformState(RNG.standard_normal(64), 3)
    assert state.slide(1.0) == 2**4 - 1


def test_window_values_track_stream():
    w = 16
    stream = RNG.standard_normal(w + 40)
    state = SlidingTransformState(stream[:w], 4)
    for i in range(40):
        state.slide(stream[w + i])
        assert np.allclose(state.window_values(), stream[i + 1 : i + 1 + w])


def test_rebuild_is_a_noop_on_exact_state():
    w = 32
    stream = RNG.standard_normal(w + 50)
    state = SlidingTransformState(stream[:w], 5)
    for i in range(50):
        state.slide(stream[w + i])
    before = (state.smooth.copy(), state.detail.copy())
    state.rebuild()
    assert np.allclose(state.smooth, before[0], atol=1e-12)
    assert np.allclose(state.detail, before[1], atol=1e-12)


def test_periodic_rebuild_triggers():
    state = SlidingTransformState(RNG.standard_normal(8), 3, rebuild_every=10)
    stream = RNG.standard_normal(25)
    for v in stream:
        state.slide(v)
    # state must still match a batch transform exactly after rebuilds
    batch = ndwt(state.window_values(), 3)
    assert np.allclose(state.pyramid().detail, batch.detail, atol=1e-12)


def test_non_haar_filter_rejected():
    with pytest.raises(ValidationError):
        SlidingTransformState(np.zeros(16), 4, filt="d4")


def test_wrong_sample_shape_rejected():
    state = SlidingTransformState(np.zeros((3, 16)), 4)
    with pytest.raises(ValidationError):
        state.slide(np.zeros(2))


def test_bad_window_shape_rejected():
    with pytest.raises(ValidationError):
        SlidingTransformState(np.zeros((2, 3, 8)), 3)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 60))
def test_slide_equals_batch_property(seed, n_slides):
    rng = np.random.default_rng(seed)
    w, levels = 16, 4
    stream = rng.standard_normal(w + n_slides) * 10
    state = SlidingTransformState(stream[:w], levels)
    for i in range(n_slides):
        state.slide(stream[w + i])
    batch = ndwt(stream[n_slides : n_slides + w], levels)
    live = state.pyramid()
    assert np.max(np.abs(live.detail - batch.detail)) <= 1e-10
    assert np.max(np.abs(live.smooth - batch.smooth)) <= 1e-10
