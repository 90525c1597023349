import numpy as np
import pytest

from services.rng import RngStreams


def test_same_keys_give_the_same_stream():
    a = RngStreams(42).generator("oracle", 3).random(5)
    b = RngStreams(42).generator("oracle", 3).random(5)
    assert np.array_equal(a, b)


def test_streams_are_independent_of_call_order():
    s = RngStreams(7)
    first = s.generator("block", 1)
    s.generator("block", 2).random(100)
    again = RngStreams(7).generator("block", 1)
    assert np.array_equal(first.random(3), again.random(3))


def test_purposes_and_keys_separate_streams():
    s = RngStreams(0)
    draws = {
        ("oracle", 0): s.generator("oracle", 0).random(4),
        ("oracle", 1): s.generator("oracle", 1).random(4),
        ("block", 0): s.generator("block", 0).random(4),
    }
    values = list(draws.values())
    assert not np.array_equal(values[0], values[1])
    assert not np.array_equal(values[0], values[2])


def test_root_seed_changes_the_stream():
    assert not np.array_equal(
        RngStreams(1).generator("noise").random(4),
        RngStreams(2).generator("noise").random(4),
    )


def test_unknown_purpose():
    with pytest.raises(KeyError, match="Unknown rng purpose"):
        RngStreams(0).generator("weather")


def test_negative_seed_is_rejected():
    with pytest.raises(ValueError):
        RngStreams(-1)


def test_describe():
    info = RngStreams(5).describe()
    assert info["root_seed"] == 5
    assert info["bit_generator"] == "Philox"
    assert info["numpy"] == np.__version__
