import numpy as np
import pytest

from fbmclt.rng import as_generator, stream


class TestStreams:
    def test_same_key_same_draws(self):
        a = stream(11, "F", 64, 3, 1).standard_normal(5)
        b = stream(11, "F", 64, 3, 1).standard_normal(5)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("other", [(12, "F", 64, 3, 1), (11, "G", 64, 3, 1),
                                       (11, "F", 32, 3, 1), (11, "F", 64, 4, 1),
                                       (11, "F", 64, 3, 2)])
    def test_any_key_change_gives_new_stream(self, other):
        a = stream(11, "F", 64, 3, 1).standard_normal(8)
        b = stream(*other).standard_normal(8)
        assert not np.array_equal(a, b)

    def test_order_of_creation_is_irrelevant(self):
        first = [stream(5, "x", k).random() for k in range(4)]
        second = [stream(5, "x", k).random() for k in reversed(range(4))][::-1]
        assert first == second

    def test_streams_uncorrelated(self):
        a = stream(3, "F", 0).standard_normal(20000)
        b = stream(3, "F", 1).standard_normal(20000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 4 / np.sqrt(20000)

    def test_rejects_negative_key(self):
        with pytest.raises(TypeError):
            stream(1, -1)

    def test_as_generator(self):
        g = np.random.default_rng(0)
        assert as_generator(g) is g
        assert as_generator(4).random() == as_generator(4).random()
