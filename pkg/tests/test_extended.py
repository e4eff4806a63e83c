"""
Extended resistance arithmetic
"""

import math

import numpy as np
import pytest

from app.core import extended
from app.core.exceptions import ParamOutOfRange


class TestSeriesParallel:
    def test_series_absorbs_infinity(self):
        assert extended.series(math.inf, 3.0) == math.inf

    def test_parallel_absorbs_zero(self):
        assert extended.parallel(0.0, 7.0) == 0.0
        assert extended.parallel(math.inf, 0.0) == 0.0

    def test_parallel_equal_pair(self):
        """2 || 2 = 1"""
        assert extended.parallel(2.0, 2.0) == pytest.approx(1.0, abs=1e-15)

    def test_parallel_with_open_edge(self):
        assert extended.parallel(math.inf, 4.0) == 4.0

    def test_parallel_all_empty_is_open(self):
        assert extended.parallel_all([]) == math.inf
        assert extended.parallel_all([3.0, 6.0]) == pytest.approx(2.0)


class TestConductance:
    def test_scalar_table(self):
        assert extended.conductance(0.0) == math.inf
        assert extended.conductance(math.inf) == 0.0
        assert extended.from_conductance(0.0) == math.inf
        assert extended.from_conductance(math.inf) == 0.0

    def test_vectorised_matches_scalar(self):
        r = np.array([0.0, 0.5, 2.0, math.inf])
        assert extended.conductances(r).tolist() == [math.inf, 2.0, 0.5, 0.0]
        assert extended.resistances(extended.conductances(r)).tolist() == r.tolist()

    @pytest.mark.parametrize("bad", [-1.0, math.nan])
    def test_rejects_invalid(self, bad):
        with pytest.raises(ParamOutOfRange):
            extended.check(bad)


class TestFormat:
    def test_infinity_token(self):
        assert extended.format_resistance(math.inf) == "inf"
        assert extended.parse_resistance("inf") == math.inf
        assert extended.parse_resistance("INF") == math.inf

    def test_zero_and_decimal(self):
        assert extended.format_resistance(0.0) == "0"
        assert extended.format_resistance(0.5) == "0.5"
        assert extended.parse_resistance("2.25") == 2.25

    def test_parse_rejects_negative(self):
        with pytest.raises(ParamOutOfRange):
            extended.parse_resistance("-3")
