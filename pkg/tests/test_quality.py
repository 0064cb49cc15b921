import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import mp_conversational_mos
from playoutsim.quality import (DEFAULT_PARAMS, QualityParams, conversational_mos,
                                delay_impairment, ie_from_listening_mos, loss_impairment,
                                mos_from_r, r_from_mos)

LITERAL = QualityParams(mos_map="paper-literal")
finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


class TestMosFromR:
    def test_bounds(self):
        assert mos_from_r(0) == 1.0
        assert mos_from_r(-5) == 1.0
        assert mos_from_r(100) == 4.5
        assert mos_from_r(250) == 4.5

    def test_examples(self):
        # frozen from the arbitrary-precision oracle
        assert mos_from_r(60.60) == pytest.approx(3.1310, abs=5e-5)
        assert mos_from_r(93.2) == pytest.approx(4.4093, abs=5e-5)

    def test_two_factor_map(self):
        assert mos_from_r(60.60, LITERAL) == pytest.approx(3.1213, abs=5e-5)
        assert mos_from_r(100, LITERAL) == 4.5

    def test_rejects_non_finite(self):
        for bad in (math.nan, math.inf, -math.inf):
            with pytest.raises(ValueError):
                mos_from_r(bad)

    @given(finite, finite)
    def test_non_decreasing(self, a, b):
        lo, hi = sorted((a, b))
        assert mos_from_r(lo) <= mos_from_r(hi)
        assert mos_from_r(lo, LITERAL) <= mos_from_r(hi, LITERAL)

    @given(finite)
    def test_in_range(self, r):
        assert 1.0 <= mos_from_r(r) <= 4.5


class TestRFromMos:
    def test_examples(self):
        assert r_from_mos(1.0) == pytest.approx(7.436, abs=1e-9)
        assert r_from_mos(4.5) == pytest.approx(97.56975, abs=1e-6)
        assert r_from_mos(3.121) == pytest.approx(59.7957, abs=1e-4)

    @pytest.mark.parametrize("bad", [0.99, 4.51, math.nan])
    def test_rejects_out_of_range(self, bad):
        with pytest.raises(ValueError):
            r_from_mos(bad)

    def test_strictly_increasing(self):
        values = [r_from_mos(1.0 + 3.5 * k / 1000) for k in range(1001)]
        assert all(a < b for a, b in zip(values, values[1:]))


class TestImpairments:
    def test_delay_examples(self):
        assert delay_impairment(0) == 0.0
        assert delay_impairment(177.3) == pytest.approx(4.2552, abs=1e-12)
        assert delay_impairment(471.95) == pytest.approx(43.73830, abs=1e-5)

    def test_delay_continuous_at_knee(self):
        knee = DEFAULT_PARAMS.id_knee_ms
        assert abs(delay_impairment(knee) - delay_impairment(math.nextafter(knee, 0))) <= 1e-9

    def test_loss_examples(self):
        assert loss_impairment(0) == DEFAULT_PARAMS.ie_c
        assert loss_impairment(3.21) == pytest.approx(31.3311, abs=1e-4)
        assert loss_impairment(10) == pytest.approx(39.7738, abs=1e-4)

    @pytest.mark.parametrize("fn", [delay_impairment, loss_impairment])
    def test_negative_rejected(self, fn):
        with pytest.raises(ValueError):
            fn(-0.1)


class TestConversationalMos:
    def test_zero_inputs(self):
        r, mos = conversational_mos(0, 0)
        assert r == pytest.approx(67.57, abs=1e-12)
        assert mos == pytest.approx(3.4811, abs=5e-5)

    def test_table_rows(self):
        assert conversational_mos(52.83, 3.21)[1] == pytest.approx(3.13, abs=0.01)
        assert conversational_mos(54.73, 0.71)[1] == pytest.approx(3.347, abs=5e-4)

    def test_two_factor_map_values(self):
        assert conversational_mos(471.95, 1.0, LITERAL)[1] == pytest.approx(1.76, abs=0.01)
        assert conversational_mos(54.73, 0.71, LITERAL)[1] == pytest.approx(3.27, abs=0.01)
        assert conversational_mos(0, 0, LITERAL)[1] == pytest.approx(3.3685, abs=5e-4)

    def test_r_is_clamped_for_reporting(self):
        r, mos = conversational_mos(2000, 50)
        assert r == DEFAULT_PARAMS.r_floor
        assert mos == 1.0

    @given(st.floats(0, 2000), st.floats(0, 100), st.floats(0, 500))
    def test_non_increasing(self, delay, loss, extra):
        base = conversational_mos(delay, loss)[1]
        assert conversational_mos(delay + extra, loss)[1] <= base + 1e-12
        assert conversational_mos(delay, min(100.0, loss + extra))[1] <= base + 1e-12

    @given(st.floats(0, 1000), st.floats(0, 100))
    def test_matches_oracle(self, delay, loss):
        want = float(mp_conversational_mos(delay, loss))
        assert conversational_mos(delay, loss)[1] == pytest.approx(want, rel=1e-9)


class TestListeningMos:
    def test_examples(self):
        assert ie_from_listening_mos(4.5) == 0.0
        assert ie_from_listening_mos(1.0) == pytest.approx(85.764, abs=1e-9)


class TestParams:
    @pytest.mark.parametrize("kwargs", [
        {"r0": 0}, {"r0": 101}, {"r_floor": 100, "r_ceil": 100},
        {"ie_a": math.inf}, {"mos_map": "other"},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            QualityParams(**kwargs)
