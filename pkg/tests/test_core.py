import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridmech.core import (
    AgentsView,
    ExpertView,
    Lottery,
    Option,
    Profile,
    agents_view,
    agents_views,
    canonicalize,
    expected_welfare,
    expert_view,
    expert_views,
    optimal_welfare,
    option_ranks,
    pointwise_ratio,
    profiles_from_agents_views,
    profiles_from_expert_views,
    social_welfare,
    welfare_matrix,
)
from hybridmech.exceptions import DegenerateBids, DegenerateExpert, InvalidLottery, InvalidProfile

from conftest import lotteries, profiles

VIEWS = Profile(0.3, 0.0, 1.0, 1.0, 0.9)


class TestCanonicalize:
    def test_already_normalized_is_unchanged(self):
        assert canonicalize({"A": 0.3, "B": 0, "none": 1}, {"A": 1, "B": 0.9}) == VIEWS

    def test_constant_expert_rejected(self):
        with pytest.raises(DegenerateExpert):
            canonicalize((5, 5, 5), (1, 1))

    def test_affine_rescale_keeps_raw_bids(self):
        assert canonicalize((2, 1, 0), (3, 6)) == Profile(1.0, 0.5, 0.0, 3.0, 6.0)

    def test_zero_bids_rejected(self):
        with pytest.raises(DegenerateBids):
            canonicalize((1, 0, 0), (0, 0))

    @pytest.mark.parametrize("expert,bids", [((1, -1, 0), (1, 1)), ((1, 0, 0), (-1, 1))])
    def test_negative_inputs_rejected(self, expert, bids):
        with pytest.raises(InvalidProfile):
            canonicalize(expert, bids)

    @pytest.mark.parametrize("expert", [{"A": 1, "B": 0}, (1, 0), ("a", 0, 1)])
    def test_malformed_expert(self, expert):
        with pytest.raises(InvalidProfile):
            canonicalize(expert, (1, 1))

    @given(st.lists(st.floats(0, 100), min_size=3, max_size=3), st.floats(0.01, 10), st.floats(0, 10))
    def test_result_is_normalized(self, raw, wa, wb):
        if max(raw) - min(raw) < 1e-6:
            return
        p = canonicalize(raw, (wa, wb))
        assert max(p.expert) == pytest.approx(1.0, abs=1e-12)
        assert min(p.expert) == pytest.approx(0.0, abs=1e-12)
        # vN-M preferences survive the rescale
        assert np.array_equal(np.argsort(raw, kind="stable"), np.argsort(p.expert, kind="stable"))


class TestProfile:
    def test_rejects_unnormalized(self):
        with pytest.raises(InvalidProfile):
            Profile(0.5, 0.2, 0.0, 1, 1)

    def test_rejects_nonfinite(self):
        with pytest.raises(InvalidProfile):
            Profile(1, 0, math.nan, 1, 1)

    def test_fields_are_floats(self):
        p = Profile(1, 0, 0, 2, 1)
        assert all(type(v) is float for v in (*p.expert, *p.bids))

    def test_json_round_trip(self):
        assert Profile.from_json(VIEWS.to_json()) == VIEWS

    @pytest.mark.parametrize(
        "obj,msg",
        [
            ({"bids": {"A": 1, "B": 1}}, "expert: missing field"),
            ({"expert": {"A": 1, "B": 0}, "bids": {"A": 1, "B": 1}}, "expert.none: missing field"),
            ({"expert": {"A": 1, "B": 0, "none": "x"}, "bids": {"A": 1, "B": 1}}, "expert.none: expected a number"),
            ({"expert": {"A": 1, "B": 0, "none": 0}, "bids": [1, 1]}, "bids: expected an object"),
            ([], "expected a JSON object"),
        ],
    )
    def test_json_errors_name_the_field(self, obj, msg):
        with pytest.raises(InvalidProfile, match=msg):
            Profile.from_json(obj)


class TestViews:
    def test_expert_view_example(self):
        v = expert_view(VIEWS)
        assert (v.x, v.h, v.l, v.z) == (0.3, 0.0, 1.0, 0.9)
        assert v.order == (Option.NONE, Option.A, Option.B)

    def test_expert_view_tie_priority(self):
        v = expert_view(Profile(1, 1, 0, 1, 1))
        assert v.order[:2] == (Option.A, Option.B)
        assert (v.x, v.h, v.l, v.z) == (1.0, 1.0, 1.0, 0.0)

    def test_expert_view_b_beats_none_on_tie(self):
        v = expert_view(Profile(1, 0, 0, 2, 1))
        assert v.order == (Option.A, Option.B, Option.NONE)
        assert (v.x, v.h, v.l, v.z) == (0.0, 1.0, 0.5, 0.0)

    def test_agents_view_example(self):
        v = agents_view(VIEWS)
        assert (v.y, v.h, v.l, v.n) == (0.9, 0.3, 0.0, 1.0)
        assert v.high_agent is Option.A

    def test_equal_bids_make_a_high(self):
        v = agents_view(Profile(0, 1, 0, 1, 1))
        assert (v.y, v.h, v.l, v.n, v.high_agent) == (1.0, 0.0, 1.0, 0.0, Option.A)

    def test_b_high(self):
        v = agents_view(Profile(1, 0, 0, 0.5, 2))
        assert (v.y, v.h, v.l, v.n, v.high_agent) == (0.25, 0.0, 1.0, 0.0, Option.B)
        assert v.low_agent is Option.A

    @given(profiles())
    def test_round_trips(self, p):
        assert expert_view(p).to_profile() == p.normalized()
        assert agents_view(p).to_profile() == p.normalized()

    @given(profiles())
    def test_scalar_matches_batch(self, p):
        V, W = p.arrays()
        x, hlz, order = expert_views(V, W)
        ev = expert_view(p)
        assert (ev.x, ev.h, ev.l, ev.z) == (x[0], *hlz[0])
        y, hln, high = agents_views(V, W)
        av = agents_view(p)
        assert (av.y, av.h, av.l, av.n, int(av.high_agent)) == (y[0], *hln[0], high[0])

    def test_batch_round_trip_on_enumeration(self):
        from shared import enumeration

        V, W, *_ = enumeration(51)
        assert np.array_equal(np.column_stack(profiles_from_expert_views(*expert_views(V, W))), np.column_stack([V, W]))
        assert np.array_equal(np.column_stack(profiles_from_agents_views(*agents_views(V, W))), np.column_stack([V, W]))

    @given(profiles())
    def test_deterministic(self, p):
        assert expert_view(p) == expert_view(p)
        assert agents_view(p) == agents_view(p)

    def test_view_types_rebuild_profiles(self):
        assert ExpertView(0.3, 0.0, 1.0, 0.9, (Option.NONE, Option.A, Option.B)).to_profile() == VIEWS
        assert AgentsView(0.9, 0.3, 0.0, 1.0, Option.A).to_profile() == VIEWS


class TestRanks:
    def test_priority(self):
        ranks = option_ranks(np.array([[1, 1, 1], [0, 1, 1], [0, 0, 1]], dtype=float))
        assert ranks.tolist() == [[0, 1, 2], [2, 0, 1], [1, 2, 0]]


class TestWelfare:
    def test_social_welfare_example(self):
        assert social_welfare(Option.A, VIEWS) == pytest.approx(1.3, abs=1e-15)
        assert social_welfare(Option.NONE, VIEWS) == 1.0
        assert social_welfare(Option.B, VIEWS) == pytest.approx(0.9, abs=1e-15)

    def test_optimal_example(self):
        o, sw = optimal_welfare(VIEWS)
        assert o is Option.A and sw == pytest.approx(1.3, abs=1e-15)

    def test_optimal_tie_goes_to_a(self):
        assert optimal_welfare(Profile(0, 0, 1, 1, 1)) == (Option.A, 1.0)

    def test_optimal_b(self):
        assert optimal_welfare(Profile(0, 1, 0, 1, 1)) == (Option.B, 2.0)

    def test_expected_example(self):
        assert expected_welfare(Lottery(0.4, 0.1, 0.5), VIEWS) == pytest.approx(1.11, abs=1e-14)

    @given(profiles())
    def test_point_mass_on_optimum(self, p):
        o, sw = optimal_welfare(p)
        assert expected_welfare(Lottery.point_mass(o), p) == pytest.approx(sw, abs=1e-15)

    def test_uniform_on_constant_welfare(self):
        # SW = 1 for every option
        p = Profile(0.0, 0.0, 1.0, 1.0, 1.0)
        assert expected_welfare(Lottery(1 / 3, 1 / 3, 1 / 3), p) == pytest.approx(1.0, abs=1e-15)

    @given(profiles(), lotteries())
    def test_optimum_dominates(self, p, probs):
        assert optimal_welfare(p)[1] >= expected_welfare(Lottery.from_array(probs), p) - 1e-12

    @given(profiles(), st.floats(1e-3, 1e3))
    def test_bid_scale_invariance(self, p, c):
        scaled = Profile(*p.expert, c * p.w_a, c * p.w_b)
        for o in Option:
            assert social_welfare(o, scaled) == pytest.approx(social_welfare(o, p), rel=1e-12, abs=1e-12)

    @given(profiles(), lotteries())
    def test_batch_matches_scalar(self, p, probs):
        V, W = p.arrays()
        sw = welfare_matrix(V, W)[0]
        assert sw.tolist() == pytest.approx([social_welfare(o, p) for o in Option], abs=1e-15)
        expected = expected_welfare(Lottery.from_array(probs), p)
        assert pointwise_ratio(probs[None, :], V, W)[0] == pytest.approx(optimal_welfare(p)[1] / expected, rel=1e-12)


class TestLottery:
    @pytest.mark.parametrize("probs", [(0.5, 0.5, 0.1), (-0.1, 0.6, 0.5), (math.nan, 0.5, 0.5)])
    def test_invalid(self, probs):
        with pytest.raises(InvalidLottery):
            Lottery(*probs)

    def test_tolerances(self):
        Lottery(-1e-13, 0.5, 0.5 + 1e-13)
        Lottery(0.5, 0.5, 1e-10)

    def test_point_mass(self):
        assert Lottery.point_mass(Option.B).is_point_mass()
        assert not Lottery(0.5, 0.5, 0).is_point_mass()
        assert Lottery(0.5, 0.25, 0.25)[Option.NONE] == 0.25
