import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import mixed_space, small_trajectory_space
from hazardsearch.genotypes import (
    BoundaryBox,
    CompleteSolution,
    MlcOutputSequence,
    ParamSpec,
    Scenario,
    SearchSpaceSpec,
    Trajectory,
    case_study_space,
    flatten,
    interpolate_trajectory,
    is_valid,
    random_mlco,
    random_scenario,
    random_solution,
    repair,
    repair_mlco_vector,
    solution_from_json,
    solution_to_json,
    trajectory_boxes,
    unflatten,
)


def traj(start, end, label=0):
    return Trajectory(label, BoundaryBox(*start), BoundaryBox(*end))


class TestParamSpec:
    def test_numeric_bounds_must_be_ordered(self):
        with pytest.raises(ValueError):
            ParamSpec.numeric("x", 1.0, 1.0)

    def test_categorical_needs_two_levels(self):
        with pytest.raises(ValueError):
            ParamSpec.categorical("c", 1)

    def test_names_unique_within_space(self):
        with pytest.raises(ValueError):
            SearchSpaceSpec((ParamSpec.numeric("x", 0, 1), ParamSpec.categorical("x", 2)))

    @pytest.mark.parametrize("p", [ParamSpec.numeric("x", -1, 2.5), ParamSpec.categorical("c", 4),
                                   ParamSpec.numeric("t", 1, 10, integer=True)])
    def test_dict_round_trip(self, p):
        assert ParamSpec.from_dict(p.to_dict()) == p


class TestSearchSpace:
    def test_case_study_has_29_dimensions(self):
        space = case_study_space()
        assert space.n_scenario == 7
        assert space.n_mlco == 22
        assert space.dimensionality == 29

    def test_dimensionality_formula(self):
        spec = SearchSpaceSpec((ParamSpec.numeric("x", 0, 1),), max_trajectories=3)
        assert spec.dimensionality == 1 + 3 * 11

    def test_box_gene_domains(self):
        space = small_trajectory_space()
        params = {p.name: p for p in space.mlco_params}
        assert params["trj0.class"].cardinality == 2
        assert (params["trj1.start.t"].lower, params["trj1.start.t"].upper) == (1, 10)
        assert params["trj0.end.x_max"].upper == 80
        assert params["trj0.end.y_min"].upper == 60

    def test_dict_round_trip(self):
        for space in (case_study_space(), mixed_space()):
            assert SearchSpaceSpec.from_dict(space.to_dict()) == space


class TestRandomSampling:
    def test_numeric_in_range(self, rng):
        spec = SearchSpaceSpec((ParamSpec.numeric("x", 0, 1),), max_trajectories=1)
        for _ in range(200):
            (x,) = random_scenario(spec, rng).values
            assert 0 <= x <= 1

    def test_binary_categorical(self, rng):
        spec = SearchSpaceSpec((ParamSpec.categorical("c", 2),), max_trajectories=1)
        assert {random_scenario(spec, rng).values[0] for _ in range(200)} == {0, 1}

    def test_categorical_frequencies(self, rng):
        # 2500 +- 150 per code is a ~3.5 sigma band for Binomial(10000, 1/4)
        spec = SearchSpaceSpec((ParamSpec.categorical("c", 4),), max_trajectories=1)
        codes = [random_scenario(spec, rng).values[0] for _ in range(10_000)]
        counts = np.bincount(codes, minlength=4)
        assert np.all(np.abs(counts - 2500) <= 150)
        assert stats.chisquare(counts).pvalue > 1e-4

    def test_random_genotypes_are_valid(self, rng):
        space = case_study_space()
        for _ in range(300):
            s = random_solution(space, rng)
            assert is_valid(s, space)
            assert all(isinstance(v, int) for v in s.key)


class TestInterpolation:
    def test_midpoint(self):
        box = interpolate_trajectory(traj((0, 0, 10, 0, 10), (10, 10, 20, 10, 20)), 5)
        assert box == BoundaryBox(5, 5, 15, 5, 15)

    def test_endpoints_exact(self):
        t = traj((2, 3, 17, 5, 9), (7, 30, 41, 8, 19))
        assert interpolate_trajectory(t, 2) == t.start
        assert interpolate_trajectory(t, 7) == t.end

    def test_hand_example(self):
        box = interpolate_trajectory(traj((0, 0, 8, 0, 6), (3, 3, 11, 6, 12)), 1)
        assert box.as_tuple()[1:] == (1, 9, 2, 8)

    def test_out_of_span_rejected(self):
        t = traj((2, 0, 1, 0, 1), (4, 0, 1, 0, 1))
        for bad in (1, 5):
            with pytest.raises(ValueError):
                interpolate_trajectory(t, bad)

    def test_rounds_to_nearest(self):
        # x_min moves 0 -> 1 over 4 steps: 0.25 -> 0, 0.5 -> 1 (half up), 0.75 -> 1
        t = traj((0, 0, 0, 0, 0), (4, 1, 1, 1, 1))
        assert [b.x_min for b in trajectory_boxes(t)] == [0, 0, 1, 1, 1]

    @given(st.tuples(*[st.integers(0, 100)] * 8), st.integers(1, 30), st.integers(0, 30))
    def test_monotone_in_time(self, coords, span, t0):
        a = coords[:4]
        b = coords[4:]
        t = traj((t0, *a), (t0 + span, *b))
        boxes = trajectory_boxes(t)
        for k in range(4):
            series = [bx.as_tuple()[k + 1] for bx in boxes]
            diffs = np.diff(series)
            assert (diffs >= 0).all() if b[k] >= a[k] else (diffs <= 0).all()


class TestRepair:
    def test_x_beyond_frame_clamped_then_ordered(self):
        space = case_study_space()
        rng = np.random.default_rng(0)
        v = np.array(random_mlco(space, rng).values, dtype=float)
        v[2], v[3] = 850, 100  # trj0.start.x_min, x_max
        fixed = repair_mlco_vector(v, space)
        assert (fixed[2], fixed[3]) == (100, 800)

    def test_out_of_order_pair_swapped(self):
        space = case_study_space()
        v = np.array(random_mlco(space, np.random.default_rng(1)).values, dtype=float)
        v[2], v[3] = 500, 300
        fixed = repair_mlco_vector(v, space)
        assert (fixed[2], fixed[3]) == (300, 500)

    def test_start_end_time_swapped(self):
        space = case_study_space()
        v = np.array(random_mlco(space, np.random.default_rng(2)).values, dtype=float)
        v[1], v[6] = 90, 10
        fixed = repair_mlco_vector(v, space)
        assert (fixed[1], fixed[6]) == (10, 90)

    def test_valid_genotype_unchanged(self, rng):
        space = case_study_space()
        for _ in range(50):
            s = random_solution(space, rng)
            assert repair(s, space) == s

    def test_categorical_wraps(self):
        space = mixed_space()
        assert repair(Scenario((4, 0.5, 0.5)), space).values == (1, 0.5, 0.5)
        assert repair(Scenario((-1, 2.0, -3.0)), space).values == (2, 1.0, 0.0)

    def test_unknown_type(self):
        with pytest.raises(TypeError):
            repair(object(), mixed_space())

    @settings(max_examples=200)
    @given(st.lists(st.floats(-2000, 2000, allow_nan=False), min_size=29, max_size=29))
    def test_idempotent_and_valid(self, raw):
        space = case_study_space()
        part = CompleteSolution(Scenario(tuple(raw[:7])), MlcOutputSequence(tuple(raw[7:])))
        once = repair(part, space)
        assert is_valid(once, space)
        assert repair(once, space) == once


class TestFlatten:
    def test_case_study_length(self, rng):
        space = case_study_space()
        assert len(flatten(random_solution(space, rng), space)) == 29

    def test_length_checked(self):
        with pytest.raises(ValueError):
            flatten(CompleteSolution(Scenario((1,)), MlcOutputSequence((0.2,))), case_study_space())

    def test_round_trip(self, rng):
        space = case_study_space()
        for _ in range(100):
            s = random_solution(space, rng)
            assert unflatten(flatten(s, space), space) == s

    def test_second_trajectory_class_is_one_position(self, rng):
        space = case_study_space()
        s = random_solution(space, rng)
        v = list(flatten(s, space))
        pos = 7 + 11
        v[pos] = 1 - v[pos]
        other = unflatten(v, space)
        diff = [i for i, (x, y) in enumerate(zip(flatten(s), flatten(other))) if x != y]
        assert diff == [pos]
        assert other.mlco.trajectories[1].label != s.mlco.trajectories[1].label

    def test_equality_ignores_results(self, rng):
        space = mixed_space()
        s = random_solution(space, rng)
        t = unflatten(s.key, space, is_unsafe=True, fitness=0.3)
        assert s == t and hash(s) == hash(t)

    def test_fitness_requires_verdict(self):
        with pytest.raises(ValueError):
            CompleteSolution(Scenario((0,)), MlcOutputSequence((0,)), None, 0.5)


class TestJson:
    def test_canonical_shape(self, rng):
        space = case_study_space()
        s = unflatten(random_solution(space, rng).key, space, True, 0.25)
        obj = solution_to_json(s, space)
        assert set(obj) == {"scenario", "mlco", "is_unsafe", "fitness"}
        assert len(obj["scenario"]) == 7
        assert len(obj["mlco"]) == 2
        label, start, end = obj["mlco"][0]
        assert isinstance(label, int) and len(start) == 5 and len(end) == 5

    def test_round_trip_custom_layout(self, rng):
        space = mixed_space()
        s = unflatten(random_solution(space, rng).key, space, False, 0.7)
        back = solution_from_json(solution_to_json(s, space), space)
        assert back == s and back.is_unsafe is False and back.fitness == 0.7
        assert isinstance(back.key[0], int) and isinstance(back.key[1], float)
