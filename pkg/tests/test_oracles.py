import json
import time

import numpy as np
import pytest

from conftest import mixed_space, stub_command
from hazardsearch.evaluation import Evaluator
from hazardsearch.genotypes import case_study_space, random_solution, solution_to_json, unflatten
from hazardsearch.oracles import (
    ExternalProcessOracle,
    MTQOracle,
    OnemaxOracle,
    OracleError,
    Region,
    SafetyOracle,
    SyntheticRegionOracle,
    external_process_oracle,
    hash_uniform,
    mtq_oracle,
    onemax_space,
)


class TestSynthetic:
    def test_centre_with_certain_region_is_unsafe(self):
        space = mixed_space()
        centre = (1, 0.5, 0.5, 2, 0.5, 0.5)
        o = SyntheticRegionOracle(space, [Region(centre, 0.1, 1.0)])
        assert o.evaluate(unflatten(centre, space)) is True

    def test_zero_probability_everywhere_is_safe(self, rng):
        space = mixed_space()
        o = SyntheticRegionOracle(space, [Region((0, 0.5, 0.5, 0, 0.5, 0.5), 1.0, 0.0)])
        assert not any(o.evaluate(random_solution(space, rng)) for _ in range(500))

    def test_region_frequency(self, rng):
        space = mixed_space()
        o = SyntheticRegionOracle(space, [Region((0, 0.5, 0.5, 0, 0.5, 0.5), 1.0, 0.3)], noise_seed=11)
        verdicts = [o.evaluate(random_solution(space, rng)) for _ in range(10_000)]
        assert abs(np.mean(verdicts) - 0.3) <= 0.02

    def test_overlap_takes_largest_probability(self):
        space = mixed_space()
        c = (0, 0.5, 0.5, 0, 0.5, 0.5)
        o = SyntheticRegionOracle(space, [Region(c, 0.3, 0.2), Region(c, 0.1, 0.7)], 0.05)
        assert o.unsafe_probability(c) == 0.7
        assert o.unsafe_probability((1, 0.5, 0.5, 0, 0.5, 0.5)) == 0.2  # distance 1/6
        assert o.unsafe_probability((2, 1.0, 1.0, 2, 0.0, 0.0)) == 0.05

    def test_deterministic_and_order_independent(self, rng, region_oracle):
        sols = [random_solution(region_oracle.space, rng) for _ in range(300)]
        first = [region_oracle.evaluate(s) for s in sols]
        for _ in range(5):
            assert [region_oracle.evaluate(s) for s in sols] == first
        order = rng.permutation(len(sols))
        shuffled = {sols[i].key: region_oracle.evaluate(sols[i]) for i in order}
        assert [shuffled[s.key] for s in sols] == first

    def test_repeated_calls_identical(self, rng, region_oracle):
        s = random_solution(region_oracle.space, rng)
        assert len({region_oracle.evaluate(s) for _ in range(100)}) == 1

    def test_hash_depends_on_seed_and_vector(self):
        assert hash_uniform((1, 0.5), 0) == hash_uniform((1.0, 0.5), 0)
        assert hash_uniform((1, 0.5), 0) != hash_uniform((1, 0.5), 1)
        assert 0 <= hash_uniform((0.25,), 9) < 1

    def test_validation(self):
        space = mixed_space()
        with pytest.raises(ValueError):
            Region((0,) * 6, 0.1, 1.5)
        with pytest.raises(ValueError):
            SyntheticRegionOracle(space, [Region((0, 0.5), 0.1, 0.5)])
        with pytest.raises(ValueError):
            SyntheticRegionOracle(space, [], background_prob=2)

    def test_regions_from_mappings(self):
        o = SyntheticRegionOracle(mixed_space(), [{"center": [0] * 6, "radius": 0.2, "unsafe_prob": 1}])
        assert isinstance(o.regions[0], Region)


class TestMTQ:
    def test_peak_centre_unsafe(self):
        o = mtq_oracle(50, 150, 1.6, 1 / 32, (0.75, 0.75), (0.25, 0.25), threshold=25)
        assert o.evaluate(unflatten((0.75, 0.75), o.space))
        assert o.evaluate(unflatten((0.25, 0.25), o.space))

    def test_far_point_safe(self):
        o = MTQOracle(threshold=1.0)
        assert not o.evaluate(unflatten((0.0, 1.0), o.space))

    def test_formula(self):
        o = MTQOracle()
        x, y = 0.6, 0.7
        expected = max(50 * (1 - 16 * (x - 0.75) ** 2 / 1.6 - 16 * (y - 0.75) ** 2 / 1.6),
                       150 * (1 - 16 * (x - 0.25) ** 2 / (1 / 32) - 16 * (y - 0.25) ** 2 / (1 / 32)))
        assert o.value(x, y) == pytest.approx(expected)

    def test_level_set_uses_greater_or_equal(self):
        # along y = 0.75 through peak 1: f = 50 (1 - 16 dx^2 / 1.6)
        for eps in (-1e-6, 0.0, 1e-6):
            level = 25.0 + eps
            oracle = MTQOracle(threshold=level)
            xs = 0.75 + np.sqrt((1 - level / 50) * 1.6 / 16)
            f = oracle.value(xs, 0.75)
            assert abs(f - level) < 1e-9
            assert oracle.evaluate(unflatten((xs, 0.75), oracle.space)) == (f >= level)

    def test_rejects_bad_widths(self):
        with pytest.raises(ValueError):
            MTQOracle(s1=0)


class TestOnemax:
    def test_threshold(self):
        space = onemax_space(3, 4)
        o = OnemaxOracle(space, 5)
        assert o.evaluate(unflatten((1, 1, 1, 1, 1, 0, 0), space))
        assert not o.evaluate(unflatten((1, 1, 1, 1, 0, 0, 0), space))

    def test_needs_binary_space(self):
        with pytest.raises(ValueError):
            OnemaxOracle(mixed_space(), 2)


class TestExternal:
    def test_safe_stub(self, rng):
        space = case_study_space()
        with external_process_oracle(stub_command("safe"), 10, space) as o:
            assert o.evaluate(random_solution(space, rng)) is False

    def test_parity_stub_matches_rule(self, rng):
        space = case_study_space()
        with ExternalProcessOracle(stub_command("parity"), space, timeout=10) as o:
            for _ in range(100):
                s = random_solution(space, rng)
                assert o.evaluate(s) == (s.scenario.values[0] % 2 == 1)

    def test_request_is_canonical_json_line(self, rng, tmp_path):
        space = case_study_space()
        log = tmp_path / "requests.jsonl"
        s = random_solution(space, rng)
        with ExternalProcessOracle(stub_command("count", log), space, timeout=10) as o:
            o.evaluate(s)
        line = log.read_text(encoding="utf-8")
        assert line.endswith("\n") and line.count("\n") == 1
        assert json.loads(line) == solution_to_json(s, space)

    def test_hang_times_out(self, rng):
        space = case_study_space()
        o = ExternalProcessOracle(stub_command("hang"), space, timeout=0.5)
        start = time.monotonic()
        with pytest.raises(OracleError, match="timed out"):
            o.evaluate(random_solution(space, rng))
        assert time.monotonic() - start < 5
        o.close()

    def test_malformed_reply(self, rng):
        space = case_study_space()
        with ExternalProcessOracle(stub_command("garbage"), space, timeout=10) as o:
            with pytest.raises(OracleError, match="malformed"):
                o.evaluate(random_solution(space, rng))

    def test_child_exit(self, rng):
        space = case_study_space()
        with ExternalProcessOracle(stub_command("die"), space, timeout=10) as o:
            with pytest.raises(OracleError):
                o.evaluate(random_solution(space, rng))

    def test_missing_executable(self, rng):
        space = case_study_space()
        o = ExternalProcessOracle(["/nonexistent/oracle-binary"], space)
        with pytest.raises(OracleError, match="cannot start"):
            o.evaluate(random_solution(space, rng))

    def test_pool_serves_parallel_evaluator(self, rng):
        space = case_study_space()
        sols = list(dict.fromkeys(random_solution(space, rng) for _ in range(40)))
        with ExternalProcessOracle(stub_command("parity"), space, timeout=10, pool_size=3) as o:
            verdicts = Evaluator(o, workers=3).evaluate(sols, 0)
            assert len(o._children) <= 3
        assert verdicts == [s.scenario.values[0] % 2 == 1 for s in sols]


class _Flaky(SafetyOracle):
    def __init__(self, space, reply):
        super().__init__(space)
        self.reply = reply
        self.calls = 0

    def evaluate(self, solution):
        self.calls += 1
        return self.reply


class TestEvaluator:
    def test_order_and_log(self, rng, region_oracle):
        sols = list(dict.fromkeys(random_solution(region_oracle.space, rng) for _ in range(50)))
        ev = Evaluator(region_oracle, workers=4)
        verdicts = ev.evaluate(sols, first_id=10)
        assert verdicts == [region_oracle.evaluate(s) for s in sols]
        assert [e.solution_id for e in ev.log] == list(range(10, 10 + len(sols)))
        assert ev.oracle_calls == len(sols)
        assert all(e.wall_time >= 0 for e in ev.log)

    def test_cache_skips_oracle(self, rng):
        space = mixed_space()
        sols = [random_solution(space, rng) for _ in range(4)]
        o = _Flaky(space, True)
        ev = Evaluator(o, cache={sols[0].key: False, sols[2].key: True})
        assert ev.evaluate(sols, 0) == [False, True, True, True]
        assert o.calls == 2 and ev.oracle_calls == 2
        assert [e.worker for e in ev.log].count("cache") == 2

    @pytest.mark.parametrize("reply", [None, 2, "yes", 0.5])
    def test_non_boolean_verdict_rejected(self, rng, reply):
        space = mixed_space()
        with pytest.raises(OracleError):
            Evaluator(_Flaky(space, reply)).evaluate([random_solution(space, rng)], 0)

    def test_numpy_bool_accepted(self, rng):
        space = mixed_space()
        assert Evaluator(_Flaky(space, np.bool_(True))).evaluate([random_solution(space, rng)], 0) == [True]
