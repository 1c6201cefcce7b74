"""Analytic test functions, grid optimum finder, tabular loading."""

import math

import numpy as np
import pytest
from scipy import optimize

from lfbo import (
    AnalyticBenchmark,
    DomainError,
    InvalidArgumentError,
    SearchSpace,
    TabularBenchmark,
    forrester,
    get_benchmark,
    grid_argmax,
    list_benchmarks,
    load_tabular,
    synthetic_g,
)
from lfbo.composite import ENV_TRUE_PARAMS
from lfbo.errors import TableParseError, TableSchemaError


class TestFunctions:
    def test_smooth_1d_frozen_values(self):
        assert synthetic_g(-1.0) == pytest.approx(
            math.sin(3.0) - 1.6, abs=1e-15
        )
        assert synthetic_g(-1.0) == pytest.approx(-1.4588799919401328, abs=1e-14)
        assert synthetic_g(0.0) == 0.0

    def test_smooth_1d_vectorized(self):
        x = np.linspace(-1, 1, 7)
        np.testing.assert_allclose(
            synthetic_g(x), [synthetic_g(float(v)) for v in x]
        )

    def test_forrester_frozen_values(self):
        assert forrester(0.0) == pytest.approx(4 * math.sin(-4.0), abs=1e-14)
        assert forrester(0.0) == pytest.approx(3.027209981231713, abs=1e-13)
        assert forrester(1.0) == pytest.approx(16 * math.sin(8.0), abs=1e-13)


class TestGridArgmax:
    def test_quadratic_peak(self):
        x, v = grid_argmax(lambda t: -((t - 0.3) ** 2), 0.0, 1.0, n=10_001)
        assert x == pytest.approx(0.3, abs=1e-8)
        assert v == pytest.approx(0.0, abs=1e-12)

    def test_matches_scipy_on_smooth_1d(self):
        x, v = grid_argmax(synthetic_g, -1.0, 1.0)
        res = optimize.minimize_scalar(
            lambda t: -synthetic_g(t), bounds=(-1, 1), method="bounded",
            options={"xatol": 1e-12},
        )
        assert x == pytest.approx(res.x, abs=1e-6)
        assert v == pytest.approx(-res.fun, abs=1e-10)


class TestRegistry:
    def test_names(self):
        assert list_benchmarks() == ("synthetic1d", "forrester", "env")

    def test_unknown_name(self):
        with pytest.raises(InvalidArgumentError):
            get_benchmark("nope")

    def test_smooth_1d_optimum(self):
        bench = get_benchmark("synthetic1d")
        res = optimize.minimize_scalar(
            lambda t: -synthetic_g(t), bounds=(-1, 1), method="bounded",
            options={"xatol": 1e-12},
        )
        assert bench.optimum_x[0] == pytest.approx(res.x, abs=1e-6)
        assert bench.optimum_value == pytest.approx(-res.fun, abs=1e-10)
        assert bench.noise_sigma == 0.1

    def test_forrester_optimum(self):
        # classic curved-valley minimum near x = 0.7572, depth ~ -6.0207
        bench = get_benchmark("forrester")
        res = optimize.minimize_scalar(
            forrester, bounds=(0, 1), method="bounded", options={"xatol": 1e-12}
        )
        assert bench.optimum_x[0] == pytest.approx(res.x, abs=1e-6)
        assert bench.optimum_value == pytest.approx(-res.fun, abs=1e-9)
        assert bench.optimum_x[0] == pytest.approx(0.757248757841856, abs=1e-5)
        assert bench.optimum_value == pytest.approx(6.020740055767083, abs=1e-5)
        assert bench.noise_sigma == 0.0

    def test_env_benchmark(self):
        bench = get_benchmark("env")
        assert bench.optimum_value == 0.0
        np.testing.assert_array_equal(bench.optimum_x, ENV_TRUE_PARAMS.as_vector())
        rng = np.random.default_rng(0)
        assert bench.evaluate(bench.optimum_x, rng) == 0.0
        # the negated squared gap can never exceed zero
        for x in bench.space.sample_batch(rng, 100):
            assert bench.evaluate(x, rng) <= 0.0

    def test_registry_returns_same_object(self):
        assert get_benchmark("env") is get_benchmark("env")


class TestEvaluate:
    def test_noise_requires_rng(self):
        bench = get_benchmark("synthetic1d")
        with pytest.raises(InvalidArgumentError):
            bench.evaluate(np.array([0.0]))

    def test_noiseless_without_rng(self):
        bench = get_benchmark("forrester")
        x = np.array([0.5])
        assert bench.evaluate(x) == pytest.approx(-forrester(0.5))

    def test_noise_statistics(self):
        bench = get_benchmark("synthetic1d")
        rng = np.random.default_rng(1)
        x = np.array([0.2])
        draws = np.array([bench.evaluate(x, rng) for _ in range(4000)])
        assert draws.mean() == pytest.approx(synthetic_g(0.2), abs=0.01)
        assert draws.std() == pytest.approx(0.1, abs=0.01)

    def test_out_of_space_rejected(self):
        bench = get_benchmark("synthetic1d")
        with pytest.raises(DomainError):
            bench.evaluate(np.array([2.0]), np.random.default_rng(0))


def write_csv(path, lines):
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


class TestTabular:
    def test_load_negates_and_averages(self, tmp_path):
        # two configs, the one with the smaller mean loss wins after negation
        p = write_csv(
            tmp_path / "t.csv",
            [
                "depth,width,loss",
                "0,0,1.0",
                "0,0,3.0",
                "0,1,0.5",
                "1,0,4.0",
                "1,1,5.0",
            ],
        )
        bench = load_tabular(p)
        assert isinstance(bench, TabularBenchmark)
        assert bench.space.category_counts == {0: 2, 1: 2}
        np.testing.assert_array_equal(bench.optimum_x, [0.0, 1.0])
        assert bench.optimum_value == pytest.approx(-0.5)
        rng = np.random.default_rng(0)
        vals = {bench.evaluate(np.array([0.0, 0.0]), rng) for _ in range(50)}
        assert vals == {-1.0, -3.0}

    def test_missing_configuration_rejected(self, tmp_path):
        p = write_csv(
            tmp_path / "t.csv",
            ["a,loss", "0,1.0", "2,2.0"],  # code 1 absent but implied by max
        )
        with pytest.raises(TableSchemaError):
            load_tabular(p)

    def test_code_outside_declared_counts(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,1.0", "1,2.0", "2,3.0"])
        with pytest.raises(TableSchemaError):
            load_tabular(p, category_counts=(2,))

    def test_degenerate_single_category_is_schema_error(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,1.0"])
        with pytest.raises(TableSchemaError):
            load_tabular(p)

    def test_parse_error_reports_row(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,1.0", "x,2.0"])
        with pytest.raises(TableParseError, match="row 3"):
            load_tabular(p)

    def test_non_finite_outcome_rejected(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,nan"])
        with pytest.raises(TableParseError, match="row 2"):
            load_tabular(p)

    def test_field_count_mismatch(self, tmp_path):
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,1.0,9"])
        with pytest.raises(TableParseError):
            load_tabular(p)

    def test_empty_file(self, tmp_path):
        p = tmp_path / "t.csv"
        p.write_text("", encoding="utf-8")
        with pytest.raises(TableSchemaError):
            load_tabular(str(p))

    def test_tie_break_is_deterministic(self, tmp_path):
        # both configs average the same; the lowest sorted key wins
        p = write_csv(
            tmp_path / "t.csv", ["a,loss", "0,2.0", "1,2.0"]
        )
        bench = load_tabular(p)
        np.testing.assert_array_equal(bench.optimum_x, [0.0])
        again = load_tabular(p)
        np.testing.assert_array_equal(bench.optimum_x, again.optimum_x)

    def test_explicit_counts_fill_holes_check(self, tmp_path):
        # declaring 3 categories while only 2 appear must be caught
        p = write_csv(tmp_path / "t.csv", ["a,loss", "0,1.0", "1,2.0"])
        with pytest.raises(TableSchemaError):
            load_tabular(p, category_counts=(3,))


class TestAnalyticConstruction:
    def test_space_validation_on_build(self):
        space = SearchSpace.continuous([(0.0, 1.0)])
        bench = AnalyticBenchmark(
            name="toy",
            space=space,
            f=lambda x: float(x[0]),
            noise_sigma=0.0,
            optimum_x=np.array([1.0]),
            optimum_value=1.0,
        )
        assert bench.evaluate(np.array([0.25])) == 0.25
        with pytest.raises(InvalidArgumentError):
            AnalyticBenchmark(
                name="bad",
                space=space,
                f=lambda x: float(x[0]),
                noise_sigma=-1.0,
                optimum_x=np.array([1.0]),
                optimum_value=1.0,
            )
