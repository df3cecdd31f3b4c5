"""Scaling-curve fitting, budget optimization, and parallelism analysis."""

import numpy as np
import pytest

from kbitq import (
    MetricKind,
    ScalingRecord,
    fit_curves,
    parallelism_offsets,
    pareto_optimal_precision,
    read_records_csv,
    scaling_report,
)
from kbitq.errors import (
    DisjointDomainError,
    InsufficientDataError,
    InvalidSpecError,
    OutOfRangeError,
    ParseError,
)


def rec(precision, total_bits, value, kind="accuracy", family="synth"):
    return ScalingRecord(
        family=family,
        n_params=int(total_bits / precision),
        precision_bits=precision,
        total_bits=total_bits,
        metric_kind=kind,
        value=value,
    )


def line_records(precision, slope, offset, xs, kind="accuracy"):
    """Records lying exactly on value = slope * log2(bits) + offset."""
    return [rec(precision, 2.0**x, slope * x + offset, kind=kind) for x in xs]


class TestRecords:
    def test_accuracy_range_enforced(self):
        with pytest.raises(InvalidSpecError):
            rec(4, 2**20, 1.5)

    def test_perplexity_positive(self):
        with pytest.raises(InvalidSpecError):
            rec(4, 2**20, -1.0, kind="perplexity")

    def test_total_bits_positive(self):
        with pytest.raises(InvalidSpecError):
            rec(4, 0, 0.5)


class TestFitCurves:
    def test_two_point_interpolation(self):
        curves = fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 0.6)])
        assert curves[4.0].evaluate(2**22) == pytest.approx(0.5, abs=1e-12)

    def test_exact_at_knots(self):
        records = [rec(4, 2**20, 0.41), rec(4, 2**22, 0.47), rec(4, 2**25, 0.58)]
        curves = fit_curves(records)
        for r in records:
            assert curves[4.0].evaluate(r.total_bits) == pytest.approx(r.value, abs=1e-12)

    def test_duplicate_abscissae_averaged(self):
        curves = fit_curves(
            [rec(4, 2**20, 0.40), rec(4, 2**20, 0.44), rec(4, 2**24, 0.6)]
        )
        assert curves[4.0].evaluate(2**20) == pytest.approx(0.42, abs=1e-12)

    def test_single_abscissa_group_is_insufficient(self):
        with pytest.raises(InsufficientDataError):
            fit_curves([rec(4, 2**20, 0.40), rec(4, 2**20, 0.44)])

    def test_offset_recovery(self):
        xs = [20, 22, 24, 26]
        records = []
        for precision, offset in ((3.0, 0.0), (4.0, 0.1), (8.0, -0.05)):
            records += line_records(precision, 0.02, offset, xs)
        curves = fit_curves(records)
        for precision, offset in ((3.0, 0.0), (4.0, 0.1), (8.0, -0.05)):
            for x in xs:
                expected = 0.02 * x + offset
                assert curves[precision].evaluate_log2(x) == pytest.approx(expected, abs=1e-12)

    def test_no_extrapolation(self):
        curves = fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 0.6)])
        with pytest.raises(OutOfRangeError):
            curves[4.0].evaluate(2**25)
        with pytest.raises(OutOfRangeError):
            curves[4.0].evaluate(2**19)

    def test_mixed_metric_kinds_rejected(self):
        with pytest.raises(InvalidSpecError):
            fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 5.0, kind="perplexity")])


class TestParetoOptimalPrecision:
    def test_single_curve_wins_everywhere(self):
        curves = fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 0.6)])
        assert pareto_optimal_precision(curves, [2**21, 2**23]) == [4.0, 4.0]

    def test_planted_optimum(self):
        xs = [20, 23, 26]
        records = []
        for precision, offset in ((3.0, -0.02), (4.0, 0.08), (5.0, 0.03), (16.0, 0.0)):
            records += line_records(precision, 0.01, offset, xs)
        curves = fit_curves(records)
        budgets = [2.0**x for x in (20.5, 22, 24, 25.5)]
        assert pareto_optimal_precision(curves, budgets) == [4.0] * len(budgets)

    def test_perplexity_flips_direction(self):
        xs = [20, 23, 26]
        records = []
        for precision, offset in ((3.0, 5.0), (4.0, 1.5), (5.0, 3.0)):
            records += line_records(precision, -0.05, offset, xs, kind="perplexity")
        curves = fit_curves(records)
        assert pareto_optimal_precision(curves, [2**22]) == [4.0]

    def test_crossing_curves_switch_at_intersection(self):
        # value_a = 0.02 x, value_b = 0.05 x - 0.66 cross at x = 22
        records = line_records(4.0, 0.02, 0.0, [20, 26]) + line_records(
            8.0, 0.05, -0.66, [20, 26]
        )
        curves = fit_curves(records)
        assert pareto_optimal_precision(curves, [2.0**21.9]) == [4.0]
        assert pareto_optimal_precision(curves, [2.0**22.1]) == [8.0]

    def test_tie_goes_to_lower_precision(self):
        records = line_records(4.0, 0.02, 0.0, [20, 26]) + line_records(
            8.0, 0.02, 0.0, [20, 26]
        )
        curves = fit_curves(records)
        assert pareto_optimal_precision(curves, [2**23]) == [4.0]

    def test_budget_outside_all_ranges(self):
        curves = fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 0.6)])
        with pytest.raises(OutOfRangeError):
            pareto_optimal_precision(curves, [2**30])

    def test_invariant_under_monotone_transform(self):
        xs = [20, 22, 24]
        base = []
        for precision, offset in ((3.0, 0.01), (4.0, 0.06), (5.0, 0.02)):
            base += line_records(precision, 0.01, offset, xs)
        curves = fit_curves(base)
        transformed = fit_curves(
            [
                rec(r.precision_bits, r.total_bits, float(np.tanh(3 * r.value)))
                for r in base
            ]
        )
        budgets = [2.0**x for x in (20.5, 21.5, 23.5)]
        assert pareto_optimal_precision(curves, budgets) == pareto_optimal_precision(
            transformed, budgets
        )


class TestParallelism:
    def test_exactly_parallel_curves(self):
        xs = [20, 22, 24]
        records = line_records(3.0, 0.02, 0.0, xs) + line_records(4.0, 0.02, 0.1, xs)
        stats = parallelism_offsets(fit_curves(records))
        assert stats[3.0].dispersion == pytest.approx(0.0, abs=1e-12)
        assert stats[4.0].dispersion == pytest.approx(0.0, abs=1e-12)
        assert stats[4.0].offset == pytest.approx(0.05, abs=1e-12)
        assert stats[3.0].offset == pytest.approx(-0.05, abs=1e-12)

    def test_slope_difference_dispersion_matches_analytic_value(self):
        # deviations are +-(delta/2) x + const; over a uniform n-point grid
        # on [x0, x1] the population std of x is known in closed form
        delta, n = 0.01, 65
        for width in (2.0, 4.0):
            xs = [20.0, 20.0 + width]
            records = line_records(3.0, 0.001, 0.0, xs) + line_records(
                4.0, 0.001 + delta, 0.0, xs
            )
            stats = parallelism_offsets(fit_curves(records), grid_points=n)
            grid_std = width * np.sqrt((n + 1) / (12 * (n - 1)))
            expected = delta / 2 * grid_std
            assert stats[4.0].dispersion == pytest.approx(expected, rel=1e-9)
        # dispersion doubled with the doubled range: linear growth

    def test_single_curve_zero_offset_zero_dispersion(self):
        stats = parallelism_offsets(fit_curves([rec(4, 2**20, 0.4), rec(4, 2**24, 0.6)]))
        assert stats[4.0].offset == 0.0
        assert stats[4.0].dispersion == 0.0

    def test_disjoint_ranges_rejected(self):
        records = line_records(3.0, 0.02, 0.0, [10, 12]) + line_records(
            4.0, 0.02, 0.0, [20, 22]
        )
        with pytest.raises(DisjointDomainError):
            parallelism_offsets(fit_curves(records))


class TestCsv:
    HEADER = "family,n_params,precision_bits,total_bits,metric_kind,value\n"

    def test_round_trip(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(
            self.HEADER
            + "opt,1000000,4,4194304,accuracy,0.41\n"
            + "opt,2000000,4,8388608,accuracy,0.47\n"
        )
        records = read_records_csv(path)
        assert len(records) == 2
        assert records[0].metric_kind is MetricKind.ACCURACY
        assert records[1].total_bits == 8388608

    def test_missing_header(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("opt,1000000,4,4194304,accuracy,0.41\n")
        with pytest.raises(ParseError):
            read_records_csv(path)

    def test_bad_rows_reported_with_line_numbers(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text(
            self.HEADER
            + "opt,1000000,4,4194304,accuracy,0.41\n"
            + "opt,not_a_number,4,8388608,accuracy,0.47\n"
            + "opt,3000000,4,bad,accuracy,0.5\n"
        )
        with pytest.raises(ParseError) as excinfo:
            read_records_csv(path)
        assert "line 3" in str(excinfo.value)
        assert "line 4" in str(excinfo.value)

    def test_empty_file(self, tmp_path):
        path = tmp_path / "r.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            read_records_csv(path)


class TestReport:
    def test_report_structure(self):
        xs = [20, 23, 26]
        records = []
        for precision, offset in ((3.0, -0.02), (4.0, 0.08)):
            records += line_records(precision, 0.01, offset, xs)
        report = scaling_report(records, [2**22])
        assert report["metric_kind"] == "accuracy"
        assert set(report["curves"]) == {"3.0", "4.0"}
        assert report["pareto"] == [{"budget": 2.0**22, "best_precision": 4.0}]
        assert "3.0" in report["parallelism"]
