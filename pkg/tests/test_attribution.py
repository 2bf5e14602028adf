import numpy as np
import pytest

from companysim.attribution import (
    MonthlyReturnPanel,
    adjusted_r_squared,
    attribution_metric,
    cross_sectional_fit,
    monthly_cumulative_returns,
    save_attribution_csv,
    winsorize,
)
from companysim.cluster import ClusterAssignment
from companysim.errors import DataValidationError
from companysim.similarity import ReturnPanel


def _panel(series):
    return ReturnPanel({k: dict(v) for k, v in series.items()})


def oracle_dummy_regression(y, labels):
    """Solve the cluster-dummy regression by explicit normal equations."""
    y = np.asarray(y, dtype=np.float64)
    labels = np.asarray(labels)
    present = sorted(int(c) for c in np.unique(labels))
    ref = present[0]
    dummies = present[1:]
    X = np.ones((y.size, 1 + len(dummies)))
    for col, c in enumerate(dummies, start=1):
        X[:, col] = (labels == c).astype(np.float64)
    beta = np.linalg.solve(X.T @ X, X.T @ y)
    resid = y - X @ beta
    sstot = float(((y - y.mean()) ** 2).sum())
    r2 = 0.0 if sstot == 0 else 1.0 - float((resid ** 2).sum()) / sstot
    coefs = {ref: 0.0}
    coefs.update({c: float(b) for c, b in zip(dummies, beta[1:])})
    return float(beta[0]), coefs, r2


# ---------------------------------------------------------------------------
# Monthly compounding


def test_monthly_compounding_hand_oracle():
    days = [f"2020-01-{d:02d}" for d in range(1, 23)]
    series = {d: 0.01 for d in days}
    panel = _panel({"A": series})
    monthly = monthly_cumulative_returns(panel, min_obs=15)
    got = monthly.returns["2020-01"]["A"]
    assert got == pytest.approx(1.01 ** 22 - 1, abs=1e-12)


def test_monthly_min_obs_drops_sparse_months():
    jan = {f"2020-01-{d:02d}": 0.01 for d in range(1, 20)}
    feb = {f"2020-02-{d:02d}": 0.01 for d in range(1, 5)}
    panel = _panel({"A": {**jan, **feb}})
    monthly = monthly_cumulative_returns(panel, min_obs=15)
    assert "2020-01" in monthly.returns
    assert "2020-02" not in monthly.returns


def test_monthly_mixed_signs():
    days = {"2020-03-%02d" % d: r for d, r in zip(range(1, 17), [0.02, -0.01] * 8)}
    panel = _panel({"A": days})
    monthly = monthly_cumulative_returns(panel, min_obs=15)
    expected = (1.02 * 0.99) ** 8 - 1
    assert monthly.returns["2020-03"]["A"] == pytest.approx(expected, abs=1e-12)


def test_monthly_all_sparse_raises():
    panel = _panel({"A": {"2020-01-02": 0.01}})
    with pytest.raises(DataValidationError):
        monthly_cumulative_returns(panel, min_obs=15)


# ---------------------------------------------------------------------------
# Cross-sectional regression vs normal-equations oracle


def test_fit_matches_normal_equations_on_random_cross_sections():
    rng = np.random.default_rng(31)
    for trial in range(8):
        n = int(rng.integers(12, 60))
        k = int(rng.integers(2, 6))
        labels = rng.integers(0, k, size=n)
        labels[:k] = np.arange(k)  # every cluster present
        y = rng.normal(size=n)
        fit = cross_sectional_fit(y, labels)
        o_int, o_coefs, o_r2 = oracle_dummy_regression(y, labels)
        assert fit.intercept == pytest.approx(o_int, abs=1e-9)
        assert fit.r_squared == pytest.approx(o_r2, abs=1e-9)
        assert set(fit.coefficients) == set(o_coefs)
        for c, b in o_coefs.items():
            assert fit.coefficients[c] == pytest.approx(b, abs=1e-9)


def test_fit_reference_is_smallest_present_cluster():
    fit = cross_sectional_fit(np.array([0.1, 0.2, 0.3]), np.array([4, 2, 4]))
    assert fit.reference_cluster == 2
    assert fit.coefficients[2] == 0.0


def test_fit_perfect_cluster_structure_r2_one():
    means = {0: -0.05, 1: 0.02, 2: 0.11}
    labels = np.array([i % 3 for i in range(30)])
    y = np.array([means[c] for c in labels])
    fit = cross_sectional_fit(y, labels)
    assert abs(fit.r_squared - 1.0) <= 1e-12
    assert not fit.degenerate
    assert fit.intercept == pytest.approx(means[0], abs=1e-12)
    assert fit.coefficients[1] == pytest.approx(means[1] - means[0], abs=1e-12)
    assert fit.coefficients[2] == pytest.approx(means[2] - means[0], abs=1e-12)


def test_fit_constant_returns_degenerate():
    fit = cross_sectional_fit(np.full(4, 0.01), np.array([0, 0, 1, 1]))
    assert fit.degenerate
    assert fit.r_squared == 0.0


def test_fit_requires_two_companies():
    with pytest.raises(DataValidationError):
        cross_sectional_fit(np.array([0.1]), np.array([0]))


def test_fit_rejects_misaligned_inputs():
    with pytest.raises(ValueError):
        cross_sectional_fit(np.array([0.1, 0.2]), np.array([0]))


# ---------------------------------------------------------------------------
# Winsorization


def test_winsorize_clips_to_quantiles():
    values = np.arange(101, dtype=np.float64)
    clipped = winsorize(values, 0.05)
    lo, hi = np.quantile(values, [0.05, 0.95])
    assert clipped.min() == lo
    assert clipped.max() == hi
    assert clipped[50] == 50.0


def test_winsorize_rejects_bad_fraction():
    values = np.array([1.0, 2.0])
    for bad in (0.0, 0.5, -0.1):
        with pytest.raises(ValueError):
            winsorize(values, bad)


# ---------------------------------------------------------------------------
# Full metric


def test_attribution_metric_averages_months():
    rng = np.random.default_rng(33)
    ids = [f"c{i:02d}" for i in range(20)]
    labels = np.array([i % 4 for i in range(20)])
    assignment = ClusterAssignment(ids, labels, 4, "test")
    months = {}
    for m in ("2021-01", "2021-02"):
        months[m] = {i: float(rng.normal(0.01 * (idx % 4), 0.001))
                     for idx, i in enumerate(ids)}
    monthly = MonthlyReturnPanel(sorted(months), months)
    report = attribution_metric(monthly, assignment)
    assert report.n_months == 2
    expected = np.mean([report.per_month[m] for m in sorted(months)])
    assert report.avg_r_squared == pytest.approx(float(expected), abs=1e-12)
    assert 0.9 < report.avg_r_squared <= 1.0


def test_attribution_metric_skips_thin_months():
    ids = ["a", "b", "c"]
    assignment = ClusterAssignment(ids, np.array([0, 1, 1]), 2, "test")
    months = {
        "2021-01": {"a": 0.01, "b": 0.02, "c": 0.03},
        "2021-02": {"a": 0.01},
    }
    monthly = MonthlyReturnPanel(sorted(months), months)
    report = attribution_metric(monthly, assignment, min_companies=2)
    assert list(report.per_month) == ["2021-01"]


def test_attribution_metric_ignores_companies_outside_assignment():
    ids = ["a", "b", "c", "d"]
    assignment = ClusterAssignment(ids, np.array([0, 0, 1, 1]), 2, "test")
    months = {"2021-01": {"a": 0.01, "b": 0.012, "c": -0.02, "d": -0.018,
                          "zz": 9.9}}
    monthly = MonthlyReturnPanel(sorted(months), months)
    report = attribution_metric(monthly, assignment)
    assert report.fits[0].n_companies == 4


def test_attribution_metric_winsorized_tames_outlier():
    ids = [f"c{i:02d}" for i in range(40)]
    labels = np.array([i % 2 for i in range(40)])
    assignment = ClusterAssignment(ids, labels, 2, "test")
    rng = np.random.default_rng(34)
    noisy = {i: (0.01 if labels[idx] == 0 else -0.01)
             + float(rng.normal(0, 0.001)) for idx, i in enumerate(ids)}
    noisy["c00"] = 5.0
    monthly = MonthlyReturnPanel(["2021-01"], {"2021-01": noisy})
    raw = attribution_metric(monthly, assignment)
    tamed = attribution_metric(monthly, assignment, winsorize_fraction=0.05)
    assert tamed.avg_r_squared > raw.avg_r_squared


def test_attribution_metric_no_usable_months_raises():
    assignment = ClusterAssignment(["a"], np.array([0]), 1, "test")
    monthly = MonthlyReturnPanel(["2021-01"], {"2021-01": {"a": 0.01}})
    with pytest.raises(DataValidationError):
        attribution_metric(monthly, assignment, min_companies=2)


# ---------------------------------------------------------------------------
# Adjusted R^2 and the CSV table


def test_adjusted_r_squared_matches_dof_formula():
    rng = np.random.default_rng(55)
    y = rng.normal(size=20)
    labels = np.array([i % 3 for i in range(20)])
    fit = cross_sectional_fit(y, labels)
    n, p = 20, 2
    expected = 1.0 - (1.0 - fit.r_squared) * (n - 1) / (n - 1 - p)
    assert adjusted_r_squared(fit) == pytest.approx(expected, abs=1e-12)


def test_adjusted_r_squared_zero_without_residual_dof():
    # 3 companies, 3 clusters: saturated fit, no residual degrees of freedom
    fit = cross_sectional_fit(np.array([0.1, 0.2, 0.3]), np.array([0, 1, 2]))
    assert adjusted_r_squared(fit) == 0.0


def test_save_attribution_csv_layout(tmp_path):
    ids = [f"c{i:02d}" for i in range(12)]
    labels = np.array([i % 3 for i in range(12)])
    assignment = ClusterAssignment(ids, labels, 3, "test")
    rng = np.random.default_rng(8)
    months = {
        m: dict(zip(ids, rng.normal(0.0, 0.02, size=12)))
        for m in ("2021-01", "2021-02")
    }
    monthly = MonthlyReturnPanel(sorted(months), months)
    report = attribution_metric(monthly, assignment)
    out = tmp_path / "attr.csv"
    save_attribution_csv(report, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "month,r2,adj_r2,n_obs,n_clusters_present"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert first[0] == "2021-01"
    assert float(first[1]) == pytest.approx(report.fits[0].r_squared, abs=1e-8)
    assert float(first[2]) == pytest.approx(
        adjusted_r_squared(report.fits[0]), abs=1e-8
    )
    assert first[3] == "12" and first[4] == "3"
    summary = lines[-1].split(",")
    assert summary[0] == "average"
    assert float(summary[1]) == pytest.approx(report.avg_r_squared, abs=1e-8)
    assert summary[3] == "24"
