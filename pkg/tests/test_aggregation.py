import numpy as np
import pytest

from cyberrisk.core import SeedStream, build_portfolio
from cyberrisk.aggregation import (
    CollectiveModel,
    CoxFrequency,
    LossSample,
    PoissonFrequency,
    SharedFactorFrequency,
    portfolio_total,
    simulate_total,
    wald_moments,
)
from cyberrisk.dependence import GumbelCopula
from cyberrisk.frequency import (
    ConstantIntensity,
    FactorModel,
    OuFactor,
)
from cyberrisk.severity import FixedSeverity, GammaSeverity, LognormalSeverity


def test_wald_poisson_lognormalish_example():
    mean, var = wald_moments(2.0, 2.0, 3.0, 4.0)
    assert (mean, var) == (6.0, 26.0)


def test_wald_zero_frequency():
    assert wald_moments(0.0, 0.0, 3.0, 4.0) == (0.0, 0.0)


def test_wald_degenerate():
    mean, var = wald_moments(5.0, 0.0, 2.0, 0.0)
    assert (mean, var) == (10.0, 0.0)


def test_wald_negative_variance_rejected():
    with pytest.raises(ValueError):
        wald_moments(1.0, -0.1, 1.0, 0.0)


def _poisson_gamma_model():
    # Poisson(2) counts, severity mean 3 and variance 4: Wald gives (6, 26).
    return CollectiveModel(
        frequency=PoissonFrequency(ConstantIntensity(2.0)),
        severity=GammaSeverity(shape=2.25, scale=4.0 / 3.0),
    )


def test_simulate_total_wald_agreement():
    n = 100_000
    sample = simulate_total(_poisson_gamma_model(), 1.0, n, SeedStream(1))
    mean, var = 6.0, 26.0
    assert abs(sample.mean() - mean) < 3 * np.sqrt(var / n)
    assert abs(sample.var() - var) < 0.05 * var


def test_simulate_total_fixed_severity():
    model = CollectiveModel(
        frequency=PoissonFrequency(ConstantIntensity(2.0)),
        severity=FixedSeverity(3.0),
    )
    n = 50_000
    sample = simulate_total(model, 1.0, n, SeedStream(2))
    mean, var = wald_moments(2.0, 2.0, 3.0, 0.0)
    assert (mean, var) == (6.0, 18.0)
    assert abs(sample.mean() - mean) < 3 * np.sqrt(var / n)
    assert abs(sample.var() - var) < 0.05 * var


def test_simulate_total_zero_intensity():
    model = CollectiveModel(
        frequency=PoissonFrequency(ConstantIntensity(0.0)),
        severity=FixedSeverity(3.0),
    )
    sample = simulate_total(model, 1.0, 100, SeedStream(3))
    assert np.all(sample.values == 0.0)


def test_simulate_total_deterministic_per_seed():
    a = simulate_total(_poisson_gamma_model(), 1.0, 50, SeedStream(4))
    b = simulate_total(_poisson_gamma_model(), 1.0, 50, SeedStream(4))
    assert np.array_equal(a.values, b.values)


def test_simulate_total_coupled_requires_poisson():
    with pytest.raises(ValueError, match="coupled mode"):
        CollectiveModel(
            frequency=CoxFrequency(
                FactorModel(
                    dynamics=OuFactor(
                        speed=(1.0,), level=(1.0,), vol=(0.1,), x0=(1.0,),
                        grid=(0.0, 0.5, 1.0),
                    ),
                    link=lambda x: max(float(x[0]), 0.0),
                )
            ),
            severity=LognormalSeverity(0.0, 1.0),
            coupling=GumbelCopula(2.0, 2),
        )


def test_simulate_total_coupled_runs_and_couples():
    model = CollectiveModel(
        frequency=PoissonFrequency(ConstantIntensity(5.0)),
        severity=LognormalSeverity(0.0, 1.0),
        coupling=GumbelCopula(3.0, 2),
    )
    sample = simulate_total(model, 1.0, 4_000, SeedStream(5))
    assert np.all(sample.values >= 0)
    assert sample.values.std() > 0


def _two_module_portfolio():
    return build_portfolio(
        {
            "categories": ["c1"],
            "groups": [
                {"id": "k1", "covariates": [0.0], "count": 1},
                {"id": "k2", "covariates": [1.0], "count": 1},
            ],
        }
    )


def test_portfolio_single_module_equals_module_total():
    p = build_portfolio(
        {"categories": ["c1"], "groups": [{"id": "k1", "covariates": [0], "count": 1}]}
    )
    models = {p.modules[0]: _poisson_gamma_model()}
    result = portfolio_total(p, models, None, 1.0, 200, SeedStream(6))
    assert np.array_equal(result.total.values, result.per_module[p.modules[0]].values)


def test_portfolio_independent_modules_variance_additive():
    p = _two_module_portfolio()
    m1, m2 = p.modules
    models = {m1: _poisson_gamma_model(), m2: _poisson_gamma_model()}
    n = 40_000
    result = portfolio_total(p, models, None, 1.0, n, SeedStream(7))
    var_sum = result.per_module[m1].var() + result.per_module[m2].var()
    # SE of the sample variance of the total, approximated via normal theory
    se = result.total.var() * np.sqrt(2.0 / (n - 1)) * 2
    assert abs(result.total.var() - var_sum) < 3 * se


def test_portfolio_common_factor_positive_covariance():
    p = _two_module_portfolio()
    m1, m2 = p.modules
    factors = FactorModel(
        dynamics=OuFactor(
            speed=(0.8,), level=(3.0,), vol=(1.5,), x0=(3.0,),
            grid=tuple(np.linspace(0, 1, 21)),
        ),
        link=lambda x: max(float(x[0]), 0.0),
    )
    shared = SharedFactorFrequency(link=lambda x: max(float(x[0]), 0.0))
    models = {
        m1: CollectiveModel(frequency=shared, severity=FixedSeverity(1.0)),
        m2: CollectiveModel(frequency=shared, severity=FixedSeverity(1.0)),
    }
    n = 8_000
    result = portfolio_total(p, models, factors, 1.0, n, SeedStream(8))
    a = result.per_module[m1].values
    b = result.per_module[m2].values
    prods = (a - a.mean()) * (b - b.mean())
    cov = prods.mean()
    se = prods.std(ddof=1) / np.sqrt(n)
    assert cov > 3 * se


def test_portfolio_missing_model_rejected():
    p = _two_module_portfolio()
    with pytest.raises(ValueError, match="missing module model"):
        portfolio_total(
            p, {p.modules[0]: _poisson_gamma_model()}, None, 1.0, 10, SeedStream(9)
        )


def test_portfolio_monotone_under_module_addition():
    small = build_portfolio(
        {"categories": ["c1"], "groups": [{"id": "k1", "covariates": [0], "count": 1}]}
    )
    big = _two_module_portfolio()
    base = {big.modules[0]: _poisson_gamma_model()}
    extended = {
        big.modules[0]: _poisson_gamma_model(),
        big.modules[1]: _poisson_gamma_model(),
    }
    r_small = portfolio_total(small, base, None, 1.0, 300, SeedStream(10))
    r_big = portfolio_total(big, extended, None, 1.0, 300, SeedStream(10))
    # module keyed substreams: shared module unchanged, totals never decrease
    assert np.array_equal(
        r_small.per_module[small.modules[0]].values,
        r_big.per_module[big.modules[0]].values,
    )
    assert np.all(r_big.total.values >= r_small.total.values - 1e-12)


def test_portfolio_factor_cells_assignment():
    p = build_portfolio(
        {"categories": ["c1"], "groups": [{"id": "k1", "covariates": [0], "count": 1}]}
    )
    factors = FactorModel(
        dynamics=OuFactor(
            speed=(1.0,), level=(2.0,), vol=(1.0,), x0=(2.0,), grid=(0.0, 0.5, 1.0)
        ),
        link=lambda x: max(float(x[0]), 0.0),
    )
    models = {
        p.modules[0]: CollectiveModel(
            frequency=SharedFactorFrequency(link=lambda x: max(float(x[0]), 0.0)),
            severity=FixedSeverity(1.0),
        )
    }
    result = portfolio_total(
        p, models, factors, 1.0, 60, SeedStream(11), n_factor_cells=5
    )
    assert set(np.unique(result.factor_tags)) == set(range(5))
    assert np.array_equal(result.factor_tags, np.arange(60) % 5)
    assert len(result.factor_paths) == 5


def test_replication_exchangeability():
    # Permuting replication substreams permutes the sample as a multiset.
    from cyberrisk.aggregation import _replication_total

    model = _poisson_gamma_model()
    values = simulate_total(model, 1.0, 50, SeedStream(12)).values
    perm = np.random.default_rng(0).permutation(50)
    permuted = np.array(
        [
            _replication_total(model, 1.0, SeedStream(12).child(int(r)))
            for r in perm
        ]
    )
    assert np.array_equal(np.sort(values), np.sort(permuted))
    assert not np.array_equal(values, permuted)


def test_loss_sample_csv_roundtrip():
    values = np.array([0.1, 1.0 / 3.0, 123456789.25, 7e-300])
    sample = LossSample(values=values, horizon=1.0, label="x")
    text = sample.to_csv()
    assert text.splitlines()[0] == "replication,value"
    back = LossSample.from_csv(text)
    assert np.array_equal(back.values, values)


def test_loss_sample_json_roundtrip():
    sample = LossSample(values=np.array([1.0, 2.5]), horizon=2.0, label="y", seed_trace="s")
    back = LossSample.from_json(sample.to_json())
    assert np.array_equal(back.values, sample.values)
    assert back.horizon == 2.0 and back.label == "y" and back.seed_trace == "s"


def test_loss_sample_rejects_nonfinite():
    with pytest.raises(ValueError):
        LossSample(values=np.array([1.0, np.inf]), horizon=1.0)
