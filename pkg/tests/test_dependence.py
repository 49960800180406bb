import numpy as np
import pytest
from scipy import stats

from cyberrisk.core import SeedStream
from cyberrisk.dependence import (
    ClaytonCopula,
    CoupledPeriods,
    GaussianCopula,
    GumbelCopula,
    IndependenceCopula,
    JointModel,
    StudentTCopula,
    copula_cdf,
    coupled_frequency_severity,
    sample_copula,
    sample_joint,
)
from cyberrisk.severity import LognormalSeverity


def test_gaussian_identity_cdf_is_product():
    c = GaussianCopula(np.eye(2))
    assert copula_cdf(c, [0.3, 0.7]) == pytest.approx(0.21, abs=1e-9)


def test_gumbel_theta_one_is_product():
    c = GumbelCopula(1.0, 3)
    for u in ([0.2, 0.5, 0.9], [0.99, 0.01, 0.5]):
        assert copula_cdf(c, u) == pytest.approx(np.prod(u), rel=1e-12)


def test_grounded_margin():
    points = [
        (GaussianCopula(np.array([[1.0, 0.5], [0.5, 1.0]])), [0.0, 0.4]),
        (StudentTCopula(4.0, np.array([[1.0, 0.3], [0.3, 1.0]])), [0.5, 0.0]),
        (GumbelCopula(2.0, 2), [0.0, 0.9]),
        (ClaytonCopula(1.5, 2), [0.0, 0.2]),
        (IndependenceCopula(2), [0.0, 1.0]),
    ]
    for copula, u in points:
        assert copula_cdf(copula, u) == 0.0


def test_margin_reduction():
    # Fixing all but one coordinate at 1 returns the remaining coordinate.
    cops = [
        GaussianCopula(np.array([[1, 0.8, 0.2], [0.8, 1, 0.1], [0.2, 0.1, 1.0]])),
        StudentTCopula(5.0, np.array([[1.0, 0.6], [0.6, 1.0]])),
        GumbelCopula(2.5, 3),
        ClaytonCopula(2.0, 3),
    ]
    for c in cops:
        u = np.ones(c.dim)
        u[0] = 0.37
        assert copula_cdf(c, u) == pytest.approx(0.37, abs=1e-8)


def test_dimension_mismatch_rejected():
    with pytest.raises(ValueError):
        copula_cdf(GumbelCopula(2.0, 2), [0.1, 0.2, 0.3])


def test_gumbel_cdf_matches_sample_frequency():
    c = GumbelCopula(2.0, 2)
    u = sample_copula(c, 200_000, SeedStream(1))
    for point in ([0.3, 0.4], [0.7, 0.9]):
        emp = np.mean(np.all(u <= np.asarray(point), axis=1))
        theory = copula_cdf(c, point)
        assert abs(emp - theory) < 3 * np.sqrt(theory * (1 - theory) / u.shape[0])


def test_gumbel_kendall_tau():
    u = sample_copula(GumbelCopula(2.0, 2), 100_000, SeedStream(2))
    tau = stats.kendalltau(u[:, 0], u[:, 1]).statistic
    assert abs(tau - 0.5) < 0.01


def test_clayton_kendall_tau():
    # tau = theta / (theta + 2)
    u = sample_copula(ClaytonCopula(2.0, 2), 100_000, SeedStream(3))
    tau = stats.kendalltau(u[:, 0], u[:, 1]).statistic
    assert abs(tau - 0.5) < 0.01


def test_gaussian_correlation_recovered():
    rho = 0.8
    c = GaussianCopula(np.array([[1.0, rho], [rho, 1.0]]))
    u = sample_copula(c, 100_000, SeedStream(4))
    z = stats.norm.ppf(u)
    assert abs(np.corrcoef(z[:, 0], z[:, 1])[0, 1] - rho) < 0.01


def test_student_t_tail_dependence_positive():
    c = StudentTCopula(3.0, np.array([[1.0, 0.5], [0.5, 1.0]]))
    u = sample_copula(c, 200_000, SeedStream(5))
    q = 0.99
    cond = np.mean(u[u[:, 0] > q, 1] > q)
    assert cond > 0.15  # Gaussian at rho=0.5 would be ~0.03


def test_independence_tau_zero():
    u = sample_copula(IndependenceCopula(2), 100_000, SeedStream(6))
    tau = stats.kendalltau(u[:, 0], u[:, 1]).statistic
    assert abs(tau) < 0.01


def test_margins_uniform_ks():
    copulas = [
        GaussianCopula(np.array([[1.0, 0.7], [0.7, 1.0]])),
        StudentTCopula(4.0, np.array([[1.0, 0.4], [0.4, 1.0]])),
        GumbelCopula(3.0, 2),
        ClaytonCopula(1.0, 2),
        IndependenceCopula(2),
    ]
    n = 100_000
    for k, c in enumerate(copulas):
        u = sample_copula(c, n, SeedStream(10 + k))
        for col in range(c.dim):
            d = stats.kstest(u[:, col], "uniform").statistic
            assert d < 1.63 / np.sqrt(n) * 1.2, type(c).__name__


def test_rectangle_volumes_nonnegative():
    rng = np.random.default_rng(0)
    copulas = [
        GaussianCopula(np.array([[1.0, -0.4], [-0.4, 1.0]])),
        GumbelCopula(1.7, 2),
        ClaytonCopula(0.8, 2),
    ]
    for c in copulas:
        for _ in range(25):
            lo = rng.uniform(0, 1, size=2)
            hi = lo + rng.uniform(0, 1 - lo)
            volume = (
                copula_cdf(c, hi)
                - copula_cdf(c, [lo[0], hi[1]])
                - copula_cdf(c, [hi[0], lo[1]])
                + copula_cdf(c, lo)
            )
            assert volume >= -1e-9


def test_gumbel_upper_tail_dependence():
    # P(U2 > q | U1 > q) at q = 0.99 approaches 2 - 2^(1/theta).
    n = 10_000_000
    u = sample_copula(GumbelCopula(2.0, 2), n, SeedStream(7))
    q = 0.99
    emp = np.mean(u[u[:, 0] > q, 1] > q)
    analytic = 2.0 - 2.0 ** 0.5
    assert abs(emp - analytic) < 0.02
    # cross-check by numeric copula evaluation of the same conditional
    c = GumbelCopula(2.0, 2)
    joint_tail = 1.0 - 2 * q + copula_cdf(c, [q, q])
    assert abs(emp - joint_tail / (1.0 - q)) < 0.02


def test_sample_joint_independent_exponentials():
    jm = JointModel(IndependenceCopula(2), (stats.expon(), stats.expon()))
    pts = sample_joint(jm, 100_000, SeedStream(8))
    assert abs(np.corrcoef(pts[:, 0], pts[:, 1])[0, 1]) < 0.01


def test_sample_joint_marginal_means():
    jm = JointModel(
        GumbelCopula(2.0, 2), (stats.expon(scale=2.0), stats.gamma(a=3.0))
    )
    n = 100_000
    pts = sample_joint(jm, n, SeedStream(9))
    for col, (mean, sd) in enumerate([(2.0, 2.0), (3.0, np.sqrt(3.0))]):
        assert abs(pts[:, col].mean() - mean) < 3 * sd / np.sqrt(n)


def test_sample_joint_comonotone_limit():
    jm = JointModel(GumbelCopula(50.0, 2), (stats.expon(), stats.expon()))
    u = sample_copula(jm.copula, 50_000, SeedStream(20))
    # 99% of samples agree in rank to within the theta = 50 quantile error
    assert np.mean(np.abs(u[:, 0] - u[:, 1]) < 0.035) >= 0.99
    tau = stats.kendalltau(u[:5000, 0], u[:5000, 1]).statistic
    assert tau > 0.97


def test_sample_joint_requires_quantile():
    class NoPpf:
        pass

    with pytest.raises(ValueError, match="quantile"):
        JointModel(IndependenceCopula(2), (stats.expon(), NoPpf()))


# --- frequency-severity coupling ------------------------------------------


def test_coupling_independence_theta_one():
    cp = coupled_frequency_severity(
        stats.poisson(5.0),
        LognormalSeverity(0.0, 1.0),
        GumbelCopula(1.0, 2),
        30_000,
        SeedStream(11),
    )
    mean_sizes = np.array([s.mean() if s.size else np.nan for s in cp.sizes])
    mask = ~np.isnan(mean_sizes)
    rho = np.corrcoef(cp.counts[mask], mean_sizes[mask])[0, 1]
    assert abs(rho) < 0.02


def test_coupling_positive_dependence():
    cp = coupled_frequency_severity(
        stats.poisson(5.0),
        LognormalSeverity(0.0, 1.0),
        GumbelCopula(3.0, 2),
        30_000,
        SeedStream(12),
    )
    rho = stats.spearmanr(cp.counts, cp.scales).statistic
    assert rho > 0.7


def test_coupling_zero_count_periods_empty():
    cp = coupled_frequency_severity(
        stats.poisson(0.5),
        LognormalSeverity(0.0, 1.0),
        GumbelCopula(2.0, 2),
        2_000,
        SeedStream(13),
    )
    for count, sizes in zip(cp.counts, cp.sizes):
        assert sizes.size == count
    assert np.any(cp.counts == 0)


def test_coupling_rejects_low_theta():
    with pytest.raises(ValueError):
        GumbelCopula(0.5, 2)


def test_coupling_unit_mean_scaling():
    cp = coupled_frequency_severity(
        stats.poisson(20.0),
        LognormalSeverity(0.0, 1.0),
        GumbelCopula(2.0, 2),
        5_000,
        SeedStream(14),
    )
    # per-period claim sizes have conditional mean close to the scale
    ratios = [
        cp.sizes[k].mean() / cp.scales[k]
        for k in range(len(cp.sizes))
        if cp.counts[k] >= 10
    ]
    assert abs(np.mean(ratios) - 1.0) < 0.02
