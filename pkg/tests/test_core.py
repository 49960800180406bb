import numpy as np
import pytest

from cyberrisk.core import (
    EventRecord,
    Portfolio,
    RiskModule,
    SeedStream,
    build_portfolio,
    derive_stream,
)


def test_minimal_portfolio():
    p = build_portfolio(
        {"categories": ["c1"], "groups": [{"id": "k1", "covariates": [0], "count": 1}]}
    )
    assert len(p.modules) == 1
    assert p.n_firms == 1


def test_module_count_and_total():
    p = build_portfolio(
        {
            "categories": ["c1", "c2"],
            "groups": [
                {"id": "k1", "covariates": [0.0], "count": 5},
                {"id": "k2", "covariates": [1.0], "count": 10},
                {"id": "k3", "covariates": [2.0], "count": 15},
            ],
        }
    )
    assert len(p.modules) == 6
    assert p.n_firms == 30
    assert p.modules[0] == RiskModule("c1", "k1")


def test_nonpositive_count_rejected():
    with pytest.raises(ValueError, match="non-positive count"):
        build_portfolio(
            {
                "categories": ["c1"],
                "groups": [
                    {"id": "k1", "covariates": [0], "count": 5},
                    {"id": "k2", "covariates": [0], "count": 0},
                ],
            }
        )


def test_duplicate_group_ids_rejected():
    with pytest.raises(ValueError, match="duplicate group ids"):
        build_portfolio(
            {
                "categories": ["c1"],
                "groups": [
                    {"id": "k1", "covariates": [0], "count": 1},
                    {"id": "k1", "covariates": [1], "count": 2},
                ],
            }
        )


def test_ragged_covariates_rejected():
    with pytest.raises(ValueError, match="ragged"):
        build_portfolio(
            {
                "categories": ["c1"],
                "groups": [
                    {"id": "k1", "covariates": [0, 1], "count": 1},
                    {"id": "k2", "covariates": [1], "count": 2},
                ],
            }
        )


def test_stream_determinism():
    a = derive_stream(SeedStream(42), 3).generator().random(1000)
    b = derive_stream(SeedStream(42), 3).generator().random(1000)
    assert np.array_equal(a, b)


def test_stream_separation():
    a = derive_stream(SeedStream(42), 0).generator().random(1000)
    b = derive_stream(SeedStream(42), 1).generator().random(1000)
    assert not np.array_equal(a, b)


def test_stream_pairwise_independence():
    n = 100_000
    a = derive_stream(SeedStream(7), 0).generator().random(n)
    b = derive_stream(SeedStream(7), 1).generator().random(n)
    rho = np.corrcoef(a, b)[0, 1]
    assert abs(rho) < 0.02


def test_nested_derivation_distinct():
    s = SeedStream(5)
    children = [s.child(0).child(1), s.child(1).child(0), s.child(0), s.child(1)]
    draws = [c.generator().random(10).tobytes() for c in children]
    assert len(set(draws)) == len(draws)


def test_event_record_validation():
    m = RiskModule("c", "k")
    EventRecord(time=0.5, module=m, firm=0, amount=1.0)
    with pytest.raises(ValueError):
        EventRecord(time=-0.1, module=m, firm=0, amount=1.0)
    with pytest.raises(ValueError):
        EventRecord(time=0.1, module=m, firm=0, amount=-1.0)
