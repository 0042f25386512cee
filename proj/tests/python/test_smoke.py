import math

import pytest

import bdt_dpra


def small(T=4):
    return {
        "topology": {"num_aps": 2, "gateways_per_ap": 2, "devices_per_gateway": 2},
        "ap_type_of_ap": [1, 2],
        "run": {"T": T},
    }


def test_paper_default():
    c = bdt_dpra.paper_default()
    assert c["topology"] == {
        "num_aps": 4,
        "gateways_per_ap": 5,
        "devices_per_gateway": 3,
    }
    assert c["reputation"]["u_min"] == 25.0
    assert c["reputation"]["u_max"] == 75.0


def test_simulate_and_summary():
    run = bdt_dpra.simulate(small(), policy="dpra", V=1e4, seed=1)
    assert len(run["latency"]) == 4
    for lat, mk, bt in zip(run["latency"], run["makespan"], run["block_time"]):
        assert lat == mk + bt
        assert lat >= run["tau_min"]
    assert run["summary"]["slots"] == 4
    again = bdt_dpra.simulate(small(), policy="dpra", V=1e4, seed=1)
    assert again["trace_csv"] == run["trace_csv"]
    assert bdt_dpra.summarize_trace(run["trace_csv"]) == run["summary"]


def test_baselines_run():
    for policy in ("wdpo", "wtcm"):
        run = bdt_dpra.simulate(small(2), policy=policy, seed=2)
        assert run["policy"] == policy
        assert len(run["q"]) == 2


def test_config_errors():
    with pytest.raises(bdt_dpra.ConfigError, match="reputation.alfa"):
        bdt_dpra.simulate({"reputation": {"alfa": 1}})
    with pytest.raises(bdt_dpra.BdtError):
        bdt_dpra.simulate(small(), policy="greedy")


def test_strict_infeasible():
    c = small(1)
    c["gateway"] = {"max_energy_j": 0.0}
    with pytest.raises(bdt_dpra.InfeasibleSlotError):
        bdt_dpra.simulate(c, strict=True)


def test_validate_oracle():
    report = bdt_dpra.validate("oracle", instances=10)
    assert report["kind"] == "oracle"
    assert all(check["passed"] for check in report["checks"])


def test_closed_forms():
    layers = bdt_dpra.model_profile("vgg11_cifar10")
    assert len(layers) == 16
    assert len(bdt_dpra.model_profile("cnn_fashion_mnist")) == 6
    assert bdt_dpra.difficulty(1.0, -2.0, 2.0) == 1.0
    tau, total, rates = bdt_dpra.block_time(1.0, 0.0, 1 - math.exp(-1), [1.0] * 4, [0.0] * 4)
    assert total == 4.0
    assert rates == [1.0] * 4
    assert tau == pytest.approx(0.25, rel=1e-15)
