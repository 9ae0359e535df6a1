import json
import math
from pathlib import Path

import numpy as np
import pytest

import nonbayes

SCENARIOS = Path(__file__).resolve().parents[2] / "scenarios"


@pytest.fixture(scope="module")
def fig1():
    return nonbayes.parse_scenario("paper-fig1").scenario


def test_builtin_scenario(fig1):
    assert nonbayes.builtin_scenario_names() == ["paper-fig1"]
    assert fig1.agent_count == 6
    assert fig1.hypotheses == ["theta1", "theta2"]
    assert fig1.priors.shape == (6, 2)
    np.testing.assert_allclose(fig1.weights(0).sum(axis=1), 1.0, atol=1e-12)
    assert fig1.likelihood(0)[0, 0] == pytest.approx(0.2)


def test_file_copy_hashes_equal(fig1):
    copy = nonbayes.parse_scenario(str(SCENARIOS / "paper_fig1.yaml")).scenario
    assert copy.hash == fig1.hash
    again = nonbayes.parse_scenario_text(fig1.canonical_yaml()).scenario
    assert again.hash == fig1.hash


def test_validation_errors_are_value_errors():
    with pytest.raises(nonbayes.ValidationError, match="schema_version"):
        nonbayes.parse_scenario_text("schema_version: 9\n")
    assert issubclass(nonbayes.ValidationError, ValueError)
    assert nonbayes.validation_report("paper-fig1") == []


def test_kl_divergence():
    assert nonbayes.kl_divergence([0.5, 0.5], [0.5, 0.5]) == 0.0
    expected = 0.1 * math.log(0.1 / 0.2) + 0.9 * math.log(0.9 / 0.8)
    assert nonbayes.kl_divergence([0.1, 0.9], [0.2, 0.8]) == pytest.approx(expected, rel=1e-14)
    with pytest.raises(nonbayes.ValidationError):
        nonbayes.kl_divergence([0.5, 0.5], [1.0, 0.0])


def test_rate_constants_general():
    r = nonbayes.rate_constants("general", 6, 2, 0.25)
    assert r["c"] == 2.0
    assert r["delta_bound"] == pytest.approx(0.25 ** 12, rel=1e-14)
    assert r["lambda"] == pytest.approx((1 - 0.25 ** 12) ** 0.5, rel=1e-14)


def test_certificate_matches_fixture(fig1):
    fixture = json.loads((Path(__file__).resolve().parents[2] / "tests/fixtures/certificate_fig1.json").read_text())
    cert = nonbayes.build_certificate(fig1)
    assert cert["gamma2"] == pytest.approx(fixture["gamma2_delta1"], rel=1e-12)
    assert cert["gamma1"] == pytest.approx(fixture["gamma1_uniform_lazy71"], rel=1e-12)
    got = {e["rho"]: e["N"] for e in cert["N_of_rho"]}
    assert got == {float(k): v for k, v in fixture["N_of_rho"].items()}
    assert cert["gamma2"] == pytest.approx(0.28685, abs=5e-5)


def test_delta_and_backward_product(fig1):
    d = nonbayes.compute_delta(fig1, 100)
    assert d["empirical"] == pytest.approx(1.0, abs=1e-12)
    a = nonbayes.backward_product(fig1, 0, 1)
    np.testing.assert_allclose(a, fig1.weights(1) @ fig1.weights(0), atol=1e-15)
    assert nonbayes.verify_lemma1(fig1, range(5), 50)["pass"]


def test_run_trial_and_monte_carlo(fig1):
    steps, log_b = nonbayes.run_trial(fig1, nonbayes.derive_trial_seed(1, 0), 1000, record_every=100)
    assert list(steps) == list(range(0, 1001, 100))
    assert log_b.shape == (11, 6, 2)
    np.testing.assert_allclose(np.exp(log_b).sum(axis=2), 1.0, atol=1e-9)
    assert np.exp(log_b[-1, :, 1]).max() < 1e-3

    summary = nonbayes.monte_carlo(fig1, 20, 300, 7, record_every=10, threads=2)
    assert summary.mean.shape == (31, 6, 2)
    again = nonbayes.monte_carlo(fig1, 20, 300, 7, record_every=10, threads=1)
    assert np.array_equal(summary.mean, again.mean)
    with pytest.raises(nonbayes.InsufficientHorizon):
        nonbayes.check_theorem2(summary, fig1, 0.1)


def test_reproduction_run(tmp_path):
    r = nonbayes.reproduce_paper(tmp_path, trials=2, steps=300)
    assert sorted(Path(f).name for f in r["files"]) == [
        "certificate.json", "compliance.json", "figure2.csv", "summary.csv", "violations.csv",
    ]
    assert r["compliance"]["complete"] is False
