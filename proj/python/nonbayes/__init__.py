"""Distributed non-Bayesian learning over time-varying directed graphs."""

import json

from ._core import (
    Error,
    InsufficientHorizon,
    MonteCarloSummary,
    Scenario,
    ScenarioConfig,
    ValidationError,
    backward_product,
    builtin_scenario_names,
    compute_delta,
    derive_trial_seed,
    kl_divergence,
    monte_carlo,
    parse_scenario,
    parse_scenario_text,
    run_trial,
)
from . import _core

__all__ = [
    "Error",
    "InsufficientHorizon",
    "MonteCarloSummary",
    "Scenario",
    "ScenarioConfig",
    "ValidationError",
    "backward_product",
    "build_certificate",
    "builtin_scenario_names",
    "check_theorem2",
    "compute_delta",
    "derive_trial_seed",
    "kl_divergence",
    "monte_carlo",
    "parse_scenario",
    "parse_scenario_text",
    "rate_constants",
    "reproduce_paper",
    "run_trial",
    "validation_report",
    "verify_lemma1",
]

DEFAULT_RHO = (0.05, 0.1, 0.2)


def _scenario(s):
    if isinstance(s, str):
        return parse_scenario(s).scenario
    if isinstance(s, ScenarioConfig):
        return s.scenario
    return s


def validation_report(source):
    """Graph violations as a list of {check, k, i, j, detail} dicts."""
    return json.loads(parse_scenario(source)._violations_json())


def rate_constants(matrix_class, n, b, eta, lazy_metropolis_constant=71.0):
    """C, lambda and the column-sum bound for a weight class.

    `matrix_class` is "general", "doubly_stochastic" or "lazy_metropolis".
    """
    r = _core._rate_constants(matrix_class, n, b, eta, lazy_metropolis_constant)
    r["lambda"] = r.pop("lambda_")
    return r


def build_certificate(scenario, rho=DEFAULT_RHO, delta_horizon=1000):
    """Rate certificate as a dict (gamma1, gamma2, N(rho), H vectors, ...)."""
    return json.loads(_core._certificate_json(_scenario(scenario), list(rho), delta_horizon))


def check_theorem2(summary, scenario, rho):
    """Violation fractions of the high-probability bound; raises InsufficientHorizon
    when the run is shorter than N(rho) + 200 steps."""
    return json.loads(_core._check_theorem2_json(summary, _scenario(scenario), rho))


def verify_lemma1(scenario, t_list=range(21), k_max=200):
    r = _core._verify_lemma1(_scenario(scenario), list(t_list), k_max)
    r["pass"] = r.pop("pass_")
    r["lambda"] = r.pop("lambda_")
    return r


def reproduce_paper(out, trials=500, steps=0, seed=20150101, rho=DEFAULT_RHO):
    """Run the builtin six-agent example and write its artifacts under `out`."""
    r = _core._reproduce_paper(str(out), trials, steps, seed, list(rho))
    r["compliance"] = json.loads(r["compliance"])
    return r
