"""Independent high-precision evaluation of the fig-1 scenario certificate.

Computes the divergences, gap vector, gamma_2, N(rho) and the closed-form
rate constants with mpmath at 50 digits and writes the JSON fixture consumed
by the C++ tests. Run from the repository root:

    python3 tests/oracles/certificate_oracle.py > tests/fixtures/certificate_fig1.json
"""
import json

from mpmath import mp, mpf, log, sqrt, ceil

mp.dps = 50


def kl(p, q):
    return sum(pi * log(pi / qi) for pi, qi in zip(p, q) if pi > 0)


truth = [mpf("0.1"), mpf("0.9")]
agent1 = {"theta1": [mpf("0.2"), mpf("0.8")], "theta2": [mpf("0.9"), mpf("0.1")]}
uniform = [mpf("0.5"), mpf("0.5")]

d1_theta1 = kl(truth, agent1["theta1"])
d1_theta2 = kl(truth, agent1["theta2"])
d_uniform = kl(truth, uniform)

h_theta2 = [d1_theta2 - d1_theta1] + [d_uniform - d_uniform] * 5
h_norm = sum(h_theta2)
n = 6
alpha = mpf("0.1")
delta = mpf(1)
gamma2 = delta / n * h_norm

# lazy Metropolis case with c = 71: C = sqrt(2), 1 - lambda = 1/(c n^2)
c_lazy = 71
one_minus_lambda_lazy = mpf(1) / (c_lazy * n * n)
gamma1_uniform_lazy = sqrt(2) * h_norm / one_minus_lambda_lazy

# doubly stochastic case, n=6, B=1, eta=1/4
lambda_ds = 1 - mpf("0.25") / (4 * n * n)

# general case, n=6, B=2, eta=1/6
lambda_general = (1 - (mpf(1) / 6) ** 12) ** (mpf(1) / 2)

rhos = ["0.05", "0.1", "0.2"]
n_of_rho = {}
n_real = {}
for r in rhos:
    value = 8 * log(alpha) ** 2 * log(1 / mpf(r)) / gamma2**2 + 1
    n_real[r] = value
    n_of_rho[r] = int(ceil(value))

out = {
    "kl_truth_theta1_agent1": float(d1_theta1),
    "kl_truth_theta2_agent1": float(d1_theta2),
    "H_theta2": [float(x) for x in h_theta2],
    "H_theta2_norm1": float(h_norm),
    "alpha": float(alpha),
    "gamma2_delta1": float(gamma2),
    "gamma1_uniform_lazy71": float(gamma1_uniform_lazy),
    "lambda_doubly_stochastic_n6_B1_eta_quarter": float(lambda_ds),
    "lambda_general_n6_B2_eta_sixth": float(lambda_general),
    "N_of_rho": n_of_rho,
    "N_of_rho_real": {r: float(v) for r, v in n_real.items()},
}
print(json.dumps(out, indent=2, sort_keys=True))
