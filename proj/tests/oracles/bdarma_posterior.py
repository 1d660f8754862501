"""Literal dense transcription of the BDARMA mean recursion and joint
log-posterior, evaluated step by step. Writes fixtures/bdarma_posterior.json."""
import json
import math
import pathlib

import numpy as np
from scipy.special import gammaln

out = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
rng = np.random.default_rng(20240611)


def f_row(t, K, period=12):
    row = [1.0]
    for k in range(1, K + 1):
        row += [math.sin(2 * math.pi * k * t / period), math.cos(2 * math.pi * k * t / period)]
    return np.array(row)


def alr(y, ref):
    return np.array([math.log(y[j] / y[ref]) for j in range(len(y)) if j != ref])


def alr_inv(e, ref):
    ex = [math.exp(v) for v in e]
    denom = 1.0 + sum(ex)
    y = []
    k = 0
    for j in range(len(e) + 1):
        if j == ref:
            y.append(1.0 / denom)
        else:
            y.append(ex[k] / denom)
            k += 1
    return np.array(y)


def case(name, shares, ref, K, theta):
    T, J = shares.shape
    n = J - 1
    P = 1 + 2 * K
    A1 = theta[: n * n].reshape(n, n)
    A2 = theta[n * n: 2 * n * n].reshape(n, n)
    beta = theta[2 * n * n: 2 * n * n + n * P]
    gamma = theta[2 * n * n + n * P:]
    X = [np.kron(np.eye(n), f_row(t, K)[None, :]) for t in range(1, T + 1)]
    e = [alr(shares[t], ref) for t in range(T)]
    etas = []
    loglik = 0.0
    for t in range(3, T + 1):
        i = t - 1
        eta = X[i] @ beta + A1 @ (e[i - 1] - X[i - 1] @ beta) + A2 @ (e[i - 2] - X[i - 2] @ beta)
        etas.append(eta.tolist())
        mu = alr_inv(eta, ref)
        phi = math.exp(f_row(t, K) @ gamma)
        alpha = phi * mu
        y = shares[i]
        loglik += gammaln(alpha.sum()) - gammaln(alpha).sum() + ((alpha - 1) * np.log(y)).sum()
    prior = float(np.sum(-0.5 * theta ** 2 - 0.5 * math.log(2 * math.pi)))
    return {"name": name, "reference": ref, "n_harmonics": K, "shares": shares.tolist(),
            "theta": theta.tolist(), "eta": etas, "log_posterior": loglik + prior, "log_prior": prior}


def random_shares(T, J):
    raw = np.exp(rng.normal(size=(T, J)) * 0.4)
    return raw / raw.sum(axis=1, keepdims=True)


cases = []
# toy J=3, T=5, hand-set parameters
shares = np.array([[0.2, 0.3, 0.5], [0.25, 0.3, 0.45], [0.22, 0.33, 0.45], [0.3, 0.3, 0.4], [0.28, 0.27, 0.45]])
theta = np.array([0.5, 0.1, -0.2, 0.3,      # A1
                  0.2, 0.0, 0.05, -0.1,     # A2
                  -0.8, 0.1, -0.05,         # beta coord 1
                  -0.4, 0.0, 0.2,           # beta coord 2
                  3.0, 0.2, -0.1])          # gamma
cases.append(case("toy_j3_t5", shares, 2, 1, theta))
# J=4, T=10, reference in the middle, random parameters
n, K = 3, 2
D = 2 * n * n + n * (1 + 2 * K) + 1 + 2 * K
theta = rng.normal(size=D) * 0.3
theta[-(1 + 2 * K)] = 4.0
cases.append(case("j4_t10_ref1", random_shares(10, 4), 1, K, theta))
# J=3, T=24, K=2
n, K = 2, 2
D = 2 * n * n + n * (1 + 2 * K) + 1 + 2 * K
theta = rng.normal(size=D) * 0.3
theta[-(1 + 2 * K)] = 3.0
cases.append(case("j3_t24", random_shares(24, 3), 2, K, theta))
(out / "bdarma_posterior.json").write_text(json.dumps(cases, indent=1))
