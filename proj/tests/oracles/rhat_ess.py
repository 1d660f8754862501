"""Reference split-R-hat and rank-normalized bulk ESS (Geyer initial
monotone sequence on split chains). Chains are AR(1) series with fixed seed;
writes fixtures/rhat_ess.json with the chains and the expected values."""
import json
import pathlib

import numpy as np
from scipy.stats import norm, rankdata

out = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
rng = np.random.default_rng(777)


def ar1(n, phi, offset=0.0):
    x = np.empty(n)
    x[0] = rng.normal() / np.sqrt(1 - phi * phi)
    for i in range(1, n):
        x[i] = phi * x[i - 1] + rng.normal()
    return x + offset


def split(chains):
    n = chains.shape[0] // 2
    return np.concatenate([chains[:n], chains[chains.shape[0] - n:]], axis=1)


def rhat(chains):
    s = split(chains)
    n, m = s.shape
    means = s.mean(axis=0)
    w = s.var(axis=0, ddof=1).mean()
    b = n * means.var(ddof=1)
    return float(np.sqrt(((n - 1) / n * w + b / n) / w))


def acov(x):
    n = len(x)
    c = x - x.mean()
    return np.array([np.dot(c[: n - k], c[k:]) / n for k in range(n)])


def ess(sims):
    n, m = sims.shape
    ac = np.stack([acov(sims[:, i]) for i in range(m)], axis=1)
    mean_var = ac[0].mean() * n / (n - 1)
    var_plus = mean_var * (n - 1) / n + sims.mean(axis=0).var(ddof=1)
    rho = np.zeros(n)
    t = 0
    rho[0] = 1.0
    even, odd = 1.0, 1 - (mean_var - ac[1].mean()) / var_plus
    rho[1] = odd
    while t < n - 5 and even + odd > 0:
        t += 2
        even = 1 - (mean_var - ac[t].mean()) / var_plus
        odd = 1 - (mean_var - ac[t + 1].mean()) / var_plus
        if even + odd >= 0:
            rho[t] = even
            rho[t + 1] = odd
    max_t = t
    if even > 0:
        rho[max_t] = even
    t = 0
    while t <= max_t - 4:
        t += 2
        if rho[t] + rho[t + 1] > rho[t - 2] + rho[t - 1]:
            rho[t] = (rho[t - 2] + rho[t - 1]) / 2
            rho[t + 1] = rho[t]
    total = m * n
    tau = -1 + 2 * rho[:max_t].sum() + rho[max_t]
    tau = max(tau, 1 / np.log10(total))
    return float(total / tau)


def bulk_ess(chains):
    s = split(chains)
    r = rankdata(s.ravel(), method="average").reshape(s.shape)
    z = norm.ppf((r - 0.375) / (s.size + 0.25))
    return ess(z)


cases = []
for name, phis, offsets, n in [("iid", [0.0] * 4, [0.0] * 4, 200),
                               ("ar_0.5", [0.5] * 4, [0.0] * 4, 300),
                               ("ar_0.9", [0.9] * 4, [0.0] * 4, 400),
                               ("mixed_offset", [0.3, 0.3, 0.3, 0.3], [0.0, 0.0, 0.0, 1.5], 250),
                               ("antithetic", [-0.6] * 3, [0.0] * 3, 180)]:
    chains = np.stack([ar1(n, p, o) for p, o in zip(phis, offsets)], axis=1)
    cases.append({"name": name, "chains": chains.T.tolist(), "rhat": rhat(chains), "bulk_ess": bulk_ess(chains)})
(out / "rhat_ess.json").write_text(json.dumps(cases))
for c in cases:
    print(c["name"], c["rhat"], c["bulk_ess"])
