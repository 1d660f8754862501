"""High-precision reference values for log-gamma, digamma, the Dirichlet
log-density and alr_inv at extreme coordinates. Writes JSON fixtures."""
import json
import pathlib

import mpmath as mp

mp.mp.dps = 50
out = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

points = [1e-8, 1e-3, 0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.7, 5.0, 7.25,
          9.99, 10.0, 12.5, 33.3, 100.0, 1234.5, 1e6]
special = [{"x": x, "lgamma": float(mp.loggamma(mp.mpf(x))), "digamma": float(mp.digamma(mp.mpf(x)))}
           for x in points]
(out / "special_functions.json").write_text(json.dumps(special, indent=1))

cases = [
    ([0.2, 0.3, 0.5], [2.0, 3.0, 5.0]),
    ([0.1, 0.6, 0.3], [0.5, 0.7, 0.9]),
    ([0.05, 0.15, 0.3, 0.5], [40.0, 120.0, 240.0, 400.0]),
    ([0.13, 0.0164, 0.052, 0.122, 0.303, 0.0651, 0.3115], [390.0, 49.2, 156.0, 366.0, 909.0, 195.3, 934.5]),
    ([0.4, 0.6], [1.0, 1.0]),
    ([0.999, 0.001], [3.5, 0.2]),
]
dens = []
for y, a in cases:
    y = [mp.mpf(v) for v in y]
    s = sum(y)
    y = [v / s for v in y]
    a = [mp.mpf(v) for v in a]
    sa = sum(a)
    lp = mp.loggamma(sa) - sum(mp.loggamma(v) for v in a) + sum((av - 1) * mp.log(yv) for av, yv in zip(a, y))
    grad = [mp.digamma(sa) - mp.digamma(av) + mp.log(yv) for av, yv in zip(a, y)]
    dens.append({"y": [float(v) for v in y], "alpha": [float(v) for v in a],
                 "log_density": float(lp), "gradient": [float(g) for g in grad]})
(out / "dirichlet_density.json").write_text(json.dumps(dens, indent=1))

# alr_inv with reference last, large first coordinate
alr_cases = []
for coords in ([700.0, 0, 0, 0, 0, 0], [-700.0, 3.0, 0.5], [30.0, 29.0, -5.0]):
    e = [mp.mpf(c) for c in coords]
    denom = 1 + sum(mp.exp(c) for c in e)
    y = [mp.exp(c) / denom for c in e] + [1 / denom]
    alr_cases.append({"coords": coords, "shares": [float(v) for v in y]})
(out / "alr_inv_extreme.json").write_text(json.dumps(alr_cases, indent=1))
