#!/usr/bin/env python3
"""Regenerates the model fixtures in fixtures/ (1-D Gaussian registries)."""

import itertools
import json
import math
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def subsets(domain):
    for k in range(1, len(domain) + 1):
        yield from itertools.combinations(domain, k)


def key(sub):
    return ",".join(str(j) for j in sub)


def gauss(mean, var):
    return {"mean": [round(mean, 6)], "cov": [[round(var, 6)]]}


def additive_sensor(sid, shifts, variances=None):
    """f^A = N(sum of per-variable shifts, var_A), g = N(0, 1)."""
    domain = sorted(shifts)
    f = {}
    for sub in subsets(domain):
        var = 1.0 if variances is None else variances(sub)
        f[key(sub)] = gauss(sum(shifts[j] for j in sub), var)
    return {"id": sid, "domain": domain, "dim": 1, "g": gauss(0.0, 1.0), "f": f}


def vector_sensor(sid, shifts):
    """f^A = N(sum of per-variable shift vectors, I), g = N(0, I)."""
    domain = sorted(shifts)
    dim = len(next(iter(shifts.values())))
    eye = [[1.0 if r == c else 0.0 for c in range(dim)] for r in range(dim)]
    zero = [0.0] * dim
    f = {}
    for sub in subsets(domain):
        mean = [round(sum(shifts[j][k] for j in sub), 6) for k in range(dim)]
        f[key(sub)] = {"mean": mean, "cov": eye}
    return {"id": sid, "domain": domain, "dim": dim, "g": {"mean": zero, "cov": eye}, "f": f}


def mean_for_kl(kl, var):
    return math.sqrt(2.0 * kl - (var - 1.0 - math.log(var)))


def chain4():
    sensors = [
        additive_sensor(1, {1: 1.2, 2: -0.7}, lambda s: 0.8 + 0.1 * len(s)),
        additive_sensor(2, {1: 0.6, 2: 0.9, 3: -0.5}, lambda s: 1.0 + 0.15 * len(s)),
        additive_sensor(3, {3: 1.1, 4: 0.4}, lambda s: 0.9),
        additive_sensor(4, {4: -1.3}),
    ]
    return {
        "name": "chain4",
        "variables": [{"id": j, "rho": r} for j, r in zip(range(1, 5), [0.1, 0.15, 0.2, 0.12])],
        "sensors": sensors,
        "edges": [[1, 2], [2, 3], [3, 4]],
        "root": 1,
    }


def shake_table():
    # Post-change variance 0.1 on the floor affected by variable 1, with the
    # mean chosen so KL(f^{1} || g) is 6.27, 6.06 and 4.44 on floors 1..3.
    var = 0.1
    kls = {1: 6.27, 2: 6.06, 3: 4.44}
    mu = {i: mean_for_kl(kls[i], var) for i in kls}
    sensors = []
    for i, domain in [(1, [1]), (2, [1, 2]), (3, [1, 2, 3])]:
        f = {}
        for sub in subsets(domain):
            m = (mu[i] if 1 in sub else 0.0) - 1.5 * sum(1 for j in sub if j != 1)
            v = var if 1 in sub else 1.0
            f[key(sub)] = gauss(m, v)
        sensors.append({"id": i, "domain": domain, "dim": 1, "g": gauss(0.0, 1.0), "f": f})
    return {
        "name": "shake-table replica",
        "variables": [{"id": j, "rho": 0.001} for j in (1, 2, 3)],
        "sensors": sensors,
        "edges": [[1, 2], [2, 3]],
        "root": 1,
    }


def asce():
    # Shifts picked so that every change set inconsistent with {1,3} is
    # separated from it by at least ~1.8 nats per step over the network and
    # ~0.9 nats per step at sensor 6 alone (2-D features there).
    sensors = [
        vector_sensor(2, {1: [-1.1], 2: [1.1], 3: [1.1]}),
        vector_sensor(6, {1: [1.0, 1.2], 2: [0.9, -0.4], 3: [1.1, 1.2], 4: [-0.1, 0.3]}),
        vector_sensor(10, {2: [0.3], 3: [1.0], 4: [-0.7]}),
        vector_sensor(14, {3: [-0.9], 4: [0.6]}),
    ]
    return {
        "name": "asce benchmark topology",
        "variables": [{"id": j, "rho": 0.05} for j in (1, 2, 3, 4)],
        "sensors": sensors,
        "edges": [[2, 6], [6, 10], [10, 14]],
        "root": 2,
    }


def main():
    OUT.mkdir(exist_ok=True)
    for name, doc in [("chain4", chain4()), ("shake_table", shake_table()), ("asce", asce())]:
        (OUT / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")


if __name__ == "__main__":
    main()
