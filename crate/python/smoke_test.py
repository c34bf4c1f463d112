"""Smoke test for the pysqstates extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import cmath
import json
import math

import pysqstates as sq


def main():
    unit = sq.Geometry()
    s = sq.State.theta(unit, alpha=8.0)
    m = s.moments()
    assert abs(m["product"] - 0.5) < 1e-10, m
    assert m["weak_bound_ok"] and m["conjectured_ok"]

    norm = sum(abs(a) ** 2 for _, a in s.coefficients())
    assert abs(norm - 1.0) < 1e-13

    # psi(x*) from the closed form agrees with the coefficient sum.
    direct = sum(a * cmath.exp(1j * math.pi * k * 0.1) for k, a in s.coefficients()) / math.sqrt(2.0)
    assert abs(s.psi(0.1) - direct) < 1e-12

    g = sq.Geometry.si(100e-9)
    nano = sq.State.theta(g, alpha=159.154943).moments()
    assert 0.099e-9 < math.sqrt(nano["dx2"]) < 0.101e-9
    assert 5.2e-25 < math.sqrt(nano["dp2"]) < 5.4e-25

    well = sq.State.well_adapted(unit, alpha=4.0)
    e = well.energy(4096)
    assert e["class"] == "CONVERGED" and abs(e["parseval"] - 1.0) < 1e-6
    assert abs(well.psi(1.0)) < 1e-10

    d = sq.Density("gaussian", 1.0)
    disc = sq.State.discretized(unit, d, alpha=10.0, x_star=0.3)
    assert disc.family == "disc"

    assert abs(sq.theta(0.0, 1.0) - 1.0864348) < 1e-7
    assert abs(sq.gaussian_tail(0.0, 1.0, 2) - math.sqrt(math.pi) / 4) < 1e-15
    chi, bound = sq.cosine_sum_bound([0.9 ** k for k in range(2000)], math.pi / 3)
    assert abs(chi) <= bound

    try:
        sq.State.gaussian(unit, beta=0.05, epsilon=0.34)
    except ValueError as err:
        assert "EpsilonTooLarge" in str(err)
    else:
        raise AssertionError("expected ValueError")

    code, out, _ = sq.run_cli(["state", "moments", "--family", "theta", "--alpha", "4"])
    assert code == 0 and abs(json.loads(out)["product"] - 0.5) < 1e-10
    print("smoke test passed")


if __name__ == "__main__":
    main()
