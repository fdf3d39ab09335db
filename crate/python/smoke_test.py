"""Smoke test for the omega_lab extension module.

Build and install it first, e.g. `pip install --no-build-isolation crates/python`.
"""

import math

import omega_lab as ol


def main():
    theta = ol.sieve_theta("big-omega", 10)
    assert theta == [0, 1, 1, 2, 1, 2, 1, 3, 2, 2], theta
    even = sum(1 for t in theta if t % 2 == 0) / len(theta)
    assert even == 0.5

    assert abs(ol.weighted_average("cesaro", "parity", 10)) == 0.0
    value, bound = ol.binomial_average("bin2", "one", 20)
    assert abs(value.real - (1 - 2.0**-20)) < 1e-15 and bound == 0.0

    c = ol.classify_hardy("x^0.7")
    assert c["case"] == 2 and c["verdict_cesaro"] == "UD", c
    assert ol.classify_hardy("x*log(x)/(2*pi)")["case"] == 4

    assert abs(ol.fresnel_constant(1 / (2 * math.pi)) - 2**-0.25) < 1e-12

    cmp = ol.compare_main_theorem("cesaro", "synthetic", "floor(sqrt(x))", "residue(3,0)", 100_000)
    assert cmp["tag"] == "eq_main_cesaro_scale" and cmp["diff"] <= 0.05, cmp

    assert abs(ol.weyl_sum("cesaro", "phi*x", 100_000)) <= 1e-3
    assert abs(ol.weyl_sum("bin2", "x/2", 20)) == 0.0

    assert ol.star_discrepancy([j / 10 for j in range(10)]) - 0.1 < 1e-12
    assert ol.boos_regularity_check(1) == [0.5]
    assert ol.binomial_vs_gaussian(1 << 14)["l1_window"] <= 0.02

    hits = ol.case4_probe("x*log(x)/(2*pi)", 1000)
    assert any(n in (196, 197) for n, _, _ in hits), hits

    try:
        ol.classify_hardy("x^")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("omega_lab smoke test passed")


if __name__ == "__main__":
    main()
