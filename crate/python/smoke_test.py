"""Smoke test for the thqaoa Python module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `pip install ./crates/py`, then run `python python/smoke_test.py`.
"""

import math

import thqaoa


def close(a, b, tol):
    assert abs(a - b) <= tol, (a, b)


def main():
    k3 = thqaoa.Graph.complete(3)
    assert (k3.n, k3.m) == (3, 3)

    cut = thqaoa.ProblemInstance(k3, "maxcut")
    assert cut.objective("110") == 2
    spec = cut.spectrum()
    assert spec.entries == [(0, 2), (2, 6)]
    assert spec.split(0) == (2, 6, 0.25)
    close(thqaoa.expectation_thresh(spec, 0, [], []).expectation, 1.5, 1e-15)

    b, g = thqaoa.first_round_angles(0.5)
    close(b, -math.pi / 2, 1e-12)
    close(g, -math.pi / 2, 1e-12)
    assert thqaoa.min_rounds(0.8) == 2
    betas, gammas = thqaoa.optimal_schedule(63, 1)
    assert len(betas) == thqaoa.min_rounds(63 / 64)

    g = thqaoa.Graph.erdos_renyi(10, 0.5, 7)
    assert thqaoa.Graph.from_edge_list(g.to_edge_list()).edges == g.edges
    kds = thqaoa.ProblemInstance(g, "kds", 5)
    spec = kds.spectrum()
    assert spec.total == 252

    th, betas, gammas, res = thqaoa.find_threshold(spec, 3)
    dense = kds.statevec_expectation(betas, gammas, threshold=th)
    close(res.expectation, dense, 1e-10)
    assert 0.0 < res.ratio <= 1.0

    betas, gammas, std = thqaoa.optimize_angles(spec, 2, restarts=4, seed=1)
    close(std.expectation, kds.statevec_expectation(betas, gammas), 1e-10)
    close(thqaoa.expectation_std(spec, betas, gammas).expectation, std.expectation, 1e-12)

    try:
        kds.spectrum(cap=10)
    except thqaoa.CapExceededError:
        pass
    else:
        raise AssertionError("cap not enforced")
    try:
        thqaoa.ProblemInstance(g, "kds", 11)
    except ValueError:
        pass
    else:
        raise AssertionError("bad k accepted")

    print("thqaoa", thqaoa.__version__, "python smoke test ok")


if __name__ == "__main__":
    main()
