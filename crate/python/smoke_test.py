"""Smoke test for the stripmoment_py extension module.

Exercises one round trip through every exposed operation and checks a few
hand-computable values. Run via python/run_smoke.sh, which builds the
extension and puts it on the path.
"""

import math

import stripmoment_py as sp


def approx(a, b, tol=1e-9):
    return abs(a - b) <= tol * (1.0 + abs(b))


def main():
    assert isinstance(sp.__version__, str) and sp.__version__

    # moments of two atoms, checked against hand sums
    atoms = [(1.0, 0.5, 1.0), (-2.0, -0.3, 3.0)]
    table = sp.moments(atoms, 4, 6)
    assert len(table) == 5 and len(table[0]) == 7
    assert approx(table[0][0], 4.0)  # total mass
    assert approx(table[1][0], 1.0 * 1.0 + 3.0 * -2.0)
    assert approx(table[0][1], 1.0 * 0.5 + 3.0 * -0.3)

    # solvable verdict on the generator's own moments
    report = sp.check(table, 1.0, 2, 2)
    assert report["verdict"] in ("feasible", "marginal")
    assert report["certificate"] is None
    assert sp.is_solvable(table, 1.0, 2, 2)

    # an off-strip atom is infeasible with an exact strip certificate
    bad = sp.moments([(0.0, 2.0, 1.0)], 0, 2)
    bad_report = sp.check(bad, 1.0, 0, 0)
    assert bad_report["verdict"] == "infeasible"
    assert bad_report["certificate"]["source"] == "strip"
    assert bad_report["certificate"]["eigenvalue"] == -3.0  # w(R^2 - x2^2)
    assert not sp.is_solvable(bad, 1.0, 0, 0)

    # flat extraction recovers the generating atoms
    solution = sp.extract(table, 1.0, 2, 2)
    assert solution["provenance"]["kind"] == "flat"
    assert solution["max_rel"] < 1e-10
    got = sorted(solution["atoms"])
    want = sorted(atoms)
    for g, w in zip(got, want):
        assert all(approx(a, b, 1e-7) for a, b in zip(g, w))

    # verification agrees
    residuals = sp.verify(solution["atoms"], table)
    assert residuals["max_rel"] < 1e-10

    # canonical sampling on a one-line table: defect (1,1), deterministic
    line = sp.moments([(0.3, 0.5, 1.0), (-1.0, 0.5, 0.5), (1.7, 0.5, 2.0)], 2, 2)
    batch1 = sp.param_sample(line, 1.0, 1, 1, seed=7, count=5)
    batch2 = sp.param_sample(line, 1.0, 1, 1, seed=7, count=5)
    assert batch1["defect"] == (1, 1)
    assert len(batch1["solutions"]) >= 2
    assert [s["atoms"] for s in batch1["solutions"]] == [
        s["atoms"] for s in batch2["solutions"]
    ]
    for sol in batch1["solutions"]:
        assert sol["max_rel"] <= 1e-8
        assert all(abs(x2) <= 1.0 + 1e-9 for (_, x2, _) in sol["atoms"])

    # complex bridge: round trip and the z = i pin
    wide = sp.moments(atoms, 6, 6)
    a = sp.real_to_complex(wide)
    back = sp.complex_to_real(a)
    degree = len(a) - 1
    for m, row in enumerate(back):
        for n, value in enumerate(row):
            if m + n <= degree:
                assert approx(value, wide[m][n], 1e-9), (m, n)
    unit_i = [[(1j**m) * ((-1j) ** n) for n in range(3)] for m in range(3)]
    s = sp.complex_to_real(unit_i)
    assert approx(s[0][1], 1.0, 1e-12)
    complex_report = sp.check_complex(a, 1.0, 1, 1)
    assert complex_report["verdict"] in ("feasible", "marginal")

    # extension engine on the 2-dim shift model: deficiency (1, 1) and the
    # angle family, with the symmetric extension at phi = 0
    domain = [[1.0 + 0j], [0j]]
    action = [[0j], [1.0 + 0j]]
    assert sp.deficiency(domain, action) == (1, 1)
    fan = sp.extend_with_angles(domain, action, [0.0, math.pi / 2, math.pi])
    assert fan["deficiency"] == (1, 1)
    assert len(fan["extensions"]) == 2
    eigs = fan["extensions"][0]["eigenvalues"]
    assert approx(eigs[0], -1.0) and approx(eigs[1], 1.0)
    assert len(fan["skipped"]) == 1  # phi = pi touches spectrum 1
    sampled = sp.extend_sampled(domain, action, seed=3, count=4)
    again = sp.extend_sampled(domain, action, seed=3, count=4)
    assert [e["eigenvalues"] for e in sampled["extensions"]] == [
        e["eigenvalues"] for e in again["extensions"]
    ]

    print("smoke test passed")


if __name__ == "__main__":
    main()
