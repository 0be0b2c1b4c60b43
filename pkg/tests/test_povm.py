import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from meanking.errors import DegenerateTriple, FormMismatch, Infeasible, InvariantViolation, ROutOfRange
from meanking.povm import (
    LABELS,
    SIGN_VECTORS,
    SIGNS,
    CoefficientSet,
    VectorTriple,
    ben_menahem_check,
    build_povm,
    classify_degenerate,
    dual_kets,
    feasibility,
    gram,
    random_triples,
    reciprocal_basis,
    reduce_to_projective,
    solve_coefficients,
    tilted_planar_triple,
    verify_povm,
    zero_pattern_search,
)

from oracles import coefficients_by_linear_solve, grid_feasible, random_unit

R2 = 1 / np.sqrt(2)
ORTHO = np.eye(3)
SKEW = np.array([[1, 0, 0], [0, 1, 0], [R2, 0, R2]])


def symmetric_cone(cos_theta):
    """Three directions at polar angle theta, 120 degrees apart in azimuth."""
    s = np.sqrt(1 - cos_theta**2)
    phis = 2 * np.pi * np.arange(3) / 3
    return np.stack([s * np.cos(phis), s * np.sin(phis), np.full(3, cos_theta)], axis=1)


def random_feasible(rng, count):
    out = []
    while len(out) < count:
        v = random_triples(rng, 1)[0]
        rep = feasibility(v)
        if rep.feasible:
            out.append((VectorTriple(v), rep))
    return out


# ------------------------------------------------------------------ signs, Gram


def test_sign_table():
    assert "".join(LABELS) == "ABCDEFGH"
    expected = {
        "A": (1, 1, 1), "B": (1, -1, -1), "C": (-1, 1, -1), "D": (-1, -1, 1),
        "E": (-1, -1, -1), "F": (-1, 1, 1), "G": (1, -1, 1), "H": (1, 1, -1),
    }  # fmt: skip
    for label, signs in expected.items():
        assert tuple(SIGN_VECTORS[label]) == signs
    np.testing.assert_array_equal(SIGNS[4:], -SIGNS[:4])


def test_gram_examples():
    np.testing.assert_array_equal(gram(ORTHO), np.eye(3))
    np.testing.assert_allclose(gram(SKEW), [[1, 0, R2], [0, 1, 0], [R2, 0, 1]], atol=1e-16)
    m = gram([[1, 0, 0], [1, 0, 0], [0, 1, 0]])
    np.testing.assert_array_equal(m, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert np.linalg.det(m) == 0


def test_gram_exact_diagonal_and_symmetry():
    rng = np.random.default_rng(0)
    for v in random_triples(rng, 50):
        m = gram(v * (1 + 1e-10))  # slightly off-unit input is renormalized
        assert np.all(np.diag(m) == 1.0)
        assert np.array_equal(m, m.T)


# ------------------------------------------------------------------ coefficients


def test_coefficients_orthonormal():
    np.testing.assert_allclose(solve_coefficients(ORTHO, 0).c, np.full(8, 0.125), atol=1e-16)
    np.testing.assert_allclose(solve_coefficients(ORTHO, 1).c, [0.25] * 4 + [0] * 4, atol=1e-16)


def test_coefficients_skew_example():
    c = solve_coefficients(SKEW, 0)
    oracle = coefficients_by_linear_solve(SKEW, 0.0)
    assert np.max(np.abs(c.c - oracle)) < 1e-12
    assert c["A"] == pytest.approx(0.21338834764831843, abs=1e-15)
    assert c["B"] == pytest.approx(0.03661165235168155, abs=1e-15)
    for a, b in zip("ABCD", "EFGH"):
        assert c[a] == pytest.approx(c[b], abs=1e-16)


def test_coefficients_match_linear_solve_random():
    rng = np.random.default_rng(1)
    for t, rep in random_feasible(rng, 200):
        lo, hi = rep.r_interval
        r = rng.uniform(lo, hi)
        c = solve_coefficients(t, r)
        assert np.max(np.abs(c.c - coefficients_by_linear_solve(t.vectors, r))) < 1e-12
        res = c.residuals(gram(t))
        assert max(res.values()) < 1e-12
        assert c.c[0] - c.c[4] == pytest.approx(r / 4, abs=1e-14)


def test_form_mismatch_is_detected(monkeypatch):
    from meanking import povm

    # a corrupted Gram matrix feeds only the dot-product form
    true_gram = povm.gram
    monkeypatch.setattr(povm, "gram", lambda t: true_gram(t) + 1e-6)
    with pytest.raises(FormMismatch):
        povm.solve_coefficients(SKEW, 0.5)


# ------------------------------------------------------------------ feasibility


def test_feasibility_orthonormal():
    rep = feasibility(ORTHO)
    assert rep.feasible and rep.fcon1_holds and rep.degeneracy == "independent"
    np.testing.assert_allclose(rep.sign_norms, np.sqrt(3), atol=1e-15)
    assert rep.r_interval == pytest.approx((-1.0, 1.0), abs=1e-15)


def test_feasibility_tilted_planar():
    eps = 0.1
    rep = feasibility(tilted_planar_triple(eps))
    assert not rep.feasible
    assert rep.r_interval is None
    assert rep.sign_norms[0] ** 2 == pytest.approx(9 * np.sin(eps) ** 2, abs=1e-12)
    assert rep.sign_norms[0] ** 2 == pytest.approx(0.0897, abs=1e-4)
    assert rep.min_sign_norm == pytest.approx(3 * np.sin(eps), abs=1e-12)


def test_tilted_planar_inner_products():
    # n_i.n_j = -1/2 + d with d = (3/2) sin^2 eps, so |sum n_k|^2 = 2 * (3 d)
    eps = 0.2
    m = gram(tilted_planar_triple(eps))
    d = m[0, 1] + 0.5
    assert d == pytest.approx(1.5 * np.sin(eps) ** 2, abs=1e-15)
    assert feasibility(tilted_planar_triple(eps)).sign_norms[0] ** 2 == pytest.approx(2 * 3 * d, abs=1e-14)


def test_feasibility_parallel_pair():
    rep = feasibility([[1, 0, 0], [1, 0, 0], [0, 1, 0]])
    assert rep.degeneracy == "contains_parallel_pair"
    assert not rep.feasible


def test_feasibility_matches_grid_search():
    rng = np.random.default_rng(2)
    v = random_triples(rng, 3000)
    closed = np.array([feasibility(t).r_interval is not None for t in v])
    norms = np.array([min(feasibility(t).sign_norms) >= 1 for t in v])
    np.testing.assert_array_equal(closed, grid_feasible(v))
    np.testing.assert_array_equal(closed, norms)
    assert 0 < closed.sum() < len(v)


def test_fcon1_implies_fcon2():
    rng = np.random.default_rng(3)
    for t in random_triples(rng, 3000):
        rep = feasibility(t)
        if rep.fcon1_holds:
            assert rep.feasible


def test_r_interval_symmetric():
    rng = np.random.default_rng(4)
    for _, rep in random_feasible(rng, 100):
        lo, hi = rep.r_interval
        assert lo == -hi and hi >= 0


def test_boundary_triple():
    v = symmetric_cone(1 / 3)
    rep = feasibility(v)
    assert rep.min_sign_norm == pytest.approx(1.0, abs=1e-15)
    assert rep.feasible
    assert rep.r_interval == pytest.approx((0.0, 0.0), abs=1e-15)
    c = solve_coefficients(v, 0.0)
    assert np.min(np.abs(c.c)) < 1e-12
    assert c.nonnegative
    assert verify_povm(build_povm(v, 0.0)).ok


def test_just_outside_boundary_is_infeasible():
    rep = feasibility(symmetric_cone(1 / 3 - 1e-6))
    assert not rep.feasible and rep.degeneracy == "independent"


# ------------------------------------------------------------------ POVM


def test_build_povm_orthonormal_r1():
    p = build_povm(ORTHO, 1.0)
    d = verify_povm(p)
    assert d.ok
    nonzero = p.elements[:4]
    for i in range(4):
        assert np.linalg.norm(nonzero[i] @ nonzero[i] - nonzero[i]) < 1e-10
        for j in range(i + 1, 4):
            assert np.linalg.norm(nonzero[i] @ nonzero[j]) < 1e-10
    assert np.linalg.norm(p.elements[4:]) == 0


def test_build_povm_orthonormal_r0_traces():
    p = build_povm(ORTHO, 0.0)
    traces = np.trace(p.elements, axis1=1, axis2=2).real
    # |v_K|^2 = 1 + S M^-1 S = 4 for the triad
    np.testing.assert_allclose(traces, 0.125 * 4, atol=1e-15)
    assert traces.sum() == pytest.approx(4.0, abs=1e-14)


def test_build_povm_skew():
    p = build_povm(SKEW, 0.0)
    assert p.completeness_residual() < 1e-10
    assert verify_povm(p).ok


def test_build_povm_errors():
    with pytest.raises(Infeasible) as exc:
        build_povm(tilted_planar_triple(0.1))
    assert min(exc.value.sign_norms) == pytest.approx(3 * np.sin(0.1))
    with pytest.raises(ROutOfRange) as exc:
        build_povm(ORTHO, 1.5)
    assert exc.value.interval == pytest.approx((-1, 1))
    with pytest.raises(DegenerateTriple):
        build_povm([[1, 0, 0], [0, 1, 0], [R2, R2, 0]])
    with pytest.raises(DegenerateTriple):
        build_povm([[1, 0, 0], [-1, 0, 0], [0, 1, 0]])


def test_table_pattern_orthonormal():
    table = verify_povm(build_povm(ORTHO, 0.0)).probability_table
    row = table[0]  # (n1, beta = +1)
    zeros = [LABELS.index(x) for x in "ABGH"]
    assert np.all(row[zeros] < 1e-12)
    assert np.all(row[[LABELS.index(x) for x in "CDEF"]] > 0.2)


def test_verify_random_feasible_triples():
    rng = np.random.default_rng(5)
    for t, rep in random_feasible(rng, 50):
        for r in (0.0, *rep.r_interval):
            d = verify_povm(build_povm(t, r))
            assert d.ok, (t.vectors, r)


def test_forced_infeasible_construction_flags_negative_coefficient():
    t = tilted_planar_triple(0.1)
    p = build_povm(t, 0.0, validate=False)
    d = verify_povm(p)
    assert d.negative_coefficients == ["A", "E"]
    assert not d.ok
    assert p.coefficients["A"] == pytest.approx((9 * np.sin(0.1) ** 2 - 1) / 16, abs=1e-15)
    assert np.min(d.min_eigenvalues) < -1e-3


def test_rank_one_elements():
    rng = np.random.default_rng(6)
    for t, _ in random_feasible(rng, 20):
        d = verify_povm(build_povm(t, 0.0))
        assert np.all(d.second_eigenvalues < 1e-10)


# ------------------------------------------------------------------ reductions


def test_reduce_orthonormal():
    m = reduce_to_projective(ORTHO)
    assert m is not None and m.labels == ("A", "B", "C", "D")
    proj = m.projectors
    np.testing.assert_allclose(proj.sum(axis=0), np.eye(4), atol=1e-12)
    vecs = [np.linalg.eigh(p)[1][:, -1] for p in proj]
    basis = np.stack(vecs, axis=1)
    np.testing.assert_allclose(basis.conj().T @ basis, np.eye(4), atol=1e-12)


def test_reduce_rotated_orthonormal():
    q, _ = np.linalg.qr(np.random.default_rng(7).standard_normal((3, 3)))
    assert reduce_to_projective(q.T) is not None


def test_reduce_non_orthogonal_absent():
    assert reduce_to_projective(SKEW) is None


def test_reduce_tolerance_boundary():
    v = np.eye(3)
    v[2] += [1e-13, 0, 0]
    assert reduce_to_projective(v / np.linalg.norm(v, axis=1, keepdims=True)) is not None


def test_zero_pattern_search_orthonormal():
    solvable = {z["zeroed"] for z in zero_pattern_search(ORTHO) if z["solvable"]}
    assert solvable == {"ABCD", "EFGH"}


def test_zero_pattern_search_non_orthogonal():
    rng = np.random.default_rng(8)
    results = zero_pattern_search(SKEW)
    assert len(results) == 70
    assert not any(z["solvable"] for z in results)
    for t in random_triples(rng, 30):
        assert not any(z["solvable"] for z in zero_pattern_search(t))


# ------------------------------------------------------------------ degeneracy


def test_classify_examples():
    rep = classify_degenerate([[1, 0, 0], [0, 1, 0], [R2, R2, 0]])
    assert rep.kind == "dependent_nonparallel"
    assert rep.coefficients == pytest.approx((R2, R2), abs=1e-15)
    assert rep.certificate.certified
    assert classify_degenerate(ORTHO).kind == "independent"
    rep = classify_degenerate([[1, 0, 0], [-1, 0, 0], [0, 1, 0]])
    assert rep.kind == "contains_parallel_pair" and rep.pair == (1, 2)


def test_classify_random_dependent():
    rng = np.random.default_rng(9)
    for _ in range(100):
        n1, n2 = random_unit(rng), random_unit(rng)
        n3 = rng.uniform(-2, 2) * n1 + rng.uniform(-2, 2) * n2
        n3 /= np.linalg.norm(n3)
        rep = classify_degenerate([n1, n2, n3])
        assert rep.kind == "dependent_nonparallel"
        x, y = rep.coefficients
        assert np.linalg.norm(n3 - x * n1 - y * n2) < 1e-10
        cert = rep.certificate
        assert cert.certified
        assert cert.complement_rank == 1 and cert.forced_sum_rank == 1
        # the sign combination S3 - x S1 - y S2 never vanishes
        assert cert.min_sign_gap > 0


def test_certificate_ray_is_cross_product_ket():
    rep = classify_degenerate([[1, 0, 0], [0, 1, 0], [R2, R2, 0]])
    np.testing.assert_allclose(rep.certificate.ray, [0, R2, R2, 0], atol=1e-16)


# ------------------------------------------------------------------ quadratic forms


def test_quadratic_forms_orthonormal():
    rep = ben_menahem_check(solve_coefficients(ORTHO, 0), ORTHO)
    np.testing.assert_allclose(rep.lhs, 3.0, atol=1e-15)
    np.testing.assert_allclose(rep.rhs, 3.0, atol=1e-15)
    assert rep.forms_at_least_one


def test_quadratic_forms_feasible_random():
    rng = np.random.default_rng(10)
    for t, rep in random_feasible(rng, 100):
        c = solve_coefficients(t, rng.uniform(*rep.r_interval))
        q = ben_menahem_check(c, t)
        assert q.max_deviation < 1e-12
        assert np.all(q.rhs >= 1 - 1e-12)


def test_quadratic_forms_tilted():
    t = tilted_planar_triple(0.1)
    q = ben_menahem_check(solve_coefficients(t, 0), t)
    assert q.lhs[0] == pytest.approx(0.0897, abs=1e-4)
    assert q.implies_infeasible
    assert not q.forms_at_least_one


def test_quadratic_forms_reject_inconsistent_coefficients():
    bad = CoefficientSet(r=0.0, c=np.full(8, 0.125))
    with pytest.raises(InvariantViolation):
        ben_menahem_check(bad, SKEW)


# ------------------------------------------------------------------ properties


unit3 = st.tuples(
    st.floats(-1, 1, allow_nan=False), st.floats(-1, 1), st.floats(-1, 1)
).map(np.array).filter(lambda v: np.linalg.norm(v) > 0.1).map(lambda v: v / np.linalg.norm(v))


@settings(max_examples=300, deadline=None)
@given(unit3, unit3, unit3)
def test_feasibility_consistent_with_coefficients(n1, n2, n3):
    t = VectorTriple([n1, n2, n3])
    assume(abs(np.linalg.det(t.vectors)) > 1e-6)
    rep = feasibility(t)
    assume(abs(rep.min_sign_norm - 1) > 1e-9)
    c0 = solve_coefficients(t, 0.0)
    assert rep.feasible == c0.nonnegative
    if rep.feasible:
        assert solve_coefficients(t, rep.r_interval[1]).nonnegative
        assert not solve_coefficients(t, rep.r_interval[1] + 1e-6).nonnegative


def test_reciprocal_basis_is_biorthogonal():
    rng = np.random.default_rng(31)
    for v in random_triples(rng, 50):
        np.testing.assert_allclose(reciprocal_basis(v) @ v.T, np.eye(3), atol=1e-10)
        np.testing.assert_allclose(reciprocal_basis(v), np.linalg.inv(gram(v)) @ v, atol=1e-8)


def test_dual_kets_complete_the_singlet():
    # near-coplanar triple: Gram condition number around 1e8
    v = tilted_planar_triple(1e-4).vectors
    d = dual_kets(v)
    total = np.eye(4) - d.T @ d.conj()
    psi = np.array([0, 1, -1, 0]) / np.sqrt(2)
    np.testing.assert_allclose(total, np.outer(psi, psi), atol=1e-11)
