import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from treerep import automorphism as au
from treerep import measure as me
from treerep import operators as op
from treerep import representation as rp
from treerep import tree as tr
from treerep.errors import ConfigError, DepthBudgetError, SpectralGuardError

P2 = tr.TreeParams(2)
P3 = tr.TreeParams(3)


def build_rng_pair(params, d, seed):
    rng = np.random.default_rng(seed)
    alpha = op.random_in_disc(d, params.q, rng)
    return rng, alpha, op.build_pair(alpha, params.q)


def seeded_word(params, rng, max_factors=2):
    word = []
    for _ in range(rng.integers(1, max_factors + 1)):
        kind = rng.integers(0, 3)
        inverted = bool(rng.integers(0, 2))
        if kind == 0:
            word.append((au.PortraitGen(au.random_portrait(params, 2, rng)), inverted))
        elif kind == 1:
            word.append((au.EdgeInversionGen(), inverted))
        else:
            word.append((au.StepTranslationGen(), inverted))
    return au.TreeAutomorphism(params, word)


def pi_oracle(g, v, pair):
    """Independent per-cell recomputation of the boundary action.

    Exponents come from deep-proxy enumeration, the cell lookup from
    scalar vertex images, and matrix powers from numpy directly.
    """
    params = v.params
    q = params.q
    m = v.resolution
    m_out = max(m + g.displacement, g.displacement + 1)
    gi = g.inverse()
    rows = []
    for u in oracles.deep_extensions(q, (), m_out):
        b = oracles.busemann_oracle(q, u, (), g.x0_image)
        assert b is not None, "output cells must see a constant increment"
        z = gi.apply_vertex(u + (1, 1))
        w_cell = z[:m]
        base = pair.tau if b >= 0 else pair.tau_inv
        mat = np.linalg.matrix_power(base, abs(b))
        rows.append(mat @ v.values[tr.address_index(params, w_cell)])
    return rp.StepFunction(params, m_out, np.array(rows))


# -- step functions -----------------------------------------------------------


def test_constant_and_indicator_basics():
    w = np.array([1.0 + 2j, -1.0])
    c = rp.constant_fn(P2, w)
    assert c.resolution == 0 and c.dim == 2
    assert np.array_equal(c.integral(), w)
    ind = rp.indicator_fn(P2, me.Cylinder((1,)), w)
    assert ind.resolution == 1
    assert np.allclose(ind.integral(), w / 3)
    comp = rp.indicator_fn(P2, me.canonicalize(P2, me.Halftree((1,), ())), w)
    assert np.allclose((ind + comp).values, np.tile(w, (3, 1)))


def test_step_function_shape_validation():
    with pytest.raises(ConfigError):
        rp.StepFunction(P2, 1, np.zeros((4, 2)))  # level 1 has 3 cells


def test_refine_preserves_the_function():
    rng = np.random.default_rng(3)
    vals = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    v = rp.StepFunction(P2, 1, vals)
    fine = v.refine(3)
    assert fine.resolution == 3
    assert np.array_equal(fine.integral(), v.integral()) or np.allclose(
        fine.integral(), v.integral()
    )
    for u, val in fine.cells():
        coarse = tr.address_index(P2, u.base[:1])
        assert np.array_equal(val, vals[coarse])
    from treerep.errors import RefinementError

    with pytest.raises(RefinementError):
        v.refine(0)  # refinement only goes down


def test_arithmetic_and_norms():
    v = rp.constant_fn(P2, np.array([3.0, 4.0]))
    w = rp.indicator_fn(P2, me.Cylinder((1,)), np.array([1.0, 0.0]))
    s = v + w
    assert s.resolution == 1
    assert np.allclose(s.integral(), [3 + 1 / 3, 4.0])
    diff = s - v
    assert abs(diff.sup_norm() - 1.0) < 1e-12
    scaled = 2.0 * w
    assert abs(scaled.sup_norm() - 2.0) < 1e-12
    assert v.lp_norm(2) == pytest.approx(5.0)
    assert v.max_cell_distance(v) == 0.0


def test_step_function_json():
    v = rp.indicator_fn(P2, me.Cylinder((2,)), np.array([1.0 + 1j]))
    obj = v.to_json_obj()
    assert obj["resolution"] == 1
    assert len(obj["cells"]) == 3


# -- the boundary representation ----------------------------------------------


def test_pi_identity_is_identity():
    _, _, pair = build_rng_pair(P2, 2, 0)
    v = rp.indicator_fn(P2, me.Cylinder((1,)), np.array([1.0, 2.0]))
    out = rp.pi_apply(au.identity(P2), v, pair)
    assert out.resolution == max(v.resolution, 1)
    assert out.max_cell_distance(v) < 1e-12


def test_pi_edge_inversion_on_constants():
    rng, _, pair = build_rng_pair(P2, 3, 1)
    w = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    out = rp.pi_apply(au.edge_inversion(P2), rp.constant_fn(P2, w), pair)
    # a displacement-1 move resolves to depth 2 = max(m + 1, 2)
    assert out.resolution == 2
    for cell, val in out.cells():
        want = (pair.tau if cell.base[:1] == (1,) else pair.tau_inv) @ w
        assert np.linalg.norm(val - want) < 1e-10


def test_pi_swaps_halftree_values():
    # v = w1 on cyl(1), w2 elsewhere; the edge inversion exchanges the
    # halves and twists by tau^{+-1}
    rng, _, pair = build_rng_pair(P2, 2, 2)
    w1 = rng.standard_normal(2) + 0j
    w2 = rng.standard_normal(2) + 0j
    v = rp.indicator_fn(P2, me.Cylinder((1,)), w1) + rp.indicator_fn(
        P2, me.canonicalize(P2, me.Halftree((1,), ())), w2
    )
    out = rp.pi_apply(au.edge_inversion(P2), v, pair)
    for cell, val in out.cells():
        if cell.base[:1] == (1,):
            assert np.linalg.norm(val - pair.tau @ w2) < 1e-10
        else:
            assert np.linalg.norm(val - pair.tau_inv @ w1) < 1e-10


def test_pi_matches_per_cell_oracle():
    for params, seed in ((P2, 10), (P2, 11), (P3, 12)):
        rng, _, pair = build_rng_pair(params, 2, seed)
        for _ in range(6):
            g = seeded_word(params, rng)
            m = int(rng.integers(0, 3))
            vals = rng.standard_normal((tr.n_addresses(params, m), 2)) + 1j * rng.standard_normal(
                (tr.n_addresses(params, m), 2)
            )
            v = rp.StepFunction(params, m, vals)
            got = rp.pi_apply(g, v, pair)
            want = pi_oracle(g, v, pair)
            assert got.resolution == want.resolution
            scale = max(1.0, want.sup_norm())
            assert got.max_cell_distance(want) < 1e-9 * scale


def test_pi_is_a_homomorphism():
    rng, _, pair = build_rng_pair(P2, 2, 20)
    for _ in range(10):
        g = seeded_word(P2, rng)
        h = seeded_word(P2, rng)
        m = int(rng.integers(0, 2))
        vals = rng.standard_normal((tr.n_addresses(P2, m), 2)) + 0j
        v = rp.StepFunction(P2, m, vals)
        one = rp.pi_apply(au.compose(g, h), v, pair)
        two = rp.pi_apply(g, rp.pi_apply(h, v, pair), pair)
        bound = rp.operator_norm_bound(pair, g.displacement + h.displacement)
        assert one.max_cell_distance(two) <= 1e-9 * bound * max(1.0, v.sup_norm())


def test_pi_respects_operator_norm_bound():
    rng, _, pair = build_rng_pair(P2, 3, 30)
    for _ in range(10):
        g = seeded_word(P2, rng)
        vals = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        v = rp.StepFunction(P2, 1, vals)
        out = rp.pi_apply(g, v, pair)
        bound = rp.operator_norm_bound(pair, g.displacement)
        assert out.sup_norm() <= bound * v.sup_norm() * (1 + 1e-9)


def test_pi_depth_budget_error():
    _, _, pair = build_rng_pair(P2, 1, 40)
    t = au.step_translation(P2)
    g = t
    for _ in range(7):
        g = au.compose(t, g)  # displacement 8
    v = rp.indicator_fn(P2, me.Cylinder((1,)), np.array([1.0]))
    with pytest.raises(DepthBudgetError):
        rp.pi_apply(g, v, pair)


def test_pi_dimension_mismatch():
    _, _, pair = build_rng_pair(P2, 2, 41)
    v = rp.constant_fn(P2, np.array([1.0]))
    with pytest.raises(ConfigError):
        rp.pi_apply(au.edge_inversion(P2), v, pair)


# -- averaging ----------------------------------------------------------------


def test_haar_average_full_stabilizer():
    rng = np.random.default_rng(50)
    vals = rng.standard_normal((6, 2)) + 1j * rng.standard_normal((6, 2))
    v = rp.StepFunction(P2, 2, vals)
    avg = rp.haar_average_K(v)
    assert avg.resolution == 0
    assert np.allclose(avg.values[0], vals.mean(axis=0))
    # idempotent and fixes constants
    again = rp.haar_average_K(avg)
    assert np.array_equal(again.values, avg.values)


def test_haar_average_fix_is_cellwise_mean():
    rng = np.random.default_rng(51)
    edge = tr.FiniteSubtree(P2, [(), (1,)])
    vals = rng.standard_normal((6, 2)) + 0j
    v = rp.StepFunction(P2, 2, vals)
    out = rp.haar_average_fix(edge, v)
    for cell in me.orbit_cells(edge):
        idx = []
        for lo, hi in me.cell_index_ranges(P2, cell, out.resolution):
            idx.extend(range(lo, hi))
        sub = out.values[idx]
        assert np.allclose(sub, sub[0])
    assert np.allclose(out.integral(), v.integral())
    again = rp.haar_average_fix(edge, out)
    assert np.allclose(again.values, out.values)


def test_halftree_average_annihilates_balanced_sums():
    # w1 + q w2 = 0 makes the two-cell function integrate to zero
    _, _, pair = build_rng_pair(P2, 2, 52)
    w2 = np.array([1.0, -2.0 + 1j])
    w1 = -P2.q * w2
    v = rp.indicator_fn(P2, me.Cylinder((1,)), w1) + rp.indicator_fn(
        P2, me.canonicalize(P2, me.Halftree((1,), ())), w2
    )
    avg = rp.haar_average_K(v)
    assert np.linalg.norm(avg.values[0]) < 1e-12


def test_alpha_recovery_from_representation():
    for params, seed in ((P2, 60), (P3, 61)):
        for d in (1, 2, 4):
            rng, alpha, pair = build_rng_pair(params, d, seed + d)
            for _ in range(10):
                w = rng.standard_normal(d) + 1j * rng.standard_normal(d)
                got = rp.alpha_via_rep(params, w, pair)
                want = alpha @ w
                assert np.linalg.norm(got - want) <= 1e-9 * max(
                    1.0, np.linalg.norm(alpha, 2) * np.linalg.norm(w)
                )


# -- half-tree reachability ---------------------------------------------------


def test_basepoint_shift_reaches_every_neighbour():
    for params in (P2, P3):
        for j in range(1, params.q + 2):
            g = rp.basepoint_shift(params, (j,))
            assert g.x0_image == (j,)
    with pytest.raises(ConfigError):
        rp.basepoint_shift(P2, (1, 1))


def test_halftree_two_path_identity():
    rng, _, pair = build_rng_pair(P2, 2, 70)
    for j in range(1, P2.q + 2):
        w_prime = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        g = rp.basepoint_shift(P2, (j,))
        lhs = rp.pi_apply(g, rp.constant_fn(P2, w_prime), pair) - rp.constant_fn(
            P2, pair.tau_inv @ w_prime
        )
        rhs = rp.halftree_element(P2, w_prime, ((), (j,)), pair)
        assert lhs.max_cell_distance(rhs) < 1e-9 * max(1.0, np.linalg.norm(w_prime))


def test_halftree_element_rejects_far_edges():
    _, _, pair = build_rng_pair(P2, 1, 71)
    with pytest.raises(ConfigError):
        rp.halftree_element(P2, np.array([1.0]), ((1,), (1, 1)), pair)


def test_halftree_preimage_solves():
    rng, _, pair = build_rng_pair(P3, 4, 72)
    w = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    w_prime = rp.halftree_preimage(pair, w)
    assert np.linalg.norm((pair.tau - pair.tau_inv) @ w_prime - w) <= 1e-9 * max(
        1.0, np.linalg.norm(w)
    )


def test_halftree_preimage_guards_singularity():
    _, _, pair = build_rng_pair(P2, 2, 73)
    forged = op.OperatorPair(
        q=pair.q,
        alpha=pair.alpha,
        tau=np.eye(2, dtype=complex),  # tau - tau_inv = 0
        tau_inv=np.eye(2, dtype=complex),
        residuals=pair.residuals,
        tol=pair.tol,
    )
    with pytest.raises(SpectralGuardError):
        rp.halftree_preimage(forged, np.array([1.0, 0.0]))


# -- fixed spaces -------------------------------------------------------------


def test_fixed_space_report_counts():
    for params, q in ((P2, 2), (P3, 3)):
        for r in (1, 2, 3):
            ball = tr.closed_neighborhood(tr.FiniteSubtree(params, [()]), r)
            for d in (1, 2, 4):
                rep = rp.fixed_space_report(ball, d)
                assert rep.orbit_count == (q + 1) * q ** (r - 1)
                assert rep.fixed_dim == d * rep.orbit_count
                assert len(rep.per_orbit_cells) == rep.orbit_count


def test_fixed_space_report_json():
    ball = tr.closed_neighborhood(tr.FiniteSubtree(P2, [()]), 1)
    obj = rp.fixed_space_report(ball, 2).to_json_obj()
    assert obj["orbit_count"] == 3
    assert obj["fixed_dim"] == 6


# -- invariant subspace correspondence ----------------------------------------


def generators_for(params):
    return [
        au.edge_inversion(params),
        au.step_translation(params),
        au.random_rooted(params, 2, seed=7),
    ]


def test_invariant_subspace_does_not_leak():
    rng = np.random.default_rng(80)
    d = 4
    # alpha with an orthonormal eigenbasis keeps the lift exactly invariant
    qmat, _ = np.linalg.qr(rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d)))
    lam = 0.5 * np.exp(2j * np.pi * rng.random(d)) * np.sqrt(2)
    alpha = (qmat * lam) @ qmat.conj().T
    pair = op.build_pair(alpha, 2)
    basis = qmat[:, :2]
    out = rp.invariant_lift_check(P2, basis, pair, generators_for(P2), trials=3, rng=rng)
    assert out["max_leakage"] <= 1e-9
    assert out["subspace_dim"] == 2


def test_non_invariant_line_leaks_at_comparable_rate():
    rng = np.random.default_rng(81)
    d = 3
    _, alpha, pair = build_rng_pair(P2, d, 82)
    for _ in range(10):
        v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        v /= np.linalg.norm(v)
        direct = np.linalg.norm(alpha @ v - (v.conj() @ (alpha @ v)) * v)
        if direct < 1e-3:
            continue
        out = rp.invariant_lift_check(
            P2, v.reshape(-1, 1), pair, generators_for(P2), trials=2, rng=rng
        )
        assert out["max_leakage"] >= 0.5 * direct


def test_invariant_lift_check_rejects_dependent_basis():
    rng, _, pair = build_rng_pair(P2, 3, 83)
    v = rng.standard_normal(3) + 0j
    basis = np.stack([v, 2 * v], axis=1)
    with pytest.raises(ConfigError):
        rp.invariant_lift_check(P2, basis, pair, generators_for(P2), trials=1, rng=rng)
