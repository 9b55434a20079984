import mpmath as mp
import numpy as np
import pytest

import qhjtraj as q

E = 0.5  # k = 1


def matched_closed_form(a, b, mu, nu, al, be):
    """Independent solution of the matching system, derived by factoring the
    quadratic form as an orthogonal mix of the original pair."""
    det = mu * be - nu * al
    big_a = a * be - b * al
    big_b = (a * b * be - (b * b + 1.0) * al) / a
    return (big_a * be - big_b * al) / det, (big_b * mu - big_a * nu) / det


def test_match_identity(free_basis, consts):
    ms = q.Microstate(E, 2.0, 0.4)
    mc = q.match_constants(ms, q.IDENTITY_TRANSFORM, free_basis, consts)
    assert mc.a_t == pytest.approx(2.0, abs=1e-12)
    assert mc.b_t == pytest.approx(0.4, abs=1e-12)
    assert mc.residual < 1e-12
    assert mc.matched


def test_match_doubled_second_solution(free_basis, free_potential, consts):
    ms = q.Microstate(E, 1.0, 0.0)
    T = q.BasisTransform(1.0, 0.0, 0.0, 2.0)
    mc = q.match_constants(ms, T, free_basis, consts)
    want = matched_closed_form(1.0, 0.0, 1.0, 0.0, 0.0, 2.0)
    assert mc.a_t == pytest.approx(want[0], rel=1e-10)
    assert mc.b_t == pytest.approx(want[1], abs=1e-10)
    assert mc.residual < 1e-10
    # momentum equality verified independently of the matcher's own check
    transformed = q.transform_basis(free_basis, T, consts)
    p0 = q.conjugate_momentum(free_basis, ms.a, ms.b, consts)
    p1 = q.conjugate_momentum(transformed, mc.a_t, mc.b_t, consts)
    assert np.max(np.abs(p1 - p0)) < 1e-10


def test_match_free_form_transform(free_basis, consts):
    ms = q.Microstate(E, 1.0, 0.0)
    T = q.FreeFormTransform(f=lambda k: k, dfdk=lambda k: 1.0)
    mc = q.match_constants(ms, T, free_basis, consts)
    want = matched_closed_form(1.0, 0.0, 1.0, 0.0, 1.0, 1.0)  # general form at k = 1
    assert mc.a_t == pytest.approx(want[0], rel=1e-10)
    assert mc.b_t == pytest.approx(want[1], rel=1e-10)
    assert mc.residual < 1e-10


def test_match_agrees_with_closed_form_randomly(free_basis, consts, rng):
    ms = q.Microstate(E, 2.0, 0.7)
    for _ in range(25):
        mu, nu, al, be = rng.uniform(-2, 2, 4)
        if abs(mu * be - nu * al) < 0.1:
            continue
        mc = q.match_constants(ms, q.BasisTransform(mu, nu, al, be), free_basis, consts)
        want = matched_closed_form(2.0, 0.7, mu, nu, al, be)
        assert mc.residual < 1e-10
        assert mc.a_t == pytest.approx(want[0], rel=1e-8)
        assert mc.b_t == pytest.approx(want[1], rel=1e-8, abs=1e-10)


def test_match_phase_anchors_s0(free_basis, free_potential, consts):
    # lambda_t matches S0 at the left grid edge, so the whole S0 curves agree
    ms = q.Microstate(E, 1.4, -0.3, phase=0.2)
    T = q.BasisTransform(0.8, -0.5, 0.3, 1.1)
    mc = q.match_constants(ms, T, free_basis, consts)
    field = q.build_reduced_action(free_basis, ms, free_potential, consts, compute_xhat=False)
    field_t = q.build_reduced_action(
        q.transform_basis(free_basis, T, consts),
        q.Microstate(E, mc.a_t, mc.b_t, mc.phase_t),
        free_potential,
        consts,
        compute_xhat=False,
    )
    assert np.max(np.abs(field.s0 - field_t.s0)) < 1e-9


def test_bd_invariance_identity(free_basis, free_potential, consts):
    dev = q.bd_invariance_check(
        q.Microstate(E, 2.0, 0.0), q.IDENTITY_TRANSFORM, free_basis, free_potential,
        consts, x0=0.2, t_span=1.5,
    )
    assert dev < 1e-10


def test_bd_invariance_random_free(free_basis, free_potential, consts, rng):
    ms = q.Microstate(E, 2.0, 0.0)
    for _ in range(10):
        mu, nu, al, be = rng.uniform(-2, 2, 4)
        if abs(mu * be - nu * al) < 0.25:
            continue
        dev = q.bd_invariance_check(
            ms, q.BasisTransform(mu, nu, al, be), free_basis, free_potential,
            consts, x0=0.2, t_span=1.5,
        )
        assert dev < 1e-8


def test_bd_invariance_harmonic(harmonic_basis, harmonic_pot, consts, rng):
    ms = q.Microstate(2.0, 2.0, 0.0)
    for _ in range(5):
        mu, nu, al, be = rng.uniform(-2, 2, 4)
        if abs(mu * be - nu * al) < 0.25:
            continue
        dev = q.bd_invariance_check(
            ms, q.BasisTransform(mu, nu, al, be), harmonic_basis, harmonic_pot,
            consts, x0=-1.0, t_span=0.8,
        )
        assert dev < 1e-6


# ---------------------------------------------------------------------------
# the quarter-period contradiction


def test_contradiction_untransformed_case():
    rep = q.floyd_contradiction(1.0, 1.0, 0.0, 1.0, f_value=0.0, dfdk=0.0)
    assert rep.r_half == 0.0
    assert rep.r_three_half == 0.0
    assert rep.joint_solvable
    assert rep.curve_gap == 0.0


def test_contradiction_sweep_blocked_for_energy_dependent_f():
    mn, _ = q.contradiction_sweep(1.0, 1.0, f_value=1.0, dfdk=1.0)
    assert mn > 0.1
    mn2, _ = q.contradiction_sweep(2.0, 1.0, f_value=1.0, dfdk=1.0)
    assert mn2 > 0.1


def test_contradiction_sweep_solvable_when_dfdk_zero():
    mn, arg = q.contradiction_sweep(1.0, 1.0, f_value=0.0, dfdk=0.0)
    assert mn < 1e-10
    assert abs(arg[0] - 1.0) < 1e-9  # a_t = a on the solution family


def test_contradiction_residual_difference_structure(rng):
    # signed residuals rho2 - 3 rho1 = 2 a a_t df/dk identically
    for _ in range(50):
        a, a_t, b_t = rng.uniform(-3, 3, 3)
        k = rng.uniform(0.2, 3.0)
        f, df = rng.uniform(-2, 2, 2)
        quarter = np.pi / (2 * k)
        bracket = a_t**2 + b_t**2 * f**2 + f**2 + 2 * a_t * b_t * f
        rho1 = a * a_t * (quarter - df) - quarter * bracket
        rho2 = a * a_t * (3 * quarter - df) - 3 * quarter * bracket
        assert rho2 - 3 * rho1 == pytest.approx(2 * a * a_t * df, rel=1e-12, abs=1e-12)


def test_contradiction_family_when_f_constant(rng):
    # df/dk = 0 with f = const != 0: both conditions degenerate to the conic
    # a a_t = bracket, a one-parameter family; walk it and check both residuals
    a, f = 2.0, 0.5
    for a_t in (0.4, 0.9, 1.5, 2.1):
        # solve bracket(a_t, b_t) = a * a_t for b_t
        roots = np.roots([f * f, 2 * a_t * f, a_t * a_t + f * f - a * a_t])
        real = [r.real for r in roots if abs(r.imag) < 1e-12]
        if not real:
            continue
        rep = q.floyd_contradiction(a, a_t, real[0], 1.0, f_value=f, dfdk=0.0)
        assert rep.r_half < 1e-10
        assert rep.r_three_half < 1e-10
        assert rep.joint_solvable


# ---------------------------------------------------------------------------
# frozen-constants convention and the k**-1 rescaling


def test_fm_proposal_identity_transform(a2_stencil):
    x = 0.8
    assert q.fm_proposal_time(a2_stencil, q.IDENTITY_TRANSFORM, x) == q.floyd_time(
        a2_stencil, x
    )


def test_fm_proposal_restores_invariance(a2_stencil):
    T = q.FreeFormTransform(f=lambda k: k, dfdk=lambda k: 1.0)
    x = 0.4
    reference = q.floyd_time(a2_stencil, x)
    assert abs(q.fm_proposal_time(a2_stencil, T, x, convention="fm") - reference) < 1e-5


def test_own_convention_exhibits_basis_dependence(a2_stencil, consts):
    # differentiating through the energy-dependent coefficients shifts the
    # time by -(m a / hbar k) df/dk sin^2(kx) / denominator
    T = q.FreeFormTransform(f=lambda k: k, dfdk=lambda k: 1.0)
    x = 0.4
    reference = q.floyd_time(a2_stencil, x)
    own = q.fm_proposal_time(a2_stencil, T, x, convention="floyd")
    assert abs(own - reference) > 1e-2
    predicted = -2.0 * np.sin(x) ** 2 / (np.cos(x) ** 2 + 4 * np.sin(x) ** 2)
    assert own - reference == pytest.approx(predicted, abs=1e-6)


def test_rescaling_zero_at_origin(consts):
    assert abs(q.rescaling_extra_term(1.0, 0.0, 1.0, 0.0, consts)) < 1e-12


def test_rescaling_extra_term_against_fd_oracle(consts):
    # independent oracle: high-precision central differences of the two
    # closed-form reduced actions at fixed (a, b) = (1, 0), k = 1, x = 0.5
    mp.mp.dps = 40

    def s0_plain(en):
        k = mp.sqrt(2 * en)
        return mp.atan(mp.tan(k * mp.mpf("0.5")))

    def s0_rescaled(en):
        k = mp.sqrt(2 * en)
        return mp.atan(mp.tan(k * mp.mpf("0.5")) / k)

    d = mp.mpf("1e-12")
    e0 = mp.mpf("0.5")
    oracle = float(
        (s0_rescaled(e0 + d) - s0_rescaled(e0 - d)) / (2 * d)
        - (s0_plain(e0 + d) - s0_plain(e0 - d)) / (2 * d)
    )
    got = q.rescaling_extra_term(1.0, 0.5, 1.0, 0.0, consts)
    assert got == pytest.approx(oracle, abs=1e-8)
    assert got == pytest.approx(-np.sin(1.0) / 2.0, abs=1e-8)
    assert abs(got) > 1e-3  # genuinely nonzero shift


def test_rescaling_leaves_bd_flow_bit_identical(consts):
    for k in (1.0, 2.0):
        out = q.rescaling_bd_invariance(k, 1.5, 0.25, consts, x0=0.0, t_span=1.0)
        assert out["momentum_identical"]
        assert out["trajectory_identical"]
        assert out["momentum_max_diff"] == 0.0
