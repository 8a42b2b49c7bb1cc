import math

import numpy as np
import pytest

from oracles import phi3_lambda_crit
from tvgrowth.analysis import (
    NoJumpRegimeError,
    RegularityConfig,
    check_bounds,
    check_symmetry,
    classify_arrays,
    crit_bracket,
    detect_jumps,
    find_lambda_crit,
    jump_edges,
    shooting_class,
    step_signal,
)
from tvgrowth.bvp import shoot_symmetric_step
from tvgrowth.densities import lambda_inf, make_f_eps, make_phi_mu
from tvgrowth.grid_energy import Grid
from tvgrowth.minimizer import solve
from tvgrowth.signals import TriangleDatum, gen_signal

PHI3 = make_phi_mu(3)


@pytest.fixture(scope="module")
def step_solutions():
    f = step_signal(1001)
    return {lam: solve(f, PHI3, lam) for lam in (0.4, 4.0, 5.0)}


# -- brackets ----------------------------------------------------------------


def test_crit_bracket_examples():
    assert crit_bracket(PHI3) == (4.0, 8.0)
    assert crit_bracket(make_f_eps(1.0)) == (8.0, 16.0)
    with pytest.raises(NoJumpRegimeError):
        crit_bracket(make_phi_mu(2))


def test_bracket_contains_the_exact_threshold():
    lo, hi = crit_bracket(PHI3)
    assert lo < phi3_lambda_crit() < hi


# -- jump detection ----------------------------------------------------------


def test_config_validation():
    with pytest.raises(ValueError):
        RegularityConfig(tol_sing=0)
    with pytest.raises(ValueError):
        RegularityConfig(jump_floor_h=-1)


def test_constant_is_smooth():
    rep = classify_arrays(np.full(11, 0.2), np.zeros(10), PHI3)
    assert rep.classification == "smooth" and rep.jumps == [] and rep.max_slope == 0


def test_synthetic_jump_is_flagged_and_merged():
    n = 101
    u = np.where(np.arange(n) < 50, 0.2, 0.8)
    u[50] = 0.5  # two steep edges in a row
    se = np.zeros(n - 1)
    se[49:51] = 0.5 * (1 - 1e-5)
    rep = classify_arrays(u, se, PHI3)
    assert rep.classification == "jump"
    assert len(rep.jumps) == 1
    t, height = rep.jumps[0]
    assert t == pytest.approx(0.5) and height == pytest.approx(0.6)
    assert rep.jump_height == pytest.approx(0.6)
    assert jump_edges(rep, n) == [50]


def test_steep_but_unsaturated_is_not_a_jump():
    n = 101
    u = np.where(np.arange(n) < 50, 0.2, 0.8)
    rep = classify_arrays(u, np.full(n - 1, 0.3), PHI3)
    assert rep.classification == "smooth"


def test_saturated_but_flat_is_near_singular():
    rep = classify_arrays(np.linspace(0, 0.01, 11), np.full(10, 0.49999), PHI3)
    assert rep.classification == "near-singular"
    assert rep.singular_mask.all()


def test_shape_mismatch():
    with pytest.raises(ValueError):
        classify_arrays(np.zeros(5), np.zeros(5), PHI3)


def test_minimiser_classifications(step_solutions):
    assert detect_jumps(step_solutions[0.4], PHI3).classification == "smooth"
    assert detect_jumps(step_solutions[4.0], PHI3).classification == "smooth"
    rep = detect_jumps(step_solutions[5.0], PHI3)
    h = 1e-3
    assert rep.classification == "jump" and len(rep.jumps) == 1
    assert abs(rep.jumps[0][0] - 0.5) <= 2 * h
    assert rep.max_sigma_ratio <= 1 + 1e-6


def test_report_lines(step_solutions):
    lines = detect_jumps(step_solutions[5.0], PHI3).lines()
    assert "classification=jump" in lines
    assert "jumps=1" in lines and any(ln.startswith("jump_0=0.5") for ln in lines)


def test_triangle_has_no_jumps():
    f = gen_signal("triangle", {}, 501)
    for lam in (1.0, 20.0):
        assert not detect_jumps(solve(f, PHI3, lam), PHI3).jumps


# -- shooting classifier and lambda_crit -------------------------------------


def test_shooting_classifier():
    assert shooting_class(PHI3, 4.0)[0] == "smooth"
    assert shooting_class(PHI3, 9.0)[0] == "jump"
    assert shooting_class(make_phi_mu(2), 100.0)[0] == "smooth"


def test_find_lambda_crit_matches_quadrature_threshold():
    res = find_lambda_crit(PHI3, tol=0.05, cross_check=False)
    lo, hi = res.search_bracket
    assert hi - lo <= 0.05
    assert lo <= phi3_lambda_crit() <= hi
    assert res.bracket_analytic == (4.0, 8.0)
    assert [c for lam, c in res.history if lam == 4.0] == ["smooth"]


def test_find_lambda_crit_no_jump_regime():
    res = find_lambda_crit(make_phi_mu(2), cross_check=False, lam_max=100.0)
    assert res.no_jump_regime and math.isinf(res.lambda_crit_est)
    assert "no_jump_regime=true" in res.lines()


def test_find_lambda_crit_rejects_bad_tol():
    with pytest.raises(ValueError):
        find_lambda_crit(PHI3, tol=0)


# -- bounds and symmetry -----------------------------------------------------


@pytest.mark.parametrize("lam", [0.4, 4.0, 4.16])
def test_bounds_hold_along_shooting(lam):
    rep = check_bounds(shoot_symmetric_step(PHI3, lam), PHI3, lam)
    assert rep.passed
    assert rep.checks["envelope_identity"].value <= 1e-6


def test_envelope_bound_value():
    res = shoot_symmetric_step(PHI3, 4.16)
    rep = check_bounds(res, PHI3, 4.16)
    assert rep.envelope_bound == pytest.approx(math.sqrt(res.u0**2 + 1 / 4.16), rel=1e-12)
    assert not rep.jump_certified


def test_jump_certified_when_sup_bound_below_half():
    res = shoot_symmetric_step(PHI3, 4.0)
    assert check_bounds(res, PHI3, 9.0).jump_certified  # sqrt(2/9) < 1/2


def test_bounds_on_grid_solution(step_solutions):
    rep = check_bounds(step_solutions[4.0], PHI3, 4.0)
    assert rep.passed


def test_envelope_bound_infinite_for_phi2():
    res = shoot_symmetric_step(make_phi_mu(2), 10.0)
    rep = check_bounds(res, make_phi_mu(2), 10.0)
    assert math.isinf(rep.envelope_bound) and rep.passed


def test_symmetry_defect():
    u = np.array([0.1, 0.3, 0.7, 0.9])
    assert check_symmetry(u) == pytest.approx(0.0, abs=1e-15)
    u2 = np.array([0.1, 0.3, 0.75, 0.9])
    assert check_symmetry(u2) == pytest.approx(0.05)
    assert check_symmetry(u2, exclude_edges=[1]) == pytest.approx(0.0, abs=1e-15)


def test_symmetry_of_even_grid_minimiser():
    f = gen_signal("step", {}, Grid(1000))
    res = solve(f, PHI3, 5.0)
    rep = detect_jumps(res, PHI3)
    assert check_symmetry(res.u, jump_edges(rep, 1000)) <= 1e-3


def test_triangle_datum_object_accepted():
    cls, res = shooting_class(PHI3, 1.0, TriangleDatum())
    assert cls == "smooth" and res.residual <= 1e-6
    assert np.all(np.abs(res.trajectory.sigma) < lambda_inf(PHI3))
