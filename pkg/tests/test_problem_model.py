import math

import numpy as np
import pytest

from nmago import (Affine, Constant, ConvexityLossError, DomainError, Power,
                   PowerSingular, ProblemSpec, eval_pde_residual,
                   eval_radial_operator, full_hessian_oracle,
                   validate_assumptions)


# --- the radial operator ----------------------------------------------------

def test_operator_2d_identity_hessian():
    # profile r^2/2: unit Hessian, determinant 1 in 2D
    assert eval_radial_operator(2, dz=0.5, ddz=1.0, r=0.5) == pytest.approx(1.0)


def test_operator_symmetric_case_n3():
    assert eval_radial_operator(3, dz=0.7, ddz=1.0, r=0.7) == pytest.approx(8.0)


def test_operator_center_branch():
    assert eval_radial_operator(3, dz=0.0, ddz=1.0, r=0.0) == pytest.approx(8.0)


def test_operator_root_and_errors():
    val = eval_radial_operator(3, dz=0.7, ddz=1.0, r=0.7, root=True)
    assert val == pytest.approx(8.0 ** 0.5)
    with pytest.raises(DomainError):
        eval_radial_operator(2, 0.1, 1.0, -0.5)
    with pytest.raises(ConvexityLossError):
        eval_radial_operator(3, dz=-1.0, ddz=1.0, r=0.5, root=True)


def test_operator_2d_is_classical_monge_ampere():
    rng = np.random.default_rng(7)
    for _ in range(50):
        dz, ddz, r = rng.uniform(0.1, 2.0, 3)
        det = eval_radial_operator(2, dz, ddz, r)
        assert det == pytest.approx((1.0 / r) * dz * ddz, rel=1e-14)


def test_operator_continuous_at_center():
    # smooth profile: value at r = 10^-k approaches the center branch
    dz = lambda r: r * np.exp(r ** 2 / 10)
    ddz = lambda r: (1 + r ** 2 / 5) * np.exp(r ** 2 / 10)
    center = eval_radial_operator(4, 0.0, 1.0, 0.0)
    gaps = []
    for k in range(2, 8):
        r = 10.0 ** -k
        gaps.append(abs(eval_radial_operator(4, dz(r), ddz(r), r) - center))
    assert all(a > b for a, b in zip(gaps[:-1], gaps[1:]))
    assert gaps[-1] < 1e-10


# --- the dense-determinant oracle -------------------------------------------

def test_oracle_identity_hessian_cases():
    one = full_hessian_oracle(2, lambda r: r, lambda r: 1.0, np.array([0.3, 0.4]))
    assert one == pytest.approx(1.0)
    eight = full_hessian_oracle(3, lambda r: r, lambda r: 1.0,
                                np.array([1.0, 0.0, 0.0]))
    assert eight == pytest.approx(8.0)
    with pytest.raises(DomainError):
        full_hessian_oracle(2, lambda r: r, lambda r: 1.0, np.zeros(2))


def _random_profile(rng):
    a1, a3, a5 = rng.uniform(-1.0, 2.0, 3)
    b, c = rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3)
    dz = lambda r: a1 * r + a3 * r ** 3 + a5 * r ** 5 + b * r * math.exp(c * r * r)
    ddz = lambda r: (a1 + 3 * a3 * r ** 2 + 5 * a5 * r ** 4
                     + b * (1 + 2 * c * r * r) * math.exp(c * r * r))
    return dz, ddz


def test_oracle_matches_product_formula():
    rng = np.random.default_rng(42)
    for _ in range(1000):
        N = int(rng.integers(2, 7))
        dz, ddz = _random_profile(rng)
        x = rng.normal(size=N)
        x *= rng.uniform(0.05, 1.0) / np.linalg.norm(x)
        r = float(np.linalg.norm(x))
        direct = eval_radial_operator(N, dz(r), ddz(r), r)
        dense = full_hessian_oracle(N, dz, ddz, x)
        scale = max(abs(direct), abs(dense), 1e-30)
        assert abs(direct - dense) / scale < 1e-10


# --- the equation residual ---------------------------------------------------

def closed_form(N, K0, u0):
    c = K0 ** ((N - 1.0) / N) / (2.0 * (N - 1.0))
    return (lambda r: u0 + c * r ** 2,
            lambda r: 2 * c * r,
            lambda r: 2 * c)


@pytest.mark.parametrize("N,K0,u0", [(2, 1.0, 1.0), (3, 8.0, 1.0),
                                     (4, 8.0, 2.0), (5, 1.0, 3.0)])
def test_residual_zero_on_closed_form(N, K0, u0):
    spec = ProblemSpec(N, Constant(1.0), Constant(K0))
    u, du, ddu = closed_form(N, K0, u0)
    for r in (0.1, 0.25, 0.5, 0.9):
        res = eval_pde_residual(spec, u(r), du(r), ddu(r), r)
        assert abs(res) < 1e-12


def test_residual_flat_bracket():
    spec = ProblemSpec(2, Constant(1.0), Constant(1.0))
    res = eval_pde_residual(spec, 1.0, 0.1, 0.0, 0.5)
    assert res == pytest.approx(-1.0)


def test_residual_errors():
    spec = ProblemSpec(2, Constant(1.0), Constant(1.0))
    with pytest.raises(ConvexityLossError):
        eval_pde_residual(spec, 1.0, -0.1, 1.0, 0.5)
    with pytest.raises(DomainError):
        eval_pde_residual(spec, -1.0, 0.1, 1.0, 0.5)


# --- assumption validation ----------------------------------------------------

def test_validate_assumptions_pass():
    report = validate_assumptions(ProblemSpec(2, Power(2.0), Constant(1.0)))
    assert report.passed
    assert report.lipschitz is not None


def test_validate_assumptions_decreasing_f_fails():
    report = validate_assumptions(ProblemSpec(2, Affine(-1.0, 10.0), Constant(1.0)))
    names = {c.name: c.passed for c in report.checks}
    assert not names["f nondecreasing"]
    assert not report.passed


def test_validate_assumptions_singular_weight_noted():
    spec = ProblemSpec(2, Power(1.0), PowerSingular(3.0, 1.0, 1.0))
    report = validate_assumptions(spec)
    assert report.passed
    assert any("singularity at 1" in n for n in report.notes)


# --- the problem spec JSON -----------------------------------------------------

def test_problem_spec_json_round_trip():
    spec = ProblemSpec(3, Power(1.0), PowerSingular(3.0, 1.0, 1.0))
    assert ProblemSpec.from_json(spec.to_json()) == spec


def test_problem_spec_rejects_bad_dimension_and_keys():
    with pytest.raises(DomainError):
        ProblemSpec(1, Constant(1.0), Constant(1.0))
    with pytest.raises(DomainError, match="dimenson"):
        ProblemSpec.from_json({"dimenson": 2,
                               "f": {"kind": "constant", "value": 1.0},
                               "K": {"kind": "constant", "value": 1.0}})
