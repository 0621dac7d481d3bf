import math

import numpy as np
import pytest

from monoqt.discord import (
    CavityClosedForms,
    cavity_closed_forms,
    conditional_entropy,
    discord,
    evaluate_measurement,
    koashi_winter,
    koashi_winter_eof,
    measured_entropy,
    qubit_frame,
)
from monoqt.errors import ArgumentError, ContractError, UnsupportedError
from monoqt.measures import binary_entropy, eof_curve_inverse, eof_two_qubit, von_neumann_entropy
from monoqt.roof import roof_minimize
from monoqt.states import (
    CavityParams,
    DensityMatrix,
    PureState,
    bell_state,
    ghz_state,
    named_state,
    partial_trace,
    product_state,
)

rng = np.random.default_rng(77)

SIGMA_X_FRAME = np.array([[1, 1], [1, -1]]) / math.sqrt(2)


def rand_pure(dims, gen=rng):
    n = math.prod(dims)
    return PureState.from_unnormalized(dims, gen.normal(size=n) + 1j * gen.normal(size=n))


def rand_density(dims, rank=None):
    n = math.prod(dims)
    rank = n if rank is None else rank
    z = rng.normal(size=(n, rank)) + 1j * rng.normal(size=(n, rank))
    m = z @ z.conj().T
    return DensityMatrix(dims, m / np.trace(m).real)


def test_conditional_entropy_examples():
    a, b = rand_density((2,)), rand_density((2,))
    prod = DensityMatrix((2, 2), np.kron(a.matrix, b.matrix))
    assert abs(conditional_entropy(prod) - von_neumann_entropy(a)) < 1e-10
    assert abs(conditional_entropy(bell_state().to_density()) + 1) < 1e-10
    p = np.array([0.1, 0.2, 0.3, 0.4])
    cc = DensityMatrix((2, 2), np.diag(p))
    pb = np.array([p[0] + p[2], p[1] + p[3]])
    h = lambda v: -sum(x * math.log2(x) for x in v if x > 0)
    assert abs(conditional_entropy(cc) - (h(p) - h(pb))) < 1e-12
    assert abs(conditional_entropy(cc, b=0) - (h(p) - h([0.3, 0.7]))) < 1e-12
    with pytest.raises(ArgumentError):
        conditional_entropy(cc, b=2)


def test_discord_product_is_zero():
    a, b = rand_density((2,)), rand_density((2,))
    prod = DensityMatrix((2, 2), np.kron(a.matrix, b.matrix))
    res = discord(prod)
    assert abs(res.discord) < 1e-8
    assert abs(res.discord - (res.measured_entropy - res.conditional_entropy)) < 1e-10


def test_discord_bell_is_one():
    res = discord(bell_state().to_density())
    assert abs(res.discord - 1) < 1e-9
    assert discord(bell_state().to_density(), measured_party=0).discord == pytest.approx(1, abs=1e-9)


def test_discord_cavity_not_worse_than_sigma_x():
    for alpha, kt in [(1 / math.sqrt(3), 0.3), (0.5, 1.0), (0.8, 2.5)]:
        rho = partial_trace(named_state("cavity", alpha=alpha, kappa_t=kt), [0, 2])
        res = discord(rho, measured_party=1)
        sx = evaluate_measurement(rho, 1, SIGMA_X_FRAME) - res.conditional_entropy
        assert res.discord <= sx + 1e-9
        assert res.discord >= -1e-9


def test_discord_nonnegative_random():
    for _ in range(5):
        rho = rand_density((2, 2), rank=2)
        res = discord(rho, grid=16)
        assert res.discord >= -1e-9
        res3 = discord(DensityMatrix((3, 2), rand_density((3, 2)).matrix), grid=16)
        assert res3.discord >= -1e-9


def test_measurement_spec_is_complete():
    rho = rand_density((2, 2))
    spec = discord(rho, grid=16).optimal_measurement
    assert spec.kind == "qubit_angles"
    proj = spec.projectors()
    assert np.max(np.abs(proj.sum(axis=0) - np.eye(2))) < 1e-10
    for p in proj:
        assert np.max(np.abs(p @ p - p)) < 1e-10 and abs(np.trace(p).real - 1) < 1e-10
    assert abs(np.trace(proj[0] @ proj[1])) < 1e-10
    rho4 = DensityMatrix((2, 4), rand_density((2, 4)).matrix)
    value, spec4, _ = measured_entropy(rho4, 1, starts=64, refines=1)
    proj4 = spec4.projectors()
    assert spec4.kind == "unitary_columns" and proj4.shape == (4, 4, 4)
    assert np.max(np.abs(proj4.sum(axis=0) - np.eye(4))) < 1e-10
    assert abs(evaluate_measurement(rho4, 1, spec4.frame) - value) < 1e-10


def test_qubit_frame_orthonormal():
    f = qubit_frame(np.array([0.3, 2.0]), np.array([1.0, 5.0]))
    for u in f:
        assert np.max(np.abs(u.conj().T @ u - np.eye(2))) < 1e-14


def test_four_dimensional_measured_party():
    # Bell pair on A, B1 with B2 in |0>; measuring B = (B1, B2) sees the full qubit
    psi = PureState.from_unnormalized([2, 2, 2], [1, 0, 0, 0, 0, 0, 1, 0])
    res = discord(DensityMatrix((2, 4), psi.to_density().matrix), measured_party=1, starts=64)
    assert abs(res.discord - 1) < 1e-6


def test_unsupported_measured_dimension():
    with pytest.raises(UnsupportedError):
        discord(DensityMatrix((2, 3), rand_density((2, 3)).matrix), measured_party=1)
    with pytest.raises(ContractError):
        discord(np.eye(4) / 4)
    with pytest.raises(ArgumentError):
        discord(DensityMatrix((2, 2, 2), np.eye(8) / 8))


def test_koashi_winter_examples():
    assert koashi_winter_eof(ghz_state(3), 0, 1, 2) < 1e-9
    a, bc = rand_pure((2,)), rand_pure((2, 2))
    prod = product_state(a, bc)
    assert koashi_winter_eof(prod, 0, 1, 2) < 1e-9
    with pytest.raises(ContractError):
        koashi_winter_eof(ghz_state(3).to_density(), 0, 1, 2)
    with pytest.raises(ArgumentError):
        koashi_winter_eof(ghz_state(3), 0, 1, 1)


def test_koashi_winter_matches_wootters_for_three_qubits():
    for _ in range(5):
        psi = rand_pure((2, 2, 2))
        exact = eof_two_qubit(partial_trace(psi, [0, 2]))
        res = koashi_winter(psi, 0, 1, 2)
        assert res.support_rank == 2
        assert abs(res.eof - exact) < 1e-7


def test_koashi_winter_pure_reduction():
    # b is in a product state with (a, c), so rho_ac is pure
    ac = rand_pure((2, 2))
    psi = product_state(ac, rand_pure((2,)))
    res = koashi_winter(psi, 0, 2, 1)
    assert res.support_rank == 1 and res.exact
    assert abs(res.eof - von_neumann_entropy(partial_trace(ac, [0]))) < 1e-12


def test_koashi_winter_rank_limit():
    psi = rand_pure((2, 8, 8))
    with pytest.raises(UnsupportedError):
        koashi_winter(psi, 0, 1, 2)


def test_koashi_winter_upper_bounds_roof_four_dim_b():
    gen = np.random.default_rng(3)
    psi = rand_pure((2, 2, 2, 2, 2), gen)
    kw = koashi_winter_eof(psi, 0, (1, 2), (3, 4), starts=128)
    roof = roof_minimize(partial_trace(psi, [0, 3, 4]), "EOF", m=4, restarts=4).bound
    # both search the same size-4 ensembles
    assert abs(kw - roof) < 1e-3


def test_cavity_closed_form_examples():
    cf = cavity_closed_forms(CavityParams(1 / math.sqrt(3), kappa_t=0.0))
    assert isinstance(cf, CavityClosedForms)
    assert cf.eta1 == 0 and cf.eof_c1_r1r2 == 0
    p = CavityParams(1 / math.sqrt(3), kappa_t=math.log(2))
    cf = cavity_closed_forms(p)
    assert abs(cf.eta1 - (1 - math.sqrt(1 / 3)) / 2) < 1e-12
    for alpha in np.linspace(0.05, 0.95, 7):
        for kt in (0.1, 0.7, 3.0):
            cf = cavity_closed_forms(CavityParams(alpha, kappa_t=kt))
            assert cf.eta3 == cf.eta1
            for eta, e in [(cf.eta1, cf.eof_c1_r1r2), (cf.eta2, cf.eof_c1_c2r1), (cf.eta3, cf.eof_r1_c1c2),
                           (cf.eta4, cf.eof_r1_r2c1)]:
                assert 0 <= eta <= 0.5 and e == binary_entropy(eta)


def test_koashi_winter_cavity_grid():
    worst = 0.0
    c_sq_worst = 0.0
    for alpha in np.linspace(0.05, 0.95, 8):
        for kt in np.linspace(0.0, 5.0, 8):
            p = CavityParams(alpha, kappa_t=kt)
            psi = named_state("cavity", alpha=alpha, kappa_t=kt)
            cf = cavity_closed_forms(p)
            cases = [((0, 2, (1, 3)), cf.eof_c1_r1r2), ((0, 3, (1, 2)), cf.eof_c1_c2r1),
                     ((1, 3, (0, 2)), cf.eof_r1_c1c2), ((1, 2, (0, 3)), cf.eof_r1_r2c1)]
            for (a, b, c), e in cases:
                worst = max(worst, abs(koashi_winter_eof(psi, a, b, c) - e))
            c_sq = eof_curve_inverse(koashi_winter_eof(psi, 0, 2, (1, 3)))
            c_sq_worst = max(c_sq_worst, abs(c_sq - 4 * p.beta**2 * p.xi**2 * p.chi**2))
    assert worst < 1e-6
    assert c_sq_worst < 1e-6


def test_koashi_winter_agrees_with_roof_on_cavity():
    psi = named_state("cavity", alpha=1 / math.sqrt(3), kappa_t=math.log(2))
    kw = koashi_winter_eof(psi, 0, 2, (1, 3))
    roof = roof_minimize(partial_trace(psi, [0, 1, 3]), "EOF").bound
    assert abs(kw - roof) < 2e-4
