import itertools
import math

import numpy as np
import pytest

from monoqt.errors import ArgumentError, CapacityError, ContractError
from monoqt.linalg import eigvalsh
from monoqt.measures import pure_concurrence_sq, von_neumann_entropy
from monoqt.states import (
    CavityParams,
    DensityMatrix,
    PartitionSpec,
    PureState,
    basis_digits,
    basis_index,
    bell_state,
    cavity_state,
    cluster4,
    ghz_state,
    group_parties,
    named_state,
    ou333,
    partial_trace,
    s224,
    s422,
    ungroup_parties,
    w_state,
)

rng = np.random.default_rng(7)


def rand_pure(dims, rng=rng):
    v = rng.normal(size=math.prod(dims)) + 1j * rng.normal(size=math.prod(dims))
    return PureState.from_unnormalized(dims, v)


def test_basis_round_trip():
    dims = (2, 3, 4)
    for idx in range(24):
        assert basis_index(basis_digits(idx, dims), dims) == idx
    # first subsystem is the most significant digit
    assert basis_index((1, 0, 0), dims) == 12
    assert basis_index((0, 0, 1), dims) == 1


def test_pure_state_normalization():
    v = np.array([1.0, 0.0]) * (1 + 5e-9)
    assert abs(np.linalg.norm(PureState([2], v).amplitudes) - 1) < 1e-15
    with pytest.raises(ContractError):
        PureState([2], [1.0, 0.1])
    with pytest.raises(ContractError):
        PureState([2, 2], [1.0, 0.0])
    with pytest.raises(ArgumentError):
        PureState([0], [])


def test_density_matrix_validation():
    DensityMatrix([2], np.eye(2) / 2)
    with pytest.raises(ContractError):
        DensityMatrix([2], [[0.5, 0.1], [0.0, 0.5]])
    with pytest.raises(ContractError):
        DensityMatrix([2], np.eye(2) / 2 * 1.01)
    with pytest.raises(ContractError):
        DensityMatrix([2], np.diag([1.1, -0.1]))
    with pytest.raises(CapacityError):
        DensityMatrix([4097], np.zeros((1, 1)), check=False)


def test_partition_parse_and_checks():
    p = PartitionSpec.parse("0|1|2,3")
    assert p.parties == ((0,), (1,), (2, 3)) and str(p) == "0|1|2,3"
    with pytest.raises(ArgumentError):
        PartitionSpec(((0, 1), (1, 2)))
    with pytest.raises(ArgumentError):
        PartitionSpec(((0,),))
    with pytest.raises(ArgumentError):
        PartitionSpec.parse("0|x")
    with pytest.raises(ArgumentError):
        p.check(3)
    assert PartitionSpec.bipartite([0], 4).parties == ((0,), (1, 2, 3))


def test_cavity_params():
    p = CavityParams(1 / math.sqrt(3), kappa_t=math.log(2))
    assert abs(p.beta**2 - 2 / 3) < 1e-15
    assert abs(p.xi**2 - 0.5) < 1e-15 and abs(p.chi**2 - 0.5) < 1e-15
    with pytest.raises(ArgumentError):
        CavityParams(0.5, 0.5)
    with pytest.raises(ArgumentError):
        CavityParams(0.5, kappa_t=-1.0)


def test_partial_trace_examples():
    rho = bell_state().to_density()
    assert np.allclose(partial_trace(rho, [0]).matrix, np.eye(2) / 2)
    assert partial_trace(rho, [0, 1]) is rho
    c = cavity_state(CavityParams(1 / math.sqrt(3), kappa_t=80.0))
    assert np.allclose(partial_trace(c.to_density(), [0]).matrix, np.diag([1.0, 0.0]), atol=1e-15)
    with pytest.raises(ArgumentError):
        partial_trace(rho, [])
    with pytest.raises(ArgumentError):
        partial_trace(rho, [2])


def test_partial_trace_pure_matches_mixed():
    psi = rand_pure((2, 3, 2))
    rho = psi.to_density()
    for keep in ([0], [1], [2], [0, 2], [1, 2]):
        a = partial_trace(psi, keep)
        b = partial_trace(rho, keep)
        assert a.dims == b.dims
        assert np.allclose(a.matrix, b.matrix, atol=1e-14)
        assert abs(np.trace(a.matrix) - 1) < 1e-12


def test_schmidt_symmetry():
    for i in range(500):
        dims = [(2, 2), (2, 3), (3, 3), (2, 2, 2), (2, 4)][i % 5]
        psi = rand_pure(dims)
        n = len(dims)
        keep = [0] if n == 2 else [0, 2]
        rest = [j for j in range(n) if j not in keep]
        wa = eigvalsh(partial_trace(psi, keep).matrix)
        wb = eigvalsh(partial_trace(psi, rest).matrix)
        r = min(len(wa), len(wb))
        assert np.allclose(wa[:r], wb[:r], atol=1e-9)


def test_partial_trace_composes():
    psi = rand_pure((2, 2, 3, 2))
    rho = psi.to_density()
    step = partial_trace(partial_trace(rho, [0, 1, 2]), [0, 1])
    assert np.max(np.abs(step.matrix - partial_trace(rho, [0, 1]).matrix)) <= 1e-12


def test_group_parties():
    g = group_parties(cluster4(), PartitionSpec.parse("0|1|2,3"))
    assert g.dims == (2, 2, 4)
    assert np.allclose(g.amplitudes, s224().amplitudes)
    ident = PartitionSpec.parse("0|1|2|3")
    psi = rand_pure((2, 2, 2, 2))
    assert np.array_equal(group_parties(psi, ident).amplitudes, psi.amplitudes)
    part = PartitionSpec.parse("2|0,3|1")
    back = ungroup_parties(group_parties(psi, part), part, psi.dims)
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) <= 1e-14
    rho = psi.to_density()
    gm = group_parties(rho, part)
    assert np.allclose(gm.matrix, group_parties(psi, part).to_density().matrix, atol=1e-15)
    assert np.max(np.abs(ungroup_parties(gm, part, psi.dims).matrix - rho.matrix)) <= 1e-15
    with pytest.raises(ArgumentError):
        group_parties(psi, PartitionSpec.parse("0|1"))


def test_w_state():
    assert np.allclose(w_state(2).amplitudes, [0, 1, 1, 0] / np.sqrt(2))
    assert abs(pure_concurrence_sq(w_state(3)) - 8 / 9) < 1e-12
    pair = partial_trace(w_state(20), [0, 1]).matrix
    from monoqt.measures import concurrence_two_qubit

    assert abs(concurrence_two_qubit(pair) ** 2 - 0.01) < 1e-12
    with pytest.raises(ArgumentError):
        w_state(1)


def test_cavity_state():
    a = 1 / math.sqrt(3)
    s0 = cavity_state(CavityParams(a, kappa_t=0.0)).amplitudes
    ref = np.zeros(16)
    ref[0], ref[0b1010] = a, math.sqrt(2 / 3)
    assert np.allclose(s0, ref)
    s_inf = cavity_state(CavityParams(a, kappa_t=100.0)).amplitudes
    ref = np.zeros(16)
    ref[0], ref[0b0101] = a, math.sqrt(2 / 3)
    assert np.allclose(s_inf, ref)
    for kt in np.linspace(0, 5, 11):
        amps = cavity_state(CavityParams(a, kappa_t=kt)).amplitudes
        assert abs(np.vdot(amps, amps).real - 1) < 1e-14


def test_named_states():
    assert np.allclose(partial_trace(ou333(), [0]).matrix, np.eye(3) / 3)
    st = s422(math.pi / 4).amplitudes
    assert np.allclose(st[st != 0], 0.5)
    assert named_state("s422", theta=0.3).dims == (4, 2, 2)
    assert named_state("ghz", n=4).dims == (2,) * 4
    assert named_state("CLUSTER4").dims == (2,) * 4
    with pytest.raises(ArgumentError):
        named_state("nope")


def test_ou_relabeling_invariance():
    # any permutation of the local levels leaves the measures unchanged
    base = ou333()
    s_ref = von_neumann_entropy(partial_trace(base, [0]))
    c_ref = pure_concurrence_sq(base)
    pair_ref = eigvalsh(partial_trace(base, [0, 1]).matrix)
    for perm in itertools.permutations(range(3)):
        t = base.tensor()[np.ix_(perm, perm, perm)]
        psi = PureState(base.dims, t.reshape(-1))
        assert abs(von_neumann_entropy(partial_trace(psi, [0])) - s_ref) < 1e-12
        assert abs(pure_concurrence_sq(psi) - c_ref) < 1e-12
        assert np.allclose(eigvalsh(partial_trace(psi, [0, 1]).matrix), pair_ref, atol=1e-12)


def test_ghz():
    g = ghz_state(3).amplitudes
    assert abs(g[0] - g[7]) < 1e-15 and abs(g[0] - 1 / math.sqrt(2)) < 1e-15
