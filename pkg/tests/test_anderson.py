import itertools
import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rank_one_lab.anderson import (
    AndersonConfig,
    LatticeBox,
    PotentialDistribution,
    TestVector,
    affine_line_sweep,
    cyclicity_mc,
    discrete_laplacian,
    hamiltonian,
    jacobi_end_cyclic,
    sample_hamiltonian,
    sample_potential,
    test_vector as config_vector,
)
from rank_one_lab.errors import InvariantError, PreconditionError
from rank_one_lab.spectral import CYCLIC, NOT_CYCLIC, RankOneFamily, cyclicity_sweep, is_cyclic, uniform_grid


def brute_laplacian(sides):
    sites = list(itertools.product(*[range(s) for s in sides]))
    index = {s: i for i, s in enumerate(sites)}
    m = np.zeros((len(sites), len(sites)))
    for s in sites:
        i = index[s]
        for axis in range(len(sides)):
            for step in (-1, 1):
                t = list(s)
                t[axis] += step
                m[i, i] += 1
                if tuple(t) in index:
                    m[i, index[tuple(t)]] -= 1
                # a missing neighbour still contributes f(x) to -(f(x+e) - f(x))
    return m


def test_laplacian_examples():
    assert discrete_laplacian(LatticeBox((2,))).entries.tolist() == [[2, -1], [-1, 2]]
    assert discrete_laplacian(LatticeBox((1,))).entries.tolist() == [[2]]
    m = discrete_laplacian(LatticeBox((2, 2))).entries
    assert np.all(np.diag(m) == 4) and (m == -1).sum() == 8


@given(st.lists(st.integers(1, 5), min_size=1, max_size=3))
def test_laplacian_matches_enumeration(sides):
    box = LatticeBox(tuple(sides))
    m = discrete_laplacian(box).entries
    assert np.array_equal(m, brute_laplacian(sides))
    missing = 2 * box.dimension - (m != 0).sum(axis=1) + 1
    assert np.array_equal(m.sum(axis=1), missing)


def test_box_cap():
    with pytest.raises(InvariantError):
        LatticeBox((100, 100))
    LatticeBox((64, 64))
    with pytest.raises(InvariantError):
        LatticeBox((0,))


def test_distribution_invariants():
    with pytest.raises(InvariantError):
        PotentialDistribution.uniform(1, 1)
    with pytest.raises(InvariantError):
        PotentialDistribution.gaussian(0, 0)
    assert PotentialDistribution.uniform().absolutely_continuous
    assert not PotentialDistribution.bernoulli().absolutely_continuous


def test_hamiltonian_examples():
    box = LatticeBox((2,))
    assert hamiltonian(box, [1, 3]).entries.tolist() == [[3, -1], [-1, 5]]
    assert np.array_equal(hamiltonian(box, [0, 0]).entries, discrete_laplacian(box).entries)


def test_sampling_is_deterministic_and_index_local():
    cfg = AndersonConfig(LatticeBox((6,)), PotentialDistribution.gaussian(), 10, 123)
    a = sample_hamiltonian(cfg, 7).entries
    assert np.array_equal(a, sample_hamiltonian(cfg, 7).entries)
    big = AndersonConfig(LatticeBox((6,)), PotentialDistribution.gaussian(), 1000, 123)
    assert np.array_equal(a, sample_hamiltonian(big, 7).entries)
    assert not np.array_equal(sample_potential(cfg, 7), sample_potential(cfg, 8))


DISTRIBUTIONS = [PotentialDistribution.uniform(0, 1), PotentialDistribution.gaussian(0, 2),
                 PotentialDistribution.uniform(-3, 3), PotentialDistribution.bernoulli(0.5, 0, 4)]


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
@pytest.mark.parametrize("n", [1, 2, 17, 40, 64])
def test_delta_cyclicity_certificate_in_one_dimension(dist, n):
    cfg = AndersonConfig(LatticeBox((n,)), dist, 50, 5)
    for i in range(cfg.samples):
        h = sample_hamiltonian(cfg, i)
        assert jacobi_end_cyclic(h, 0) and jacobi_end_cyclic(h, n - 1)


@pytest.mark.parametrize("dist", DISTRIBUTIONS)
@pytest.mark.parametrize("n", [2, 5, 8])
def test_delta_numerically_cyclic_on_short_chains(dist, n):
    rep = cyclicity_mc(AndersonConfig(LatticeBox((n,)), dist, 100, 5))
    assert rep.cyclic_count == 100


def test_delta_numerically_cyclic_weak_disorder():
    rep = cyclicity_mc(AndersonConfig(LatticeBox((30,)), PotentialDistribution.uniform(0, 1), 100, 8))
    assert rep.cyclic_count == 100


def test_certificate_rejects_interior_sites_and_2d():
    h = discrete_laplacian(LatticeBox((5,)))
    assert not jacobi_end_cyclic(h, 2)
    assert not jacobi_end_cyclic(discrete_laplacian(LatticeBox((3, 3))), 0)


def test_two_site_example():
    cfg = AndersonConfig(LatticeBox((2,)), PotentialDistribution.bernoulli(0, 0, 0), 1, 0,
                         TestVector("user", values=(1, 1)))
    rep = cyclicity_mc(cfg)
    assert rep.noncyclic_count == 1 and rep.failures[0][:2] == (0, NOT_CYCLIC)


def test_bernoulli_flags_degeneracy():
    cfg = AndersonConfig(LatticeBox((2, 2)), PotentialDistribution.bernoulli(0.5, 0, 1), 200, 11,
                         TestVector("random"))
    rep = cyclicity_mc(cfg)
    assert rep.degenerate_count > 0
    assert rep.cyclic_count + rep.degenerate_count + rep.noncyclic_count == 200
    assert not rep.absolutely_continuous


def test_mc_workers_do_not_change_report():
    cfg = AndersonConfig(LatticeBox((3, 3)), PotentialDistribution.bernoulli(0.5, 0, 1), 60, 2, TestVector("random"))
    assert cyclicity_mc(cfg) == cyclicity_mc(cfg, workers=4)


def test_random_vector_is_seeded():
    cfg = AndersonConfig(LatticeBox((5,)), PotentialDistribution.uniform(), 3, 9, TestVector("random"))
    v = config_vector(cfg)
    assert np.array_equal(v, config_vector(cfg)) and abs(np.linalg.norm(v) - 1) < 1e-15


def test_mc_rejects_zero_vector():
    cfg = AndersonConfig(LatticeBox((3,)), PotentialDistribution.uniform(), 1, 0)
    with pytest.raises(PreconditionError):
        cyclicity_mc(cfg, f=np.zeros(3))


def test_affine_single_site_equals_rank_one_family(rng):
    box = LatticeBox((7,))
    omega0 = rng.uniform(0, 1, 7)
    e = np.eye(7)[2]
    grid = uniform_grid(-4, 4, 301)
    f = rng.standard_normal(7)
    ours = affine_line_sweep(box, omega0, e, grid, f)
    ref = cyclicity_sweep(RankOneFamily(hamiltonian(box, omega0), e, grid), f)
    assert ours.entries == ref.entries


def test_affine_zero_grid_is_single_call(rng):
    box = LatticeBox((5,))
    omega0 = rng.uniform(0, 1, 5)
    f = np.eye(5)[0]
    rep = affine_line_sweep(box, omega0, np.ones(5), [0.0], f)
    assert rep.entries == (is_cyclic(hamiltonian(box, omega0), f, parameter=0.0),)


def test_affine_all_ones_direction(rng):
    box = LatticeBox((10,))
    rep = affine_line_sweep(box, rng.uniform(0, 1, 10), np.ones(10), uniform_grid(-5, 5, 1000), np.eye(10)[0])
    assert rep.noncyclic_count == 0 and rep.cyclic_count == 1000


def test_affine_two_site_direction(rng):
    box = LatticeBox((6,))
    a = np.zeros(6)
    a[[1, 4]] = [1.0, -0.5]
    rep = affine_line_sweep(box, rng.uniform(0, 1, 6), a, uniform_grid(-3, 3, 200), np.eye(6)[0])
    assert rep.cyclic_count == 200


def test_affine_rejects_zero_direction():
    with pytest.raises(PreconditionError):
        affine_line_sweep(LatticeBox((3,)), np.zeros(3), np.zeros(3), [0.0], np.ones(3))


def test_config_round_trip_json_and_toml(tmp_path):
    cfg = AndersonConfig(LatticeBox((4, 3)), PotentialDistribution.bernoulli(0.3, -1, 2), 12, 77,
                         TestVector("delta", site=5))
    d = cfg.to_dict()
    (tmp_path / "c.json").write_text(json.dumps(d))
    toml = """samples = 12
seed = 77
[box]
sides = [4, 3]
[distribution]
kind = "bernoulli"
p = 0.3
v0 = -1
v1 = 2
[test_vector]
kind = "delta"
site = 5
"""
    (tmp_path / "c.toml").write_text(toml)
    for name in ("c.json", "c.toml"):
        assert AndersonConfig.from_file(tmp_path / name).to_dict() == d


@pytest.mark.parametrize("patch, field", [
    ({"extra": 1}, "extra"),
    ({"distribution": {"kind": "uniform", "a": 0, "b": 1, "c": 2}}, "c"),
    ({"distribution": {"kind": "cauchy"}}, "distribution.kind"),
    ({"samples": 0}, "samples"),
    ({"test_vector": {"kind": "delta", "site": 99}}, "site"),
])
def test_config_rejects_bad_input(patch, field):
    d = {"box": {"sides": [5]}, "distribution": {"kind": "uniform", "a": 0, "b": 1}, "samples": 3, "seed": 1}
    d.update(patch)
    with pytest.raises(InvariantError, match=field):
        AndersonConfig.from_dict(d)
