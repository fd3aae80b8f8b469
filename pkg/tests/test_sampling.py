import numpy as np
import pytest
from scipy import integrate

from cartanflow import (
    ContractViolation,
    make_space,
    radial_histogram,
    sample_p_gaussian,
    sample_radial_batch,
    theoretical_radial_density,
    trace_form,
    verify_density,
)
from cartanflow.radial import radial_coords_batch
from cartanflow.sampling import (
    _chamber_ranges,
    _unnormalized,
    theoretical_radial_cdf,
)
from cartanflow.spaces import check_p_membership, geometry, random_k_element

KS_CASES = [("aiii", 2, 1), ("bdi", 2, 1), ("ai", 0, 2), ("a2", 0, 2)]


def test_sample_deterministic_and_in_p():
    d = make_space("aiii", 2, 1)
    X1 = sample_p_gaussian(d, 42)
    X2 = sample_p_gaussian(d, 42)
    assert np.array_equal(X1, X2)
    check_p_membership(d, X1)
    assert not np.array_equal(X1, sample_p_gaussian(d, 43))


def test_gaussian_norm_moment():
    # E[trace_form(X, X)] = dim p with chi-square fluctuations
    d = make_space("aiii", 2, 1)
    count = 100_000
    rng = np.random.default_rng(0)
    coeff = rng.standard_normal((count, d.dim_p))
    vals = np.sum(coeff**2, axis=1)
    mean = float(np.mean(vals))
    assert abs(mean - d.dim_p) <= 3 * np.sqrt(2 * d.dim_p / count)


def test_basis_projections_uncorrelated():
    d = make_space("ai", 0, 3)
    geo = geometry(d)
    rng = np.random.default_rng(5)
    coeff = rng.standard_normal((50_000, d.dim_p))
    cov = coeff[:, 0] @ coeff[:, 1] / coeff.shape[0]
    assert abs(cov) <= 3 / np.sqrt(coeff.shape[0])


def test_shard_independence_bit_identical():
    d = make_space("aiii", 2, 1)
    a = sample_radial_batch(d, 30_000, seed=7, threads=1)
    b = sample_radial_batch(d, 30_000, seed=7, threads=4)
    assert np.array_equal(a, b)


def test_histogram_counts_and_density():
    d = make_space("bdi", 2, 1)
    hist = radial_histogram(d, 20_000, 32, seed=3)
    counts = hist.counts[0]
    assert counts.sum() == 20_000
    area = float(np.sum(hist.density[0] * np.diff(hist.edges[0])))
    assert area == pytest.approx(1.0, abs=1e-6)


def test_histogram_multirank_marginals():
    d = make_space("aiii", 3, 2)
    hist = radial_histogram(d, 5000, 16, seed=2)
    assert len(hist.edges) == 2 and len(hist.counts) == 2
    for i in range(2):
        assert hist.counts[i].sum() == 5000
        area = float(np.sum(hist.density[i] * np.diff(hist.edges[i])))
        assert area == pytest.approx(1.0, abs=1e-6)


def test_histogram_single_sample():
    d = make_space("aiii", 2, 1)
    hist = radial_histogram(d, 1, 4, seed=9)
    assert hist.counts[0].sum() == 1


def test_histogram_validation():
    d = make_space("aiii", 2, 1)
    with pytest.raises(ContractViolation):
        radial_histogram(d, 10, 1, seed=0)
    with pytest.raises(ContractViolation):
        sample_radial_batch(d, 0, seed=0)


def test_k_invariance_of_radial_samples():
    # histograms of q from X and from Ad(k) X agree within Monte Carlo error
    d = make_space("aiii", 2, 1)
    rng = np.random.default_rng(17)
    k = random_k_element(d, rng)
    qs = sample_radial_batch(d, 20_000, seed=23)
    geo = geometry(d)
    coeff = np.random.default_rng(
        np.random.SeedSequence(23, spawn_key=(0,))
    ).standard_normal((8192, d.dim_p))
    Xs = np.tensordot(coeff, np.stack(geo.p_basis), axes=([1], [0]))
    Xk = np.einsum("ij,bjk,lk->bil", k, Xs, k.conj())
    qa = radial_coords_batch(d, Xs)
    qb = radial_coords_batch(d, Xk)
    assert np.max(np.abs(np.sort(qa[:, 0]) - np.sort(qb[:, 0]))) <= 1e-8


@pytest.mark.parametrize("case", KS_CASES + [("aiii", 3, 2), ("ai", 0, 3), ("bdi", 2, 2)])
def test_theoretical_density_integrates_to_one(case):
    d = make_space(*case)
    from cartanflow.sampling import _normalizer

    Z = _normalizer(d)
    val, _ = integrate.nquad(
        lambda *xs: _unnormalized(d, np.array(xs[::-1])) / Z,
        _chamber_ranges(d),
        opts={"epsabs": 1e-12, "epsrel": 1e-9},
    )
    assert val == pytest.approx(1.0, abs=1e-6)


def test_density_vanishes_on_walls_and_outside():
    d = make_space("aiii", 3, 2)
    assert theoretical_radial_density(d, np.array([1.0, 1.0])) == pytest.approx(0.0, abs=1e-12)
    assert theoretical_radial_density(d, np.array([1.0, 2.0])) == 0.0  # outside chamber


def test_mode_of_rank_one_density():
    # q^3 exp(-q^2) peaks at sqrt(3/2)
    d = make_space("aiii", 2, 1)
    qs = np.linspace(0.8, 1.6, 4001)
    vals = [theoretical_radial_density(d, np.array([q])) for q in qs]
    assert qs[int(np.argmax(vals))] == pytest.approx(np.sqrt(1.5), abs=1e-3)


def test_cdf_monotone_and_normalized():
    d = make_space("ai", 0, 2)
    x = np.linspace(0, 6, 40)
    cdf = theoretical_radial_cdf(d, x)
    assert np.all(np.diff(cdf) >= -1e-12)
    assert cdf[-1] == pytest.approx(1.0, abs=1e-6)


@pytest.mark.parametrize("case", KS_CASES)
def test_ks_verification(case):
    d = make_space(*case)
    res = verify_density(d, count=100_000, bins=64, seed=7)
    assert res["constant_ratio_ok"]
    assert res["ks_statistic"] <= res["threshold"]
    assert res["pass"]


def test_verify_density_higher_rank_skips_ks():
    res = verify_density(make_space("aiii", 3, 2), count=100, bins=8, seed=1)
    assert res["ks_statistic"] is None
    assert res["constant_ratio_ok"] and res["pass"]
