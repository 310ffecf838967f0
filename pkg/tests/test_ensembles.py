import numpy as np
import pytest

from brownflow import ensembles as en
from brownflow.errors import InvalidDimensionError


def test_rng_determinism_and_stream_independence():
    rng = en.RngHandle(123, 4)
    a = rng.generator().standard_normal(8)
    b = rng.generator().standard_normal(8)
    assert np.array_equal(a, b)
    c = rng.stream(5).generator().standard_normal(8)
    assert not np.array_equal(a, c)


@pytest.mark.parametrize("sampler", [en.sample_gue, en.sample_ginibre])
def test_samplers_deterministic(sampler):
    rng = en.RngHandle(7)
    assert np.array_equal(sampler(30, rng), sampler(30, rng))


@pytest.mark.parametrize("sampler", [en.sample_gue, en.sample_ginibre])
def test_zero_dimension_rejected(sampler):
    with pytest.raises(InvalidDimensionError):
        sampler(0, en.RngHandle(1))


def test_gue_hermitian_exactly():
    for j in range(5):
        x = en.sample_gue(40, en.RngHandle(2, j))
        assert np.max(np.abs(x - x.conj().T)) == 0.0


def test_gue_n1_is_real_standard_gaussian():
    # at n=1 the density reduces to exp(-x^2/2): variance 1
    vals = np.array([en.sample_gue(1, en.RngHandle(3, j))[0, 0] for j in range(4000)])
    assert np.max(np.abs(vals.imag)) == 0.0
    assert abs(np.var(vals.real) - 1.0) < 3.0 * np.sqrt(2.0 / 4000)


def test_gue_trace_moment():
    # E[(1/n) tr X^2] = 1 exactly; Var = 2/n^2 per sample (variance bookkeeping)
    n, m = 50, 1000
    vals = [np.trace(x @ x).real / n
            for x in (en.sample_gue(n, en.RngHandle(11, j)) for j in range(m))]
    se = np.sqrt(2.0) / (n * np.sqrt(m))
    assert abs(np.mean(vals) - 1.0) < 3.0 * se


def test_ginibre_trace_moment():
    # E[(1/n) tr Z*Z] = 1; Var = 1/n^2 per sample
    n, m = 50, 1000
    vals = [np.trace(z.conj().T @ z).real / n
            for z in (en.sample_ginibre(n, en.RngHandle(12, j)) for j in range(m))]
    se = 1.0 / (n * np.sqrt(m))
    assert abs(np.mean(vals) - 1.0) < 3.0 * se


def test_ginibre_n1_moment():
    vals = np.array([en.sample_ginibre(1, en.RngHandle(4, j))[0, 0] for j in range(4000)])
    assert abs(np.mean(np.abs(vals) ** 2) - 1.0) < 3.0 / np.sqrt(4000)


def test_bm_spec_validation():
    with pytest.raises(ValueError):
        en.BmPathSpec("unknown", 10, 1.0, 1)
    with pytest.raises(ValueError):
        en.BmPathSpec("unitary", 10, -1.0, 1)
    with pytest.raises(ValueError):
        en.BmPathSpec("unitary", 10, 1.0, 0)


def test_ginibre_bm_zero_time_is_zero_matrix():
    path = en.sample_ginibre_bm(en.BmPathSpec("additive-ginibre", 6, 0.0, 1), en.RngHandle(1))
    assert len(path) == 1
    assert np.all(path[0] == 0.0)


def test_ginibre_bm_single_step_matches_scaled_ginibre():
    # with k=1 the endpoint is sqrt(t) times a Ginibre draw
    n, m, t = 30, 400, 2.0
    vals = []
    for j in range(m):
        c = en.sample_ginibre_bm(en.BmPathSpec("additive-ginibre", n, t, 1),
                                 en.RngHandle(9, j))[-1]
        vals.append(np.trace(c.conj().T @ c).real / n)
    se = t / (n * np.sqrt(m))
    assert abs(np.mean(vals) - t) < 3.0 * se


def test_ginibre_bm_entry_variance_scaling():
    # marginal entry variance at time t is t/n, additive over increments
    n, m, t = 10, 2000, 2.0
    entries = np.array([
        en.sample_ginibre_bm(en.BmPathSpec("additive-ginibre", n, t, 4),
                             en.RngHandle(20, j))[-1][0, 0]
        for j in range(m)])
    mean_sq = np.mean(np.abs(entries) ** 2)
    se = (t / n) / np.sqrt(m)
    assert abs(mean_sq - t / n) < 3.0 * se


def test_ginibre_bm_increment_independence():
    n, m = 10, 2000
    d1 = np.empty(m)
    d2 = np.empty(m)
    for j in range(m):
        path = en.sample_ginibre_bm(en.BmPathSpec("additive-ginibre", n, 1.0, 2),
                                    en.RngHandle(21, j))
        d1[j] = path[0][0, 0].real
        d2[j] = (path[1] - path[0])[0, 0].real
    corr = np.corrcoef(d1, d2)[0, 1]
    assert abs(corr) < 4.0 / np.sqrt(m)


def test_unitary_bm_identity_at_zero_time():
    u = en.sample_unitary_bm(en.BmPathSpec("unitary", 12, 0.0, 1), en.RngHandle(1))
    assert np.array_equal(u, np.eye(12))


def test_unitary_bm_unitary_to_working_precision():
    spec = en.BmPathSpec("unitary", 200, 1.0, 100)
    u = en.sample_unitary_bm(spec, en.RngHandle(5))
    assert np.max(np.abs(u.conj().T @ u - np.eye(200))) <= 1e-12
    vals = np.linalg.eigvals(u)
    assert np.max(np.abs(np.abs(vals) - 1.0)) <= 1e-10


def test_unitary_bm_deterministic():
    spec = en.BmPathSpec("unitary", 20, 0.5, 10)
    assert np.array_equal(en.sample_unitary_bm(spec, en.RngHandle(6)),
                          en.sample_unitary_bm(spec, en.RngHandle(6)))


def test_gl_bm_identity_at_zero_time():
    b = en.sample_gl_bm(en.BmPathSpec("general-linear", 12, 0.0, 1), en.RngHandle(1))
    assert np.array_equal(b, np.eye(12))


def test_gl_bm_small_time_disk_around_one():
    # small t: eigenvalues approximate the disk of radius sqrt(t) centered at 1
    spec = en.BmPathSpec("general-linear", 300, 0.1, 10)
    b = en.sample_gl_bm(spec, en.RngHandle(8))
    vals = np.linalg.eigvals(b)
    assert np.mean(np.abs(vals - 1.0) <= 0.45) >= 0.90


def test_gl_bm_invertible():
    b = en.sample_gl_bm(en.BmPathSpec("general-linear", 50, 1.0, 20), en.RngHandle(9))
    sign, logdet = np.linalg.slogdet(b)
    assert sign != 0 and np.isfinite(logdet)


def test_step_exponential_matches_scipy():
    import scipy.linalg

    rng = en.RngHandle(33).generator()
    for scale in (0.05, 0.2, 0.6):
        a = scale * (rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40)))
        assert np.max(np.abs(en._expm_smallnorm(a) - scipy.linalg.expm(a))) < 1e-13


def test_nilpotent_structure():
    nil = en.nilpotent(5)
    gram = nil.conj().T @ nil
    diag = np.diag(gram).real
    # N-1 ones and a single zero on the diagonal
    assert np.count_nonzero(diag == 1.0) == 4
    assert diag[0] == 0.0
    assert np.max(np.abs(gram - np.diag(diag))) == 0.0


def test_nilpotent_plus_noise_spectra():
    vals = np.linalg.eigvals(en.nilpotent(80))
    assert np.max(np.abs(vals)) < 1e-8
    m = en.nilpotent_plus_noise(200, 1e-5, en.RngHandle(10))
    vals = np.linalg.eigvals(m)
    assert np.median(np.abs(np.abs(vals) - 1.0)) < 0.1
