import numpy as np
import pytest

from brownflow import free_moments as fm
from brownflow import hj_engine as hj
from brownflow.errors import SeriesGuardError

CATALAN = [1, 1, 2, 5, 14, 42, 132, 429]


def hierarchy_polynomial_oracle(lam, t, order):
    """Independent route: the hierarchy integrates exactly in closed form
    as polynomials in t, via the coefficient recursion
    c[n][k] = (n/k) * sum_{j, k1+k2=k-1} c[j][k1] c[n-1-j][k2]."""
    q = abs(lam) ** 2
    coeffs = [np.zeros(order + 1) for _ in range(order + 1)]
    for n in range(order + 1):
        coeffs[n][0] = q ** n
    for k in range(1, order + 1):
        for n in range(1, order + 1):
            acc = 0.0
            for j in range(n):
                c1, c2 = coeffs[j], coeffs[n - 1 - j]
                acc += sum(c1[k1] * c2[k - 1 - k1] for k1 in range(k))
            coeffs[n][k] = n * acc / k
    ts = t ** np.arange(order + 1)
    return np.array([coeffs[n] @ ts for n in range(order + 1)])


@pytest.mark.parametrize("lam,t", [(0.0, 1.0), (0.5, 1.0), (0.3 + 0.4j, 0.7), (1.2, 0.25)])
def test_hierarchy_against_polynomial_oracle(lam, t):
    order = 8
    mv = fm.circ_moment_odes(lam, t, order)
    oracle = hierarchy_polynomial_oracle(lam, t, order)
    assert np.max(np.abs(mv.m - oracle) / (1.0 + oracle)) < 1e-10


def test_moment_closed_forms():
    lam, t = 0.5, 1.0
    mv = fm.circ_moment_odes(lam, t, 6)
    q = abs(lam) ** 2
    assert mv.m[0] == 1.0
    assert abs(mv.m[1] - (q + t)) < 1e-10
    assert abs(mv.m[2] - (q ** 2 + 4 * q * t + 2 * t ** 2)) < 1e-10


def test_catalan_moments_at_unit_time():
    mv = fm.circ_moment_odes(0.0, 1.0, 7)
    assert np.max(np.abs(mv.m - np.array(CATALAN, dtype=float))) < 1e-9


def test_hierarchy_positivity_and_hankel():
    for lam, t in [(0.0, 1.0), (0.8, 2.0), (0.2 + 0.6j, 0.5)]:
        mv = fm.circ_moment_odes(lam, t, 10)
        assert np.all(mv.m >= 0)
        half = mv.order // 2
        hankel = np.array([[mv.m[i + j] for j in range(half + 1)] for i in range(half + 1)])
        assert np.min(np.linalg.eigvalsh(hankel)) > -1e-8


def test_series_at_zero_time_is_initial_logarithm():
    lam, x = 0.7, 5.0
    sv = fm.S_series(lam, x, 0.0, order=40)
    assert abs(sv.value - np.log(abs(lam) ** 2 + x)) <= max(sv.truncation_bound, 1e-12)


def test_series_matches_characteristic_solution():
    sv = fm.S_series(0.5, 10.0, 1.0, order=40)
    assert abs(sv.value - hj.circ_S_at(1.0, 0.5, 10.0)) < 1e-6


def test_series_truncation_is_monotone():
    a = fm.S_series(0.5, 10.0, 1.0, order=40)
    b = fm.S_series(0.5, 10.0, 1.0, order=60)
    assert abs(a.value - b.value) < 1e-9


def test_series_guard():
    with pytest.raises(SeriesGuardError):
        fm.S_series(0.5, 1.0, 1.0, order=40)  # x far below the norm proxy


# ---------------------------------------------------------------------------
# word moments
# ---------------------------------------------------------------------------

def random_moments(gen, degree):
    return [1.0] + list(gen.uniform(-1, 1, degree))


def test_word_pair_factorizations():
    gen = np.random.default_rng(0)
    for _ in range(20):
        ma, mb = random_moments(gen, 4), random_moments(gen, 4)
        assert fm.free_word_moment([("a", 1), ("b", 1)], ma, mb) == pytest.approx(ma[1] * mb[1])
        assert fm.free_word_moment([("a", 2), ("b", 1)], ma, mb) == pytest.approx(ma[2] * mb[1])
        assert fm.free_word_moment([("a", 1), ("b", 2)], ma, mb) == pytest.approx(ma[1] * mb[2])


def test_word_abab_identity():
    gen = np.random.default_rng(1)
    for _ in range(20):
        ma, mb = random_moments(gen, 4), random_moments(gen, 4)
        got = fm.free_word_moment([("a", 1), ("b", 1), ("a", 1), ("b", 1)], ma, mb)
        want = ma[2] * mb[1] ** 2 + ma[1] ** 2 * mb[2] - ma[1] ** 2 * mb[1] ** 2
        assert got == pytest.approx(want, abs=1e-12)


def rotate_word(word):
    """Cyclic rotation with the wrap-around merge of equal letters."""
    head, tail = word[0], list(word[1:])
    if tail and tail[-1][0] == head[0]:
        tail[-1] = (head[0], tail[-1][1] + head[1])
        return tail
    return tail + [head]


@pytest.mark.parametrize("word", [
    [("a", 1), ("b", 1), ("a", 1), ("b", 1)],
    [("a", 2), ("b", 1), ("a", 1), ("b", 3)],
    [("a", 1), ("b", 2), ("a", 2)],
    [("a", 1), ("b", 2), ("a", 2), ("b", 1), ("a", 1), ("b", 1)],
])
def test_word_traciality_under_rotation(word):
    gen = np.random.default_rng(2)
    for _ in range(5):
        ma, mb = random_moments(gen, 8), random_moments(gen, 8)
        base = fm.free_word_moment(word, ma, mb)
        w = list(word)
        for _ in range(len(word) - 1):
            w = rotate_word(w)
            assert fm.free_word_moment(w, ma, mb) == pytest.approx(base, abs=1e-10)


def test_word_validation():
    ma = [1.0, 0.5, 0.25]
    with pytest.raises(ValueError):
        fm.free_word_moment([("a", 1), ("a", 1)], ma, ma)  # adjacent duplicates
    with pytest.raises(ValueError):
        fm.free_word_moment([("a", 1), ("b", 1)] * 5, ma, ma)  # too long
    with pytest.raises(ValueError):
        fm.free_word_moment([("a", 5), ("b", 1)], ma, ma)  # moments too short
