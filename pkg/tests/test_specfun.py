import math

import numpy as np
import pytest
from scipy.linalg import expm

from tpqrm.specfun import (
    double_factorial,
    legendre_pk,
    legendre_smallbeta,
    log_double_factorial,
    squeeze_element,
    squeeze_matrix,
)


def test_double_factorial_small_values():
    assert double_factorial(-1) == 1
    assert double_factorial(0) == 1
    assert double_factorial(5) == 15
    assert double_factorial(8) == 384
    with pytest.raises(ValueError):
        double_factorial(-2)


def test_double_factorial_log_path_consistent():
    # ratio (n!!)/((n-2)!!) = n survives the switch to log space
    assert double_factorial(31) / double_factorial(29) == pytest.approx(31.0, rel=1e-12)
    assert log_double_factorial(40) == pytest.approx(math.log(float(double_factorial(30))) + sum(
        math.log(k) for k in (32, 34, 36, 38, 40)), rel=1e-13)


def test_legendre_base_cases():
    for x in (0.0, 0.3, 0.77, 1.0):
        assert legendre_pk(0, 0, x) == pytest.approx(1.0, abs=1e-15)
    beta = 0.42
    # no Condon-Shortley phase: P_1^1 is positive
    assert legendre_pk(1, 1, beta) == pytest.approx(math.sqrt(1 - beta * beta), rel=1e-14)
    assert legendre_pk(2, 0, 0.1) == pytest.approx((3 * 0.01 - 1) / 2, rel=1e-14)
    assert legendre_pk(3, 1, 0.5) == pytest.approx(
        math.sqrt(1 - 0.25) * (-1.5) * (1 - 5 * 0.25), rel=1e-13
    )


def test_legendre_negative_order_relation():
    # P_2^-2 = (1-x^2)/8, from P_2^2 = 3(1-x^2) and the pinned relation
    rng = np.random.default_rng(7)
    for x in rng.uniform(0.0, 1.0, 20):
        assert legendre_pk(2, -2, x) == pytest.approx((1 - x * x) / 8.0, rel=1e-12, abs=1e-15)
        assert legendre_pk(2, 2, x) == pytest.approx(3.0 * (1 - x * x), rel=1e-12, abs=1e-15)


def test_legendre_negative_degree_and_overrange_order():
    assert legendre_pk(-1, 1, 0.3) == 0.0  # P_-1^1 = P_0^1 = 0
    assert legendre_pk(-3, 0, 0.3) == pytest.approx(legendre_pk(2, 0, 0.3), rel=1e-14)
    assert legendre_pk(3, 4, 0.3) == 0.0
    with pytest.raises(ValueError):
        legendre_pk(2, 0, 1.5)


def test_legendre_three_term_recurrence():
    # (l-k+1) P_(l+1)^k = (2l+1) x P_l^k - (l+k) P_(l-1)^k
    xs = np.linspace(0.01, 0.99, 15)
    worst = 0.0
    for l in range(1, 41):
        for k in range(-l, l + 1):
            for x in xs:
                lhs = (l - k + 1) * legendre_pk(l + 1, k, x)
                rhs = (2 * l + 1) * x * legendre_pk(l, k, x) - (l + k) * legendre_pk(l - 1, k, x)
                scale = max(abs(lhs), abs(rhs), 1e-300)
                worst = max(worst, abs(lhs - rhs) / scale)
    assert worst < 1e-10


def test_smallbeta_examples():
    for beta in (0.05, 0.2):
        assert legendre_smallbeta(0, 0, beta) == pytest.approx(1.0, abs=1e-15)
        assert legendre_smallbeta(1, 1, beta) == pytest.approx(
            math.sqrt(1 - beta * beta), rel=1e-14
        )
    assert legendre_smallbeta(2, 0, 0.1) == pytest.approx(-0.485, rel=1e-14)
    assert legendre_pk(2, 0, 0.1) == pytest.approx(-0.485, rel=1e-14)
    with pytest.raises(ValueError):
        legendre_smallbeta(2, 1, 0.1)
    with pytest.raises(ValueError):
        legendre_smallbeta(4, 0, 0.5)


def test_smallbeta_exact_when_l_minus_k_two():
    # for l - k = 2 the bracket is the whole polynomial: no O(beta^4) term
    for (l, k) in [(3, 1), (5, 3), (2, 0)]:
        for b in (1e-3, 1e-2, 1e-1):
            assert legendre_smallbeta(l, k, b) == pytest.approx(
                legendre_pk(l, k, b), rel=1e-12
            )


def test_smallbeta_error_scales_as_beta4():
    betas = np.geomspace(1e-3, 1e-1, 9)
    for (l, k) in [(4, 0), (5, 1), (6, 2)]:  # l - k >= 4 has a genuine beta^4 term
        errs = np.array(
            [abs(legendre_pk(l, k, b) - legendre_smallbeta(l, k, b)) for b in betas]
        )
        assert np.all(errs > 0)
        slope = np.polyfit(np.log(betas), np.log(errs), 1)[0]
        assert slope >= 3.5


def _squeeze_oracle(theta: float, n_fock: int) -> np.ndarray:
    """Exponentiate the truncated generator theta*(a'^2 - a^2) (i.e. S(2 theta))."""
    n = np.arange(n_fock)
    a = np.diag(np.sqrt(n[1:].astype(float)), 1)
    gen = theta * (a.T @ a.T - a @ a)
    return expm(gen)


def test_squeeze_element_identity_at_zero():
    for m in range(5):
        for n in range(5):
            assert squeeze_element(m, n, 0.0) == (1.0 if m == n else 0.0)


def test_squeeze_element_against_exponentiated_generator():
    # the truncated-generator oracle itself needs a basis several times
    # larger than the probed block: S(2t)|2n> is centered near manifold
    # n cosh(4t), far above n for t ~ 1
    for theta in (0.2, 0.6, 1.0):
        oracle = _squeeze_oracle(theta, 600)
        beta = 1.0 / math.cosh(2 * theta)
        assert squeeze_element(0, 0, theta, +1) == pytest.approx(math.sqrt(beta), rel=1e-12)
        worst = 0.0
        for m in range(21):
            for n in range(21):
                worst = max(
                    worst, abs(squeeze_element(m, n, theta, +1) - oracle[2 * m, 2 * n])
                )
                worst = max(
                    worst, abs(squeeze_element(m, n, theta, -1) - oracle[2 * n, 2 * m])
                )
        assert worst < 1e-9


def test_squeeze_negative_theta_matches_sign_flip():
    assert squeeze_element(3, 1, -0.7, +1) == squeeze_element(3, 1, 0.7, -1)


def test_squeeze_row_orthonormality():
    # rows keep unit norm once the basis covers the m cosh(4 theta) spread
    mat = squeeze_matrix(0.4, 240).entries
    sums = (mat**2).sum(axis=1)
    assert np.abs(sums[:25] - 1.0).max() < 1e-10


def test_squeeze_matrix_transpose_identity_exact():
    plus = squeeze_matrix(1.1, 60, +1).entries
    minus = squeeze_matrix(1.1, 60, -1).entries
    assert np.array_equal(plus, minus.T)


@pytest.mark.parametrize(
    "theta,n_max,interior",
    [(0.3, 240, 30), (0.5, 480, 30), (0.8, 960, 20), (1.0, 960, 10)],
)
def test_squeeze_matrix_orthogonality(theta, n_max, interior):
    # S(2t) S(-2t) = 1 on interior blocks whose squeezed images fit the basis;
    # the interior cannot scale with n_max because the image of row m is
    # centered near m cosh(4t), which outruns any fixed fraction of n_max
    plus = squeeze_matrix(theta, n_max, +1).entries
    minus = squeeze_matrix(theta, n_max, -1).entries
    prod = plus @ minus
    err = np.abs(prod[:interior, :interior] - np.eye(interior)).max()
    assert err < 1e-8
