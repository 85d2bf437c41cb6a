import math

import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, settings, strategies as st

from nodal_atlas.bessel import jn, jn_prime, jn_prime_zeros, jn_zeros

# frozen reference values (standard tables)
JP_FIRST = {0: 3.8317059702075, 1: 1.8411837813407, 2: 3.0542369282271, 3: 4.2011889412106,
            4: 5.3175531260839, 5: 6.4156163757002}


@pytest.mark.parametrize("n,root", sorted(JP_FIRST.items()))
def test_first_derivative_zero_matches_table(n, root):
    assert jn_prime_zeros(n, 1)[0] == pytest.approx(root, abs=1e-10)


@pytest.mark.parametrize("n", range(6))
def test_zero_sequences_match_scipy(n):
    assert np.allclose(jn_prime_zeros(n, 4), sp.jnp_zeros(n, 4), atol=1e-10)
    assert np.allclose(jn_zeros(n, 4), sp.jn_zeros(n, 4), atol=1e-10)


@settings(max_examples=50, deadline=None)
@given(n=st.integers(0, 6), x=st.floats(0.0, 30.0))
def test_values_and_derivatives_match_scipy(n, x):
    assert jn(n, x) == pytest.approx(sp.jv(n, x), abs=1e-11)
    assert jn_prime(n, x) == pytest.approx(sp.jvp(n, x), abs=1e-11)


def test_bessel_equation_residual():
    x = np.linspace(0.5, 20, 40)
    for n in range(4):
        from nodal_atlas.bessel import jn_second
        r = [x0 ** 2 * jn_second(n, x0) + x0 * jn_prime(n, x0) + (x0 ** 2 - n ** 2) * jn(n, x0) for x0 in x]
        assert max(abs(v) for v in r) < 1e-9
    assert math.isfinite(jn(0, 0.0))
