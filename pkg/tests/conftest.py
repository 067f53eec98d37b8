import pytest

from nmago import (PowerSingular, Power, ProblemSpec, build_profile,
                   find_k_bounds)


@pytest.fixture(scope="session")
def singular_spec():
    """N=3, f(u)=u, K(r)=(1-r)^-3: the certified-bounds demonstration case."""
    return ProblemSpec(3, Power(1.0), PowerSingular(3.0, 1.0, 1.0))


@pytest.fixture(scope="session")
def singular_bounds(singular_spec):
    return find_k_bounds(singular_spec, PowerSingular(3.0))


@pytest.fixture(scope="session")
def profile_const_n2():
    from nmago import Constant
    return build_profile(Constant(1.0), 2, 1.0)
