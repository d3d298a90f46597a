import itertools

import pytest

from deadline_offload.model import ModelParams


def states_up_to(n, max_sum):
    """All n-component count vectors with total at most max_sum."""
    out = []
    for s in itertools.product(range(max_sum + 1), repeat=n):
        if sum(s) <= max_sum:
            out.append(s)
    return out


@pytest.fixture(scope="session")
def params_n2():
    # the hand-anchor setup: two deadlines, symmetric agent/processor
    return ModelParams(N=2, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, arrival=(0.5, 0.25, 0.25))


@pytest.fixture(scope="session")
def params_n3():
    return ModelParams.uniform_arrivals(N=3, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, p0=0.25)


@pytest.fixture(scope="session")
def params_table1():
    return ModelParams(N=3, p_u=0.7, mu=0.7, C_o=1.0, C_p=3.0,
                       arrival=(0.5, 1 / 6, 1 / 6, 1 / 6))


@pytest.fixture(scope="session")
def params_table2():
    return ModelParams.uniform_arrivals(N=5, p_u=0.5, mu=0.5, C_o=1.0, C_p=3.0, p0=0.5)
