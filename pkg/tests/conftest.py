import numpy as np
import pytest

from seeopt.channels import RawChannels, assemble_composite
from seeopt.driver import Instance
from seeopt.metrics import ConstraintSet, NoisePowers, PowerModel


def crandn(rng, *shape):
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)


def build_channels(rng, L=2, N=2, K=1, eve_scale=0.5, pu_scale=0.3, surface_scale=1.0):
    """Random unit-scale channels for fast solver-level tests."""
    raw = RawChannels(
        H_CI=surface_scale * crandn(rng, L, N),
        h_CS=crandn(rng, N),
        h_CP=pu_scale * crandn(rng, N),
        h_CE=tuple(eve_scale * crandn(rng, N) for _ in range(K)),
        h_IS=surface_scale * crandn(rng, L),
        h_IP=pu_scale * crandn(rng, L),
        h_IE=tuple(eve_scale * crandn(rng, L) for _ in range(K)),
    )
    return assemble_composite(raw)


def tiny_instance(seed=0, L=2, N=2, K=1, p_max=2.0, r_min=0.0, i_th=10.0,
                  eve_scale=0.5, pu_scale=0.3, statics=0.2):
    """Unit-noise instance with O(1) channel scales; fast to optimize."""
    rng = np.random.default_rng(seed)
    ch = build_channels(rng, L=L, N=N, K=K, eve_scale=eve_scale, pu_scale=pu_scale)
    return Instance(channels=ch, noise=NoisePowers(1.0, 1.0),
                    constraints=ConstraintSet(p_max=p_max, r_min=r_min, i_th=i_th),
                    power_model=PowerModel(zeta=1.0, p_cbs=statics / 2, p_irs=statics / 2),
                    seed=seed)


def random_unit_modulus(rng, n):
    q = np.exp(2j * np.pi * rng.random(n))
    q[-1] = 1.0
    return q


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
