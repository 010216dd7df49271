import numpy as np
import pytest

from esnkit import Activation, Readout, ReservoirParams


def make_reservoir(n=4, m=2, seed=0, leak=0.7, w_scale=0.8,
                   activation=None, bias_scale=0.0):
    """Seeded reservoir with ||W|| = w_scale (so the Lipschitz certificate is
    exactly (1 - leak) + leak * w_scale for unit-slope activations)."""
    rng = np.random.default_rng(seed)
    w = rng.standard_normal((n, n))
    w *= w_scale / np.linalg.norm(w, 2)
    u = rng.standard_normal((n, m)) / np.sqrt(m)
    b = bias_scale * rng.standard_normal(n)
    return ReservoirParams(W=w, U=u, b=b, leak=leak,
                           activation=activation or Activation.tanh())


def make_readout(n=4, p=2, seed=1):
    rng = np.random.default_rng(seed)
    return Readout(C=rng.standard_normal((p, n)), d=rng.standard_normal(p))


@pytest.fixture
def small_reservoir():
    return make_reservoir()
