import numpy as np
import pytest

import retinacode as rc

# Small-retina setups keep the unit suite fast; the acceptance module runs
# the desk-scale network.

SMALL_W = 16
SMALL_GLYPH = 10
SMALL_WIDTHS = (256, 64, 32, 64, 256)
TINY_WIDTHS = (64, 32, 64)


@pytest.fixture(scope="session")
def small_corpus():
    return rc.synthetic_digit_corpus(60, seed=7, glyph_size=SMALL_GLYPH)


@pytest.fixture(scope="session")
def glyph_corpus():
    return rc.synthetic_digit_corpus(40, seed=11)


@pytest.fixture(scope="session")
def small_spec():
    return rc.LayerSpec(widths=SMALL_WIDTHS)


@pytest.fixture(scope="session")
def tiny_spec():
    return rc.LayerSpec(widths=TINY_WIDTHS)


@pytest.fixture(scope="session")
def small_params(small_spec):
    return rc.init_params(small_spec, seed=3)


@pytest.fixture(scope="session")
def small_pool(small_corpus):
    """Ten fixed rendered stimuli as a (10, 256) matrix."""
    stimuli = rc.render_centered(small_corpus, range(10), retina_width=SMALL_W)
    return rc.stimuli_to_matrix(stimuli)


@pytest.fixture(scope="session")
def trained_small(small_spec, small_pool):
    """A small model trained 5000 steps over the fixed 10-image pool."""
    params = rc.init_params(small_spec, seed=3)
    config = rc.TrainConfig(total_steps=5000, batch_size=8,
                            learning_rate=3e-3, seed=5)
    sampler = rc.fixed_pool_sampler(small_pool)
    final, log = rc.train(params, config, sampler)
    return final, log


def zero_params(spec):
    widths = spec.widths
    return rc.NetworkParams(
        spec=spec,
        weights=[np.zeros((widths[l], widths[l + 1])) for l in range(len(widths) - 1)],
        biases=[np.zeros(widths[l + 1]) for l in range(len(widths) - 1)])
