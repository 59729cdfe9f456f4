import numpy as np
import pytest

from srsearch import StftParams, SyntheticGenParams, make_test_corpus

CORPUS_SEED = 7
CORPUS_RATE = 24000
CORPUS_CUTOFF = 4000.0


@pytest.fixture(scope="session")
def corpus():
    """The seeded 8-item desk-scale corpus shared across test modules."""
    return make_test_corpus(
        8, seed=CORPUS_SEED, sample_rate_hz=CORPUS_RATE, duration_s=1.0, cutoff_hz=CORPUS_CUTOFF
    )


@pytest.fixture(scope="session")
def stft_params():
    return StftParams()


@pytest.fixture(scope="session")
def gen_params():
    return SyntheticGenParams(cutoff_hz=CORPUS_CUTOFF)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=20240901))
