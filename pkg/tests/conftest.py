import numpy as np
import pytest

from tailgauge.models import Affine, TailIndexDGP, UniformLaw, sample_tail_index


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture(scope="session")
def uniform_z_sample():
    """One shared draw from the uniform-exponent DGP on [1, 2]."""
    dgp = TailIndexDGP("uniform-z", Affine(0.0, 1.0), UniformLaw(1.0, 2.0))
    return sample_tail_index(dgp, 1_000_000, seed=424242)


def variance_standard_error(values: np.ndarray) -> float:
    """Large-sample standard error of the sample variance."""
    values = np.asarray(values, dtype=float)
    n = values.size
    centered = values - values.mean()
    m2 = np.mean(centered**2)
    m4 = np.mean(centered**4)
    return float(np.sqrt(max(m4 - m2**2, 0.0) / n))
