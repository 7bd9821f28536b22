import numpy as np
import pytest
from hypothesis import settings

from nogo_lab.opcore import dag, random_projector_matrix, random_unitary
from nogo_lab.quantum import Projector
from nogo_lab.rng import make_generator

settings.register_profile("lab", deadline=None, max_examples=30)
settings.load_profile("lab")


@pytest.fixture
def gen():
    return make_generator(0xFEED)


def basis_projector(dim: int, index: int) -> Projector:
    v = np.zeros(dim)
    v[index] = 1.0
    return Projector.from_ray(v)


def plus_projector(dim: int, i: int, j: int) -> Projector:
    """Projector onto (e_i + e_j)/sqrt(2)."""
    v = np.zeros(dim)
    v[i] = v[j] = 1.0
    return Projector.from_ray(v)


def commuting_projector_pair(gen, dim):
    """Random pair sharing an eigenbasis (hence commuting)."""
    u = random_unitary(gen, dim)
    pa = np.diag(gen.integers(0, 2, size=dim).astype(np.complex128))
    pb = np.diag(gen.integers(0, 2, size=dim).astype(np.complex128))
    return (
        Projector.from_matrix(u @ pa @ dag(u), tol=1e-8),
        Projector.from_matrix(u @ pb @ dag(u), tol=1e-8),
    )


def noncommuting_projector_pair(gen, dim, min_comm=0.05):
    from nogo_lab.opcore import commutator_norm

    for _ in range(1000):
        a = random_projector_matrix(gen, dim, int(gen.integers(1, dim)))
        b = random_projector_matrix(gen, dim, int(gen.integers(1, dim)))
        if commutator_norm(a, b) > min_comm:
            return Projector.from_matrix(a, tol=1e-8), Projector.from_matrix(b, tol=1e-8)
    raise AssertionError("could not sample a noncommuting pair")
