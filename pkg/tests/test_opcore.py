import numpy as np
import pytest
from hypothesis import given, strategies as st

from nogo_lab import opcore
from nogo_lab.errors import (
    DimensionMismatch,
    NotHermitian,
    NotNormal,
    ZeroOperator,
)
from nogo_lab.opcore import (
    annihilation_witness,
    as_operator,
    commutator_norm,
    dag,
    is_positive,
    opnorm,
    random_hermitian,
    spectral_decompose,
    trace_inner,
)
from nogo_lab.rng import make_generator

from conftest import basis_projector, plus_projector


class TestAsOperator:
    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionMismatch):
            as_operator(np.zeros((2, 3)))

    def test_rejects_nan(self):
        m = np.eye(2, dtype=complex)
        m[0, 0] = np.nan
        with pytest.raises(ValueError):
            as_operator(m)

    def test_accepts_real_input(self):
        m = as_operator([[1, 0], [0, 1]])
        assert m.dtype == np.complex128


class TestSpectralDecompose:
    def test_identity(self):
        res = spectral_decompose(np.eye(3))
        assert len(res.terms) == 1
        lam, p = res.terms[0]
        assert lam == pytest.approx(1.0)
        assert opnorm(p - np.eye(3)) < 1e-12

    def test_diagonal_with_degeneracy(self):
        res = spectral_decompose(np.diag([1.0, 0.0, 0.0]))
        assert [round(l.real) for l, _ in res.terms] == [1, 0]
        assert opnorm(res.terms[0][1] - np.diag([1.0, 0, 0])) < 1e-12
        assert opnorm(res.terms[1][1] - np.diag([0.0, 1, 1])) < 1e-12

    def test_clustering_merges_near_degenerate(self):
        res = spectral_decompose(np.diag([2.0, 2.0, 5.0]))
        assert len(res.terms) == 2
        by_value = {round(l.real): p for l, p in res.terms}
        assert round(np.trace(by_value[2]).real) == 2

    def test_random_hermitian_reconstruction(self):
        # 1000 matrices across dims 2-8
        gen = make_generator(11)
        for dim in range(2, 9):
            for _ in range(143):
                h = random_hermitian(gen, dim)
                res = spectral_decompose(h)
                assert opnorm(res.reconstruct() - h) <= 1e-10

    def test_skew_hermitian_is_normal(self):
        c = np.array([[0, 0.5, 0], [-0.5, 0, 0], [0, 0, 0]], dtype=complex)
        res = spectral_decompose(c)
        eigs = sorted(l.imag for l in res.eigenvalues())
        assert eigs == pytest.approx([-0.5, 0.0, 0.5])

    def test_rejects_non_normal(self):
        m = np.array([[0, 1], [0, 0]], dtype=complex)
        with pytest.raises(NotNormal):
            spectral_decompose(m)

    @given(st.integers(2, 8), st.integers(0, 10_000))
    def test_round_trip_property(self, dim, seed):
        h = random_hermitian(make_generator(seed), dim)
        res = spectral_decompose(h)
        res.validate(1e-9)
        assert opnorm(res.reconstruct() - h) <= 1e-10


class TestIsPositive:
    def test_identity(self):
        assert is_positive(np.eye(4))

    def test_indefinite(self):
        assert not is_positive(np.diag([1.0, -1.0]))

    def test_gram_matrices_are_positive(self):
        gen = make_generator(3)
        for _ in range(25):
            g = opcore.complex_gaussian(gen, 4, 4)
            gram = g @ dag(g)
            assert is_positive(gram)
            # cross-check through the decomposition oracle
            eigs = [l.real for l in spectral_decompose(gram).eigenvalues()]
            assert min(eigs) >= -1e-9

    def test_rejects_non_hermitian(self):
        with pytest.raises(NotHermitian):
            is_positive(np.array([[0, 1], [0, 0]], dtype=complex))


class TestTraceInner:
    def test_normalized_identity(self):
        assert trace_inner(np.eye(3) / 3, np.eye(3)) == pytest.approx(1.0)

    def test_orthogonal_projectors(self):
        p1 = basis_projector(3, 0).mat
        p2 = basis_projector(3, 1).mat
        assert abs(trace_inner(p1, p2)) < 1e-15

    def test_diagonal_case(self):
        # sum of diagonal products: 1/2 + 1/3 + 0
        d = np.diag([1 / 2, 1 / 3, 1 / 6])
        b = np.diag([1.0, 1.0, 0.0])
        assert trace_inner(d, b).real == pytest.approx(5 / 6, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            trace_inner(np.eye(2), np.eye(3))

    @given(st.integers(0, 5000))
    def test_density_projector_pairing_is_a_probability(self, seed):
        gen = make_generator(seed)
        dim = int(gen.integers(2, 7))
        d = opcore.random_density_matrix(gen, dim)
        p = opcore.random_projector_matrix(gen, dim, int(gen.integers(0, dim + 1)))
        val = trace_inner(d, p)
        assert abs(val.imag) <= 1e-9
        assert -1e-9 <= val.real <= 1 + 1e-9


class TestAnnihilationWitness:
    def test_diagonal_maximum(self):
        b = np.diag([1.0, -1.0, 0.0])
        d = annihilation_witness(b)
        assert abs(trace_inner(d, b)) == pytest.approx(1.0, abs=1e-10)

    def test_zero_operator_rejected(self):
        with pytest.raises(ZeroOperator):
            annihilation_witness(np.zeros((3, 3)))

    def test_skew_hermitian_witness(self):
        b = np.zeros((3, 3), dtype=complex)
        b[0, 1], b[1, 0] = 0.5, -0.5
        # oracle: eigenvalues of this block are +-i/2
        eigs = np.linalg.eigvals(b)
        assert max(abs(eigs)) == pytest.approx(0.5, abs=1e-12)
        d = annihilation_witness(b)
        assert abs(trace_inner(d, b)) == pytest.approx(0.5, abs=1e-10)

    def test_witness_is_rank_one_density(self):
        gen = make_generator(17)
        h = random_hermitian(gen, 5)
        d = annihilation_witness(h)
        assert np.trace(d).real == pytest.approx(1.0, abs=1e-10)
        assert opnorm(d @ d - d) < 1e-10

    @given(st.integers(2, 6), st.integers(0, 10_000))
    def test_nonzero_trace_for_every_normal_nonzero(self, dim, seed):
        h = random_hermitian(make_generator(seed), dim)
        if opnorm(h) <= 1e-9:
            return
        d = annihilation_witness(h)
        assert abs(trace_inner(d, h)) >= opnorm(h) * (1 - 1e-9)


class TestCommutatorNorm:
    def test_self_commutes(self):
        h = random_hermitian(make_generator(1), 4)
        assert commutator_norm(h, h) < 1e-12

    def test_diagonals_commute(self):
        assert commutator_norm(np.diag([1.0, 2, 3]), np.diag([4.0, 5, 6])) < 1e-15

    def test_overlapping_rays(self):
        a = basis_projector(3, 0).mat
        b = plus_projector(3, 0, 1).mat
        c = a @ b - b @ a
        # oracle: eigenvalues of the commutator are +-i/2
        assert max(abs(np.linalg.eigvals(c))) == pytest.approx(0.5, abs=1e-12)
        assert commutator_norm(a, b) == pytest.approx(0.5, abs=1e-12)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatch):
            commutator_norm(np.eye(2), np.eye(3))


def test_skew_hermitian_norm_square_identity():
    # normality gives opnorm(C)^2 = opnorm(C^2); scaling toward zero keeps it
    gen = make_generator(23)
    g = opcore.complex_gaussian(gen, 5, 5)
    c0 = g - dag(g)
    for scale in (1.0, 1e-3, 1e-6, 1e-9):
        c = c0 * (scale / opnorm(c0))
        assert opnorm(c @ c) == pytest.approx(opnorm(c) ** 2, rel=1e-9)
