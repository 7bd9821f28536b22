"""Dense complex operator algebra.

The carrier for every operator in the lab is a square ``complex128`` numpy
array, validated by :func:`as_operator`.  On top of that this module provides
the spectral decomposition of normal matrices (with eigenvalue clustering for
degenerate spectra), positivity tests, trace utilities, commutator norms, a
constructive annihilation witness, and the random-operator samplers that the
property suites and batch commands share.

Norms are operator 2-norms (largest singular value; max |eigenvalue| for
normal matrices), written ``opnorm`` throughout.  The default validation
tolerance is ``TOL = 1e-9``; eigenvalues closer than ``CLUSTER_GAP = 1e-8``
are treated as one degenerate level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatch,
    NotHermitian,
    NotNormal,
    ZeroOperator,
)

TOL = 1e-9
CLUSTER_GAP = 1e-8

__all__ = [
    "TOL",
    "CLUSTER_GAP",
    "as_operator",
    "dag",
    "opnorm",
    "identity",
    "zero",
    "hermitian_defect",
    "normal_defect",
    "require_same_dim",
    "SpectralResolution",
    "spectral_decompose",
    "is_positive",
    "trace_inner",
    "annihilation_witness",
    "commutator_norm",
    "complex_gaussian",
    "random_hermitian",
    "random_density_matrix",
    "random_projector_matrix",
    "random_unitary",
]


def as_operator(m) -> np.ndarray:
    """Validate and return ``m`` as a square, finite complex128 array."""
    a = np.asarray(m, dtype=np.complex128)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"operator must be square, got shape {a.shape}")
    if a.shape[0] < 1:
        raise DimensionMismatch("operator must have dimension >= 1")
    if not np.all(np.isfinite(a.real)) or not np.all(np.isfinite(a.imag)):
        raise ValueError("operator entries must be finite")
    return a


def dag(m: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return m.conj().T


def opnorm(m: np.ndarray) -> float:
    """Operator 2-norm (largest singular value)."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def identity(dim: int) -> np.ndarray:
    return np.eye(dim, dtype=np.complex128)


def zero(dim: int) -> np.ndarray:
    return np.zeros((dim, dim), dtype=np.complex128)


def hermitian_defect(m: np.ndarray) -> float:
    return opnorm(m - dag(m))


def normal_defect(m: np.ndarray) -> float:
    return opnorm(m @ dag(m) - dag(m) @ m)


def require_same_dim(*mats: np.ndarray) -> int:
    dims = {m.shape[0] for m in mats}
    if len(dims) != 1:
        raise DimensionMismatch(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def _cluster_indices(values: np.ndarray, gap: float) -> list[list[int]]:
    """Group indices whose values are transitively closer than ``gap``.

    Plain union-find; input sizes here are the matrix dimension (<= 32).
    """
    n = len(values)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) < gap:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[rj] = ri
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


@dataclass(frozen=True)
class SpectralResolution:
    """Eigenvalue / eigenprojector terms of a normal matrix.

    ``terms`` is ordered by decreasing (real, imag) of the eigenvalue, one
    term per clustered (possibly degenerate) level.  The projectors are
    pairwise orthogonal and sum to the identity; ``sum(lam * P)`` rebuilds
    the source matrix.
    """

    terms: tuple[tuple[complex, np.ndarray], ...]
    source_dim: int

    def eigenvalues(self) -> tuple[complex, ...]:
        return tuple(lam for lam, _ in self.terms)

    def reconstruct(self) -> np.ndarray:
        out = zero(self.source_dim)
        for lam, p in self.terms:
            out += lam * p
        return out

    def projector_for(self, values, gap: float = CLUSTER_GAP) -> np.ndarray:
        """Sum of eigenprojectors for the levels matching ``values``.

        Raises :class:`UnknownEigenvalue` if a requested value is farther
        than ``gap`` from every level.
        """
        from .errors import UnknownEigenvalue

        out = zero(self.source_dim)
        for v in values:
            dists = [abs(complex(v) - lam) for lam, _ in self.terms]
            k = int(np.argmin(dists))
            if dists[k] > gap:
                raise UnknownEigenvalue(
                    f"value {v!r} is not an eigenvalue (closest level "
                    f"{self.terms[k][0]!r}, distance {dists[k]:.3e})"
                )
            out += self.terms[k][1]
        return out

    def validate(self, tol: float = TOL) -> None:
        """Assert pairwise orthogonality and completeness of the projectors."""
        ps = [p for _, p in self.terms]
        for i in range(len(ps)):
            for j in range(i + 1, len(ps)):
                r = opnorm(ps[i] @ ps[j])
                if r > tol:
                    raise NotNormal(
                        f"eigenprojectors {i},{j} not orthogonal (residual {r:.3e})"
                    )
        r = opnorm(sum(ps) - identity(self.source_dim))
        if r > tol:
            raise NotNormal(f"eigenprojectors do not resolve identity (residual {r:.3e})")


def spectral_decompose(
    m, cluster_gap: float = CLUSTER_GAP, tol: float = TOL
) -> SpectralResolution:
    """Spectral resolution of a normal matrix.

    Eigenvalues whose mutual distance is below ``cluster_gap`` are merged
    into a single level whose projector is the sum of the member
    eigenprojectors (its eigenvalue is the member mean).

    Raises :class:`NotNormal` when ``m`` fails the normality test at ``tol``.
    """
    m = as_operator(m)
    defect = normal_defect(m)
    if defect > tol:
        raise NotNormal(f"matrix is not normal (defect {defect:.3e} > tol {tol:.1e})")

    # Complex Schur form of a normal matrix is diagonal, and the Schur basis
    # is orthonormal even for degenerate spectra (unlike np.linalg.eig).
    t, z = scipy.linalg.schur(m, output="complex")
    eigs = np.diag(t)

    terms = []
    spread = 0.0
    for idx in _cluster_indices(eigs, cluster_gap):
        cols = z[:, idx]
        proj = cols @ dag(cols)
        lam = complex(eigs[idx].mean())
        spread = max(spread, max(abs(eigs[i] - lam) for i in idx))
        terms.append((lam, proj))
    terms.sort(key=lambda term: (-term[0].real, -term[0].imag))

    res = SpectralResolution(terms=tuple(terms), source_dim=m.shape[0])
    res.validate(tol)
    residual = opnorm(res.reconstruct() - m)
    # Clustering may move each merged eigenvalue by up to the cluster spread.
    if residual > tol + spread:
        raise NotNormal(
            f"spectral reconstruction residual {residual:.3e} exceeds {tol + spread:.3e}"
        )
    return res


def is_positive(m, tol: float = TOL) -> bool:
    """True iff the Hermitian matrix ``m`` has all eigenvalues >= -tol."""
    m = as_operator(m)
    defect = hermitian_defect(m)
    if defect > tol:
        raise NotHermitian(f"matrix is not Hermitian (defect {defect:.3e})")
    eigs = np.linalg.eigvalsh((m + dag(m)) / 2)
    return bool(eigs.min() >= -tol)


def trace_inner(d, b) -> complex:
    """tr[D B]."""
    d = as_operator(d)
    b = as_operator(b)
    require_same_dim(d, b)
    return complex(np.trace(d @ b))


def annihilation_witness(b, tol: float = TOL) -> np.ndarray:
    """Rank-one density D with |tr[D B]| = opnorm(B), for normal nonzero B.

    D is the projector onto an eigenvector of a maximal-modulus eigenvalue,
    so tr[D B] equals that eigenvalue.  This is the constructive converse of
    the fact that only the zero operator has vanishing trace against every
    positive operator.
    """
    b = as_operator(b)
    norm_b = opnorm(b)
    if norm_b <= tol:
        raise ZeroOperator(f"operator norm {norm_b:.3e} below tolerance {tol:.1e}")
    res = spectral_decompose(b, tol=tol)
    lam, proj = max(res.terms, key=lambda term: abs(term[0]))
    # Any unit vector in range(proj) will do; take the dominant column.
    col = int(np.argmax(np.abs(np.diag(proj))))
    v = proj[:, col]
    v = v / np.linalg.norm(v)
    return np.outer(v, v.conj())


def commutator_norm(a, b) -> float:
    """opnorm(AB - BA); zero (within tolerance) iff A and B commute."""
    a = as_operator(a)
    b = as_operator(b)
    require_same_dim(a, b)
    return opnorm(a @ b - b @ a)


# ---------------------------------------------------------------------------
# Random operator samplers (Ginibre-based; full support, for property tests
# and seeded batch commands).


def complex_gaussian(rng: np.random.Generator, rows: int, cols: int) -> np.ndarray:
    return rng.standard_normal((rows, cols)) + 1j * rng.standard_normal((rows, cols))


def random_hermitian(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = complex_gaussian(rng, dim, dim)
    return (g + dag(g)) / 2


def random_density_matrix(rng: np.random.Generator, dim: int) -> np.ndarray:
    """G G^dag / tr[G G^dag] with G i.i.d. complex standard Gaussian."""
    g = complex_gaussian(rng, dim, dim)
    m = g @ dag(g)
    return m / np.trace(m).real


def random_projector_matrix(rng: np.random.Generator, dim: int, rank: int) -> np.ndarray:
    """Rank-``rank`` projector from orthonormalized Gaussian columns."""
    if not 0 <= rank <= dim:
        raise ValueError(f"rank must be in [0, {dim}], got {rank}")
    if rank == 0:
        return zero(dim)
    g = complex_gaussian(rng, dim, rank)
    q, _ = np.linalg.qr(g)
    return q @ dag(q)


def random_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-distributed unitary (QR of a Ginibre matrix, phases fixed)."""
    g = complex_gaussian(rng, dim, dim)
    q, r = np.linalg.qr(g)
    phases = np.diag(r).copy()
    phases /= np.abs(phases)
    return q * phases
