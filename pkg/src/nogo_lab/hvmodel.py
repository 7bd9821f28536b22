"""Finite classical phase spaces with deterministic value assignments.

A model is a finite probability space (points, weights), a value map giving
each registered observable a definite value at each point, and a quantum
state to compare against.  The checkers verify, rule by rule, whether the
model reproduces quantum statistics:

* spectrum rule    - every assigned value is an eigenvalue of its observable
* sum rule         - values of a registered sum A+B add pointwise (commuting A, B)
* product rule     - values of a registered product AB multiply pointwise
* marginal rule    - mu{f(.,A) in S} matches tr[D P_A(S)]
* joint rule       - mu of intersections matches tr[D P_A(S) P_B(T)]
* order rule       - for projectors A <= B the events satisfy a AND b = a
* conditional rule - mu(a AND b)/mu(b) matches tr[DBAB]/tr[DB]

``build_commuting_model`` constructs the joint-eigenbasis model that any
pairwise-commuting family admits; it passes every checker by construction
and is the positive complement to the no-go checks in :mod:`nogo_lab.nogo`.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import rng as rng_mod
from .errors import (
    ConditioningOnNull,
    NotCommuting,
    NotCommutingFamily,
    OrderViolation,
    UnregisteredObservable,
)
from .opcore import CLUSTER_GAP, TOL, commutator_norm, dag, opnorm, trace_inner
from .quantum import Density, Observable, Projector, leq, spectral_projector

__all__ = [
    "PhaseSpace",
    "HVModel",
    "RuleReport",
    "Violation",
    "preimage",
    "event_weight",
    "check_spectrum_rule",
    "check_sum_rule",
    "check_product_rule",
    "check_marginal_rule",
    "check_joint_rule",
    "check_order_rule",
    "check_conditional_rule",
    "build_commuting_model",
]


@dataclass(frozen=True)
class PhaseSpace:
    """Finite sample space: ordered point labels with probability weights."""

    points: tuple[str, ...]
    weights: np.ndarray

    def validate(self, tol: float = TOL) -> None:
        if len(self.points) != len(self.weights):
            raise ValueError("points and weights must have equal length")
        if len(set(self.points)) != len(self.points):
            raise ValueError("point labels must be unique")
        if self.weights.min(initial=0.0) < -tol:
            raise ValueError(f"negative weight {self.weights.min():.3e}")
        total = float(self.weights.sum())
        if abs(total - 1.0) > max(tol, tol * len(self.weights)):
            raise ValueError(f"weights sum to {total}, not 1")


@dataclass(frozen=True)
class HVModel:
    """Phase space + per-point observable values + the quantum state.

    ``values[label]`` is an array of f(point, observable) aligned with
    ``space.points``.  Treated as immutable after construction.
    """

    space: PhaseSpace
    registered: Mapping[str, Observable]
    values: Mapping[str, np.ndarray]
    state: Density

    def validate(self, tol: float = TOL) -> None:
        self.space.validate(tol)
        n = len(self.space.points)
        for label, obs in self.registered.items():
            if obs.dim != self.state.dim:
                raise ValueError(f"observable {label!r} dimension != state dimension")
            if label not in self.values or len(self.values[label]) != n:
                raise ValueError(f"value table missing or ragged for {label!r}")

    def observable(self, label: str) -> Observable:
        try:
            return self.registered[label]
        except KeyError:
            raise UnregisteredObservable(f"no observable registered as {label!r}") from None

    def value_row(self, label: str) -> np.ndarray:
        self.observable(label)
        return np.asarray(self.values[label], dtype=float)


@dataclass(frozen=True)
class Violation:
    where: str
    detail: str
    residual: float


@dataclass(frozen=True)
class RuleReport:
    """Outcome of one rule check: worst residual plus flagged sites."""

    rule: str
    residual: float
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations


def _event_indices(m: HVModel, label: str, value: float, gap: float) -> np.ndarray:
    row = m.value_row(label)
    return np.flatnonzero(np.abs(row - value) <= gap)


def preimage(
    m: HVModel, label: str, value: float, cluster_gap: float = CLUSTER_GAP
) -> frozenset[str]:
    """Event {point : f(point, label) = value within cluster_gap}."""
    idx = _event_indices(m, label, value, cluster_gap)
    return frozenset(m.space.points[i] for i in idx)


def event_weight(m: HVModel, event: frozenset[str]) -> float:
    index = {p: i for i, p in enumerate(m.space.points)}
    return float(sum(m.space.weights[index[p]] for p in event))


def check_spectrum_rule(m: HVModel, cluster_gap: float = CLUSTER_GAP) -> RuleReport:
    """Every table value must be an eigenvalue of its observable."""
    violations = []
    worst = 0.0
    for label in m.registered:
        eigs = np.array(m.observable(label).eigenvalues())
        row = m.value_row(label)
        for i, v in enumerate(row):
            dist = float(np.abs(eigs - v).min())
            worst = max(worst, dist)
            if dist > cluster_gap:
                violations.append(
                    Violation(
                        where=f"({m.space.points[i]}, {label})",
                        detail=f"value {v} is {dist:.3e} from the nearest eigenvalue",
                        residual=dist,
                    )
                )
    return RuleReport(rule="spectrum-rule", residual=worst, violations=tuple(violations))


def _require_commuting(m: HVModel, a: str, b: str, tol: float) -> None:
    c = commutator_norm(m.observable(a).mat, m.observable(b).mat)
    if c > tol:
        raise NotCommuting(f"{a!r} and {b!r} do not commute (norm {c:.3e})")


def _find_registered(m: HVModel, target: np.ndarray, tol: float, what: str) -> list[str]:
    """All labels whose registered matrix equals ``target``."""
    found = [
        label
        for label, obs in m.registered.items()
        if obs.dim == target.shape[0] and opnorm(obs.mat - target) <= tol
    ]
    if not found:
        raise UnregisteredObservable(f"{what} is not registered in the model")
    return found


def _pointwise_rule(
    m: HVModel, a: str, b: str, compounds: list[str], combine, rule: str, tol: float
) -> RuleReport:
    va, vb = m.value_row(a), m.value_row(b)
    worst = 0.0
    violations = []
    for compound in compounds:
        vc = m.value_row(compound)
        gaps = np.abs(vc - combine(va, vb))
        worst = max(worst, float(gaps.max(initial=0.0)))
        violations.extend(
            Violation(
                where=m.space.points[i],
                detail=f"f({a})={va[i]}, f({b})={vb[i]}, f({compound})={vc[i]}",
                residual=float(gaps[i]),
            )
            for i in np.flatnonzero(gaps > tol)
        )
    return RuleReport(rule=rule, residual=worst, violations=tuple(violations))


def check_sum_rule(m: HVModel, a: str, b: str, tol: float = TOL) -> RuleReport:
    """f(., A+B) = f(., A) + f(., B) for commuting registered A, B.

    The sum observable must itself be registered; every registered copy is
    located by matrix equality and checked, so the value table stays the
    single source of truth.
    """
    _require_commuting(m, a, b, tol)
    target = m.observable(a).mat + m.observable(b).mat
    compounds = _find_registered(m, target, tol, f"sum {a}+{b}")
    return _pointwise_rule(m, a, b, compounds, np.add, "sum-rule", tol)


def check_product_rule(m: HVModel, a: str, b: str, tol: float = TOL) -> RuleReport:
    """f(., AB) = f(., A) * f(., B) for commuting registered A, B."""
    _require_commuting(m, a, b, tol)
    target = m.observable(a).mat @ m.observable(b).mat
    compounds = _find_registered(m, target, tol, f"product {a}*{b}")
    return _pointwise_rule(m, a, b, compounds, np.multiply, "product-rule", tol)


def check_marginal_rule(
    m: HVModel,
    label: str,
    values,
    tol: float = TOL,
    cluster_gap: float = CLUSTER_GAP,
) -> RuleReport:
    """mu{f(., A) in S} must equal tr[D P_A(S)]."""
    obs = m.observable(label)
    proj = spectral_projector(obs, values, cluster_gap)
    quantum_side = trace_inner(m.state.mat, proj.mat).real
    idx = set()
    for v in values:
        idx.update(_event_indices(m, label, v, cluster_gap).tolist())
    classical_side = float(sum(m.space.weights[i] for i in idx))
    gap = abs(classical_side - quantum_side)
    violations = ()
    if gap > tol:
        violations = (
            Violation(
                where=f"{label}, S={sorted(values)}",
                detail=f"phase-space mass {classical_side} vs trace {quantum_side}",
                residual=gap,
            ),
        )
    return RuleReport(rule="marginal-rule", residual=gap, violations=violations)


def check_joint_rule(
    m: HVModel,
    a: str,
    s_values,
    b: str,
    t_values,
    tol: float = TOL,
    cluster_gap: float = CLUSTER_GAP,
) -> RuleReport:
    """mu{A in S and B in T} must equal tr[D P_A(S) P_B(T)] (commuting A, B)."""
    _require_commuting(m, a, b, tol)
    pa = spectral_projector(m.observable(a), s_values, cluster_gap)
    pb = spectral_projector(m.observable(b), t_values, cluster_gap)
    quantum_side = np.trace(m.state.mat @ pa.mat @ pb.mat).real
    idx_a, idx_b = set(), set()
    for v in s_values:
        idx_a.update(_event_indices(m, a, v, cluster_gap).tolist())
    for v in t_values:
        idx_b.update(_event_indices(m, b, v, cluster_gap).tolist())
    classical_side = float(sum(m.space.weights[i] for i in idx_a & idx_b))
    gap = abs(classical_side - quantum_side)
    violations = ()
    if gap > tol:
        violations = (
            Violation(
                where=f"({a} in {sorted(s_values)}) & ({b} in {sorted(t_values)})",
                detail=f"phase-space mass {classical_side} vs trace {quantum_side}",
                residual=gap,
            ),
        )
    return RuleReport(rule="joint-rule", residual=gap, violations=violations)


def _as_projector(m: HVModel, label: str, tol: float) -> Projector:
    return Projector.from_matrix(m.observable(label).mat, tol=max(tol, 1e-7))


def check_order_rule(
    m: HVModel, a: str, b: str, tol: float = TOL, cluster_gap: float = CLUSTER_GAP
) -> RuleReport:
    """For projectors with A <= B, the value-1 events must nest: a AND b = a.

    Relies on the product rule holding for the pair, which is why the
    product observable is required to be registered.
    """
    pa, pb = _as_projector(m, a, tol), _as_projector(m, b, tol)
    if not leq(pa, pb, tol):
        raise OrderViolation(f"{a!r} <= {b!r} does not hold as projectors")
    # a <= b means ab = a; the registered product pins down f(., AB).
    _find_registered(m, pa.mat @ pb.mat, tol, f"product {a}*{b}")
    ev_a = preimage(m, a, 1.0, cluster_gap)
    ev_b = preimage(m, b, 1.0, cluster_gap)
    extra = ev_a - ev_b
    violations = tuple(
        Violation(
            where=p,
            detail=f"f({a})=1 but f({b})!=1",
            residual=1.0,
        )
        for p in sorted(extra)
    )
    return RuleReport(
        rule="order-events-rule",
        residual=1.0 if violations else 0.0,
        violations=violations,
    )


def check_conditional_rule(
    m: HVModel, a: str, b: str, tol: float = TOL, cluster_gap: float = CLUSTER_GAP
) -> RuleReport:
    """mu(a AND b)/mu(b) must equal tr[DBAB]/tr[DB] for projector labels."""
    pa, pb = _as_projector(m, a, tol), _as_projector(m, b, tol)
    ev_a = preimage(m, a, 1.0, cluster_gap)
    ev_b = preimage(m, b, 1.0, cluster_gap)
    mu_b = event_weight(m, ev_b)
    if mu_b <= tol:
        raise ConditioningOnNull(f"mu(b) = {mu_b:.3e} <= tol for {b!r}")
    classical = event_weight(m, ev_a & ev_b) / mu_b
    d = m.state.mat
    quantum = np.trace(d @ pb.mat @ pa.mat @ pb.mat).real / trace_inner(d, pb.mat).real
    gap = abs(classical - quantum)
    violations = ()
    if gap > tol:
        violations = (
            Violation(
                where=f"Pr[{a}|{b}]",
                detail=f"phase-space {classical} vs conditioned trace {quantum}",
                residual=gap,
            ),
        )
    return RuleReport(rule="conditional-rule", residual=gap, violations=violations)


def build_commuting_model(
    observables: Mapping[str, Observable],
    state: Density,
    tol: float = TOL,
    basis_seed: int = 0x6A0E,
) -> HVModel:
    """Joint-eigenbasis model for a pairwise-commuting family.

    Diagonalizes a random real combination of the family to obtain a shared
    eigenbasis (re-verifying that every member is diagonal in it), then sets
    mu(point) = <point|D|point> and f(point, A) = <point|A|point>.  The
    construction is deterministic: combination coefficients come from a
    fixed-key Philox stream, with a few retries in case a draw fails to
    split a degeneracy.
    """
    labels = list(observables)
    mats = [observables[k].mat for k in labels]
    dim = state.dim
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            c = commutator_norm(mats[i], mats[j])
            if c > tol:
                raise NotCommutingFamily(
                    f"{labels[i]!r} and {labels[j]!r} do not commute (norm {c:.3e})"
                )

    basis = None
    if not mats:
        basis = np.eye(dim, dtype=np.complex128)
    for attempt in range(8):
        if basis is not None:
            break
        gen = rng_mod.make_generator(basis_seed, attempt)
        coeffs = gen.standard_normal(len(mats))
        combo = np.sum([c * m for c, m in zip(coeffs, mats)], axis=0)
        _, vecs = np.linalg.eigh((combo + dag(combo)) / 2)
        if all(
            opnorm(np.triu(dag(vecs) @ m @ vecs, 1)) <= max(tol, 1e-10) * max(1.0, opnorm(m))
            for m in mats
        ):
            basis = vecs
    if basis is None:
        raise NotCommutingFamily(
            "no shared eigenbasis found; family is not simultaneously diagonalizable"
        )

    points = tuple(f"w{i}" for i in range(dim))
    weights = np.real(np.einsum("ij,jk,ki->i", dag(basis), state.mat, basis))
    weights = np.clip(weights, 0.0, None)
    values = {
        k: np.real(np.einsum("ij,jk,ki->i", dag(basis), observables[k].mat, basis))
        for k in labels
    }
    model = HVModel(
        space=PhaseSpace(points=points, weights=weights),
        registered=dict(observables),
        values=values,
        state=state,
    )
    model.validate(max(tol, 1e-7))
    return model
