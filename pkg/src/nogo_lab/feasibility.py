"""Existence of deterministic value assignments for measurement scenarios.

A scenario is a labeled set of projectors and/or dichotomic (+-1) observables
with declared commuting contexts, optional per-context product constraints
(product of the context's operators equals +-identity), and an optional
state.  Deciding whether a classical model reproduces the quantum statistics
then splits into two exact steps:

1. enumerate the value assignments that respect the spectrum and the
   functional rules inside every context (a coloring search);
2. decide by exact rational linear programming whether some probability
   distribution over those assignments matches every quantum marginal and
   every in-context pairwise joint.

Dichotomic observables ride the same constraint pipeline as projectors via
their +1 spectral projector (X = P+ - P-), which is what lets one solver
serve CHSH, coloring scenarios, parity squares, and state-forced parity
games alike.  The CHSH quantity and its exact classical bound live here too.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

import numpy as np

from . import simplex
from .errors import (
    CrossTalk,
    NotDichotomic,
    NumericalAmbiguity,
    ScenarioError,
    SearchSpaceTooLarge,
    WrongScenarioShape,
)
from .opcore import (
    CLUSTER_GAP,
    TOL,
    as_operator,
    commutator_norm,
    identity,
    opnorm,
    require_same_dim,
    trace_inner,
)
from .quantum import Density, Observable, Projector, spectral_projector

__all__ = [
    "ScenarioItem",
    "Context",
    "Scenario",
    "FeasibilityResult",
    "enumerate_assignments",
    "hv_feasibility",
    "chsh_value",
    "classical_chsh_bound",
    "singlet_state",
    "setting_side1",
    "setting_side2",
    "chsh_scenario",
    "DEFAULT_DENOMINATOR",
    "AMBIGUITY_MARGIN",
    "MAX_ASSIGNMENT_SPACE",
]

PROJECTOR = "projector"
DICHOTOMIC = "dichotomic"

DEFAULT_DENOMINATOR = 10**9
AMBIGUITY_MARGIN = 1e-6
MAX_ASSIGNMENT_SPACE = 2**24


@dataclass(frozen=True)
class ScenarioItem:
    """One labeled measurement: a projector or a +-1-valued observable.

    ``plus`` is the projector whose indicator an assignment value tracks:
    the projector itself, or the +1 eigenprojector of a dichotomic item.
    """

    label: str
    kind: str
    mat: np.ndarray
    plus: np.ndarray

    def values(self) -> tuple[int, int]:
        return (0, 1) if self.kind == PROJECTOR else (-1, 1)

    def indicator(self, value: int) -> int:
        return int(value == 1)


@dataclass(frozen=True)
class Context:
    """A pairwise-commuting label set, optionally product-constrained.

    ``product_sign`` of +-1 asserts that the product of the member operators
    (in listed order) is sign * identity.  ``resolves_identity`` marks
    projector contexts summing to the identity, whose classical rule is
    "exactly one member is assigned 1".
    """

    labels: tuple[str, ...]
    product_sign: Optional[int] = None
    resolves_identity: bool = False


@dataclass(frozen=True)
class Scenario:
    dim: int
    items: dict[str, ScenarioItem]
    contexts: tuple[Context, ...]
    state: Optional[Density] = None
    name: str = "scenario"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(sorted(self.items))


def make_item(
    label: str, kind: str, mat, cluster_gap: float = CLUSTER_GAP, tol: float = TOL
) -> ScenarioItem:
    """Validate one scenario operator and precompute its +1 projector."""
    mat = as_operator(mat)
    if kind == PROJECTOR:
        p = Projector.from_matrix(mat, tol=tol)
        return ScenarioItem(label=label, kind=kind, mat=p.mat, plus=p.mat)
    if kind == DICHOTOMIC:
        obs = Observable.from_matrix(mat, cluster_gap=cluster_gap, tol=tol)
        eigs = obs.eigenvalues()
        if any(min(abs(e - 1.0), abs(e + 1.0)) > cluster_gap for e in eigs):
            raise NotDichotomic(
                f"item {label!r} has eigenvalues {eigs}, expected a subset of -1, +1"
            )
        if any(abs(e - 1.0) <= cluster_gap for e in eigs):
            plus = spectral_projector(obs, [1.0], cluster_gap).mat
        else:
            plus = np.zeros_like(mat)
        return ScenarioItem(label=label, kind=kind, mat=mat, plus=plus)
    raise ScenarioError(f"unknown item kind {kind!r} for {label!r}")


def make_scenario(
    dim: int,
    items: dict[str, ScenarioItem],
    contexts: list[Context],
    state: Optional[Density] = None,
    name: str = "scenario",
    tol: float = TOL,
) -> Scenario:
    """Assemble and validate a scenario.

    Checks every context is pairwise commuting, verifies declared product
    constraints against the matrices, and tags projector contexts that
    resolve the identity.
    """
    for item in items.values():
        if item.mat.shape[0] != dim:
            raise ScenarioError(f"item {item.label!r} is not {dim}-dimensional")
    if state is not None and state.dim != dim:
        raise ScenarioError("state dimension does not match scenario")

    checked = []
    for ctx in contexts:
        missing = [l for l in ctx.labels if l not in items]
        if missing:
            raise ScenarioError(f"context references unknown labels {missing}")
        for x, y in itertools.combinations(ctx.labels, 2):
            c = commutator_norm(items[x].mat, items[y].mat)
            if c > max(tol, 1e-8):
                raise ScenarioError(
                    f"context {ctx.labels} not commuting: [{x},{y}] norm {c:.3e}"
                )
        if ctx.product_sign is not None:
            if ctx.product_sign not in (-1, 1):
                raise ScenarioError(f"product sign must be +-1, got {ctx.product_sign}")
            prod = identity(dim)
            for l in ctx.labels:
                prod = prod @ items[l].mat
            r = opnorm(prod - ctx.product_sign * identity(dim))
            if r > max(tol, 1e-8):
                raise ScenarioError(
                    f"declared product of {ctx.labels} != {ctx.product_sign:+d}I "
                    f"(residual {r:.3e})"
                )
        resolves = False
        if all(items[l].kind == PROJECTOR for l in ctx.labels) and ctx.labels:
            total = np.sum([items[l].mat for l in ctx.labels], axis=0)
            resolves = opnorm(total - identity(dim)) <= max(tol, 1e-8)
        checked.append(
            Context(
                labels=tuple(ctx.labels),
                product_sign=ctx.product_sign,
                resolves_identity=resolves,
            )
        )
    return Scenario(dim=dim, items=dict(items), contexts=tuple(checked), state=state, name=name)


# ---------------------------------------------------------------------------
# Assignment enumeration (coloring search)


def enumerate_assignments(s: Scenario) -> list[tuple[int, ...]]:
    """All value assignments satisfying the context rules, in lexicographic
    order over the sorted labels (value order: 0 before 1, -1 before +1).

    Each assignment respects the spectrum of every item by construction;
    identity-resolving contexts get exactly one member assigned 1 and
    declared product constraints hold on the assigned values.
    """
    labels = s.labels
    if 2 ** len(labels) > MAX_ASSIGNMENT_SPACE:
        raise SearchSpaceTooLarge(
            f"2^{len(labels)} assignments exceed the {MAX_ASSIGNMENT_SPACE} guard"
        )
    domains = [s.items[l].values() for l in labels]
    position = {l: i for i, l in enumerate(labels)}
    # Contexts become checkable once their last (sorted-order) label is set.
    ready_at: dict[int, list[Context]] = {}
    for ctx in s.contexts:
        if not ctx.labels:
            continue
        last = max(position[l] for l in ctx.labels)
        ready_at.setdefault(last, []).append(ctx)

    out: list[tuple[int, ...]] = []
    values: list[int] = []

    def ok_so_far(depth: int) -> bool:
        for ctx in ready_at.get(depth, []):
            vals = [values[position[l]] for l in ctx.labels]
            if ctx.resolves_identity and sum(vals) != 1:
                return False
            if ctx.product_sign is not None:
                prod = 1
                for v in vals:
                    prod *= v
                if prod != ctx.product_sign:
                    return False
        return True

    def recurse(depth: int) -> None:
        if depth == len(labels):
            out.append(tuple(values))
            return
        for v in domains[depth]:
            values.append(v)
            if ok_so_far(depth):
                recurse(depth + 1)
            values.pop()

    recurse(0)
    return out


# ---------------------------------------------------------------------------
# Exact feasibility


@dataclass(frozen=True)
class FeasibilityResult:
    """Outcome of the classical-model existence decision.

    ``certificate`` (when feasible) maps assignments - as value tuples over
    the sorted labels - to exact rational weights summing to 1 that
    reproduce every constrained marginal and joint exactly.  When
    infeasible, ``violated_constraint`` names an aggregate constraint (a
    rational combination of the imposed marginals/joints) together with the
    largest value any assignment distribution can reach and the value the
    quantum state requires.
    """

    status: str  # "feasible" | "infeasible" | "no-admissible-assignments"
    labels: tuple[str, ...]
    certificate: Optional[tuple[tuple[tuple[int, ...], Fraction], ...]] = None
    violated_constraint: Optional[str] = None
    required: Optional[Fraction] = None
    max_attainable: Optional[Fraction] = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"


def _rationalize(p: float, denominator: int) -> Fraction:
    p = min(1.0, max(0.0, p))
    return Fraction(round(p * denominator), denominator)


def _quantum_constraints(
    s: Scenario, tol: float
) -> list[tuple[str, tuple[str, ...], float]]:
    """(name, involved labels, probability) for marginals and in-context joints."""
    d = s.state.mat
    out = []
    for l in s.labels:
        p = trace_inner(d, s.items[l].plus)
        if abs(p.imag) > max(tol, 1e-8):
            raise ScenarioError(f"marginal for {l!r} is not real: {p}")
        out.append((f"marginal[{l}]", (l,), p.real))
    seen = set()
    for ctx in s.contexts:
        for x, y in itertools.combinations(sorted(ctx.labels), 2):
            if (x, y) in seen:
                continue
            seen.add((x, y))
            p = np.trace(d @ s.items[x].plus @ s.items[y].plus)
            if abs(p.imag) > max(tol, 1e-8):
                raise ScenarioError(f"joint for ({x},{y}) is not real: {p}")
            out.append((f"joint[{x},{y}]", (x, y), p.real))
    return out


def hv_feasibility(
    s: Scenario,
    denominator: int = DEFAULT_DENOMINATOR,
    ambiguity_margin: float = AMBIGUITY_MARGIN,
    tol: float = TOL,
) -> FeasibilityResult:
    """Decide existence of a distribution over admissible assignments that
    reproduces the state's marginals and in-context joints.

    Quantum probabilities are rounded to rationals with the given
    denominator before the exact solve.  :class:`NumericalAmbiguity` is
    raised when the instance sits within ``ambiguity_margin`` of the
    feasible/infeasible boundary, where rounding could flip the verdict:
    for CHSH-shaped scenarios that is measured as the distance of the four
    correlation combinations from the classical bound, and in general as
    the depth of an infeasibility smaller than the margin.
    """
    if s.state is None:
        raise ScenarioError("feasibility needs a scenario state")
    labels = s.labels
    assignments = enumerate_assignments(s)
    if not assignments:
        return FeasibilityResult(status="no-admissible-assignments", labels=labels)

    shape = _chsh_shape(s)
    if shape is not None:
        svals = _chsh_combinations(s, shape)
        boundary = min(abs(2.0 - abs(v)) for v in svals)
        if boundary <= ambiguity_margin:
            raise NumericalAmbiguity(
                f"a correlation combination sits {boundary:.2e} from the "
                f"classical bound 2; rounding could flip the verdict"
            )

    constraints = _quantum_constraints(s, tol)
    position = {l: i for i, l in enumerate(labels)}

    names = ["normalization"] + [name for name, _, _ in constraints]
    rhs = [Fraction(1)] + [_rationalize(p, denominator) for _, _, p in constraints]
    rows: list[list[Fraction]] = []
    rows.append([Fraction(1)] * len(assignments))
    for _, involved, _ in constraints:
        row = []
        for a in assignments:
            ind = 1
            for l in involved:
                ind *= s.items[l].indicator(a[position[l]])
            row.append(Fraction(ind))
        rows.append(row)

    result = simplex.solve_equality_feasibility(rows, rhs)
    if result.feasible:
        cert = tuple(
            (assignments[j], w) for j, w in enumerate(result.x) if w != 0
        )
        return FeasibilityResult(status="feasible", labels=labels, certificate=cert)

    if float(result.infeasibility_gap) <= ambiguity_margin:
        raise NumericalAmbiguity(
            f"infeasibility depth {float(result.infeasibility_gap):.2e} is within "
            f"the ambiguity margin {ambiguity_margin:.1e}"
        )

    # Name the violated aggregate: y.(constraints) is a linear functional
    # that every assignment distribution keeps <= max_attainable, yet the
    # quantum values require strictly more.
    y = result.y
    terms = [
        (names[i], y[i]) for i in range(len(names)) if y[i] != 0
    ]
    described = " + ".join(
        f"({coeff})*{name}" for name, coeff in terms
    )
    required = sum((y[i] * rhs[i] for i in range(len(rhs))), Fraction(0))
    max_attainable = max(
        sum((y[i] * rows[i][j] for i in range(len(rows))), Fraction(0))
        for j in range(len(assignments))
    )
    return FeasibilityResult(
        status="infeasible",
        labels=labels,
        violated_constraint=described,
        required=required,
        max_attainable=max_attainable,
    )


# ---------------------------------------------------------------------------
# CHSH machinery

_SX = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_SZ = np.array([[1, 0], [0, -1]], dtype=np.complex128)
_I2 = np.eye(2, dtype=np.complex128)


def singlet_state() -> Density:
    """The two-qubit singlet (|01> - |10>)/sqrt(2) as a density."""
    v = np.zeros(4, dtype=np.complex128)
    v[1] = 1 / np.sqrt(2)
    v[2] = -1 / np.sqrt(2)
    return Density.pure(v)


def setting_side1(theta_deg: float) -> np.ndarray:
    """Side-1 analyzer at ``theta_deg``: cos(t) sz + sin(t) sx on qubit 1.

    Angles are measured from the z axis in the zx plane.
    """
    t = np.deg2rad(theta_deg)
    return np.kron(np.cos(t) * _SZ + np.sin(t) * _SX, _I2)


def setting_side2(theta_deg: float) -> np.ndarray:
    """Side-2 analyzer at ``theta_deg``: -(sin(t) sz + cos(t) sx) on qubit 2.

    Side 2 is calibrated against the -x axis with the opposite orientation;
    on the singlet this makes E(t1, t2) = sin(t1 + t2), so the textbook
    quadruple (0, 90; 45, 135) maximizes the correlation combination
    E(A,B) + E(A,B') + E(A',B) - E(A',B').
    """
    t = np.deg2rad(theta_deg)
    return np.kron(_I2, -(np.sin(t) * _SZ + np.cos(t) * _SX))


def _check_dichotomic(label: str, mat: np.ndarray, tol: float) -> None:
    obs = Observable.from_matrix(mat, tol=max(tol, 1e-8))
    eigs = obs.eigenvalues()
    if any(min(abs(e - 1.0), abs(e + 1.0)) > CLUSTER_GAP for e in eigs):
        raise NotDichotomic(f"{label} has eigenvalues {eigs}, expected subset of -1, +1")


def chsh_value(
    state: Density,
    a1,
    a2,
    b1,
    b2,
    tol: float = TOL,
) -> float:
    """Correlation combination S = E(A,B) + E(A,B') + E(A',B) - E(A',B')
    with E(X, Y) = tr[D XY].

    The side-1 settings must commute with the side-2 settings (locality as
    expressed inside the algebra); each setting must have spectrum in
    {-1, +1}.
    """
    a1, a2, b1, b2 = map(as_operator, (a1, a2, b1, b2))
    require_same_dim(state.mat, a1, a2, b1, b2)
    for label, m in (("A", a1), ("A'", a2), ("B", b1), ("B'", b2)):
        _check_dichotomic(label, m, tol)
    for la, x in (("A", a1), ("A'", a2)):
        for lb, y in (("B", b1), ("B'", b2)):
            c = commutator_norm(x, y)
            if c > max(tol, 1e-8):
                raise CrossTalk(f"[{la}, {lb}] norm {c:.3e}; sides are not local")

    def corr(x, y):
        v = trace_inner(state.mat, x @ y)
        return v.real

    return float(corr(a1, b1) + corr(a1, b2) + corr(a2, b1) - corr(a2, b2))


def _chsh_shape(s: Scenario) -> Optional[tuple[tuple[str, str], tuple[str, str]]]:
    """Detect a 2x2 dichotomic scenario; return (side1 labels, side2 labels).

    Shape: four dichotomic items, four two-label contexts forming the
    complete bipartite pairing of two sides.
    """
    if len(s.items) != 4 or any(i.kind != DICHOTOMIC for i in s.items.values()):
        return None
    pair_ctxs = [c for c in s.contexts if len(c.labels) == 2]
    if len(pair_ctxs) != 4 or len(s.contexts) != 4:
        return None
    pairs = {tuple(sorted(c.labels)) for c in pair_ctxs}
    labels = s.labels
    for side1 in itertools.combinations(labels, 2):
        side2 = tuple(l for l in labels if l not in side1)
        wanted = {
            tuple(sorted((x, y))) for x in side1 for y in side2
        }
        if wanted == pairs:
            return (side1, side2)
    return None


def _chsh_combinations(
    s: Scenario, shape: tuple[tuple[str, str], tuple[str, str]]
) -> list[float]:
    """The four +-E combinations whose absolute bound is classically 2."""
    (a1, a2), (b1, b2) = shape
    d = s.state.mat

    def corr(x, y):
        return trace_inner(d, s.items[x].mat @ s.items[y].mat).real

    e = {
        (x, y): corr(x, y) for x in (a1, a2) for y in (b1, b2)
    }
    combos = []
    for flip in ((a1, b1), (a1, b2), (a2, b1), (a2, b2)):
        total = 0.0
        for x in (a1, a2):
            for y in (b1, b2):
                total += -e[(x, y)] if (x, y) == flip else e[(x, y)]
        combos.append(total)
    return combos


def bch_inequalities_hold(s: Scenario, margin: float = 0.0) -> bool:
    """True iff all eight |+-E+-E+-E+-E| <= 2 constraints hold at ``margin``."""
    shape = _chsh_shape(s)
    if shape is None:
        raise WrongScenarioShape("not a 2x2 dichotomic scenario")
    return all(abs(v) <= 2.0 - margin for v in _chsh_combinations(s, shape))


def classical_chsh_bound(s: Scenario) -> Fraction:
    """max |S| over the 16 deterministic strategies, in exact arithmetic.

    S pairs the two sides as E(A,B) + E(A,B') + E(A',B) - E(A',B') with the
    sides and their order taken from the scenario shape (sorted labels).
    The answer for any genuine 2x2 dichotomic scenario is exactly 2.
    """
    shape = _chsh_shape(s)
    if shape is None:
        raise WrongScenarioShape("not a 2x2 dichotomic scenario")
    (a1, a2), (b1, b2) = shape
    best = Fraction(0)
    for va1, va2, vb1, vb2 in itertools.product((-1, 1), repeat=4):
        sval = Fraction(va1 * vb1 + va1 * vb2 + va2 * vb1 - va2 * vb2)
        best = max(best, abs(sval))
    return best


def chsh_scenario(
    state: Optional[Density] = None,
    angles: tuple[float, float, float, float] = (0.0, 90.0, 45.0, 135.0),
    name: str = "chsh",
) -> Scenario:
    """Standard 2x2 scenario: settings A1, A2 on side 1 and B1, B2 on side 2
    built from the angle quadruple (a, a', b, b'), singlet state by default.
    """
    state = state if state is not None else singlet_state()
    a, a2, b, b2 = angles
    items = {
        "A1": make_item("A1", DICHOTOMIC, setting_side1(a)),
        "A2": make_item("A2", DICHOTOMIC, setting_side1(a2)),
        "B1": make_item("B1", DICHOTOMIC, setting_side2(b)),
        "B2": make_item("B2", DICHOTOMIC, setting_side2(b2)),
    }
    contexts = [
        Context(labels=("A1", "B1")),
        Context(labels=("A1", "B2")),
        Context(labels=("A2", "B1")),
        Context(labels=("A2", "B2")),
    ]
    return make_scenario(4, items, contexts, state=state, name=name)
