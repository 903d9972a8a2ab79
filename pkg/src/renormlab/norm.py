"""The renorming engine: seminorm ensemble, certified sup, and dual solves.

The new norm is the sup of seminorms indexed by window tuples over the base
points: the head slot is weighted by lambda_i and each later slot by the
reciprocal class weight of the tuple's prefix.  The engine enumerates every
consecutive pair at every base index plus all windows up to the truncation
depth, so the computed sup dominates the plain sup norm whenever the base
orbits cover the sample; omitted deeper windows are covered by a certified
geometric tail on enumeration indices.

Dual norms of atomic combinations reduce to unit solutions of upper
triangular systems whose strictly-upper entries are reciprocal class
weights; back substitution keeps every entry inside [4/5, 1].
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .operators import GroupSpec
from .orbits import equivalent, select_dense_points
from .space import SampledSpace
from .tuples import (
    BCAssignment,
    ClassRegistry,
    TupleIndex,
    c_value,
    choose_parameters,
    enumeration_tail,
    exceptional_classes,
    verify_bmap,
)

log = logging.getLogger(__name__)

__all__ = [
    "TriangularSystem",
    "solve_unit",
    "dual_decompose",
    "RenormConfig",
    "build_config",
    "rho",
    "triple_norm",
    "gamma_cap_trace",
    "NormResult",
    "build_matrix",
    "comparison_matrix",
    "assemble_comparison",
    "dual_norm_delta",
    "dual_norm_atoms",
    "WitnessSpec",
    "witness_function",
    "witness_for_tuple",
    "find_cutoff",
]

_ZETA_MARGIN = 1e-12


def _zeta_column_bound(col: int) -> float:
    """Hypothesis bound for strictly-upper entries in 0-based column col."""
    return 9.0 ** (4 - 3 * (col + 1))


@dataclass
class TriangularSystem:
    """Upper triangular system with near-one diagonal.

    ``lambdas`` is the diagonal (decreasing, inside [1, 1.1]); ``zeta`` holds
    the strictly-upper entries, column k bounded by 9^(4-3(k+1)) in 0-based
    indexing, which is the classical column bound after the index shift.
    """

    lambdas: np.ndarray
    zeta: np.ndarray
    label: str = ""

    def __post_init__(self):
        self.lambdas = np.asarray(self.lambdas, dtype=float)
        self.zeta = np.asarray(self.zeta, dtype=float)
        s = self.size
        if self.zeta.shape != (s, s):
            raise ValueError("zeta shape mismatch")
        if np.any(np.tril(self.zeta) != 0):
            raise ValueError("zeta must be strictly upper triangular")
        if np.any(self.lambdas < 1.0) or np.any(self.lambdas > 1.1 + _ZETA_MARGIN):
            raise ValueError("diagonal must lie in [1, 1.1]")
        if np.any(np.diff(self.lambdas) > _ZETA_MARGIN):
            raise ValueError("diagonal must be non-increasing")
        if np.any(self.zeta < 0):
            raise ValueError("zeta entries must be nonnegative")
        for k in range(1, s):
            if np.any(self.zeta[:k, k] > _zeta_column_bound(k) + _ZETA_MARGIN):
                raise ValueError(
                    f"zeta bound violation in column {k}: "
                    "entries exceed the hypothesis bound (is L <= 9?)"
                )

    @property
    def size(self) -> int:
        return len(self.lambdas)

    def matrix(self) -> np.ndarray:
        return np.diag(self.lambdas) + self.zeta

    def row(self, k: int) -> np.ndarray:
        r = self.zeta[k].copy()
        r[k] = self.lambdas[k]
        return r


def solve_unit(T: TriangularSystem) -> np.ndarray:
    """Back substitution for the unit right-hand side.

    Entries are asserted to land in [4/5, 1]; anything else indicates the
    hypothesis bounds were violated upstream.
    """
    s = T.size
    z = np.zeros(s)
    for k in range(s - 1, -1, -1):
        acc = 1.0 - float(T.zeta[k, k + 1 :] @ z[k + 1 :])
        z[k] = acc / T.lambdas[k]
        if not (0.8 - _ZETA_MARGIN <= z[k] <= 1.0 + _ZETA_MARGIN):
            raise ValueError(f"hypothesis violation at index {k}: entry {z[k]}")
    return z


def dual_decompose(beta: Sequence[float], T: TriangularSystem) -> tuple[np.ndarray, float]:
    """Forward substitution expressing beta over the system rows.

    Requires beta inside the [4/5, 6/5] window; returns the nonnegative
    coefficients (all below 2) and the predicted dual norm beta . z0, which
    equals the coefficient sum by the unit equation.
    """
    beta = np.asarray(beta, dtype=float)
    if beta.shape != (T.size,):
        raise ValueError("beta size mismatch")
    if np.any(beta < 0.8 - _ZETA_MARGIN) or np.any(beta > 1.2 + _ZETA_MARGIN):
        raise ValueError("beta outside the [4/5, 6/5] window; no guarantee applies")
    s = T.size
    alpha = np.zeros(s)
    for k in range(s):
        acc = beta[k] - float(alpha[:k] @ T.zeta[:k, k])
        alpha[k] = acc / T.lambdas[k]
        if not (-_ZETA_MARGIN <= alpha[k] < 2.0):
            raise ValueError(f"decomposition out of range at index {k}: {alpha[k]}")
    z0 = solve_unit(T)
    return alpha, float(beta @ z0)


# ----------------------------------------------------------------------
# configuration: base points, orbit enumerations, tuple plans


@dataclass
class WindowPlan:
    """Vectorized evaluation block: all enumerated tuples of one length.

    Row r is the tuple starting at base index ``starts[r]`` with orbit
    labels ``gammas[r]``; the weight row holds lambda_start followed by the
    reciprocal class weights of the prefixes.
    """

    n: int
    starts: np.ndarray   # (T,) base start indices
    gammas: np.ndarray   # (T, n+1) orbit labels
    idx: np.ndarray      # (T, n+1) sample indices
    weights: np.ndarray  # (T, n+1) lambda / reciprocal weights

    @property
    def count(self) -> int:
        return self.idx.shape[0]


@dataclass(eq=False)
class RenormConfig:
    """Everything needed to evaluate the seminorm ensemble and its duals."""

    space: SampledSpace
    group: GroupSpec
    bc: BCAssignment
    depth: int
    gamma_cap: int | None
    base_points: tuple[int, ...]
    orbit_enums: tuple[tuple[int, ...], ...]
    registry: ClassRegistry
    plans: list[WindowPlan]
    coverage_defect: float
    selection_audit: list
    bmap_report: dict
    gamma_capped: bool
    slot_lookup: dict = field(repr=False, default_factory=dict)

    def lam(self, i: int) -> float:
        return self.bc.lam(i)

    @property
    def base_count(self) -> int:
        return len(self.base_points)

    def orbit_of_base(self, i: int) -> tuple[int, ...]:
        """Enumerated orbit of the i-th base point (1-based i)."""
        return self.orbit_enums[i - 1]

    def tuple_index(self, start: int, gammas: Sequence[int]) -> TupleIndex:
        pts = []
        for j, g in enumerate(gammas):
            enum = self.orbit_of_base(start + j)
            if not 0 <= g < len(enum):
                raise ValueError(f"gamma label {g} outside enumerated orbit of base {start + j}")
            pts.append(enum[g])
        return TupleIndex(start=start, gammas=tuple(int(g) for g in gammas), points=tuple(pts))

    def base_tuple(self, start: int, n: int) -> TupleIndex:
        return self.tuple_index(start, (0,) * (n + 1))

    def classify_slots(self, points: Sequence[int], tol: float | None = None):
        """Per-slot base-orbit labels: (base index, gamma) or None."""
        tol = 2 * self.space.resolution if tol is None else tol
        out = []
        for p in points:
            hit = self.slot_lookup.get(int(p))
            if hit is None and tol > 0:
                best = None
                for bi, enum in enumerate(self.orbit_enums, start=1):
                    dmin = self.space.dmat[p, list(enum)].min()
                    if dmin <= tol and (best is None or dmin < best[0]):
                        pos = int(np.argmin(self.space.dmat[p, list(enum)]))
                        best = (dmin, (bi, pos))
                hit = best[1] if best else None
            out.append(hit)
        return out

    def provenance(self) -> dict:
        return {
            "C": self.bc.C,
            "L": self.bc.L,
            "lambda_rule": "1 + (C-1) * 2^-i",
            "class_exponent_rule": "3m - 1/ordinal (last class of a declared-finite family gets 3m)",
            "depth": self.depth,
            "gamma_cap": self.gamma_cap,
            "word_cap": self.group.word_cap,
            "base_count": self.base_count,
            "coverage_defect": self.coverage_defect,
            "resolution": self.space.resolution,
        }


def build_config(
    space: SampledSpace,
    group: GroupSpec,
    C: float = 1.1,
    depth: int = 6,
    gamma_cap: int | None = None,
    base_count: int | None = None,
    max_tuples: int = 2_000_000,
) -> RenormConfig:
    """Select base points, enumerate orbits and window tuples, populate the
    class registry, and verify the weight-map properties at depth."""
    if depth < 2:
        raise ValueError("depth must be at least 2")
    bc = choose_parameters(C)
    base, audit = select_dense_points(space, group, count=base_count)
    if len(base) < depth:
        raise ValueError(
            f"only {len(base)} base points selectable; depth {depth} needs at least that many"
        )
    words = group.words()
    orbit_enums = []
    for b in base:
        seen = []
        seen_set = set()
        for w in words:
            img = int(w.forward[b])
            if img not in seen_set:
                seen_set.add(img)
                seen.append(img)
        orbit_enums.append(tuple(seen))
    registry = ClassRegistry([w.forward for w in words])

    gamma_capped = False
    budget = max_tuples

    def build_window(start: int, n: int):
        nonlocal gamma_capped, budget
        ranges = []
        for j in range(n + 1):
            size = len(orbit_enums[start + j - 1])
            if gamma_cap is not None and size > gamma_cap:
                size = gamma_cap
                gamma_capped = True
            ranges.append(size)
        count = 1
        for r in ranges:
            count *= r
        budget -= count
        if budget < 0:
            raise ValueError(
                f"tuple budget exceeded at window ({start}..{start + n}); "
                "lower depth or gamma_cap"
            )
        gam = np.array(list(itertools.product(*(range(r) for r in ranges))), dtype=np.intp)
        gam = gam.reshape(count, n + 1)
        idx = np.empty_like(gam)
        for j in range(n + 1):
            enum = np.asarray(orbit_enums[start + j - 1], dtype=np.intp)
            idx[:, j] = enum[gam[:, j]]
        weights = np.empty((count, n + 1))
        weights[:, 0] = bc.lam(start)
        for k in range(1, n + 1):
            uniq, inv = np.unique(idx[:, : k + 1], axis=0, return_inverse=True)
            vals = np.empty(len(uniq))
            for u, row in enumerate(uniq):
                info = registry.classify(start, tuple(int(v) for v in row))
                vals[u] = bc.inv_L_pow(info.exponent)
            weights[:, k] = vals[inv]
        starts = np.full(count, start, dtype=np.intp)
        return starts, gam, idx, weights

    # windows inside the depth (triangular-enumeration order), every
    # remaining consecutive pair, and the bare head term of the last base
    # index, whose pair partner lies beyond the sampled window.  The pair
    # family makes the sup dominate the plain sup norm wherever the base
    # orbits cover the sample.
    raw: dict[int, list] = {}
    deep = set()
    for end in range(2, min(depth, len(base)) + 1):
        for length in range(2, end + 1):
            start = end - length + 1
            deep.add((start, length - 1))
            raw.setdefault(length - 1, []).append(build_window(start, length - 1))
    for i in range(1, len(base)):
        if (i, 1) not in deep:
            raw.setdefault(1, []).append(build_window(i, 1))
    last = len(base)
    enum_last = orbit_enums[last - 1]
    size = len(enum_last) if gamma_cap is None else min(len(enum_last), gamma_cap)
    raw.setdefault(0, []).append((
        np.full(size, last, dtype=np.intp),
        np.arange(size, dtype=np.intp).reshape(size, 1),
        np.asarray(enum_last[:size], dtype=np.intp).reshape(size, 1),
        np.full((size, 1), bc.lam(last)),
    ))
    plans = [
        WindowPlan(
            n=n,
            starts=np.concatenate([r[0] for r in rows]),
            gammas=np.concatenate([r[1] for r in rows]),
            idx=np.concatenate([r[2] for r in rows]),
            weights=np.concatenate([r[3] for r in rows]),
        )
        for n, rows in sorted(raw.items())
    ]

    all_orbit_points = sorted({p for enum in orbit_enums for p in enum})
    coverage_defect = float(space.dmat[:, all_orbit_points].min(axis=1).max())

    slot_lookup = {}
    for bi, enum in enumerate(orbit_enums, start=1):
        for gpos, p in enumerate(enum):
            slot_lookup.setdefault(p, (bi, gpos))

    report = verify_bmap(bc, depth, registry)
    if not report["ok"]:
        raise ValueError(f"weight-map verification failed: {report['violations'][:3]}")

    return RenormConfig(
        space=space,
        group=group,
        bc=bc,
        depth=depth,
        gamma_cap=gamma_cap,
        base_points=tuple(base),
        orbit_enums=tuple(orbit_enums),
        registry=registry,
        plans=plans,
        coverage_defect=coverage_defect,
        selection_audit=audit,
        bmap_report=report,
        gamma_capped=gamma_capped,
        slot_lookup=slot_lookup,
    )


# ----------------------------------------------------------------------
# seminorms and the certified sup


def rho(t: TupleIndex, x: np.ndarray, cfg: RenormConfig) -> float:
    """Head slot weighted by lambda_start plus reciprocal-weighted tail."""
    x = np.asarray(x, dtype=float)
    total = cfg.lam(t.start) * abs(float(x[t.points[0]]))
    for k in range(1, t.n + 1):
        info = cfg.registry.classify(t.start, t.points[: k + 1])
        total += abs(float(x[t.points[k]])) * cfg.bc.inv_L_pow(info.exponent)
    return total


@dataclass
class NormResult:
    value: float
    truncation_bound: float
    argmax_window: tuple[int, int]
    argmax_gammas: tuple[int, ...]
    argmax_points: tuple[str, ...]
    gamma_capped: bool
    coverage_defect: float

    @property
    def upper(self) -> float:
        return self.value + self.truncation_bound


def triple_norm(x: np.ndarray, cfg: RenormConfig) -> NormResult:
    """Max of the seminorms over the enumerated tuples, with an additive
    certificate for the omitted deeper windows.

    The certificate sums the geometric tail of window weights beyond the
    enumeration index of the last in-depth window; when orbit enumerations
    were gamma-capped the tail does not cover the missing labels and the
    result is flagged instead.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    best = -math.inf
    arg = None
    for plan in cfg.plans:
        vals = (ax[plan.idx] * plan.weights).sum(axis=1)
        pos = int(vals.argmax())
        if vals[pos] > best:
            best = float(vals[pos])
            arg = (plan, pos)
    sup_x = float(ax.max())
    ell_depth = cfg.depth * (cfg.depth - 1) // 2
    bound = sup_x * enumeration_tail(cfg.bc, ell_depth)
    plan, pos = arg
    start = int(plan.starts[pos])
    return NormResult(
        value=best,
        truncation_bound=bound,
        argmax_window=(start, start + plan.n),
        argmax_gammas=tuple(int(g) for g in plan.gammas[pos]),
        argmax_points=tuple(cfg.space.points[int(i)] for i in plan.idx[pos]),
        gamma_capped=cfg.gamma_capped,
        coverage_defect=cfg.coverage_defect,
    )


def gamma_cap_trace(x: np.ndarray, cfg: RenormConfig, caps: Sequence[int]) -> list[tuple[int, float]]:
    """Norm value as a function of the orbit-label cap.

    No closed-form tail over orbit labels exists, so sensitivity is reported
    instead of a certificate: the trace restricts the enumerated family to
    tuples whose labels all sit below each cap.
    """
    ax = np.abs(np.asarray(x, dtype=float))
    out = []
    for cap in sorted(set(int(c) for c in caps)):
        best = 0.0
        for plan in cfg.plans:
            mask = (plan.gammas < cap).all(axis=1)
            if not mask.any():
                continue
            vals = (ax[plan.idx[mask]] * plan.weights[mask]).sum(axis=1)
            best = max(best, float(vals.max()))
        out.append((cap, best))
    return out


# ----------------------------------------------------------------------
# dual machinery


def build_matrix(t: TupleIndex, cfg: RenormConfig) -> TriangularSystem:
    """Triangular system whose row k carries lambda_{start+k} on the diagonal
    and the reciprocal weights of the tuple's inner segments above it."""
    s = t.n + 1
    lambdas = np.array([cfg.lam(t.start + k) for k in range(s)])
    zeta = np.zeros((s, s))
    for j in range(s):
        for k in range(j + 1, s):
            seg = t.segment(j, k)
            info = cfg.registry.classify(seg.start, seg.points)
            zeta[j, k] = cfg.bc.inv_L_pow(info.exponent)
    return TriangularSystem(lambdas=lambdas, zeta=zeta, label=f"T({t.start}..{t.start + t.n})")


def assemble_comparison(
    lambdas: Sequence[float],
    seg_exponents: dict[tuple[int, int], Fraction],
    c_t: int,
    bc: BCAssignment,
    label: str = "",
) -> TriangularSystem:
    """Comparison system: segment reciprocal weights everywhere except the
    corner entry, which is pinned to the limiting value L^-c(t)."""
    s = len(lambdas)
    zeta = np.zeros((s, s))
    for (j, k), exp in seg_exponents.items():
        zeta[j, k] = bc.inv_L_pow(exp)
    zeta[0, s - 1] = bc.inv_L_pow(Fraction(c_t))
    return TriangularSystem(lambdas=np.asarray(lambdas, float), zeta=zeta, label=label)


def comparison_matrix(s_points: Sequence[int], t: TupleIndex, cfg: RenormConfig) -> TriangularSystem:
    """Comparison system for a tuple that matches t on both overlapping
    sub-windows yet lies in no enumerated end-label class.

    Preconditions are tested with the sampled orbit machinery; the error
    names which equivalence held when they fail.
    """
    s_points = tuple(int(p) for p in s_points)
    if len(s_points) != t.n + 1:
        raise ValueError("length mismatch")
    n = t.n
    head_ok = equivalent(s_points[:-1], t.points[:-1], cfg.group)
    tail_ok = equivalent(s_points[1:], t.points[1:], cfg.group)
    if not (head_ok and tail_ok):
        raise ValueError(
            "not almost equivalent: "
            f"head equivalence {'held' if head_ok else 'failed'}, "
            f"tail equivalence {'held' if tail_ok else 'failed'}"
        )
    end_enum = cfg.orbit_of_base(t.start + n)
    for gamma, end_pt in enumerate(end_enum):
        candidate = t.points[:-1] + (end_pt,)
        if equivalent(s_points, candidate, cfg.group):
            raise ValueError(
                f"tuple is equivalent to the end-label {gamma} class; "
                "the plain class system applies"
            )
    lambdas = [cfg.lam(t.start + k) for k in range(n + 1)]
    seg_exponents: dict[tuple[int, int], Fraction] = {}
    for j in range(n + 1):
        for k in range(j + 1, n + 1):
            if j == 0 and k == n:
                continue
            sub = s_points[j : k + 1]
            info = cfg.registry.classify(t.start + j, sub)
            seg_exponents[(j, k)] = info.exponent
    return assemble_comparison(lambdas, seg_exponents, c_value(t.window), cfg.bc,
                               label=f"Tcomp({t.start}..{t.start + n})")


def dual_norm_delta(point: int, cfg: RenormConfig, tol: float | None = None) -> float:
    """Dual norm of a unit atom: 1/lambda_i on the i-th base orbit, 1 off
    every enumerated base orbit."""
    tol = cfg.space.resolution + 1e-12 if tol is None else tol
    hit = cfg.slot_lookup.get(int(point))
    if hit is not None:
        return 1.0 / cfg.lam(hit[0])
    for bi, enum in enumerate(cfg.orbit_enums, start=1):
        if cfg.space.dmat[point, list(enum)].min() <= tol:
            return 1.0 / cfg.lam(bi)
    return 1.0


def dual_norm_atoms(
    t,
    beta: Sequence[float],
    cfg: RenormConfig,
    reference: TupleIndex | None = None,
) -> tuple[float, np.ndarray]:
    """Dual norm of a beta-weighted atomic combination over a window tuple.

    ``t`` is a TupleIndex or a raw point tuple equivalent to a registered
    class (equivalent tuples share the solution vector).  A raw tuple that
    matches no class routes through the comparison system against
    ``reference`` when supplied.

    Returns (value, fingerprint): the value is beta . a(t) and the
    fingerprint a(t) is the class invariant used by the detector.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0.8 - _ZETA_MARGIN) or np.any(beta > 1.0 + _ZETA_MARGIN):
        raise ValueError("beta outside the [4/5, 1] window")
    if isinstance(t, TupleIndex):
        system = build_matrix(t, cfg)
    else:
        points = tuple(int(p) for p in t)
        slots = cfg.classify_slots(points, tol=0)
        if all(s is not None for s in slots):
            starts = [s[0] for s in slots]
            if starts == list(range(starts[0], starts[0] + len(points))):
                ti = TupleIndex(starts[0], tuple(s[1] for s in slots), points)
                system = build_matrix(ti, cfg)
            elif reference is not None:
                system = comparison_matrix(points, reference, cfg)
            else:
                raise ValueError("tuple slots do not form a consecutive window; "
                                 "supply a reference tuple for the comparison route")
        elif reference is not None:
            system = comparison_matrix(points, reference, cfg)
        else:
            raise ValueError("tuple not registered and no reference supplied")
    a = solve_unit(system)
    if beta.shape != (system.size,):
        raise ValueError("beta length mismatch")
    return float(beta @ a), a


# ----------------------------------------------------------------------
# witness bumps


@dataclass
class WitnessSpec:
    """Targets and radii for a sum of tent functions with prescribed peaks."""

    targets: tuple[tuple[int, float], ...]
    ball_radii: tuple[float, ...]
    cutoff_M: int
    tuple_ref: TupleIndex | None = None

    def __post_init__(self):
        if len(self.targets) != len(self.ball_radii):
            raise ValueError("radii count mismatch")
        if any(r <= 0 for r in self.ball_radii):
            raise ValueError("radii must be positive")


def find_cutoff(cfg: RenormConfig, end: int, eps: float) -> int:
    """Smallest M beyond the window end with
    lambda_M + L^(3-M) < min(lambda_{end+1}, 1 + eps)."""
    target = min(cfg.lam(end + 1), 1.0 + eps)
    for M in range(end + 1, cfg.base_count + 1):
        if cfg.lam(M) + cfg.bc.L ** (3.0 - M) < target:
            return M
    raise ValueError("no feasible cutoff within the selected base points")


def _support(space: SampledSpace, target: int, radius: float) -> np.ndarray:
    return np.nonzero(space.dmat[target] < radius - 1e-15)[0]


def witness_function(spec: WitnessSpec, cfg: RenormConfig) -> tuple[np.ndarray, dict]:
    """Tent functions peaking at the targets with prescribed values, zero
    outside the balls; the avoidance restrictions are checked and audited.

    Restriction one: each support avoids every enumerated base orbit with
    index up to the cutoff other than its own slot.  Restriction two: no
    exceptional orbit threads the supports of the reference tuple.
    """
    space = cfg.space
    audit: dict = {"cutoff_M": spec.cutoff_M, "r1_checked": 0, "r2_checked": 0}
    supports = [_support(space, p, r) for (p, _), r in zip(spec.targets, spec.ball_radii)]
    for a in range(len(supports)):
        for b in range(a + 1, len(supports)):
            if np.intersect1d(supports[a], supports[b]).size:
                raise ValueError(f"supports of targets {a} and {b} overlap")
    slot_of = {}
    if spec.tuple_ref is not None:
        slot_of = {k: spec.tuple_ref.start + k for k in range(spec.tuple_ref.n + 1)}
    for k, ((p, _), sup) in enumerate(zip(spec.targets, supports)):
        own = slot_of.get(k)
        for j in range(1, min(spec.cutoff_M, cfg.base_count) + 1):
            if own is not None and j == own:
                continue
            orbit = set(cfg.orbit_of_base(j))
            audit["r1_checked"] += 1
            hit = orbit.intersection(int(i) for i in sup)
            if hit:
                raise ValueError(
                    f"infeasible avoidance: support of target {k} meets the "
                    f"orbit of base point {j} at {space.points[next(iter(hit))]}"
                )
    if spec.tuple_ref is not None:
        t = spec.tuple_ref
        sup_sets = [set(int(v) for v in s) for s in supports]
        for p in range(t.start, t.start + t.n):
            for q in range(1, t.start + t.n - p + 1):
                for info in exceptional_classes(t, p, q, cfg.registry, cfg.bc):
                    audit["r2_checked"] += 1
                    for w in cfg.registry.word_maps:
                        pts = [int(w[v]) for v in info.representative]
                        if all(
                            pts[j] in sup_sets[p - t.start + j]
                            for j in range(q + 1)
                        ):
                            raise ValueError(
                                f"infeasible avoidance: exceptional orbit (m={info.m}, "
                                f"ordinal {info.ordinal}) threads the supports at ({p},{q})"
                            )
    x = np.zeros(space.n)
    for ((p, u), r, sup) in zip(spec.targets, spec.ball_radii, supports):
        tent = u * np.maximum(0.0, 1.0 - space.dmat[p, sup] / r)
        x[sup] = np.maximum(x[sup], tent)
        x[p] = u
    audit["targets"] = [(space.points[p], u) for p, u in spec.targets]
    audit["radii"] = list(spec.ball_radii)
    return x, audit


def witness_for_tuple(
    t: TupleIndex,
    cfg: RenormConfig,
    values: Sequence[float],
    eps: float = 0.05,
) -> WitnessSpec:
    """Feasible witness spec for a window tuple: radii shrink to clear the
    forbidden orbits and the other targets, floored at the resolution."""
    if len(values) != t.n + 1:
        raise ValueError("one value per slot required")
    M = find_cutoff(cfg, t.start + t.n, eps)
    space = cfg.space
    radii = []
    for k, p in enumerate(t.points):
        limit = math.inf
        for j in range(1, min(M, cfg.base_count) + 1):
            if j == t.start + k:
                continue
            orbit = list(cfg.orbit_of_base(j))
            limit = min(limit, float(space.dmat[p, orbit].min()))
        for other in t.points:
            if other != p:
                limit = min(limit, float(space.dmat[p, other]))
        if limit < space.resolution - 1e-15:
            raise ValueError(
                f"resolution too coarse: target {space.points[p]} cannot clear "
                "the forbidden orbits"
            )
        radii.append(min(limit, 4 * space.resolution))
    return WitnessSpec(
        targets=tuple((int(p), float(u)) for p, u in zip(t.points, values)),
        ball_radii=tuple(radii),
        cutoff_M=M,
        tuple_ref=t,
    )
