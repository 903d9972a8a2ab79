"""Consecutive-window enumeration and the orbit-class weight maps.

Windows (i, i+1, ..., i+n) of positive integers are enumerated in a
triangular layout: row r holds (r, r+1), (r-1, ..., r+1), ..., (1, ..., r+1)
left to right.  The enumeration index m of a window fixes its comparability
code c = 3m, and each orbit-equivalence class of tuples over a window gets
an exponent k in [c-1, c]; the class weight is b = L^k with L chosen so
that the geometric tail sum stays below the norm budget C - lambda_1.

Exponents are kept as exact rationals; all weight comparisons happen on
exponents, and only the reciprocals 1/b enter floating-point sums.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

__all__ = [
    "Window",
    "enumerate_window",
    "enumeration_index",
    "window_of",
    "c_value",
    "BCAssignment",
    "choose_parameters",
    "TupleIndex",
    "ClassRegistry",
    "ClassInfo",
    "b_value",
    "verify_bmap",
    "exceptional_classes",
    "enumeration_tail",
]


@dataclass(frozen=True)
class Window:
    """The consecutive index block (start, start+1, ..., start+length-1)."""

    start: int
    length: int

    def __post_init__(self):
        if self.start < 1:
            raise ValueError("start must be >= 1")
        if self.length < 2:
            raise ValueError("length must be >= 2")

    @property
    def n(self) -> int:
        return self.length - 1

    @property
    def end(self) -> int:
        return self.start + self.n

    def indices(self) -> tuple[int, ...]:
        return tuple(range(self.start, self.end + 1))


def enumerate_window(m: int) -> Window:
    """The m-th window of the triangular layout (1-based)."""
    if m < 1:
        raise ValueError("m must be >= 1")
    # row r holds r windows; rows 1..r-1 hold r(r-1)/2 of them
    r = 1
    while r * (r + 1) // 2 < m:
        r += 1
    j = m - r * (r - 1) // 2  # position within row, 1-based
    start = r + 1 - j
    length = j + 1
    return Window(start=start, length=length)


def enumeration_index(w: Window) -> int:
    """Inverse of :func:`enumerate_window` (exact)."""
    r = w.end - 1
    return r * (r - 1) // 2 + w.n


def window_of(start: int, n: int) -> Window:
    return Window(start=start, length=n + 1)


def c_value(w: Window) -> int:
    """Comparability code 3m; equal exactly on equal windows."""
    return 3 * enumeration_index(w)


@dataclass(frozen=True)
class BCAssignment:
    """Norm budget parameters: C, the lambda sequence, and the base L.

    lambda_i = 1 + (C-1) * 2^-i decreases to 1 with lambda_1 < C, and L is
    the smallest integer above 9 whose geometric tail 1/(L-1) stays below
    C - lambda_1.  The budget comparison is exact: C is read as the decimal
    it was written as.
    """

    C: float
    L: int
    C_exact: Fraction

    def lam(self, i: int) -> float:
        if i < 1:
            raise ValueError("lambda index must be >= 1")
        return 1.0 + (self.C - 1.0) * 2.0 ** (-i)

    @property
    def lambda1(self) -> float:
        return self.lam(1)

    def budget(self) -> Fraction:
        """C - lambda_1, exactly."""
        return (self.C_exact - 1) / 2

    def tail_sum(self) -> Fraction:
        return Fraction(1, self.L - 1)

    def inv_L_pow(self, exponent: Fraction | float) -> float:
        """L^-exponent as a float; underflows to 0 harmlessly."""
        x = float(exponent)
        if x * math.log(self.L) > 745.0:
            return 0.0
        return math.pow(self.L, -x)


def choose_parameters(C: float) -> BCAssignment:
    """Smallest integer L > 9 with sum_{n>=1} L^-n < C - lambda_1."""
    c_exact = Fraction(C).limit_denominator(10**9)
    if not (1 < c_exact <= Fraction(11, 10)):
        raise ValueError("C must lie in (1, 1.1]")
    budget = (c_exact - 1) / 2  # C - lambda_1
    L = 10
    while Fraction(1, L - 1) >= budget:
        L += 1
    return BCAssignment(C=C, L=L, C_exact=c_exact)


@dataclass(frozen=True)
class TupleIndex:
    """A tuple over a window: per-slot orbit labels and resolved points.

    ``gammas[j]`` indexes into the enumerated orbit of the (start+j)-th base
    point; ``points`` are the resolved sample indices.
    """

    start: int
    gammas: tuple[int, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        if len(self.gammas) != len(self.points):
            raise ValueError("gammas and points length mismatch")
        if len(self.points) < 1:
            raise ValueError("empty tuple")

    @property
    def n(self) -> int:
        return len(self.points) - 1

    @property
    def window(self) -> Window:
        return window_of(self.start, self.n)

    def prefix(self, k: int) -> "TupleIndex":
        """The restriction to slots 0..k."""
        return TupleIndex(self.start, self.gammas[: k + 1], self.points[: k + 1])

    def segment(self, a: int, b: int) -> "TupleIndex":
        """The restriction to slots a..b (start index shifts accordingly)."""
        return TupleIndex(self.start + a, self.gammas[a : b + 1], self.points[a : b + 1])


@dataclass
class ClassInfo:
    m: int
    ordinal: int
    exponent: Fraction
    representative: tuple[int, ...]
    attained: bool = False  # True when the finite-family rule assigned c_m


class ClassRegistry:
    """Lazily discovered orbit-equivalence classes of window tuples.

    Classes are keyed by the canonical orbit representative: the
    lexicographically smallest word image of the tuple under the group's
    enumerated words.  The key is exactly class-constant when the word list
    is closed under composition (finite groups enumerated to their closure);
    for capped word lists it is the G'-at-cap approximation, which is the
    declared semantics of every downstream claim.  Ordinals are assigned in
    first-query order, which is deterministic given the construction order,
    so the exponent k_m^i = c_m - 1/i is a stable function across runs.  A
    family declared complete assigns exactly c_m to its last class.
    """

    def __init__(self, word_maps: Sequence[np.ndarray], declared_totals: dict[int, int] | None = None):
        self.word_maps = [np.asarray(w, dtype=np.intp) for w in word_maps]
        self.declared_totals = dict(declared_totals or {})
        self._by_key: dict[tuple[int, tuple[int, ...]], ClassInfo] = {}
        self._by_window: dict[int, list[ClassInfo]] = {}

    def canonical_key(self, points: Sequence[int]) -> tuple[int, ...]:
        pts = np.asarray(points, dtype=np.intp)
        best = None
        for w in self.word_maps:
            img = tuple(int(i) for i in w[pts])
            if best is None or img < best:
                best = img
        return best if best is not None else tuple(int(i) for i in pts)

    def classify(self, start: int, points: Sequence[int]) -> ClassInfo:
        """Class of a window tuple, auto-registering new classes."""
        w = window_of(start, len(points) - 1)
        m = enumeration_index(w)
        key = (m, self.canonical_key(points))
        info = self._by_key.get(key)
        if info is not None:
            return info
        ordinal = len(self._by_window.get(m, ())) + 1
        cm = 3 * m
        total = self.declared_totals.get(m)
        if total is not None and ordinal == total:
            exponent = Fraction(cm)
            attained = True
        else:
            exponent = Fraction(cm) - Fraction(1, ordinal)
            attained = False
        info = ClassInfo(m=m, ordinal=ordinal, exponent=exponent,
                         representative=key[1], attained=attained)
        self._by_key[key] = info
        self._by_window.setdefault(m, []).append(info)
        return info

    def classes_for_window(self, w: Window) -> list[ClassInfo]:
        return list(self._by_window.get(enumeration_index(w), ()))

    def lookup(self, start: int, points: Sequence[int]) -> ClassInfo | None:
        w = window_of(start, len(points) - 1)
        key = (enumeration_index(w), self.canonical_key(points))
        return self._by_key.get(key)

    def all_classes(self) -> list[tuple[int, ClassInfo]]:
        out = []
        for m in sorted(self._by_window):
            for info in self._by_window[m]:
                out.append((m, info))
        return out

    def to_records(self, points: Sequence[str] | None = None) -> list[dict]:
        recs = []
        for m, info in self.all_classes():
            rep = list(info.representative)
            recs.append({
                "m": m,
                "ordinal": info.ordinal,
                "representative": [points[i] for i in rep] if points else rep,
                "exponent": str(info.exponent),
                "attained": info.attained,
            })
        return recs


def b_value(t: TupleIndex, registry: ClassRegistry) -> Fraction:
    """Exponent of the class weight b = L^k for the tuple's orbit class."""
    return registry.classify(t.start, t.points).exponent


def enumeration_tail(bc: BCAssignment, beyond_m: int) -> float:
    """Certified bound on sum over enumeration indices m' > beyond_m of
    L^-(3m'-1) (each later window weight is at least L^(3m'-1)).

    A relative pad absorbs the float rounding of the geometric closed form,
    keeping the bound on the safe side.
    """
    first = bc.inv_L_pow(3 * (beyond_m + 1) - 1)
    return first / (1.0 - bc.L ** (-3)) * (1.0 + 1e-9)


def verify_bmap(
    bc: BCAssignment,
    depth: int,
    registry: ClassRegistry,
) -> dict:
    """Exhaustive check of the weight-map properties on the registered
    classes at the given depth, with a certified geometric tail for the
    budget property.

    Checked exactly on exponents: class/visit injectivity per window (1),
    window coding (2), exponent range and strict growth per window (4),
    the lower estimate 3(i+n)-4 (5), and the one-step growth b' > L b (6).
    The budget property (7) is checked as lambda_i + finite prefix sums +
    tail < C for every registered tuple.
    """
    report: dict = {"depth": depth, "violations": [], "checked": 0}
    if not bc.tail_sum() < bc.budget():
        report["violations"].append(("property3", "geometric tail exceeds budget"))

    by_m: dict[int, list[ClassInfo]] = {}
    per_key: dict[tuple[int, tuple[int, ...]], ClassInfo] = {}
    for m, info in registry.all_classes():
        w = enumerate_window(m)
        if w.end > depth and w.n > 1:
            continue  # pairs beyond depth participate only in property 7 sums
        by_m.setdefault(m, []).append(info)
        per_key[(m, info.representative)] = info

    for m, infos in sorted(by_m.items()):
        w = enumerate_window(m)
        cm = 3 * m
        if c_value(w) != cm:
            report["violations"].append(("property2", f"window {w} code mismatch"))
        exps = [info.exponent for info in sorted(infos, key=lambda i: i.ordinal)]
        for a, b in zip(exps, exps[1:]):
            if not a < b:
                report["violations"].append(("property4", f"window m={m}: exponents not strictly increasing"))
        for info in infos:
            report["checked"] += 1
            k = info.exponent
            if not (Fraction(cm - 1) <= k <= Fraction(cm)):
                report["violations"].append(("property4", f"m={m} ordinal {info.ordinal}: exponent outside [c-1, c]"))
            if (not info.attained) and k >= Fraction(cm):
                report["violations"].append(("property4", f"m={m} ordinal {info.ordinal}: supremum attained without declaration"))
            if k < 3 * w.end - 4:
                report["violations"].append(("property5", f"m={m} ordinal {info.ordinal}: exponent below 3(i+n)-4"))
        seen_exponents = {}
        for info in infos:
            prev = seen_exponents.get(info.exponent)
            if prev is not None:
                report["violations"].append(("property1", f"m={m}: classes {prev} and {info.ordinal} share a weight"))
            seen_exponents[info.exponent] = info.ordinal

    # property 6: one-slot extensions grow by strictly more than one L power
    rep_index = {(m, info.representative): info for m, info in registry.all_classes()}
    for (m, rep), info in rep_index.items():
        w = enumerate_window(m)
        if w.n < 2 or (w.end > depth and w.n > 1):
            continue
        prefix_rep = rep[:-1]
        pm = enumeration_index(window_of(w.start, w.n - 1))
        # canonical keys of prefixes of canonical representatives are the
        # prefixes' own canonical keys only up to word action; re-canonicalize
        pkey = (pm, registry.canonical_key(prefix_rep))
        pinfo = registry._by_key.get(pkey)
        if pinfo is None:
            pinfo = registry.classify(w.start, prefix_rep)
        if not info.exponent > pinfo.exponent + 1:
            report["violations"].append(
                ("property6", f"m={m} ordinal {info.ordinal}: extension does not exceed L * base weight")
            )

    # property 7: budget along every registered tuple's prefix chain
    for m, info in sorted(rep_index.items()):
        w = enumerate_window(m[0])
        lam = bc.lam(w.start)
        total = lam
        pts = info.representative
        ell_last = m[0]
        for k in range(1, w.n + 1):
            sub = registry.classify(w.start, pts[: k + 1])
            total += bc.inv_L_pow(sub.exponent)
            ell_last = max(ell_last, enumeration_index(window_of(w.start, k)))
        total += enumeration_tail(bc, ell_last)
        report["checked"] += 1
        if not total < bc.C:
            report["violations"].append(("property7", f"m={m[0]} ordinal {info.ordinal}: budget exceeded ({total})"))

    report["ok"] = not report["violations"]
    return report


def exceptional_classes(
    t: TupleIndex,
    p: int,
    q: int,
    registry: ClassRegistry,
    bc: BCAssignment,
    eps: float | None = None,
) -> list[ClassInfo]:
    """Registered classes over the window (p, ..., p+q) whose weight
    undercuts the weight of t's matching sub-tuple.

    Without eps this is the plain comparison b(class) < b(sub-tuple).  With
    eps, the full-window case (p, q) = (start, n) switches to the threshold
    b(class) < L^c(t) / (1 + eps); the overlapping index ranges in the two
    defining bullets are resolved by letting the full-window clause win.
    """
    i, n = t.start, t.n
    if not (i <= p and p + q <= i + n and q >= 1):
        raise ValueError("exceptional window out of range")
    if p == i + n:
        raise ValueError("exceptional window must start before the tuple end")
    sub = t.segment(p - i, p - i + q)
    sub_info = registry.classify(sub.start, sub.points)
    w = window_of(p, q)
    out = []
    full_window = (p == i and q == n)
    if eps is not None and full_window:
        cutoff = Fraction(c_value(t.window))
        log_shift = math.log1p(eps) / math.log(bc.L)
        for info in registry.classes_for_window(w):
            if float(info.exponent) < float(cutoff) - log_shift:
                out.append(info)
        return out
    for info in registry.classes_for_window(w):
        if info.exponent < sub_info.exponent:
            out.append(info)
    return out
