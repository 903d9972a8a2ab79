"""Finite point samples of locally compact metric spaces.

A :class:`SampledSpace` is a finite, desk-scale stand-in for a locally
compact Polish space: a tuple of point ids, a full distance matrix, a
nested compact exhaustion, and a declared ``resolution`` bounding how far
an unmodeled point of the ideal space can sit from the sample.  All
downstream tolerances are stated in terms of ``resolution``.

Compactness at sample scale is a proxy: a set counts as compact when it is
contained in an exhaustion element.  Reports carry this caveat verbatim.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

__all__ = [
    "CompactSet",
    "SampledSpace",
    "builtin_space",
    "fatten",
    "product",
    "validate_metric",
    "BUILTIN_NAMES",
]

BUILTIN_NAMES = ("line", "circle", "plane", "remark25", "onepoint01N", "circle_x_interval")


@dataclass(frozen=True)
class CompactSet:
    """A labeled subset of sample indices standing in for a compact set."""

    members: tuple[int, ...]
    label: str = ""

    def __post_init__(self):
        if len(self.members) == 0:
            raise ValueError("empty compact set")
        if list(self.members) != sorted(set(self.members)):
            object.__setattr__(self, "members", tuple(sorted(set(self.members))))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.members, dtype=np.intp)

    def __contains__(self, idx: int) -> bool:
        return idx in set(self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(eq=False)
class SampledSpace:
    """Finite sample of a locally compact Polish space.

    Attributes:
        name: short human-readable tag.
        points: point ids (strings), index position is the canonical index.
        dmat: full (n, n) distance matrix.
        exhaustion: increasing compact subsets whose union is the sample.
        resolution: max distance from any ideal point of the modeled space
            to the sample (a declared, conservative bound).
        isolated: per-point flag, True when the underlying (ideal) space has
            an isolated point there.
        metric_form: serializable description of the metric (closed-form tag
            with parameters, or "matrix").
        aux: non-serialized construction metadata (coordinates, factors).
    """

    name: str
    points: tuple[str, ...]
    dmat: np.ndarray
    exhaustion: tuple[CompactSet, ...]
    resolution: float
    isolated: np.ndarray
    metric_form: dict
    aux: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        n = len(self.points)
        if len(set(self.points)) != n:
            raise ValueError("duplicate point ids")
        self.dmat = np.asarray(self.dmat, dtype=float)
        if self.dmat.shape != (n, n):
            raise ValueError("distance matrix shape mismatch")
        if not np.allclose(self.dmat, self.dmat.T, atol=1e-12):
            raise ValueError("metric not symmetric on the sample")
        if np.any(np.abs(np.diag(self.dmat)) > 1e-12):
            raise ValueError("metric has nonzero diagonal")
        off = self.dmat[~np.eye(n, dtype=bool)]
        if off.size and off.min() <= 0:
            raise ValueError("distinct sample points at zero distance")
        if not self.resolution > 0:
            raise ValueError("resolution must be positive")
        self.isolated = np.asarray(self.isolated, dtype=bool)
        if self.isolated.shape != (n,):
            raise ValueError("isolated flag shape mismatch")
        if not self.exhaustion:
            raise ValueError("exhaustion must be nonempty")
        prev: set[int] = set()
        for ks in self.exhaustion:
            cur = set(ks.members)
            if not prev <= cur:
                raise ValueError("exhaustion sets are not nested")
            if max(cur) >= n or min(cur) < 0:
                raise ValueError("exhaustion member out of range")
            prev = cur
        if prev != set(range(n)):
            raise ValueError("exhaustion does not cover the sample")
        self._index = {p: i for i, p in enumerate(self.points)}

    @property
    def n(self) -> int:
        return len(self.points)

    def d(self, i: int, j: int) -> float:
        return float(self.dmat[i, j])

    def index(self, point_id: str) -> int:
        return self._index[point_id]

    def compact(self, members: Iterable[int], label: str = "") -> CompactSet:
        ms = tuple(sorted(set(int(m) for m in members)))
        if not ms:
            raise ValueError("empty compact set")
        if ms[0] < 0 or ms[-1] >= self.n:
            raise ValueError("compact set member outside space")
        return CompactSet(ms, label)

    @property
    def top_exhaustion(self) -> CompactSet:
        return self.exhaustion[-1]

    def __repr__(self) -> str:  # short: spaces can hold thousands of points
        return f"SampledSpace({self.name!r}, n={self.n}, resolution={self.resolution})"


def fatten(space: SampledSpace, K: CompactSet, delta: float) -> tuple[CompactSet, bool]:
    """Return ``{t : d(t, K) <= delta}`` and a containment flag.

    The flag reports whether the fattening stayed inside the top exhaustion
    element, the sample-scale proxy for compactness.  With a covering
    exhaustion the flag is trivially true; it turns informative only for
    spaces whose declared exhaustion is a strict filtration of the window.
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    if len(K.members) == 0:
        raise ValueError("empty compact set")
    dist_to_K = space.dmat[:, K.as_array()].min(axis=1)
    members = np.nonzero(dist_to_K <= delta + 1e-15)[0]
    fat = space.compact(members, label=f"{K.label or 'K'}+{delta:g}")
    inside_top = set(fat.members) <= set(space.top_exhaustion.members)
    return fat, inside_top


def product(a: SampledSpace, b: SampledSpace, name: str | None = None) -> SampledSpace:
    """Cartesian product with the max metric; exhaustion is the product of
    exhaustions, resolution the max of resolutions."""
    na, nb = a.n, b.n
    ids = tuple(f"{pa}|{pb}" for pa in a.points for pb in b.points)
    dmat = np.maximum(np.kron(a.dmat, np.ones((nb, nb))), np.kron(np.ones((na, na)), b.dmat))
    depth = max(len(a.exhaustion), len(b.exhaustion))
    exhaustion = []
    for m in range(depth):
        ka = a.exhaustion[min(m, len(a.exhaustion) - 1)]
        kb = b.exhaustion[min(m, len(b.exhaustion) - 1)]
        members = [ia * nb + ib for ia in ka.members for ib in kb.members]
        exhaustion.append(CompactSet(tuple(sorted(members)), label=f"{ka.label}x{kb.label}"))
    isolated = np.repeat(a.isolated, nb) & np.tile(b.isolated, na)
    return SampledSpace(
        name=name or f"{a.name}x{b.name}",
        points=ids,
        dmat=dmat,
        exhaustion=tuple(exhaustion),
        resolution=max(a.resolution, b.resolution),
        isolated=isolated,
        metric_form={"form": "product", "a": a.metric_form, "b": b.metric_form},
        aux={"kind": "product", "a": a, "b": b},
    )


def _line(step: float = 0.01, window: tuple[float, float] = (-10.0, 10.0), name: str = "line") -> SampledSpace:
    lo, hi = window
    if not (step > 0 and hi > lo):
        raise ValueError("bad line parameters")
    count = int(round((hi - lo) / step)) + 1
    coords = lo + step * np.arange(count)
    ids = tuple(f"x{c:+.6g}" for c in coords)
    dmat = np.abs(coords[:, None] - coords[None, :])
    bound = max(abs(lo), abs(hi))
    exhaustion = []
    m = 1
    while True:
        members = np.nonzero(np.abs(coords) <= min(m, bound) + 1e-12)[0]
        if members.size:
            exhaustion.append(CompactSet(tuple(int(i) for i in members), label=f"[-{m},{m}]"))
        if m >= bound:
            break
        m += 1
    if not exhaustion or len(exhaustion[-1]) != count:
        exhaustion.append(CompactSet(tuple(range(count)), label="window"))
    return SampledSpace(
        name=name,
        points=ids,
        dmat=dmat,
        exhaustion=tuple(exhaustion),
        resolution=step / 2,  # every ideal window point is within half a step
        isolated=np.zeros(count, dtype=bool),
        metric_form={"form": "line", "step": step, "window": [lo, hi]},
        aux={"kind": "line", "coords": coords, "step": step, "window": (lo, hi)},
    )


def _circle(count: int = 64, name: str = "circle") -> SampledSpace:
    if count < 3:
        raise ValueError("circle needs at least 3 points")
    angles = 2 * math.pi * np.arange(count) / count
    ids = tuple(f"c{k:03d}" for k in range(count))
    diff = np.abs(angles[:, None] - angles[None, :])
    dmat = np.minimum(diff, 2 * math.pi - diff)
    return SampledSpace(
        name=name,
        points=ids,
        dmat=dmat,
        exhaustion=(CompactSet(tuple(range(count)), label="circle"),),
        resolution=math.pi / count,  # half the arc spacing
        isolated=np.zeros(count, dtype=bool),
        metric_form={"form": "circle", "count": count},
        aux={"kind": "circle", "angles": angles, "count": count},
    )


def _remark25(n_max: int = 50) -> SampledSpace:
    """Two-part space: a column of pairs (0, x) for x in 1..n_max plus a
    point at infinity, and an n_max-by-n_max block of isolated pairs (i, j).

    Metric: d((0,x),(0,y)) = 2^{-min(x,y)}; any pair involving a point with
    first coordinate >= 1 is at distance 1.  Compact subsets of the ideal
    space are finite sets joined with a terminal segment of the column, so
    the exhaustion grows the isolated block while always carrying the column.
    """
    if n_max < 3:
        raise ValueError("n_max must be at least 3")
    ids = [f"(0,{x})" for x in range(1, n_max + 1)] + ["(0,inf)"]
    firsts = [0] * (n_max + 1)
    seconds = [float(x) for x in range(1, n_max + 1)] + [math.inf]
    for i in range(1, n_max + 1):
        for j in range(1, n_max + 1):
            ids.append(f"({i},{j})")
            firsts.append(i)
            seconds.append(float(j))
    a = np.asarray(firsts, dtype=float)
    s = np.asarray(seconds, dtype=float)
    n = len(ids)
    col_part = np.power(2.0, -np.minimum(s[:, None], s[None, :]))
    dmat = np.where(np.maximum(a[:, None], a[None, :]) >= 1, 1.0, col_part)
    np.fill_diagonal(dmat, 0.0)
    column = list(range(n_max + 1))
    exhaustion = []
    for m in range(1, n_max + 1):
        block = [
            (n_max + 1) + (i - 1) * n_max + (j - 1)
            for i in range(1, m + 1)
            for j in range(1, m + 1)
        ]
        exhaustion.append(CompactSet(tuple(sorted(column + block)), label=f"K{m}"))
    isolated = np.ones(n, dtype=bool)
    isolated[n_max] = False  # (0, inf) is the lone accumulation point
    return SampledSpace(
        name="remark25",
        points=tuple(ids),
        dmat=dmat,
        exhaustion=tuple(exhaustion),
        resolution=2.0 ** (-n_max),
        isolated=isolated,
        metric_form={"form": "remark25", "n_max": n_max},
        aux={"kind": "remark25", "n_max": n_max, "first": a, "second": s},
    )


def _onepoint01N(n_max: int = 50) -> SampledSpace:
    """One-point compactification of {0,1} x N, truncated at n_max.

    Metric: d((i,k),(j,m)) = 2^{-min(k,m)} for distinct points and
    d((i,k), inf) = 2^{-k}.  The whole space is compact.
    """
    if n_max < 2:
        raise ValueError("n_max must be at least 2")
    ids = []
    ks = []
    for i in (0, 1):
        for k in range(1, n_max + 1):
            ids.append(f"({i},{k})")
            ks.append(float(k))
    ids.append("inf")
    ks.append(math.inf)
    kv = np.asarray(ks, dtype=float)
    dmat = np.power(2.0, -np.minimum(kv[:, None], kv[None, :]))
    np.fill_diagonal(dmat, 0.0)
    n = len(ids)
    isolated = np.ones(n, dtype=bool)
    isolated[-1] = False
    return SampledSpace(
        name="onepoint01N",
        points=tuple(ids),
        dmat=dmat,
        exhaustion=(CompactSet(tuple(range(n)), label="all"),),
        resolution=2.0 ** (-n_max),
        isolated=isolated,
        metric_form={"form": "onepoint01N", "n_max": n_max},
        aux={"kind": "onepoint01N", "n_max": n_max, "level": kv},
    )


def builtin_space(name: str, **params) -> SampledSpace:
    """Gallery of concrete spaces at configurable resolution.

    Names: line, circle, plane, remark25, onepoint01N, circle_x_interval.
    """
    if name == "line":
        return _line(
            step=params.get("step", params.get("resolution", 0.01)),
            window=tuple(params.get("window", (-10.0, 10.0))),
        )
    if name == "circle":
        return _circle(count=params.get("count", 64))
    if name == "plane":
        axis = _line(
            step=params.get("step", params.get("resolution", 0.25)),
            window=tuple(params.get("window", (-2.0, 2.0))),
        )
        return product(axis, axis, name="plane")
    if name == "remark25":
        return _remark25(n_max=params.get("n_max", 50))
    if name == "onepoint01N":
        return _onepoint01N(n_max=params.get("n_max", 50))
    if name == "circle_x_interval":
        circ = _circle(count=params.get("count", 48))
        seg = _line(
            step=1.0 / (params.get("levels", 16) - 1),
            window=(0.0, 1.0),
            name="interval",
        )
        return product(circ, seg, name="circle_x_interval")
    raise ValueError(f"unknown builtin space: {name!r}")


def validate_metric(
    space: SampledSpace,
    exhaustive_limit: int = 2500,
    n_random: int = 100_000,
    seed: int = 0,
    tol: float = 1e-9,
) -> dict:
    """Check metric axioms on the sample.

    Symmetry and identity of indiscernibles are always checked in full.  The
    triangle inequality is checked exhaustively on all triples when the
    sample has at most ``exhaustive_limit`` points, otherwise on
    ``n_random`` random triples.
    """
    d = space.dmat
    n = space.n
    report = {
        "n": n,
        "symmetric": bool(np.allclose(d, d.T, atol=tol)),
        "identity": bool(np.all(np.abs(np.diag(d)) <= tol)),
        "mode": "exhaustive" if n <= exhaustive_limit else "random",
    }
    worst = -math.inf
    witness = None
    if n <= exhaustive_limit:
        for k in range(n):
            via = d[:, k][:, None] + d[k, :][None, :]
            gap = d - via
            m = float(gap.max())
            if m > worst:
                worst = m
                i, j = np.unravel_index(int(gap.argmax()), gap.shape)
                witness = (int(i), int(j), k)
        report["triples_checked"] = n * n * n
    else:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n, size=(n_random, 3))
        gap = d[idx[:, 0], idx[:, 1]] - (d[idx[:, 0], idx[:, 2]] + d[idx[:, 2], idx[:, 1]])
        pos = int(gap.argmax())
        worst = float(gap[pos])
        witness = tuple(int(v) for v in idx[pos])
        report["triples_checked"] = n_random
    report["triangle_ok"] = bool(worst <= tol)
    report["worst_triangle_gap"] = worst
    report["worst_triple"] = witness
    report["ok"] = report["symmetric"] and report["identity"] and report["triangle_ok"]
    return report
