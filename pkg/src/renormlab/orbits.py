"""Orbit closures of a group action at sample scale.

Tuples of sample points are acted on diagonally by group words.  Orbit
samples are exact index images (operators store index maps), deduplicated
at the 2*resolution scale, and orbit-closure membership is tested in the
max metric.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .operators import GroupSpec
from .space import SampledSpace

log = logging.getLogger(__name__)

__all__ = [
    "OrbitClosure",
    "orbit_closure",
    "equivalent",
    "equivalent_report",
    "nowhere_dense_check",
    "select_dense_points",
    "tuple_distance",
]


@dataclass(frozen=True)
class OrbitClosure:
    """Sampled orbit of a tuple: all word images up to ``word_cap``."""

    base: tuple[int, ...]
    samples: tuple[tuple[int, ...], ...]
    word_cap: int
    hull_tolerance: float
    window_clipped: bool = False

    def __contains__(self, tup) -> bool:
        return tuple(tup) in set(self.samples)

    def __len__(self) -> int:
        return len(self.samples)


def tuple_distance(space: SampledSpace, s: Sequence[int], t: Sequence[int]) -> float:
    """Max metric on tuples of sample indices."""
    if len(s) != len(t):
        raise ValueError("length mismatch")
    return max(float(space.dmat[a, b]) for a, b in zip(s, t))


def orbit_closure(group: GroupSpec, t: Sequence[int], cap: int | None = None) -> OrbitClosure:
    """All images of the tuple under words of length <= cap, deduplicated
    strictly below the 2*resolution scale, sorted for deterministic merging."""
    space = group.space
    base = tuple(int(i) for i in t)
    tol = 2 * space.resolution * (1 - 1e-9)  # keep spacing-separated images distinct
    defect_sets = [g.allowed_defects for g in group.generators]
    clipped = False
    kept: list[tuple[int, ...]] = []
    for w in group.words(cap):
        img = tuple(int(w.forward[i]) for i in base)
        if any(i in ds for ds in defect_sets for i in img):
            clipped = True
        is_new = True
        for k in kept:
            if img == k or tuple_distance(space, img, k) < tol:
                is_new = False
                break
        if is_new:
            kept.append(img)
    if base not in kept:
        kept.append(base)
    return OrbitClosure(
        base=base,
        samples=tuple(sorted(kept)),
        word_cap=cap if cap is not None else group.word_cap,
        hull_tolerance=tol,
        window_clipped=clipped,
    )


def _min_distance_to_orbit(space: SampledSpace, s: Sequence[int], orb: OrbitClosure) -> float:
    return min(tuple_distance(space, s, k) for k in orb.samples)


def equivalent_report(
    s: Sequence[int],
    t: Sequence[int],
    group: GroupSpec,
    cap: int | None = None,
    tol: float | None = None,
) -> dict:
    """Both one-sided orbit-membership tests with their distances.

    One-sided testing decides the symmetric relation on the ideal space; a
    disagreement here is a resolution artifact and is logged.  The default
    tolerance is the one-snap error bound (the resolution itself); distinct
    grid neighbors sit at twice that and stay inequivalent.
    """
    if len(s) != len(t):
        raise ValueError("length mismatch")
    space = group.space
    tol = space.resolution + 1e-12 if tol is None else tol
    orb_t = orbit_closure(group, t, cap)
    orb_s = orbit_closure(group, s, cap)
    d_fwd = _min_distance_to_orbit(space, s, orb_t)
    d_rev = _min_distance_to_orbit(space, t, orb_s)
    fwd = d_fwd < tol
    rev = d_rev < tol
    if fwd != rev:
        log.warning(
            "one-sided orbit tests disagree at tolerance %g (fwd=%s rev=%s); "
            "resolution artifact",
            tol, fwd, rev,
        )
    return {
        "equivalent": fwd,
        "forward": fwd,
        "reverse": rev,
        "agree": fwd == rev,
        "d_forward": d_fwd,
        "d_reverse": d_rev,
        "tol": tol,
    }


def equivalent(
    s: Sequence[int],
    t: Sequence[int],
    group: GroupSpec,
    cap: int | None = None,
    tol: float | None = None,
) -> bool:
    """True iff some sampled orbit element of t lies strictly within tol of
    s in the max metric (the one-sided membership test)."""
    return equivalent_report(s, t, group, cap, tol)["equivalent"]


def nowhere_dense_check(
    orbit: OrbitClosure,
    space: SampledSpace,
    probe_radius: float,
) -> dict:
    """For every sampled ball of ``probe_radius``, verify the ball is not
    covered by the orbit sample fattened by the resolution.

    Only single-point orbits are probed (the hypothesis under test lives on
    the space itself, which may be a product).
    """
    if any(len(s) != 1 for s in orbit.samples):
        raise ValueError("nowhere_dense_check probes orbits of single points")
    orb = np.asarray(sorted({s[0] for s in orbit.samples}), dtype=np.intp)
    near_orbit = space.dmat[:, orb].min(axis=1) <= space.resolution + 1e-15
    in_ball = space.dmat <= probe_radius + 1e-15
    uncovered = in_ball & ~near_orbit[None, :]
    ball_covered = ~uncovered.any(axis=1)
    if ball_covered.any():
        witness = int(np.nonzero(ball_covered)[0][0])
        return {
            "nowhere_dense": False,
            "witness_center": space.points[witness],
            "probe_radius": probe_radius,
        }
    return {"nowhere_dense": True, "witness_center": None, "probe_radius": probe_radius}


def select_dense_points(
    space: SampledSpace,
    group: GroupSpec,
    cap: int | None = None,
    count: int | None = None,
    avoid_tol: float = 1e-9,
) -> tuple[list[int], list[dict]]:
    """Greedy selection of base points with pairwise disjoint sampled orbits.

    The dense reference sequence is the sample enumeration itself.  Step i
    picks the point closest to the reference point within radius
    ``max(2^-i, resolution)`` whose distance to every previously selected
    orbit is at least ``avoid_tol``; ties break by point index.  With
    ``count=None`` the selection runs until candidates are exhausted;
    an explicit count raises when unreachable.

    Returns the selected indices and the per-step audit trail.
    """
    n = space.n
    dmat = space.dmat
    chosen: list[int] = []
    audit: list[dict] = []
    # distance from each sample point to the union of selected orbit samples
    orbit_dist = np.full(n, np.inf)
    target = count if count is not None else n
    step = 0
    for ref in range(n):
        if len(chosen) >= target:
            break
        step += 1
        radius = max(2.0 ** (-step), space.resolution)
        cand = np.nonzero(dmat[ref] <= radius + 1e-15)[0]
        cand = cand[np.lexsort((cand, dmat[ref][cand]))]
        pick = None
        for c in cand:
            if orbit_dist[c] >= avoid_tol:
                pick = int(c)
                break
        if pick is None:
            if count is not None:
                raise ValueError(
                    f"resolution too coarse for disjointness at step {step}"
                )
            continue
        chosen.append(pick)
        orb = orbit_closure(group, (pick,), cap)
        orb_idx = np.asarray(sorted({s[0] for s in orb.samples}), dtype=np.intp)
        orbit_dist = np.minimum(orbit_dist, dmat[:, orb_idx].min(axis=1))
        audit.append({
            "step": step,
            "reference": space.points[ref],
            "selected": space.points[pick],
            "distance": float(dmat[ref, pick]),
            "radius": radius,
        })
    if count is not None and len(chosen) < count:
        raise ValueError(
            f"resolution too coarse for disjointness at step {step + 1}"
        )
    return chosen, audit
