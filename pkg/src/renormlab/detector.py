"""Certify whether a weighted composition is an isometry of the renormed
space.

The criterion is executable: the weight must be one, each base orbit must
map into itself, and for base tuples the class fingerprint (the unit
solution of the tuple's triangular system) must be preserved.  A candidate
is certified only when an enumerated group word matches its point map on
the base points; inconclusive is a first-class outcome at finite caps.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .norm import RenormConfig, build_matrix, comparison_matrix, dual_norm_delta, solve_unit
from .operators import WeightedComposition
from .orbits import equivalent
from .tuples import TupleIndex

log = logging.getLogger(__name__)

__all__ = [
    "WeightReport",
    "TupleCheck",
    "IsometryVerdict",
    "check_weight_one",
    "fingerprint",
    "certify",
]


@dataclass
class WeightReport:
    weight_ok: bool
    max_weight_deviation: float
    weight_witness: str | None
    dual_ratio_deviation: float | None
    dual_points_checked: int
    orbit_containment: list[tuple[int, bool, float]]  # (base index, ok, worst escape)


@dataclass
class TupleCheck:
    tuple_points: tuple[str, ...]
    image_points: tuple[str, ...]
    outcome: str  # same-class | class-mismatch | window-mismatch | off-orbit | comparison-mismatch | comparison-match | unclassified
    fingerprint: tuple[float, ...]
    image_fingerprint: tuple[float, ...] | None
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.outcome in ("same-class", "comparison-match")

    @property
    def mismatch(self) -> bool:
        return self.outcome in ("class-mismatch", "window-mismatch", "off-orbit", "comparison-mismatch")


@dataclass
class IsometryVerdict:
    verdict: str  # certified-in-G | rejected | inconclusive
    weight: WeightReport
    orbit_checks: list[TupleCheck]
    approx_group_element: tuple[str, float] | None
    caps: dict
    witness: dict | None = None

    @property
    def certified(self) -> bool:
        return self.verdict == "certified-in-G"


_FP_TOL = 1e-9


def check_weight_one(T: WeightedComposition, cfg: RenormConfig, tol: float = 1e-9) -> WeightReport:
    """Examine the candidate weight against one, with dual-norm evidence.

    Off the union of base orbits the dual norm of a unit atom pins the
    weight of an isometry to one; that ratio is reported wherever such
    points exist.  Each base orbit is also tested for mapping into itself
    at tolerance.
    """
    w = T.weight
    dev = np.abs(w - 1.0)
    max_dev = float(dev.max())
    witness = cfg.space.points[int(dev.argmax())] if max_dev > tol else None

    ratio_dev = None
    checked = 0
    ratios = []
    for p in range(cfg.space.n):
        if dual_norm_delta(p, cfg) == 1.0 and dual_norm_delta(int(T.forward[p]), cfg) == 1.0:
            checked += 1
            ratios.append(abs(w[p] * 1.0 / 1.0 - 1.0))
    if ratios:
        ratio_dev = float(max(ratios))

    containment = []
    tol_orbit = 2 * cfg.space.resolution
    for bi, enum in enumerate(cfg.orbit_enums, start=1):
        pts = np.asarray(enum, dtype=np.intp)
        escape = float(cfg.space.dmat[np.ix_(T.forward[pts], pts)].min(axis=1).max())
        containment.append((bi, escape <= tol_orbit, escape))

    return WeightReport(
        weight_ok=max_dev <= tol,
        max_weight_deviation=max_dev,
        weight_witness=witness,
        dual_ratio_deviation=ratio_dev,
        dual_points_checked=checked,
        orbit_containment=containment,
    )


def fingerprint(t: TupleIndex, cfg: RenormConfig) -> np.ndarray:
    """Unit solution of the tuple's triangular system; constant on orbit
    classes, so equal fingerprints identify equal classes at registry level."""
    return solve_unit(build_matrix(t, cfg))


def _fingerprints_match(a: np.ndarray, b: np.ndarray) -> bool:
    return a.shape == b.shape and float(np.max(np.abs(a - b))) <= _FP_TOL


def certify(
    T: WeightedComposition,
    cfg: RenormConfig,
    test_depth: int = 4,
    word_tol: float | None = None,
) -> IsometryVerdict:
    """Full isometry check: weight, orbit preservation on base tuples via
    fingerprints, and an explicit approximating group word.

    certified-in-G means a word of length at most the group's cap matches
    the candidate map on the tested base points within tolerance; rejected
    verdicts always carry a re-checkable witness; everything else is
    inconclusive.
    """
    space = cfg.space
    word_tol = 2 * space.resolution if word_tol is None else word_tol
    test_depth = min(test_depth, cfg.base_count)
    weight = check_weight_one(T, cfg)

    checks: list[TupleCheck] = []
    witness: dict | None = None
    if not weight.weight_ok:
        witness = {
            "kind": "weight",
            "point": weight.weight_witness,
            "deviation": weight.max_weight_deviation,
        }

    for n in range(1, test_depth):
        t = cfg.base_tuple(1, n)
        fp_t = fingerprint(t, cfg)
        img = tuple(int(T.forward[p]) for p in t.points)
        img_ids = tuple(space.points[p] for p in img)
        t_ids = tuple(space.points[p] for p in t.points)
        slots = cfg.classify_slots(img)
        check = None
        if all(s is not None for s in slots):
            bases = [s[0] for s in slots]
            gammas = tuple(s[1] for s in slots)
            if bases == list(range(1, n + 2)):
                ti = TupleIndex(1, gammas, img)
                info_t = cfg.registry.classify(t.start, t.points)
                info_s = cfg.registry.classify(ti.start, ti.points)
                fp_s = fingerprint(ti, cfg)
                if info_t.m == info_s.m and info_t.ordinal == info_s.ordinal:
                    check = TupleCheck(t_ids, img_ids, "same-class", tuple(fp_t), tuple(fp_s))
                else:
                    check = TupleCheck(
                        t_ids, img_ids, "class-mismatch", tuple(fp_t), tuple(fp_s),
                        detail=f"image lies in class ordinal {info_s.ordinal} != {info_t.ordinal}",
                    )
            elif bases == list(range(bases[0], bases[0] + n + 1)):
                ti = TupleIndex(bases[0], gammas, img)
                fp_s = fingerprint(ti, cfg)
                check = TupleCheck(
                    t_ids, img_ids, "window-mismatch", tuple(fp_t), tuple(fp_s),
                    detail=f"image occupies base window {bases[0]}..{bases[-1]} instead of 1..{n + 1}",
                )
            else:
                check = TupleCheck(
                    t_ids, img_ids, "off-orbit", tuple(fp_t), None,
                    detail=f"image slots land in base orbits {bases}, not a consecutive window",
                )
        else:
            head_ok = n >= 1 and equivalent(img[:-1], t.points[:-1], cfg.group)
            tail_ok = n >= 1 and equivalent(img[1:], t.points[1:], cfg.group)
            if head_ok and tail_ok:
                try:
                    system = comparison_matrix(img, t, cfg)
                    fp_s = solve_unit(system)
                    outcome = "comparison-match" if _fingerprints_match(fp_t, fp_s) else "comparison-mismatch"
                    check = TupleCheck(t_ids, img_ids, outcome, tuple(fp_t), tuple(fp_s),
                                       detail="limiting corner system")
                except ValueError as exc:
                    check = TupleCheck(t_ids, img_ids, "unclassified", tuple(fp_t), None,
                                       detail=str(exc))
            else:
                missing = [img_ids[j] for j, s in enumerate(slots) if s is None]
                check = TupleCheck(
                    t_ids, img_ids, "off-orbit", tuple(fp_t), None,
                    detail=f"image points {missing} lie outside every enumerated base orbit",
                )
        checks.append(check)
        if check.mismatch and witness is None:
            witness = {
                "kind": "fingerprint",
                "tuple": check.tuple_points,
                "image": check.image_points,
                "outcome": check.outcome,
                "detail": check.detail,
            }

    base_pts = np.asarray([cfg.base_points[k] for k in range(test_depth)], dtype=np.intp)
    best_word = None
    best_dist = math.inf
    for w in cfg.group.words():
        dist = float(space.dmat[w.forward[base_pts], T.forward[base_pts]].max())
        if dist < best_dist:
            best_dist = dist
            best_word = w
    word_matched = best_dist <= word_tol and weight.weight_ok
    approx = (best_word.label or "word", best_dist) if best_word is not None else None

    if witness is not None:
        verdict = "rejected"
    elif word_matched and all(c.ok for c in checks):
        verdict = "certified-in-G"
    else:
        verdict = "inconclusive"
    return IsometryVerdict(
        verdict=verdict,
        weight=weight,
        orbit_checks=checks,
        approx_group_element=approx,
        caps={
            "test_depth": test_depth,
            "word_cap": cfg.group.word_cap,
            "word_tol": word_tol,
            "note": "certified-in-G means: within tolerance of a word of the capped length",
        },
        witness=witness,
    )
