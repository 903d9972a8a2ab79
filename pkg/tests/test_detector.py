import numpy as np
import pytest

from renormlab.detector import certify, check_weight_one, fingerprint
from renormlab.operators import (
    circle_rotation,
    compose,
    identity,
    interval_flip,
    lift,
    line_translation,
    multiplication,
)
from renormlab.tuples import TupleIndex


def test_weight_report_generator(product_cfg):
    g = product_cfg.group.generators[0]
    rep = check_weight_one(g, product_cfg)
    assert rep.weight_ok
    assert rep.max_weight_deviation == 0.0
    assert all(ok for _, ok, _ in rep.orbit_containment)


def test_weight_report_multiplication(line_cfg):
    T = multiplication(line_cfg.space, 1.2)
    rep = check_weight_one(T, line_cfg)
    assert not rep.weight_ok
    assert rep.max_weight_deviation == pytest.approx(0.2)
    assert rep.weight_witness is not None


def test_weight_report_translation_defers_to_fingerprints(line_cfg):
    T = line_translation(line_cfg.space, 0.3)
    rep = check_weight_one(T, line_cfg)
    assert rep.weight_ok
    # base orbits are singletons and the translation moves them
    assert any(not ok for _, ok, _ in rep.orbit_containment)


def test_fingerprint_class_invariant(product_cfg):
    g = product_cfg.group.generators[0]
    t = product_cfg.base_tuple(1, 2)
    moved = tuple(int(g.forward[p]) for p in t.points)
    slots = product_cfg.classify_slots(moved, tol=0)
    s = TupleIndex(1, tuple(x[1] for x in slots), moved)
    assert np.array_equal(fingerprint(t, product_cfg), fingerprint(s, product_cfg))


def test_fingerprint_singleton(line_cfg):
    t = TupleIndex(5, (0,), (line_cfg.base_points[4],))
    fp = fingerprint(t, line_cfg)
    assert fp.shape == (1,)
    assert fp[0] == pytest.approx(1 / line_cfg.lam(5))


def test_fingerprints_distinct_classes_differ_in_head(product_cfg):
    t0 = product_cfg.tuple_index(1, (0, 0))
    t1 = product_cfg.tuple_index(1, (0, 1))
    fp0 = fingerprint(t0, product_cfg)
    fp1 = fingerprint(t1, product_cfg)
    assert fp0[1] == fp1[1]
    assert abs(fp0[0] - fp1[0]) > 1e-9


def test_certify_identity(line_cfg):
    verdict = certify(identity(line_cfg.space), line_cfg, test_depth=4)
    assert verdict.verdict == "certified-in-G"
    assert verdict.approx_group_element[1] == 0.0


def test_certify_translation_rejected_with_reproducible_witness(line_cfg):
    T = line_translation(line_cfg.space, 0.3)
    v1 = certify(T, line_cfg, test_depth=4)
    v2 = certify(T, line_cfg, test_depth=4)
    assert v1.verdict == "rejected"
    assert v1.witness == v2.witness
    assert v1.witness["kind"] == "fingerprint"
    # the mismatch is re-checkable: the image window differs from the base window
    first = next(c for c in v1.orbit_checks if c.mismatch)
    assert first.outcome in ("window-mismatch", "class-mismatch", "off-orbit")
    assert first.fingerprint != first.image_fingerprint


def test_certify_all_generator_words(product_cfg):
    g = product_cfg.group.generators[0]
    gi = product_cfg.group.generators[1]
    word = identity(product_cfg.space)
    for k in range(1, 5):
        word = compose(word, g)
        assert certify(word, product_cfg, test_depth=4).verdict == "certified-in-G"
    word = identity(product_cfg.space)
    for k in range(1, 5):
        word = compose(word, gi)
        assert certify(word, product_cfg, test_depth=4).verdict == "certified-in-G"


def test_soundness_every_enumerated_word_certified(product_cfg):
    for w in product_cfg.group.words():
        assert certify(w, product_cfg, test_depth=3).verdict == "certified-in-G"


def test_certify_rotation_flip_rejected(product_cfg):
    space = product_cfg.space
    circ, seg = space.aux["a"], space.aux["b"]
    rot = lift(circle_rotation(circ, steps=4), space, "left")
    flip = lift(interval_flip(seg), space, "right")
    verdict = certify(compose(rot, flip), product_cfg, test_depth=4)
    assert verdict.verdict == "rejected"
    assert verdict.witness["kind"] == "fingerprint"


def test_certify_multiplication_rejected_on_weight(line_cfg):
    verdict = certify(multiplication(line_cfg.space, 1.2), line_cfg, test_depth=3)
    assert verdict.verdict == "rejected"
    assert verdict.witness["kind"] == "weight"


def test_no_inconclusive_on_acceptance_scenarios(line_cfg, product_cfg):
    space = product_cfg.space
    circ, seg = space.aux["a"], space.aux["b"]
    candidates = [
        (line_cfg, identity(line_cfg.space)),
        (line_cfg, line_translation(line_cfg.space, 0.3)),
        (product_cfg, product_cfg.group.generators[0]),
        (product_cfg, compose(lift(circle_rotation(circ, steps=4), space, "left"),
                              lift(interval_flip(seg), space, "right"))),
    ]
    for cfg, T in candidates:
        assert certify(T, cfg, test_depth=4).verdict != "inconclusive"


def test_verdict_invariant_under_certified_composition(product_cfg):
    space = product_cfg.space
    circ, seg = space.aux["a"], space.aux["b"]
    rotflip = compose(lift(circle_rotation(circ, steps=4), space, "left"),
                      lift(interval_flip(seg), space, "right"))
    words = product_cfg.group.words()
    rng = np.random.default_rng(17)
    for _ in range(20):
        w = words[int(rng.integers(0, len(words)))]
        base = rotflip if rng.integers(0, 2) else product_cfg.group.generators[0]
        expected = certify(base, product_cfg, test_depth=3).verdict
        got = certify(compose(base, w), product_cfg, test_depth=3).verdict
        assert got == expected
