import itertools

import numpy as np
import pytest

import renormlab as rl
from renormlab.operators import (
    check_local_equicontinuity,
    check_sot_convergence,
    circle_rotation,
    compose,
    identity,
    interval_flip,
    invert,
    lift,
    line_translation,
    onepoint_swap,
    onepoint_swap_group,
    pointwise_implies_sot,
    remark25_sequence,
)


def test_apply_identity(line_space):
    op = identity(line_space)
    f = np.sin(line_space.aux["coords"])
    assert np.array_equal(op.apply(f), f)


def test_apply_swap_on_constant(onepoint_space):
    g = onepoint_swap(onepoint_space, 7)
    y = g.apply(np.ones(onepoint_space.n))
    assert y[onepoint_space.index("(0,7)")] == 2.0
    assert y[onepoint_space.index("(1,7)")] == 0.5
    mask = np.ones(onepoint_space.n, dtype=bool)
    mask[[onepoint_space.index("(0,7)"), onepoint_space.index("(1,7)")]] = False
    assert np.all(y[mask] == 1.0)


def test_swap_is_involution(onepoint_space):
    g = onepoint_swap(onepoint_space, 3)
    gg = compose(g, g)
    assert np.array_equal(gg.forward, np.arange(onepoint_space.n))
    assert np.allclose(gg.weight, 1.0)
    assert np.allclose(gg.apply(np.ones(onepoint_space.n)), 1.0)


def test_compose_with_inverse_is_identity(product_space, rotation_group):
    g = rotation_group.generators[0]
    gi = invert(g)
    e = compose(g, gi)
    disp = product_space.dmat[e.forward, np.arange(product_space.n)]
    assert disp.max() <= 2 * product_space.resolution
    assert np.max(np.abs(e.weight - 1.0)) < 1e-12


def test_compose_weight_one_closed(product_space, rotation_group):
    g = rotation_group.generators[0]
    h = rotation_group.generators[1]
    assert compose(g, h).is_weight_one


def test_compose_swaps_combines_weights(onepoint_space):
    g2, g5 = onepoint_swap(onepoint_space, 2), onepoint_swap(onepoint_space, 5)
    c = compose(g2, g5)
    for n in (2, 5):
        assert c.weight[onepoint_space.index(f"(0,{n})")] == 2.0
        assert c.weight[onepoint_space.index(f"(1,{n})")] == 0.5
        i0, i1 = onepoint_space.index(f"(0,{n})"), onepoint_space.index(f"(1,{n})")
        assert c.forward[i0] == i1 and c.forward[i1] == i0


def test_compose_associative_on_sampled_triples(onepoint_space):
    gens = [onepoint_swap(onepoint_space, n) for n in (1, 2, 3)]
    tol = 2 * onepoint_space.resolution
    for a, b, c in itertools.product(gens, repeat=3):
        left = compose(compose(a, b), c)
        right = compose(a, compose(b, c))
        disp = onepoint_space.dmat[left.forward, right.forward]
        assert disp.max() <= tol
        assert np.max(np.abs(left.weight - right.weight)) < 1e-12


def test_weight_one_preserves_sup_norm(product_space, rotation_group):
    rng = np.random.default_rng(5)
    for w in rotation_group.words()[:6]:
        f = rng.uniform(-2, 2, size=product_space.n)
        assert np.max(np.abs(w.apply(f))) == np.max(np.abs(f))


def test_operator_validation_rejects_bad_roundtrip(line_space):
    n = line_space.n
    fwd = np.arange(n)
    bwd = np.roll(np.arange(n), 50)  # displaces everything by 0.5
    with pytest.raises(ValueError, match="round trip"):
        rl.WeightedComposition(line_space, np.ones(n), fwd, bwd)


def test_sot_constant_sequence_passes(product_space, rotation_group):
    g = rotation_group.generators[0]
    verdict = check_sot_convergence([g] * 6, g, list(product_space.exhaustion), 1e-6)
    assert verdict.converges
    assert all(c.passed for c in verdict.conditions)


def test_sot_constant_weighted_sequence_passes(onepoint_space):
    g = onepoint_swap(onepoint_space, 5)
    verdict = check_sot_convergence([g] * 4, g, list(onepoint_space.exhaustion), 1e-9)
    assert verdict.converges


@pytest.mark.parametrize("n_max", [3, 6, 12])
def test_sot_remark25_conditions_at_every_stage(n_max):
    sp = rl.builtin_space("remark25", n_max=n_max)
    seq = remark25_sequence(sp)
    verdict = check_sot_convergence(seq, identity(sp), list(sp.exhaustion[:-1]), 0.3)
    cond = {c.name: c for c in verdict.conditions}
    assert cond["phi_uniform"].passed
    assert cond["weight_uniform"].passed
    assert not cond["inverse_images"].passed
    assert cond["inverse_images"].witness is not None
    assert not verdict.converges


def test_sot_remark25_explicit_function(remark_space):
    x = (np.asarray(remark_space.aux["first"]) == 0).astype(float)
    for g in remark25_sequence(remark_space):
        assert np.max(np.abs(g.apply(x) - x)) == 1.0


def test_sot_shrinking_rotations_pass():
    circ = rl.builtin_space("circle", count=64)
    seq = [circle_rotation(circ, steps=max(0, 8 - n)) for n in range(1, 13)]
    verdict = check_sot_convergence(seq, identity(circ), list(circ.exhaustion), 0.05)
    assert verdict.converges
    assert verdict.moreover_applicable


def test_equicontinuity_isometries_delta_equals_eps():
    circ = rl.builtin_space("circle", count=32)
    fam = [circle_rotation(circ, steps=s) for s in range(1, 6)]
    rep = check_local_equicontinuity(fam, circ.top_exhaustion, (0.5, 0.25, 0.1))
    assert rep.equicontinuous
    for eps, delta in rep.table:
        assert delta >= eps - 1e-12


def test_equicontinuity_translations_on_line(line_space):
    fam = [line_translation(line_space, c) for c in (-1.0, -0.5, 0.5, 1.0)]
    K = line_space.compact(range(600, 1400), "mid")  # away from the clamped edges
    rep = check_local_equicontinuity(fam, K, (0.5, 0.25, 0.1), space=line_space)
    assert rep.equicontinuous
    for eps, delta in rep.table:
        assert delta >= eps - 1e-12


def test_equicontinuity_remark25_inverse_family_fails(remark_space):
    seq = remark25_sequence(remark_space)
    tail = [remark_space.index(f"(0,{i})") for i in range(3, 51)]
    tail.append(remark_space.index("(0,inf)"))
    rep = check_local_equicontinuity(
        [g.backward for g in seq], remark_space.compact(tail, "tail"),
        (0.5,), space=remark_space,
    )
    assert not rep.equicontinuous
    eps, (member, s, t) = rep.witnesses[0]
    assert eps == 0.5
    # the witness pair is re-checkable
    g = seq[member]
    si, ti = remark_space.index(s), remark_space.index(t)
    assert remark_space.d(int(g.backward[si]), int(g.backward[ti])) >= 0.5


def test_pointwise_lemma_rotations():
    circ = rl.builtin_space("circle", count=64)
    G = rl.GroupSpec((circle_rotation(circ, steps=8),), word_cap=4)
    seq = [circle_rotation(circ, steps=max(0, 8 - 2 * n)) for n in range(1, 10)]
    rep = pointwise_implies_sot(G, seq, identity(circ), eps=0.05)
    assert rep["pointwise"] and rep["sot"] and rep["equivalence_held"]


def test_pointwise_lemma_constant_sequence(product_space, rotation_group):
    g = rotation_group.generators[0]
    rep = pointwise_implies_sot(rotation_group, [g] * 5, g, eps=1e-6)
    assert rep["pointwise"] and rep["sot"] and rep["equivalence_held"]


def test_pointwise_lemma_remark25_precondition_error():
    sp = rl.builtin_space("remark25", n_max=12)
    seq = remark25_sequence(sp)
    G = rl.GroupSpec(tuple(seq[:4]), word_cap=1)
    with pytest.raises(ValueError, match="not locally equicontinuous"):
        pointwise_implies_sot(G, seq, identity(sp), eps=0.05)


def test_word_enumeration_deterministic(onepoint_space):
    g1 = onepoint_swap_group(onepoint_space, word_cap=2, count=6)
    g2 = onepoint_swap_group(onepoint_space, word_cap=2, count=6)
    w1 = [w.key() for w in g1.words()]
    w2 = [w.key() for w in g2.words()]
    assert w1 == w2
    assert len(w1) == 1 + 6 + 15  # identity, swaps, unordered pairs


def test_lift_acts_on_one_factor(product_space):
    circ, seg = product_space.aux["a"], product_space.aux["b"]
    rot = circle_rotation(circ, steps=4)
    lifted = lift(rot, product_space, "left")
    nb = seg.n
    for ia in (0, 5):
        for ib in (0, 3):
            assert lifted.forward[ia * nb + ib] == ((ia + 4) % circ.n) * nb + ib
    flip = lift(interval_flip(seg), product_space, "right")
    assert flip.forward[0 * nb + 0] == 0 * nb + (nb - 1)


def test_unbounded_weight_rejected(line_space):
    n = line_space.n
    idx = np.arange(n)
    with pytest.raises(ValueError, match="positive and finite"):
        rl.WeightedComposition(line_space, np.full(n, np.inf), idx, idx)
