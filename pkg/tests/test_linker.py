import math
import random

import pytest

from nccfind.corpus import SOURCE, bitext_from_segments, fuse_side
from nccfind.linker import ModelError, conditional, induce_model, load_model
from nccfind.objectives import mutual_information, objective_v, predictive_value_i


def random_bitext(rng, n=12):
    words_s = [f"s{i}" for i in range(6)]
    words_t = [f"t{i}" for i in range(6)]
    return bitext_from_segments([
        (
            [rng.choice(words_s) for _ in range(rng.randint(1, 5))],
            [rng.choice(words_t) for _ in range(rng.randint(1, 5))],
        )
        for _ in range(n)
    ])


def test_unfused_model(bs_bitext):
    model, _ = induce_model(bs_bitext)
    joint = model.surface_joint()
    assert joint == pytest.approx({
        ("balance", "équilibre"): 1 / 3,
        ("sheet", "feuille"): 1 / 3,
        ("balance", "bilan"): 1 / 6,
        ("sheet", "bilan"): 1 / 6,
    }, abs=1e-12)
    s = model.source_vocab.id_of("balance")
    t = model.target_vocab.id_of("bilan")
    assert conditional(model, t, s) == pytest.approx(1 / 3, abs=1e-12)


def test_fused_model(bs_bitext):
    model, _ = induce_model(fuse_side(bs_bitext, SOURCE, ["balance_sheet"]))
    assert sorted(model.joint.values()) == pytest.approx([1 / 3] * 3, abs=1e-12)
    s = model.source_vocab.id_of("balance_sheet")
    t = model.target_vocab.id_of("bilan")
    assert conditional(model, t, s) == pytest.approx(1.0)


def test_single_pair():
    model, records = induce_model(bitext_from_segments([(["a"], ["x"])]))
    assert model.surface_joint() == {("a", "x"): 1.0}
    assert len(records) == 1


def test_unseen_source_is_an_error(bs_bitext):
    model, _ = induce_model(bs_bitext)
    with pytest.raises(ModelError):
        conditional(model, 0, 99)


def test_empty_bitext():
    with pytest.raises(ModelError):
        induce_model(bitext_from_segments([]))


@pytest.mark.parametrize("seed", range(10))
def test_model_invariants(seed):
    b = random_bitext(random.Random(seed))
    model, records = induce_model(b)
    assert math.fsum(model.joint.values()) == pytest.approx(1.0, abs=1e-12)
    for s in model.marginal_s:
        assert math.fsum(conditional(model, t, s) for t in model.row(s)) == pytest.approx(1.0, abs=1e-12)
        assert model.marginal_s[s] == pytest.approx(math.fsum(model.row(s).values()), abs=1e-12)
    assert all(p > 0 for p in model.joint.values())
    # competitive linking links until the shorter side runs out
    assert model.total_links == pytest.approx(sum(min(len(p.source), len(p.target)) for p in b.pairs))
    assert math.fsum(r.weight for r in records) == pytest.approx(model.total_links)
    for r in records:
        assert b.pairs[r.segment].source[r.source_position] == r.source_token


@pytest.mark.parametrize("seed", range(5))
def test_scale_invariance(seed):
    b = random_bitext(random.Random(seed))
    doubled = bitext_from_segments([(s, t) for s, t in zip(b.surfaces("source"), b.surfaces("target"))] * 2)
    m1, _ = induce_model(b)
    m2, _ = induce_model(doubled)
    j1, j2 = m1.surface_joint(), m2.surface_joint()
    assert j1.keys() == j2.keys()
    for k in j1:
        assert j1[k] == pytest.approx(j2[k], abs=1e-12)
    assert mutual_information(m1) == pytest.approx(mutual_information(m2), abs=1e-12)
    assert objective_v(m1)[0] == pytest.approx(objective_v(m2)[0], abs=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_role_symmetry(seed):
    b = random_bitext(random.Random(seed))
    m, _ = induce_model(b)
    mt, _ = induce_model(b.swapped())
    flipped = {(t, s): p for (s, t), p in m.surface_joint().items()}
    got = mt.surface_joint()
    assert flipped.keys() == got.keys()
    for k in got:
        assert got[k] == pytest.approx(flipped[k], abs=1e-12)


def test_worker_count_does_not_change_model():
    b = random_bitext(random.Random(7), n=60)
    m1, r1 = induce_model(b, workers=1)
    m3, r3 = induce_model(b, workers=3)
    assert m1.dump() == m3.dump()
    assert r1 == r3


def test_dump_round_trip(tmp_path, bs_bitext):
    model, _ = induce_model(bs_bitext)
    model.save(tmp_path / "m.tsv")
    again = load_model(tmp_path / "m.tsv")
    assert again.dump() == model.dump()
    assert predictive_value_i(again).total == pytest.approx(predictive_value_i(model).total, abs=1e-12)
