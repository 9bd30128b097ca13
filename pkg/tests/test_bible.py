import random
from collections import Counter

import pytest
from hypothesis import given, settings, strategies as st

from nccfind.bible import BACKWARD, FORWARD, BibleScore, Translator, evaluate
from nccfind.corpus import SOURCE, TARGET, Vocabulary, bitext_from_segments, fuse_side
from nccfind.linker import ModelError, TranslationModel, induce_model
from nccfind.synthgen import GeneratorSpec, generate


def test_fused_model_translates_perfectly(bs_bitext):
    model, _ = induce_model(fuse_side(bs_bitext, SOURCE, ["balance_sheet"]))
    score = evaluate(model, bs_bitext, ["balance_sheet"], FORWARD)
    assert (score.a, score.b, score.c) == (3, 3, 3)
    assert score.f == 1.0
    back = evaluate(model, bs_bitext, [], BACKWARD)
    # bilan -> balance_sheet -> "balance sheet"
    assert (back.a, back.b, back.c) == (4, 4, 4)


def test_self_translation_is_perfect():
    bitext, _ = generate(GeneratorSpec(segment_count=300, vocab_size=50, planted=0))
    model, _ = induce_model(bitext)
    for direction in (FORWARD, BACKWARD):
        score = evaluate(model, bitext, [], direction)
        assert score.precision == score.recall == 1.0


def test_constant_output_model_cannot_cheat():
    bitext, _ = generate(GeneratorSpec(segment_count=300, vocab_size=50, planted=0, noise=0.1))
    freq = Counter(w for seg in bitext.surfaces(TARGET) for w in seg)
    top = min(freq, key=lambda w: (-freq[w], w))
    sv, tv = Vocabulary(), Vocabulary()
    counts = {(sv.intern(s), tv.intern(top)): 1.0 for s in (tok.surface for tok in bitext.source_vocab)}
    model = TranslationModel(counts, sv, tv)
    score = evaluate(model, bitext, [], FORWARD)
    expected = sum(min(len(s), r.count(top)) for s, r in zip(bitext.surfaces(SOURCE), bitext.surfaces(TARGET)))
    assert score.c == expected
    assert score.recall <= freq[top] / score.b


def test_direction_errors(bs_bitext):
    model, _ = induce_model(bs_bitext)
    with pytest.raises(ValueError):
        evaluate(model, bs_bitext, [], "sideways")
    with pytest.raises(ModelError):
        evaluate(model.transpose(), bs_bitext, [], FORWARD)


def test_unknown_words():
    sv, tv = Vocabulary(), Vocabulary()
    model = TranslationModel({(sv.intern("a"), tv.intern("x")): 1.0}, sv, tv)
    tr = Translator(model)
    assert tr.translate(["a", "b", "a_b"]) == ["x", "b", "x", "b"]


def test_order_independence():
    bitext, _ = generate(GeneratorSpec(segment_count=200, vocab_size=40, planted=3, noise=0.1))
    model, _ = induce_model(bitext)
    order = list(range(len(bitext)))
    random.Random(1).shuffle(order)
    shuffled = bitext.subset(order)
    assert evaluate(model, bitext, [], FORWARD) == evaluate(model, shuffled, [], FORWARD)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(
    st.lists(st.sampled_from("abcd"), min_size=1, max_size=5),
    st.lists(st.sampled_from("wxyz"), min_size=1, max_size=5),
), min_size=1, max_size=6))
def test_bounds(segs):
    b = bitext_from_segments(segs)
    model, _ = induce_model(b)
    for direction in (FORWARD, BACKWARD):
        s = evaluate(model, b, [], direction)
        assert 0 <= s.precision <= 1 and 0 <= s.recall <= 1 and 0 <= s.f <= 1
        assert s.c <= min(s.a, s.b)


def test_zero_denominators():
    s = BibleScore(0, 0, 0)
    assert s.precision == s.recall == s.f == 0.0
