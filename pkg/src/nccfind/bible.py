"""Bitext-based lexicon evaluation (BiBLE) of bag-of-words translation."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .corpus import SOURCE, TARGET, Bitext, defuse, fuse_side
from .linker import ModelError, TranslationModel
from .objectives import argmax_translation

FORWARD = "forward"
BACKWARD = "backward"


@dataclass(frozen=True)
class BibleScore:
    a: int
    b: int
    c: int

    @property
    def precision(self) -> float:
        return self.c / self.a if self.a else 0.0

    @property
    def recall(self) -> float:
        return self.c / self.b if self.b else 0.0

    @property
    def f(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0


class Translator:
    """Word-by-word translation by each source word's most likely target."""

    def __init__(self, model: TranslationModel):
        self.model = model
        self._cache: dict[str, tuple[str, ...]] = {}

    def translate_word(self, surface: str) -> tuple[str, ...]:
        out = self._cache.get(surface)
        if out is not None:
            return out
        model = self.model
        s = model.source_vocab.get(surface)
        if s is not None and s in model.rows:
            t = argmax_translation(model.rows[s], model)
            out = defuse(model.target_vocab.surface(t))
        else:
            parts = defuse(surface)
            if len(parts) > 1:
                # an NCC the model never saw: fall back to its components
                out = tuple(w for p in parts for w in self.translate_word(p))
            else:
                out = (surface,)
        self._cache[surface] = out
        return out

    def translate(self, words: Sequence[str]) -> list[str]:
        return [w for s in words for w in self.translate_word(s)]


def evaluate(
    model: TranslationModel,
    test: Bitext,
    nccs: Sequence = (),
    direction: str = FORWARD,
    max_gap: int = 2,
) -> BibleScore:
    """Translate one half of ``test`` and score it against the other half.

    ``nccs`` are the NCCs of the half being translated; they are fused into
    it before translation.  The reference half is used as given.
    """
    if direction not in (FORWARD, BACKWARD):
        raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")
    expected = ("source", "target") if direction == FORWARD else ("target", "source")
    if model.orientation != ("source", "target"):
        raise ModelError(f"model oriented {model.orientation}, cannot translate {direction}")
    src_side, ref_side = (SOURCE, TARGET) if direction == FORWARD else (TARGET, SOURCE)
    oriented = model if expected == ("source", "target") else model.transpose()
    fused = fuse_side(test, src_side, nccs, max_gap) if nccs else test
    translator = Translator(oriented)
    a = b = c = 0
    for src, ref in zip(fused.surfaces(src_side), test.surfaces(ref_side)):
        hyp = translator.translate(src)
        a += len(hyp)
        b += len(ref)
        # each reference word can credit at most one proposed word
        c += sum((Counter(hyp) & Counter(ref)).values())
    return BibleScore(a, b, c)


def score_row(iteration: int | str, direction: str, score: BibleScore) -> str:
    return (
        f"{iteration}\t{direction}\t{score.a}\t{score.b}\t{score.c}\t"
        f"{score.precision:.12g}\t{score.recall:.12g}\t{score.f:.12g}\n"
    )


SCORE_HEADER = "iteration\tdirection\ta\tb\tc\tprecision\trecall\tf\n"
