"""Synthetic bitexts with planted non-compositional compounds.

Generation algorithm (``random.Random(seed)``, Python's Mersenne Twister):

1. Source content words are ``s0000 .. s{n-1}``, target words ``t0000 ..``.
   The lexicon maps source word i to target word i (bijective) or, for the
   many-to-one variant, to target word ``i // 2``.
2. Planted NCCs take the first ``2 * planted`` source words, paired as
   (s0000, s0001), (s0002, s0003), ...; NCC k translates to the fresh target
   word ``n{k:04d}``.  Gapped NCCs take a filler ``f0`` between their parts,
   translated to nothing.
3. Each segment draws its length uniformly from ``[min_length, max_length]``
   units.  A unit is a planted NCC with probability ``ncc_rate`` (NCC chosen
   uniformly), otherwise one content word drawn uniformly.
4. Target units are the translations of the source units, shuffled.  Each
   target word is then replaced, with probability ``noise``, by a uniformly
   drawn target word.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from .corpus import Bitext, bitext_from_segments, save_bitext

FILLER = "f0"


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    vocab_size: int = 1000
    segment_count: int = 5000
    min_length: int = 4
    max_length: int = 10
    planted: int = 20
    ncc_rate: float = 0.1
    noise: float = 0.0
    lexicon: str = "bijective"
    gapped: int = 0
    seed: int = 0
    planted_pairs: tuple[tuple[int, int], ...] | None = None

    def pairs(self) -> list[tuple[int, int]]:
        if self.planted_pairs is not None:
            return list(self.planted_pairs)
        return [(2 * k, 2 * k + 1) for k in range(self.planted)]

    def validate(self) -> None:
        pairs = self.pairs()
        words = [w for p in pairs for w in p]
        if len(set(words)) != len(words):
            raise SpecError("planted NCCs must not share words")
        if any(not 0 <= w < self.vocab_size for w in words):
            raise SpecError("planted NCC words must come from the content vocabulary")
        if not 1 <= self.min_length <= self.max_length:
            raise SpecError("need 1 <= min_length <= max_length")
        if not 0 <= self.noise <= 1 or not 0 <= self.ncc_rate <= 1:
            raise SpecError("rates must lie in [0, 1]")
        if self.lexicon not in ("bijective", "many_to_one"):
            raise SpecError(f"unknown lexicon {self.lexicon!r}")
        if self.gapped > len(pairs):
            raise SpecError("more gapped NCCs than planted NCCs")


@dataclass(frozen=True)
class PlantedNcc:
    x: str
    y: str
    translation: str
    gapped: bool = False

    @property
    def surface(self) -> str:
        return f"{self.x}_{FILLER}_{self.y}" if self.gapped else f"{self.x}_{self.y}"


def _src(i: int) -> str:
    return f"s{i:04d}"


def generate(spec: GeneratorSpec) -> tuple[Bitext, list[PlantedNcc]]:
    spec.validate()
    rng = random.Random(spec.seed)
    if spec.lexicon == "bijective":
        lex = {i: f"t{i:04d}" for i in range(spec.vocab_size)}
    else:
        lex = {i: f"t{i // 2:04d}" for i in range(spec.vocab_size)}
    target_words = sorted(set(lex.values()))
    planted = [
        PlantedNcc(_src(a), _src(b), f"n{k:04d}", k < spec.gapped)
        for k, (a, b) in enumerate(spec.pairs())
    ]
    target_words += [p.translation for p in planted]
    segments = []
    for _ in range(spec.segment_count):
        length = rng.randint(spec.min_length, spec.max_length)
        src: list[str] = []
        tgt: list[str] = []
        for _ in range(length):
            if planted and rng.random() < spec.ncc_rate:
                p = planted[rng.randrange(len(planted))]
                src += [p.x, FILLER, p.y] if p.gapped else [p.x, p.y]
                tgt.append(p.translation)
            else:
                w = rng.randrange(spec.vocab_size)
                src.append(_src(w))
                tgt.append(lex[w])
        rng.shuffle(tgt)
        tgt = [rng.choice(target_words) if rng.random() < spec.noise else w for w in tgt]
        segments.append((src, tgt))
    return bitext_from_segments(segments), planted


def ground_truth_tsv(planted: list[PlantedNcc]) -> str:
    return "surface_form\ttranslation\n" + "".join(
        f"{p.surface}\t{p.translation}\n" for p in planted
    )


def write_corpus(bitext: Bitext, planted: list[PlantedNcc], out_dir: str | Path) -> None:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    save_bitext(bitext, out / "source.txt", out / "target.txt")
    (out / "truth.tsv").write_text(ground_truth_tsv(planted), encoding="utf-8")
