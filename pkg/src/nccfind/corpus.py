"""Parallel data ingestion, vocabularies and NCC fusion.

Segments are stored as tuples of integer token ids.  Vocabularies are
append-only: fusing NCCs into a side produces a new vocabulary that extends
the old one, so every id that existed before fusion keeps its meaning.
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)

GAP = "<GAP>"
JOIN = "_"

SOURCE = "source"
TARGET = "target"
SIDES = (SOURCE, TARGET)

WORD = "word"
CHARACTER = "character"

_PUNCT_SPLIT = re.compile(r"\w+(?:['\-]\w+)*|[^\w\s]")


class CorpusError(ValueError):
    pass


class AlignmentError(CorpusError):
    pass


class ParseError(CorpusError):
    pass


class FusionError(CorpusError):
    pass


@dataclass(frozen=True)
class Token:
    id: int
    surface: str
    components: tuple[str, ...] = ()
    gap_index: int | None = None

    @property
    def kind(self) -> str:
        return "fused" if self.components else "plain"

    @property
    def has_gap(self) -> bool:
        return self.gap_index is not None


def render_surface(components: Sequence[str], gap_index: int | None = None) -> str:
    parts = list(components)
    if gap_index is not None:
        parts.insert(gap_index, GAP)
    return JOIN.join(parts)


def parse_surface(surface: str) -> tuple[tuple[str, ...], int | None]:
    """Split a surface into (components, gap_index).

    Plain surfaces return ``((), None)``.  A surface counts as fused when it
    splits on ``_`` into at least two non-empty parts besides the gap marker.
    """
    if JOIN not in surface:
        return (), None
    parts = surface.split(JOIN)
    if any(not p for p in parts):
        return (), None
    gap_index = None
    comps: list[str] = []
    for p in parts:
        if p == GAP:
            if gap_index is not None:
                return (), None
            gap_index = len(comps)
        else:
            comps.append(p)
    if len(comps) < 2:
        return (), None
    if gap_index is not None and not 0 < gap_index < len(comps):
        return (), None
    return tuple(comps), gap_index


def is_punctuation(surface: str) -> bool:
    return bool(surface) and all(unicodedata.category(ch).startswith("P") for ch in surface)


class Vocabulary:
    """Injective surface <-> id map.  Treat as immutable once shared."""

    def __init__(self, surfaces: Iterable[str] = ()):
        self._tokens: list[Token] = []
        self._ids: dict[str, int] = {}
        for s in surfaces:
            self.intern(s)

    def intern(self, surface: str) -> int:
        tid = self._ids.get(surface)
        if tid is None:
            tid = len(self._tokens)
            comps, gap = parse_surface(surface)
            self._tokens.append(Token(tid, surface, comps, gap))
            self._ids[surface] = tid
        return tid

    def copy(self) -> "Vocabulary":
        new = Vocabulary.__new__(Vocabulary)
        new._tokens = list(self._tokens)
        new._ids = dict(self._ids)
        return new

    def id_of(self, surface: str) -> int:
        try:
            return self._ids[surface]
        except KeyError:
            raise KeyError(f"unknown token {surface!r}") from None

    def get(self, surface: str) -> int | None:
        return self._ids.get(surface)

    def surface(self, tid: int) -> str:
        return self._tokens[tid].surface

    def __getitem__(self, tid: int) -> Token:
        return self._tokens[tid]

    def __contains__(self, surface: object) -> bool:
        return surface in self._ids

    def __len__(self) -> int:
        return len(self._tokens)

    def __iter__(self):
        return iter(self._tokens)


@dataclass(frozen=True)
class SegmentPair:
    index: int
    source: tuple[int, ...]
    target: tuple[int, ...]


@dataclass(frozen=True)
class IngestionReport:
    read: int = 0
    dropped: int = 0
    dropped_lines: tuple[int, ...] = ()


@dataclass(frozen=True)
class Bitext:
    pairs: tuple[SegmentPair, ...]
    source_vocab: Vocabulary
    target_vocab: Vocabulary
    mode: str = WORD
    report: IngestionReport = field(default_factory=IngestionReport, compare=False)

    def __len__(self) -> int:
        return len(self.pairs)

    def vocab(self, side: str) -> Vocabulary:
        return self.source_vocab if side == SOURCE else self.target_vocab

    def side(self, side: str) -> list[tuple[int, ...]]:
        if side == SOURCE:
            return [p.source for p in self.pairs]
        return [p.target for p in self.pairs]

    def surfaces(self, side: str) -> list[list[str]]:
        vocab = self.vocab(side)
        return [[vocab.surface(t) for t in seg] for seg in self.side(side)]

    def swapped(self) -> "Bitext":
        pairs = tuple(SegmentPair(p.index, p.target, p.source) for p in self.pairs)
        return Bitext(pairs, self.target_vocab, self.source_vocab, self.mode, self.report)

    def subset(self, indices: Iterable[int]) -> "Bitext":
        pairs = tuple(
            SegmentPair(k, self.pairs[i].source, self.pairs[i].target)
            for k, i in enumerate(indices)
        )
        return Bitext(pairs, self.source_vocab, self.target_vocab, self.mode)

    def used_types(self, side: str) -> int:
        return len({t for seg in self.side(side) for t in seg})

    def with_side(self, side: str, segments: Sequence[tuple[int, ...]], vocab: Vocabulary) -> "Bitext":
        if side == SOURCE:
            pairs = tuple(SegmentPair(p.index, s, p.target) for p, s in zip(self.pairs, segments))
            return Bitext(pairs, vocab, self.target_vocab, self.mode, self.report)
        pairs = tuple(SegmentPair(p.index, p.source, s) for p, s in zip(self.pairs, segments))
        return Bitext(pairs, self.source_vocab, vocab, self.mode, self.report)


def tokenize(line: str, *, pretokenized: bool = False, lowercase: bool = False) -> list[str]:
    """Whitespace tokenization with punctuation detached.

    Chunks that already look like fused tokens are kept whole so fused text
    can be read back.  ``pretokenized`` splits on whitespace only, for
    externally stemmed or otherwise preprocessed input.
    """
    if lowercase:
        line = line.lower()
    chunks = line.split()
    if pretokenized:
        return chunks
    out: list[str] = []
    for chunk in chunks:
        if parse_surface(chunk)[0]:
            out.append(chunk)
        else:
            out.extend(_PUNCT_SPLIT.findall(chunk))
    return out


def _read_lines(path: str | Path) -> list[str]:
    text = Path(path).read_text(encoding="utf-8")
    return text.splitlines()


def bitext_from_segments(
    segments: Iterable[tuple[Sequence[str], Sequence[str]]], mode: str = WORD
) -> Bitext:
    """Build a bitext from pre-tokenized (source, target) surface lists."""
    svocab, tvocab = Vocabulary(), Vocabulary()
    pairs = []
    dropped = []
    read = 0
    for lineno, (src, tgt) in enumerate(segments, 1):
        read += 1
        if not src or not tgt:
            dropped.append(lineno)
            continue
        pairs.append(
            SegmentPair(
                len(pairs),
                tuple(svocab.intern(w) for w in src),
                tuple(tvocab.intern(w) for w in tgt),
            )
        )
    if dropped:
        logger.info("dropped %d empty segment pairs", len(dropped))
    report = IngestionReport(read, len(dropped), tuple(dropped))
    return Bitext(tuple(pairs), svocab, tvocab, mode, report)


def parse_dictionary_row(line: str, lineno: int) -> tuple[list[str], list[str]]:
    if "\t" in line:
        spelling, _, phones = line.partition("\t")
    else:
        spelling, _, phones = line.strip().partition(" ")
    spelling = spelling.strip()
    phonemes = phones.split()
    if not spelling or not phonemes or any(ch.isspace() for ch in spelling):
        raise ParseError(f"row {lineno}: expected 'spelling<TAB>phoneme ...', got {line!r}")
    return list(spelling), phonemes


def load_bitext(
    source_path: str | Path,
    target_path: str | Path | None = None,
    mode: str = WORD,
    *,
    pretokenized: bool = False,
    lowercase: bool = False,
) -> Bitext:
    """Load a word-mode bitext (two line-aligned files) or a character-mode
    pronunciation dictionary (one two-column file)."""
    if mode == CHARACTER:
        rows = []
        for lineno, line in enumerate(_read_lines(source_path), 1):
            if not line.strip():
                continue
            rows.append(parse_dictionary_row(line, lineno))
        return bitext_from_segments(rows, CHARACTER)
    if mode != WORD:
        raise CorpusError(f"unknown mode {mode!r}")
    if target_path is None:
        raise CorpusError("word mode needs a source and a target file")
    src_lines = _read_lines(source_path)
    tgt_lines = _read_lines(target_path)
    if len(src_lines) != len(tgt_lines):
        first = min(len(src_lines), len(tgt_lines)) + 1
        raise AlignmentError(
            f"line counts differ ({len(src_lines)} vs {len(tgt_lines)}); "
            f"first unmatched line is {first}"
        )
    kw = dict(pretokenized=pretokenized, lowercase=lowercase)
    return bitext_from_segments(
        ((tokenize(s, **kw), tokenize(t, **kw)) for s, t in zip(src_lines, tgt_lines)), WORD
    )


def serialize_side(bitext: Bitext, side: str) -> str:
    return "".join(" ".join(seg) + "\n" for seg in bitext.surfaces(side))


def serialize_dictionary(bitext: Bitext) -> str:
    lines = []
    for src, tgt in zip(bitext.surfaces(SOURCE), bitext.surfaces(TARGET)):
        if any(len(ch) != 1 for ch in src):
            raise CorpusError("dictionary format needs single-letter source tokens")
        lines.append("".join(src) + "\t" + " ".join(tgt) + "\n")
    return "".join(lines)


def save_bitext(bitext: Bitext, source_path: str | Path, target_path: str | Path | None = None) -> None:
    if bitext.mode == CHARACTER and target_path is None:
        Path(source_path).write_text(serialize_dictionary(bitext), encoding="utf-8")
        return
    Path(source_path).write_text(serialize_side(bitext, SOURCE), encoding="utf-8")
    Path(target_path).write_text(serialize_side(bitext, TARGET), encoding="utf-8")


# -- function words -----------------------------------------------------------


@dataclass(frozen=True)
class FunctionWordSet:
    members: frozenset[int]
    warnings: tuple[str, ...] = ()

    def __contains__(self, tid: object) -> bool:
        return tid in self.members

    def __len__(self) -> int:
        return len(self.members)


def top_k_function_words(bitext: Bitext, side: str, k: int) -> FunctionWordSet:
    if k < 0:
        raise ValueError("k must be >= 0")
    if k == 0:
        return FunctionWordSet(frozenset())
    vocab = bitext.vocab(side)
    freq = Counter(t for seg in bitext.side(side) for t in seg)
    ranked = sorted(
        (t for t in freq if not is_punctuation(vocab.surface(t))),
        key=lambda t: (-freq[t], vocab.surface(t)),
    )
    return FunctionWordSet(frozenset(ranked[:k]))


def function_words_from_file(bitext: Bitext, side: str, path: str | Path) -> FunctionWordSet:
    vocab = bitext.vocab(side)
    members, warnings = set(), []
    for line in _read_lines(path):
        w = line.strip()
        if not w:
            continue
        tid = vocab.get(w)
        if tid is None:
            warnings.append(f"function word {w!r} not in {side} vocabulary; skipped")
        else:
            members.add(tid)
    for w in warnings:
        logger.warning(w)
    return FunctionWordSet(frozenset(members), tuple(warnings))


def derive_function_words(
    bitext: Bitext, side: str, policy: str = "top_k", *, k: int = 100, path: str | Path | None = None
) -> FunctionWordSet:
    if policy == "top_k":
        return top_k_function_words(bitext, side, k)
    if policy == "explicit_file":
        if path is None:
            raise ValueError("explicit_file policy needs a path")
        return function_words_from_file(bitext, side, path)
    raise ValueError(f"unknown function word policy {policy!r}")


# -- fusion -------------------------------------------------------------------


@dataclass(frozen=True)
class FusionPattern:
    """A sequence of surfaces to fuse; ``None`` marks a retained gap.

    Parts are matched against token surfaces of the text being fused, so a
    part may itself be a fused surface.  The resulting token's components are
    the parts' components flattened in order.
    """

    parts: tuple[str | None, ...]

    @classmethod
    def from_surface(cls, surface: str) -> "FusionPattern":
        comps, gap = parse_surface(surface)
        if not comps:
            raise FusionError(f"{surface!r} is not a fused surface")
        parts: list[str | None] = list(comps)
        if gap is not None:
            parts.insert(gap, None)
        return cls(tuple(parts))

    @property
    def has_gap(self) -> bool:
        return None in self.parts

    @property
    def length(self) -> int:
        return sum(1 for p in self.parts if p is not None)

    def components(self) -> tuple[tuple[str, ...], int | None]:
        comps: list[str] = []
        gap = None
        for p in self.parts:
            if p is None:
                gap = len(comps)
                continue
            sub, sub_gap = parse_surface(p)
            if sub:
                if sub_gap is not None:
                    gap = len(comps) + sub_gap
                comps.extend(sub)
            else:
                comps.append(p)
        return tuple(comps), gap

    @property
    def surface(self) -> str:
        comps, gap = self.components()
        return render_surface(comps, gap)

    def validate(self) -> None:
        if self.length < 2:
            raise FusionError(f"NCC {self.parts!r} needs at least two words")
        gaps = [i for i, p in enumerate(self.parts) if p is None]
        comps, gap = self.components()
        nested = sum(1 for p in self.parts if p is not None and parse_surface(p)[1] is not None)
        if len(gaps) + nested > 1:
            raise FusionError(f"NCC {self.surface!r} has more than one gap")
        if gaps and (gaps[0] == 0 or gaps[0] == len(self.parts) - 1):
            raise FusionError(f"NCC {self.parts!r} has a gap at its edge")


def _sort_patterns(patterns: Iterable[FusionPattern]) -> list[FusionPattern]:
    # longest first; at equal length a gapless pattern beats a gapped one
    return sorted(patterns, key=lambda p: (-p.length, p.has_gap, [x or "" for x in p.parts]))


def validate_patterns(patterns: Sequence[FusionPattern]) -> list[FusionPattern]:
    seen = set()
    for p in patterns:
        p.validate()
        if p.parts in seen:
            raise FusionError(f"NCC {p.surface!r} is defined more than once")
        seen.add(p.parts)
    return _sort_patterns(patterns)


class Fuser:
    """Leftmost-first, longest-first fusion of a fixed pattern list."""

    def __init__(self, patterns: Sequence[FusionPattern], max_gap: int = 2):
        self.patterns = validate_patterns(patterns)
        self.max_gap = max_gap
        self._by_first: dict[str, list[FusionPattern]] = {}
        for p in self.patterns:
            self._by_first.setdefault(p.parts[0], []).append(p)

    def _match(self, pat: FusionPattern, words: Sequence[str], i: int):
        """Return (end, word_positions, filler_positions) or None."""
        pos = i
        used: list[int] = []
        fillers: list[int] = []
        parts = pat.parts
        k = 0
        while k < len(parts):
            part = parts[k]
            if part is None:
                # gap: the shortest filler run (1..max_gap) that lets the rest match
                rest = FusionPattern(parts[k + 1:])
                for width in range(1, self.max_gap + 1):
                    sub = self._match(rest, words, pos + width)
                    if sub is not None:
                        end, sub_used, sub_fill = sub
                        return end, used + sub_used, fillers + list(range(pos, pos + width)) + sub_fill
                return None
            if pos >= len(words) or words[pos] != part:
                return None
            used.append(pos)
            pos += 1
            k += 1
        return pos, used, fillers

    def fuse_words(self, words: Sequence[str]) -> list[tuple[str, tuple[str, ...], int | None] | str]:
        """Fuse one segment given as surfaces.

        Returns a list whose items are plain surfaces or
        ``(fused_surface, components, gap_index)`` tuples.
        """
        out: list = []
        i = 0
        n = len(words)
        while i < n:
            cands = self._by_first.get(words[i])
            hit = None
            if cands:
                for pat in cands:
                    m = self._match(pat, words, i)
                    if m is not None:
                        hit = (pat, m)
                        break
            if hit is None:
                out.append(words[i])
                i += 1
                continue
            pat, (end, _used, fillers) = hit
            comps, gap = pat.components()
            out.append((render_surface(comps, gap), comps, gap))
            out.extend(words[f] for f in fillers)
            i = end
        return out


def fuse_segments(
    segments: Sequence[tuple[int, ...]],
    vocab: Vocabulary,
    patterns: Sequence[FusionPattern],
    max_gap: int = 2,
) -> tuple[list[tuple[int, ...]], Vocabulary, Counter]:
    """Fuse ``patterns`` into id segments.  Returns (segments, extended vocab,
    occurrence count per fused surface)."""
    if not patterns:
        return list(segments), vocab, Counter()
    fuser = Fuser(patterns, max_gap)
    new_vocab = vocab.copy()
    firsts = set(fuser._by_first)
    counts: Counter = Counter()
    out = []
    for seg in segments:
        words = [vocab.surface(t) for t in seg]
        if firsts.isdisjoint(words):
            out.append(seg)
            continue
        fused = []
        for item in fuser.fuse_words(words):
            if isinstance(item, tuple):
                counts[item[0]] += 1
                fused.append(new_vocab.intern(item[0]))
            else:
                fused.append(new_vocab.intern(item))
        out.append(tuple(fused))
    return out, new_vocab, counts


def fuse_side(bitext: Bitext, side: str, nccs: Sequence, max_gap: int = 2) -> Bitext:
    """Replace every occurrence of each NCC on one side with a fused token.

    ``nccs`` items may be NCC entries (anything with a ``pattern`` attribute),
    :class:`FusionPattern` objects or fused surfaces such as
    ``"make_up_<GAP>_mind"``.
    """
    patterns = [as_pattern(n) for n in nccs]
    if not patterns:
        return bitext
    segs, vocab, _ = fuse_segments(bitext.side(side), bitext.vocab(side), patterns, max_gap)
    return bitext.with_side(side, segs, vocab)


def as_pattern(ncc) -> FusionPattern:
    if isinstance(ncc, FusionPattern):
        return ncc
    if isinstance(ncc, str):
        return FusionPattern.from_surface(ncc)
    return ncc.pattern


def defuse(token: Token | str) -> tuple[str, ...]:
    surface = token.surface if isinstance(token, Token) else token
    comps, _ = parse_surface(surface)
    return comps if comps else (surface,)


def defuse_sequence(tokens: Iterable[Token | str]) -> list[str]:
    return [w for tok in tokens for w in defuse(tok)]
