"""Symmetric translation model induction by competitive linking.

Each round links tokens inside every segment pair greedily by score and then
re-estimates the joint distribution as link count over total links.  The
first round scores a type pair by its Dice co-occurrence ratio, later rounds
by the current joint probability.

Pairs whose scores tie are not broken arbitrarily.  The tied pairs are
linked simultaneously at equal rate per token pair until one of their
endpoints runs out of capacity, so a target word that two source words
compete for equally is split between them.  This keeps the procedure
deterministic and symmetric in the two sides, and it is what makes the
segment "balance sheet" / "bilan" contribute half a link to each source word.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

from .corpus import Bitext, Vocabulary

_EPS = 1e-12


class ModelError(ValueError):
    pass


def score_key(score: float) -> float:
    """Scores equal to 12 significant digits count as tied."""
    return float(f"{score:.12g}")


@dataclass(frozen=True)
class LinkRecord:
    segment: int
    source_position: int
    source_token: int
    target_token: int
    weight: float = 1.0


class TranslationModel:
    """Joint distribution over linked (source id, target id) pairs."""

    def __init__(
        self,
        counts: dict[tuple[int, int], float],
        source_vocab: Vocabulary,
        target_vocab: Vocabulary,
        orientation: tuple[str, str] = ("source", "target"),
    ):
        self.counts = {k: v for k, v in counts.items() if v > _EPS}
        if not self.counts:
            raise ModelError("model has no links")
        self.source_vocab = source_vocab
        self.target_vocab = target_vocab
        self.orientation = orientation
        self.total_links = math.fsum(self.counts.values())
        self.joint = {k: c / self.total_links for k, c in self.counts.items()}
        by_s: dict[int, list[float]] = defaultdict(list)
        by_t: dict[int, list[float]] = defaultdict(list)
        rows: dict[int, dict[int, float]] = defaultdict(dict)
        for (s, t), p in sorted(self.joint.items()):
            by_s[s].append(p)
            by_t[t].append(p)
            rows[s][t] = p
        self.marginal_s = {s: math.fsum(v) for s, v in by_s.items()}
        self.marginal_t = {t: math.fsum(v) for t, v in by_t.items()}
        self.rows = dict(rows)

    def row(self, s: int) -> dict[int, float]:
        return self.rows.get(s, {})

    def transpose(self) -> "TranslationModel":
        flipped = {(t, s): c for (s, t), c in self.counts.items()}
        return TranslationModel(
            flipped, self.target_vocab, self.source_vocab, self.orientation[::-1]
        )

    def surface_joint(self) -> dict[tuple[str, str], float]:
        sv, tv = self.source_vocab, self.target_vocab
        return {(sv.surface(s), tv.surface(t)): p for (s, t), p in self.joint.items()}

    def dump(self) -> str:
        sv, tv = self.source_vocab, self.target_vocab
        rows = sorted(
            (sv.surface(s), tv.surface(t), c, self.joint[(s, t)])
            for (s, t), c in self.counts.items()
        )
        lines = ["s\tt\tcount\tprobability\n"]
        lines += [f"{s}\t{t}\t{c:.12g}\t{p:.12g}\n" for s, t, c, p in rows]
        return "".join(lines)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dump(), encoding="utf-8")


def load_model(path: str | Path) -> TranslationModel:
    sv, tv = Vocabulary(), Vocabulary()
    counts: dict[tuple[int, int], float] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header.startswith("s\tt"):
            raise ModelError(f"{path}: not a model dump")
        for lineno, line in enumerate(f, 2):
            fields = line.rstrip("\n").split("\t")
            if len(fields) != 4:
                raise ModelError(f"{path}:{lineno}: expected 4 columns")
            counts[(sv.intern(fields[0]), tv.intern(fields[1]))] = float(fields[2])
    return TranslationModel(counts, sv, tv)


def conditional(model: TranslationModel, t: int, s: int) -> float:
    ps = model.marginal_s.get(s)
    if not ps:
        raise ModelError(f"source token {s} is not in the model")
    return model.joint.get((s, t), 0.0) / ps


# -- phase 1: linking within one segment --------------------------------------


def link_segment(
    source: Sequence[int], target: Sequence[int], scores: Mapping[tuple[int, int], float]
) -> dict[tuple[int, int], float]:
    """Competitive linking over type counts with simultaneous tie resolution.

    ``scores`` maps a type pair to its ranking score, already rounded with
    :func:`score_key` so equal scores compare equal; missing pairs score 0.
    Returns the link mass per type pair; the total mass is
    min(len(source), len(target)).
    """
    cs = Counter(source)
    ct = Counter(target)
    get = scores.get
    ranked = sorted(((get((s, t), 0.0), s, t) for s in cs for t in ct), reverse=True)
    cap_s = {s: float(c) for s, c in cs.items()}
    cap_t = {t: float(c) for t, c in ct.items()}
    left_s, left_t = float(len(source)), float(len(target))
    links: dict[tuple[int, int], float] = {}
    i, n = 0, len(ranked)
    while i < n and left_s > _EPS and left_t > _EPS:
        key = ranked[i][0]
        j = i + 1
        while j < n and ranked[j][0] == key:
            j += 1
        pairs = [(s, t) for _, s, t in ranked[i:j] if cap_s[s] > 0 and cap_t[t] > 0]
        i = j
        if len(pairs) == 1:
            s, t = pairs[0]
            m = min(cap_s[s], cap_t[t])
            links[(s, t)] = links.get((s, t), 0.0) + m
            cap_s[s] -= m
            cap_t[t] -= m
            left_s -= m
            left_t -= m
            if cap_s[s] <= _EPS:
                cap_s[s] = 0.0
            if cap_t[t] <= _EPS:
                cap_t[t] = 0.0
            continue
        while pairs:
            # every tied token pair advances at rate 1
            drain_s: dict[int, int] = defaultdict(int)
            drain_t: dict[int, int] = defaultdict(int)
            for s, t in pairs:
                r = cs[s] * ct[t]
                drain_s[s] += r
                drain_t[t] += r
            tau = min(
                min(cap_s[s] / d for s, d in drain_s.items()),
                min(cap_t[t] / d for t, d in drain_t.items()),
            )
            for s, t in pairs:
                m = tau * (cs[s] * ct[t])
                links[(s, t)] = links.get((s, t), 0.0) + m
            for s, d in drain_s.items():
                cap_s[s] -= tau * d
                left_s -= tau * d
                if cap_s[s] <= _EPS:
                    cap_s[s] = 0.0
            for t, d in drain_t.items():
                cap_t[t] -= tau * d
                left_t -= tau * d
                if cap_t[t] <= _EPS:
                    cap_t[t] = 0.0
            pairs = [p for p in pairs if cap_s[p[0]] > 0 and cap_t[p[1]] > 0]
    return links


def _link_chunk(args) -> list[dict[tuple[int, int], float]]:
    segments, table = args
    return [link_segment(src, tgt, table) for src, tgt in segments]


def dice_table(segments: Sequence[tuple[Sequence[int], Sequence[int]]]) -> dict[tuple[int, int], float]:
    ns: Counter = Counter()
    nt: Counter = Counter()
    cooc: Counter = Counter()
    for src, tgt in segments:
        cs, ct = Counter(src), Counter(tgt)
        ns.update(cs)
        nt.update(ct)
        for s, a in cs.items():
            for t, b in ct.items():
                cooc[(s, t)] += min(a, b)
    return {(s, t): 2.0 * c / (ns[s] + nt[t]) for (s, t), c in cooc.items()}


def _link_all(segments, table, workers: int) -> list[dict[tuple[int, int], float]]:
    if workers <= 1 or len(segments) < 2 * workers:
        return _link_chunk((segments, table))
    size = math.ceil(len(segments) / workers)
    chunks = [segments[i:i + size] for i in range(0, len(segments), size)]
    # restrict each worker's score table to the pairs its chunk can use
    jobs = []
    for chunk in chunks:
        needed = {}
        for src, tgt in chunk:
            for s in set(src):
                for t in set(tgt):
                    v = table.get((s, t))
                    if v is not None:
                        needed[(s, t)] = v
        jobs.append((chunk, needed))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(_link_chunk, jobs))
    return [links for part in results for links in part]


def induce_model(
    bitext: Bitext, rounds: int = 3, workers: int = 1
) -> tuple[TranslationModel, list[LinkRecord]]:
    """Induce a translation model; returns it with the final round's links."""
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    segments = [(p.source, p.target) for p in bitext.pairs]
    if not segments:
        raise ModelError("cannot induce a model from an empty bitext")
    table = _keyed(dice_table(segments))
    per_segment: list[dict[tuple[int, int], float]] = []
    model = None
    for _ in range(rounds):
        per_segment = _link_all(segments, table, workers)
        counts: dict[tuple[int, int], float] = defaultdict(float)
        for links in per_segment:
            for pair, m in sorted(links.items()):
                counts[pair] += m
        model = TranslationModel(dict(counts), bitext.source_vocab, bitext.target_vocab)
        table = _keyed(model.joint)
    records = list(_records(bitext, per_segment))
    return model, records


def _keyed(table: dict[tuple[int, int], float]) -> dict[tuple[int, int], float]:
    return {k: score_key(v) for k, v in table.items()}


def _records(bitext: Bitext, per_segment) -> Iterator[LinkRecord]:
    for pair, links in zip(bitext.pairs, per_segment):
        positions: dict[int, list[int]] = defaultdict(list)
        for i, s in enumerate(pair.source):
            positions[s].append(i)
        for (s, t), m in sorted(links.items(), key=lambda kv: (positions[kv[0][0]][0], kv[0][1])):
            pos = positions[s]
            w = m / len(pos)
            for i in pos:
                yield LinkRecord(pair.index, i, s, t, w)


def dump_links(records: Iterable[LinkRecord], source_vocab: Vocabulary, target_vocab: Vocabulary) -> str:
    lines = ["segment\tposition\ts\tt\tweight\n"]
    for r in records:
        lines.append(
            f"{r.segment}\t{r.source_position}\t{source_vocab.surface(r.source_token)}\t"
            f"{target_vocab.surface(r.target_token)}\t{r.weight:.12g}\n"
        )
    return "".join(lines)
