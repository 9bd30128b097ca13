"""Candidate NCC generation and a priori credit estimation.

A candidate is an ordered pair of tokens ``x ... y`` that are adjacent or
separated by one or two function words.  Its credit is estimated from the
base model alone by splitting the link mass of x by whether x's right context
is y (and the link mass of y by whether its left context is x).
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .corpus import FunctionWordSet, Vocabulary, is_punctuation
from .linker import LinkRecord, TranslationModel
from .objectives import I, PredictiveValueTable, dist_information, dist_value

_EPS = 1e-12
# credits within this of zero are rounding noise, not evidence
DELTA_TOL = 1e-12


def gap_label(gap: int) -> str:
    return "adjacent" if gap == 0 else f"gap{gap}"


@dataclass(frozen=True)
class NccCandidate:
    x: int
    y: int
    gap: int = 0
    frequency: int = 0
    delta_hat: float = 0.0
    delta_right: float = 0.0
    delta_left: float = 0.0
    nested: bool = False
    filler: tuple[int, ...] | None = None

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.x, self.y, self.gap)

    @property
    def words(self) -> frozenset[int]:
        return frozenset((self.x, self.y))


@dataclass
class ContextStats:
    """Link masses of x and y split by context, as joint probabilities."""

    dist_x_with: dict[int, float] = field(default_factory=dict)
    dist_x_without: dict[int, float] = field(default_factory=dict)
    dist_y_with: dict[int, float] = field(default_factory=dict)
    dist_y_without: dict[int, float] = field(default_factory=dict)
    cooccurrence_count: int = 0


# -- candidate generation -----------------------------------------------------


def _right_contexts(seg: Sequence[int], i: int, function_words: FunctionWordSet, max_gap: int):
    """Yield (y, gap) for every token reachable to the right of position i."""
    n = len(seg)
    if i + 1 < n:
        yield seg[i + 1], 0
    for k in range(1, max_gap + 1):
        j = i + k
        if j + 1 >= n or seg[j] not in function_words:
            break
        yield seg[j + 1], k


def _left_contexts(seg: Sequence[int], i: int, function_words: FunctionWordSet, max_gap: int):
    if i - 1 >= 0:
        yield seg[i - 1], 0
    for k in range(1, max_gap + 1):
        j = i - k
        if j - 1 < 0 or seg[j] not in function_words:
            break
        yield seg[j - 1], k


class _Eligibility:
    def __init__(self, vocab: Vocabulary, function_words: FunctionWordSet):
        self.vocab = vocab
        self.function_words = function_words
        self._punct: dict[int, bool] = {}

    def punct(self, t: int) -> bool:
        p = self._punct.get(t)
        if p is None:
            p = self._punct[t] = is_punctuation(self.vocab.surface(t))
        return p

    def ok(self, x: int, y: int, gap: int) -> bool:
        if self.punct(x) or self.punct(y):
            return False
        # x's right neighbour in the text is its gap filler, not its true context
        if self.vocab[x].has_gap:
            return False
        fx, fy = x in self.function_words, y in self.function_words
        if gap:
            return not fx and not fy
        return not (fx and fy)


def generate_candidates(
    segments: Sequence[Sequence[int]],
    vocab: Vocabulary,
    function_words: FunctionWordSet,
    stop_list: Iterable[tuple[str, str]] = (),
    phi: int = 2,
    max_gap: int = 2,
) -> list[NccCandidate]:
    """All (x, y, gap) patterns with frequency >= phi that are not stopped.

    ``stop_list`` holds (x surface, y surface) bigrams; a stopped bigram is
    excluded under every gap pattern.
    """
    if phi < 1:
        raise ValueError("phi must be >= 1")
    elig = _Eligibility(vocab, function_words)
    counts: Counter = Counter()
    for seg in segments:
        for i, x in enumerate(seg):
            for y, k in _right_contexts(seg, i, function_words, max_gap):
                counts[(x, y, k)] += 1
    stopped = {(vocab.get(a), vocab.get(b)) for a, b in stop_list}
    out = []
    for (x, y, k), c in counts.items():
        if c < phi or (x, y) in stopped or not elig.ok(x, y, k):
            continue
        out.append(NccCandidate(x, y, k, c, nested=vocab[y].has_gap))
    out.sort(key=lambda c: (vocab.surface(c.x), vocab.surface(c.y), c.gap))
    return out


# -- context statistics -------------------------------------------------------


def collect_context_stats(
    links: Iterable[LinkRecord],
    segments: Sequence[Sequence[int]],
    candidates: Sequence[NccCandidate],
    function_words: FunctionWordSet,
    max_gap: int = 2,
) -> dict[tuple[int, int, int], ContextStats]:
    """One streamed pass over the link records for a whole batch of candidates."""
    by_x: dict[int, set] = defaultdict(set)
    by_y: dict[int, set] = defaultdict(set)
    same: dict[int, set] = defaultdict(set)
    for c in candidates:
        if c.x == c.y:
            same[c.x].add(c.gap)
        else:
            by_x[c.x].add((c.y, c.gap))
            by_y[c.y].add((c.x, c.gap))
    full: dict[int, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    with_x: dict[tuple, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    with_y: dict[tuple, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    either: dict[tuple, dict[int, float]] = defaultdict(lambda: defaultdict(float))
    total = 0.0
    watched = set(by_x) | set(by_y) | set(same)
    for r in links:
        total += r.weight
        s = r.source_token
        if s not in watched:
            continue
        seg = segments[r.segment]
        i = r.source_position
        full[s][r.target_token] += r.weight
        rc = set(_right_contexts(seg, i, function_words, max_gap))
        lc = set(_left_contexts(seg, i, function_words, max_gap))
        for key in by_x.get(s, ()):
            if key in rc:
                with_x[(s, key[0], key[1])][r.target_token] += r.weight
        for key in by_y.get(s, ()):
            if key in lc:
                with_y[(key[0], s, key[1])][r.target_token] += r.weight
        for k in same.get(s, ()):
            in_rc, in_lc = (s, k) in rc, (s, k) in lc
            if in_rc:
                with_x[(s, s, k)][r.target_token] += r.weight
            if in_lc:
                with_y[(s, s, k)][r.target_token] += r.weight
            if in_rc or in_lc:
                either[(s, s, k)][r.target_token] += r.weight

    def norm(d: Mapping[int, float]) -> dict[int, float]:
        return {t: m / total for t, m in sorted(d.items()) if m > _EPS}

    def minus(a: Mapping[int, float], b: Mapping[int, float]) -> dict[int, float]:
        out = {}
        for t in sorted(a):
            m = a[t] - b.get(t, 0.0)
            if m > _EPS * max(1.0, a[t]):
                out[t] = m / total
        return out

    stats = {}
    for c in candidates:
        key = c.key
        wx, wy = with_x.get(key, {}), with_y.get(key, {})
        if c.x == c.y:
            rest = minus(full.get(c.x, {}), either.get(key, {}))
            stats[key] = ContextStats(norm(wx), rest, norm(wy), rest, c.frequency)
        else:
            stats[key] = ContextStats(
                norm(wx),
                minus(full.get(c.x, {}), wx),
                norm(wy),
                minus(full.get(c.y, {}), wy),
                c.frequency,
            )
    return stats


def context_stats(
    links: Iterable[LinkRecord],
    segments: Sequence[Sequence[int]],
    candidate: NccCandidate,
    function_words: FunctionWordSet,
    vocab: Vocabulary | None = None,
    max_gap: int = 2,
) -> ContextStats:
    if vocab is not None and (candidate.x >= len(vocab) or candidate.y >= len(vocab)):
        raise KeyError("candidate tokens are not in the vocabulary")
    return collect_context_stats(links, segments, [candidate], function_words, max_gap)[candidate.key]


# -- credit estimates ---------------------------------------------------------


def estimate_delta_i(
    model: TranslationModel, pv: PredictiveValueTable, stats: ContextStats, candidate: NccCandidate
) -> tuple[float, float, float]:
    mt = model.marginal_t
    ix = pv.values.get(candidate.x, 0.0)
    right = -ix + dist_information(stats.dist_x_without, mt) + dist_information(stats.dist_x_with, mt)
    if candidate.x == candidate.y:
        # x's leftover tokens are already counted on the right
        left = dist_information(stats.dist_y_with, mt)
    else:
        iy = pv.values.get(candidate.y, 0.0)
        left = -iy + dist_information(stats.dist_y_without, mt) + dist_information(stats.dist_y_with, mt)
    return right + left, right, left


def estimate_delta_v(
    model: TranslationModel, pv: PredictiveValueTable, stats: ContextStats, candidate: NccCandidate
) -> tuple[float, float, float]:
    vx_with = dist_value(stats.dist_x_with, model)
    vy_with = dist_value(stats.dist_y_with, model)
    # the fused token takes the more valuable of the two conditioned translations
    joint_value = max(vx_with, vy_with)
    right = dist_value(stats.dist_x_without, model) - pv.values.get(candidate.x, 0.0)
    if candidate.x == candidate.y:
        left = 0.0
    else:
        left = dist_value(stats.dist_y_without, model) - pv.values.get(candidate.y, 0.0)
    if vx_with >= vy_with:
        right += joint_value
    else:
        left += joint_value
    return right + left, right, left


def estimate(
    model: TranslationModel,
    pv: PredictiveValueTable,
    stats: Mapping[tuple[int, int, int], ContextStats],
    candidates: Sequence[NccCandidate],
) -> list[NccCandidate]:
    est = estimate_delta_i if pv.kind == I else estimate_delta_v
    out = []
    for c in candidates:
        d, r, l = est(model, pv, stats[c.key], c)
        out.append(replace(c, delta_hat=d, delta_right=r, delta_left=l))
    return out


def rank(candidates: Iterable[NccCandidate], vocab: Vocabulary) -> list[NccCandidate]:
    return sorted(
        candidates,
        key=lambda c: (-c.delta_hat, -c.frequency, vocab.surface(c.x), vocab.surface(c.y), c.gap),
    )


def mutual_exclusion_filter(candidates: Iterable[NccCandidate]) -> list[NccCandidate]:
    """Keep a candidate only if neither word is in a candidate kept before it."""
    used: set[int] = set()
    kept = []
    for c in candidates:
        if c.x in used or c.y in used:
            continue
        kept.append(c)
        used.update((c.x, c.y))
    return kept


def propose(
    model: TranslationModel,
    pv: PredictiveValueTable,
    links: Sequence[LinkRecord],
    segments: Sequence[Sequence[int]],
    vocab: Vocabulary,
    function_words: FunctionWordSet,
    stop_list: Iterable[tuple[str, str]] = (),
    phi: int = 2,
    max_gap: int = 2,
) -> tuple[list[NccCandidate], list[NccCandidate]]:
    """Generate, estimate, rank and filter.  Returns (filtered, all positive)."""
    cands = generate_candidates(segments, vocab, function_words, stop_list, phi, max_gap)
    stats = collect_context_stats(links, segments, cands, function_words, max_gap)
    scored = [c for c in estimate(model, pv, stats, cands) if c.delta_hat > DELTA_TOL]
    ranked = rank(scored, vocab)
    return mutual_exclusion_filter(ranked), ranked


def candidate_report(candidates: Iterable[NccCandidate], vocab: Vocabulary) -> str:
    lines = ["x\ty\tgap\tfrequency\tdelta_hat\tdelta_right\tdelta_left\n"]
    for c in candidates:
        gap = gap_label(c.gap) + ("+nested" if c.nested else "")
        lines.append(
            f"{vocab.surface(c.x)}\t{vocab.surface(c.y)}\t{gap}\t{c.frequency}\t"
            f"{c.delta_hat:.12g}\t{c.delta_right:.12g}\t{c.delta_left:.12g}\n"
        )
    return "".join(lines)
