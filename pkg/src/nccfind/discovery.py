"""Iterative NCC discovery by comparing base and trial translation models."""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import (
    SOURCE,
    TARGET,
    Bitext,
    FunctionWordSet,
    FusionPattern,
    derive_function_words,
    fuse_segments,
    fuse_side,
    render_surface,
)
from .estimator import DELTA_TOL, NccCandidate, candidate_report, gap_label, propose
from .linker import TranslationModel, induce_model
from .objectives import I, objective, predictive_values

logger = logging.getLogger(__name__)

SIDE_LABELS = {SOURCE: "E", TARGET: "F"}
LABEL_SIDES = {"E": SOURCE, "F": TARGET}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DiscoveryConfig:
    objective: str = I
    phi: int = 2
    max_iterations: int = 3
    two_sided: bool = False
    max_gap: int = 2
    function_words: str = "top_k"
    top_k: int = 100
    function_word_files: tuple[str | None, str | None] = (None, None)
    held_out_fraction: float | None = None
    rounds: int = 3
    workers: int = 1
    refresh: bool = False
    keep_models: bool = True

    def validate(self) -> None:
        if self.objective not in ("I", "V"):
            raise ConfigError(f"objective must be I or V, got {self.objective!r}")
        if self.phi < 1:
            raise ConfigError("phi must be >= 1")
        if self.max_iterations < 0:
            raise ConfigError("max_iterations must be >= 0")
        if not 0 <= self.max_gap <= 2:
            raise ConfigError("max_gap must be 0, 1 or 2")
        if self.held_out_fraction is not None and not 0 < self.held_out_fraction < 1:
            raise ConfigError("held-out fraction must lie strictly between 0 and 1")
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")


@dataclass(frozen=True)
class NccEntry:
    components: tuple[str, ...]
    side: str = SOURCE
    gap: str = "none"
    gap_index: int | None = None
    filler: tuple[str, ...] = ()
    validated_at: int = 0
    objective: str = I
    delta_actual: float = 0.0
    count: int = 0

    @property
    def surface(self) -> str:
        return render_surface(self.components, self.gap_index)

    @property
    def pattern(self) -> FusionPattern:
        parts: list[str | None] = list(self.components)
        if self.gap_index is not None:
            parts.insert(self.gap_index, None)
        return FusionPattern(tuple(parts))


@dataclass(frozen=True)
class AuditRecord:
    iteration: int
    side: str
    vocab_size: int
    proposed: int
    accepted: int
    objective_total: float

    @property
    def validation_rate(self) -> float:
        return self.accepted / self.proposed if self.proposed else 0.0


@dataclass
class TestedCandidate:
    candidate: NccCandidate
    x: str
    y: str
    surface: str
    delta_actual: float
    accepted: bool


@dataclass
class IterationArchive:
    iteration: int
    side: str
    base_model: TranslationModel | None
    trial_model: TranslationModel | None
    base_pv: dict[str, float]
    trial_pv: dict[str, float]
    tested: list[TestedCandidate]
    report: str


@dataclass
class DiscoveryState:
    iteration: int = 0
    side: str = SOURCE
    ncc_lists: dict[str, list[NccEntry]] = field(default_factory=lambda: {SOURCE: [], TARGET: []})
    stop_lists: dict[str, dict[tuple[str, str], int]] = field(
        default_factory=lambda: {SOURCE: {}, TARGET: {}}
    )
    audit: list[AuditRecord] = field(default_factory=list)
    archives: list[IterationArchive] = field(default_factory=list)
    held_out: list[float] = field(default_factory=list)
    final_model: TranslationModel | None = None
    stopped_early: bool = False

    def copy(self) -> "DiscoveryState":
        return DiscoveryState(
            self.iteration,
            self.side,
            {k: list(v) for k, v in self.ncc_lists.items()},
            {k: dict(v) for k, v in self.stop_lists.items()},
            list(self.audit),
            list(self.archives),
            list(self.held_out),
            self.final_model,
            self.stopped_early,
        )


# -- helpers ------------------------------------------------------------------


def function_word_sets(bitext: Bitext, config: DiscoveryConfig) -> dict[str, FunctionWordSet]:
    out = {}
    for side, path in zip((SOURCE, TARGET), config.function_word_files):
        if path is not None:
            out[side] = derive_function_words(bitext, side, "explicit_file", path=path)
        else:
            out[side] = derive_function_words(bitext, side, "top_k", k=config.top_k)
    return out


def fuse_all(bitext: Bitext, state: DiscoveryState, max_gap: int = 2) -> Bitext:
    out = bitext
    for side in (SOURCE, TARGET):
        if state.ncc_lists[side]:
            out = fuse_side(out, side, state.ncc_lists[side], max_gap)
    return out


def fill_gaps(
    candidate: NccCandidate, segments: Sequence[Sequence[int]], vocab, function_words
) -> NccCandidate:
    """Fix a gapped candidate's filler when the text shows at most three."""
    if not candidate.gap:
        return candidate
    fillers: Counter = Counter()
    k = candidate.gap
    for seg in segments:
        for i in range(len(seg) - k - 1):
            if seg[i] != candidate.x or seg[i + k + 1] != candidate.y:
                continue
            mid = tuple(seg[i + 1:i + k + 1])
            if all(t in function_words for t in mid):
                fillers[mid] += 1
    if not fillers or len(fillers) > 3:
        return candidate
    best = min(fillers, key=lambda f: (-fillers[f], [vocab.surface(t) for t in f]))
    return NccCandidate(
        candidate.x, candidate.y, candidate.gap, candidate.frequency,
        candidate.delta_hat, candidate.delta_right, candidate.delta_left,
        candidate.nested, best,
    )


def trial_pattern(candidate: NccCandidate, vocab) -> FusionPattern:
    x, y = vocab.surface(candidate.x), vocab.surface(candidate.y)
    if not candidate.gap:
        return FusionPattern((x, y))
    if candidate.filler is not None:
        return FusionPattern((x, *(vocab.surface(t) for t in candidate.filler), y))
    return FusionPattern((x, None, y))


def _oriented(bitext: Bitext, side: str) -> Bitext:
    return bitext if side == SOURCE else bitext.swapped()


def _canonical(model: TranslationModel, side: str) -> TranslationModel:
    return model if side == SOURCE else model.transpose()


def _surface_pv(pv, vocab) -> dict[str, float]:
    return {vocab.surface(s): v for s, v in pv.values.items()}


# -- the algorithm ------------------------------------------------------------


def run_iteration(
    state: DiscoveryState,
    bitext: Bitext,
    config: DiscoveryConfig,
    function_words: dict[str, FunctionWordSet] | None = None,
) -> DiscoveryState:
    """One pass of: fuse, induce base, propose, fill gaps, fuse trial, induce
    trial, validate.  Returns a new state."""
    if function_words is None:
        function_words = function_word_sets(bitext, config)
    state = state.copy()
    side = state.side
    iteration = state.iteration + 1
    fw = function_words[side]

    working = _oriented(fuse_all(bitext, state, config.max_gap), side)
    segments = working.side(SOURCE)
    vocab = working.source_vocab
    base, links = induce_model(working, config.rounds, config.workers)
    pv = predictive_values(base, config.objective)

    filtered, _ = propose(
        base, pv, links, segments, vocab, fw,
        state.stop_lists[side].keys(), config.phi, config.max_gap,
    )
    tested: list[NccCandidate] = []
    for c in filtered:
        c = fill_gaps(c, segments, vocab, fw)
        pattern = trial_pattern(c, vocab)
        try:
            pattern.validate()
        except ValueError:
            logger.debug("dropping %s: would carry two gaps", pattern.parts)
            continue
        tested.append(c)

    patterns = [trial_pattern(c, vocab) for c in tested]
    records: list[TestedCandidate] = []
    accepted: list[NccEntry] = []
    trial = None
    trial_pv_values: dict[str, float] = {}
    if tested:
        trial_segs, trial_vocab, fused_counts = fuse_segments(segments, vocab, patterns, config.max_gap)
        trial_text = working.with_side(SOURCE, trial_segs, trial_vocab)
        trial, _ = induce_model(trial_text, config.rounds, config.workers)
        tpv = predictive_values(trial, config.objective)
        trial_pv_values = _surface_pv(tpv, trial_vocab)
        for c, pattern in zip(tested, patterns):
            xy = pattern.surface
            xy_id = trial_vocab.get(xy)
            after = tpv.values.get(c.x, 0.0) + tpv.values.get(xy_id, 0.0)
            before = pv.values.get(c.x, 0.0)
            if c.y != c.x:
                after += tpv.values.get(c.y, 0.0)
                before += pv.values.get(c.y, 0.0)
            delta = after - before
            ok = delta > DELTA_TOL and fused_counts[xy] > 0
            x_s, y_s = vocab.surface(c.x), vocab.surface(c.y)
            records.append(TestedCandidate(c, x_s, y_s, xy, delta, ok))
            if ok:
                comps, gap_index = pattern.components()
                if gap_index is not None:
                    gap = "retained"
                elif c.gap:
                    gap = "filled"
                else:
                    gap = "none"
                filler = tuple(vocab.surface(t) for t in c.filler) if c.filler else ()
                accepted.append(NccEntry(
                    comps, side, gap, gap_index, filler, iteration,
                    config.objective, delta, fused_counts[xy],
                ))
            else:
                state.stop_lists[side].setdefault((x_s, y_s), iteration)

    state.ncc_lists[side].extend(accepted)
    state.audit.append(AuditRecord(
        iteration, SIDE_LABELS[side], len({t for seg in segments for t in seg}),
        len(tested), len(accepted), pv.total,
    ))
    if config.keep_models:
        state.archives.append(IterationArchive(
            iteration, SIDE_LABELS[side], _canonical(base, side),
            _canonical(trial, side) if trial is not None else None,
            _surface_pv(pv, vocab), trial_pv_values, records,
            candidate_report(tested, vocab),
        ))
    logger.info(
        "iteration %d (%s): proposed %d, accepted %d, objective %.6f",
        iteration, SIDE_LABELS[side], len(tested), len(accepted), pv.total,
    )
    state.iteration = iteration
    if config.two_sided:
        state.side = TARGET if side == SOURCE else SOURCE
    return state


def split_held_out(bitext: Bitext, fraction: float) -> tuple[Bitext, Bitext]:
    """First (1 - fraction) of the segments for training, the rest held out."""
    n = len(bitext)
    cut = n - max(1, round(n * fraction))
    if cut < 1:
        raise ConfigError("held-out split leaves no training data")
    return bitext.subset(range(cut)), bitext.subset(range(cut, n))


def held_out_objective(held: Bitext, state: DiscoveryState, config: DiscoveryConfig) -> float:
    model, _ = induce_model(fuse_all(held, state, config.max_gap), config.rounds, config.workers)
    return objective(model, config.objective)


def run(bitext: Bitext, config: DiscoveryConfig) -> tuple[DiscoveryState, list[AuditRecord]]:
    config.validate()
    held = None
    train = bitext
    if config.held_out_fraction is not None:
        train, held = split_held_out(bitext, config.held_out_fraction)
    function_words = function_word_sets(train, config)
    state = DiscoveryState()
    if held is not None:
        state.held_out.append(held_out_objective(held, state, config))
    for _ in range(config.max_iterations):
        nxt = run_iteration(state, train, config, function_words)
        if held is not None:
            score = held_out_objective(held, nxt, config)
            if score < state.held_out[-1]:
                logger.info("held-out objective fell to %.6f; stopping", score)
                state.audit = nxt.audit
                state.archives = nxt.archives
                state.held_out.append(score)
                state.stopped_early = True
                break
            nxt.held_out.append(score)
        state = nxt
    if config.refresh:
        model, _ = induce_model(fuse_all(train, state, config.max_gap), config.rounds, config.workers)
        state.final_model = model
    return state, state.audit


def base_models(state: DiscoveryState) -> list[TranslationModel]:
    """Models numbered by how many iterations of NCCs they know about."""
    models = [a.base_model for a in state.archives if a.base_model is not None]
    if state.final_model is not None:
        models.append(state.final_model)
    return models


# -- file formats -------------------------------------------------------------


def format_ncc_list(state: DiscoveryState) -> str:
    lines = ["surface_form\tside\titeration\tdelta_actual_nats\tcount\n"]
    for side in (SOURCE, TARGET):
        for e in state.ncc_lists[side]:
            lines.append(
                f"{e.surface}\t{SIDE_LABELS[side]}\t{e.validated_at}\t{e.delta_actual:.12g}\t{e.count}\n"
            )
    return "".join(lines)


def parse_ncc_list(text: str) -> dict[str, list[NccEntry]]:
    from .corpus import parse_surface

    out: dict[str, list[NccEntry]] = {SOURCE: [], TARGET: []}
    lines = text.splitlines()
    if lines and lines[0].startswith("surface_form"):
        lines = lines[1:]
    for lineno, line in enumerate(lines, 2):
        if not line.strip():
            continue
        fields = line.split("\t")
        if len(fields) < 2 or fields[1] not in LABEL_SIDES:
            raise ValueError(f"NCC list line {lineno}: expected surface<TAB>side[...]")
        comps, gap_index = parse_surface(fields[0])
        if not comps:
            raise ValueError(f"NCC list line {lineno}: {fields[0]!r} is not a fused surface")
        try:
            iteration = int(fields[2]) if len(fields) > 2 else 0
            delta = float(fields[3]) if len(fields) > 3 else 0.0
            count = int(fields[4]) if len(fields) > 4 else 0
        except ValueError:
            raise ValueError(f"NCC list line {lineno}: malformed numeric field") from None
        side = LABEL_SIDES[fields[1]]
        gap = "retained" if gap_index is not None else "none"
        out[side].append(NccEntry(comps, side, gap, gap_index, (), iteration, I, delta, count))
    return out


def format_stop_list(state: DiscoveryState) -> str:
    lines = ["x\ty\tside\titeration\n"]
    for side in (SOURCE, TARGET):
        for (x, y), it in state.stop_lists[side].items():
            lines.append(f"{x}\t{y}\t{SIDE_LABELS[side]}\t{it}\n")
    return "".join(lines)


def format_audit(audit: Sequence[AuditRecord]) -> str:
    lines = ["iteration\tside\tvocab_size\tproposed\taccepted\tobjective_total_nats\n"]
    for a in audit:
        lines.append(
            f"{a.iteration}\t{a.side}\t{a.vocab_size}\t{a.proposed}\t{a.accepted}\t{a.objective_total:.12g}\n"
        )
    return "".join(lines)


def format_tested(archive: IterationArchive) -> str:
    lines = ["x\ty\tgap\tfused\tdelta_hat\tdelta_actual\taccepted\n"]
    for r in archive.tested:
        lines.append(
            f"{r.x}\t{r.y}\t{gap_label(r.candidate.gap)}\t{r.surface}\t"
            f"{r.candidate.delta_hat:.12g}\t{r.delta_actual:.12g}\t{int(r.accepted)}\n"
        )
    return "".join(lines)


def write_outputs(state: DiscoveryState, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    def put(name: str, text: str) -> None:
        p = out / name
        p.write_text(text, encoding="utf-8")
        written.append(p)

    put("nccs.tsv", format_ncc_list(state))
    put("stoplist.tsv", format_stop_list(state))
    put("audit.tsv", format_audit(state.audit))
    if state.held_out:
        put("heldout.tsv", "iteration\tobjective_nats\n" + "".join(
            f"{k}\t{v:.12g}\n" for k, v in enumerate(state.held_out)
        ))
    for a in state.archives:
        d = f"iter{a.iteration:03d}"
        (out / d).mkdir(exist_ok=True)
        if a.base_model is not None:
            put(f"{d}/base_model.tsv", a.base_model.dump())
        if a.trial_model is not None:
            put(f"{d}/trial_model.tsv", a.trial_model.dump())
        put(f"{d}/candidates.tsv", a.report)
        put(f"{d}/tested.tsv", format_tested(a))
    if state.final_model is not None:
        put("final_model.tsv", state.final_model.dump())
    return written
