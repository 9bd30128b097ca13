import math
import random

import pytest

from nccfind.corpus import SOURCE, TARGET, FunctionWordSet, bitext_from_segments
from nccfind.discovery import (
    ConfigError,
    DiscoveryConfig,
    format_audit,
    fill_gaps,
    fuse_all,
    parse_ncc_list,
    run,
    write_outputs,
)
from nccfind.estimator import DELTA_TOL, NccCandidate, generate_candidates
from nccfind.objectives import objective
from nccfind.synthgen import GeneratorSpec, generate

LN2, LN3 = math.log(2), math.log(3)


def test_accepts_balance_sheet(bs_bitext):
    for kind in ("I", "V"):
        state, audit = run(bs_bitext, DiscoveryConfig(objective=kind, phi=1, top_k=0, max_iterations=1))
        [entry] = state.ncc_lists[SOURCE]
        assert entry.surface == "balance_sheet"
        assert entry.delta_actual == pytest.approx(LN3 - 2 / 3 * LN2, abs=1e-9)
        assert audit[0].proposed == audit[0].accepted == 1


def test_two_sided_balance_sheet(bs_bitext):
    state, audit = run(bs_bitext, DiscoveryConfig(phi=1, top_k=0, max_iterations=2, two_sided=True))
    assert [e.surface for e in state.ncc_lists[SOURCE]] == ["balance_sheet"]
    assert state.ncc_lists[TARGET] == []
    assert [(a.side, a.accepted) for a in audit] == [("E", 1), ("F", 0)]


def test_zero_iterations(bs_bitext):
    state, audit = run(bs_bitext, DiscoveryConfig(max_iterations=0))
    assert audit == [] and state.ncc_lists == {SOURCE: [], TARGET: []}


def test_config_errors(bs_bitext):
    for bad in (DiscoveryConfig(held_out_fraction=1.0), DiscoveryConfig(held_out_fraction=0),
                DiscoveryConfig(objective="W"), DiscoveryConfig(max_gap=3), DiscoveryConfig(phi=0)):
        with pytest.raises(ConfigError):
            run(bs_bitext, bad)


def test_bijective_corpus_accepts_nothing():
    bitext, _ = generate(GeneratorSpec(segment_count=500, vocab_size=100, planted=0))
    state, audit = run(bitext, DiscoveryConfig(top_k=0, max_gap=0, max_iterations=2))
    assert state.ncc_lists[SOURCE] == []
    assert sum(a.accepted for a in audit) == 0


def fw(vocab, *words):
    return FunctionWordSet(frozenset(vocab.id_of(w) for w in words))


def gapped_text(fillers):
    segs = [(["make", "up", f, "mind"], ["decide"]) for f in fillers]
    b = bitext_from_segments(segs)
    v = b.source_vocab
    c = NccCandidate(v.id_of("up"), v.id_of("mind"), 1, len(segs))
    return b, v, c, fw(v, *set(fillers))


def test_fill_gaps():
    b, v, c, f = gapped_text(["his"] * 3 + ["your"])
    assert [v.surface(t) for t in fill_gaps(c, b.side(SOURCE), v, f).filler] == ["his"]
    b, v, c, f = gapped_text(["his"])
    assert [v.surface(t) for t in fill_gaps(c, b.side(SOURCE), v, f).filler] == ["his"]
    b, v, c, f = gapped_text(["my", "your", "his", "her", "their"])
    assert fill_gaps(c, b.side(SOURCE), v, f).filler is None


def idiom_corpus(idiom=0.02, literal=0.2, seed=0, n=400):
    """An idiom on each side, translated by an idiom on the other side; each
    idiom word also occurs literally with its own translation."""
    rng = random.Random(seed)
    lit = {"kick": "frapper", "bucket": "seau", "break": "casser", "tube": "pipe"}
    segs = []
    for _ in range(n):
        src, tgt = [], []
        for _ in range(rng.randint(3, 7)):
            r = rng.random()
            if r < idiom:
                src += ["kick", "bucket"]
                tgt += ["casser", "pipe"]
            elif r < idiom + literal:
                w = rng.choice(sorted(lit))
                src.append(w)
                tgt.append(lit[w])
            else:
                w = rng.randrange(50)
                src.append(f"s{w}")
                tgt.append(f"t{w}")
        segs.append((src, tgt))
    return bitext_from_segments(segs)


@pytest.fixture(scope="module")
def idiom_run():
    b = idiom_corpus()
    config = DiscoveryConfig(two_sided=True, max_iterations=2, top_k=0, max_gap=0, phi=3, refresh=True)
    state, audit = run(b, config)
    return b, config, state, audit


def test_two_sided_links_fused_to_fused(idiom_run):
    _, _, state, _ = idiom_run
    assert [e.surface for e in state.ncc_lists[SOURCE]] == ["kick_bucket"]
    assert "casser_pipe" in [e.surface for e in state.ncc_lists[TARGET]]
    joint = state.final_model.surface_joint()
    best = max((p, t) for (s, t), p in joint.items() if s == "kick_bucket")
    assert best[1] == "casser_pipe"


def test_acceptance_soundness(idiom_run):
    _, _, state, _ = idiom_run
    by_surface = {}
    for a in state.archives:
        for r in a.tested:
            by_surface[(a.side, r.surface)] = (a, r)
    for side, label in ((SOURCE, "E"), (TARGET, "F")):
        for e in state.ncc_lists[side]:
            assert e.delta_actual > 0
            a, r = by_surface[(label, e.surface)]
            before = a.base_pv.get(r.x, 0) + a.base_pv.get(r.y, 0)
            after = a.trial_pv.get(r.x, 0) + a.trial_pv.get(r.y, 0) + a.trial_pv.get(r.surface, 0)
            assert after - before == pytest.approx(e.delta_actual, abs=1e-9)


def test_trial_bracketing(bs_bitext):
    # unrelated bijective segments: fusing balance_sheet leaves their values alone
    segs = [(s, t) for s, t in zip(bs_bitext.surfaces(SOURCE), bs_bitext.surfaces(TARGET))]
    segs += [([f"c{i}"], [f"z{i}"]) for i in range(4)] * 2
    b = bitext_from_segments(segs)
    for kind in ("I", "V"):
        state, _ = run(b, DiscoveryConfig(objective=kind, phi=1, top_k=0, max_iterations=1))
        [a] = state.archives
        assert [r.surface for r in a.tested] == ["balance_sheet"]
        total = objective(a.base_model, kind) + sum(r.delta_actual for r in a.tested)
        assert objective(a.trial_model, kind) == pytest.approx(total, abs=1e-6)


def test_audit_monotonicity(idiom_run):
    b, config, state, audit = idiom_run
    values = [a.objective_total for a in audit]
    final = objective(state.final_model, config.objective)
    # each side's objective is measured with its own orientation; I is symmetric
    assert all(later >= earlier - 1e-12 for earlier, later in zip(values, values[1:] + [final]))


@pytest.fixture(scope="module")
def noisy_run():
    bitext, _ = generate(GeneratorSpec(segment_count=800, vocab_size=200, planted=5, noise=0.05))
    config = DiscoveryConfig(top_k=0, max_gap=0, max_iterations=3)
    state, _ = run(bitext, config)
    return bitext, config, state


def test_stop_list_effectiveness(noisy_run):
    _, _, state = noisy_run
    stopped_at = state.stop_lists[SOURCE]
    assert stopped_at
    for a in state.archives:
        for r in a.tested:
            first = stopped_at.get((r.x, r.y))
            assert first is None or first >= a.iteration
    listed = {tuple(e.components) for e in state.ncc_lists[SOURCE]}
    assert not listed & set(stopped_at)
    assert all(e.delta_actual > DELTA_TOL for e in state.ncc_lists[SOURCE])


def test_stop_list_blocks_generation(noisy_run):
    b, config, state = noisy_run
    fused = fuse_all(b, state, config.max_gap)
    v = fused.source_vocab
    stopped = set(state.stop_lists[SOURCE])
    cands = generate_candidates(fused.side(SOURCE), v, FunctionWordSet(frozenset()), stopped, phi=1, max_gap=0)
    assert not any((v.surface(c.x), v.surface(c.y)) in stopped for c in cands)
    free = generate_candidates(fused.side(SOURCE), v, FunctionWordSet(frozenset()), (), phi=1, max_gap=0)
    assert len(free) > len(cands)


def test_held_out_stopping():
    bitext, _ = generate(GeneratorSpec(segment_count=800, vocab_size=200, planted=5, noise=0.05))
    state, audit = run(bitext, DiscoveryConfig(top_k=0, max_gap=0, max_iterations=3, held_out_fraction=0.1))
    h = state.held_out
    assert len(h) >= 2
    kept = h[:-1] if state.stopped_early else h
    assert all(b >= a for a, b in zip(kept, kept[1:]))


def test_outputs_round_trip(tmp_path, idiom_run):
    _, _, state, _ = idiom_run
    written = write_outputs(state, tmp_path)
    names = {p.relative_to(tmp_path).as_posix() for p in written}
    assert {"nccs.tsv", "stoplist.tsv", "audit.tsv", "final_model.tsv",
            "iter001/base_model.tsv", "iter001/candidates.tsv"} <= names
    parsed = parse_ncc_list((tmp_path / "nccs.tsv").read_text())
    assert [e.surface for e in parsed[SOURCE]] == ["kick_bucket"]
    assert {e.validated_at for e in parsed[TARGET]} == {2}
    assert format_audit(state.audit).count("\n") == 3
    with pytest.raises(ValueError):
        parse_ncc_list("surface_form\tside\nbalance_sheet\tX\n")
    with pytest.raises(ValueError):
        parse_ncc_list("surface_form\tside\nbalance\tE\n")
