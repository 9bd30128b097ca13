"""Objective functions over translation models and their per-word shares.

All values are in nats.  ``I`` is the mutual information of the joint
distribution; ``V`` keeps, for every source word, only the term of its most
likely translation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .linker import ModelError, TranslationModel

I = "I"
V = "V"
OBJECTIVES = (I, V)


def parse_objective(name: str) -> str:
    kind = name.strip().upper()
    if kind not in OBJECTIVES:
        raise ValueError(f"objective must be one of i, v (got {name!r})")
    return kind


@dataclass(frozen=True)
class PredictiveValueTable:
    kind: str
    values: dict[int, float]
    total: float

    def dump(self, model: TranslationModel) -> str:
        sv = model.source_vocab
        rows = sorted((sv.surface(s), v) for s, v in self.values.items())
        lines = ["s\tvalue_nats\n"]
        lines += [f"{s}\t{v:.12g}\n" for s, v in rows]
        lines.append(f"<TOTAL>\t{self.total:.12g}\n")
        return "".join(lines)


def info_term(p: float, p_s: float, p_t: float) -> float:
    if p <= 0.0:
        return 0.0
    return p * math.log(p / (p_s * p_t))


def dist_information(dist: Mapping[int, float], marginal_t: Mapping[int, float]) -> float:
    """sum_t d(t) log(d(t) / (D * Pr(t))) with D the total mass of ``dist``.

    This is i(s) when ``dist`` is the row of s, and the context-conditioned
    variants when ``dist`` is restricted to tokens in one context.
    """
    if not dist:
        return 0.0
    keys = sorted(dist)
    mass = math.fsum(dist[t] for t in keys)
    if mass <= 0.0:
        return 0.0
    total = 0.0
    for t in keys:
        total += info_term(dist[t], mass, marginal_t[t])
    return total


def argmax_translation(dist: Mapping[int, float], model: TranslationModel) -> int | None:
    """Most likely target in ``dist``; ties go to the more frequent target,
    then to the lexicographically smaller surface."""
    best = None
    best_key = None
    tv = model.target_vocab
    for t, p in dist.items():
        if p <= 0.0:
            continue
        key = (p, model.marginal_t[t])
        if best is None or key > best_key or (key == best_key and tv.surface(t) < tv.surface(best)):
            best, best_key = t, key
    return best


def dist_value(dist: Mapping[int, float], model: TranslationModel) -> float:
    """v-style value of a distribution: the information term of its argmax."""
    best = argmax_translation(dist, model)
    if best is None:
        return 0.0
    mass = math.fsum(dist[t] for t in sorted(dist))
    return info_term(dist[best], mass, model.marginal_t[best])


def mutual_information(model: TranslationModel) -> float:
    return predictive_value_i(model).total


def predictive_value_i(model: TranslationModel) -> PredictiveValueTable:
    values = {s: dist_information(model.rows[s], model.marginal_t) for s in sorted(model.rows)}
    total = 0.0
    for s in sorted(values):
        total += values[s]
    return PredictiveValueTable(I, values, total)


def most_likely_translation(model: TranslationModel, s: int) -> int:
    row = model.rows.get(s)
    if not row:
        raise ModelError(f"source token {s} is not in the model")
    return argmax_translation(row, model)


def predictive_value_v(model: TranslationModel) -> PredictiveValueTable:
    values = {s: dist_value(model.rows[s], model) for s in sorted(model.rows)}
    total = 0.0
    for s in sorted(values):
        total += values[s]
    return PredictiveValueTable(V, values, total)


def objective_v(model: TranslationModel) -> tuple[float, PredictiveValueTable]:
    table = predictive_value_v(model)
    return table.total, table


def predictive_values(model: TranslationModel, kind: str) -> PredictiveValueTable:
    return predictive_value_i(model) if kind == I else predictive_value_v(model)


def objective(model: TranslationModel, kind: str) -> float:
    return predictive_values(model, kind).total
