"""MLCAD 2023 macro-placement contest scoring arithmetic.

Per design: score = runtime score * place-and-route hours * routability,
where the runtime score penalizes macro placement beyond 10 minutes, and
routability adds an initial congestion score to the detailed router's
outer iteration count. The contest aggregate is a weighted mean of
squared scores with hidden benchmarks weighted 140/38. Lower is better.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .fileio import MetricsRecord
from .model import ValidationError

HIDDEN_WEIGHT = 140.0 / 38.0


@dataclass(frozen=True)
class DesignScore:
    design: str
    t_mp_score: float
    t_pr: float
    sr_i: float
    sr_f: int
    routability: float
    score: float


def runtime_score(t_mp: float) -> float:
    """1 + max(0, minutes - 10): no reward below the 10-minute budget,
    linear penalty above it."""
    if t_mp < 0:
        raise ValidationError("macro placement runtime must be >= 0")
    return 1.0 + max(0.0, t_mp - 10.0)


def init_routing_score(l_short: Sequence[float], l_global: Sequence[float]) -> float:
    """1 + sum of squared exceedances over level 3, for the short and
    global congestion levels in the four directions."""
    if len(l_short) != 4 or len(l_global) != 4:
        raise ValidationError("congestion levels need exactly 4 directions")
    total = 1.0
    for v in l_short:
        total += max(0.0, v - 3.0) ** 2
    for v in l_global:
        total += max(0.0, v - 3.0) ** 2
    return total


def design_score(record: MetricsRecord) -> DesignScore:
    """Full per-design score from a metrics record (t_pr in hours)."""
    if record.dri < 1:
        raise ValidationError(f"{record.design}: dri must be >= 1")
    sr_i = init_routing_score(record.l_short, record.l_global)
    sr_f = record.dri
    rho = sr_i + sr_f
    t = runtime_score(record.t_mp)
    return DesignScore(
        design=record.design,
        t_mp_score=t,
        t_pr=record.t_pr,
        sr_i=sr_i,
        sr_f=sr_f,
        routability=rho,
        score=t * record.t_pr * rho,
    )


def weighted_final(scores: Sequence[float], hidden: Sequence[bool], hidden_weight: float = HIDDEN_WEIGHT) -> float:
    """Weighted mean of squared scores; hidden designs carry the
    public/hidden count ratio as weight."""
    if len(scores) == 0:
        raise ValidationError("weighted score of an empty list")
    if len(scores) != len(hidden):
        raise ValidationError("scores and hidden flags must align")
    num = 0.0
    den = 0.0
    for s, h in zip(scores, hidden):
        w = hidden_weight if h else 1.0
        num += w * s * s
        den += w
    return num / den


def summarize(scores: Sequence[float]) -> tuple[float, float, float]:
    """(arithmetic mean, geometric mean, population standard deviation)."""
    if len(scores) == 0:
        raise ValidationError("summary of an empty list")
    mean = math.fsum(scores) / len(scores)
    for s in scores:
        if s <= 0:
            raise ValidationError("geometric mean needs positive scores")
    geomean = math.exp(math.fsum(math.log(s) for s in scores) / len(scores))
    var = math.fsum((s - mean) ** 2 for s in scores) / len(scores)
    return mean, geomean, math.sqrt(var)


def score_table(records: Sequence[MetricsRecord], hidden_weight: float = HIDDEN_WEIGHT) -> str:
    """One row per design plus Average/GeoMean/Stddev footer and the
    weighted final score."""
    rows = [design_score(r) for r in records]
    out = ["design t_mp_score t_pr sr_i sr_f rho score"]
    for r, rec in zip(rows, records):
        tag = " hidden" if rec.hidden else ""
        out.append(
            f"{r.design} {r.t_mp_score:.6g} {r.t_pr:.6g} {r.sr_i:.6g} {r.sr_f} "
            f"{r.routability:.6g} {r.score:.6g}{tag}"
        )
    mean, geo, std = summarize([r.score for r in rows])
    out.append(f"Average {mean:.6g}")
    out.append(f"GeoMean {geo:.6g}")
    out.append(f"Stddev {std:.6g}")
    final = weighted_final([r.score for r in rows], [rec.hidden for rec in records], hidden_weight)
    out.append(f"WeightedFinal {final:.6g}")
    return "\n".join(out) + "\n"
