"""Post-processing of Pareto archives: filters, decompression, cross-method consistency."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .esm import round_decisions
from .geodata import Dataset

TECHNOLOGIES = ("GB", "HP", "HN")


@dataclass(frozen=True)
class BuildingAssignment:
    id: str
    technology: str
    pv_fraction: float


@dataclass(frozen=True)
class SolutionSelection:
    description: str
    config_id: int
    counts: dict[str, int]
    kpis: tuple[float, float, float]


def combo_technologies(genome, n_combos: int) -> tuple[list[str], np.ndarray]:
    g = np.asarray(genome, dtype=float).reshape(n_combos, 3)
    d_hp, d_gb, d_hn, _, _ = round_decisions(g[:, 0], g[:, 1])
    tech = ["HN" if hn else "HP" if hp else "GB" for hp, hn in zip(d_hp, d_hn)]
    return tech, g[:, 2]


def decompress(genome, aggregation, dataset: Dataset | None = None) -> list[BuildingAssignment]:
    """Every real building inherits the technology and PV fraction of its combo."""
    if dataset is not None and tuple(dataset.ids) != tuple(aggregation.ids):
        raise ValueError("aggregation and dataset list different buildings")
    tech, pv = combo_technologies(genome, aggregation.n_variables)
    combo_of = aggregation.combo_index()
    return [BuildingAssignment(bid, tech[c], float(pv[c])) for bid, c in zip(aggregation.ids, combo_of)]


def technology_counts(assignments: Sequence[BuildingAssignment]) -> dict[str, int]:
    counts = dict.fromkeys(TECHNOLOGIES, 0)
    for a in assignments:
        counts[a.technology] += 1
    return counts


def technology_shares(assignments: Sequence[BuildingAssignment]) -> dict[str, float]:
    counts = technology_counts(assignments)
    n = len(assignments)
    return {t: counts[t] / n for t in TECHNOLOGIES}


def combo_weighted_counts(genome, aggregation) -> dict[str, int]:
    """Technology building counts from combo occupancies, without decompressing."""
    tech, _ = combo_technologies(genome, aggregation.n_variables)
    counts = dict.fromkeys(TECHNOLOGIES, 0)
    for t, n in zip(tech, aggregation.counts.values()):
        counts[t] += n
    return counts


def _best(candidates):
    # minimal investment, then emissions, then config id
    return min(candidates, key=lambda e: (e.objectives[1], e.objectives[2], e.config_id))


def select_low_invest_under_cost_cap(archive, cap_eur_per_pers: float, aggregation=None) -> SolutionSelection | None:
    """Cheapest investment among points with energy costs strictly below the cap; None if none qualify."""
    candidates = [e for e in archive if e.objectives[0] < cap_eur_per_pers]
    if not candidates:
        return None
    best = _best(candidates)
    counts = combo_weighted_counts(best.genome, aggregation) if aggregation is not None else {}
    return SolutionSelection(f"energy costs 2025 < {cap_eur_per_pers:g} EUR/Pers, lowest investment",
                             best.config_id, counts, tuple(best.objectives))


def select_min_shares(archive, aggregation, min_share: float) -> SolutionSelection | None:
    """Cheapest investment among points where both HN and HP serve at least ``min_share`` of buildings."""
    candidates, counts_of = [], {}
    n = len(aggregation.ids)
    for e in archive:
        counts = technology_counts(decompress(e.genome, aggregation))
        if counts["HN"] / n >= min_share and counts["HP"] / n >= min_share:
            candidates.append(e)
            counts_of[e.config_id] = counts
    if not candidates:
        return None
    best = _best(candidates)
    return SolutionSelection(f"HN and HP shares >= {min_share:g}, lowest investment",
                             best.config_id, counts_of[best.config_id], tuple(best.objectives))


def technology_share_triangle(archive, aggregation) -> np.ndarray:
    """Rows of (share GB, share HP, share HN) per archive entry."""
    n = len(aggregation.ids)
    rows = []
    for e in archive:
        counts = combo_weighted_counts(e.genome, aggregation)
        rows.append([counts[t] / n for t in TECHNOLOGIES])
    return np.array(rows, dtype=float).reshape(-1, 3)


def consistency(assignments: Mapping[str, Sequence[BuildingAssignment]]) -> dict[str, tuple[float, float]]:
    """Per technology: (fraction of buildings assigned it by every method, product of the methods' shares)."""
    methods = list(assignments)
    if not methods:
        raise ValueError("at least one method is required")
    ids = [a.id for a in assignments[methods[0]]]
    tech = []
    for m in methods:
        by_id = {a.id: a.technology for a in assignments[m]}
        if set(by_id) != set(ids):
            raise ValueError(f"method {m!r} assigns a different set of buildings")
        tech.append(np.array([by_id[i] for i in ids]))
    tech = np.array(tech)
    out = {}
    for t in TECHNOLOGIES:
        hit = tech == t
        baseline = float(np.prod(hit.mean(axis=1)))
        out[t] = (float(np.all(hit, axis=0).mean()), baseline)
    return out


def write_assignment_geojson(assignments: Sequence[BuildingAssignment], dataset: Dataset, path) -> None:
    features = []
    for a in assignments:
        b = dataset[dataset.index_of(a.id)]
        features.append({
            "type": "Feature",
            "geometry": {"type": "Point", "coordinates": [b.x_m, b.y_m]},
            "properties": {"id": a.id, "technology": a.technology, "pv_fraction": a.pv_fraction},
        })
    with open(path, "w", encoding="utf-8") as fh:
        json.dump({"type": "FeatureCollection", "features": features}, fh, indent=1)
        fh.write("\n")


def write_shares_csv(archive, aggregation, path) -> None:
    rows = technology_share_triangle(archive, aggregation)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("config_id", "share_gb", "share_hp", "share_hn"))
        for e, r in zip(archive, rows):
            writer.writerow((e.config_id,) + tuple(repr(float(v)) for v in r))


def write_consistency_csv(results: Mapping[str, Mapping[str, tuple[float, float]]], path) -> None:
    """``results`` maps a filter name to the output of :func:`consistency`."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("filter", "technology", "consistent_fraction", "random_baseline"))
        for name, result in results.items():
            for t, (frac, base) in result.items():
                writer.writerow((name, t, repr(frac), repr(base)))
