"""NSGA-II over box-bounded genomes with an external Pareto archive."""
from __future__ import annotations

import csv
import logging
from fractions import Fraction
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)

ETA_CROSSOVER = 15.0
ETA_MUTATION = 20.0
CROSSOVER_PROBABILITY = 0.9
DEFAULT_GENERATIONS = 2000
DEFAULT_POPULATION = 16
LOG_EVERY = 100


def dominates(a, b) -> bool:
    """All objectives minimized."""
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def non_dominated_sort(objectives) -> np.ndarray:
    """Front index per point (0 = non-dominated), fast non-dominated sorting."""
    f = np.asarray(objectives, dtype=float)
    n = len(f)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    le = np.all(f[:, None, :] <= f[None, :, :], axis=2)
    lt = np.any(f[:, None, :] < f[None, :, :], axis=2)
    dom = le & lt  # dom[i, j]: i dominates j
    dominated_count = dom.sum(axis=0)
    rank = np.full(n, -1, dtype=np.int64)
    front = np.flatnonzero(dominated_count == 0)
    level = 0
    while front.size:
        rank[front] = level
        dominated_count = dominated_count - dom[front].sum(axis=0)
        dominated_count[rank >= 0] = -1
        front = np.flatnonzero(dominated_count == 0)
        level += 1
    return rank


def crowding_distance(objectives) -> np.ndarray:
    f = np.asarray(objectives, dtype=float)
    n, m = f.shape
    dist = np.zeros(n)
    if n <= 2:
        dist[:] = np.inf
        return dist
    for k in range(m):
        order = np.argsort(f[:, k], kind="stable")
        span = f[order[-1], k] - f[order[0], k]
        dist[order[0]] = dist[order[-1]] = np.inf
        if span > 0:
            dist[order[1:-1]] += (f[order[2:], k] - f[order[:-2], k]) / span
    return dist


def sbx_crossover(p1, p2, rng, eta: float = ETA_CROSSOVER, probability: float = CROSSOVER_PROBABILITY):
    """Simulated binary crossover on [0, 1] genes."""
    c1, c2 = p1.copy(), p2.copy()
    if rng.random() > probability:
        return c1, c2
    for i in range(len(p1)):
        if rng.random() > 0.5 or abs(p1[i] - p2[i]) < 1e-14:
            continue
        lo, hi = min(p1[i], p2[i]), max(p1[i], p2[i])
        u = rng.random()
        children = []
        for bound_gap in (lo, 1.0 - hi):
            beta = 1.0 + 2.0 * bound_gap / (hi - lo)
            alpha = 2.0 - beta ** -(eta + 1.0)
            if u <= 1.0 / alpha:
                bq = (u * alpha) ** (1.0 / (eta + 1.0))
            else:
                bq = (1.0 / (2.0 - u * alpha)) ** (1.0 / (eta + 1.0))
            children.append(bq)
        a = 0.5 * (lo + hi - children[0] * (hi - lo))
        b = 0.5 * (lo + hi + children[1] * (hi - lo))
        a, b = min(max(a, 0.0), 1.0), min(max(b, 0.0), 1.0)
        if rng.random() <= 0.5:
            a, b = b, a
        c1[i], c2[i] = a, b
    return c1, c2


def polynomial_mutation(x, rng, eta: float = ETA_MUTATION, rate: float | None = None):
    y = x.copy()
    rate = 1.0 / len(x) if rate is None else rate
    for i in range(len(x)):
        if rng.random() > rate:
            continue
        u = rng.random()
        d1, d2 = y[i], 1.0 - y[i]
        power = 1.0 / (eta + 1.0)
        if u < 0.5:
            val = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - d1) ** (eta + 1.0)
            delta = val ** power - 1.0
        else:
            val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * (1.0 - d2) ** (eta + 1.0)
            delta = 1.0 - val ** power
        y[i] = min(max(y[i] + delta, 0.0), 1.0)
    return y


def hypervolume(points, reference) -> float:
    """Exact dominated hypervolume of 3-objective points (slicing along the last objective).

    Computed in rational arithmetic, so adding a point never lowers the result.
    """
    ref_f = np.asarray(reference, dtype=float)
    p = np.asarray(points, dtype=float).reshape(-1, 3)
    p = p[np.all(p < ref_f, axis=1)]
    if len(p) == 0:
        return 0.0
    p = p[np.argsort(p[:, 2], kind="stable")]
    pts = [tuple(Fraction(float(v)) for v in row) for row in p]
    ref = tuple(Fraction(float(v)) for v in ref_f)
    total = Fraction(0)
    for i in range(len(pts)):
        z_next = pts[i + 1][2] if i + 1 < len(pts) else ref[2]
        if z_next > pts[i][2]:
            total += _area_2d(pts[: i + 1], ref) * (z_next - pts[i][2])
    return float(total)


def _area_2d(points, ref):
    area, y_floor = Fraction(0), ref[1]
    for x, y, _ in sorted(points):
        if y < y_floor:
            area += (ref[0] - x) * (y_floor - y)
            y_floor = y
    return area


@dataclass
class ArchiveEntry:
    config_id: int
    genome: np.ndarray
    objectives: tuple[float, float, float]
    generation: int


@dataclass
class ParetoArchive:
    """Mutually non-dominated evaluated points; exact objective duplicates keep the first."""

    entries: list[ArchiveEntry] = field(default_factory=list)
    _cache: np.ndarray | None = field(default=None, init=False, repr=False, compare=False)

    def offer(self, entry: ArchiveEntry) -> bool:
        f = np.asarray(entry.objectives, dtype=float)
        g = self.objectives()
        if len(g):
            if np.any(np.all(g <= f, axis=1)):
                # weakly dominated covers both exact duplicates and dominance
                return False
            worse = np.all(f <= g, axis=1) & np.any(f < g, axis=1)
            if worse.any():
                self.entries = [e for e, drop in zip(self.entries, worse) if not drop]
        self.entries.append(entry)
        self._cache = None
        return True

    def objectives(self) -> np.ndarray:
        if self._cache is None:
            self._cache = np.array([e.objectives for e in self.entries], dtype=float).reshape(-1, 3)
        return self._cache

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass
class OptimizationResult:
    archive: ParetoArchive
    population: np.ndarray
    objectives: np.ndarray
    evaluations: int
    hypervolume_history: list[float] = field(default_factory=list)
    # (config_id, objectives) of every evaluation, in evaluation order
    evaluated: list[tuple[int, tuple[float, float, float]]] = field(default_factory=list)


def seed_known_solutions(population: np.ndarray, rng) -> np.ndarray:
    """Replace one random member by the all-zero genome (zero investment)."""
    out = population.copy()
    out[rng.integers(len(out))] = 0.0
    return out


def _tournament(rank, crowd, rng) -> int:
    i, j = rng.integers(len(rank), size=2)
    if rank[i] != rank[j]:
        return int(i if rank[i] < rank[j] else j)
    if crowd[i] != crowd[j]:
        return int(i if crowd[i] > crowd[j] else j)
    return int(min(i, j))


def _survivors(objectives, size: int) -> np.ndarray:
    rank = non_dominated_sort(objectives)
    chosen: list[int] = []
    for level in range(rank.max() + 1):
        front = np.flatnonzero(rank == level)
        if len(chosen) + len(front) <= size:
            chosen.extend(front.tolist())
        else:
            crowd = crowding_distance(objectives[front])
            order = np.argsort(-crowd, kind="stable")
            chosen.extend(front[order[: size - len(chosen)]].tolist())
        if len(chosen) == size:
            break
    return np.array(chosen)


def evolve(evaluator: Callable[[np.ndarray], Sequence[float]], n_combos: int,
           population_size: int = DEFAULT_POPULATION, generations: int = DEFAULT_GENERATIONS,
           seed: int = 0, seed_known: bool = False, reference_point=None,
           genes_per_combo: int = 3, log_every: int = LOG_EVERY) -> OptimizationResult:
    """Run NSGA-II and return the archive of all non-dominated evaluated points.

    With ``reference_point`` the archive hypervolume is recorded after the
    initial population and after every generation.
    """
    if n_combos < 1:
        raise ValueError("at least one combo is required")
    if population_size < 4 or population_size % 2:
        raise ValueError("population_size must be an even number >= 4")
    rng = np.random.default_rng(seed)
    n_genes = genes_per_combo * n_combos
    archive = ParetoArchive()
    evaluated = []
    counter = 0

    def evaluate_all(genomes, generation):
        nonlocal counter
        objs = np.empty((len(genomes), 3))
        for k, g in enumerate(genomes):
            objs[k] = evaluator(g)
            f = tuple(float(v) for v in objs[k])
            evaluated.append((counter, f))
            archive.offer(ArchiveEntry(counter, g.copy(), f, generation))
            counter += 1
        return objs

    pop = rng.random((population_size, n_genes))
    if seed_known:
        pop = seed_known_solutions(pop, rng)
    objs = evaluate_all(pop, 0)
    history = []
    if reference_point is not None:
        history.append(hypervolume(archive.objectives(), reference_point))

    for gen in range(1, generations + 1):
        rank = non_dominated_sort(objs)
        crowd = np.empty(len(pop))
        for level in np.unique(rank):
            members = np.flatnonzero(rank == level)
            crowd[members] = crowding_distance(objs[members])
        children = []
        while len(children) < population_size:
            a = pop[_tournament(rank, crowd, rng)]
            b = pop[_tournament(rank, crowd, rng)]
            c1, c2 = sbx_crossover(a, b, rng)
            children.append(polynomial_mutation(c1, rng))
            children.append(polynomial_mutation(c2, rng))
        children = np.array(children)
        child_objs = evaluate_all(children, gen)
        merged = np.vstack([pop, children])
        merged_objs = np.vstack([objs, child_objs])
        keep = _survivors(merged_objs, population_size)
        pop, objs = merged[keep], merged_objs[keep]
        if reference_point is not None:
            history.append(hypervolume(archive.objectives(), reference_point))
        if log_every and gen % log_every == 0:
            best = archive.objectives().min(axis=0)
            logger.info("generation %d: archive %d, best %s", gen, len(archive), np.round(best, 3).tolist())
    return OptimizationResult(archive, pop, objs, counter, history, evaluated)


ARCHIVE_KPI_FIELDS = ("energy_costs_2025_eur_per_pers", "invest_eur_per_pers_a", "emissions_t_per_pers")


def write_archive_csv(archive: ParetoArchive, path) -> None:
    entries = list(archive)
    n_genes = len(entries[0].genome) if entries else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("config_id",) + tuple(f"g{i}" for i in range(n_genes)) + ARCHIVE_KPI_FIELDS)
        for e in entries:
            writer.writerow((e.config_id,) + tuple(repr(float(v)) for v in e.genome)
                            + tuple(repr(float(v)) for v in e.objectives))


def read_archive_csv(path) -> ParetoArchive:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        gene_cols = [i for i, h in enumerate(header) if h.startswith("g") and h[1:].isdigit()]
        entries = []
        for row in reader:
            entries.append(ArchiveEntry(int(row[0]), np.array([float(row[i]) for i in gene_cols]),
                                        tuple(float(v) for v in row[-3:]), -1))
    return ParetoArchive(entries)
