"""Storage-free energy system model: hourly balances, costs, investments, emissions.

Decisions live on (category, group) combos. Each combo is represented by
the mean of its members' absolute quantities (heat demand, household
electricity, PV potential) and enters the global indicators weighted by
its building count. Only the heat network is evaluated on the real
buildings, since its length is the minimum spanning tree of the connected
ones.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, astuple

import numpy as np

from . import demand
from .exceptions import ModelError
from .geodata import Dataset
from .network import mst_length
from .solar import StandardRoofSet, dataset_standard_weights
from .weather import WeatherSeries

HP_COST_BRACKETS = (
    # (lower peak bound kW, exponent, EUR)
    (0.0, 0.705, 3830.5),
    (50.0, 0.793, 3194.6),
    (300.0, 0.755, 1352.0),
)
HP_LIFETIME_A = 20.0
PV_COST_PER_KW = 1500.0
PV_LIFETIME_A = 20.0
HN_CONNECTION_PER_KW = 13.4
HN_CONNECTION_BASE = 13976.0
HN_CONNECTION_LIFETIME_A = 25.0
HN_PIPE_EXPONENT = 0.2029
HN_PIPE_COST = 432.69
HN_PIPE_LIFETIME_A = 50.0

KPI_FIELDS = ("energy_costs_2025_eur_per_pers", "invest_eur_per_pers_a", "emissions_t_per_pers")


@dataclass(frozen=True)
class Tariffs:
    c_el: float = 0.30  # EUR/kWh
    c_feedin: float = 0.08
    c_gas: float = 0.10
    f_el: float = 260.0  # g/kWh
    f_gas: float = 240.0
    el_emission_scaling: float = 0.25  # lifetime average of the grid factor
    central_cop: float = 8.0
    c_pf: float = 0.45
    flow_temp_k: float = 328.15


@dataclass(frozen=True)
class KpiTriple:
    energy_costs_2025: float  # EUR/Pers
    invest: float  # EUR/Pers/a
    emissions: float  # t/Pers

    def as_tuple(self) -> tuple[float, float, float]:
        return astuple(self)


# -- physics and tariffs ------------------------------------------------------

def hp_cop_series(source_temp_k, tariffs: Tariffs = Tariffs()) -> np.ndarray:
    """Air source heat pump COP from the source temperature (K)."""
    t = np.asarray(source_temp_k.temp_k if isinstance(source_temp_k, WeatherSeries) else source_temp_k,
                   dtype=float)
    gap = tariffs.flow_temp_k - t
    if np.any(gap <= 0):
        raise ModelError(f"source temperature reaches the flow temperature {tariffs.flow_temp_k} K")
    return tariffs.c_pf * tariffs.flow_temp_k / gap


def round_decisions(q_hp, q_hn):
    """Binary heat technology per combo from the continuous genes.

    Returns (d_hp, d_gb, d_hn, qhat_hp, qhat_hn). When both genes round to
    one the larger gene wins; an exact tie goes to the heat network.
    """
    q_hp = np.asarray(q_hp, dtype=float)
    q_hn = np.asarray(q_hn, dtype=float)
    d_hp = np.floor(q_hp + 0.5)
    d_hn = np.floor(q_hn + 0.5)
    both = (d_hp == 1) & (d_hn == 1)
    d_hp = np.where(both & (q_hn >= q_hp), 0.0, d_hp)
    d_hn = np.where(both & (q_hn < q_hp), 0.0, d_hn)
    d_gb = 1.0 - d_hp - d_hn
    return d_hp, d_gb, d_hn, np.maximum(q_hp, d_hp), np.maximum(q_hn, d_hn)


def building_balance(d_hp, d_gb, q_pv, heat_kw, electricity_kw, pv_kw, cop):
    """Hourly electricity and gas draw of one building (kW); negative electricity is export."""
    p_el = electricity_kw + d_hp / cop * heat_kw - q_pv * pv_kw
    p_gas = d_gb * heat_kw
    return p_el, p_gas


def heat_network_power(connected_heat_kw, tariffs: Tariffs = Tariffs()) -> np.ndarray:
    """Central heat pump electricity for the summed heat of connected buildings."""
    return np.asarray(connected_heat_kw, dtype=float) / tariffs.central_cop


def building_energy_cost(p_el, p_gas, tariffs: Tariffs = Tariffs()) -> float:
    """Annual EUR; hourly steps so kW sums are kWh."""
    p_el = np.asarray(p_el, dtype=float)
    return float(tariffs.c_el * np.maximum(p_el, 0.0).sum()
                 - tariffs.c_feedin * abs(np.minimum(p_el, 0.0).sum())
                 + tariffs.c_gas * np.asarray(p_gas, dtype=float).sum())


def emissions_g(p_el, p_gas, tariffs: Tariffs = Tariffs()) -> float:
    """Greenhouse gas emissions in g of the area-wide balances."""
    return float((tariffs.f_el * tariffs.el_emission_scaling * np.maximum(p_el, 0.0)).sum()
                 + (tariffs.f_gas * np.asarray(p_gas, dtype=float)).sum())


def heat_pump_invest(peak_kw, q_hat=1.0):
    """Annualized heat pump cost in EUR/a; the bracket is chosen by the peak."""
    peak = np.asarray(peak_kw, dtype=float)
    exponent = np.full(peak.shape, HP_COST_BRACKETS[0][1])
    base = np.full(peak.shape, HP_COST_BRACKETS[0][2])
    for lower, e, c in HP_COST_BRACKETS[1:]:
        exponent = np.where(peak >= lower, e, exponent)
        base = np.where(peak >= lower, c, base)
    cost = q_hat * peak ** exponent * base / HP_LIFETIME_A
    return float(cost) if np.ndim(cost) == 0 else cost


def pv_invest(pv_peak_kw):
    return np.asarray(pv_peak_kw, dtype=float) * PV_COST_PER_KW / PV_LIFETIME_A


def hn_connection_invest(peak_kw, q_hat=1.0):
    return q_hat / HN_CONNECTION_LIFETIME_A * (np.asarray(peak_kw, dtype=float) * HN_CONNECTION_PER_KW
                                                + HN_CONNECTION_BASE)


def heat_network_invest(length_m: float, network_peak_kw: float) -> float:
    """Pipes plus central heat pump; zero when nothing is connected."""
    if network_peak_kw <= 0:
        return 0.0
    pipes = length_m * network_peak_kw ** HN_PIPE_EXPONENT * HN_PIPE_COST / HN_PIPE_LIFETIME_A
    return float(pipes + heat_pump_invest(network_peak_kw))


def invest_costs(qhat_hp, qhat_hn, q_pv, building_peak_kw, pv_peak_kw) -> dict[str, np.ndarray]:
    """Decentral annualized investment per building (EUR/a) by technology."""
    return {
        "hp": heat_pump_invest(building_peak_kw, qhat_hp),
        "pv": pv_invest(np.asarray(q_pv, dtype=float) * pv_peak_kw),
        "hn_connection": hn_connection_invest(building_peak_kw, qhat_hn),
        "gb": np.zeros(np.shape(qhat_hp)),
    }


def persons(annual_heat_kwh, kwh_per_person: float = 15000.0) -> np.ndarray:
    """Occupants per building, at least one."""
    return np.maximum(1, np.round(np.asarray(annual_heat_kwh, dtype=float) / kwh_per_person)).astype(int)


# -- evaluator ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Totals:
    """Area-wide indicators before division by persons."""

    energy_costs_2025: float
    invest: float
    emissions_t: float
    persons: int

    def kpis(self) -> KpiTriple:
        return KpiTriple(self.energy_costs_2025 / self.persons, self.invest / self.persons,
                         self.emissions_t / self.persons)


class EnergySystemModel:
    """Evaluates genomes of ``(q_hp, q_hn, q_pv)`` per combo against precomputed profiles."""

    def __init__(self, dataset: Dataset, aggregation, weather: WeatherSeries, standard: StandardRoofSet,
                 tariffs: Tariffs = Tariffs(), q_inf: float = demand.Q_INF,
                 electricity_kwh: float = demand.DEFAULT_ELECTRICITY_KWH, kwh_per_person: float = 15000.0,
                 apply_diversity: bool = True, omega=None):
        if tuple(aggregation.ids) != tuple(dataset.ids):
            raise ModelError("aggregation and dataset list different buildings")
        self.dataset = dataset
        self.aggregation = aggregation
        self.tariffs = tariffs
        self.q_inf = q_inf
        self.apply_diversity = apply_diversity
        self.combos = aggregation.combos
        self.counts = np.array([aggregation.counts[c] for c in self.combos], dtype=float)
        combo_of = aggregation.combo_index()
        self.members = [np.flatnonzero(combo_of == i) for i in range(len(self.combos))]

        shape = demand.profile_shape(weather)
        omega = dataset_standard_weights(dataset, weather, standard) if omega is None else np.asarray(omega)
        heat_kwh = dataset.annual_heat_demand
        rep_heat = np.array([heat_kwh[m].mean() for m in self.members])
        rep_omega = np.stack([omega[m].mean(axis=0) for m in self.members])

        self.cop = hp_cop_series(weather, tariffs)
        self.heat = rep_heat[:, None] * shape.heat[None, :]  # kW
        self.electricity = np.broadcast_to(electricity_kwh * shape.electricity, self.heat.shape)
        self.pv = standard.reconstruct(rep_omega) / 1000.0  # kW
        self.hp_electricity = self.heat / self.cop
        self.building_peak = self.heat.max(axis=1) / q_inf
        self.pv_peak = self.pv.max(axis=1)
        self.n_persons = int(persons(heat_kwh, kwh_per_person).sum())
        self._coords = dataset.coordinates
        self._lengths: dict[frozenset, float] = {}

    @property
    def n_variables(self) -> int:
        return 3 * len(self.combos)

    def split(self, genome):
        g = np.asarray(genome, dtype=float).reshape(len(self.combos), 3)
        return g[:, 0], g[:, 1], g[:, 2]

    def network_length(self, connected) -> float:
        key = frozenset(np.flatnonzero(connected).tolist())
        if key not in self._lengths:
            idx = np.concatenate([self.members[i] for i in sorted(key)]) if key else np.array([], int)
            self._lengths[key] = mst_length(self._coords[idx])
        return self._lengths[key]

    def network_peak(self, d_hn) -> float:
        n = float((self.counts * d_hn).sum())
        if n == 0:
            return 0.0
        peak = float((self.counts * d_hn * self.building_peak).sum())
        return peak * demand.diversity(n) if self.apply_diversity else peak

    def totals(self, genome) -> Totals:
        q_hp, q_hn, q_pv = self.split(genome)
        if np.any((q_pv < 0) | (q_pv > 1)):
            raise ModelError("PV fractions must lie in [0, 1]")
        d_hp, d_gb, d_hn, qhat_hp, qhat_hn = round_decisions(q_hp, q_hn)
        n = self.counts
        tf = self.tariffs

        p_el = self.electricity + d_hp[:, None] * self.hp_electricity - q_pv[:, None] * self.pv
        p_gas = d_gb[:, None] * self.heat
        el_import = np.maximum(p_el, 0.0).sum(axis=1)
        el_export = np.minimum(p_el, 0.0).sum(axis=1)
        combo_cost = tf.c_el * el_import - tf.c_feedin * np.abs(el_export) + tf.c_gas * p_gas.sum(axis=1)

        p_el_hn = heat_network_power((n * d_hn) @ self.heat, tf)
        energy_costs = tf.c_el * p_el_hn.sum() + (n * combo_cost).sum()

        decentral = invest_costs(qhat_hp, qhat_hn, q_pv, self.building_peak, self.pv_peak)
        invest = float((n * sum(decentral.values())).sum())
        if d_hn.any():
            invest += heat_network_invest(self.network_length(d_hn > 0), self.network_peak(d_hn))

        grid_el = n @ p_el + p_el_hn
        grid_gas = n @ p_gas
        return Totals(float(energy_costs), invest, emissions_g(grid_el, grid_gas, tf) / 1e6, self.n_persons)

    def evaluate(self, genome) -> KpiTriple:
        return self.totals(genome).kpis()

    def __call__(self, genome) -> tuple[float, float, float]:
        return self.evaluate(genome).as_tuple()

    def zero_genome(self) -> np.ndarray:
        """All gas boilers, no PV: the zero-investment configuration."""
        return np.zeros(self.n_variables)


def write_kpi_csv(rows, path) -> None:
    """``rows`` are (config_id, KpiTriple or objective triple) pairs."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("config_id",) + KPI_FIELDS)
        for config_id, kpi in rows:
            values = kpi.as_tuple() if isinstance(kpi, KpiTriple) else kpi
            writer.writerow((config_id,) + tuple(repr(float(v)) for v in values))
