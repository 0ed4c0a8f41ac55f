"""Experiment engine: supply, harvest risk, budget-constrained selection, accounting.

A scenario builds offers once, draws one harvest realization, and then runs
either mechanism against it. The deferred mechanism buys everything it can at
year 0 and owes instalments afterwards; the up-front mechanism buys gradually
from an annual budget while unconserved stands keep dropping to harvest.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np

from .bidding import (
    draw_phi,
    optimal_downpayment,
    upfront_bid,
    upfront_participates,
)
from .ecology import (
    DEFAULT_ELITE_TABLE,
    EliteTable,
    classify_landowner,
    elite_index,
    is_old_growth,
    make_owner,
)
from .finance import CashflowStream, annuity_factor, npv
from .model import Bid, Mechanism, OwnerKind, SchemeConfig, SiteRecord


@dataclass(frozen=True)
class HarvestSchedule:
    """Realized harvest year per site id; sites absent from the map are never cut.

    Only stands reaching their commercial rotation age within the harvest
    window receive a year, always below the window length.
    """

    harvest_years: dict[str, int]

    def get(self, site_id: str) -> int | None:
        return self.harvest_years.get(site_id)

    @classmethod
    def empty(cls) -> "HarvestSchedule":
        return cls(harvest_years={})


@dataclass(frozen=True)
class Offer:
    """One participating landowner's standing offer.

    ``downpayment_per_ha`` is the outlay at the year of conservation: the
    downpayment bid under the deferred mechanism, the full payment up front.
    """

    site: SiteRecord
    mechanism: Mechanism
    elite: float
    downpayment_per_ha: float
    instalment_per_ha: float
    total_payment_npv_per_ha: float
    bid: Bid | None = None

    @property
    def area_ha(self) -> float:
        return self.site.area_ha

    @property
    def cost(self) -> float:
        """Budget outlay needed to conserve the site in its conservation year."""
        return self.downpayment_per_ha * self.site.area_ha

    @property
    def benefit(self) -> float:
        """Selection benefit: habitat index times area."""
        return self.elite * self.site.area_ha


@dataclass(frozen=True)
class SupplySummary:
    """Aggregates over the offers a mechanism attracted."""

    offered_sites: int
    offered_area_ha: float
    bd_index_sum: float
    avg_stand_age: float
    avg_downpayment: float
    avg_instalment: float
    avg_total_payment_npv: float


@dataclass(frozen=True)
class RunSummary:
    """Outcome accounting for one mechanism run."""

    area_ha: float
    sites_conserved: int
    bd_index_sum: float
    avg_stand_age: float
    avg_downpayment: float
    avg_instalment: float
    avg_total_payment_npv: float
    harvested_area_ha: float
    instalment_cost_per_year: float
    budget: float
    costs_npv: float
    costs_absolute: float
    benefits_npv: float
    lost_benefits: float
    ex_post_net_benefits: float


@dataclass(frozen=True)
class RunOutcome:
    """Everything one mechanism run produced: flows, site fates, and accounting."""

    mechanism: Mechanism
    budget: float
    offers: tuple[Offer, ...]
    conserved_year: dict[str, int]
    harvested_year: dict[str, int]
    spending_by_year: dict[int, float]
    summary: RunSummary | None = None

    def conserved_by_year(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = defaultdict(list)
        for site_id, year in self.conserved_year.items():
            out[year].append(site_id)
        return dict(out)

    def harvested_by_year(self) -> dict[int, list[str]]:
        out: dict[int, list[str]] = defaultdict(list)
        for site_id, year in self.harvested_year.items():
            out[year].append(site_id)
        return dict(out)

    def spending_stream(self) -> CashflowStream:
        return CashflowStream.from_pairs(sorted(self.spending_by_year.items()))


def build_offers(
    dataset: list[SiteRecord],
    cfg: SchemeConfig,
    mechanism: Mechanism,
    rng: np.random.Generator,
    elite_table: EliteTable = DEFAULT_ELITE_TABLE,
) -> list[Offer]:
    """Offers from every landowner whose participation rule holds under `mechanism`.

    Owners are typed from stand age; Hartmanian preference scales come from
    `rng`, one draw per Hartmanian site in dataset order, so runs over the
    same dataset and seed see identical owners regardless of mechanism.
    """
    instalment_pv = annuity_factor(cfg.instalment_count_x, cfg.discount_rate)
    offers: list[Offer] = []
    for site in dataset:
        kind = classify_landowner(site)
        phi = draw_phi(rng, cfg.amenity) if kind is OwnerKind.HARTMANIAN else 1.0
        owner = make_owner(site, phi, cfg)
        elite = elite_index(site, elite_table)
        if mechanism is Mechanism.DEFERRED:
            bid = optimal_downpayment(site, owner, cfg)
            if not bid.participates:
                continue
            offers.append(
                Offer(
                    site=site,
                    mechanism=mechanism,
                    elite=elite,
                    downpayment_per_ha=bid.downpayment_c,
                    instalment_per_ha=bid.instalment_m,
                    total_payment_npv_per_ha=bid.downpayment_c + bid.instalment_m * instalment_pv,
                    bid=bid,
                )
            )
        else:
            payment = upfront_bid(site, owner, cfg.upfront_cap_hi)
            if not upfront_participates(payment, site, owner):
                continue
            offers.append(
                Offer(
                    site=site,
                    mechanism=mechanism,
                    elite=elite,
                    downpayment_per_ha=payment,
                    instalment_per_ha=0.0,
                    total_payment_npv_per_ha=payment,
                )
            )
    return offers


def draw_harvest_schedule(
    dataset: list[SiteRecord], cfg: SchemeConfig, rng: np.random.Generator
) -> HarvestSchedule:
    """One harvest realization: every stand maturing within the window is cut.

    A stand first eligible in year y0 (when it reaches its rotation age, 0 if
    already past it) draws a harvest year uniformly from {y0, ..., window-1}.
    """
    years: dict[str, int] = {}
    for site in dataset:
        gap = site.commercial_rotation_age - site.stand_age
        first_year = max(0, math.ceil(gap))
        if first_year < cfg.harvest_window:
            years[site.id] = int(rng.integers(first_year, cfg.harvest_window))
    return HarvestSchedule(harvest_years=years)


def rank_benefit_cost(offers: list[Offer]) -> list[Offer]:
    """Offers in funding order: benefit per euro of outlay, descending.

    Ties break toward the cheaper offer, then by site id, so the order is
    deterministic. Zero-cost offers with positive benefit rank first.
    """

    def sort_key(offer: Offer):
        if offer.cost > 0:
            ratio = offer.benefit / offer.cost
        else:
            ratio = math.inf if offer.benefit > 0 else 0.0
        return (-ratio, offer.cost, offer.site.id)

    return sorted(offers, key=sort_key)


def select_old_growth(offers: list[Offer]) -> list[Offer]:
    """Only the offers whose stands meet the old-growth age criteria."""
    return [offer for offer in offers if is_old_growth(offer.site)]


def run_deferred(
    dataset: list[SiteRecord],
    cfg: SchemeConfig,
    initial_budget: float,
    ranking: list[Offer],
    schedule: HarvestSchedule,
) -> RunOutcome:
    """Fund ranked offers from the initial budget, all at year 0.

    Greedy skip-and-continue: an offer too expensive for the remaining budget
    is skipped and cheaper lower-ranked offers still get funded. Offers whose
    site is already cut at year 0 are unavailable. Funded sites pay
    instalments in years 1..x; the program closes after year 0, so no site is
    ever awaiting conservation and no harvest loss is booked.
    """
    if initial_budget < 0:
        raise ValueError("initial_budget must be >= 0")
    remaining = initial_budget
    conserved: dict[str, int] = {}
    spending: dict[int, float] = {}
    instalment_per_year = 0.0
    spent = 0.0
    for offer in ranking:
        if schedule.get(offer.site.id) == 0:
            continue
        if offer.cost <= remaining:
            remaining -= offer.cost
            spent += offer.cost
            conserved[offer.site.id] = 0
            instalment_per_year += offer.instalment_per_ha * offer.area_ha
    spending[0] = spent
    if instalment_per_year > 0:
        for year in range(1, cfg.instalment_count_x + 1):
            spending[year] = instalment_per_year
    outcome = RunOutcome(
        mechanism=Mechanism.DEFERRED,
        budget=initial_budget,
        offers=tuple(ranking),
        conserved_year=conserved,
        harvested_year={},
        spending_by_year=spending,
    )
    return replace(outcome, summary=account(outcome, cfg))


def run_upfront(
    dataset: list[SiteRecord],
    cfg: SchemeConfig,
    annual_budget: float,
    ranking: list[Offer],
    schedule: HarvestSchedule,
) -> RunOutcome:
    """Fund ranked offers gradually from an annual budget over the horizon.

    Each year, stands reaching their harvest year while still unconserved are
    lost first; the year's budget then funds the best remaining offers
    (skip-and-continue). Unspent budget does not roll over.
    """
    if annual_budget < 0:
        raise ValueError("annual_budget must be >= 0")
    pending = list(ranking)
    conserved: dict[str, int] = {}
    harvested: dict[str, int] = {}
    spending: dict[int, float] = {}
    for year in range(cfg.horizon):
        available: list[Offer] = []
        for offer in pending:
            harvest_year = schedule.get(offer.site.id)
            if harvest_year is not None and harvest_year <= year:
                harvested[offer.site.id] = harvest_year
            else:
                available.append(offer)
        remaining = annual_budget
        spent = 0.0
        leftover: list[Offer] = []
        for offer in available:
            if offer.cost <= remaining:
                remaining -= offer.cost
                spent += offer.cost
                conserved[offer.site.id] = year
            else:
                leftover.append(offer)
        spending[year] = spent
        pending = leftover
    outcome = RunOutcome(
        mechanism=Mechanism.UPFRONT,
        budget=annual_budget,
        offers=tuple(ranking),
        conserved_year=conserved,
        harvested_year=harvested,
        spending_by_year=spending,
    )
    return replace(outcome, summary=account(outcome, cfg))


def _per_ha_average(pairs: list[tuple[float, float]]) -> float:
    """Area-weighted average of (value_per_ha, area) pairs; 0 when empty."""
    total_area = sum(area for _, area in pairs)
    if total_area == 0:
        return 0.0
    return sum(value * area for value, area in pairs) / total_area


def account(outcome: RunOutcome, cfg: SchemeConfig) -> RunSummary:
    """Accounting summary of a completed run.

    Benefits accrue at the year each site is conserved; lost benefits are
    booked (negatively) at each lost site's harvest year; both discount at the
    accounting rate. Averages cover conserved sites only.
    """
    by_id = {offer.site.id: offer for offer in outcome.offers}
    conserved = [(by_id[sid], year) for sid, year in outcome.conserved_year.items()]
    lost = [(by_id[sid], year) for sid, year in outcome.harvested_year.items()]
    delta = cfg.discount_rate

    area = sum(o.area_ha for o, _ in conserved)
    benefits = sum(
        cfg.benefit_per_ha * o.area_ha * (1.0 + delta) ** (-year) for o, year in conserved
    )
    lost_total = sum(
        cfg.benefit_per_ha * o.area_ha * (1.0 + delta) ** (-year) for o, year in lost
    )
    lost_benefits = -lost_total if lost_total > 0 else 0.0
    stream = outcome.spending_stream()
    costs_npv = npv(stream, delta)
    if outcome.mechanism is Mechanism.DEFERRED:
        instalment_cost = sum(o.instalment_per_ha * o.area_ha for o, _ in conserved)
    else:
        instalment_cost = 0.0
    return RunSummary(
        area_ha=area,
        sites_conserved=len(conserved),
        bd_index_sum=sum(o.elite * o.area_ha for o, _ in conserved),
        avg_stand_age=_per_ha_average([(o.site.stand_age, o.area_ha) for o, _ in conserved]),
        avg_downpayment=_per_ha_average([(o.downpayment_per_ha, o.area_ha) for o, _ in conserved]),
        avg_instalment=_per_ha_average([(o.instalment_per_ha, o.area_ha) for o, _ in conserved]),
        avg_total_payment_npv=_per_ha_average(
            [(o.total_payment_npv_per_ha, o.area_ha) for o, _ in conserved]
        ),
        harvested_area_ha=sum(o.area_ha for o, _ in lost),
        instalment_cost_per_year=instalment_cost,
        budget=outcome.budget,
        costs_npv=costs_npv,
        costs_absolute=stream.total(),
        benefits_npv=benefits,
        lost_benefits=lost_benefits,
        ex_post_net_benefits=benefits + lost_benefits,
    )


def summarize_supply(offers: list[Offer]) -> SupplySummary:
    """Supply-side aggregates over a mechanism's offers."""
    return SupplySummary(
        offered_sites=len(offers),
        offered_area_ha=sum(o.area_ha for o in offers),
        bd_index_sum=sum(o.elite * o.area_ha for o in offers),
        avg_stand_age=_per_ha_average([(o.site.stand_age, o.area_ha) for o in offers]),
        avg_downpayment=_per_ha_average([(o.downpayment_per_ha, o.area_ha) for o in offers]),
        avg_instalment=_per_ha_average([(o.instalment_per_ha, o.area_ha) for o in offers]),
        avg_total_payment_npv=_per_ha_average(
            [(o.total_payment_npv_per_ha, o.area_ha) for o in offers]
        ),
    )


@dataclass(frozen=True)
class ExtrapolationReport:
    """Program-scale cost projection for conserving `area_ha` under both mechanisms."""

    area_ha: float
    deferred_downpayments_total: float
    deferred_instalments_per_year: float
    deferred_npv: float
    deferred_absolute: float
    upfront_area_per_year: float
    upfront_cost_per_year: float
    upfront_npv: float
    upfront_absolute: float


def extrapolate_national(
    avg_downpayment: float,
    avg_instalment: float,
    avg_upfront: float,
    area_ha: float,
    cfg: SchemeConfig,
) -> ExtrapolationReport:
    """Scale per-hectare averages to a conservation area of national size.

    Deferred: the whole area is bought at year 0 with instalments for x years.
    Up-front: the area is conserved evenly over the horizon, paying
    avg_upfront per hectare in the year each slice is conserved.
    """
    if area_ha < 0:
        raise ValueError("area_ha must be >= 0")
    if min(avg_downpayment, avg_instalment, avg_upfront) < 0:
        raise ValueError("per-hectare averages must be >= 0")
    delta = cfg.discount_rate
    downpayments = area_ha * avg_downpayment
    instalments = area_ha * avg_instalment
    deferred_npv = downpayments + instalments * annuity_factor(cfg.instalment_count_x, delta)
    area_per_year = area_ha / cfg.horizon
    cost_per_year = area_per_year * avg_upfront
    upfront_npv = sum(cost_per_year * (1.0 + delta) ** (-y) for y in range(cfg.horizon))
    return ExtrapolationReport(
        area_ha=area_ha,
        deferred_downpayments_total=downpayments,
        deferred_instalments_per_year=instalments,
        deferred_npv=deferred_npv,
        deferred_absolute=downpayments + cfg.instalment_count_x * instalments,
        upfront_area_per_year=area_per_year,
        upfront_cost_per_year=cost_per_year,
        upfront_npv=upfront_npv,
        upfront_absolute=cost_per_year * cfg.horizon,
    )
