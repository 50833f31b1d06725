"""Core data model shared by every part of the simulator.

All types are plain dataclasses, immutable after construction, and safe to
share across concurrent replications.  Collections are normalized (sorted by
id) on construction so downstream iteration order never depends on input
order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

from .hazards import ConstantBaseline, HazardSpec, WeibullBaseline

__all__ = [
    "ScenarioValidationError",
    "Product",
    "Category",
    "Catalog",
    "Supplier",
    "Vessel",
    "Contract",
    "Requisition",
    "Quote",
    "QuoteSet",
    "AllocatedItem",
    "Allocation",
    "EventRecord",
    "SpotRate",
    "SpotModel",
    "PolicyKind",
    "DelayConfig",
    "Scenario",
    "validate_scenario",
]

MAX_SUPPLIERS_PER_CATEGORY = 12  # exact allocation search enumerates supplier subsets


class ScenarioValidationError(ValueError):
    """A scenario (or one of its parts) violates a structural invariant."""

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


@dataclass(frozen=True)
class Product:
    id: str
    family_id: str
    baseline_stock: int  # units held when fully replenished
    depletion_rate: float  # units consumed per day


@dataclass(frozen=True)
class Category:
    id: str
    products: tuple[Product, ...]
    eligible_suppliers: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "products", tuple(sorted(self.products, key=lambda p: p.id)))
        object.__setattr__(self, "eligible_suppliers", tuple(sorted(self.eligible_suppliers)))

    @property
    def product_ids(self) -> tuple[str, ...]:
        return tuple(p.id for p in self.products)


@dataclass(frozen=True)
class Catalog:
    categories: tuple[Category, ...]

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(sorted(self.categories, key=lambda c: c.id)))

    def category(self, category_id: str) -> Category:
        for c in self.categories:
            if c.id == category_id:
                return c
        raise KeyError(category_id)

    def product(self, product_id: str) -> Product:
        for c in self.categories:
            for p in c.products:
                if p.id == product_id:
                    return p
        raise KeyError(product_id)


@dataclass(frozen=True)
class Supplier:
    id: str
    spot_lead_time: float = 3.0  # days quoted for spot fulfilment


@dataclass(frozen=True)
class Vessel:
    """One vessel and its per-category requisition timing model."""

    id: str
    hazards: Mapping[str, HazardSpec]  # category id -> timing spec


@dataclass(frozen=True)
class Contract:
    """Fixed-rate agreement with one supplier over a validity window [start, end)."""

    supplier_id: str
    product_rates: Mapping[str, float]  # product id -> unit price
    lead_time: float
    valid_from: float
    valid_until: float
    volume_commitment: int

    def active_at(self, t: float) -> bool:
        return self.valid_from <= t < self.valid_until


@dataclass(frozen=True)
class Requisition:
    """One vessel request: included products of a single category with restock quantities."""

    id: str
    vessel_id: str
    category_id: str
    created_at: float
    items: Mapping[str, int]  # product id -> quantity, present iff included

    def __post_init__(self):
        for product_id, quantity in self.items.items():
            if quantity < 1:
                raise ScenarioValidationError(
                    "zero quantity for included item", f"requisition[{self.id}].items[{product_id}]"
                )


@dataclass(frozen=True)
class Quote:
    """One supplier's RFQ response: spot unit rates for the quoted items plus one lead time."""

    supplier_id: str
    responded_at: float
    unit_rates: Mapping[str, float]
    lead_time: float


@dataclass(frozen=True)
class QuoteSet:
    pr_id: str
    quotes: Mapping[str, Quote]  # supplier id -> response


@dataclass(frozen=True)
class AllocatedItem:
    supplier_id: str
    unit_cost: float
    quantity: int
    provenance: str  # "contract" | "spot"


@dataclass(frozen=True)
class Allocation:
    """Final supplier assignment for one requisition, one supplier per item."""

    pr_id: str
    items: Mapping[str, AllocatedItem]  # product id -> assignment
    po_count: int
    overhead_cost: float

    @property
    def total_cost(self) -> float:
        return self.overhead_cost + sum(a.unit_cost * a.quantity for a in self.items.values())

    @property
    def suppliers_used(self) -> tuple[str, ...]:
        return tuple(sorted({a.supplier_id for a in self.items.values()}))


@dataclass(frozen=True)
class EventRecord:
    """One executed simulation event; the run log is an append-only list of these."""

    kind: str
    time: float
    pr_id: str | None = None
    vessel_id: str | None = None
    category_id: str | None = None
    supplier_id: str | None = None
    payload: object | None = None


@dataclass(frozen=True)
class SpotRate:
    """Seasonal spot-price curve for one (product, supplier) pair."""

    baseline: float
    amplitude: float = 0.0
    phase: float = 0.0


@dataclass(frozen=True)
class SpotModel:
    """Spot-market price generator parameters shared by all quotes."""

    rates: Mapping[tuple[str, str], SpotRate]  # (product id, supplier id) -> curve
    period: float = 365.0
    noise_sd: float = 1.0
    competition_slope: float = 0.0  # unit-rate increase per unit requested
    competition_basis: str = "per_item"  # or "per_supplier_total"


@dataclass(frozen=True)
class PolicyKind:
    kind: str  # "naive" | "dynamic"
    po_overhead: float = 10.0  # charged once per purchase order beyond the first


@dataclass(frozen=True)
class DelayConfig:
    """Means of the exponential processing delays, in days."""

    creation_to_approval: float = 2.0
    approval_to_handling: float = 5.0
    rfq_response: float = 2.5
    handling_to_po: float = 0.1
    rfq_response_overrides: Mapping[str, float] = field(default_factory=dict)

    def rfq_mean(self, supplier_id: str) -> float:
        return self.rfq_response_overrides.get(supplier_id, self.rfq_response)


@dataclass(frozen=True)
class Scenario:
    """Full parameterization of one simulated world."""

    horizon: float
    catalog: Catalog
    vessels: tuple[Vessel, ...]
    suppliers: tuple[Supplier, ...]
    contracts: tuple[Contract, ...]
    spot: SpotModel
    policy: PolicyKind
    delays: DelayConfig = DelayConfig()
    hazard_window_width: float | None = None  # thinning lookahead override

    def __post_init__(self):
        object.__setattr__(self, "vessels", tuple(sorted(self.vessels, key=lambda v: v.id)))
        object.__setattr__(self, "suppliers", tuple(sorted(self.suppliers, key=lambda s: s.id)))
        object.__setattr__(
            self,
            "contracts",
            tuple(sorted(self.contracts, key=lambda c: (c.supplier_id, c.valid_from, c.valid_until))),
        )

    def supplier(self, supplier_id: str) -> Supplier:
        for s in self.suppliers:
            if s.id == supplier_id:
                return s
        raise KeyError(supplier_id)


def _check(condition: bool, message: str, path: str) -> None:
    if not condition:
        raise ScenarioValidationError(message, path)


def _finite(x: float) -> bool:
    return isinstance(x, (int, float)) and math.isfinite(x)


def _validate_hazard(spec: HazardSpec, path: str) -> None:
    base = spec.baseline
    if isinstance(base, ConstantBaseline):
        _check(_finite(base.rate) and base.rate > 0, "constant hazard rate must be positive", path)
    elif isinstance(base, WeibullBaseline):
        _check(_finite(base.shape) and base.shape > 0, "Weibull shape must be positive", path)
        _check(_finite(base.scale) and base.scale > 0, "Weibull scale must be positive", path)
    else:
        raise ScenarioValidationError("unknown baseline kind", path)
    for i, cov in enumerate(spec.covariates):
        _check(_finite(cov.period) and cov.period > 0, "covariate period must be positive", f"{path}.covariates[{i}]")


def validate_scenario(scenario: Scenario) -> Scenario:
    """Check every structural invariant; returns the scenario unchanged or raises.

    The error names the first violated invariant and the path of the offending
    element.
    """
    _check(_finite(scenario.horizon) and scenario.horizon > 0, "horizon must be positive", "horizon")

    supplier_ids = [s.id for s in scenario.suppliers]
    _check(len(set(supplier_ids)) == len(supplier_ids), "duplicate supplier id", "suppliers")
    known_suppliers = set(supplier_ids)

    seen_products: dict[str, str] = {}
    category_of_product: dict[str, str] = {}
    for c, category in enumerate(scenario.catalog.categories):
        cpath = f"catalog.categories[{c}]"
        _check(
            len(category.eligible_suppliers) <= MAX_SUPPLIERS_PER_CATEGORY,
            f"more than {MAX_SUPPLIERS_PER_CATEGORY} eligible suppliers", cpath,
        )
        for s in category.eligible_suppliers:
            _check(s in known_suppliers, f"unknown supplier {s!r}", f"{cpath}.eligible_suppliers")
        for p, product in enumerate(category.products):
            ppath = f"{cpath}.products[{p}]"
            _check(product.id not in seen_products, f"product {product.id!r} appears in two categories", ppath)
            seen_products[product.id] = ppath
            category_of_product[product.id] = category.id
            _check(isinstance(product.baseline_stock, int) and product.baseline_stock >= 1,
                   "baseline stock must be an integer >= 1", ppath)
            _check(_finite(product.depletion_rate) and product.depletion_rate > 0,
                   "depletion rate must be positive", ppath)

    eligible = {c.id: set(c.eligible_suppliers) for c in scenario.catalog.categories}
    for v, vessel in enumerate(scenario.vessels):
        vpath = f"vessels[{v}]"
        for category_id, spec in vessel.hazards.items():
            _check(category_id in eligible, f"unknown category {category_id!r}", f"{vpath}.hazards")
            _validate_hazard(spec, f"{vpath}.hazards[{category_id}]")

    windows: dict[tuple[str, str], list[tuple[float, float, str]]] = {}
    for i, contract in enumerate(scenario.contracts):
        path = f"contracts[{i}]"
        _check(contract.supplier_id in known_suppliers, f"unknown supplier {contract.supplier_id!r}", path)
        _check(contract.valid_from < contract.valid_until, "empty validity window", path)
        _check(contract.volume_commitment >= 0, "negative volume commitment", path)
        _check(len(contract.product_rates) > 0, "contract covers no products", path)
        for product_id, rate in contract.product_rates.items():
            ipath = f"{path}.product_rates[{product_id}]"
            _check(product_id in seen_products, f"unknown product {product_id!r}", ipath)
            _check(_finite(rate) and rate > 0, "contract rate must be positive", ipath)
            _check(
                contract.supplier_id in eligible[category_of_product[product_id]],
                f"supplier {contract.supplier_id!r} not eligible for category of {product_id!r}", ipath,
            )
            windows.setdefault((product_id, contract.supplier_id), []).append(
                (contract.valid_from, contract.valid_until, path)
            )

    for (product_id, supplier_id), spans in windows.items():
        spans.sort()
        for (s1, e1, _), (s2, _, path2) in zip(spans, spans[1:]):
            _check(s2 >= e1, f"overlapping contracts for ({product_id}, {supplier_id})", path2)

    spot = scenario.spot
    _check(_finite(spot.period) and spot.period > 0, "spot period must be positive", "spot.period")
    _check(_finite(spot.noise_sd) and spot.noise_sd >= 0, "spot noise sd must be non-negative", "spot.noise_sd")
    _check(_finite(spot.competition_slope) and spot.competition_slope >= 0,
           "competition slope must be non-negative", "spot.competition_slope")
    _check(spot.competition_basis in ("per_item", "per_supplier_total"),
           "competition basis must be per_item or per_supplier_total", "spot.competition_basis")
    for category in scenario.catalog.categories:
        for product in category.products:
            for supplier_id in category.eligible_suppliers:
                key = (product.id, supplier_id)
                _check(key in spot.rates, f"missing spot rate for {key}", "spot.rates")
                _check(_finite(spot.rates[key].baseline) and spot.rates[key].baseline > 0,
                       "spot baseline must be positive", f"spot.rates[{key}]")

    _check(scenario.policy.kind in ("naive", "dynamic"), "policy kind must be naive or dynamic", "policy.kind")
    _check(scenario.policy.po_overhead >= 0, "order overhead must be non-negative", "policy.po_overhead")

    d = scenario.delays
    for name in ("creation_to_approval", "approval_to_handling", "rfq_response", "handling_to_po"):
        _check(_finite(getattr(d, name)) and getattr(d, name) > 0, "delay mean must be positive", f"delays.{name}")
    for supplier_id, mean in d.rfq_response_overrides.items():
        _check(supplier_id in known_suppliers, f"unknown supplier {supplier_id!r}", "delays.rfq_response_overrides")
        _check(_finite(mean) and mean > 0, "delay mean must be positive",
               f"delays.rfq_response_overrides[{supplier_id}]")

    if scenario.hazard_window_width is not None:
        _check(_finite(scenario.hazard_window_width) and scenario.hazard_window_width > 0,
               "hazard window width must be positive", "hazard_window_width")

    return scenario
