"""Requisition generation from latent shipboard inventories.

Timing follows a renewal process per (vessel, category) whose clock resets at
each request.  Content comes from a replenishment model: stock depletes
linearly, the chance of including a product grows with the depleted fraction,
and included products are restocked to their baseline level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import hazards
from .domain import Category, Requisition, Vessel

__all__ = [
    "InventoryState",
    "inventory_level",
    "propensity",
    "build_requisition",
    "next_requisition_time",
]


@dataclass
class InventoryState:
    """Last-replenishment clock per product for one vessel; levels are derived."""

    last_replenished: dict[str, float]

    @classmethod
    def fresh(cls, category: Category) -> "InventoryState":
        return cls({p.id: 0.0 for p in category.products})


def inventory_level(q0: int, depletion_rate: float, t: float, t_last: float) -> float:
    """Linear depletion since the last restock, clamped at zero so it stays a valid stock level."""
    if t < t_last:
        raise ValueError("query time precedes last replenishment")
    return max(0.0, q0 - depletion_rate * (t - t_last))


def propensity(q0: int, level: float) -> float:
    """Inclusion probability: the depleted fraction of baseline stock."""
    if q0 <= 0:
        raise ValueError("baseline stock must be positive")
    if level < 0 or level > q0:
        raise ValueError("level outside [0, q0]")
    return (q0 - level) / q0


def build_requisition(vessel: Vessel, category: Category, inventory: InventoryState,
                      t: float, rng, pr_id: str = "") -> Requisition | None:
    """Sample the content of a request triggered at time t; None when nothing is included.

    Inclusion is decided per product by inverse transform (include iff U < p),
    consuming exactly one draw per product regardless of outcome, so a fixed
    stream yields comparable draws across scenarios.  Included products are
    restocked to baseline (quantity = depleted amount, rounded up); inventory
    is untouched when the draw comes up empty.
    """
    items: dict[str, int] = {}
    for product in category.products:
        level = inventory_level(product.baseline_stock, product.depletion_rate,
                                t, inventory.last_replenished[product.id])
        p = propensity(product.baseline_stock, level)
        if rng.random() < p:
            items[product.id] = math.ceil(product.baseline_stock - level)
    if not items:
        return None
    for product_id in items:
        inventory.last_replenished[product_id] = t
    return Requisition(id=pr_id, vessel_id=vessel.id, category_id=category.id,
                       created_at=t, items=items)


def next_requisition_time(vessel: Vessel, category: Category, t_last_event: float,
                          horizon: float, rng, window_width: float | None = None) -> float | None:
    """Next trigger time for the (vessel, category) renewal clock, or None past the horizon."""
    spec = vessel.hazards[category.id]
    return hazards.sample_gap(spec, t_last_event, horizon, rng, window_width=window_width)
