"""Independent brute-force references used only by tests.

These stay deliberately naive: the allocation oracle enumerates every
assignment outright, and the Weibull CDF is the textbook closed form.  They
must not share code with the production solver or samplers they check.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

ENUMERATION_LIMIT = 2 ** 20


@dataclass(frozen=True)
class OracleInstance:
    costs: dict  # item -> {supplier -> unit cost}; absent supplier = unavailable
    quantities: dict  # item -> units
    po_overhead: float


def exhaustive_allocation(instance: OracleInstance) -> tuple[float, list[dict]]:
    """Minimum total cost and every assignment achieving it.

    Total cost is sum(unit cost * quantity) plus po_overhead per distinct
    supplier beyond the first.
    """
    items = sorted(instance.costs)
    option_lists = [sorted(instance.costs[item]) for item in items]
    size = 1
    for options in option_lists:
        size *= len(options)
    if size > ENUMERATION_LIMIT:
        raise ValueError(f"assignment space {size} exceeds {ENUMERATION_LIMIT}")

    best: float | None = None
    minimizers: list[dict] = []
    for combo in itertools.product(*option_lists):
        total = instance.po_overhead * (len(set(combo)) - 1)
        for item, supplier in zip(items, combo):
            total += instance.costs[item][supplier] * instance.quantities[item]
        if best is None or total < best:
            best = total
            minimizers = [dict(zip(items, combo))]
        elif total == best:
            minimizers.append(dict(zip(items, combo)))
    assert best is not None
    return best, minimizers


def weibull_cdf(shape: float, scale: float, x: float) -> float:
    if x < 0:
        raise ValueError("x must be non-negative")
    return 1.0 - math.exp(-((x / scale) ** shape))
