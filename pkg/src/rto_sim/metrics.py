"""Cost, counting-process, and contract-compliance accounting."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import Allocation, Contract

__all__ = [
    "ComplianceLedger",
    "RunResult",
    "record_allocation",
    "utilization",
    "DistributionSummary",
    "summarize_values",
    "summarize_batch",
    "count_local_maxima",
    "QUANTILE_LEVELS",
]

QUANTILE_LEVELS = (1, 5, 25, 50, 75, 95, 99)


@dataclass
class ComplianceLedger:
    """Volume allocated under contract terms per supplier, against commitments."""

    commitments: dict[str, int]
    volumes: dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_contracts(cls, contracts: Iterable[Contract]) -> "ComplianceLedger":
        commitments: dict[str, int] = {}
        volumes: dict[str, int] = {}
        for contract in contracts:
            commitments[contract.supplier_id] = (
                commitments.get(contract.supplier_id, 0) + contract.volume_commitment
            )
            volumes.setdefault(contract.supplier_id, 0)
        return cls(commitments=commitments, volumes=volumes)


def record_allocation(ledger: ComplianceLedger, allocation: Allocation) -> float:
    """Accrue one finalized order; returns its cost delta.

    Only contract-provenance items count toward committed volume: spot
    allocations to a supplier who also holds a contract do not fulfil it.
    """
    delta = allocation.overhead_cost
    for item in allocation.items.values():
        delta += item.unit_cost * item.quantity
        if item.provenance == "contract":
            ledger.volumes[item.supplier_id] = ledger.volumes.get(item.supplier_id, 0) + item.quantity
    return delta


def utilization(volume: int, commitment: int) -> float:
    """Fraction of the committed volume actually allocated under contract."""
    if commitment <= 0:
        raise ValueError("utilization undefined for zero commitment")
    return volume / commitment


@dataclass(frozen=True)
class RunResult:
    """Terminal metrics of one replication."""

    run_index: int
    terminal_cost: float
    volumes: Mapping[str, int]  # contracted suppliers only
    utilizations: Mapping[str, float]  # absent where commitment is zero
    deviations: Mapping[str, int]  # volume - commitment
    n_pr: int
    n_hl: int
    n_po: int
    n_rfq: Mapping[str, int]  # responses per supplier
    in_flight: int
    empty_draws: int


@dataclass(frozen=True)
class DistributionSummary:
    count: int
    mean: float
    std: float
    minimum: float
    maximum: float
    quantiles: Mapping[int, float]  # percent level -> value
    histogram: tuple[tuple[float, float, int], ...]  # (bin left, bin right, count)


def summarize_values(values: Sequence[float], bins: int = 100) -> DistributionSummary:
    """Moment, quantile, and fixed-bin histogram summary of one metric."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty batch")
    lo, hi = float(arr.min()), float(arr.max())
    levels = np.array(QUANTILE_LEVELS, dtype=float) / 100.0
    quantiles = {level: float(q) for level, q in zip(QUANTILE_LEVELS, np.quantile(arr, levels))}
    if hi == lo:
        histogram = ((lo, hi, int(arr.size)),)
    else:
        counts, edges = np.histogram(arr, bins=bins, range=(lo, hi))
        histogram = tuple(
            (float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))
        )
    return DistributionSummary(
        count=int(arr.size),
        mean=float(arr.mean()),
        std=float(arr.std()),
        minimum=lo,
        maximum=hi,
        quantiles=quantiles,
        histogram=histogram,
    )


def summarize_batch(results: Sequence[RunResult], bins: int = 100) -> dict[str, DistributionSummary]:
    """Distribution summaries for every numeric per-run metric."""
    if not results:
        raise ValueError("cannot summarize an empty batch")
    metrics: dict[str, list[float]] = {
        "terminal_cost": [r.terminal_cost for r in results],
        "n_pr": [r.n_pr for r in results],
        "n_hl": [r.n_hl for r in results],
        "n_po": [r.n_po for r in results],
        "in_flight": [r.in_flight for r in results],
        "empty_draws": [r.empty_draws for r in results],
    }
    first = results[0]
    for supplier_id in sorted(first.volumes):
        metrics[f"volume_{supplier_id}"] = [r.volumes[supplier_id] for r in results]
        metrics[f"deviation_{supplier_id}"] = [r.deviations[supplier_id] for r in results]
    for supplier_id in sorted(first.utilizations):
        metrics[f"utilization_{supplier_id}"] = [r.utilizations[supplier_id] for r in results]
    for supplier_id in sorted(first.n_rfq):
        metrics[f"n_rfq_{supplier_id}"] = [r.n_rfq[supplier_id] for r in results]
    return {name: summarize_values(values, bins=bins) for name, values in metrics.items()}


def count_local_maxima(counts: Sequence[float], smooth_window: int = 1) -> int:
    """Local maxima of a histogram after moving-average smoothing.

    Runs of equal smoothed values collapse to one candidate; a run counts as a
    maximum when it sits above both neighbours (edges compare to the single
    inner neighbour).
    """
    n = len(counts)
    if n == 0:
        return 0
    half = max(0, smooth_window // 2)
    # edge replication keeps every window the same length; truncated windows
    # would alias jitter into spurious edge peaks
    padded = [counts[0]] * half + list(counts) + [counts[-1]] * half
    width = 2 * half + 1
    smoothed = [sum(padded[i:i + width]) / width for i in range(n)]
    levels: list[float] = []
    for v in smoothed:
        if not levels or v != levels[-1]:
            levels.append(v)
    peaks = 0
    for i, v in enumerate(levels):
        left_lower = i == 0 or levels[i - 1] < v
        right_lower = i == len(levels) - 1 or levels[i + 1] < v
        if left_lower and right_lower and len(levels) > 1:
            peaks += 1
    return peaks
