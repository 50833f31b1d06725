"""Discrete-event kernel: future-event queue, event routines, and replication driver.

Each replication is single-threaded over its own state.  Randomness comes
from a keyed splittable plan: every (run, purpose, entity) triple owns an
independent stream, so results are reproducible regardless of execution
order or parallelism, and policy variants of the same scenario face
identical demand (common random numbers).
"""

from __future__ import annotations

import hashlib
import heapq
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from . import demand
from .domain import EventRecord, Quote, Requisition, Scenario
from .market import ContractBook, make_quote
from .metrics import ComplianceLedger, RunResult, record_allocation, utilization
from .policy import allocate_min_cost, build_cost_matrix, decide_rfq_scope

__all__ = [
    "PR_GENERATION",
    "PR_HANDLING",
    "RFQ_RESPONSE",
    "PO_GENERATION",
    "TERMINATION",
    "RngPlan",
    "SimEvent",
    "HandlingRecord",
    "RunOutput",
    "BatchResult",
    "BatchRunError",
    "run_once",
    "run_batch",
    "audit_event_log",
]

PR_GENERATION = "pr_generation"
PR_HANDLING = "pr_handling"
RFQ_RESPONSE = "rfq_response"
PO_GENERATION = "po_generation"
TERMINATION = "termination"


@dataclass(frozen=True)
class RngPlan:
    """Keyed derivation of independent random streams.

    Streams are addressed by (run index, purpose label, entity id); the key is
    hashed into a 128-bit PCG64 seed, so stream identity never depends on how
    many draws other streams consumed.
    """

    master_seed: int

    def stream(self, run_index: int, purpose: str, entity: str = "") -> np.random.Generator:
        key = hashlib.blake2b(
            f"{self.master_seed}|{run_index}|{purpose}|{entity}".encode(), digest_size=16
        ).digest()
        return np.random.Generator(np.random.PCG64(int.from_bytes(key, "little")))


@dataclass(frozen=True)
class SimEvent:
    time: float
    seq: int
    kind: str
    vessel_id: str | None = None
    category_id: str | None = None
    pr_id: str | None = None
    supplier_id: str | None = None


@dataclass(frozen=True)
class HandlingRecord:
    """Handling payload: the contract snapshot and the decided RFQ scope."""

    contract_terms: Mapping[str, Mapping[str, tuple[float, float]]]
    rfq_items: tuple[str, ...]
    rfq_suppliers: tuple[str, ...]


@dataclass
class _PendingPR:
    requisition: Requisition
    contract_terms: Mapping[str, Mapping[str, tuple[float, float]]] | None = None
    scope_items: tuple[str, ...] = ()
    quotes: dict[str, Quote] = field(default_factory=dict)
    quote_streams: dict[str, np.random.Generator] = field(default_factory=dict)
    awaiting: int = 0


@dataclass(frozen=True)
class RunOutput:
    result: RunResult
    log: tuple[EventRecord, ...]


@dataclass(frozen=True)
class BatchResult:
    results: tuple[RunResult, ...]
    logs: Mapping[int, tuple[EventRecord, ...]] | None = None


class BatchRunError(RuntimeError):
    """A replication failed; aborts the whole batch."""

    def __init__(self, run_index: int, message: str):
        self.run_index = run_index
        super().__init__(f"run {run_index} failed: {message}")

    def __reduce__(self):
        return (BatchRunError, (self.run_index, self.args[0].split(": ", 1)[1]))


def _exponential(mean: float, rng) -> float:
    return -mean * math.log(1.0 - rng.random())


def run_once(scenario: Scenario, run_index: int, master_seed: int,
             *, rng_plan: RngPlan | None = None, collect_log: bool = True) -> RunOutput:
    """Execute one replication up to the horizon.

    Wiring: initialization schedules the termination marker and the first
    request trigger per (vessel, category).  A trigger samples the request
    content, always reschedules the next trigger from the trigger time, and,
    when material, schedules handling after the creation-to-approval plus
    approval-to-handling delays.  Handling snapshots active contract terms,
    decides the RFQ scope, and either schedules the order directly or one
    response per quoted supplier.  The last pending response schedules the
    order.  Order generation allocates at minimum cost and accrues metrics.
    Events falling after the horizon are discarded; requests whose lifecycle
    is incomplete by then count as in-flight and stay out of the totals.
    """
    plan = rng_plan if rng_plan is not None else RngPlan(master_seed)
    horizon = scenario.horizon
    policy = scenario.policy
    spot = scenario.spot
    book = ContractBook(scenario.contracts)
    window = scenario.hazard_window_width

    categories = {c.id: c for c in scenario.catalog.categories}
    lead_times = {s.id: s.spot_lead_time for s in scenario.suppliers}

    queue: list[tuple[float, int, SimEvent]] = []
    seq = 0

    def schedule(time: float, kind: str, **fields) -> None:
        nonlocal seq
        if time > horizon:
            return
        event = SimEvent(time=time, seq=seq, kind=kind, **fields)
        heapq.heappush(queue, (time, seq, event))
        seq += 1

    schedule(horizon, TERMINATION)

    gap_streams: dict[tuple[str, str], np.random.Generator] = {}
    item_streams: dict[tuple[str, str], np.random.Generator] = {}
    inventories: dict[tuple[str, str], demand.InventoryState] = {}
    pr_counters: dict[tuple[str, str], int] = {}
    vessels = {v.id: v for v in scenario.vessels}

    for vessel in scenario.vessels:
        for category_id in sorted(vessel.hazards):
            pair = (vessel.id, category_id)
            entity = f"{vessel.id}:{category_id}"
            gap_streams[pair] = plan.stream(run_index, "pr-gap", entity)
            item_streams[pair] = plan.stream(run_index, "pr-items", entity)
            inventories[pair] = demand.InventoryState.fresh(categories[category_id])
            pr_counters[pair] = 0
            t = demand.next_requisition_time(vessel, categories[category_id], 0.0,
                                             horizon, gap_streams[pair], window_width=window)
            if t is not None:
                schedule(t, PR_GENERATION, vessel_id=vessel.id, category_id=category_id)

    pending: dict[str, _PendingPR] = {}
    delay_streams: dict[str, np.random.Generator] = {}
    ledger = ComplianceLedger.from_contracts(scenario.contracts)
    terminal_cost = 0.0
    n_pr = n_hl = n_po = 0
    n_rfq = {s.id: 0 for s in scenario.suppliers}
    empty_draws = 0
    log: list[EventRecord] = []
    clock = 0.0

    while queue:
        time, _, event = heapq.heappop(queue)
        assert time >= clock, "event queue delivered a time in the past"
        clock = time

        if event.kind == TERMINATION:
            if collect_log:
                log.append(EventRecord(kind=TERMINATION, time=time))
            break

        if event.kind == PR_GENERATION:
            vessel = vessels[event.vessel_id]
            category = categories[event.category_id]
            pair = (event.vessel_id, event.category_id)
            pr_id = f"{event.vessel_id}:{event.category_id}:{pr_counters[pair]}"
            requisition = demand.build_requisition(vessel, category, inventories[pair],
                                                   time, item_streams[pair], pr_id=pr_id)
            # renewal clock resets on the trigger whether or not it was material
            t_next = demand.next_requisition_time(vessel, category, time, horizon,
                                                  gap_streams[pair], window_width=window)
            if t_next is not None:
                schedule(t_next, PR_GENERATION, vessel_id=event.vessel_id,
                         category_id=event.category_id)
            if requisition is None:
                empty_draws += 1
                continue
            pr_counters[pair] += 1
            n_pr += 1
            pending[pr_id] = _PendingPR(requisition=requisition)
            delay_streams[pr_id] = plan.stream(run_index, "pr-delays", pr_id)
            d = delay_streams[pr_id]
            handling_at = (time + _exponential(scenario.delays.creation_to_approval, d)
                           + _exponential(scenario.delays.approval_to_handling, d))
            schedule(handling_at, PR_HANDLING, pr_id=pr_id)
            if collect_log:
                log.append(EventRecord(kind=PR_GENERATION, time=time, pr_id=pr_id,
                                       vessel_id=event.vessel_id, category_id=event.category_id,
                                       payload=requisition))

        elif event.kind == PR_HANDLING:
            state = pending[event.pr_id]
            requisition = state.requisition
            category = categories[requisition.category_id]
            n_hl += 1
            terms = book.terms_snapshot(sorted(requisition.items),
                                        category.eligible_suppliers, time)
            state.contract_terms = terms
            scope = decide_rfq_scope(requisition, terms, policy, category.eligible_suppliers)
            scope_items = tuple(sorted({item for item, _ in scope}))
            scope_suppliers = tuple(sorted({supplier for _, supplier in scope}))
            state.scope_items = scope_items
            if collect_log:
                log.append(EventRecord(kind=PR_HANDLING, time=time, pr_id=event.pr_id,
                                       vessel_id=requisition.vessel_id,
                                       category_id=requisition.category_id,
                                       payload=HandlingRecord(contract_terms=terms,
                                                              rfq_items=scope_items,
                                                              rfq_suppliers=scope_suppliers)))
            if not scope:
                po_at = time + _exponential(scenario.delays.handling_to_po,
                                            delay_streams[event.pr_id])
                schedule(po_at, PO_GENERATION, pr_id=event.pr_id)
                continue
            state.awaiting = len(scope_suppliers)
            for supplier_id in scope_suppliers:
                stream = plan.stream(run_index, "rfq", f"{event.pr_id}|{supplier_id}")
                state.quote_streams[supplier_id] = stream
                response_at = time + _exponential(scenario.delays.rfq_mean(supplier_id), stream)
                schedule(response_at, RFQ_RESPONSE, pr_id=event.pr_id, supplier_id=supplier_id)

        elif event.kind == RFQ_RESPONSE:
            state = pending[event.pr_id]
            requisition = state.requisition
            category = categories[requisition.category_id]
            n_rfq[event.supplier_id] += 1
            quote = make_quote(spot, requisition, event.supplier_id, time,
                               state.quote_streams.pop(event.supplier_id),
                               items=state.scope_items,
                               category_product_ids=category.product_ids,
                               lead_time=lead_times[event.supplier_id])
            state.quotes[event.supplier_id] = quote
            state.awaiting -= 1
            if collect_log:
                log.append(EventRecord(kind=RFQ_RESPONSE, time=time, pr_id=event.pr_id,
                                       supplier_id=event.supplier_id, payload=quote))
            if state.awaiting == 0:
                po_at = time + _exponential(scenario.delays.handling_to_po,
                                            delay_streams[event.pr_id])
                schedule(po_at, PO_GENERATION, pr_id=event.pr_id)

        elif event.kind == PO_GENERATION:
            state = pending.pop(event.pr_id)
            requisition = state.requisition
            matrix = build_cost_matrix(requisition, state.contract_terms, state.quotes, policy,
                                       competition_slope=spot.competition_slope,
                                       competition_basis=spot.competition_basis)
            allocation = replace(
                allocate_min_cost(matrix, requisition.items, policy.po_overhead),
                pr_id=event.pr_id,
            )
            terminal_cost += record_allocation(ledger, allocation)
            n_po += 1
            delay_streams.pop(event.pr_id, None)
            if collect_log:
                log.append(EventRecord(kind=PO_GENERATION, time=time, pr_id=event.pr_id,
                                       payload=allocation))

        else:  # pragma: no cover - queue only ever holds the kinds above
            raise AssertionError(f"unknown event kind {event.kind!r}")

    utilizations = {s: utilization(ledger.volumes[s], k)
                    for s, k in sorted(ledger.commitments.items()) if k > 0}
    deviations = {s: ledger.volumes[s] - k for s, k in sorted(ledger.commitments.items())}
    result = RunResult(
        run_index=run_index,
        terminal_cost=terminal_cost,
        volumes=dict(sorted(ledger.volumes.items())),
        utilizations=utilizations,
        deviations=deviations,
        n_pr=n_pr,
        n_hl=n_hl,
        n_po=n_po,
        n_rfq=n_rfq,
        in_flight=len(pending),
        empty_draws=empty_draws,
    )
    return RunOutput(result=result, log=tuple(log))


def _run_span(args) -> list:
    scenario, master_seed, indices, collect_logs = args
    out = []
    for run_index in indices:
        try:
            output = run_once(scenario, run_index, master_seed, collect_log=collect_logs)
        except Exception as exc:  # noqa: BLE001 - reported with the failing index
            raise BatchRunError(run_index, repr(exc)) from exc
        out.append((run_index, output.result, output.log if collect_logs else None))
    return out


def run_batch(scenario: Scenario, n_runs: int, master_seed: int,
              *, parallelism: int = 1, collect_logs: bool = False) -> BatchResult:
    """Independent replications indexed 0..n_runs-1.

    Results are bit-identical for a fixed (scenario, master_seed) whatever the
    parallelism degree: runs derive their randomness from their index alone
    and are merged back in index order.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be at least 1")
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")

    spans: list[list[int]] = []
    chunk = max(1, -(-n_runs // (parallelism * 4)))
    for start in range(0, n_runs, chunk):
        spans.append(list(range(start, min(start + chunk, n_runs))))

    rows: list[tuple] = []
    if parallelism == 1 or n_runs == 1:
        for span in spans:
            rows.extend(_run_span((scenario, master_seed, span, collect_logs)))
    else:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            for chunk_rows in pool.map(
                _run_span,
                [(scenario, master_seed, span, collect_logs) for span in spans],
            ):
                rows.extend(chunk_rows)

    rows.sort(key=lambda r: r[0])
    results = tuple(r[1] for r in rows)
    logs = {r[0]: r[2] for r in rows} if collect_logs else None
    return BatchResult(results=results, logs=logs)


_LIFECYCLE_ORDER = {PR_GENERATION: 0, PR_HANDLING: 1, RFQ_RESPONSE: 2, PO_GENERATION: 3}


def audit_event_log(log: Iterable[EventRecord]) -> list[str]:
    """Post-hoc consistency check of one run's event log; returns violations.

    Checks executed-clock monotonicity, per-request time ordering, lifecycle
    completeness of finished requests (one handling, one order, one response
    per quoted supplier), and the terminal counting inequalities
    orders <= handlings <= requests.
    """
    violations: list[str] = []
    last_time = None
    by_pr: dict[str, list[EventRecord]] = {}
    counts = {PR_GENERATION: 0, PR_HANDLING: 0, RFQ_RESPONSE: 0, PO_GENERATION: 0}

    for record in log:
        if last_time is not None and record.time < last_time:
            violations.append(f"clock moved backwards at {record.kind} t={record.time}")
        last_time = record.time
        if record.kind in counts:
            counts[record.kind] += 1
        if record.pr_id is not None:
            by_pr.setdefault(record.pr_id, []).append(record)

    for pr_id, records in by_pr.items():
        stage_times = [(_LIFECYCLE_ORDER[r.kind], r.time) for r in records]
        for (s1, t1), (s2, t2) in zip(stage_times, stage_times[1:]):
            if s2 < s1 or t2 < t1:
                violations.append(f"{pr_id}: lifecycle out of order")
                break
        kinds = [r.kind for r in records]
        if kinds.count(PR_GENERATION) != 1:
            violations.append(f"{pr_id}: expected exactly one generation event")
        completed = PO_GENERATION in kinds
        if kinds.count(PO_GENERATION) > 1 or kinds.count(PR_HANDLING) > 1:
            violations.append(f"{pr_id}: duplicated lifecycle stage")
        if completed:
            handling = next((r for r in records if r.kind == PR_HANDLING), None)
            if kinds.count(PR_HANDLING) != 1 or handling is None:
                violations.append(f"{pr_id}: completed without exactly one handling event")
            if handling is not None:
                expected = set(handling.payload.rfq_suppliers)
                responded = [r.supplier_id for r in records if r.kind == RFQ_RESPONSE]
                if sorted(responded) != sorted(expected):
                    violations.append(
                        f"{pr_id}: responses {sorted(responded)} != scope {sorted(expected)}"
                    )

    if not counts[PO_GENERATION] <= counts[PR_HANDLING] <= counts[PR_GENERATION]:
        violations.append(
            "terminal counts violate orders <= handlings <= requests: "
            f"{counts[PO_GENERATION]}, {counts[PR_HANDLING]}, {counts[PR_GENERATION]}"
        )
    return violations
