"""Network capacity: expectation of per-state optima over the state space.

Three modes share one state-evaluation engine:

  exact      full enumeration of the mixed-radix state space
  truncated  best-first sweep of the k most likely states, with bounds
             (unseen probability mass is bracketed by 0 and the all-pairs
             state's capacity)
  sampled    plain Monte Carlo over states with a counter-based RNG

Parallel runs split the index space into fixed-size chunks; per-chunk
partial sums are combined in chunk order with compensated summation, so
results are bit-identical for any worker count.
"""

from __future__ import annotations

import heapq
import math
import multiprocessing
import os
from dataclasses import dataclass
from typing import IO, Iterator, Optional, Sequence

import numpy as np

from .model import Topology
from .snapshot import (
    link_pmfs,
    num_states,
    state_from_index,
    write_state_rows,
)
from .solver import PathPacker

EXACT_STATE_BUDGET = 1 << 22
STATE_CHUNK = 1 << 14  # states per reduction chunk (fixed: determinism contract)
SAMPLE_CHUNK = 1 << 12  # samples per RNG block (fixed: substream derivation)


class StateBudgetError(ValueError):
    """Exact enumeration refused because the state space exceeds the budget."""


@dataclass(frozen=True)
class CapacityReport:
    """Capacity estimate with provenance; see module docstring for modes.

    In exact mode lower == upper == value. In truncated mode value is the
    midpoint of [lower, upper]. In sampled mode value is the sample mean,
    stderr its standard error, and covered_probability is reported as 0.
    """

    mode: str
    value: float
    lower: float
    upper: float
    covered_probability: float
    full_state_capacity: float
    states_evaluated: int
    stderr: Optional[float] = None
    seed: Optional[int] = None

    def as_dict(self) -> dict:
        out = {
            "mode": self.mode,
            "value": self.value,
            "lower": self.lower,
            "upper": self.upper,
            "covered_probability": self.covered_probability,
            "full_state_capacity": self.full_state_capacity,
            "states_evaluated": self.states_evaluated,
        }
        if self.stderr is not None:
            out["stderr"] = self.stderr
        if self.seed is not None:
            out["seed"] = self.seed
        return out


class _Kahan:
    """Compensated accumulator."""

    __slots__ = ("total", "_c")

    def __init__(self) -> None:
        self.total = 0.0
        self._c = 0.0

    def add(self, x: float) -> None:
        y = x - self._c
        t = self.total + y
        self._c = (t - self.total) - y
        self.total = t


def topology_packer(t: Topology) -> PathPacker:
    """Path-packing engine over the topology's own links and gains."""
    ids = sorted(n.id for n in t.nodes)
    index = {nid: i for i, nid in enumerate(ids)}
    return PathPacker(
        len(ids),
        [(index[l.u], index[l.v]) for l in t.links],
        [t.q_of(nid) for nid in ids],
        index[t.source],
        index[t.sink],
    )


def full_state_capacity(t: Topology) -> float:
    """Capacity of the state with every pair present (upper bound on any state)."""
    return topology_packer(t).value(t.capacities)


# Worker-process state (built once per worker via the pool initializer).
_ENGINE: Optional[tuple[Topology, PathPacker, list, tuple]] = None
_RAW_CACHE: dict[bytes, float] = {}
_RAW_CACHE_CAP = 1 << 19


def _init_engine(t: Topology) -> None:
    global _ENGINE, _RAW_CACHE
    pmfs = link_pmfs(t)
    _ENGINE = (t, topology_packer(t), pmfs, tuple(c + 1 for c in t.capacities))
    _RAW_CACHE = {}


def _exact_chunk(args: tuple[int, int, bool]):
    start, stop, want_rows = args
    t, packer, pmfs, bases = _ENGINE
    n_links = len(bases)
    vec = list(state_from_index(t, start).vector)
    value = _Kahan()
    covered = _Kahan()
    rows = [] if want_rows else None
    for index in range(start, stop):
        prob = 1.0
        for l in range(n_links):
            prob *= pmfs[l][vec[l]]
        cap = packer.value(vec)
        value.add(prob * cap)
        covered.add(prob)
        if rows is not None:
            rows.append((index, tuple(vec), prob, cap))
        for l in range(n_links - 1, -1, -1):
            vec[l] += 1
            if vec[l] < bases[l]:
                break
            vec[l] = 0
    return value.total, covered.total, rows


def _sample_chunk(args: tuple[int, int, int, bool]):
    chunk_index, count, seed, want_rows = args
    t, packer, pmfs, bases = _ENGINE
    key = ((seed & 0xFFFFFFFFFFFFFFFF) << 64) | (chunk_index & 0xFFFFFFFFFFFFFFFF)
    gen = np.random.Generator(np.random.Philox(key=key))
    caps = t.capacities
    probs = t.probabilities
    slot_p = np.repeat(np.asarray(probs), caps)
    offsets = np.concatenate(([0], np.cumsum(caps)[:-1]))
    hits = (gen.random((count, len(slot_p))) < slot_p).astype(np.int64)
    counts = np.add.reduceat(hits, offsets, axis=1)
    total = _Kahan()
    total_sq = _Kahan()
    lo, hi = math.inf, -math.inf
    rows = [] if want_rows else None
    n_links = len(bases)
    cache = _RAW_CACHE
    for vec in counts.tolist():
        key = bytes(vec)
        cap = cache.get(key)
        if cap is None:
            cap = packer.value(vec)
            if len(cache) >= _RAW_CACHE_CAP:
                cache.clear()
            cache[key] = cap
        total.add(cap)
        total_sq.add(cap * cap)
        if cap < lo:
            lo = cap
        if cap > hi:
            hi = cap
        if rows is not None:
            prob = 1.0
            for l in range(n_links):
                prob *= pmfs[l][vec[l]]
            index = 0
            for l in range(n_links):
                index = index * bases[l] + vec[l]
            rows.append((index, tuple(vec), prob, cap))
    return total.total, total_sq.total, lo, hi, rows


def _run_chunks(t: Topology, jobs: Sequence, fn, threads: int) -> Iterator:
    """Runs chunk jobs across a fork pool, yielding results in job order."""
    workers = threads if threads > 0 else (os.cpu_count() or 1)
    if workers <= 1 or len(jobs) <= 1:
        _init_engine(t)
        for job in jobs:
            yield fn(job)
        return
    ctx = multiprocessing.get_context("fork")
    with ctx.Pool(workers, initializer=_init_engine, initargs=(t,)) as pool:
        yield from pool.imap(fn, jobs)


def _open_rows(path_or_fh) -> tuple[IO[str], bool]:
    if hasattr(path_or_fh, "write"):
        return path_or_fh, False
    return open(path_or_fh, "w", encoding="utf-8", newline=""), True


def exact_capacity(
    t: Topology,
    threads: int = 0,
    budget: Optional[int] = EXACT_STATE_BUDGET,
    per_state: Optional[object] = None,
) -> CapacityReport:
    """Exact capacity: sum of P(state) * capacity(state) over every state."""
    n = num_states(t)
    if budget is not None and n > budget:
        raise StateBudgetError(
            f"state space holds {n} states, over the budget of {budget}; "
            "use truncated_capacity or sampled_capacity, or raise the budget"
        )
    full_cap = full_state_capacity(t)
    want_rows = per_state is not None
    jobs = [(a, min(a + STATE_CHUNK, n), want_rows) for a in range(0, n, STATE_CHUNK)]
    value = _Kahan()
    covered = _Kahan()
    rows_fh, close_rows = _open_rows(per_state) if want_rows else (None, False)
    try:
        if rows_fh is not None:

            def emit() -> Iterator:
                for chunk_value, chunk_covered, rows in _run_chunks(
                    t, jobs, _exact_chunk, threads
                ):
                    value.add(chunk_value)
                    covered.add(chunk_covered)
                    yield from rows

            write_state_rows(rows_fh, emit())
        else:
            for chunk_value, chunk_covered, _ in _run_chunks(t, jobs, _exact_chunk, threads):
                value.add(chunk_value)
                covered.add(chunk_covered)
    finally:
        if close_rows:
            rows_fh.close()
    return CapacityReport(
        mode="exact",
        value=value.total,
        lower=value.total,
        upper=value.total,
        covered_probability=covered.total,
        full_state_capacity=full_cap,
        states_evaluated=n,
    )


def truncated_capacity(t: Topology, k: int) -> CapacityReport:
    """Bounds from the k most likely states, visited best-first.

    lower sums P * capacity over the visited states; upper adds the unseen
    probability mass times the all-pairs state capacity.
    """
    if k < 1:
        raise ValueError(f"state budget k must be >= 1, got {k}")
    full_cap = full_state_capacity(t)
    _init_engine(t)
    _, packer, pmfs, bases = _ENGINE
    n_links = len(bases)
    # per-link counts ranked by decreasing probability (ties: lower count)
    ranked = [
        sorted(range(bases[l]), key=lambda c: (-pmfs[l][c], c)) for l in range(n_links)
    ]

    def state_of(rank_vec: tuple[int, ...]) -> list[int]:
        return [ranked[l][r] for l, r in enumerate(rank_vec)]

    def prob_of(rank_vec: tuple[int, ...]) -> float:
        prob = 1.0
        for l, r in enumerate(rank_vec):
            prob *= pmfs[l][ranked[l][r]]
        return prob

    def index_of(vec: Sequence[int]) -> int:
        index = 0
        for l in range(n_links):
            index = index * bases[l] + vec[l]
        return index

    root = (0,) * n_links
    heap = [(-prob_of(root), index_of(state_of(root)), root, 0)]
    seen_pops = 0
    lower = _Kahan()
    covered = _Kahan()
    while heap and seen_pops < k:
        neg_prob, _, rank_vec, min_l = heapq.heappop(heap)
        vec = state_of(rank_vec)
        lower.add(-neg_prob * packer.value(vec))
        covered.add(-neg_prob)
        seen_pops += 1
        for l in range(min_l, n_links):
            if rank_vec[l] + 1 < bases[l]:
                child = rank_vec[:l] + (rank_vec[l] + 1,) + rank_vec[l + 1 :]
                heapq.heappush(
                    heap, (-prob_of(child), index_of(state_of(child)), child, l)
                )
    gap = max(0.0, 1.0 - covered.total)
    upper = lower.total + gap * full_cap
    return CapacityReport(
        mode="truncated",
        value=0.5 * (lower.total + upper),
        lower=lower.total,
        upper=upper,
        covered_probability=covered.total,
        full_state_capacity=full_cap,
        states_evaluated=seen_pops,
    )


def sampled_capacity(
    t: Topology,
    samples: int,
    seed: int = 0,
    threads: int = 0,
    per_state: Optional[object] = None,
) -> CapacityReport:
    """Monte Carlo estimate: mean capacity over i.i.d. sampled states.

    Sample i is drawn from a Philox substream keyed by (seed, i // 4096),
    so runs are reproducible for a fixed seed regardless of worker count.
    """
    if samples < 1:
        raise ValueError(f"sample count must be >= 1, got {samples}")
    full_cap = full_state_capacity(t)
    want_rows = per_state is not None
    jobs = []
    done = 0
    while done < samples:
        m = min(SAMPLE_CHUNK, samples - done)
        jobs.append((len(jobs), m, seed, want_rows))
        done += m
    total = _Kahan()
    total_sq = _Kahan()
    lo, hi = math.inf, -math.inf
    rows_fh, close_rows = _open_rows(per_state) if want_rows else (None, False)
    try:
        if rows_fh is not None:

            def emit() -> Iterator:
                nonlocal lo, hi
                for c_total, c_sq, c_lo, c_hi, rows in _run_chunks(
                    t, jobs, _sample_chunk, threads
                ):
                    total.add(c_total)
                    total_sq.add(c_sq)
                    lo, hi = min(lo, c_lo), max(hi, c_hi)
                    yield from rows

            write_state_rows(rows_fh, emit())
        else:
            for c_total, c_sq, c_lo, c_hi, _ in _run_chunks(t, jobs, _sample_chunk, threads):
                total.add(c_total)
                total_sq.add(c_sq)
                lo, hi = min(lo, c_lo), max(hi, c_hi)
    finally:
        if close_rows:
            rows_fh.close()
    mean = total.total / samples
    if samples > 1 and hi > lo:
        variance = max(0.0, (total_sq.total - samples * mean * mean) / (samples - 1))
    else:
        variance = 0.0
    return CapacityReport(
        mode="sampled",
        value=mean,
        lower=mean,
        upper=mean,
        covered_probability=0.0,
        full_state_capacity=full_cap,
        states_evaluated=samples,
        stderr=math.sqrt(variance / samples),
        seed=seed,
    )
