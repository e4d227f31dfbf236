"""Discrete-event replay of a trace through a simulated cluster.

Requests arrive in trace order at ``ts_ms * time_scale``. Each node owns a
dual-format cache, an alpha tuner and a set of FIFO GPUs. Request paths:

  image hit     net
  latent hit    [transfer if spilled] + queue + decode + net
  full miss     fetch + queue + decode + net
  follower      coalesce wait + net

``img-store`` caches decoded images only and answers a miss with a fetch
scaled by image/latent size. ``decode-all`` fetches and decodes every request.

Scheduled events sit in a heap ordered by (time, seq). Events due at or before
an arrival are handled first. Virtual time only.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, Optional

import numpy as np
import pandas as pd
from tqdm import tqdm

from latentsim.caches.dualcache import IMAGE, DualCache, DualCacheConfig, Outcome
from latentsim.errors import EmptyTraceError, TraceFormatError, UnknownObjectError
from latentsim.routing.router import InFlightMap, Role, route
from latentsim.routing.routerring import Ring
from latentsim.sim.simconfig import ClusterConfig, Policy
from latentsim.sim.simreport import REQUEST_COLUMNS, SimReport, summarize
from latentsim.traces.tracetypes import Catalog, is_sorted
from latentsim.tuning.tuner import RECORD_COLUMNS, AlphaTuner, LatencyKind, desk_window

logger = logging.getLogger(__name__)

FETCH_DONE = 0
TRANSFER_DONE = 1
GPU_DONE = 2

OUTCOMES = list(Outcome)
_CODE = {o: i for i, o in enumerate(OUTCOMES)}


@dataclass
class _Job:
    request: Optional[int]  # None for background decodes
    node: int
    enqueued_at: float
    started_at: float = 0.0


class _Gpu:
    __slots__ = ("queue", "current")

    def __init__(self):
        self.queue: Deque[_Job] = deque()
        self.current: Optional[_Job] = None

    @property
    def depth(self) -> int:
        return len(self.queue) + (self.current is not None)


def check_replay_inputs(trace: pd.DataFrame, catalog: Catalog) -> None:
    if len(trace) == 0:
        raise EmptyTraceError("cannot replay an empty trace")
    if not is_sorted(trace):
        raise TraceFormatError("trace must be sorted by ts_ms")
    missing = set(np.unique(trace["object_id"].to_numpy()).tolist()).difference(catalog)
    if missing:
        raise UnknownObjectError(min(missing))


def owner_counts(ring: Ring, object_ids: np.ndarray) -> Dict[int, int]:
    """Requests per owner node."""
    ids, counts = np.unique(object_ids, return_counts=True)
    traffic = {node: 0 for node in ring.nodes}
    for oid, k in zip(ids.tolist(), counts.tolist()):
        traffic[ring.owner_of(int(oid))] += int(k)
    return traffic


class ClusterSim:
    """Mutable state of one run. Use :func:`run` rather than this class."""

    def __init__(self, trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig):
        cfg.validate()
        check_replay_inputs(trace, catalog)
        self.cfg = cfg
        self.policy = Policy(cfg.policy)
        self.lat = cfg.latency
        self.catalog = catalog
        self.rng = np.random.default_rng(cfg.seed)
        self.ring = Ring.build(range(cfg.n_nodes), cfg.vnodes_per_node)
        self.nodes = list(self.ring.nodes)

        n = len(trace)
        self.ts = trace["ts_ms"].to_numpy(dtype=np.uint64)
        self.oids = trace["object_id"].to_numpy(dtype=np.uint64)
        self.arrival = self.ts.astype(np.float64) * cfg.time_scale
        self.owner = np.full(n, -1, dtype=np.int64)
        self.node = np.full(n, -1, dtype=np.int64)
        self.outcome = np.zeros(n, dtype=np.int8)
        self.window = np.full(n, -1, dtype=np.int64)
        self.stage = {s: np.zeros(n) for s in ("queue", "fetch", "decode", "net", "coalesce", "transfer")}
        self.spilled = np.zeros(n, dtype=bool)
        self.writeback = np.zeros(n, dtype=bool)
        self.coalesced = np.zeros(n, dtype=bool)

        self.caches: Dict[int, DualCache] = {}
        self.tuners: Dict[int, AlphaTuner] = {}
        if self.policy is not Policy.DECODE_ALL:
            cache_cfg = DualCacheConfig(
                capacity_bytes=cfg.per_node_cache_bytes,
                alpha=cfg.start_alpha(),
                tail_fraction=cfg.tail_fraction,
                promotion_threshold=cfg.promotion_threshold,
            )
            self.caches = {node: DualCache(cache_cfg) for node in self.nodes}
        if self.policy.dual_cache:
            tuner_cfg = cfg.tuner_config()
            self.tuners = {node: AlphaTuner.create(tuner_cfg, cfg.start_alpha()) for node in self.nodes}
        traffic = owner_counts(self.ring, self.oids)
        self.window_size = {node: cfg.tuner_window or desk_window(traffic[node]) for node in self.nodes}
        self.lookups = {node: 0 for node in self.nodes}
        self.gpus = {node: [_Gpu() for _ in range(cfg.gpus_per_node)] for node in self.nodes}
        self.inflight = InFlightMap()

        self.heap: list = []
        self.seq = itertools.count()
        self.now = 0.0
        self.events = {
            "fetches": 0, "decodes": 0, "background_decodes": 0, "spills": 0,
            "writebacks": 0, "promotions": 0,
        }
        self.decodes_per_node = {node: 0 for node in self.nodes}

    # ---- event plumbing ----
    def _push(self, t: float, kind: int, payload) -> None:
        heapq.heappush(self.heap, (t, next(self.seq), kind, payload))

    def _drain(self, until: float) -> None:
        while self.heap and self.heap[0][0] <= until:
            t, _, kind, payload = heapq.heappop(self.heap)
            self.now = t
            if kind == FETCH_DONE:
                self._fetch_done(payload)
            elif kind == TRANSFER_DONE:
                self._enqueue(_Job(payload, int(self.node[payload]), t))
            else:
                self._gpu_done(*payload)

    def depths(self) -> Dict[int, int]:
        """Per-node queue depth: the shortest GPU queue (queued + running)."""
        return {node: min(g.depth for g in gpus) for node, gpus in self.gpus.items()}

    # ---- request path ----
    def run(self, progress: bool = False) -> SimReport:
        for i in tqdm(range(len(self.ts)), desc=f"sim {self.policy.value}", disable=not progress):
            t = float(self.arrival[i])
            self._drain(t)
            self.now = t
            self._arrive(i)
        self._drain(math.inf)
        return self._report()

    def _arrive(self, i: int) -> None:
        oid = int(self.oids[i])
        meta = self.catalog[oid]
        if self.policy is Policy.DECODE_ALL:
            decision = route(self.ring, oid, self.depths(), self.cfg.theta, cacheable=False)
            self.owner[i] = decision.owner_node
            self._assign(i, decision.executor_node, decision.spilled)
            self.outcome[i] = _CODE[Outcome.FULL_MISS]
            self._start_fetch(i, self.lat.sample_fetch(self.rng))
            return

        owner = self.ring.owner_of(oid)
        self.owner[i] = owner
        if self.inflight.begin(oid, i) is Role.FOLLOWER:
            self.coalesced[i] = True
            return

        cache = self.caches[owner]
        result = cache.lookup(oid, meta)
        self.outcome[i] = _CODE[result.outcome]
        self._count_lookup(owner, i)

        if result.outcome is Outcome.IMAGE_HIT:
            self.node[i] = owner
            self._finish(i)
            return

        if self.policy is Policy.IMG_STORE:
            cache.admit_image(oid, meta)
            self.node[i] = owner
            scale = meta.image_bytes / meta.latent_bytes
            self._start_fetch(i, self.lat.sample_fetch(self.rng) * scale)
            return

        if result.promoted:
            self.events["promotions"] += 1
        if result.outcome is Outcome.FULL_MISS:
            cache.admit_fetched(oid, meta)

        # only a promotion or an image-tier admission gives the owner an image to keep
        cacheable = cache.contains(oid) == IMAGE
        decision = route(self.ring, oid, self.depths(), self.cfg.theta, cacheable=cacheable)
        self._assign(i, decision.executor_node, decision.spilled)
        self.writeback[i] = decision.writeback_required
        if result.outcome is Outcome.FULL_MISS:
            self._start_fetch(i, self.lat.sample_fetch(self.rng))
        elif decision.spilled:
            self.stage["transfer"][i] = self.lat.intra_cluster_transfer_ms
            self._push(self.now + self.lat.intra_cluster_transfer_ms, TRANSFER_DONE, i)
        else:
            self._enqueue(_Job(i, owner, self.now))
        if result.promoted and self.cfg.promotion_extra_decode:
            # queued behind the request that triggered it
            self.events["background_decodes"] += 1
            self._enqueue(_Job(None, owner, self.now))

    def _assign(self, i: int, executor: int, spilled: bool) -> None:
        self.node[i] = executor
        self.spilled[i] = spilled
        if spilled:
            self.events["spills"] += 1

    def _count_lookup(self, owner: int, i: int) -> None:
        tuner = self.tuners.get(owner)
        if tuner is None:
            return
        self.window[i] = len(tuner.history)
        self.lookups[owner] += 1
        if self.lookups[owner] % self.window_size[owner] == 0:
            cache = self.caches[owner]
            record = tuner.end_window(cache.snapshot_and_reset_counters())
            if record.new_alpha != cache.alpha:
                cache.set_alpha(record.new_alpha)

    def _start_fetch(self, i: int, fetch_ms: float) -> None:
        self.events["fetches"] += 1
        self.stage["fetch"][i] = fetch_ms
        self._push(self.now + fetch_ms, FETCH_DONE, i)

    def _fetch_done(self, i: int) -> None:
        if self.policy is Policy.IMG_STORE:
            self._finish(i)
            return
        tuner = self.tuners.get(int(self.owner[i]))
        if tuner is not None:
            tuner.observe(LatencyKind.FETCH, float(self.stage["fetch"][i]))
        self._enqueue(_Job(i, int(self.node[i]), self.now))

    # ---- GPUs ----
    def _enqueue(self, job: _Job) -> None:
        gpus = self.gpus[job.node]
        k = min(range(len(gpus)), key=lambda g: gpus[g].depth)
        gpu = gpus[k]
        if gpu.current is None:
            self._start(job, k)
        else:
            gpu.queue.append(job)

    def _start(self, job: _Job, k: int) -> None:
        self.gpus[job.node][k].current = job
        job.started_at = self.now
        self._push(self.now + self.lat.decode_ms, GPU_DONE, (job.node, k))

    def _gpu_done(self, node: int, k: int) -> None:
        gpu = self.gpus[node][k]
        job = gpu.current
        gpu.current = None
        self.events["decodes"] += 1
        self.decodes_per_node[node] += 1
        if job.request is not None:
            i = job.request
            self.stage["queue"][i] = job.started_at - job.enqueued_at
            self.stage["decode"][i] = self.lat.decode_ms
            tuner = self.tuners.get(int(self.owner[i]))
            if tuner is not None:
                tuner.observe(LatencyKind.DECODE, self.lat.decode_ms)
            if self.writeback[i]:
                self.events["writebacks"] += 1
            self._finish(i)
        if gpu.queue:
            self._start(gpu.queue.popleft(), k)

    def _finish(self, i: int) -> None:
        self.stage["net"][i] = self.lat.net_transfer_ms
        if self.policy is Policy.DECODE_ALL:
            return
        waiters = self.inflight.complete(int(self.oids[i]))
        for j in waiters[1:]:
            self.stage["coalesce"][j] = self.now - self.arrival[j]
            self.stage["net"][j] = self.lat.net_transfer_ms
            self.outcome[j] = self.outcome[i]
            self.node[j] = self.node[i]

    # ---- results ----
    def _requests_frame(self) -> pd.DataFrame:
        s = self.stage
        total = s["queue"] + s["fetch"] + s["decode"] + s["net"] + s["coalesce"] + s["transfer"]
        codes = np.array([o.value for o in OUTCOMES], dtype=object)
        frame = pd.DataFrame({
            "req_idx": np.arange(len(self.ts), dtype=np.int64),
            "ts_ms": self.ts,
            "object_id": self.oids,
            "outcome": codes[self.outcome],
            "queue_ms": s["queue"],
            "fetch_ms": s["fetch"],
            "decode_ms": s["decode"],
            "net_ms": s["net"],
            "total_ms": total,
            "node": self.node,
            "spilled": self.spilled,
            "coalesce_ms": s["coalesce"],
            "transfer_ms": s["transfer"],
            "owner": self.owner,
            "coalesced": self.coalesced,
        })
        return frame[REQUEST_COLUMNS]

    def _windows_frame(self) -> pd.DataFrame:
        columns = ["node"] + RECORD_COLUMNS + ["measured_ms"]
        # per-lookup cost with queueing and network excluded
        cost = self.stage["fetch"] + self.stage["decode"]
        frames = []
        for node, tuner in self.tuners.items():
            hist = tuner.history_frame()
            if hist.empty:
                continue
            mask = (self.owner == node) & (self.window >= 0) & ~self.coalesced
            measured = pd.Series(cost[mask]).groupby(self.window[mask]).mean()
            hist.insert(0, "node", node)
            hist["measured_ms"] = hist["window_idx"].map(measured).astype(float)
            frames.append(hist)
        if not frames:
            return pd.DataFrame(columns=columns)
        return pd.concat(frames, ignore_index=True)[columns]

    def _report(self) -> SimReport:
        requests = self._requests_frame()
        warmup = math.floor(self.cfg.warmup_fraction * len(requests))
        extra = {
            "policy": self.policy.value,
            "n_nodes": self.cfg.n_nodes,
            "per_node_cache_bytes": self.cfg.per_node_cache_bytes,
            "theta": self.cfg.theta,
            "seed": self.cfg.seed,
            "tuner_window": {str(k): v for k, v in self.window_size.items()} if self.tuners else None,
            "events": dict(self.events, coalesced=int(self.coalesced.sum())),
            "decodes_per_node": {str(k): v for k, v in self.decodes_per_node.items()},
            "final_alpha": {str(k): c.alpha for k, c in self.caches.items()},
        }
        summary = summarize(requests, warmup, extra)
        logger.info(
            "%s: %d requests, mean %.2f ms, p99 %.2f ms",
            self.policy.value, len(requests), summary["latency_ms"]["mean"], summary["latency_ms"]["p99"],
        )
        return SimReport(requests=requests, windows=self._windows_frame(), summary=summary)


def run(trace: pd.DataFrame, catalog: Catalog, cfg: ClusterConfig, progress: bool = False) -> SimReport:
    """Replay ``trace`` through the cluster described by ``cfg``.

    Args:
        trace: Requests sorted by ``ts_ms``
        catalog: Sizes for every requested object
        cfg: Cluster configuration
        progress: Show a tqdm bar

    Returns:
        SimReport

    Raises:
        UnknownObjectError: trace references an id missing from the catalog
        EmptyTraceError: trace has no rows
        ConfigError: invalid configuration

    Examples:
        >>> from latentsim.traces.tracetypes import ObjectMeta, make_trace
        >>> trace = make_trace([0], [7])
        >>> report = run(trace, {7: ObjectMeta(1000, 200)}, ClusterConfig(n_nodes=1, warmup_fraction=0))
        >>> report.requests["total_ms"].tolist()
        [190.0]
    """
    return ClusterSim(trace, catalog, cfg).run(progress=progress)
