"""Four-node message network with storage-limited channels.

Topology is a ring: channel ``c`` joins nodes ``c`` and ``c % 4 + 1``. Each
message follows a fewest-hops route; equal-length routes are resolved toward
the route whose sorted channel indices are lexicographically smallest. Nodes
are single FIFO processors (0.001 s per message, at source, relays and
destination). A message may enter a channel only while the bits in flight on
that channel, including its own, stay within the storage limit; otherwise it
waits at the sending node in FIFO order.
"""

import csv
import heapq
import itertools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .models import FiniteHorizonModel

__all__ = [
    "ARRIVAL_RATES",
    "STREAMS",
    "NetworkConfig",
    "InsufficientDraws",
    "ring_routes",
    "network_output",
    "network_deliveries",
    "minimal_path_cost",
    "export_parameters",
    "NETWORK_MODEL",
]

# Row i, column j: rate of messages entering node i bound for node j.
ARRIVAL_RATES = np.array(
    [
        [np.nan, 40.0, 30.0, 35.0],
        [50.0, np.nan, 45.0, 15.0],
        [60.0, 15.0, np.nan, 20.0],
        [25.0, 30.0, 40.0, np.nan],
    ]
)
STREAMS = tuple((i, j) for i in range(1, 5) for j in range(1, 5) if i != j)
MEAN_MESSAGE_LENGTH = 300.0
DRAWS_PER_STREAM = 40


class InsufficientDraws(RuntimeError):
    """An arrival stream ran out of draws before the target number of deliveries."""


def ring_routes(n_nodes=4):
    """Channel sequence for every ordered node pair on the ring."""
    channels = {c: (c, c % n_nodes + 1) for c in range(1, n_nodes + 1)}
    routes = {}
    for src, dst in itertools.permutations(range(1, n_nodes + 1), 2):
        candidates = []
        for direction in (+1, -1):
            node, path = src, []
            while node != dst:
                nxt = (node - 1 + direction) % n_nodes + 1
                c = next(c for c, ends in channels.items() if set(ends) == {node, nxt})
                path.append(c)
                node = nxt
            candidates.append(path)
        candidates.sort(key=lambda p: (len(p), sorted(p)))
        routes[(src, dst)] = tuple(candidates[0])
    return routes, channels


@dataclass(frozen=True)
class NetworkConfig:
    channel_lengths: tuple = (100.0, 200.0, 300.0, 400.0)  # miles
    signal_speed: float = 150000.0  # miles per second
    bit_rate: float = 275000.0  # bits per second
    channel_storage: float = 275000.0  # bits
    processing_time: float = 0.001  # seconds per node visit
    n_messages: int = 30
    routes: dict = field(default_factory=lambda: ring_routes()[0])
    channels: dict = field(default_factory=lambda: ring_routes()[1])

    def transit_time(self, channel, length):
        return length / self.bit_rate + self.channel_lengths[channel - 1] / self.signal_speed


DEFAULT_CONFIG = NetworkConfig()


def minimal_path_cost(src, dst, length, config=DEFAULT_CONFIG):
    """Delay with no queueing: processing at every visited node plus transit."""
    route = config.routes[(src, dst)]
    return (len(route) + 1) * config.processing_time + sum(
        config.transit_time(c, length) for c in route
    )


def _simulate(arrival_streams, message_lengths, config):
    streams = [np.asarray(s, dtype=float) for s in arrival_streams]
    lengths = np.asarray(message_lengths, dtype=float)
    if len(streams) != len(STREAMS):
        raise ValueError(f"need {len(STREAMS)} arrival streams, got {len(streams)}")
    per_stream = max(len(s) for s in streams)
    if lengths.size < len(streams) * per_stream:
        raise ValueError("need one message length per arrival draw")
    for s in streams:
        if np.any(s < 0) or np.any(np.isnan(s)):
            raise ValueError("interarrival times must be nonnegative")
    if np.any(lengths < 0):
        raise ValueError("message lengths must be nonnegative")

    events = []
    seq = itertools.count()
    next_draw = [0] * len(streams)
    arrival_clock = [0.0] * len(streams)

    def push(time, kind, payload):
        heapq.heappush(events, (time, next(seq), kind, payload))

    def schedule_arrival(s):
        j = next_draw[s]
        if j >= len(streams[s]):
            return
        arrival_clock[s] += streams[s][j]
        if np.isfinite(arrival_clock[s]):
            push(arrival_clock[s], "arrive", (s, j))

    for s in range(len(streams)):
        schedule_arrival(s)

    node_queue = {v: [] for v in range(1, 5)}
    node_busy = {v: False for v in range(1, 5)}
    outbound = {(v, c): [] for c, ends in config.channels.items() for v in ends}
    in_flight = {c: 0.0 for c in config.channels}
    delays = []

    def start_processing(v, now):
        if not node_busy[v] and node_queue[v]:
            node_busy[v] = True
            push(now + config.processing_time, "processed", (v, node_queue[v].pop(0)))

    def try_send(v, c, now):
        queue = outbound[(v, c)]
        while queue:
            msg = queue[0]
            if msg["length"] > config.channel_storage:
                raise ValueError("message longer than channel storage can never be sent")
            if in_flight[c] + msg["length"] > config.channel_storage:
                break
            queue.pop(0)
            in_flight[c] += msg["length"]
            push(now + config.transit_time(c, msg["length"]), "exit", (c, v, msg))

    while len(delays) < config.n_messages:
        if not events:
            raise InsufficientDraws(
                f"only {len(delays)} of {config.n_messages} messages could be delivered"
            )
        now, _, kind, payload = heapq.heappop(events)
        if kind == "arrive":
            s, j = payload
            src, dst = STREAMS[s]
            msg = {
                "src": src,
                "dst": dst,
                "enter": now,
                "length": float(lengths[s * per_stream + j]),
                "hop": 0,
            }
            next_draw[s] += 1
            if next_draw[s] >= len(streams[s]):
                # the unseen next arrival might precede the remaining deliveries
                raise InsufficientDraws(f"arrival stream {STREAMS[s]} exhausted")
            schedule_arrival(s)
            node_queue[src].append(msg)
            start_processing(src, now)
        elif kind == "processed":
            v, msg = payload
            node_busy[v] = False
            if v == msg["dst"]:
                delays.append((now - msg["enter"], msg["src"], msg["dst"], msg["length"]))
            else:
                c = config.routes[(msg["src"], msg["dst"])][msg["hop"]]
                outbound[(v, c)].append(msg)
                try_send(v, c, now)
            start_processing(v, now)
        else:
            c, v, msg = payload
            in_flight[c] -= msg["length"]
            a, b = config.channels[c]
            nxt = b if v == a else a
            msg["hop"] += 1
            node_queue[nxt].append(msg)
            start_processing(nxt, now)
            for end in sorted((a, b)):
                try_send(end, c, now)
    return delays[: config.n_messages]


def network_deliveries(arrival_streams, message_lengths, config=DEFAULT_CONFIG):
    """``(delay, source, destination, length)`` of each delivered message, in delivery order."""
    return _simulate(arrival_streams, message_lengths, config)


def network_output(arrival_streams, message_lengths, config=DEFAULT_CONFIG):
    """Mean entry-to-destination delay (seconds) of the first delivered messages.

    ``arrival_streams`` holds 12 sequences of interarrival times in the order
    of :data:`STREAMS`; the ``j``-th message of stream ``s`` carries
    ``message_lengths[s * T + j]`` bits where ``T`` is the stream length.
    An infinite interarrival time switches a stream off.
    """
    delays = _simulate(arrival_streams, message_lengths, config)
    return float(np.mean([d[0] for d in delays]))


def _network_map(draws):
    runs = draws[0].shape[0]
    out = np.empty(runs)
    for r in range(runs):
        streams = [d[r] for d in draws[:-1]]
        out[r] = network_output(streams, draws[-1][r])
    return out


NETWORK_MODEL = FiniteHorizonModel(
    "network",
    (DRAWS_PER_STREAM,) * len(STREAMS) + (DRAWS_PER_STREAM * len(STREAMS),),
    _network_map,
)


def export_parameters(path, config=DEFAULT_CONFIG):
    """Write the arrival-rate table and frozen routes as CSV for audit."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source", "destination", "arrival_rate", "route_channels"])
        for i, j in STREAMS:
            route = " ".join(str(c) for c in config.routes[(i, j)])
            writer.writerow([i, j, ARRIVAL_RATES[i - 1, j - 1], route])
        writer.writerow([])
        writer.writerow(["channel", "node_a", "node_b", "length_miles"])
        for c, (a, b) in config.channels.items():
            writer.writerow([c, a, b, config.channel_lengths[c - 1]])
