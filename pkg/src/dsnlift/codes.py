"""Codes on the discrete superposition network.

A relay code is a codebook for the source plus one deterministic map per
relay.  Relay maps come in two memory models:

* block maps, for layered networks, where a node buffers the whole block
  it heard from the previous level before it starts transmitting, so the
  symbol it emits at local time t may use the reception at the same t;
* causal maps, for arbitrary networks, where the symbol emitted at t may
  only use receptions at times strictly before t.

Causal maps behave identically under both schedulers, which is what makes
a code portable between the level-by-level and the interleaved schemes.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .channel import (
    ComplexGain,
    DiscreteSymbol,
    QuantizedGain,
    Zint,
    compute_bit_depth,
    quantize_gain,
    superposition_output,
)
from .network import LevelDecomposition, RelayNetwork, layer_decomposition

__all__ = [
    "BitDepthMismatch",
    "TooManyErrors",
    "CausalityError",
    "RelayMap",
    "QuantizeForward",
    "ModuloMap",
    "TableMap",
    "RelayCode",
    "ProductCode",
    "NetworkTrace",
    "enumerate_alphabet",
    "run_dsn",
    "trace_all",
    "with_derived_decoder",
    "purify_zero_error",
    "build_product_code",
    "interleave",
    "deinterleave",
    "search_base_code",
    "serialize_code",
    "deserialize_code",
]


class BitDepthMismatch(ValueError):
    pass


class TooManyErrors(ValueError):
    """Average error of the code is too high for purification."""


class CausalityError(ValueError):
    """A non-causal relay map was scheduled on a non-layered network."""


def enumerate_alphabet(bit_depth: int) -> list[DiscreteSymbol]:
    """All 4**bit_depth discrete symbols, in (re_bits, im_bits) order."""
    lim = 1 << bit_depth
    return [DiscreteSymbol(r, i, bit_depth) for r in range(lim) for i in range(lim)]


def _grid(value: int, shift: int, mult: int, bit_depth: int) -> int:
    return (mult * value + shift) % (1 << bit_depth)


class RelayMap:
    """Deterministic map from reception history to the next symbol.

    ``emit(t, visible)`` produces the symbol for local time t (1-based).
    Under the layered scheduler ``visible`` is the node's full reception
    block; under the synchronous scheduler it is the strict prefix
    y'(1..t-1).  Causal maps only ever touch index t-2, so the two views
    agree wherever both are legal.
    """

    causal: bool = False
    bit_depth: int

    def emit(self, t: int, visible: Sequence[Zint]) -> DiscreteSymbol:
        raise NotImplementedError

    def _pick(self, t: int, visible: Sequence[Zint]) -> Zint | None:
        if self.causal:
            return visible[t - 2] if t >= 2 else None
        return visible[t - 1]


@dataclass(frozen=True)
class QuantizeForward(RelayMap):
    """Forward the reception, reduced onto the input grid, plus a shift.

    The reception components (Gaussian integers) are mapped to numerators
    modulo 2**n, i.e. the reception is scaled by 2**-n and folded into
    [0, 1) on the grid.  shift=0 preserves zero.
    """

    bit_depth: int
    shift: int = 0
    causal: bool = False

    def emit(self, t: int, visible: Sequence[Zint]) -> DiscreteSymbol:
        y = self._pick(t, visible) or (0, 0)
        n = self.bit_depth
        return DiscreteSymbol(_grid(y[0], self.shift, 1, n), _grid(y[1], self.shift, 1, n), n)


@dataclass(frozen=True)
class ModuloMap(RelayMap):
    """Scale the reception by an integer, then reduce onto the grid."""

    bit_depth: int
    mult: int = 1
    causal: bool = False

    def emit(self, t: int, visible: Sequence[Zint]) -> DiscreteSymbol:
        y = self._pick(t, visible) or (0, 0)
        n = self.bit_depth
        return DiscreteSymbol(_grid(y[0], 0, self.mult, n), _grid(y[1], 0, self.mult, n), n)


@dataclass(frozen=True)
class TableMap(RelayMap):
    """Explicit lookup table over the finite reception alphabet.

    Keys are (t, reception) pairs; a causal map at t=1 has nothing to look
    at and uses the key (1, None).  Missing keys fall back to ``default``
    bits.
    """

    bit_depth: int
    entries: tuple[tuple[tuple[int, Zint | None], tuple[int, int]], ...]
    default: tuple[int, int] = (0, 0)
    causal: bool = False

    _table: dict = field(init=False, repr=False, compare=False, hash=False, default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        object.__setattr__(self, "_table", dict(self.entries))

    def emit(self, t: int, visible: Sequence[Zint]) -> DiscreteSymbol:
        y = self._pick(t, visible)
        bits = self._table.get((t, y), self.default)
        return DiscreteSymbol(bits[0], bits[1], self.bit_depth)


Codeword = tuple[DiscreteSymbol, ...]
Reception = tuple[Zint, ...]


@dataclass
class RelayCode:
    """Source codebook, per-relay maps and a destination decoder.

    The decoder is an explicit table from the destination's length-N
    reception to a message index; receptions it has never seen decode to
    nothing.  For codes built by ``search_base_code`` the codebook holds
    2**(N*R) distinct codewords.
    """

    block_length: int
    bit_depth: int
    codebook: tuple[Codeword, ...]
    relay_maps: dict[int, RelayMap]
    decoder: dict[Reception, int]

    @property
    def message_count(self) -> int:
        return len(self.codebook)

    @property
    def rate(self) -> float:
        if self.message_count <= 1:
            return 0.0
        return math.log2(self.message_count) / self.block_length

    def __post_init__(self) -> None:
        if len(set(self.codebook)) != len(self.codebook):
            raise ValueError("codebook contains duplicate codewords")
        for cw in self.codebook:
            if len(cw) != self.block_length:
                raise ValueError("codeword length does not match block_length")
            for s in cw:
                if s.bit_depth != self.bit_depth:
                    raise BitDepthMismatch("codeword symbol bit depth mismatch")


@dataclass
class NetworkTrace:
    """Everything one message produces on the deterministic network."""

    message: int
    transmitted: dict[int, Codeword]
    received: dict[int, Reception]
    decoded: int | None


@dataclass
class _NetPlan:
    bit_depth: int
    levels: LevelDecomposition | None
    in_links: dict[int, list[tuple[int, QuantizedGain]]]


_plan_cache: dict[RelayNetwork, _NetPlan] = {}


def _plan(net: RelayNetwork) -> _NetPlan:
    plan = _plan_cache.get(net)
    if plan is not None:
        return plan
    if net.antenna_mode != "scalar":
        raise CausalityError("code execution is defined for scalar networks only")
    n = compute_bit_depth(net.all_gain_components())
    in_links: dict[int, list[tuple[int, QuantizedGain]]] = {j: [] for j in range(net.node_count)}
    for e in net.edges:
        in_links[e.dst].append((e.src, quantize_gain(e.gain)))  # type: ignore[arg-type]
    plan = _NetPlan(bit_depth=n, levels=layer_decomposition(net), in_links=in_links)
    if len(_plan_cache) > 64:
        _plan_cache.clear()
    _plan_cache[net] = plan
    return plan


def _receive(plan: _NetPlan, node: int, tx: dict[int, Codeword], t: int) -> Zint:
    links = plan.in_links[node]
    if not links:
        return (0, 0)
    inputs = [tx[src][t - 1] for src, _ in links]
    gains = [g for _, g in links]
    return superposition_output(inputs, gains)


def run_dsn(net: RelayNetwork, code: RelayCode, message: int) -> NetworkTrace:
    """Run one message through the deterministic network.

    Layered networks execute level by level with block scheduling; all
    other networks run a symbol-synchronous schedule, which requires every
    relay map to be causal.  The destination never transmits (it is padded
    with zero symbols if it happens to have outgoing edges, which
    contribute nothing after truncation).
    """
    plan = _plan(net)
    if code.bit_depth != plan.bit_depth:
        raise BitDepthMismatch(
            f"code bit depth {code.bit_depth} vs network bit depth {plan.bit_depth}"
        )
    if not (0 <= message < code.message_count):
        raise ValueError(f"message {message} out of range")
    N = code.block_length
    dest = net.destination
    zero = DiscreteSymbol.zero(code.bit_depth)
    relays = [j for j in range(1, net.node_count) if j != dest]
    for j in relays:
        if j not in code.relay_maps:
            raise ValueError(f"no relay map for node {j}")

    tx: dict[int, Codeword] = {net.source: code.codebook[message]}
    rx: dict[int, Reception] = {net.source: tuple((0, 0) for _ in range(N))}

    if plan.levels is not None:
        for level in plan.levels.levels[1:]:
            for j in sorted(level):
                block = tuple(_receive(plan, j, tx, t) for t in range(1, N + 1))
                rx[j] = block
                if j == dest:
                    tx[j] = tuple(zero for _ in range(N))
                else:
                    tx[j] = tuple(code.relay_maps[j].emit(t, block) for t in range(1, N + 1))
    else:
        for j in relays:
            if not code.relay_maps[j].causal:
                raise CausalityError(
                    f"relay map at node {j} is not causal; the synchronous schedule "
                    "needs causal maps on non-layered networks"
                )
        hist: dict[int, list[Zint]] = {j: [] for j in range(net.node_count)}
        txs: dict[int, list[DiscreteSymbol]] = {j: [] for j in range(net.node_count)}
        for t in range(1, N + 1):
            for j in range(net.node_count):
                if j == net.source:
                    sym = code.codebook[message][t - 1]
                elif j == dest:
                    sym = zero
                else:
                    visible = tuple(hist[j])
                    assert len(visible) == t - 1
                    sym = code.relay_maps[j].emit(t, visible)
                txs[j].append(sym)
            snapshot = {j: tuple(txs[j]) for j in range(net.node_count)}
            for j in range(net.node_count):
                hist[j].append(_receive(plan, j, snapshot, t))
        for j in range(net.node_count):
            tx[j] = tuple(txs[j])
            rx[j] = tuple(hist[j])
        rx[net.source] = tuple(hist[net.source])

    decoded = code.decoder.get(rx[dest]) if rx.get(dest) is not None else None
    return NetworkTrace(message=message, transmitted=tx, received=rx, decoded=decoded)


def trace_all(net: RelayNetwork, code: RelayCode) -> list[NetworkTrace]:
    """Traces for every message, in message order."""
    return [run_dsn(net, code, m) for m in range(code.message_count)]


def with_derived_decoder(net: RelayNetwork, code: RelayCode) -> RelayCode:
    """Rebuild the decoder table from the code's own traces.

    Useful for hand-written codes: construct with an empty decoder, then
    derive the exact table.  Raises TooManyErrors when two messages reach
    the destination with the same reception, since no decoder exists then.
    """
    traces = trace_all(net, code)
    decoder: dict[Reception, int] = {}
    for tr in traces:
        r = tr.received[net.destination]
        if r in decoder:
            raise TooManyErrors(
                f"messages {decoder[r]} and {tr.message} share a destination reception"
            )
        decoder[r] = tr.message
    return RelayCode(
        block_length=code.block_length,
        bit_depth=code.bit_depth,
        codebook=code.codebook,
        relay_maps=dict(code.relay_maps),
        decoder=decoder,
    )


def purify_zero_error(
    net: RelayNetwork, code: RelayCode, delta_max: float = 0.5
) -> RelayCode:
    """Discard codewords the decoder gets wrong; keep a zero-error code.

    On a deterministic network each codeword is decoded either always
    correctly or always incorrectly, so an average error delta below 1/2
    means more than half the codewords survive.  The surviving codewords
    are renumbered in their original order and the decoder is rebuilt from
    their traces.  Raises TooManyErrors when delta >= delta_max.
    """
    traces = trace_all(net, code)
    correct = [tr.message for tr in traces if tr.decoded == tr.message]
    delta = 1.0 - len(correct) / code.message_count
    if delta >= delta_max:
        raise TooManyErrors(
            f"average error {delta:.4f} is not below {delta_max}; cannot purify"
        )
    codebook = tuple(code.codebook[m] for m in correct)
    decoder: dict[Reception, int] = {}
    for new_idx, m in enumerate(correct):
        r = traces[m].received[net.destination]
        if r in decoder:
            raise TooManyErrors("two surviving codewords share a destination reception")
        decoder[r] = new_idx
    return RelayCode(
        block_length=code.block_length,
        bit_depth=code.bit_depth,
        codebook=codebook,
        relay_maps=dict(code.relay_maps),
        decoder=decoder,
    )


@dataclass
class ProductCode:
    """n_rep independent uses of a base code, glued into one long code.

    Codeword i is the concatenation of the base codewords indexed by the
    mixed-radix digits of i (first use is the most significant digit, so
    message order is lexicographic in the digit tuples).  Relays apply the
    base relay map to each length-N block separately; decoding applies the
    base decoder per block.
    """

    base: RelayCode
    n_rep: int

    @property
    def codeword_count(self) -> int:
        return self.base.message_count ** self.n_rep

    @property
    def block_length(self) -> int:
        return self.base.block_length * self.n_rep

    @property
    def rate(self) -> float:
        return self.base.rate

    def message_tuple(self, index: int) -> tuple[int, ...]:
        if not (0 <= index < self.codeword_count):
            raise ValueError(f"index {index} out of range")
        K = self.base.message_count
        digits = []
        for _ in range(self.n_rep):
            digits.append(index % K)
            index //= K
        return tuple(reversed(digits))

    def message_index(self, digits: Sequence[int]) -> int:
        K = self.base.message_count
        idx = 0
        for d in digits:
            if not (0 <= d < K):
                raise ValueError(f"digit {d} out of range")
            idx = idx * K + d
        return idx

    def codeword(self, index: int) -> Codeword:
        parts: list[DiscreteSymbol] = []
        for d in self.message_tuple(index):
            parts.extend(self.base.codebook[d])
        return tuple(parts)

    def decode(self, reception: Reception) -> int | None:
        N = self.base.block_length
        if len(reception) != N * self.n_rep:
            return None
        digits = []
        for k in range(self.n_rep):
            block = tuple(reception[k * N : (k + 1) * N])
            d = self.base.decoder.get(block)
            if d is None:
                return None
            digits.append(d)
        return self.message_index(digits)


def build_product_code(code: RelayCode, n_rep: int) -> ProductCode:
    """Adjoin n_rep base codewords per message.  Expects a zero-error base."""
    if n_rep < 1:
        raise ValueError("n_rep must be at least 1")
    return ProductCode(base=code, n_rep=n_rep)


def interleave(codewords: Sequence[Sequence], n_rep: int | None = None) -> tuple[tuple, ...]:
    """Regroup n_rep codewords of length N into N blocks of n_rep symbols.

    Block t holds the t-th symbol of every codeword, in codeword order.
    """
    if n_rep is not None and len(codewords) != n_rep:
        raise ValueError(f"expected {n_rep} codewords, got {len(codewords)}")
    if not codewords:
        return ()
    N = len(codewords[0])
    if any(len(cw) != N for cw in codewords):
        raise ValueError("codewords must share one length")
    return tuple(tuple(cw[t] for cw in codewords) for t in range(N))


def deinterleave(blocks: Sequence[Sequence], n_rep: int | None = None) -> tuple[tuple, ...]:
    """Inverse of interleave: N blocks of n_rep symbols back to n_rep codewords."""
    if not blocks:
        return ()
    width = len(blocks[0])
    if n_rep is not None and width != n_rep:
        raise ValueError(f"expected blocks of width {n_rep}, got {width}")
    if any(len(b) != width for b in blocks):
        raise ValueError("blocks must share one width")
    return tuple(tuple(b[k] for b in blocks) for k in range(width))


def _reception_bound(net: RelayNetwork, node: int) -> int:
    bound = 0
    for e in net.in_edges(node):
        q = quantize_gain(e.gain)  # type: ignore[arg-type]
        bound += abs(q.re) + abs(q.im)
    return bound


def _random_table_map(
    rng: np.random.Generator, net: RelayNetwork, node: int, bit_depth: int,
    block_length: int, causal: bool,
) -> TableMap | None:
    bound = _reception_bound(net, node)
    domain = [(r, i) for r in range(-bound, bound + 1) for i in range(-bound, bound + 1)]
    if len(domain) * block_length > 20000:
        return None
    lim = 1 << bit_depth
    entries = []
    ts = range(2, block_length + 1) if causal else range(1, block_length + 1)
    for t in ts:
        for y in domain:
            entries.append(((t, y), (int(rng.integers(lim)), int(rng.integers(lim)))))
    if causal:
        entries.append(((1, None), (int(rng.integers(lim)), int(rng.integers(lim)))))
    return TableMap(bit_depth=bit_depth, entries=tuple(entries), causal=causal)


def _random_map(
    rng: np.random.Generator, net: RelayNetwork, node: int, bit_depth: int,
    block_length: int, causal: bool, families: Sequence[str],
) -> RelayMap:
    lim = 1 << bit_depth
    while True:
        family = families[int(rng.integers(len(families)))]
        if family == "quantize_forward":
            return QuantizeForward(bit_depth, shift=int(rng.integers(lim)), causal=causal)
        if family == "modulo":
            return ModuloMap(bit_depth, mult=int(rng.integers(1, max(lim, 2))), causal=causal)
        if family == "table":
            tm = _random_table_map(rng, net, node, bit_depth, block_length, causal)
            if tm is not None:
                return tm
            # Domain too large for a table at this node; fall through and
            # draw again from the parametric families.
            families = [f for f in families if f != "table"] or ["quantize_forward"]
        else:
            raise ValueError(f"unknown relay map family {family!r}")


def search_base_code(
    net: RelayNetwork,
    block_length: int,
    rate: float,
    attempts: int,
    seed: int,
    families: Sequence[str] = ("quantize_forward", "modulo", "table"),
) -> RelayCode | None:
    """Randomized search for a zero-error base code.

    Draws random distinct codebooks and random relay maps from the given
    families, runs every message, and accepts the first draw for which the
    destination receptions are pairwise distinct (the rebuilt table decoder
    is then zero-error by construction).  Returns None when no draw works
    within the attempt budget; that is an outcome, not an error.
    """
    if block_length < 1:
        raise ValueError("block_length must be >= 1")
    nr = block_length * rate
    if abs(nr - round(nr)) > 1e-9:
        raise ValueError(f"block_length * rate must be an integer, got {nr}")
    K = 1 << round(nr)
    plan = _plan(net)
    n = plan.bit_depth
    alphabet = enumerate_alphabet(n)
    if K > len(alphabet) ** block_length:
        return None
    causal = plan.levels is None
    rng = np.random.default_rng(seed)
    dest = net.destination
    relays = [j for j in range(1, net.node_count) if j != dest]

    for _ in range(attempts):
        picks: set[Codeword] = set()
        while len(picks) < K:
            picks.add(
                tuple(alphabet[int(i)] for i in rng.integers(len(alphabet), size=block_length))
            )
        codebook = sorted(picks, key=lambda cw: [(s.re_bits, s.im_bits) for s in cw])
        maps = {
            j: _random_map(rng, net, j, n, block_length, causal, families)
            for j in relays
        }
        candidate = RelayCode(
            block_length=block_length,
            bit_depth=n,
            codebook=tuple(codebook),
            relay_maps=maps,
            decoder={},
        )
        receptions = []
        ok = True
        for m in range(K):
            r = run_dsn(net, candidate, m).received[dest]
            if r in receptions:
                ok = False
                break
            receptions.append(r)
        if ok:
            candidate.decoder = {r: m for m, r in enumerate(receptions)}
            return candidate
    return None


# --- code serialization (format 1) ----------------------------------------


def _sym_doc(s: DiscreteSymbol) -> list[int]:
    return [s.re_bits, s.im_bits]


def _map_doc(m: RelayMap) -> dict:
    if isinstance(m, QuantizeForward):
        return {"family": "quantize_forward", "shift": m.shift, "causal": m.causal}
    if isinstance(m, ModuloMap):
        return {"family": "modulo", "mult": m.mult, "causal": m.causal}
    if isinstance(m, TableMap):
        entries = []
        for (t, y), bits in sorted(m.entries, key=lambda e: (e[0][0], e[0][1] or (0, 0))):
            entries.append([t, list(y) if y is not None else None, list(bits)])
        return {
            "family": "table",
            "entries": entries,
            "default": list(m.default),
            "causal": m.causal,
        }
    raise ValueError(f"cannot serialize relay map {type(m).__name__}")


def _map_from_doc(doc: dict, bit_depth: int) -> RelayMap:
    family = doc["family"]
    causal = bool(doc["causal"])
    if family == "quantize_forward":
        return QuantizeForward(bit_depth, shift=int(doc["shift"]), causal=causal)
    if family == "modulo":
        return ModuloMap(bit_depth, mult=int(doc["mult"]), causal=causal)
    if family == "table":
        entries = tuple(
            ((int(t), tuple(y) if y is not None else None), (int(b[0]), int(b[1])))
            for t, y, b in doc["entries"]
        )
        return TableMap(
            bit_depth, entries=entries, default=tuple(doc["default"]), causal=causal
        )
    raise ValueError(f"unknown relay map family {family!r}")


def serialize_code(code: RelayCode) -> dict:
    """JSON-ready document for a relay code, format 1."""
    return {
        "format": 1,
        "block_length": code.block_length,
        "bit_depth": code.bit_depth,
        "codebook": [[_sym_doc(s) for s in cw] for cw in code.codebook],
        "relay_maps": {str(j): _map_doc(m) for j, m in sorted(code.relay_maps.items())},
        "decoder": [
            [[list(pair) for pair in reception], msg]
            for reception, msg in sorted(code.decoder.items())
        ],
    }


def deserialize_code(doc: dict) -> RelayCode:
    if doc.get("format") != 1:
        raise ValueError(f"unsupported code format {doc.get('format')!r}")
    n = int(doc["bit_depth"])
    codebook = tuple(
        tuple(DiscreteSymbol(int(b[0]), int(b[1]), n) for b in cw)
        for cw in doc["codebook"]
    )
    maps = {int(j): _map_from_doc(m, n) for j, m in doc["relay_maps"].items()}
    decoder = {
        tuple((int(p[0]), int(p[1])) for p in reception): int(msg)
        for reception, msg in doc["decoder"]
    }
    return RelayCode(
        block_length=int(doc["block_length"]),
        bit_depth=n,
        codebook=codebook,
        relay_maps=maps,
        decoder=decoder,
    )
