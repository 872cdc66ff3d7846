"""Graph attention network with reflection-based relation and time transforms.

Entities, relations, and timestamps share one embedding space of width k.
Each relation/time embedding, kept unit-norm, parameterizes an orthogonal
reflection applied to neighbor features; per-link attention over both the
time view and the relation view weights the aggregation. Final entity
representations concatenate every layer's output with the mean embedding of
the entity's incident timestamps.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigError
from .optim import ParameterStore
from .tkg import (
    UNKNOWN_TIME_ID,
    MergedGraph,
    NeighborhoodIndex,
    augment_self_loops,
    build_neighborhoods,
    generate_reverse_links,
)

DTYPES = {"f32": np.float32, "f64": np.float64}


@dataclass(frozen=True)
class ModelConfig:
    """Architecture and numeric settings shared by training and evaluation."""

    dim: int = 100
    num_layers: int = 2
    dropout: float = 0.3
    self_loops: bool = True
    unique_times: bool = False  # True: incident-timestamp mean over distinct times
    precision: str = "f32"

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"embedding dim must be >= 1, got {self.dim}")
        if self.num_layers < 0:
            raise ConfigError(f"layer count must be >= 0, got {self.num_layers}")
        if not (0.0 <= self.dropout < 1.0):
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.precision not in DTYPES:
            raise ConfigError(f"precision must be one of {sorted(DTYPES)}")

    @property
    def dtype(self) -> np.dtype:
        return np.dtype(DTYPES[self.precision])

    @property
    def output_dim(self) -> int:
        """Width of a final representation: L+1 layer blocks plus the time mean."""
        return (self.num_layers + 2) * self.dim


@dataclass(frozen=True)
class FlatGraph:
    """Link structure flattened to parallel arrays for vectorized passes.

    Row m of ``src``/``dst``/``rel``/``time`` is one directed link
    src[m] -> dst[m]; aggregation groups rows by ``dst``. ``ts_entity`` /
    ``ts_time`` list the incident-timestamp multiset used for the final
    time-mean block (by construction one entry per inward link, or one per
    distinct (entity, time) pair when built with unique_times).
    """

    num_entities: int
    src: np.ndarray
    dst: np.ndarray
    rel: np.ndarray
    time: np.ndarray
    ts_entity: np.ndarray
    ts_time: np.ndarray

    @property
    def num_links(self) -> int:
        return len(self.src)

    @classmethod
    def from_index(cls, index: NeighborhoodIndex, unique_times: bool = False) -> "FlatGraph":
        src, dst, rel, time = [], [], [], []
        for i, links in enumerate(index.inward):
            for ln in links:
                src.append(ln.subject)
                dst.append(i)
                rel.append(ln.relation)
                time.append(ln.time)
        src = np.asarray(src, dtype=np.int64)
        dst = np.asarray(dst, dtype=np.int64)
        rel = np.asarray(rel, dtype=np.int64)
        time = np.asarray(time, dtype=np.int64)
        if unique_times:
            pairs = np.unique(np.stack([dst, time], axis=1), axis=0) if len(dst) else np.zeros((0, 2), dtype=np.int64)
            ts_entity, ts_time = pairs[:, 0], pairs[:, 1]
        else:
            ts_entity, ts_time = dst.copy(), time.copy()
        return cls(index.num_entities, src, dst, rel, time, ts_entity, ts_time)

    def time_unaware(self) -> "FlatGraph":
        """Replace every timestamp (links and incident multiset) with the unknown id."""
        return replace(
            self,
            time=np.full_like(self.time, UNKNOWN_TIME_ID),
            ts_time=np.full_like(self.ts_time, UNKNOWN_TIME_ID),
        )


def prepare_graph(
    merged: MergedGraph, self_loops: bool = True, unique_times: bool = False
) -> tuple[FlatGraph, NeighborhoodIndex]:
    """Reverse-augment a merged graph and flatten it for the forward pass.

    The returned index carries the raw link structure (self-loops tagged via
    its ``self_relation``) for sensitivity analysis and inspection.
    """
    links = generate_reverse_links(merged.kg)
    self_rel = None
    if self_loops:
        self_rel = merged.self_relation
        links = augment_self_loops(links, merged.kg.num_entities, self_rel)
    index = build_neighborhoods(links, merged.kg.num_entities, self_relation=self_rel)
    return FlatGraph.from_index(index, unique_times=unique_times), index


def num_relation_rows(num_relations: int, self_loops: bool) -> int:
    """Rows in the relation table: forward + reverse ids, plus the self id."""
    return 2 * num_relations + (1 if self_loops else 0)


def init_params(
    rng: np.random.Generator,
    num_entities: int,
    num_rel_rows: int,
    num_times: int,
    cfg: ModelConfig,
) -> ParameterStore:
    """Allocate all trainable tables.

    Everything starts uniform in [-1/sqrt(k), 1/sqrt(k)]; relation and time
    rows are additionally scaled to unit norm (the forward pass re-normalizes
    them anyway, this just starts them on the constraint surface). Draw order
    is fixed so a seed pins the full initialization.
    """
    k = cfg.dim
    bound = 1.0 / np.sqrt(k)
    dt = cfg.dtype

    def draw(*shape):
        return rng.uniform(-bound, bound, size=shape).astype(dt)

    store = ParameterStore()
    store.add("entity", draw(num_entities, k))
    rel = draw(num_rel_rows, k)
    rel /= np.linalg.norm(rel, axis=1, keepdims=True)
    store.add("relation", rel)
    tim = draw(num_times, k)
    tim /= np.linalg.norm(tim, axis=1, keepdims=True)
    store.add("time", tim)
    for layer in range(cfg.num_layers):
        store.add(f"attn_time_{layer}", draw(3 * k))
        store.add(f"attn_rel_{layer}", draw(3 * k))
    return store


def attention_logits(h_dst: Tensor, transformed: Tensor, h_edge: Tensor, nu: Tensor) -> Tensor:
    """Per-link score nu . [h_dst | reflected neighbor | edge embedding]."""
    return ad.matvec(ad.concat_cols([h_dst, transformed, h_edge]), nu)


def normalize_attention(logits: Tensor, dst: np.ndarray, num_entities: int) -> Tensor:
    """Softmax of the logits within each destination entity's inward links."""
    return ad.segment_softmax(logits, dst, num_entities)


@dataclass
class AttentionProbe:
    """Per-layer max deviation of attention-weight sums from 1 (non-empty entities)."""

    deviations: list[float] = field(default_factory=list)

    def record(self, weights: np.ndarray, dst: np.ndarray, num_entities: int) -> None:
        sums = np.zeros(num_entities, dtype=np.float64)
        np.add.at(sums, dst, weights.astype(np.float64))
        occupied = np.zeros(num_entities, dtype=bool)
        occupied[dst] = True
        dev = float(np.max(np.abs(sums[occupied] - 1.0))) if occupied.any() else 0.0
        self.deviations.append(dev)

    @property
    def worst(self) -> float:
        return max(self.deviations) if self.deviations else 0.0


def layer_forward(
    h: Tensor,
    graph: FlatGraph,
    rel_e: Tensor,
    time_e: Tensor,
    nu_time: Tensor,
    nu_rel: Tensor,
    probe: AttentionProbe | None = None,
) -> Tensor:
    """One aggregation layer over pre-gathered per-link edge embeddings.

    Entities with no inward links get a zero output row (ReLU of an empty
    sum). ``h`` must already carry dropout if training.
    """
    h_src = ad.gather_rows(h, graph.src)
    h_dst = ad.gather_rows(h, graph.dst)
    via_time = ad.householder_apply(time_e, h_src)
    via_rel = ad.householder_apply(rel_e, h_src)
    alpha = attention_logits(h_dst, via_time, time_e, nu_time)
    beta = attention_logits(h_dst, via_rel, rel_e, nu_rel)
    omega = normalize_attention(alpha, graph.dst, graph.num_entities)
    upsilon = normalize_attention(beta, graph.dst, graph.num_entities)
    if probe is not None:
        probe.record(omega.data, graph.dst, graph.num_entities)
        probe.record(upsilon.data, graph.dst, graph.num_entities)
    message = ad.add(ad.scale_rows(via_time, omega), ad.scale_rows(via_rel, upsilon))
    return ad.relu(ad.segment_sum(message, graph.dst, graph.num_entities))


def cross_layer_concat(acts: list[Tensor]) -> Tensor:
    """Concatenate all layer outputs (layer 0 = raw embeddings) per entity."""
    return ad.concat_cols(acts)


def incident_time_mean(time_table: Tensor, graph: FlatGraph, dtype: np.dtype) -> Tensor:
    """Mean embedding of each entity's incident timestamps (zero row if none)."""
    counts = np.bincount(graph.ts_entity, minlength=graph.num_entities)
    inv = np.zeros(graph.num_entities, dtype=dtype)
    nonzero = counts > 0
    inv[nonzero] = 1.0 / counts[nonzero]
    gathered = ad.gather_rows(time_table, graph.ts_time)
    summed = ad.segment_sum(gathered, graph.ts_entity, graph.num_entities)
    return ad.scale_rows_const(summed, inv)


def multi_view(hcat: Tensor, time_table: Tensor, graph: FlatGraph, dtype: np.dtype) -> Tensor:
    """Append the incident-time mean to the cross-layer representation."""
    return ad.concat_cols([hcat, incident_time_mean(time_table, graph, dtype)])


def model_forward(
    store: ParameterStore,
    graph: FlatGraph,
    cfg: ModelConfig,
    training: bool = False,
    rng: np.random.Generator | None = None,
    probe: AttentionProbe | None = None,
) -> Tensor:
    """Full forward pass: (num_entities, (L+2)*k) final representations.

    Relation/time tables are row-normalized inside the pass so the unit-norm
    constraint is part of the differentiated graph; the stored tables may
    drift off-norm between steps without affecting model output.
    """
    if training and cfg.dropout > 0.0 and rng is None:
        raise ConfigError("training with dropout requires an rng")
    rel_table = ad.normalize_rows(store["relation"])
    time_table = ad.normalize_rows(store["time"])
    rel_e = ad.gather_rows(rel_table, graph.rel)
    time_e = ad.gather_rows(time_table, graph.time)
    acts = [store["entity"]]
    for layer in range(cfg.num_layers):
        h_in = ad.dropout(acts[-1], cfg.dropout, rng, training)
        acts.append(
            layer_forward(
                h_in,
                graph,
                rel_e,
                time_e,
                store[f"attn_time_{layer}"],
                store[f"attn_rel_{layer}"],
                probe=probe,
            )
        )
    return multi_view(cross_layer_concat(acts), time_table, graph, cfg.dtype)


def effective_edge_tables(store: ParameterStore) -> tuple[np.ndarray, np.ndarray]:
    """The unit-norm relation/time tables as the forward pass sees them."""
    rel = store["relation"].data
    tim = store["time"].data
    return (
        rel / np.linalg.norm(rel, axis=1, keepdims=True),
        tim / np.linalg.norm(tim, axis=1, keepdims=True),
    )
