"""Dataset construction: overlap splits, synthetic graph pairs, statistics.

The generator builds a random source quadruple set, divides it into two
overlapping subsets with independently re-indexed id spaces, and optionally
plants *time-ambiguous twins*: groups of entities wired to one shared set of
anchor neighbors through identical relations, distinguishable only by the
timestamps on their links. A time-blind model faces a symmetric tie across
the whole twin group; a time-aware model can still separate them. Twin
links live in disjoint timestamp windows per twin, and every twin quadruple
is forced into the shared split portion so both graphs carry the identical
facts (timestamps included).

Untimed twins (all motif links at the unknown timestamp) are the mirror
construction: ambiguous for time-aware and time-blind models alike, useful
for datasets that need a low-time-sensitivity partition with known-hard
pairs.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DatasetError
from .tkg import (
    UNKNOWN_TIME_ID,
    UNKNOWN_TIME_LABEL,
    Quadruple,
    SeedAlignments,
    TemporalKG,
    TimeIndex,
    TimeInterval,
)

logger = logging.getLogger(__name__)

SourceQuad = tuple[int, int, int, int, int]  # (subject, relation, object, begin, end)

ANCHORS_PER_TWIN = 3
RELATIONS_PER_MOTIF = 2
WINDOW_WIDTH = 3
UNTIMED_AFFINITY = 0.8  # chance an untimed entity links to another untimed entity


@dataclass(frozen=True)
class ForgeSpec:
    """Generation recipe; byte-identical outputs for identical specs."""

    entities: int = 60
    relations: int = 4
    time_steps: int = 40
    quads_per_entity: int = 4
    planted_pairs: int = 0
    planted_untimed_pairs: int = 0
    nontemporal_entity_fraction: float = 0.0
    overlap_ratio: float = 0.5
    seed_count: int = 20
    seed: int = 0
    name: str = "synth"

    def __post_init__(self):
        if not (0.0 <= self.overlap_ratio <= 1.0):
            raise ConfigError(f"overlap_ratio must be in [0,1], got {self.overlap_ratio}")
        if not (0.0 <= self.nontemporal_entity_fraction <= 1.0):
            raise ConfigError("nontemporal_entity_fraction must be in [0,1]")
        for fname in ("entities", "relations", "time_steps", "quads_per_entity", "seed_count"):
            if getattr(self, fname) < 1:
                raise ConfigError(f"{fname} must be >= 1")
        if self.planted_pairs < 0 or self.planted_untimed_pairs < 0:
            raise ConfigError("planted pair counts must be >= 0")

    @property
    def num_twins(self) -> int:
        return 2 * (self.planted_pairs + self.planted_untimed_pairs)


@dataclass(frozen=True)
class DatasetStats:
    """Size summary of a graph pair (reverse links excluded everywhere)."""

    num_entities_1: int
    num_entities_2: int
    num_relations_1: int
    num_relations_2: int
    num_times: int
    num_quads_1: int
    num_quads_2: int
    num_pairs: int
    num_seeds: int

    def as_row(self) -> tuple:
        return (
            self.num_entities_1, self.num_entities_2,
            self.num_relations_1, self.num_relations_2,
            self.num_times, self.num_quads_1, self.num_quads_2,
            self.num_pairs, self.num_seeds,
        )


@dataclass
class SplitResult:
    """Two re-indexed quad sets plus the maps back to the source space."""

    quads_1: list[SourceQuad]  # local ids per side
    quads_2: list[SourceQuad]
    ent_map_1: dict[int, int]  # source entity id -> side-local id
    ent_map_2: dict[int, int]
    rel_map_1: dict[int, int]
    rel_map_2: dict[int, int]
    alignment: list[tuple[int, int]]  # (local_1, local_2), source-id order
    shared_count: int
    total: int


@dataclass
class ForgeResult:
    g1: TemporalKG
    g2: TemporalKG
    seeds: SeedAlignments
    manifest: dict


def split_overlap(
    quads: list[SourceQuad],
    overlap_ratio: float,
    rng: np.random.Generator,
    forced_shared: range | list[int] = (),
) -> SplitResult:
    """Divide source quads into two overlapping, similarly sized subsets.

    ``overlap_ratio`` of the quads (rounded, with a warning when inexact) go
    to both sides with identical timestamps; the rest is halved. Indices in
    ``forced_shared`` are guaranteed into the shared portion (they count
    toward its quota). Entity and relation ids are re-indexed densely per
    side in source-id order, and the gold entity alignment over both-side
    entities is returned.
    """
    n = len(quads)
    if n == 0:
        raise ConfigError("cannot split an empty quadruple set")
    if not (0.0 <= overlap_ratio <= 1.0):
        raise ConfigError(f"overlap_ratio must be in [0,1], got {overlap_ratio}")
    exact = n * overlap_ratio
    shared_n = int(round(exact))
    if abs(exact - shared_n) > 1e-9:
        logger.warning(
            "overlap %g of %d quads is not integral; using %d shared",
            overlap_ratio, n, shared_n,
        )
    forced = sorted(set(forced_shared))
    if any(i < 0 or i >= n for i in forced):
        raise ConfigError("forced_shared index out of range")
    if len(forced) > shared_n:
        raise ConfigError(
            f"{len(forced)} quads must be shared but the overlap quota is {shared_n}"
        )
    rest = n - shared_n
    if rest % 2:
        logger.warning("%d exclusive quads split unevenly (%d vs %d)", rest, rest // 2, rest - rest // 2)

    forced_set = set(forced)
    free = [i for i in range(n) if i not in forced_set]
    order = rng.permutation(len(free))
    take = shared_n - len(forced)
    shared_idx = forced + [free[j] for j in order[:take]]
    ex1_idx = [free[j] for j in order[take : take + rest // 2]]
    ex2_idx = [free[j] for j in order[take + rest // 2 :]]

    side1 = sorted(shared_idx + ex1_idx)
    side2 = sorted(shared_idx + ex2_idx)

    def build_side(idxs: list[int]) -> tuple[list[SourceQuad], dict[int, int], dict[int, int]]:
        ents = sorted({quads[i][0] for i in idxs} | {quads[i][2] for i in idxs})
        rels = sorted({quads[i][1] for i in idxs})
        emap = {e: j for j, e in enumerate(ents)}
        rmap = {r: j for j, r in enumerate(rels)}
        local = [
            (emap[quads[i][0]], rmap[quads[i][1]], emap[quads[i][2]], quads[i][3], quads[i][4])
            for i in idxs
        ]
        return local, emap, rmap

    q1, emap1, rmap1 = build_side(side1)
    q2, emap2, rmap2 = build_side(side2)
    both = sorted(set(emap1) & set(emap2))
    alignment = [(emap1[e], emap2[e]) for e in both]
    return SplitResult(q1, q2, emap1, emap2, rmap1, rmap2, alignment, shared_n, n)


def measured_overlap(g1: TemporalKG, g2: TemporalKG, all_pairs) -> float:
    """Fraction of distinct facts present in both graphs.

    A fact is shared when its subject and object are gold-aligned, its
    relation label matches, and its interval is identical. Denominator is
    the size of the union under the same identification.
    """
    e_map = {a: b for a, b in (tuple(p) for p in all_pairs)}

    def canon(kg: TemporalKG, mapped: bool):
        out = set()
        for q in kg.quadruples:
            if mapped:
                if q.subject not in e_map or q.object not in e_map:
                    out.add(("only1", q.subject, q.relation, q.object, q.interval))
                    continue
                key = (e_map[q.subject], kg.relation_labels[q.relation], e_map[q.object],
                       q.interval.begin, q.interval.end)
            else:
                key = (q.subject, kg.relation_labels[q.relation], q.object,
                       q.interval.begin, q.interval.end)
            out.add(key)
        return out

    s1 = canon(g1, mapped=True)
    s2 = canon(g2, mapped=False)
    union = len(s1 | s2)
    return len(s1 & s2) / union if union else 0.0


def _generate_base_quads(spec: ForgeSpec, rng: np.random.Generator) -> tuple[list[SourceQuad], set[int]]:
    """Random quads, one batch per subject entity; bounded retry on duplicates.

    Entities selected as non-temporal emit only unknown-time facts and
    preferentially link among themselves, so the graph develops genuinely
    low-time-sensitivity regions rather than uniform dilution.
    """
    n_untimed = int(round(spec.nontemporal_entity_fraction * spec.entities))
    untimed = set(rng.choice(spec.entities, size=n_untimed, replace=False).tolist()) if n_untimed else set()
    untimed_list = sorted(untimed)
    quads: set[SourceQuad] = set()
    for e in range(spec.entities):
        emitted = 0
        attempts = 0
        while emitted < spec.quads_per_entity and attempts < 100 * spec.quads_per_entity:
            attempts += 1
            r = int(rng.integers(spec.relations))
            if e in untimed and len(untimed_list) > 1 and rng.random() < UNTIMED_AFFINITY:
                o = untimed_list[int(rng.integers(len(untimed_list)))]
                while o == e:
                    o = untimed_list[int(rng.integers(len(untimed_list)))]
            else:
                o = int(rng.integers(spec.entities - 1))
                o += o >= e
            if e in untimed:
                tb = te = UNKNOWN_TIME_ID
            else:
                lo, hi = sorted(rng.integers(1, spec.time_steps + 1, size=2).tolist())
                tb, te = int(lo), int(hi)
            q = (e, r, o, tb, te)
            if q not in quads:
                quads.add(q)
                emitted += 1
        if emitted < spec.quads_per_entity:
            raise ConfigError(
                f"cannot place {spec.quads_per_entity} distinct quads for entity {e}; "
                "increase relations/time_steps/entities"
            )
    return sorted(quads), untimed


@dataclass
class _TwinPlan:
    kind: str  # timed | untimed
    group: int  # twins of one pair share a group id
    member: str  # a | b
    source_id: int
    window: tuple[int, int] | None  # inclusive real-time range, None for untimed
    quads: list[SourceQuad] = field(default_factory=list)


def _plan_twins(spec: ForgeSpec, rng: np.random.Generator) -> tuple[list[_TwinPlan], dict]:
    """Lay out twin entities, their shared anchors, and disjoint time windows."""
    if spec.num_twins == 0:
        return [], {"anchors_timed": [], "anchors_untimed": [], "relations": []}
    if spec.relations < RELATIONS_PER_MOTIF:
        raise ConfigError(
            f"planting needs >= {RELATIONS_PER_MOTIF} relations, got {spec.relations}"
        )
    need_anchors = ANCHORS_PER_TWIN * (2 if spec.planted_pairs and spec.planted_untimed_pairs else 1)
    if spec.entities < need_anchors + 2:
        raise ConfigError("too few entities to host the planted motif anchors")
    n_timed = 2 * spec.planted_pairs
    if n_timed:
        slot = spec.time_steps // n_timed
        if slot < WINDOW_WIDTH:
            raise ConfigError(
                f"{spec.time_steps} time steps cannot hold {n_timed} disjoint "
                f"windows of width {WINDOW_WIDTH}"
            )
    anchor_pool = rng.choice(spec.entities, size=need_anchors, replace=False).tolist()
    anchors_timed = sorted(int(a) for a in anchor_pool[:ANCHORS_PER_TWIN]) if spec.planted_pairs else []
    anchors_untimed = (
        sorted(int(a) for a in anchor_pool[ANCHORS_PER_TWIN:ANCHORS_PER_TWIN * 2])
        if spec.planted_untimed_pairs and spec.planted_pairs
        else (sorted(int(a) for a in anchor_pool[:ANCHORS_PER_TWIN]) if spec.planted_untimed_pairs else [])
    )
    motif_rels = sorted(int(r) for r in rng.choice(spec.relations, size=RELATIONS_PER_MOTIF, replace=False))

    plans: list[_TwinPlan] = []
    next_id = spec.entities
    for pair in range(spec.planted_pairs):
        for j, member in enumerate(("a", "b")):
            t_idx = 2 * pair + j
            start = 1 + t_idx * (spec.time_steps // n_timed)
            window = (start, start + WINDOW_WIDTH - 1)
            plan = _TwinPlan("timed", pair, member, next_id, window)
            for m, anchor in enumerate(anchors_timed):
                lo, hi = sorted(rng.integers(window[0], window[1] + 1, size=2).tolist())
                plan.quads.append((next_id, motif_rels[m % RELATIONS_PER_MOTIF], anchor, int(lo), int(hi)))
            plans.append(plan)
            next_id += 1
    for pair in range(spec.planted_untimed_pairs):
        for member in ("a", "b"):
            plan = _TwinPlan("untimed", spec.planted_pairs + pair, member, next_id, None)
            for m, anchor in enumerate(anchors_untimed):
                plan.quads.append(
                    (next_id, motif_rels[m % RELATIONS_PER_MOTIF], anchor, UNKNOWN_TIME_ID, UNKNOWN_TIME_ID)
                )
            plans.append(plan)
            next_id += 1
    meta = {
        "anchors_timed": anchors_timed,
        "anchors_untimed": anchors_untimed,
        "relations": motif_rels,
    }
    return plans, meta


def synth_tkg(spec: ForgeSpec, rng: np.random.Generator | None = None) -> ForgeResult:
    """Generate an aligned graph pair with optional planted ambiguity.

    All twin quads are forced into the shared split portion, so every twin
    exists on both sides with identical facts; anchors are promoted into the
    training seeds and twins always land in the test split (the manifest
    lists them).
    """
    if rng is None:
        rng = np.random.default_rng(spec.seed)
    base, untimed_entities = _generate_base_quads(spec, rng)
    plans, twin_meta = _plan_twins(spec, rng)
    quads = list(base)
    forced_start = len(quads)
    for plan in plans:
        quads.extend(plan.quads)
    split = split_overlap(quads, spec.overlap_ratio, rng, forced_shared=range(forced_start, len(quads)))

    num_source = spec.entities + spec.num_twins
    ent_labels = {e: f"e{e}" for e in range(spec.entities)}
    for plan in plans:
        ent_labels[plan.source_id] = f"twin{plan.group}{plan.member}"
    rel_labels = [f"r{r}" for r in range(spec.relations)]
    time_index = TimeIndex([UNKNOWN_TIME_LABEL] + [f"t{i}" for i in range(1, spec.time_steps + 1)])

    def build_kg(tag: str, local_quads, emap, rmap) -> TemporalKG:
        inv_e = sorted(emap, key=emap.get)
        inv_r = sorted(rmap, key=rmap.get)
        kg = TemporalKG(
            num_entities=len(emap),
            num_relations=len(rmap),
            time_index=time_index,
            quadruples=[
                Quadruple(s, r, o, TimeInterval(tb, te)) for s, r, o, tb, te in local_quads
            ],
            entity_labels=[ent_labels[e] for e in inv_e],
            relation_labels=[rel_labels[r] for r in inv_r],
            name=f"{spec.name}_{tag}",
        )
        kg.validate()
        return kg

    g1 = build_kg("1", split.quads_1, split.ent_map_1, split.rel_map_1)
    g2 = build_kg("2", split.quads_2, split.ent_map_2, split.rel_map_2)

    # every twin's quads are shared, so twins are always alignable
    twin_sources = {p.source_id for p in plans}
    anchor_sources = sorted(set(twin_meta["anchors_timed"]) | set(twin_meta["anchors_untimed"]))
    for a in anchor_sources:
        if a not in split.ent_map_1 or a not in split.ent_map_2:
            raise DatasetError(f"anchor entity {a} missing from one side after split")

    alignable_sources = sorted(set(split.ent_map_1) & set(split.ent_map_2))
    candidate_seeds = [e for e in alignable_sources if e not in twin_sources and e not in anchor_sources]
    fill = spec.seed_count - len(anchor_sources)
    if fill < 0:
        raise ConfigError(
            f"seed_count {spec.seed_count} below the {len(anchor_sources)} anchor seeds"
        )
    if fill > len(candidate_seeds):
        raise ConfigError(
            f"seed_count {spec.seed_count} exceeds the {len(candidate_seeds) + len(anchor_sources)} "
            "alignable non-twin entities"
        )
    chosen = rng.choice(len(candidate_seeds), size=fill, replace=False) if fill else []
    seed_sources = sorted(anchor_sources + [candidate_seeds[int(i)] for i in chosen])
    test_sources = [e for e in alignable_sources if e not in set(seed_sources)]

    def to_pairs(sources):
        return [(split.ent_map_1[e], split.ent_map_2[e]) for e in sources]

    seeds = SeedAlignments(train_pairs=to_pairs(seed_sources), test_pairs=to_pairs(test_sources))
    seeds.validate()

    planted = [
        {
            "kind": p.kind,
            "group": p.group,
            "member": p.member,
            "e1": split.ent_map_1[p.source_id],
            "e2": split.ent_map_2[p.source_id],
            "window": list(p.window) if p.window else None,
        }
        for p in plans
    ]
    manifest = {
        "spec": asdict(spec),
        "planted": planted,
        "anchors": {
            "timed": [(split.ent_map_1[a], split.ent_map_2[a]) for a in twin_meta["anchors_timed"]],
            "untimed": [(split.ent_map_1[a], split.ent_map_2[a]) for a in twin_meta["anchors_untimed"]],
            "relations": twin_meta["relations"],
        },
        "shared_quads": split.shared_count,
        "source_quads": split.total,
        "overlap": split.shared_count / split.total,
        "untimed_entities": len(untimed_entities),
    }
    return ForgeResult(g1, g2, seeds, manifest)


def planted_isomorphic(kg: TemporalKG, a: int, b: int, time_blind: bool = True) -> bool:
    """Check whether two entities' outgoing facts match as multisets.

    Time-blind comparison drops the interval, so twins wired to the same
    anchors through the same relations pass it while the timestamp-aware
    comparison tells them apart.
    """

    def profile(e: int):
        rows = []
        for q in kg.quadruples:
            if q.subject == e:
                key = (q.relation, q.object) if time_blind else (
                    q.relation, q.object, q.interval.begin, q.interval.end
                )
                rows.append(key)
        return sorted(rows)

    return profile(a) == profile(b)


def param_count(stats: DatasetStats, k: int, num_layers: int) -> int:
    """Trainable scalars: embedding tables (reverse relations included,
    sentinel time included) plus two 3k attention vectors per layer."""
    table = (
        stats.num_entities_1 + stats.num_entities_2
        + 2 * stats.num_relations_1 + 2 * stats.num_relations_2
        + stats.num_times
    )
    return k * table + 3 * k * num_layers + 3 * k * num_layers


def self_loop_param_delta(k: int) -> int:
    """Extra scalars when self-loops add one relation row."""
    return k


def dataset_stats(g1: TemporalKG, g2: TemporalKG, seeds: SeedAlignments) -> DatasetStats:
    return DatasetStats(
        num_entities_1=g1.num_entities,
        num_entities_2=g2.num_entities,
        num_relations_1=g1.num_relations,
        num_relations_2=g2.num_relations,
        num_times=g1.time_index.num_ids,
        num_quads_1=len(g1.quadruples),
        num_quads_2=len(g2.quadruples),
        num_pairs=len(seeds.train_pairs) + len(seeds.test_pairs),
        num_seeds=len(seeds.train_pairs),
    )


def format_stats(stats: DatasetStats, name: str, overlap: float | None = None) -> str:
    head = f"{'dataset':<16}" + "".join(
        f"{c:>9}" for c in ("|E1|", "|E2|", "|R1|", "|R2|", "|T*|", "|Q1|", "|Q2|", "|P|", "|S|")
    )
    row = f"{name:<16}" + "".join(f"{v:>9}" for v in stats.as_row())
    lines = [head, row]
    if overlap is not None:
        lines.append(f"overlap {overlap:.6f}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# directory io (mirrors the parser's file contract)


def write_dataset(
    directory: str | Path,
    g1: TemporalKG,
    g2: TemporalKG,
    seeds: SeedAlignments,
    manifest: dict | None = None,
) -> Path:
    """Emit the on-disk dataset directory (ids of graph 2 continue graph 1's).

    Writes triples_1/2, ent_ids_1/2, rel_ids_1/2, time_id, sup_pairs,
    ref_pairs, stats.txt, and manifest.json when given one.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    e_off, r_off = g1.num_entities, g1.num_relations

    def lines_to(fname: str, rows) -> None:
        (directory / fname).write_text("".join(f"{row}\n" for row in rows))

    def quad_rows(kg: TemporalKG, eo: int, ro: int):
        for q in kg.quadruples:
            yield f"{q.subject + eo}\t{q.relation + ro}\t{q.object + eo}\t{q.interval.begin}\t{q.interval.end}"

    lines_to("triples_1", quad_rows(g1, 0, 0))
    lines_to("triples_2", quad_rows(g2, e_off, r_off))
    lines_to("ent_ids_1", (f"{i}\t{lab}" for i, lab in enumerate(g1.entity_labels)))
    lines_to("ent_ids_2", (f"{i + e_off}\t{lab}" for i, lab in enumerate(g2.entity_labels)))
    lines_to("rel_ids_1", (f"{i}\t{lab}" for i, lab in enumerate(g1.relation_labels)))
    lines_to("rel_ids_2", (f"{i + r_off}\t{lab}" for i, lab in enumerate(g2.relation_labels)))
    lines_to("time_id", (f"{i}\t{g1.time_index.label_of(i)}" for i in range(g1.time_index.num_ids)))
    lines_to("sup_pairs", (f"{a}\t{b + e_off}" for a, b in seeds.train_pairs))
    lines_to("ref_pairs", (f"{a}\t{b + e_off}" for a, b in seeds.test_pairs))

    stats = dataset_stats(g1, g2, seeds)
    overlap = measured_overlap(g1, g2, seeds.all_pairs)
    (directory / "stats.txt").write_text(format_stats(stats, g1.name.removesuffix("_1"), overlap))
    if manifest is not None:
        (directory / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return directory


def read_source_quads(path: str | Path) -> list[SourceQuad]:
    """Read a raw source file: five tab-separated ints per line (s r o tb te)."""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"source quad file not found: {path}")
    quads: list[SourceQuad] = []
    for ln, line in enumerate(path.read_text().splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t") if "\t" in line else line.split()
        if len(parts) != 5:
            raise DatasetError(f"{path}:{ln}: expected 5 columns, got {len(parts)}")
        try:
            quads.append(tuple(int(p) for p in parts))  # type: ignore[arg-type]
        except ValueError as exc:
            raise DatasetError(f"{path}:{ln}: non-integer field ({exc})") from exc
    if not quads:
        raise DatasetError(f"{path}: no quadruples")
    return quads


def split_to_result(
    quads: list[SourceQuad],
    overlap_ratio: float,
    seed_count: int,
    rng: np.random.Generator,
    name: str = "split",
) -> ForgeResult:
    """Split an externally supplied source into a dataset pair with seeds."""
    split = split_overlap(quads, overlap_ratio, rng)
    max_time = max(max(q[3], q[4]) for q in quads)
    time_index = TimeIndex([UNKNOWN_TIME_LABEL] + [f"t{i}" for i in range(1, max_time + 1)])
    rel_labels = {r: f"r{r}" for q in quads for r in (q[1],)}

    def build(tag, local_quads, emap, rmap):
        inv_e = sorted(emap, key=emap.get)
        inv_r = sorted(rmap, key=rmap.get)
        kg = TemporalKG(
            num_entities=len(emap),
            num_relations=len(rmap),
            time_index=time_index,
            quadruples=[Quadruple(s, r, o, TimeInterval(tb, te)) for s, r, o, tb, te in local_quads],
            entity_labels=[f"e{e}" for e in inv_e],
            relation_labels=[rel_labels[r] for r in inv_r],
            name=f"{name}_{tag}",
        )
        kg.validate()
        return kg

    g1 = build("1", split.quads_1, split.ent_map_1, split.rel_map_1)
    g2 = build("2", split.quads_2, split.ent_map_2, split.rel_map_2)
    if seed_count > len(split.alignment):
        raise ConfigError(
            f"seed_count {seed_count} exceeds {len(split.alignment)} alignable pairs"
        )
    order = rng.permutation(len(split.alignment))
    train = sorted(tuple(split.alignment[int(i)]) for i in order[:seed_count])
    test = sorted(tuple(split.alignment[int(i)]) for i in order[seed_count:])
    seeds = SeedAlignments(train_pairs=train, test_pairs=test)
    seeds.validate()
    manifest = {
        "source_quads": split.total,
        "shared_quads": split.shared_count,
        "overlap": split.shared_count / split.total,
        "overlap_requested": overlap_ratio,
        "seed_count": seed_count,
        "planted": [],
    }
    return ForgeResult(g1, g2, seeds, manifest)
