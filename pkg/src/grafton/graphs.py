"""Benchmark graph datasets: loading, node features, and fold splits.

Datasets live on disk in the de-facto benchmark text layout: a directory
``D`` containing

    D/<name>_A.txt                edge list, one ``u, v`` pair per line,
                                  node ids 1-indexed over the whole dataset
    D/<name>_graph_indicator.txt  line i = graph id (1-indexed) of node i
    D/<name>_graph_labels.txt     line j = class label of graph j
    D/<name>_node_labels.txt      optional, line i = integer label of node i

Node ids are converted to 0-indexed per-graph indices on load. Graph labels
are remapped to the contiguous range [0, C). When node labels are present
they become one-hot feature rows; otherwise every node gets a single all-ones
feature column until ``degree_features`` is applied.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ContractError, DataFormatError

log = logging.getLogger(__name__)

NUM_FOLDS = 10
_SEED_MASK = 0x7FFFFFFF


@dataclass(frozen=True, eq=False)
class Graph:
    """Immutable undirected graph with per-node features and a class label."""

    num_nodes: int
    neighbors: tuple[np.ndarray, ...]  # per node: sorted, deduplicated ids
    features: np.ndarray               # [num_nodes, d0]
    label: int
    node_labels: tuple[int, ...] | None = None

    def degree(self, v: int) -> int:
        return len(self.neighbors[v])

    @property
    def max_degree(self) -> int:
        return max((len(nb) for nb in self.neighbors), default=0)

    @property
    def num_edges(self) -> int:
        return sum(len(nb) for nb in self.neighbors) // 2

    def validate(self) -> None:
        """Check adjacency symmetry, sortedness, and feature shape."""
        if self.features.shape[0] != self.num_nodes:
            raise ContractError(f"feature rows {self.features.shape[0]} != num_nodes {self.num_nodes}")
        sets = [set(nb.tolist()) for nb in self.neighbors]
        for v, nb in enumerate(self.neighbors):
            if len(nb) != len(sets[v]):
                raise ContractError(f"duplicate neighbor entries at node {v}")
            if len(nb) and (nb.min() < 0 or nb.max() >= self.num_nodes or not np.all(np.diff(nb) > 0)):
                raise ContractError(f"neighbor list of node {v} is out of range or unsorted")
            for u in nb:
                if v not in sets[u]:
                    raise ContractError(f"asymmetric adjacency: {v}->{u} without {u}->{v}")


@dataclass(frozen=True, eq=False)
class Dataset:
    name: str
    graphs: tuple[Graph, ...]
    num_classes: int
    feature_mode: str  # "node-labels" | "degree-onehot" | "ones"

    @property
    def feature_dim(self) -> int:
        return self.graphs[0].features.shape[1]

    def labels(self) -> np.ndarray:
        return np.array([g.label for g in self.graphs], dtype=np.int64)


@dataclass(frozen=True)
class FoldPlan:
    """Deterministic stratified assignment of graphs to ten folds."""

    seed: int
    assignments: np.ndarray  # per graph: fold index in [0, NUM_FOLDS)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def graphs_equal(a: Graph, b: Graph) -> bool:
    return (
        a.num_nodes == b.num_nodes
        and a.label == b.label
        and a.node_labels == b.node_labels
        and all(np.array_equal(x, y) for x, y in zip(a.neighbors, b.neighbors))
        and np.array_equal(a.features, b.features)
    )


def _read_int_lines(path: Path) -> list[int]:
    values = []
    with path.open() as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            try:
                values.append(int(float(text)))
            except ValueError as exc:
                raise DataFormatError(f"{path.name} line {ln}: expected an integer, got {text!r}") from exc
    return values


def _read_edges(path: Path, num_nodes: int) -> list[tuple[int, int]]:
    edges = []
    with path.open() as fh:
        for ln, line in enumerate(fh, start=1):
            text = line.strip()
            if not text:
                continue
            parts = text.replace(",", " ").split()
            if len(parts) != 2:
                raise DataFormatError(f"{path.name} line {ln}: expected 'u, v', got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError as exc:
                raise DataFormatError(f"{path.name} line {ln}: non-integer node id in {text!r}") from exc
            if not (1 <= u <= num_nodes and 1 <= v <= num_nodes):
                raise DataFormatError(f"{path.name} line {ln}: node id out of range 1..{num_nodes}")
            edges.append((u - 1, v - 1))
    return edges


def load_tud_dataset(dir_path, name: str) -> Dataset:
    """Load one benchmark dataset from its text directory.

    Missing mandatory files raise ``FileNotFoundError`` naming the file. An
    asymmetric edge list is repaired by symmetrization and logged as a
    warning; self-loops are dropped.
    """
    base = Path(dir_path)

    def required(suffix: str) -> Path:
        p = base / f"{name}{suffix}"
        if not p.is_file():
            raise FileNotFoundError(f"missing dataset file: {p}")
        return p

    indicator = _read_int_lines(required("_graph_indicator.txt"))
    if not indicator:
        raise DataFormatError(f"{name}_graph_indicator.txt is empty")
    num_nodes_total = len(indicator)
    graph_ids = sorted(set(indicator))
    num_graphs = len(graph_ids)
    gid_to_pos = {gid: i for i, gid in enumerate(graph_ids)}

    # Global node id -> (graph position, local node id).
    local_of = np.empty(num_nodes_total, dtype=np.int64)
    graph_of = np.empty(num_nodes_total, dtype=np.int64)
    counts = [0] * num_graphs
    for node, gid in enumerate(indicator):
        pos = gid_to_pos[gid]
        graph_of[node] = pos
        local_of[node] = counts[pos]
        counts[pos] += 1

    raw_labels = _read_int_lines(required("_graph_labels.txt"))
    if len(raw_labels) != num_graphs:
        raise DataFormatError(
            f"{name}_graph_labels.txt has {len(raw_labels)} labels for {num_graphs} graphs"
        )
    classes = sorted(set(raw_labels))
    label_of = {c: i for i, c in enumerate(classes)}

    a_path = required("_A.txt")
    edge_sets: list[set[tuple[int, int]]] = [set() for _ in range(num_graphs)]
    dropped_loops = 0
    for u, v in _read_edges(a_path, num_nodes_total):
        if graph_of[u] != graph_of[v]:
            raise DataFormatError(f"{a_path.name}: edge {u + 1}, {v + 1} crosses graph boundaries")
        if u == v:
            dropped_loops += 1
            continue
        edge_sets[graph_of[u]].add((int(local_of[u]), int(local_of[v])))
    if dropped_loops:
        log.debug("%s: dropped %d self-loop(s)", name, dropped_loops)

    repaired = 0
    for es in edge_sets:
        missing = [(v, u) for (u, v) in es if (v, u) not in es]
        repaired += len(missing)
        es.update(missing)
    if repaired:
        log.warning("%s: symmetrized %d one-directional edge(s)", name, repaired)

    node_labels_path = base / f"{name}_node_labels.txt"
    node_label_values: list[int] | None = None
    if node_labels_path.is_file():
        node_label_values = _read_int_lines(node_labels_path)
        if len(node_label_values) != num_nodes_total:
            raise DataFormatError(
                f"{node_labels_path.name} has {len(node_label_values)} labels for {num_nodes_total} nodes"
            )

    if node_label_values is not None:
        distinct = sorted(set(node_label_values))
        col_of = {val: j for j, val in enumerate(distinct)}
        feature_mode = "node-labels"
        d0 = len(distinct)
    else:
        feature_mode = "ones"
        d0 = 1

    graphs = []
    for pos in range(num_graphs):
        n = counts[pos]
        adj: list[list[int]] = [[] for _ in range(n)]
        for u, v in edge_sets[pos]:
            adj[u].append(v)
        neighbors = tuple(np.array(sorted(nb), dtype=np.int64) for nb in adj)
        if node_label_values is not None:
            feats = np.zeros((n, d0))
            labels_here = [0] * n
        else:
            feats = np.ones((n, 1))
            labels_here = None
        graphs.append((neighbors, feats, labels_here))

    if node_label_values is not None:
        for node, val in enumerate(node_label_values):
            pos, loc = graph_of[node], local_of[node]
            graphs[pos][1][loc, col_of[val]] = 1.0
            graphs[pos][2][loc] = val

    built = tuple(
        Graph(
            num_nodes=counts[pos],
            neighbors=graphs[pos][0],
            features=graphs[pos][1],
            label=label_of[raw_labels[pos]],
            node_labels=tuple(graphs[pos][2]) if graphs[pos][2] is not None else None,
        )
        for pos in range(num_graphs)
    )
    return Dataset(name=name, graphs=built, num_classes=len(classes), feature_mode=feature_mode)


def save_tud_dataset(dataset: Dataset, dir_path) -> None:
    """Write a dataset back to the on-disk text layout (round-trip inverse)."""
    base = Path(dir_path)
    base.mkdir(parents=True, exist_ok=True)
    name = dataset.name
    offsets = np.cumsum([0] + [g.num_nodes for g in dataset.graphs])

    with (base / f"{name}_A.txt").open("w") as fh:
        for pos, g in enumerate(dataset.graphs):
            for v in range(g.num_nodes):
                for u in g.neighbors[v]:
                    fh.write(f"{offsets[pos] + v + 1}, {offsets[pos] + u + 1}\n")

    with (base / f"{name}_graph_indicator.txt").open("w") as fh:
        for pos, g in enumerate(dataset.graphs):
            fh.writelines(f"{pos + 1}\n" for _ in range(g.num_nodes))

    with (base / f"{name}_graph_labels.txt").open("w") as fh:
        fh.writelines(f"{g.label}\n" for g in dataset.graphs)

    if all(g.node_labels is not None for g in dataset.graphs):
        with (base / f"{name}_node_labels.txt").open("w") as fh:
            for g in dataset.graphs:
                fh.writelines(f"{val}\n" for val in g.node_labels)


def degree_features(dataset: Dataset, max_degree_cap: int = 1000) -> Dataset:
    """Replace features with one-hot node degrees, clamped at the cap.

    The one-hot width is ``min(max observed degree, cap) + 1``; a node of
    degree k lights index ``min(k, cap)``. Isolated nodes land on index 0.
    """
    if max_degree_cap < 1:
        raise ContractError(f"degree cap must be >= 1, got {max_degree_cap}")
    observed = max(g.max_degree for g in dataset.graphs)
    width = min(observed, max_degree_cap) + 1
    new_graphs = []
    for g in dataset.graphs:
        feats = np.zeros((g.num_nodes, width))
        for v in range(g.num_nodes):
            feats[v, min(g.degree(v), max_degree_cap)] = 1.0
        new_graphs.append(replace(g, features=feats))
    return Dataset(
        name=dataset.name,
        graphs=tuple(new_graphs),
        num_classes=dataset.num_classes,
        feature_mode="degree-onehot",
    )


def make_folds(dataset: Dataset, seed: int) -> FoldPlan:
    """Stratified 10-fold assignment, deterministic in (seed, graph order).

    Within every class the shuffled members are dealt round-robin onto a
    fold counter that runs across classes, so per-class fold counts differ
    by at most one and so do the total fold sizes.
    """
    n = len(dataset.graphs)
    if n < NUM_FOLDS:
        raise ConfigError(f"need at least {NUM_FOLDS} graphs for {NUM_FOLDS}-fold splits, got {n}")
    rng = np.random.default_rng(seed & _SEED_MASK)
    labels = dataset.labels()
    assignments = np.empty(n, dtype=np.int64)
    cursor = 0
    for c in sorted(set(labels.tolist())):
        members = np.flatnonzero(labels == c)
        rng.shuffle(members)
        for idx in members:
            assignments[idx] = cursor % NUM_FOLDS
            cursor += 1
    return FoldPlan(seed=seed, assignments=assignments)
