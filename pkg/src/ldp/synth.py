"""Structural-causal-model simulation for the built-in benchmark graphs.

Ships the named evaluation DAGs, the discrete and continuous
structural-equation presets that go with them, seeded sampling, and
latent-variable masking. Sampling is seeded per node (keyed by node name
and the global seed), so the joint distribution does not depend on node
insertion order and replicates parallelize with no shared state.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .dag import Dag

__all__ = [
    "Dataset",
    "ScmSpec",
    "NAMED_GRAPHS",
    "PROCESS_CATALOG",
    "named_graph",
    "scaling_graph",
    "build_scm",
    "sample",
    "mask_latents",
    "dataset_to_csv",
    "dataset_from_csv",
    "process_ids",
]


# -- named graphs ------------------------------------------------------------

def _ten_node_edges(direct: bool) -> list[tuple[str, str]]:
    edges = [
        ("Z1", "X"),
        ("Z1", "Y"),
        ("Z5", "X"),
        ("Z4", "Y"),
        ("X", "Z2"),
        ("Y", "Z2"),
        ("X", "Z3"),
        ("Z3", "Y"),
        ("Y", "Z6"),
        ("X", "Z7"),
    ]
    if direct:
        edges.insert(0, ("X", "Y"))
    return edges


_TEN_NODE_NODES = ["X", "Y", "Z1", "Z2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8"]


def _build_named_graphs() -> dict[str, Dag]:
    graphs: dict[str, Dag] = {}
    graphs["ten_node"] = Dag(_TEN_NODE_NODES, _ten_node_edges(True), "X", "Y")
    graphs["ten_node_no_direct"] = Dag(_TEN_NODE_NODES, _ten_node_edges(False), "X", "Y")

    m_nodes = _TEN_NODE_NODES + ["M1", "M2", "M3"]
    m_edges = _ten_node_edges(True) + [
        ("M1", "X"),
        ("M2", "Y"),
        ("M1", "M3"),
        ("M2", "M3"),
    ]
    graphs["m_structure_13"] = Dag(m_nodes, m_edges, "X", "Y")

    b_nodes = _TEN_NODE_NODES + ["B1", "B2", "B3"]
    b_edges = _ten_node_edges(True) + [
        ("B1", "X"),
        ("B2", "Y"),
        ("B1", "B3"),
        ("B2", "B3"),
        ("B3", "X"),
        ("B3", "Y"),
    ]
    graphs["butterfly_13"] = Dag(b_nodes, b_edges, "X", "Y")

    seventeen_nodes = [
        "X", "Y", "Z1", "Z2", "Z3_1", "Z3_2", "Z4", "Z5", "Z6", "Z7", "Z8",
        "M1", "M2", "M3", "B1", "B2", "B3",
    ]
    seventeen_edges = [
        ("X", "Y"),
        ("Z1", "X"),
        ("Z1", "Y"),
        ("B3", "X"),
        ("B3", "Y"),
        ("B1", "X"),
        ("B1", "B3"),
        ("B2", "B3"),
        ("B2", "Y"),
        ("X", "Z2"),
        ("Y", "Z2"),
        ("X", "Z3_1"),
        ("Z3_1", "Z3_2"),
        ("Z3_2", "Y"),
        ("Z4", "Y"),
        ("Z5", "X"),
        ("Y", "Z6"),
        ("X", "Z7"),
        ("M1", "X"),
        ("M2", "Y"),
        ("M1", "M3"),
        ("M2", "M3"),
    ]
    graphs["seventeen_node"] = Dag(seventeen_nodes, seventeen_edges, "X", "Y")

    cb_nodes = [
        "X", "Y", "Z1_1", "Z1_2", "Z1_3", "Z1_4", "Z1_5", "Z1_6",
        "Z2_1", "Z2_2", "Z3", "Z4", "Z5", "Z6", "Z7", "Z8",
    ]
    cb_edges = [
        ("X", "Y"),
        ("Z1_1", "X"),
        ("Z1_1", "Y"),
        ("Z1_2", "X"),
        ("Z1_3", "Y"),
        ("Z1_4", "Z1_3"),
        ("Z1_4", "Z1_2"),
        ("Z1_5", "Z1_2"),
        ("Z1_5", "Z1_4"),
        ("Z1_5", "Z2_2"),
        ("Z1_6", "Z1_3"),
        ("Z1_6", "Z1_4"),
        ("Z1_6", "Z2_2"),
        ("Z4", "Y"),
        ("Z4", "Z1_3"),
        ("Z5", "X"),
        ("Z5", "Z1_2"),
        ("X", "Z2_1"),
        ("Y", "Z2_1"),
        ("X", "Z3"),
        ("Z3", "Y"),
        ("Y", "Z6"),
        ("X", "Z7"),
    ]
    graphs["complex_backdoor"] = Dag(cb_nodes, cb_edges, "X", "Y")

    latent_nodes = [
        "X", "Y", "Z1", "B1", "B2", "B3", "M1", "M2", "M3",
        "Z2", "Z3", "Z4a", "Z4b", "Z5a", "Z5b", "Z6", "Z7", "Z8",
    ]
    latent_edges = [
        ("X", "Y"),
        ("Z1", "X"),
        ("Z1", "Y"),
        ("B1", "X"),
        ("B1", "B3"),
        ("B2", "B3"),
        ("B2", "Y"),
        ("B3", "X"),
        ("B3", "Y"),
        ("M1", "X"),
        ("M1", "M3"),
        ("M2", "M3"),
        ("M2", "Y"),
        ("X", "Z2"),
        ("Y", "Z2"),
        ("X", "Z3"),
        ("Z3", "Y"),
        ("Z4a", "Y"),
        ("Z4a", "Z4b"),
        ("Z5a", "X"),
        ("Z5a", "Z5b"),
        ("Y", "Z6"),
        ("Z6", "Z2"),
        ("X", "Z7"),
    ]
    graphs["latent_18"] = Dag(latent_nodes, latent_edges, "X", "Y")
    return graphs


NAMED_GRAPHS: dict[str, Dag] = _build_named_graphs()


def named_graph(graph_id: str) -> Dag:
    """Built-in benchmark graph by identifier."""
    try:
        return NAMED_GRAPHS[graph_id]
    except KeyError:
        raise ValueError(
            f"unknown graph id {graph_id!r}; known: {sorted(NAMED_GRAPHS)}"
        ) from None


def scaling_graph(k: int) -> Dag:
    """Ten-node-shaped DAG with ``k`` members per partition (8k candidates).

    Each partition member carries the same exposure/outcome edges as its
    singleton counterpart in ``ten_node``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    nodes = ["X", "Y"]
    edges: list[tuple[str, str]] = [("X", "Y")]
    for part in range(1, 9):
        for i in range(1, k + 1):
            v = f"Z{part}_{i}"
            nodes.append(v)
            if part == 1:
                edges += [(v, "X"), (v, "Y")]
            elif part == 2:
                edges += [("X", v), ("Y", v)]
            elif part == 3:
                edges += [("X", v), (v, "Y")]
            elif part == 4:
                edges += [(v, "Y")]
            elif part == 5:
                edges += [(v, "X")]
            elif part == 6:
                edges += [("Y", v)]
            elif part == 7:
                edges += [("X", v)]
    return Dag(nodes, edges, "X", "Y")


# -- datasets -----------------------------------------------------------------


@dataclass(frozen=True)
class Dataset:
    """Sampled n-by-p data matrix with named columns."""

    columns: tuple[str, ...]
    values: np.ndarray
    seed: Optional[int] = None
    provenance: str = ""
    exposure: Optional[str] = None
    outcome: Optional[str] = None
    hidden: tuple[str, ...] = ()

    def __post_init__(self):
        if self.values.ndim != 2 or self.values.shape[1] != len(self.columns):
            raise ValueError("values must be n x len(columns)")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("dataset contains non-finite values")

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def column(self, name: str) -> np.ndarray:
        try:
            j = self.columns.index(name)
        except ValueError:
            raise ValueError(f"unknown column: {name!r}") from None
        return self.values[:, j]

    def candidate_columns(self) -> tuple[str, ...]:
        return tuple(
            c for c in self.columns if c not in (self.exposure, self.outcome)
        )


# -- structural equations -----------------------------------------------------

_DISCRETE_NOISE = {"bernoulli", "hypergeometric"}
_CONTINUOUS_NOISE = {"gaussian", "uniform", "exponential"}
_MECHANISMS = {"linear", "quadratic", "cube_root"}


@dataclass(frozen=True)
class ScmSpec:
    """Structural-equation specification over a DAG.

    Discrete processes compute ``floor(c * f(sum of parents)) + noise`` per
    node, where ``f`` is identity, square, or cube root. Continuous
    processes compute a weighted sum of parents plus noise; weights are
    either fixed or drawn uniformly per edge and replicate.
    """

    name: str
    dag: Dag
    mechanism: str  # linear | quadratic | cube_root
    noise: str  # bernoulli | hypergeometric | gaussian | uniform | exponential
    coefficient: Optional[float] = None  # discrete processes
    weight_range: Optional[tuple[float, float]] = None  # continuous, random weights
    fixed_weights: Optional[Mapping[tuple[str, str], float]] = None
    default_weight: float = 1.0
    bernoulli_p: float = 0.5
    hypergeometric: tuple[int, int, int] = (7, 13, 5)  # ngood, nbad, nsample
    gaussian_sigma: float = 1.0
    uniform_range: tuple[float, float] = (0.0, 1.0)
    exponential_scale: float = 1.0

    def __post_init__(self):
        if self.mechanism not in _MECHANISMS:
            raise ValueError(f"unknown mechanism {self.mechanism!r}")
        if self.noise in _DISCRETE_NOISE:
            if self.coefficient is None:
                raise ValueError("discrete processes need a coefficient")
        elif self.noise in _CONTINUOUS_NOISE:
            if self.weight_range is None and self.fixed_weights is None:
                raise ValueError(
                    "continuous processes need weight_range or fixed_weights"
                )
        else:
            raise ValueError(f"unknown noise family {self.noise!r}")

    @property
    def discretize(self) -> bool:
        # discrete noise implies the floored mechanism, continuous forbids it
        return self.noise in _DISCRETE_NOISE

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "graph": {
                "nodes": list(self.dag.nodes),
                "edges": sorted(self.dag.edges),
                "exposure": self.dag.exposure,
                "outcome": self.dag.outcome,
            },
            "mechanism": self.mechanism,
            "noise": self.noise,
            "coefficient": self.coefficient,
            "weight_range": list(self.weight_range) if self.weight_range else None,
            "fixed_weights": (
                {f"{p}->{c}": w for (p, c), w in sorted(self.fixed_weights.items())}
                if self.fixed_weights
                else None
            ),
            "default_weight": self.default_weight,
            "noise_params": {
                "bernoulli_p": self.bernoulli_p,
                "hypergeometric": list(self.hypergeometric),
                "gaussian_sigma": self.gaussian_sigma,
                "uniform_range": list(self.uniform_range),
                "exponential_scale": self.exponential_scale,
            },
        }

    @staticmethod
    def from_json_dict(payload: Mapping) -> "ScmSpec":
        graph = payload["graph"]
        dag = Dag(
            graph["nodes"],
            [tuple(e) for e in graph["edges"]],
            graph["exposure"],
            graph["outcome"],
        )
        fixed = payload.get("fixed_weights")
        if fixed is not None:
            fixed = {
                tuple(key.split("->")): w for key, w in fixed.items()
            }
        params = payload.get("noise_params", {})
        return ScmSpec(
            name=payload["name"],
            dag=dag,
            mechanism=payload["mechanism"],
            noise=payload["noise"],
            coefficient=payload.get("coefficient"),
            weight_range=(
                tuple(payload["weight_range"]) if payload.get("weight_range") else None
            ),
            fixed_weights=fixed,
            default_weight=payload.get("default_weight", 1.0),
            bernoulli_p=params.get("bernoulli_p", 0.5),
            hypergeometric=tuple(params.get("hypergeometric", (7, 13, 5))),
            gaussian_sigma=params.get("gaussian_sigma", 1.0),
            uniform_range=tuple(params.get("uniform_range", (0.0, 1.0))),
            exponential_scale=params.get("exponential_scale", 1.0),
        )


def _stream(seed: int, *key: str) -> np.random.Generator:
    """Independent generator keyed by the global seed plus string labels."""
    digest = hashlib.sha256(("\x1f".join(key)).encode()).digest()
    words = [int.from_bytes(digest[i : i + 4], "big") for i in (0, 4, 8, 12)]
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFF, *words]))


def _noise(spec: ScmSpec, node: str, n: int, seed: int) -> np.ndarray:
    rng = _stream(seed, "noise", node)
    if spec.noise == "bernoulli":
        return rng.binomial(1, spec.bernoulli_p, size=n).astype(np.float64)
    if spec.noise == "hypergeometric":
        g, b, s = spec.hypergeometric
        return rng.hypergeometric(g, b, s, size=n).astype(np.float64)
    if spec.noise == "gaussian":
        return rng.normal(0.0, spec.gaussian_sigma, size=n)
    if spec.noise == "uniform":
        lo, hi = spec.uniform_range
        return rng.uniform(lo, hi, size=n)
    if spec.noise == "exponential":
        return rng.exponential(spec.exponential_scale, size=n)
    raise AssertionError(spec.noise)


def _edge_weight(spec: ScmSpec, parent: str, child: str, seed: int) -> float:
    if spec.fixed_weights is not None:
        return float(spec.fixed_weights.get((parent, child), spec.default_weight))
    lo, hi = spec.weight_range
    rng = _stream(seed, "weight", child, parent)
    return float(rng.uniform(lo, hi))


def sample(spec: ScmSpec, n: int, seed: int) -> Dataset:
    """Draw ``n`` joint samples by topological-order evaluation."""
    if n < 1:
        raise ValueError("n must be >= 1")
    g = spec.dag
    values: dict[str, np.ndarray] = {}
    for v in g.topological_order():
        noise = _noise(spec, v, n, seed)
        # canonical (name-sorted) parent order keeps float accumulation
        # bit-stable across node or edge declaration orders
        parents = sorted(g.parents(v))
        if not parents:
            values[v] = noise
            continue
        if spec.discretize:
            total = np.sum([values[p] for p in parents], axis=0)
            if spec.mechanism == "linear":
                mech = spec.coefficient * total
            elif spec.mechanism == "quadratic":
                mech = spec.coefficient * np.square(total)
            else:
                mech = spec.coefficient * np.cbrt(total)
            # round-half-up to the nearest integer before adding noise; plain
            # floor would zero out the sub-unit coefficients entirely
            values[v] = np.floor(mech + 0.5) + noise
        else:
            acc = np.zeros(n)
            for p in parents:
                acc += _edge_weight(spec, p, v, seed) * values[p]
            values[v] = acc + noise
    matrix = np.column_stack([values[v] for v in g.nodes])
    return Dataset(
        columns=g.nodes,
        values=matrix,
        seed=seed,
        provenance=spec.name,
        exposure=g.exposure,
        outcome=g.outcome,
    )


def mask_latents(data: Dataset, hidden: Iterable[str]) -> Dataset:
    """Drop the ``hidden`` columns, annotating provenance."""
    hidden = tuple(dict.fromkeys(hidden))
    for h in hidden:
        if h not in data.columns:
            raise ValueError(f"unknown column: {h!r}")
        if h in (data.exposure, data.outcome):
            raise ValueError("cannot mask the exposure or outcome")
    if not hidden:
        return data
    keep = [i for i, c in enumerate(data.columns) if c not in hidden]
    return replace(
        data,
        columns=tuple(data.columns[i] for i in keep),
        values=data.values[:, keep],
        provenance=f"{data.provenance} minus {{{','.join(hidden)}}}",
        hidden=data.hidden + hidden,
    )


# -- process catalog ----------------------------------------------------------

# Discrete structural-equation coefficients by (process, graph). The 10- and
# 13-node and latent-18 values follow the benchmark definitions; the
# seventeen_node and complex_backdoor entries are repository defaults.
_DISCRETE_COEFFICIENTS: dict[str, dict[str, float]] = {
    "linear_bernoulli": {
        "ten_node": 0.3,
        "ten_node_no_direct": 0.45,
        "m_structure_13": 1.5,
        "butterfly_13": 1.9,
        "latent_18": 1.3,
        "seventeen_node": 1.5,
    },
    "linear_hypergeometric": {
        "ten_node": 0.3,
        "ten_node_no_direct": 0.45,
    },
    "quadratic_bernoulli": {
        "ten_node": -1.4,
        "ten_node_no_direct": -1.4,
    },
    "quadratic_hypergeometric": {
        "ten_node": 0.4,
        "ten_node_no_direct": 0.4,
        "m_structure_13": 1.5,
        "butterfly_13": 2.8,
        "seventeen_node": 1.5,
        "complex_backdoor": 0.4,
    },
    "cube_root_bernoulli": {
        "ten_node": 1.2,
        "ten_node_no_direct": 1.2,
    },
    "cube_root_hypergeometric": {
        "ten_node": 0.7,
        "ten_node_no_direct": 0.7,
    },
}

_CONTINUOUS_PROCESSES = {
    "linear_gaussian": "gaussian",
    "linear_uniform": "uniform",
    "linear_exponential": "exponential",
}

# Fixed-weight linear-Gaussian process used for treatment-effect evaluation:
# unit weights everywhere except a 2.75 direct exposure-outcome effect, for a
# total effect of 3.75 on ten_node.
_ATE_DIRECT_EFFECT = 2.75

PROCESS_CATALOG: dict[str, dict] = {
    **{
        name: {"kind": "discrete", "mechanism": name.split("_")[0] if not name.startswith("cube") else "cube_root",
               "noise": name.rsplit("_", 1)[-1], "coefficients": coeffs}
        for name, coeffs in _DISCRETE_COEFFICIENTS.items()
    },
    **{
        name: {"kind": "continuous_random", "mechanism": "linear", "noise": noise,
               "weight_range": (1.0, 3.0)}
        for name, noise in _CONTINUOUS_PROCESSES.items()
    },
    "ate_gaussian": {
        "kind": "continuous_fixed",
        "mechanism": "linear",
        "noise": "gaussian",
        "default_weight": 1.0,
        "exposure_outcome_weight": _ATE_DIRECT_EFFECT,
    },
}


def process_ids() -> tuple[str, ...]:
    return tuple(sorted(PROCESS_CATALOG))


def build_scm(graph_id: str, process_id: str) -> ScmSpec:
    """Assemble the structural-equation spec for a (graph, process) pair."""
    g = named_graph(graph_id)
    try:
        proc = PROCESS_CATALOG[process_id]
    except KeyError:
        raise ValueError(
            f"unknown process id {process_id!r}; known: {sorted(PROCESS_CATALOG)}"
        ) from None
    name = f"{graph_id}:{process_id}"
    if proc["kind"] == "discrete":
        coeffs = proc["coefficients"]
        if graph_id not in coeffs:
            raise ValueError(
                f"process {process_id!r} has no coefficient for graph {graph_id!r}"
            )
        return ScmSpec(
            name=name,
            dag=g,
            mechanism=proc["mechanism"],
            noise=proc["noise"],
            coefficient=coeffs[graph_id],
        )
    if proc["kind"] == "continuous_random":
        return ScmSpec(
            name=name,
            dag=g,
            mechanism="linear",
            noise=proc["noise"],
            weight_range=proc["weight_range"],
        )
    fixed = {}
    if (g.exposure, g.outcome) in g.edges:
        fixed[(g.exposure, g.outcome)] = proc["exposure_outcome_weight"]
    return ScmSpec(
        name=name,
        dag=g,
        mechanism="linear",
        noise=proc["noise"],
        fixed_weights=fixed,
        default_weight=proc["default_weight"],
    )


# -- CSV exchange -------------------------------------------------------------


def dataset_to_csv(data: Dataset, path) -> None:
    header = ",".join(data.columns)
    is_int = np.allclose(data.values, np.round(data.values), atol=1e-12)
    fmt = "%d" if is_int else "%.10g"
    np.savetxt(path, data.values, delimiter=",", header=header, comments="", fmt=fmt)


def dataset_from_csv(path, exposure: Optional[str] = None, outcome: Optional[str] = None) -> Dataset:
    if hasattr(path, "read"):
        text = path.read()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    buf = io.StringIO(text)
    header = buf.readline().strip()
    if not header:
        raise ValueError("empty CSV")
    columns = tuple(name.strip() for name in header.split(","))
    try:
        values = np.loadtxt(buf, delimiter=",", ndmin=2)
    except ValueError as err:
        raise ValueError(f"malformed numeric CSV: {err}") from None
    if values.size == 0:
        raise ValueError("CSV has no data rows")
    if values.shape[1] != len(columns):
        raise ValueError("row width does not match header")
    for name in (exposure, outcome):
        if name is not None and name not in columns:
            raise ValueError(f"column {name!r} not present in CSV")
    return Dataset(
        columns=columns,
        values=values,
        provenance=str(path),
        exposure=exposure,
        outcome=outcome,
    )


def preset_catalog_json() -> str:
    """JSON text of every (graph, process) spec shipped with the package."""
    payload = {}
    for graph_id in sorted(NAMED_GRAPHS):
        for process_id in sorted(PROCESS_CATALOG):
            try:
                spec = build_scm(graph_id, process_id)
            except ValueError:
                continue
            payload[f"{graph_id}:{process_id}"] = spec.to_json_dict()
    return json.dumps(payload, indent=2, sort_keys=True)
