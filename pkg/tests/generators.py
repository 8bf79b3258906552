"""Random graph families for property tests.

``random_partitioned_dag`` draws graphs from the ten-node template with
random partition cardinalities plus structured extras (confounder ancestor
proxies, butterfly triples, instrument proxies, mediator chains), all of
which preserve the identifiability conditions by construction: at least one
prognostic variable, at least one discoverable instrument, and no active
paths between members of different partitions outside the exposure/outcome.
"""

from __future__ import annotations

import numpy as np

from ldp.dag import Dag


def random_partitioned_dag(seed: int) -> Dag:
    rng = np.random.default_rng(seed)
    nodes = ["X", "Y"]
    edges: list[tuple[str, str]] = []

    n_z1 = 1 + int(rng.integers(0, 2))
    n_z2 = int(rng.integers(0, 3))
    n_z3 = int(rng.integers(0, 3))
    n_z4 = 1 + int(rng.integers(0, 2))
    n_z5 = 1 + int(rng.integers(0, 2))
    n_z6 = int(rng.integers(0, 2))
    n_z7 = int(rng.integers(0, 2))
    n_z8 = int(rng.integers(0, 2))

    direct = bool(rng.random() < 0.7)
    if direct:
        edges.append(("X", "Y"))
    else:
        n_z3 = max(1, n_z3)  # keep the exposure's effect (and instruments) detectable

    for i in range(n_z1):
        v = f"C{i}"
        nodes.append(v)
        edges += [(v, "X"), (v, "Y")]
        if rng.random() < 0.5:  # ancestor proxy off a confounder
            w = f"Cp{i}"
            nodes.append(w)
            edges.append((w, v))
    if rng.random() < 0.4:  # butterfly triple: all three are confounders
        nodes += ["Ba", "Bb", "Bc"]
        edges += [
            ("Ba", "X"),
            ("Bb", "Y"),
            ("Ba", "Bc"),
            ("Bb", "Bc"),
            ("Bc", "X"),
            ("Bc", "Y"),
        ]

    for i in range(n_z2):
        v = f"K{i}"
        nodes.append(v)
        edges += [("X", v), ("Y", v)]
    # one mediator chain of length n_z3
    prev = "X"
    for i in range(n_z3):
        v = f"M{i}"
        nodes.append(v)
        edges.append((prev, v))
        prev = v
    if n_z3:
        edges.append((prev, "Y"))
    for i in range(n_z4):
        v = f"P{i}"
        nodes.append(v)
        edges.append((v, "Y"))
        if rng.random() < 0.4:  # prognostic ancestor proxy
            w = f"Pp{i}"
            nodes.append(w)
            edges.append((w, v))
    for i in range(n_z5):
        v = f"I{i}"
        nodes.append(v)
        edges.append((v, "X"))
        if rng.random() < 0.4:  # proxy instrument
            w = f"Ip{i}"
            nodes.append(w)
            edges.append((v, w))
    for i in range(n_z6):
        v = f"D{i}"
        nodes.append(v)
        edges.append(("Y", v))
    for i in range(n_z7):
        v = f"E{i}"
        nodes.append(v)
        edges.append(("X", v))
    for i in range(n_z8):
        nodes.append(f"N{i}")

    return Dag(nodes, edges, "X", "Y")
