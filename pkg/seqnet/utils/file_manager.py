import os
from typing import Iterable, List, Optional, Sequence

import networkx as nx
import numpy as np
import pydot

import logging

from seqnet.core.errors import InvalidInputError
from seqnet.services.graph_core import FormationPath, Graph, is_unweighted

logger = logging.getLogger(__name__)


def _format_entry(x: float, integral: bool) -> str:
    return str(int(x)) if integral else repr(float(x))


def format_matrix(G: Graph) -> str:
    """
    Convert a graph to the matrix text format.

    The first line holds n, followed by n whitespace-separated rows.
    Unweighted graphs use 0/1 entries, weighted graphs full-precision reals.

    Args:
        G: Graph to format

    Returns:
        Matrix text
    """
    integral = is_unweighted(G)
    lines = [str(G.n)]
    for row in G.w:
        lines.append(" ".join(_format_entry(x, integral) for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> Graph:
    """
    Parse one graph in the matrix text format.

    Raises:
        InvalidInputError: If the header or rows are malformed
    """
    lines = [line.strip() for line in text.strip().splitlines() if line.strip()]
    if not lines:
        raise InvalidInputError("Empty matrix block")
    try:
        n = int(lines[0])
    except ValueError:
        raise InvalidInputError(f"Matrix header must be the node count, got '{lines[0]}'")
    rows = lines[1:]
    if len(rows) != n:
        raise InvalidInputError(f"Expected {n} matrix rows, got {len(rows)}")
    try:
        w = np.array([[float(x) for x in row.split()] for row in rows])
    except ValueError as e:
        raise InvalidInputError(f"Non-numeric matrix entry: {e}")
    if w.shape != (n, n):
        raise InvalidInputError(f"Expected an {n}x{n} matrix, got rows of lengths {[len(r.split()) for r in rows]}")
    return Graph(w)


def format_path(s: FormationPath) -> str:
    """Path file: one matrix block per period, blank-line separated."""
    return "\n".join(format_matrix(G) for G in s)


def parse_path(text: str) -> FormationPath:
    """
    Parse a path file.

    The path is flagged weighted when any period holds a fractional entry.
    """
    blocks = [b for b in text.replace("\r\n", "\n").split("\n\n") if b.strip()]
    if not blocks:
        raise InvalidInputError("Path file holds no matrix blocks")
    graphs = [parse_matrix(b) for b in blocks]
    weighted = not all(is_unweighted(G) for G in graphs)
    return FormationPath(tuple(graphs), weighted=weighted)


def to_networkx(G: Graph) -> nx.Graph:
    """Undirected networkx graph with 1-based string labels; weight set only when != 1."""
    H = nx.Graph()
    H.add_nodes_from(str(i + 1) for i in range(G.n))
    rows, cols = np.nonzero(np.triu(G.w, 1))
    for i, j in zip(rows.tolist(), cols.tolist()):
        if G.w[i, j] == 1.0:
            H.add_edge(str(i + 1), str(j + 1))
        else:
            H.add_edge(str(i + 1), str(j + 1), weight=repr(float(G.w[i, j])))
    return H


def to_dot(G: Graph, name: str = "G") -> str:
    """
    Render a graph as DOT text.

    Args:
        G: Graph to render
        name: DOT graph name

    Returns:
        DOT text of an undirected graph
    """
    dot = nx.nx_pydot.to_pydot(to_networkx(G))
    dot.set_name(name)
    return dot.to_string()


def read_dot(text: str, n: Optional[int] = None) -> Graph:
    """
    Parse DOT text written by to_dot.

    Args:
        text: DOT text
        n: Node count; defaults to the largest label

    Raises:
        InvalidInputError: If the text is not a DOT graph with integer labels
    """
    parsed = pydot.graph_from_dot_data(text)
    if not parsed:
        raise InvalidInputError("Could not parse DOT text")
    H = nx.nx_pydot.from_pydot(parsed[0])
    labels = {}
    for node in H.nodes:
        name = str(node).strip('"').strip()
        if name in ("", "\\n"):
            continue
        if not name.isdigit():
            raise InvalidInputError(f"DOT node label '{name}' is not an integer")
        labels[node] = int(name)
    size = n if n is not None else max(labels.values(), default=0)
    w = np.zeros((size, size))
    for a, b, data in H.edges(data=True):
        i, j = labels[a] - 1, labels[b] - 1
        weight = float(str(data.get("weight", 1.0)).strip('"'))
        w[i, j] = w[j, i] = weight
    return Graph(w)


def csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """CSV text with reals in full precision."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(repr(x) if isinstance(x, float) else str(x) for x in row))
    return "\n".join(lines) + "\n"


def write_text(directory: str, filename: str, content: str) -> str:
    """
    Write text into directory, creating it if needed.

    Returns:
        Path of the written file
    """
    os.makedirs(directory, exist_ok=True)
    path = os.path.join(directory, filename)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(content)
    logger.debug(f"Wrote {path}")
    return path


def write_path_dots(directory: str, s: FormationPath, prefix: str = "period") -> List[str]:
    """One DOT file per period, named <prefix>_<t>.dot."""
    width = len(str(len(s)))
    return [
        write_text(directory, f"{prefix}_{t:0{width}d}.dot", to_dot(G, name=f"{prefix}_{t}"))
        for t, G in enumerate(s, start=1)
    ]
