"""Reading and writing graphs as edge-list text or JSON.

Edge-list text: a header line ``"n m"`` followed by ``m`` lines ``"i j"``
with 0-based vertex ids and ``i < j``.  JSON: ``{"n": n, "edges": [[i, j], ...]}``.
Writers always emit edges in lexicographic order, so output bytes depend
only on the edge set.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .graph import Graph, GraphError


class GraphFormatError(GraphError):
    def __init__(self, message, line=None, source=None):
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"line {line}: "
        elif where:
            where += " "
        super().__init__(where + message)
        self.line = line


def format_edgelist(g: Graph) -> str:
    lines = [f"{g.n} {g.m}"]
    lines.extend(f"{i} {j}" for i, j in g.edges.tolist())
    return "\n".join(lines) + "\n"


def parse_edgelist(text: str, source=None) -> Graph:
    rows = text.splitlines()
    # skip trailing blank lines only; blank lines inside the body are errors
    while rows and not rows[-1].strip():
        rows.pop()
    if not rows:
        raise GraphFormatError("empty input", source=source)
    header = rows[0].split()
    if len(header) != 2:
        raise GraphFormatError("header must be 'n m'", 1, source)
    try:
        n, m = int(header[0]), int(header[1])
    except ValueError:
        raise GraphFormatError("header must hold two integers", 1, source) from None
    if n < 1 or m < 0:
        raise GraphFormatError("header values out of range", 1, source)
    if len(rows) - 1 != m:
        raise GraphFormatError(f"header declares {m} edges, found {len(rows) - 1}", 1, source)
    seen = set()
    edges = []
    for lineno, row in enumerate(rows[1:], start=2):
        parts = row.split()
        if len(parts) != 2:
            raise GraphFormatError("edge line must be 'i j'", lineno, source)
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise GraphFormatError("vertex ids must be integers", lineno, source) from None
        if i == j:
            raise GraphFormatError(f"self-loop at vertex {i}", lineno, source)
        if not (0 <= i < n and 0 <= j < n):
            raise GraphFormatError(f"vertex id out of range for n={n}", lineno, source)
        key = (min(i, j), max(i, j))
        if key in seen:
            raise GraphFormatError(f"duplicate edge {key}", lineno, source)
        seen.add(key)
        edges.append(key)
    return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))


def graph_to_dict(g: Graph) -> dict:
    return {"n": g.n, "edges": g.edges.tolist()}


def graph_from_dict(d: dict, source=None) -> Graph:
    try:
        n = int(d["n"])
        edges = d["edges"]
    except (KeyError, TypeError, ValueError):
        raise GraphFormatError("JSON graph needs integer 'n' and list 'edges'", source=source) from None
    try:
        return Graph(n, np.array(edges, dtype=np.int64).reshape(-1, 2))
    except GraphError as exc:
        raise GraphFormatError(str(exc), source=source) from None
    except ValueError:
        raise GraphFormatError("edges must be integer pairs", source=source) from None


def format_json(g: Graph) -> str:
    return json.dumps(graph_to_dict(g), separators=(",", ":")) + "\n"


def parse_json(text: str, source=None) -> Graph:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GraphFormatError(f"invalid JSON: {exc.msg}", exc.lineno, source) from None
    return graph_from_dict(d, source)


def _is_json(path: Path) -> bool:
    return path.suffix.lower() == ".json"


def read_graph(path) -> Graph:
    path = Path(path)
    text = path.read_text()
    if _is_json(path):
        return parse_json(text, source=path)
    return parse_edgelist(text, source=path)


def write_graph(g: Graph, path) -> Path:
    path = Path(path)
    path.write_text(format_json(g) if _is_json(path) else format_edgelist(g))
    return path


# names used by the command line layer
parse_graph = read_graph
