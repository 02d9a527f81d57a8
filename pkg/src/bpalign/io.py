"""Plain-text instance formats and the JSON run report.

All formats are whitespace separated, one record per line, UTF-8; a line
whose first non-blank character is ``#`` is a comment, blank lines are skipped.

graph        ``n <node_count>`` header, then ``u v`` per edge
candidates   ``i i' sigma_v``
squares      ``i i' j j' w``
mapping      ``i i' score``
ground truth ``i i'``
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional, Tuple, Union

from .evaluation import GroundTruth, Mapping
from .graph_model import Graph

PathLike = Union[str, Path]


class FormatError(ValueError):
    """Malformed input file; the message names the file and line."""

    def __init__(self, path, line: int, message: str):
        super().__init__(f"{path}:{line}: {message}")
        self.path = str(path)
        self.line = line


def _records(path: PathLike) -> Iterator[Tuple[int, List[str]]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            yield lineno, text.split()


def _parse(path, lineno, fields, types):
    if len(fields) != len(types):
        raise FormatError(path, lineno, f"expected {len(types)} fields, got {len(fields)}")
    try:
        return tuple(t(f) for t, f in zip(types, fields))
    except ValueError:
        raise FormatError(path, lineno, f"cannot parse {' '.join(fields)!r}") from None


def read_graph(path: PathLike) -> Graph:
    node_count = None
    edges = []
    lines = []
    for lineno, fields in _records(path):
        if node_count is None:
            if len(fields) != 2 or fields[0] != "n":
                raise FormatError(path, lineno, "expected header 'n <node_count>'")
            (node_count,) = _parse(path, lineno, fields[1:], (int,))
            if node_count < 0:
                raise FormatError(path, lineno, "node count must be non-negative")
            continue
        u, v = _parse(path, lineno, fields, (int, int))
        if not (0 <= u < node_count and 0 <= v < node_count):
            raise FormatError(path, lineno, f"edge ({u}, {v}) out of range for {node_count} nodes")
        if u == v:
            raise FormatError(path, lineno, f"self-loop on node {u}")
        edges.append((u, v))
        lines.append(lineno)
    if node_count is None:
        raise FormatError(path, 1, "missing header 'n <node_count>'")
    if len(set(edges)) != len(edges):
        seen = set()
        for e, lineno in zip(edges, lines):
            if e in seen:
                raise FormatError(path, lineno, f"duplicate edge {e}")
            seen.add(e)
    return Graph(node_count, edges)


def write_graph(graph: Graph, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"n {graph.node_count}\n")
        for u, v in graph.edges:
            fh.write(f"{u} {v}\n")


def read_candidates(path: PathLike) -> Tuple[List[Tuple[int, int, float]], List[int]]:
    """Triples and the line number each came from."""
    raw, lines = [], []
    for lineno, fields in _records(path):
        raw.append(_parse(path, lineno, fields, (int, int, float)))
        lines.append(lineno)
    return raw, lines


def write_candidates(raw, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, s in raw:
            fh.write(f"{i} {j} {float(s)!r}\n")


def read_square_weights(path: PathLike) -> Dict[Tuple[int, int, int, int], float]:
    out = {}
    for lineno, fields in _records(path):
        i, ip, j, jp, w = _parse(path, lineno, fields, (int, int, int, int, float))
        if (i, ip, j, jp) in out:
            raise FormatError(path, lineno, f"duplicate square ({i}, {ip}, {j}, {jp})")
        if w < 0:
            raise FormatError(path, lineno, f"negative weight {w}")
        out[(i, ip, j, jp)] = w
    return out


def read_mapping(path: PathLike) -> Mapping:
    """``i i' [score]`` lines; a repeated node is a format error."""
    pairs = []
    rows, cols = set(), set()
    for lineno, fields in _records(path):
        if len(fields) == 2:
            i, j = _parse(path, lineno, fields, (int, int))
            s = 0.0
        else:
            i, j, s = _parse(path, lineno, fields, (int, int, float))
        if i in rows:
            raise FormatError(path, lineno, f"node {i} of A mapped twice")
        if j in cols:
            raise FormatError(path, lineno, f"node {j} of B mapped twice")
        rows.add(i)
        cols.add(j)
        pairs.append((i, j, s))
    return Mapping(pairs)


def write_mapping(mapping: Mapping, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, s in mapping.pairs:
            fh.write(f"{i} {j} {s!r}\n")


def read_ground_truth(path: PathLike) -> GroundTruth:
    return GroundTruth(read_mapping(path).pairs)


def write_ground_truth(truth: Mapping, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for i, j, _ in truth.pairs:
            fh.write(f"{i} {j}\n")


@dataclass
class RunReport:
    config: Dict[str, Any]
    sizes: Dict[str, int]
    result: Dict[str, Any]
    metrics: Optional[Dict[str, Any]] = None
    history: Optional[List[Tuple[float, float]]] = None

    def to_dict(self) -> Dict[str, Any]:
        out = {k: v for k, v in asdict(self).items() if v is not None}
        if self.history is not None:
            out["history"] = [list(h) for h in self.history]
        return out

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RunReport":
        history = data.get("history")
        if history is not None:
            history = [tuple(h) for h in history]
        return cls(data["config"], data["sizes"], data["result"], data.get("metrics"), history)

    def dump(self, path: PathLike) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path: PathLike) -> "RunReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))
