"""Edge-list and GML readers/writers.

Edge list: one ``u v [w]`` triple per line, 0-based integer ids, ``#``
starts a comment. A ``# nodes: N`` header comment fixes the node count so
that trailing isolated nodes survive a round trip.

GML: the ``graph [ node [ id .. ] edge [ source .. target .. value .. ] ]``
subset used by the common network-data collections. Unknown keys are
skipped, node ids are remapped to ``0..n-1`` in file order.
"""
from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

from .graph import Graph

_NODES_HEADER = re.compile(r"#\s*nodes\s*[:=]\s*(\d+)")


@dataclass(frozen=True)
class ParseDiagnostics:
    line: int
    message: str
    severity: Literal["warning", "error"] = "warning"

    def __str__(self):
        return f"line {self.line}: {self.severity}: {self.message}"


class ParseError(ValueError):
    """Input could not be turned into a graph."""

    def __init__(self, diagnostic: ParseDiagnostics, warnings=()):
        super().__init__(str(diagnostic))
        self.diagnostic = diagnostic
        self.warnings = list(warnings)


@dataclass
class ParseResult:
    graph: Graph
    warnings: list[ParseDiagnostics] = field(default_factory=list)


def _decode(text: Union[str, bytes]) -> tuple[str, list[ParseDiagnostics]]:
    if isinstance(text, str):
        return text, []
    try:
        return text.decode("utf-8"), []
    except UnicodeDecodeError as exc:
        # latin-1 never fails; some GML files in the wild use it
        return text.decode("latin-1"), [ParseDiagnostics(0, f"not valid UTF-8 ({exc.reason}), decoded as latin-1")]


def _parse_weight(tok: str, lineno: int):
    try:
        w = float(tok)
    except ValueError:
        raise ParseError(ParseDiagnostics(lineno, f"invalid weight {tok!r}", "error")) from None
    if not np.isfinite(w) or w <= 0:
        raise ParseError(ParseDiagnostics(lineno, f"weight must be positive and finite, got {tok}", "error"))
    return w


def parse_edge_list_with_diagnostics(text: Union[str, bytes]) -> ParseResult:
    src, warnings = _decode(text)
    edges: dict[tuple[int, int], float] = {}
    declared_n = None
    max_id = -1
    for lineno, raw in enumerate(src.splitlines(), start=1):
        line = raw.strip()
        if line.startswith("#"):
            m = _NODES_HEADER.search(line)
            if m:
                declared_n = int(m.group(1))
            continue
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        toks = line.split()
        if len(toks) not in (2, 3):
            raise ParseError(ParseDiagnostics(lineno, f"expected 'u v [w]', got {raw!r}", "error"), warnings)
        ids = []
        for tok in toks[:2]:
            if not re.fullmatch(r"[+-]?\d+", tok):
                raise ParseError(ParseDiagnostics(lineno, f"non-integer node id {tok!r}", "error"), warnings)
            v = int(tok)
            if v < 0:
                raise ParseError(ParseDiagnostics(lineno, f"negative node id {v}", "error"), warnings)
            ids.append(v)
        u, v = ids
        if u == v:
            raise ParseError(ParseDiagnostics(lineno, f"self-loop at line {lineno}", "error"), warnings)
        w = _parse_weight(toks[2], lineno) if len(toks) == 3 else 1.0
        key = (min(u, v), max(u, v))
        if key in edges:
            warnings.append(ParseDiagnostics(lineno, f"duplicate edge {key}, last weight wins"))
        edges[key] = w
        max_id = max(max_id, u, v)
    n = max_id + 1
    if declared_n is not None:
        if declared_n < n:
            raise ParseError(ParseDiagnostics(0, f"header declares {declared_n} nodes but ids reach {max_id}", "error"), warnings)
        n = declared_n
    a = np.zeros((n, n))
    for (u, v), w in edges.items():
        a[u, v] = a[v, u] = w
    return ParseResult(Graph(a), warnings)


def parse_edge_list(text: Union[str, bytes]) -> Graph:
    """Parse an edge list; see the module docstring for the format."""
    return parse_edge_list_with_diagnostics(text).graph


def write_edge_list(g: Graph) -> str:
    """Serialize with a node-count header; weights use ``repr`` so they round-trip exactly."""
    lines = [f"# nodes: {g.n}"]
    for u, v, w in g.edges():
        lines.append(f"{u} {v}" if w == 1.0 else f"{u} {v} {w!r}")
    return "\n".join(lines) + "\n"


# -- GML ---------------------------------------------------------------------

_TOKEN = re.compile(r'(\[)|(\])|("(?:[^"\\]|\\.)*")|(#[^\n]*)|([^\s\[\]"#]+)|(\S)')


def _tokenize(src: str):
    line_starts = [0] + [m.end() for m in re.finditer("\n", src)]
    for m in _TOKEN.finditer(src):
        line = bisect.bisect_right(line_starts, m.start())
        if m.group(1):
            yield "[", None, line
        elif m.group(2):
            yield "]", None, line
        elif m.group(3) is not None:
            yield "str", m.group(3)[1:-1], line
        elif m.group(4) is not None:
            continue
        elif m.group(5) is not None:
            yield "atom", m.group(5), line
        else:
            raise ParseError(ParseDiagnostics(line, f"unterminated string or stray character {m.group(6)!r}", "error"))


def _parse_gml_tree(src: str):
    """Nested ``(key, value, line)`` lists; lists are values for ``[ ... ]``."""
    stack: list[list] = [[]]
    key = None
    key_line = 0
    for kind, val, line in _tokenize(src):
        if kind == "[":
            if key is None:
                raise ParseError(ParseDiagnostics(line, "'[' without a key", "error"))
            child: list = []
            stack[-1].append((key, child, key_line))
            stack.append(child)
            key = None
        elif kind == "]":
            if key is not None:
                raise ParseError(ParseDiagnostics(line, f"key {key!r} has no value", "error"))
            if len(stack) == 1:
                raise ParseError(ParseDiagnostics(line, "unbalanced ']'", "error"))
            stack.pop()
        elif key is None:
            if kind != "atom":
                raise ParseError(ParseDiagnostics(line, f"expected a key, got string {val!r}", "error"))
            key, key_line = val, line
        else:
            stack[-1].append((key, val, key_line))
            key = None
    if len(stack) != 1:
        raise ParseError(ParseDiagnostics(0, "unbalanced '[': missing ']' at end of input", "error"))
    if key is not None:
        raise ParseError(ParseDiagnostics(key_line, f"key {key!r} has no value", "error"))
    return stack[0]


def _scalar(entries, name):
    for k, v, line in entries:
        if k == name:
            return v, line
    return None, None


def _as_number(val, line, what):
    if not isinstance(val, str):
        raise ParseError(ParseDiagnostics(line, f"{what} must be a scalar", "error"))
    try:
        x = float(val)
    except ValueError:
        raise ParseError(ParseDiagnostics(line, f"{what} is not numeric: {val!r}", "error")) from None
    return x


def parse_gml_with_diagnostics(text: Union[str, bytes]) -> ParseResult:
    src, warnings = _decode(text)
    tree = _parse_gml_tree(src)
    graphs = [(v, line) for k, v, line in tree if k == "graph" and isinstance(v, list)]
    if not graphs:
        raise ParseError(ParseDiagnostics(0, "no 'graph [ ... ]' block", "error"), warnings)
    body, _ = graphs[0]
    index: dict[float, int] = {}
    raw_edges = []
    for k, v, line in body:
        if k == "node" and isinstance(v, list):
            nid, nline = _scalar(v, "id")
            if nid is None:
                raise ParseError(ParseDiagnostics(line, "node without id", "error"), warnings)
            nid = _as_number(nid, nline, "node id")
            if nid in index:
                raise ParseError(ParseDiagnostics(nline, f"duplicate node id {nid:g}", "error"), warnings)
            index[nid] = len(index)
        elif k == "edge" and isinstance(v, list):
            raw_edges.append((v, line))
        elif k == "directed" and isinstance(v, str) and v.strip() == "1":
            warnings.append(ParseDiagnostics(line, "directed graph read as undirected"))
    n = len(index)
    a = np.zeros((n, n))
    for entries, line in raw_edges:
        s, sline = _scalar(entries, "source")
        t, tline = _scalar(entries, "target")
        if s is None or t is None:
            raise ParseError(ParseDiagnostics(line, "edge needs source and target", "error"), warnings)
        s = _as_number(s, sline, "source")
        t = _as_number(t, tline, "target")
        for end, eline in ((s, sline), (t, tline)):
            if end not in index:
                raise ParseError(ParseDiagnostics(eline, f"edge references unknown node id {end:g}", "error"), warnings)
        u, v = index[s], index[t]
        if u == v:
            warnings.append(ParseDiagnostics(line, f"self-loop on node {s:g} dropped"))
            continue
        w_raw, wline = _scalar(entries, "value")
        w = 1.0 if w_raw is None else _as_number(w_raw, wline, "edge value")
        if not np.isfinite(w) or w <= 0:
            raise ParseError(ParseDiagnostics(wline, f"edge value must be positive, got {w_raw}", "error"), warnings)
        if a[u, v] > 0:
            warnings.append(ParseDiagnostics(line, f"duplicate edge ({s:g}, {t:g}), last wins"))
        a[u, v] = a[v, u] = w
    return ParseResult(Graph(a), warnings)


def parse_gml(text: Union[str, bytes]) -> Graph:
    """Parse the GML subset described in the module docstring."""
    return parse_gml_with_diagnostics(text).graph


def read_graph(path, binarize: bool = False) -> ParseResult:
    """Read ``.gml`` or edge-list files by extension."""
    with open(path, "rb") as fh:
        data = fh.read()
    if str(path).lower().endswith(".gml"):
        res = parse_gml_with_diagnostics(data)
    else:
        res = parse_edge_list_with_diagnostics(data)
    if binarize:
        res.graph = res.graph.binarized()
    return res
