"""Graphviz DOT export of disassembly trees."""
from __future__ import annotations

from .planner import DisassemblyTree


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(tree: DisassemblyTree) -> str:
    """DOT digraph of ``tree``.

    Subassemblies are boxed in blue and labelled with their parenthesised
    part names; single parts are plain labels.  Each edge runs from a child
    to its parent and names the child's role in the join: ``moving`` for a
    removed set, ``reference`` for the remainder it is joined onto.
    """
    lines = ["digraph disassembly {", "  rankdir=BT;", "  node [fontname=Helvetica];"]
    for nid in sorted(tree.nodes):
        n = tree.nodes[nid]
        label = _quote(tree.label(nid))
        if n.is_leaf:
            lines.append(f"  n{nid} [label={label}, shape=plaintext];")
        else:
            lines.append(f"  n{nid} [label={label}, shape=box, color=blue];")
    for nid in sorted(tree.nodes):
        n = tree.nodes[nid]
        for c in n.children:
            role = "moving" if tree.nodes[c].role == "removed" else "reference"
            lines.append(f"  n{c} -> n{nid} [label={_quote(role)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"
