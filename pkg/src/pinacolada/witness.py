"""Violation witnesses and run reports: JSON and a simplified GraphML."""
from __future__ import annotations

import dataclasses
import json
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from typing import Optional

GRAPHML_NS = "http://graphml.graphdrawing.org/xmlns"

# key id -> (for, attr.name)
_KEYS = {
    "witness-type": ("graph", "witness-type"),
    "producer": ("graph", "producer"),
    "architecture": ("graph", "architecture"),
    "programfile": ("graph", "programfile"),
    "entry": ("node", "entry"),
    "violation": ("node", "violation"),
    "assumption": ("edge", "assumption"),
    "startline": ("edge", "startline"),
    "control": ("edge", "control"),
    "enterFunction": ("edge", "enterFunction"),
    "returnFrom": ("edge", "returnFromFunction"),
}


@dataclass
class Witness:
    assert_location: tuple  # (function, instruction index, source line)
    nondet_inputs: list     # [{ordinal, variable, value, step}]
    branch_trace: list      # [{function, index, direction, line, step}]
    width: int
    tool_version: str = ""
    config: dict = field(default_factory=dict)
    kind: str = "violation"

    def to_dict(self):
        d = dataclasses.asdict(self)
        d["assert_location"] = list(self.assert_location)
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["assert_location"] = tuple(d["assert_location"])
        return cls(**d)


@dataclass
class RunReport:
    outcome: str
    bounded: bool
    strategy: str
    mode: str
    int_width: int
    wall_time: float
    stats: dict
    witness: Optional[Witness] = None
    program: str = ""

    def to_dict(self):
        d = dataclasses.asdict(self)
        if self.witness is not None:
            d["witness"] = self.witness.to_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.get("witness") is not None:
            d["witness"] = Witness.from_dict(d["witness"])
        return cls(**d)


def emit_json(obj, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _graph_root(witness_type, meta):
    ET.register_namespace("", GRAPHML_NS)
    root = ET.Element(f"{{{GRAPHML_NS}}}graphml")
    for key_id, (domain, name) in _KEYS.items():
        ET.SubElement(root, f"{{{GRAPHML_NS}}}key", {
            "id": key_id, "for": domain, "attr.name": name, "attr.type": "string"})
    graph = ET.SubElement(root, f"{{{GRAPHML_NS}}}graph", {"edgedefault": "directed"})
    _data(graph, "witness-type", witness_type)
    for k in ("producer", "architecture", "programfile"):
        if meta.get(k):
            _data(graph, k, str(meta[k]))
    return root, graph


def _data(parent, key, text):
    el = ET.SubElement(parent, f"{{{GRAPHML_NS}}}data", {"key": key})
    el.text = text
    return el


def _node(graph, node_id, **flags):
    n = ET.SubElement(graph, f"{{{GRAPHML_NS}}}node", {"id": node_id})
    for k, v in flags.items():
        _data(n, k, v)
    return n


def graphml_tree(w: Witness, meta=None) -> ET.ElementTree:
    """One node per trace step; edges carry the step's data."""
    meta = meta or {}
    root, graph = _graph_root("violation_witness", meta)
    steps = []
    for item in w.nondet_inputs:
        steps.append((item["step"], {
            "assumption": f"{item['variable']} == {item['value']}",
            "startline": str(item.get("line", 0)),
        }))
    for item in w.branch_trace:
        steps.append((item["step"], {
            "control": "condition-true" if item["direction"] else "condition-false",
            "startline": str(item.get("line", 0)),
        }))
    steps.sort(key=lambda s: s[0])
    _node(graph, "N0", entry="true")
    prev = "N0"
    for k, (_, data) in enumerate(steps, start=1):
        nid = f"N{k}"
        _node(graph, nid)
        edge = ET.SubElement(graph, f"{{{GRAPHML_NS}}}edge", {"source": prev, "target": nid})
        for key, text in data.items():
            _data(edge, key, text)
        prev = nid
    vid = f"N{len(steps) + 1}"
    _node(graph, vid, violation="true")
    edge = ET.SubElement(graph, f"{{{GRAPHML_NS}}}edge", {"source": prev, "target": vid})
    _data(edge, "startline", str(w.assert_location[2]))
    return ET.ElementTree(root)


def correctness_stub(meta=None) -> ET.ElementTree:
    root, graph = _graph_root("correctness_witness", meta or {})
    _node(graph, "N0", entry="true")
    return ET.ElementTree(root)


def emit_graphml(w: Optional[Witness], path, meta=None) -> None:
    """Write a violation witness, or a metadata-only stub when ``w`` is None."""
    tree = graphml_tree(w, meta) if w is not None else correctness_stub(meta)
    ET.indent(tree)
    tree.write(path, encoding="utf-8", xml_declaration=True)
