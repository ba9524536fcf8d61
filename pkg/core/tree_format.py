"""JSON file formats for trees and distributions.

Tree documents (UTF-8 JSON):
    labeled leaf  {"leaf": 1} or {"leaf": -1}
    bare leaf     {"leaf": null, "id": <int>}
    internal      {"var": <0-based int>, "lo": <node for bit 0>, "hi": <node for bit 1>}

Distribution documents:
    {"biases": [p_1, ..., p_n]}
"""

import json
from pathlib import Path
from typing import Any, Dict, Optional, Union

from core.distribution import ProductDistribution
from core.errors import TreeFormatError
from core.trees import AnyTree, BareTree, DecisionTree, Internal, Leaf, Node


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _node_from_doc(doc: Any) -> Node:
    if not isinstance(doc, dict):
        raise TreeFormatError(f"Tree node must be a JSON object, got {type(doc).__name__}.")
    if "leaf" in doc:
        label = doc["leaf"]
        if label is None:
            if set(doc) != {"leaf", "id"} or not _is_int(doc["id"]):
                raise TreeFormatError(f"Bare leaf needs an integer id: {doc!r}.")
            return Leaf(id=doc["id"])
        if set(doc) != {"leaf"} or label not in (-1, 1) or not _is_int(label):
            raise TreeFormatError(f"Labeled leaf must be {{\"leaf\": 1}} or {{\"leaf\": -1}}: {doc!r}.")
        return Leaf(label=label)
    if set(doc) != {"var", "lo", "hi"}:
        raise TreeFormatError(f"Internal node needs exactly var/lo/hi keys: {sorted(doc)}.")
    if not _is_int(doc["var"]):
        raise TreeFormatError(f"Variable index must be an integer: {doc['var']!r}.")
    return Internal(doc["var"], _node_from_doc(doc["lo"]), _node_from_doc(doc["hi"]))


def _node_to_doc(node: Node) -> Dict[str, Any]:
    if isinstance(node, Leaf):
        if node.label is None:
            return {"leaf": None, "id": node.id}
        return {"leaf": node.label}
    return {"var": node.var, "lo": _node_to_doc(node.lo), "hi": _node_to_doc(node.hi)}


def _has_bare_leaves(node: Node) -> bool:
    while isinstance(node, Internal):
        node = node.lo
    return node.label is None


def tree_from_document(doc: Any, dimension: Optional[int] = None) -> AnyTree:
    root = _node_from_doc(doc)
    if _has_bare_leaves(root):
        return BareTree(root, dimension)
    return DecisionTree(root, dimension)


def parse_tree(text: str, dimension: Optional[int] = None) -> AnyTree:
    """
    Parse a tree document.

    Args:
        text: JSON text in the tree format
        dimension: Ambient n; when given, every variable index must be below it

    Returns:
        A DecisionTree, or a BareTree when the leaves carry ids instead of labels
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TreeFormatError(f"Tree document is not valid JSON: {e}") from e
    return tree_from_document(doc, dimension)


def serialize_tree(tree: AnyTree, indent: Optional[int] = None) -> str:
    """Serialize a tree; keys are emitted in var/lo/hi order so output is canonical."""
    return json.dumps(_node_to_doc(tree.root), indent=indent)


def parse_distribution(text: str) -> ProductDistribution:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise TreeFormatError(f"Distribution document is not valid JSON: {e}") from e
    if not isinstance(doc, dict) or not isinstance(doc.get("biases"), list):
        raise TreeFormatError("Distribution document must look like {\"biases\": [...]}.")
    try:
        return ProductDistribution(tuple(doc["biases"]))
    except (TypeError, ValueError) as e:
        raise TreeFormatError(f"Invalid biases: {e}") from e


def serialize_distribution(dist: ProductDistribution) -> str:
    return json.dumps({"biases": list(dist.biases)})


def load_tree(path: Union[str, Path], dimension: Optional[int] = None) -> AnyTree:
    return parse_tree(Path(path).read_text(encoding="utf-8"), dimension)


def save_tree(tree: AnyTree, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_tree(tree, indent=2) + "\n", encoding="utf-8")


def load_distribution(path: Union[str, Path]) -> ProductDistribution:
    return parse_distribution(Path(path).read_text(encoding="utf-8"))


def save_distribution(dist: ProductDistribution, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_distribution(dist) + "\n", encoding="utf-8")
