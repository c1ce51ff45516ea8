"""Versioned binary checkpoint container.

Layout: 4-byte magic b"ESCK", u32 version, then tagged sections until EOF.
Each section is a 4-byte ASCII tag, a u64 payload length, and the payload:

    CONF  canonical config text (utf-8)
    COLS  newline-joined feature column names (utf-8)
    PREP  named float64 blobs with the preprocessing statistics
    NETP  named float64 blobs: network parameters in declaration order,
          then normalization buffers
    GBDT  encoded boosted-tree ensemble

Named blobs are: u64 name length, utf-8 name, u64 byte length, float64
little-endian data. Tree-only checkpoints simply omit the NETP section.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .boosting import BoostedTreesClassifier, RegressionTree, TreeNode
from .configfile import config_to_text, model_config_from_text
from .data import WindowPreprocessor
from .network import ModelConfig, ViewFusionNetwork, build_network

__all__ = ["Checkpoint", "save_checkpoint", "load_checkpoint", "CHECKPOINT_MAGIC"]

CHECKPOINT_MAGIC = b"ESCK"
CHECKPOINT_VERSION = 1


def _pack_blobs(arrays: dict) -> bytes:
    parts = []
    for name, arr in arrays.items():
        raw_name = name.encode("utf-8")
        payload = np.ascontiguousarray(arr, dtype="<f8").tobytes()
        parts.append(struct.pack("<Q", len(raw_name)))
        parts.append(raw_name)
        parts.append(struct.pack("<Q", len(payload)))
        parts.append(payload)
    return b"".join(parts)


def _unpack_blobs(payload: bytes) -> dict:
    arrays = {}
    pos = 0
    while pos < len(payload):
        (name_len,) = struct.unpack_from("<Q", payload, pos)
        pos += 8
        name = payload[pos:pos + name_len].decode("utf-8")
        pos += name_len
        (byte_len,) = struct.unpack_from("<Q", payload, pos)
        pos += 8
        arrays[name] = np.frombuffer(payload[pos:pos + byte_len], dtype="<f8").copy()
        pos += byte_len
    return arrays


def _flatten_tree(node: TreeNode) -> list:
    """Preorder node list as (is_leaf, feature, threshold, left, right, value)."""
    nodes = []

    def visit(n: TreeNode) -> int:
        index = len(nodes)
        nodes.append(None)
        if n.is_leaf:
            nodes[index] = (1, 0, 0.0, 0, 0, n.value)
        else:
            left = visit(n.left)
            right = visit(n.right)
            nodes[index] = (0, n.feature, n.threshold, left, right, n.value)
        return index

    visit(node)
    return nodes


def _rebuild_tree(nodes: list) -> TreeNode:
    def build(index: int) -> TreeNode:
        is_leaf, feature, threshold, left, right, value = nodes[index]
        if is_leaf:
            return TreeNode(value=value)
        return TreeNode(feature=feature, threshold=threshold,
                        left=build(left), right=build(right), value=value)

    return build(0)


def _encode_gbdt(model: BoostedTreesClassifier) -> bytes:
    parts = [struct.pack("<IdIIII", len(model.classes_), model.shrinkage,
                         len(model.trees_), model.max_depth, model.min_samples_leaf,
                         model.n_features_in_)]
    for round_trees in model.trees_:
        for tree in round_trees:
            nodes = _flatten_tree(tree.root)
            parts.append(struct.pack("<I", len(nodes)))
            for is_leaf, feature, threshold, left, right, value in nodes:
                parts.append(struct.pack("<BIdIId", is_leaf, feature, threshold, left, right, value))
    return b"".join(parts)


def _decode_gbdt(payload: bytes) -> BoostedTreesClassifier:
    pos = 0
    n_classes, shrinkage, n_rounds, max_depth, min_leaf, n_features = struct.unpack_from("<IdIIII", payload, pos)
    pos += struct.calcsize("<IdIIII")
    model = BoostedTreesClassifier(n_rounds=n_rounds, max_depth=max_depth,
                                   shrinkage=shrinkage, min_samples_leaf=min_leaf,
                                   n_classes=n_classes)
    rounds = []
    node_fmt = "<BIdIId"
    node_size = struct.calcsize(node_fmt)
    for _ in range(n_rounds):
        round_trees = []
        for _ in range(n_classes):
            (n_nodes,) = struct.unpack_from("<I", payload, pos)
            pos += 4
            nodes = []
            for _ in range(n_nodes):
                nodes.append(struct.unpack_from(node_fmt, payload, pos))
                pos += node_size
            tree = RegressionTree(max_depth, min_leaf)
            tree.root = _rebuild_tree(nodes)
            round_trees.append(tree)
        rounds.append(round_trees)
    model.classes_ = np.arange(n_classes)
    model.n_features_in_ = n_features
    model.trees_ = rounds
    model.train_loss_path_ = []
    return model


@dataclass
class Checkpoint:
    config: ModelConfig
    columns: list
    preprocessor: WindowPreprocessor | None
    network: ViewFusionNetwork | None
    head: BoostedTreesClassifier | None


def save_checkpoint(path, config: ModelConfig, columns,
                    preprocessor: WindowPreprocessor | None = None,
                    network: ViewFusionNetwork | None = None,
                    head: BoostedTreesClassifier | None = None) -> None:
    sections = [(b"CONF", config_to_text(config).encode("utf-8")),
                (b"COLS", "\n".join(columns).encode("utf-8"))]
    if preprocessor is not None:
        sections.append((b"PREP", _pack_blobs(preprocessor.state_arrays())))
    if network is not None:
        sections.append((b"NETP", _pack_blobs(network.state_arrays())))
    if head is not None:
        sections.append((b"GBDT", _encode_gbdt(head)))

    parts = [CHECKPOINT_MAGIC, struct.pack("<I", CHECKPOINT_VERSION)]
    for tag, payload in sections:
        parts.append(tag)
        parts.append(struct.pack("<Q", len(payload)))
        parts.append(payload)
    Path(path).write_bytes(b"".join(parts))


def read_sections(path) -> dict:
    blob = Path(path).read_bytes()
    if blob[:4] != CHECKPOINT_MAGIC:
        raise ValueError(f"{path}: not a checkpoint file (bad magic)")
    (version,) = struct.unpack_from("<I", blob, 4)
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {version}")
    sections = {}
    pos = 8
    while pos < len(blob):
        tag = blob[pos:pos + 4].decode("ascii")
        (length,) = struct.unpack_from("<Q", blob, pos + 4)
        pos += 12
        sections[tag] = blob[pos:pos + length]
        pos += length
    return sections


def load_checkpoint(path) -> Checkpoint:
    sections = read_sections(path)
    if "CONF" not in sections:
        raise ValueError(f"{path}: checkpoint has no config section")
    config = model_config_from_text(sections["CONF"].decode("utf-8"))
    columns = sections.get("COLS", b"").decode("utf-8").splitlines()

    preprocessor = None
    if "PREP" in sections:
        preprocessor = WindowPreprocessor.from_state_arrays(_unpack_blobs(sections["PREP"]))

    network = None
    if "NETP" in sections:
        arrays = _unpack_blobs(sections["NETP"])
        network = build_network(config)
        shaped = {}
        for name, tensor in network.parameters().items():
            if name in arrays:
                shaped[name] = arrays[name].reshape(tensor.data.shape)
        for name, flat in arrays.items():
            if name not in shaped:  # normalization buffers are 1-D already
                shaped[name] = flat
        network.load_state_arrays(shaped)

    head = _decode_gbdt(sections["GBDT"]) if "GBDT" in sections else None
    return Checkpoint(config=config, columns=columns, preprocessor=preprocessor,
                      network=network, head=head)
