"""Architecture graphs: ordered node lists evaluated over engine tensors.

Nodes reference earlier node ids as inputs; id -1 is the graph input.
Each weighted node owns parameters under its `pkey` prefix."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, ShapeMismatch
from .prng import Prng, glorot_init
from . import tensor as T

INPUT = -1

WEIGHTED_KINDS = {"embedding", "linear", "rnnCell"}
NODE_KINDS = WEIGHTED_KINDS | {
    "relu", "tanh", "meanPool", "flatten", "concat", "sum", "mean", "custom",
}


@dataclass
class ArchNode:
    id: int
    kind: str
    attrs: dict = field(default_factory=dict)
    inputs: list[int] = field(default_factory=lambda: [INPUT])
    head: bool = False
    pkey: str = ""
    fn: object = None  # custom nodes only; never serialized

    def __post_init__(self):
        if not self.pkey:
            self.pkey = f"n{self.id}"


@dataclass
class ArchGraph:
    nodes: list[ArchNode]

    @property
    def output(self) -> ArchNode:
        return self.nodes[-1]

    def head_node(self) -> ArchNode | None:
        for node in self.nodes:
            if node.head:
                return node
        return None

    def param_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        """(name, shape) for every weight, in graph order."""
        specs: list[tuple[str, tuple[int, ...]]] = []
        for node in self.nodes:
            a = node.attrs
            if node.kind == "embedding":
                specs.append((f"{node.pkey}.table", (a["vocab"], a["dim"])))
            elif node.kind == "linear":
                specs.append((f"{node.pkey}.weight", (a["out"], a["in"])))
                specs.append((f"{node.pkey}.bias", (a["out"],)))
            elif node.kind == "rnnCell":
                h = a["hidden"]
                specs.append((f"{node.pkey}.wx", (h, a.get("input_dim", 1))))
                specs.append((f"{node.pkey}.wh", (h, h)))
                specs.append((f"{node.pkey}.bias", (h,)))
        return specs

    def init_params(self, rng: Prng) -> dict[str, T.Tensor]:
        params = {}
        for name, shape in self.param_specs():
            t = T.Tensor(glorot_init(shape, rng))
            t.requires_grad = True
            params[name] = t
        return params

    def to_json(self) -> dict:
        nodes = []
        for node in self.nodes:
            if node.kind == "custom":
                raise FormatError("models with custom function nodes cannot be serialized")
            nodes.append(
                {
                    "attrs": dict(node.attrs),
                    "head": node.head,
                    "id": node.id,
                    "inputs": list(node.inputs),
                    "kind": node.kind,
                    "pkey": node.pkey,
                }
            )
        return {"nodes": nodes}

    @staticmethod
    def from_json(obj: dict) -> "ArchGraph":
        try:
            nodes = [
                ArchNode(
                    id=n["id"],
                    kind=n["kind"],
                    attrs=dict(n["attrs"]),
                    inputs=list(n["inputs"]),
                    head=bool(n.get("head", False)),
                    pkey=n.get("pkey", ""),
                )
                for n in obj["nodes"]
            ]
        except (KeyError, TypeError) as err:
            raise FormatError(f"malformed architecture graph: {err}") from None
        for n in nodes:
            if n.kind not in NODE_KINDS:
                raise FormatError(f"unknown node kind {n.kind!r}")
        return ArchGraph(nodes)


def _eval_node(node: ArchNode, inputs: list[T.Tensor], params: dict[str, T.Tensor],
               custom_call=None) -> T.Tensor:
    k = node.kind
    try:
        if k == "embedding":
            return T.embedding_lookup(params[f"{node.pkey}.table"], inputs[0])
        if k == "linear":
            w = params[f"{node.pkey}.weight"]
            b = params[f"{node.pkey}.bias"]
            return T.bias_add(T.matmul(inputs[0], T.transpose(w)), b)
        if k == "rnnCell":
            return _eval_rnn(node, inputs[0], params)
        if k == "relu":
            return T.relu(inputs[0])
        if k == "tanh":
            return T.tanh_(inputs[0])
        if k == "meanPool":
            return T.mean_pool(inputs[0])
        if k == "flatten":
            return T.flatten(inputs[0])
        if k == "concat":
            return T.concat(inputs)
        if k == "sum":
            out = inputs[0]
            for t in inputs[1:]:
                out = T.add(out, t)
            return out
        if k == "mean":
            out = inputs[0]
            for t in inputs[1:]:
                out = T.add(out, t)
            return T.scale(out, 1.0 / len(inputs))
        if k == "custom":
            if custom_call is None:
                raise ShapeMismatch("custom node evaluated without a host callback")
            return custom_call(node.fn, inputs)
    except ShapeMismatch as err:
        raise ShapeMismatch(f"node {node.id} ({k}): {err.message}") from None
    raise FormatError(f"unknown node kind {k!r}")


def _eval_rnn(node: ArchNode, x: T.Tensor, params: dict[str, T.Tensor]) -> T.Tensor:
    # Elman cell unrolled over the window: h_t = tanh(Wx x_t + Wh h_{t-1} + b)
    wx = params[f"{node.pkey}.wx"]
    wh = params[f"{node.pkey}.wh"]
    b = params[f"{node.pkey}.bias"]
    window = node.attrs["window"]
    input_dim = node.attrs.get("input_dim", 1)
    if x.data.ndim != 2 or x.shape[1] != window * input_dim:
        raise ShapeMismatch(
            f"rnnCell expects input of width {window * input_dim}, got {x.shape}"
        )
    batch = x.shape[0]
    hidden = node.attrs["hidden"]
    h = T.Tensor(np.zeros((batch, hidden), dtype=np.float32))
    wx_t = T.transpose(wx)
    wh_t = T.transpose(wh)
    for t in range(window):
        xt = T.slice_cols(x, t * input_dim, (t + 1) * input_dim)
        pre = T.bias_add(T.add(T.matmul(xt, wx_t), T.matmul(h, wh_t)), b)
        h = T.tanh_(pre)
    return h


def forward_graph(graph: ArchGraph, params: dict[str, T.Tensor], x: T.Tensor,
                  custom_call=None) -> T.Tensor:
    values: dict[int, T.Tensor] = {INPUT: x}
    for node in graph.nodes:
        inputs = [values[i] for i in node.inputs]
        values[node.id] = _eval_node(node, inputs, params, custom_call)
    return values[graph.output.id]


# ------------------------------------------------------------------ builders


def chain(kinds_attrs: list[tuple[str, dict]], head_last: bool = True) -> ArchGraph:
    """Linear pipeline of nodes; the last weighted node is tagged head when
    head_last is set."""
    nodes = []
    for i, (kind, attrs) in enumerate(kinds_attrs):
        nodes.append(ArchNode(id=i, kind=kind, attrs=dict(attrs),
                              inputs=[i - 1 if i else INPUT]))
    if head_last:
        for node in reversed(nodes):
            if node.kind in WEIGHTED_KINDS:
                node.head = True
                break
    return ArchGraph(nodes)


def merge_sequential(graphs: list[ArchGraph]) -> tuple[ArchGraph, dict[str, str]]:
    """Concatenate graphs; returns the merged graph and an old->new param
    prefix map keyed by `pos/old_pkey`."""
    nodes: list[ArchNode] = []
    prefix_map: dict[str, str] = {}
    offset = 0
    prev_output = INPUT
    for pos, g in enumerate(graphs):
        id_map = {INPUT: prev_output}
        for node in g.nodes:
            new_id = offset
            offset += 1
            id_map[node.id] = new_id
            new_pkey = f"{pos}.{node.pkey}"
            prefix_map[f"{pos}/{node.pkey}"] = new_pkey
            nodes.append(
                ArchNode(
                    id=new_id,
                    kind=node.kind,
                    attrs=dict(node.attrs),
                    inputs=[id_map[i] for i in node.inputs],
                    head=False,
                    pkey=new_pkey,
                    fn=node.fn,
                )
            )
        prev_output = id_map[g.output.id]
    return ArchGraph(nodes), prefix_map


def merge_parallel(graphs: list[ArchGraph], combine: str) -> tuple[ArchGraph, dict[str, str]]:
    nodes: list[ArchNode] = []
    prefix_map: dict[str, str] = {}
    offset = 0
    outputs = []
    for pos, g in enumerate(graphs):
        id_map = {INPUT: INPUT}
        for node in g.nodes:
            new_id = offset
            offset += 1
            id_map[node.id] = new_id
            new_pkey = f"{pos}.{node.pkey}"
            prefix_map[f"{pos}/{node.pkey}"] = new_pkey
            nodes.append(
                ArchNode(
                    id=new_id,
                    kind=node.kind,
                    attrs=dict(node.attrs),
                    inputs=[id_map[i] for i in node.inputs],
                    head=False,
                    pkey=new_pkey,
                    fn=node.fn,
                )
            )
        outputs.append(id_map[g.output.id])
    nodes.append(ArchNode(id=offset, kind=combine, inputs=outputs))
    return ArchGraph(nodes), prefix_map
