"""First-class model values: composition, persistence, and instantiation
with transfer-style head replacement."""

from __future__ import annotations

import base64
import json
import os

import numpy as np

from . import tensor as T
from .arch import (
    ArchGraph,
    ArchNode,
    chain,
    forward_graph,
    merge_parallel,
    merge_sequential,
)
from .errors import FormatError, IoError, ShapeMismatch, UnsupportedScheme
from .prng import Prng, glorot_init

FORMAT_VERSION = 1


class Model:
    """Architecture graph + named parameter tensors + config + provenance.
    Mutable reference value: fine-tuning updates params in place."""

    def __init__(self, name: str, arch: ArchGraph, params: dict[str, T.Tensor],
                 config: dict | None = None, provenance: dict | None = None):
        self.name = name
        self.arch = arch
        self.params = params
        self.config = dict(config or {})
        self.provenance = dict(provenance or {"origin": "declared"})
        self.frozen: set[str] = set()
        self.version = 1
        for p in self.params.values():
            p.requires_grad = True

    def parameters(self) -> list[T.Tensor]:
        return [self.params[k] for k in sorted(self.params)]

    def parameter_names(self) -> list[str]:
        return sorted(self.params)

    def forward(self, x: T.Tensor, custom_call=None) -> T.Tensor:
        return forward_graph(self.arch, self.params, x, custom_call=custom_call)

    def clone(self) -> "Model":
        params = {}
        for k, v in self.params.items():
            t = T.Tensor(v.data.copy())
            t.requires_grad = True
            params[k] = t
        m = Model(self.name, self.arch, params, dict(self.config), dict(self.provenance))
        m.frozen = set(self.frozen)
        m.version = self.version
        return m

    def freeze(self, names: list[str]):
        unknown = [n for n in names if n not in self.params]
        if unknown:
            raise FormatError(f"cannot freeze unknown parameters {unknown}")
        self.frozen = set(names)
        for k, p in self.params.items():
            p.requires_grad = k not in self.frozen

    def unfreeze(self):
        self.frozen = set()
        for p in self.params.values():
            p.requires_grad = True

    def head_param_names(self) -> list[str]:
        head = self.arch.head_node()
        if head is None:
            return []
        prefix = head.pkey + "."
        return [k for k in self.params if k.startswith(prefix)]

    def output_width(self) -> int | None:
        node = self.arch.output
        if node.kind == "linear":
            return node.attrs["out"]
        if node.kind == "rnnCell":
            return node.attrs["hidden"]
        return None

    def __repr__(self):
        return f"<Model {self.name} params={len(self.params)}>"


# --------------------------------------------------------------- combinators


def _require_models(models, op):
    if not models:
        raise ShapeMismatch(f"{op} requires at least one model")


def sequential_model(*models: Model) -> Model:
    _require_models(models, "sequentialModel")
    graphs = [m.arch for m in models]
    merged, prefix_map = merge_sequential(graphs)
    params = _merged_params(models, prefix_map)
    name = "sequential(" + ",".join(m.name for m in models) + ")"
    return Model(name, merged, params, provenance={"origin": "composed"})


def parallel_model(*models: Model, combine: str = "concat") -> Model:
    _require_models(models, "parallelModel")
    if combine not in ("concat", "sum", "mean"):
        raise FormatError(f"parallelModel: unknown combine mode {combine!r}")
    merged, prefix_map = merge_parallel([m.arch for m in models], combine)
    params = _merged_params(models, prefix_map)
    name = "parallel(" + ",".join(m.name for m in models) + ")"
    return Model(name, merged, params, provenance={"origin": "composed"})


def custom_model(fn, *models: Model) -> Model:
    """Wrap submodels behind a host function invoked per forward with the
    submodel outputs."""
    _require_models(models, "customModel")
    merged, prefix_map = merge_parallel([m.arch for m in models], "custom")
    merged.nodes[-1].fn = fn
    params = _merged_params(models, prefix_map)
    name = "custom(" + ",".join(m.name for m in models) + ")"
    return Model(name, merged, params, provenance={"origin": "composed"})


def _merged_params(models, prefix_map) -> dict[str, T.Tensor]:
    params: dict[str, T.Tensor] = {}
    for pos, m in enumerate(models):
        for old_name, tensor in m.params.items():
            pkey, leaf = old_name.rsplit(".", 1)
            new_name = f"{prefix_map[f'{pos}/{pkey}']}.{leaf}"
            assert new_name not in params, f"duplicate parameter {new_name}"
            params[new_name] = tensor
    return params


# --------------------------------------------------------------- persistence


def encode_manifest(model: Model, version: int | None = None) -> bytes:
    """Canonical `.mmod` bytes: sorted keys, compact separators, base64
    little-endian f32 weights in row-major order."""
    weights = {}
    for name in sorted(model.params):
        t = model.params[name]
        weights[name] = {
            "data": base64.b64encode(
                np.ascontiguousarray(t.data.astype("<f4")).tobytes()
            ).decode("ascii"),
            "dtype": "f32",
            "shape": list(t.data.shape),
        }
    manifest = {
        "arch": model.arch.to_json(),
        "config": _jsonable_config(model.config),
        "format_version": FORMAT_VERSION,
        "name": model.name,
        "version": int(version if version is not None else model.version),
        "weights": weights,
    }
    return json.dumps(manifest, sort_keys=True, separators=(",", ":")).encode("utf-8")


def _jsonable_config(config: dict) -> dict:
    out = {}
    for k, v in config.items():
        if isinstance(v, (int, float, str, bool)) or v is None:
            out[k] = v
        elif isinstance(v, list) and all(isinstance(x, (int, float, str, bool)) for x in v):
            out[k] = v
        else:
            raise FormatError(f"config field {k!r} is not serializable")
    return out


def decode_manifest(raw: bytes) -> Model:
    try:
        obj = json.loads(raw.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as err:
        raise FormatError(f"invalid manifest: {err}") from None
    for key in ("arch", "config", "format_version", "name", "version", "weights"):
        if key not in obj:
            raise FormatError(f"manifest missing key {key!r}")
    if obj["format_version"] != FORMAT_VERSION:
        raise FormatError(f"unsupported format_version {obj['format_version']}")
    arch = ArchGraph.from_json(obj["arch"])
    params: dict[str, T.Tensor] = {}
    for name, w in obj["weights"].items():
        if w.get("dtype") != "f32":
            raise FormatError(f"weight {name!r}: unsupported dtype {w.get('dtype')!r}")
        buf = np.frombuffer(base64.b64decode(w["data"]), dtype="<f4")
        shape = tuple(w["shape"])
        expected_size = int(np.prod(shape)) if shape else 1
        if buf.size != expected_size:
            raise FormatError(f"weight {name!r}: data length does not match shape")
        t = T.Tensor(buf.reshape(shape).copy())
        t.requires_grad = True
        params[name] = t
    expected = {n for n, _ in arch.param_specs()}
    if expected != set(params):
        raise FormatError(
            f"weights do not match architecture: missing {sorted(expected - set(params))}, "
            f"extra {sorted(set(params) - expected)}"
        )
    model = Model(obj["name"], arch, params, obj["config"])
    model.version = int(obj["version"])
    return model


def reencode(raw: bytes) -> bytes:
    """decode-then-encode; byte-identical for canonical input."""
    model = decode_manifest(raw)
    return encode_manifest(model, version=model.version)


def save_model(model: Model, path: str):
    try:
        os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(encode_manifest(model))
    except OSError as err:
        raise IoError(f"cannot write {path}: {err}") from None


def load_model(path: str) -> Model:
    if not os.path.exists(path):
        raise IoError(f"no such file: {path}")
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as err:
        raise IoError(f"cannot read {path}: {err}") from None
    model = decode_manifest(raw)
    model.provenance = {"origin": "loaded", "path": path}
    return model


def load_model_from_url(url: str, registry=None) -> Model:
    if url.startswith("file://"):
        return load_model(url[len("file://"):])
    if url.startswith("mstore://"):
        if registry is None:
            raise IoError("mstore:// requires a model store")
        ref = url[len("mstore://"):]
        if "@v" in ref:
            name, _, ver = ref.rpartition("@v")
            try:
                version = int(ver)
            except ValueError:
                raise FormatError(f"bad version in {url!r}") from None
            return registry.resolve(name, version)
        return registry.resolve(ref)
    scheme = url.split("://", 1)[0] if "://" in url else "<none>"
    raise UnsupportedScheme(
        f"scheme {scheme!r} is not supported; only file:// and mstore:// are "
        f"built in (remote hubs need a host-provided loader hook)"
    )


# ------------------------------------------------------------- instantiation


def replace_head(model: Model, num_labels: int, run_seed: int):
    """Swap the head for a fresh Glorot-initialized linear layer; all other
    weights stay untouched."""
    head = model.arch.head_node()
    if head is None or head.kind != "linear":
        raise FormatError(f"model {model.name!r} has no replaceable linear head")
    new_nodes = []
    for node in model.arch.nodes:
        if node is head:
            node = ArchNode(
                id=node.id,
                kind="linear",
                attrs={"in": node.attrs["in"], "out": int(num_labels)},
                inputs=list(node.inputs),
                head=True,
                pkey=node.pkey,
            )
        new_nodes.append(node)
    model.arch = ArchGraph(new_nodes)
    rng = Prng(run_seed)
    head_graph = ArchGraph([n for n in new_nodes if n.head])
    for name, shape in head_graph.param_specs():
        t = T.Tensor(glorot_init(shape, rng))
        t.requires_grad = True
        model.params[name] = t


def instantiate_from_base(base: Model, name: str, config: dict, run_seed: int) -> Model:
    """Clone a base model under a new name, applying the merged config.
    A num_labels mismatch against the head width triggers head replacement."""
    inst = base.clone()
    inst.name = name
    inst.config = dict(config)
    inst.provenance = {
        "origin": "registry" if base.provenance.get("origin") == "registry" else "declared",
        "parent": base.name,
    }
    num_labels = config.get("num_labels")
    head = inst.arch.head_node()
    if num_labels is not None and head is not None and head.attrs.get("out") != num_labels:
        replace_head(inst, int(num_labels), run_seed)
    return inst


# ----------------------------------------------------------------- utilities


def layer_model(kind: str, attrs: dict, rng: Prng | None = None,
                name: str | None = None) -> Model:
    """Single-node model used by `forward` composition expressions."""
    graph = chain([(kind, attrs)], head_last=False)
    params = graph.init_params(rng if rng is not None else Prng(0))
    return Model(name or kind, graph, params, provenance={"origin": "declared"})
