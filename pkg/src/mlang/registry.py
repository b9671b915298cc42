"""Versioned local model store.

Layout: <store>/models/<name>/<version>.mmod plus <store>/index.json
mapping name -> latest version. Seeding writes the desk-scale stand-ins
for the pretrained zoo."""

from __future__ import annotations

import json
import os

from .arch import ArchGraph, ArchNode, INPUT
from .errors import IoError, UnknownModel, UnknownVersion
from .models import Model, decode_manifest, encode_manifest
from .prng import Prng

ZOO_SEED = 42


def _zoo_graphs() -> dict[str, ArchGraph]:
    bert = ArchGraph(
        [
            ArchNode(id=0, kind="embedding", attrs={"vocab": 256, "dim": 32}, inputs=[INPUT]),
            ArchNode(id=1, kind="meanPool", inputs=[0]),
            ArchNode(id=2, kind="linear", attrs={"in": 32, "out": 32}, inputs=[1]),
            ArchNode(id=3, kind="tanh", inputs=[2]),
            ArchNode(id=4, kind="linear", attrs={"in": 32, "out": 2}, inputs=[3], head=True),
        ]
    )
    resnet = ArchGraph(
        [
            ArchNode(id=0, kind="flatten", inputs=[INPUT]),
            ArchNode(id=1, kind="linear", attrs={"in": 64, "out": 32}, inputs=[0]),
            ArchNode(id=2, kind="relu", inputs=[1]),
            ArchNode(id=3, kind="linear", attrs={"in": 32, "out": 2}, inputs=[2], head=True),
        ]
    )
    lstm = ArchGraph(
        [
            ArchNode(
                id=0,
                kind="rnnCell",
                attrs={"hidden": 16, "window": 8, "input_dim": 1},
                inputs=[INPUT],
            ),
            ArchNode(id=1, kind="linear", attrs={"in": 16, "out": 1}, inputs=[0], head=True),
        ]
    )
    return {"bert-base-uncased": bert, "resnet50": resnet, "lstm": lstm}


class Registry:
    def __init__(self, store_dir: str):
        self.store_dir = store_dir

    def _models_dir(self) -> str:
        return os.path.join(self.store_dir, "models")

    def _index_path(self) -> str:
        return os.path.join(self.store_dir, "index.json")

    def _read_index(self) -> dict[str, int]:
        path = self._index_path()
        if not os.path.exists(path):
            return {}
        try:
            with open(path, encoding="utf-8") as fh:
                return {str(k): int(v) for k, v in json.load(fh).items()}
        except (OSError, json.JSONDecodeError, ValueError) as err:
            raise IoError(f"corrupt store index {path}: {err}") from None

    def _write_index(self, index: dict[str, int]):
        os.makedirs(self.store_dir, exist_ok=True)
        raw = json.dumps(index, sort_keys=True, separators=(",", ":")).encode("utf-8")
        path = self._index_path()
        if os.path.exists(path):
            with open(path, "rb") as fh:
                if fh.read() == raw:
                    return
        with open(path, "wb") as fh:
            fh.write(raw)

    def list_models(self) -> list[tuple[str, int]]:
        return sorted(self._read_index().items())

    def seed(self):
        """Populate the zoo; a second run leaves the store bytes unchanged."""
        index = self._read_index()
        for name, graph in sorted(_zoo_graphs().items()):
            params = graph.init_params(Prng(ZOO_SEED))
            model = Model(name, graph, params, provenance={"origin": "registry"})
            raw = encode_manifest(model, version=1)
            path = os.path.join(self._models_dir(), name, "1.mmod")
            if not (os.path.exists(path) and open(path, "rb").read() == raw):
                os.makedirs(os.path.dirname(path), exist_ok=True)
                with open(path, "wb") as fh:
                    fh.write(raw)
            index.setdefault(name, 1)
        self._write_index(index)

    def resolve(self, name: str, version: int | None = None) -> Model:
        index = self._read_index()
        if name not in index:
            raise UnknownModel(f"no model named {name!r} in store {self.store_dir}")
        if version is None:
            version = index[name]
        path = os.path.join(self._models_dir(), name, f"{version}.mmod")
        if not os.path.exists(path):
            raise UnknownVersion(f"model {name!r} has no version {version}")
        with open(path, "rb") as fh:
            model = decode_manifest(fh.read())
        model.provenance = {"origin": "registry", "name": name, "version": version}
        return model

    def manifest_bytes(self, name: str, version: int | None = None) -> bytes:
        index = self._read_index()
        if name not in index:
            raise UnknownModel(f"no model named {name!r} in store {self.store_dir}")
        if version is None:
            version = index[name]
        path = os.path.join(self._models_dir(), name, f"{version}.mmod")
        if not os.path.exists(path):
            raise UnknownVersion(f"model {name!r} has no version {version}")
        with open(path, "rb") as fh:
            return fh.read()

    def save(self, model: Model, name: str | None = None) -> int:
        """Store a model under `name`; an existing name gets version+1."""
        name = name or model.name
        index = self._read_index()
        version = index.get(name, 0) + 1
        raw = encode_manifest(model, version=version)
        path = os.path.join(self._models_dir(), name, f"{version}.mmod")
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "wb") as fh:
            fh.write(raw)
        index[name] = version
        self._write_index(index)
        return version
