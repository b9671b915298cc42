"""Columnar in-memory datasets: synthetic generators, file ingestion,
splitting, and batch iteration."""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ColumnMismatch, IoError, SchemaError
from .prng import Prng
from .tensor import Tensor

COLUMN_KINDS = {"int_seq", "f32_vec", "int_scalar", "f32_scalar"}


@dataclass(frozen=True)
class ColumnSpec:
    name: str
    kind: str  # one of COLUMN_KINDS
    width: int = 0  # L for int_seq, D for f32_vec, 0 for scalars


@dataclass
class Dataset:
    schema: list[ColumnSpec]
    columns: dict[str, np.ndarray]
    batch_size: int = 32
    shuffle_seed: int | None = None

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise SchemaError(f"columns have differing row counts: {sorted(lengths)}")

    @property
    def n(self) -> int:
        first = next(iter(self.columns.values()), None)
        return 0 if first is None else len(first)

    def column_names(self) -> list[str]:
        return [c.name for c in self.schema]

    def with_batch_size(self, batch_size: int) -> "Dataset":
        return replace(self, batch_size=int(batch_size))

    def select(self, idx: np.ndarray) -> "Dataset":
        return Dataset(
            self.schema,
            {name: buf[idx] for name, buf in self.columns.items()},
            batch_size=self.batch_size,
            shuffle_seed=self.shuffle_seed,
        )

    def feature_and_target(self) -> tuple[str, str | None]:
        """First non-target column is the input; `labels` or `target` is the target."""
        target = None
        for spec in self.schema:
            if spec.name in ("labels", "target"):
                target = spec.name
        for spec in self.schema:
            if spec.name != target:
                return spec.name, target
        raise ColumnMismatch("dataset has no feature column")


@dataclass
class Batch:
    fields: dict[str, Tensor]
    size: int

    def __getitem__(self, name: str) -> Tensor:
        return self.fields[name]


def _column_tensor(spec: ColumnSpec, buf: np.ndarray) -> Tensor:
    if spec.kind in ("int_seq", "int_scalar"):
        return Tensor(np.ascontiguousarray(buf), dtype=np.int64)
    return Tensor(np.ascontiguousarray(buf), dtype=np.float32)


def batches(ds: Dataset):
    """Yield ceil(n / batch_size) batches; the last may be short."""
    order = np.arange(ds.n)
    if ds.shuffle_seed is not None:
        order = order[_permutation(ds.n, ds.shuffle_seed)]
    bs = ds.batch_size
    for start in range(0, ds.n, bs):
        idx = order[start : start + bs]
        fields = {
            spec.name: _column_tensor(spec, ds.columns[spec.name][idx])
            for spec in ds.schema
        }
        yield Batch(fields, len(idx))


def _permutation(n: int, seed: int) -> np.ndarray:
    """Fisher-Yates driven by splitmix64(seed)."""
    rng = Prng(seed)
    perm = np.arange(n)
    for i in range(n - 1, 0, -1):
        j = rng.next_below(i + 1)
        perm[i], perm[j] = perm[j], perm[i]
    return perm


def train_test_split(ds: Dataset, ratio: float, seed: int = 0) -> tuple[Dataset, Dataset]:
    if not 0.0 < ratio < 1.0:
        raise SchemaError(f"split ratio must be in (0, 1), got {ratio}")
    perm = _permutation(ds.n, seed)
    k = math.ceil(ratio * ds.n)
    return ds.select(perm[:k]), ds.select(perm[k:])


# ------------------------------------------------------- synthetic generators


def synthetic_text(n: int, classes: int, seq_len: int, vocab: int, seed: int) -> Dataset:
    """Separable toy text: class c draws 80% of its tokens from a disjoint
    vocab slice. Pad id 0 is reserved; labels are assigned round-robin."""
    if classes < 2 or vocab < 2 * classes or n <= 0 or seq_len <= 0:
        raise SchemaError(
            f"syntheticText: need n>0, classes>=2, vocab>=2*classes "
            f"(got n={n}, classes={classes}, vocab={vocab})"
        )
    rng = Prng(seed)
    slice_width = (vocab - 1) // classes
    tokens = np.zeros((n, seq_len), dtype=np.int64)
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = i % classes
        labels[i] = c
        lo = 1 + c * slice_width
        for j in range(seq_len):
            if rng.next_f32() < np.float32(0.8):
                tokens[i, j] = lo + rng.next_below(slice_width)
            else:
                tokens[i, j] = 1 + rng.next_below(vocab - 1)
    schema = [ColumnSpec("text", "int_seq", seq_len), ColumnSpec("labels", "int_scalar")]
    return Dataset(schema, {"text": tokens, "labels": labels})


def synthetic_images(n: int, classes: int, seed: int) -> Dataset:
    """8x8 class templates plus uniform noise of amplitude 0.2, flattened."""
    if n <= 0 or classes < 2:
        raise SchemaError(f"syntheticImages: need n>0, classes>=2 (got n={n}, classes={classes})")
    rng = Prng(seed)
    templates = np.zeros((classes, 64), dtype=np.float32)
    for c in range(classes):
        for p in range(64):
            templates[c, p] = np.float32(1.0) if p % classes == c else np.float32(0.0)
    images = np.zeros((n, 64), dtype=np.float32)
    labels = np.zeros(n, dtype=np.int64)
    for i in range(n):
        c = i % classes
        labels[i] = c
        for p in range(64):
            images[i, p] = templates[c, p] + np.float32(0.2) * rng.next_f32()
    schema = [ColumnSpec("image", "f32_vec", 64), ColumnSpec("labels", "int_scalar")]
    return Dataset(schema, {"image": images, "labels": labels})


def synthetic_series(
    n: int, window: int, seed: int, noise_amplitude: float = 0.05
) -> Dataset:
    """Sliding windows over x_t = sin(0.1 t) + noise; each window predicts
    the next value."""
    if n <= 0 or window <= 0:
        raise SchemaError(f"syntheticSeries: need n>0, window>0 (got n={n}, window={window})")
    rng = Prng(seed)
    length = n + window
    series = np.zeros(length, dtype=np.float32)
    amp = np.float32(noise_amplitude)
    for t in range(length):
        noise = rng.next_f32() * np.float32(2.0) - np.float32(1.0)
        series[t] = np.float32(np.sin(0.1 * t)) + amp * noise
    windows = np.zeros((n, window), dtype=np.float32)
    targets = np.zeros(n, dtype=np.float32)
    for i in range(n):
        windows[i] = series[i : i + window]
        targets[i] = series[i + window]
    schema = [ColumnSpec("window", "f32_vec", window), ColumnSpec("target", "f32_scalar")]
    return Dataset(schema, {"window": windows, "target": targets})


# ------------------------------------------------------------- file ingestion


def _normalize_schema(schema) -> list[ColumnSpec]:
    specs: list[ColumnSpec] = []
    if isinstance(schema, dict):
        schema = list(schema.items())
    for entry in schema:
        if isinstance(entry, ColumnSpec):
            specs.append(entry)
            continue
        name, kind = entry[0], entry[1]
        width = int(entry[2]) if len(entry) > 2 else 0
        if kind not in COLUMN_KINDS:
            raise SchemaError(f"unknown column kind {kind!r} for column {name!r}")
        specs.append(ColumnSpec(name, kind, width))
    return specs


def load_csv(path: str, schema) -> Dataset:
    """RFC-4180 subset (no embedded newlines); a header row is required."""
    specs = _normalize_schema(schema)
    if not os.path.exists(path):
        raise IoError(f"no such file: {path}")
    by_name = {s.name: s for s in specs}
    rows: dict[str, list] = {s.name: [] for s in specs}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path}: missing header row") from None
        missing = [s.name for s in specs if s.name not in header]
        if missing:
            raise SchemaError(f"{path}: header lacks columns {missing}")
        positions = {name: header.index(name) for name in by_name}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaError(
                    f"{path}: row {lineno} has {len(row)} fields, expected {len(header)}"
                )
            for spec in specs:
                raw = row[positions[spec.name]]
                try:
                    value = int(raw) if spec.kind in ("int_scalar", "int_seq") else float(raw)
                except ValueError:
                    raise SchemaError(
                        f"{path}: row {lineno}: cannot parse {raw!r} as {spec.kind}"
                    ) from None
                rows[spec.name].append(value)
    columns = {
        s.name: np.asarray(
            rows[s.name], dtype=np.int64 if s.kind.startswith("int") else np.float32
        )
        for s in specs
    }
    return Dataset(specs, columns)


def load_jsonl(path: str) -> Dataset:
    """One JSON object per line; keys become columns. Numbers become
    scalars, arrays of numbers become vectors (int arrays become id
    sequences)."""
    if not os.path.exists(path):
        raise IoError(f"no such file: {path}")
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as err:
                raise SchemaError(f"{path}: line {lineno}: invalid JSON ({err.msg})") from None
            if not isinstance(obj, dict):
                raise SchemaError(f"{path}: line {lineno}: expected a JSON object")
            records.append((lineno, obj))
    if not records:
        raise SchemaError(f"{path}: no records")

    first = records[0][1]
    specs: list[ColumnSpec] = []
    for key in first:
        v = first[key]
        if isinstance(v, bool):
            raise SchemaError(f"{path}: column {key!r}: booleans are not supported")
        if isinstance(v, int):
            specs.append(ColumnSpec(key, "int_scalar"))
        elif isinstance(v, float):
            specs.append(ColumnSpec(key, "f32_scalar"))
        elif isinstance(v, list):
            if all(isinstance(x, int) and not isinstance(x, bool) for x in v):
                specs.append(ColumnSpec(key, "int_seq", len(v)))
            elif all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v):
                specs.append(ColumnSpec(key, "f32_vec", len(v)))
            else:
                raise SchemaError(f"{path}: column {key!r}: arrays must hold numbers")
        else:
            raise SchemaError(f"{path}: column {key!r}: values must be numbers or arrays")

    rows: dict[str, list] = {s.name: [] for s in specs}
    for lineno, obj in records:
        if set(obj) != set(rows):
            raise SchemaError(f"{path}: line {lineno}: keys differ from first record")
        for spec in specs:
            v = obj[spec.name]
            if spec.width and (not isinstance(v, list) or len(v) != spec.width):
                raise SchemaError(
                    f"{path}: line {lineno}: column {spec.name!r} expects "
                    f"an array of length {spec.width}"
                )
            rows[spec.name].append(v)
    columns = {
        s.name: np.asarray(
            rows[s.name], dtype=np.int64 if s.kind.startswith("int") else np.float32
        )
        for s in specs
    }
    return Dataset(specs, columns)


def tokenize(text: str, vocab: int = 256) -> list[int]:
    """Byte-level tokenizer; id 0 stays reserved for padding."""
    return [1 + (b % (vocab - 1)) for b in text.encode("utf-8")]
