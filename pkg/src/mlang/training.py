"""Fine-tuning, evaluation metrics, and hyperparameter search."""

from __future__ import annotations

import dataclasses
import itertools
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import tensor as T
from .data import Dataset, batches, train_test_split
from .errors import ColumnMismatch, EmptySpace, FormatError, UnknownMetric
from .models import Model
from .optim import AdamState, adam_step, sgd_step, zero_grad
from .prng import derive_seed

CLASSIFICATION_METRICS = {"accuracy", "f1"}
REGRESSION_METRICS = {"mse", "r2"}
VALID_METRICS = CLASSIFICATION_METRICS | REGRESSION_METRICS

TUNABLE_OPTIONS = {"epochs", "lr", "batch_size", "optimizer", "seed"}


def _split_columns(ds: Dataset) -> tuple[str, str, bool]:
    feature, target = ds.feature_and_target()
    if target is None:
        raise ColumnMismatch(
            f"dataset needs a `labels` or `target` column; has {ds.column_names()}"
        )
    spec = next(s for s in ds.schema if s.name == target)
    return feature, target, spec.kind == "int_scalar"


def fine_tune(
    model: Model,
    ds: Dataset,
    epochs: int = 3,
    lr: float = 1e-3,
    batch_size: int = 32,
    optimizer: str = "adam",
    freeze: list[str] | None = None,
    seed: int = 0,
    custom_call=None,
) -> dict:
    """Train in place; returns a report with the per-epoch mean loss history."""
    if epochs < 0:
        raise FormatError(f"epochs must be >= 0, got {epochs}")
    if optimizer not in ("adam", "sgd"):
        raise FormatError(f"unknown optimizer {optimizer!r}")
    feature, target, classification = _split_columns(ds)
    ds = ds.with_batch_size(int(batch_size))

    model.freeze(list(freeze or []))
    try:
        params = [model.params[k] for k in sorted(model.params) if k not in model.frozen]
        state = AdamState(params, lr) if optimizer == "adam" else None
        history: list[float] = []
        for epoch in range(int(epochs)):
            epoch_ds = dataclasses.replace(ds, shuffle_seed=derive_seed(seed, epoch))
            losses: list[float] = []
            for batch in batches(epoch_ds):
                zero_grad(params)
                logits = model.forward(batch[feature], custom_call=custom_call)
                loss = _loss(logits, batch[target], classification)
                T.backward(loss)
                if optimizer == "adam":
                    adam_step(state, params)
                else:
                    sgd_step(params, lr)
                losses.append(loss.item())
            history.append(float(np.mean(np.asarray(losses, dtype=np.float64))))
    finally:
        model.unfreeze()
    return {"history": history}


def _loss(output: T.Tensor, target: T.Tensor, classification: bool) -> T.Tensor:
    if classification:
        return T.cross_entropy(output, target)
    pred = output
    tgt = target
    if pred.data.ndim == 2 and pred.shape[1] == 1 and tgt.data.ndim == 1:
        tgt = T.Tensor(tgt.data.reshape(-1, 1))
    return T.mse(pred, tgt)


def _predictions(model: Model, ds: Dataset, custom_call=None):
    feature, target, classification = _split_columns(ds)
    outs = []
    tgts = []
    with T.no_grad():
        for batch in batches(ds):
            outs.append(model.forward(batch[feature], custom_call=custom_call).data)
            tgts.append(batch[target].data)
    return np.concatenate(outs), np.concatenate(tgts), classification


def accuracy(preds: np.ndarray, labels: np.ndarray) -> float:
    return float(np.mean(preds == labels))


def macro_f1(preds: np.ndarray, labels: np.ndarray, num_classes: int) -> float:
    """Unweighted mean of per-class F1; classes absent from both sides
    score 0 and still count."""
    scores = []
    for c in range(num_classes):
        tp = int(np.sum((preds == c) & (labels == c)))
        fp = int(np.sum((preds == c) & (labels != c)))
        fn = int(np.sum((preds != c) & (labels == c)))
        denom = 2 * tp + fp + fn
        scores.append(0.0 if denom == 0 else 2 * tp / denom)
    return float(np.mean(scores))


def mse_metric(preds: np.ndarray, targets: np.ndarray) -> float:
    return float(np.mean((preds.reshape(-1) - targets.reshape(-1)) ** 2))


def r2_metric(preds: np.ndarray, targets: np.ndarray) -> float:
    t = targets.reshape(-1).astype(np.float64)
    p = preds.reshape(-1).astype(np.float64)
    ss_res = float(np.sum((t - p) ** 2))
    ss_tot = float(np.sum((t - t.mean()) ** 2))
    if ss_tot == 0.0:
        return 0.0
    return 1.0 - ss_res / ss_tot


def evaluate(model: Model, ds: Dataset, metrics: list[str] | None = None,
             custom_call=None) -> dict:
    metrics = list(metrics or ["accuracy"])
    for m in metrics:
        if m not in VALID_METRICS:
            raise UnknownMetric(f"unknown metric {m!r}; valid: {sorted(VALID_METRICS)}")
    outputs, targets, classification = _predictions(model, ds, custom_call=custom_call)
    report: dict[str, float] = {}
    for m in metrics:
        if m in CLASSIFICATION_METRICS:
            if not classification:
                raise ColumnMismatch(f"metric {m!r} requires integer labels")
            preds = np.argmax(outputs, axis=1)  # argmax ties go to the lowest index
            if m == "accuracy":
                report[m] = accuracy(preds, targets)
            else:
                report[m] = macro_f1(preds, targets, outputs.shape[1])
        else:
            if m == "mse":
                report[m] = mse_metric(outputs, targets)
            else:
                report[m] = r2_metric(outputs, targets)
    return report


# ------------------------------------------------------- hyperparameter search


def define_space(candidates: dict) -> dict[str, list]:
    space = {}
    for name, values in candidates.items():
        if name not in TUNABLE_OPTIONS:
            raise FormatError(
                f"unknown hyperparameter {name!r}; tunable: {sorted(TUNABLE_OPTIONS)}"
            )
        if not isinstance(values, list) or not values:
            raise EmptySpace(f"hyperparameter {name!r} needs a non-empty candidate list")
        space[name] = list(values)
    if not space:
        raise EmptySpace("hyperparameter space is empty")
    return space


def enumerate_grid(space: dict[str, list]) -> list[dict]:
    names = sorted(space)
    return [dict(zip(names, combo)) for combo in itertools.product(*(space[n] for n in names))]


def sample_random(space: dict[str, list], trials: int, seed: int) -> list[dict]:
    from .prng import Prng

    rng = Prng(derive_seed(seed, 0x5A3C))
    names = sorted(space)
    configs = []
    for _ in range(trials):
        configs.append({n: space[n][rng.next_below(len(space[n]))] for n in names})
    return configs


def _run_trial(model: Model, train_ds: Dataset, val_ds: Dataset, config: dict,
               metric: str, trial_seed: int, custom_call=None) -> float:
    trial_model = model.clone()
    options = dict(config)
    options.setdefault("seed", trial_seed)
    fine_tune(trial_model, train_ds, custom_call=custom_call, **options)
    report = evaluate(trial_model, val_ds, [metric], custom_call=custom_call)
    return report[metric]


def auto_tune(
    model: Model,
    ds: Dataset,
    space: dict[str, list],
    strategy: str = "grid",
    trials: int = 0,
    metric: str = "accuracy",
    val_split: float = 0.2,
    seed: int = 0,
    concurrent: bool = False,
    custom_call=None,
) -> dict:
    """Search the space; every trial starts from a private clone of the
    original weights, so results do not depend on trial order."""
    if metric not in VALID_METRICS:
        raise UnknownMetric(f"unknown metric {metric!r}")
    if not space:
        raise EmptySpace("hyperparameter space is empty")
    if strategy == "grid":
        configs = enumerate_grid(space)
    elif strategy == "random":
        if trials < 1:
            raise FormatError("random strategy requires trials >= 1")
        configs = sample_random(space, trials, seed)
    else:
        raise FormatError(f"unknown search strategy {strategy!r}")

    train_ds, val_ds = train_test_split(ds, 1.0 - val_split, seed)
    seeds = [derive_seed(seed, i) for i in range(len(configs))]

    def run(i: int) -> float:
        return _run_trial(model, train_ds, val_ds, configs[i], metric, seeds[i],
                          custom_call=custom_call)

    if concurrent and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=min(4, len(configs))) as pool:
            scores = list(pool.map(run, range(len(configs))))
    else:
        scores = [run(i) for i in range(len(configs))]

    minimize = metric == "mse"
    best_idx = 0
    for i in range(1, len(scores)):
        if (scores[i] < scores[best_idx]) if minimize else (scores[i] > scores[best_idx]):
            best_idx = i

    best_config = configs[best_idx]
    best_model = model.clone()
    options = dict(best_config)
    options.setdefault("seed", seeds[best_idx])
    fine_tune(best_model, train_ds, custom_call=custom_call, **options)
    return {
        "best_config": best_config,
        "best_score": scores[best_idx],
        "model": best_model,
        "scores": scores,
    }
