"""Losses, Adam updates, mini-batch epochs, early stopping and layer-freeze pre-training."""
import itertools
import logging
import math
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

import analysis
import config
from dataset import (Dataset, Split, apply_standardization, build_targets, compute_centroids,
                     standardize, stratified_kfold, subset, validation_split)
from errors import ContractViolation
from network import ModelParams, NetworkSpec, backward, encode, forward, glorot_uniform, init_params
from numerics import Matrix, SeededRng, ensure_finite

logger = logging.getLogger(__name__)

MODES = ('centroid_encoder', 'autoencoder')

# Sub-stream indices drawn from the run seed.
_SPLIT_STREAM, _INIT_STREAM, _SHUFFLE_STREAM, _REFIT_STREAM, _PRETRAIN_STREAM = range(5)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization and protocol settings for one training run."""
    learning_rate: float = 0.001
    batch_size: int = 16
    weight_decay: float = 2e-5
    max_epochs: int = config.MAX_EPOCHS
    patience: int = config.PATIENCE
    seed: int = config.SEED
    mode: str = 'centroid_encoder'
    k: int = config.KNN_K
    validation_fraction: float = config.VALIDATION_FRACTION
    pretrain_epochs: int = config.PRETRAIN_STAGE_EPOCHS

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ContractViolation(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.batch_size < 1:
            raise ContractViolation(f"batch_size must be >= 1, got {self.batch_size}")
        if self.weight_decay < 0:
            raise ContractViolation(f"weight_decay must be >= 0, got {self.weight_decay}")
        if self.max_epochs < 1:
            raise ContractViolation(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.patience < 0:
            raise ContractViolation(f"patience must be >= 0, got {self.patience}")
        if self.mode not in MODES:
            raise ContractViolation(f"mode must be one of {MODES}, got '{self.mode}'")


@dataclass
class AdamState:
    """First and second moment accumulators mirroring ModelParams."""
    m_weights: List[Matrix]
    v_weights: List[Matrix]
    m_biases: List[np.ndarray]
    v_biases: List[np.ndarray]
    t: int = 0
    beta1: float = config.ADAM_BETA1
    beta2: float = config.ADAM_BETA2
    epsilon: float = config.ADAM_EPSILON

    @classmethod
    def zeros(cls, params: ModelParams) -> 'AdamState':
        return cls([np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(w) for w in params.weights],
                   [np.zeros_like(b) for b in params.biases],
                   [np.zeros_like(b) for b in params.biases])


@dataclass
class FitReport:
    """Training history of one fit call.

    Attributes:
        losses: Training loss after each search epoch
        validation_errors: Validation k-NN error (%) after each search epoch
        stopped_epoch: Number of search epochs run
        best_epoch: Epoch with the lowest validation error
        refit_losses: Loss per epoch of the final run on train + validation rows
        seconds: Wall-clock duration
    """
    losses: List[float] = field(default_factory=list)
    validation_errors: List[float] = field(default_factory=list)
    stopped_epoch: int = 0
    best_epoch: int = 0
    refit_losses: List[float] = field(default_factory=list)
    seconds: float = 0.0


def _check_same_shape(outputs: Matrix, targets: Matrix):
    if outputs.shape != targets.shape:
        raise ContractViolation(f"outputs {outputs.shape} and targets {targets.shape} differ in shape")
    if outputs.shape[0] < 1:
        raise ContractViolation("loss needs at least one row")


def ce_loss(outputs: Matrix, targets: Matrix) -> float:
    """Distortion error (1/2N) * sum_i ||targets_i - outputs_i||^2."""
    _check_same_shape(outputs, targets)
    residual = targets - outputs
    return float(np.sum(residual * residual) / (2.0 * outputs.shape[0]))


def output_delta(outputs: Matrix, targets: Matrix) -> Matrix:
    """Gradient of ce_loss with respect to the outputs: (outputs - targets) / N."""
    _check_same_shape(outputs, targets)
    return (outputs - targets) / outputs.shape[0]


def add_weight_decay(params: ModelParams, weight_grads: List[Matrix], weight_decay: float) -> List[Matrix]:
    """Add the L2 term weight_decay * W to unfrozen weight gradients; biases are not decayed."""
    if weight_decay == 0:
        return weight_grads
    return [g if frozen else g + weight_decay * w
            for g, w, frozen in zip(weight_grads, params.weights, params.frozen)]


def adam_step(params: ModelParams, grads: Tuple[List[Matrix], List[np.ndarray]],
              state: AdamState, cfg: TrainConfig) -> Tuple[ModelParams, AdamState]:
    """Bias-corrected Adam update, in place. Frozen layers are left untouched.

    Args:
        params: Parameters to update
        grads: (weight gradients, bias gradients), weight decay already added
        state: Moment accumulators
        cfg: Supplies the learning rate

    Returns:
        Tuple of (params, state), the same objects updated
    """
    weight_grads, bias_grads = grads
    state.t += 1
    bc1 = 1.0 - state.beta1 ** state.t
    bc2 = 1.0 - state.beta2 ** state.t
    step_size = cfg.learning_rate / bc1

    for l in range(len(params.weights)):
        if params.frozen[l]:
            continue
        for value, g, m, v in ((params.weights[l], weight_grads[l], state.m_weights[l], state.v_weights[l]),
                               (params.biases[l], bias_grads[l], state.m_biases[l], state.v_biases[l])):
            m *= state.beta1
            m += (1.0 - state.beta1) * g
            v *= state.beta2
            v += (1.0 - state.beta2) * (g * g)
            value -= step_size * m / (np.sqrt(v / bc2) + state.epsilon)
    return params, state


def batch_gradients(params: ModelParams, spec: NetworkSpec, inputs: Matrix,
                    targets: Matrix) -> Tuple[List[Matrix], List[np.ndarray]]:
    """Gradient of ce_loss over one batch (without weight decay)."""
    trace = forward(params, spec, inputs)
    return backward(params, spec, trace, output_delta(trace.output, targets))


def train_epoch(params: ModelParams, state: AdamState, inputs: Matrix, targets: Matrix,
                spec: NetworkSpec, cfg: TrainConfig, rng: SeededRng) -> Tuple[ModelParams, AdamState, float]:
    """One pass over shuffled rows in mini-batches of cfg.batch_size.

    The last batch may be short. Returns the loss over the full set after
    the epoch.
    """
    if inputs.shape[0] != targets.shape[0]:
        raise ContractViolation(f"{inputs.shape[0]} inputs but {targets.shape[0]} targets")
    order = rng.permutation(inputs.shape[0])
    for start in range(0, inputs.shape[0], cfg.batch_size):
        rows = order[start:start + cfg.batch_size]
        weight_grads, bias_grads = batch_gradients(params, spec, inputs[rows], targets[rows])
        weight_grads = add_weight_decay(params, weight_grads, cfg.weight_decay)
        adam_step(params, (weight_grads, bias_grads), state, cfg)

    loss = ce_loss(forward(params, spec, inputs).output, targets)
    ensure_finite(np.asarray(loss), 'training loss')
    return params, state, loss


def updates_per_epoch(n_samples: int, batch_size: int) -> int:
    """Number of Adam steps one epoch takes."""
    return -(-n_samples // batch_size)


def make_targets(ds: Dataset, mode: str) -> Matrix:
    """Class-centroid targets, or the inputs themselves in autoencoder mode."""
    if mode == 'autoencoder':
        return build_targets(ds, None)
    return build_targets(ds, compute_centroids(ds))


def validation_error(params: ModelParams, spec: NetworkSpec, reference: Dataset,
                     query: Dataset, k: int) -> float:
    """k-NN error (%) of `query` against `reference` in embedding space."""
    train_embedding = analysis.Embedding(encode(params, spec, reference.x), reference.labels)
    predicted = analysis.knn_predict(train_embedding, encode(params, spec, query.x), min(k, reference.n_samples))
    return analysis.prediction_error(query.labels, predicted)


def run_epochs(params: ModelParams, spec: NetworkSpec, inputs: Matrix, targets: Matrix,
                cfg: TrainConfig, epochs: int, rng: SeededRng, label: str) -> List[float]:
    state = AdamState.zeros(params)
    losses = []
    for epoch in range(1, epochs + 1):
        _, _, loss = train_epoch(params, state, inputs, targets, spec, cfg, rng)
        losses.append(loss)
        logger.debug("%s epoch %d: loss %.6f", label, epoch, loss)
    return losses


def fit(ds: Dataset, spec: NetworkSpec, cfg: TrainConfig,
        initial: Optional[ModelParams] = None) -> Tuple[ModelParams, FitReport]:
    """Train with validation-based early stopping, then refit on all rows.

    A stratified cfg.validation_fraction of `ds` is held out. After each
    epoch the k-NN error of the validation rows against the training rows
    is measured in embedding space. Training stops once cfg.patience epochs
    pass without improvement. The network is then retrained from the same
    starting point on all rows of `ds` for the best epoch count. The refit
    does not continue from the stopped model: its epochs are counted from
    the start, so the returned model has seen exactly best_epoch epochs.

    Args:
        ds: Training data
        spec: Network topology; its input width must equal ds.n_features
        cfg: Optimization and protocol settings
        initial: Starting parameters (e.g. from pretrain_layer_freeze);
            a fresh seeded initialization when omitted

    Returns:
        Tuple of (final parameters, FitReport)
    """
    started = time.perf_counter()
    if spec.n_inputs != ds.n_features:
        raise ContractViolation(f"network input width {spec.n_inputs} != {ds.n_features} features")
    root = SeededRng(cfg.seed)
    start = initial.copy() if initial is not None else init_params(spec, root.spawn(_INIT_STREAM))
    start.frozen = [False] * spec.n_layers

    split = validation_split(ds, np.arange(ds.n_samples), cfg.validation_fraction, root.spawn(_SPLIT_STREAM))
    train_part = subset(ds, split.train_indices)
    validation_part = subset(ds, split.validation_indices)
    targets = make_targets(train_part, cfg.mode)

    report = FitReport()
    params = start.copy()
    state = AdamState.zeros(params)
    shuffle = root.spawn(_SHUFFLE_STREAM)
    best_error, since_best = math.inf, 0
    for epoch in range(1, cfg.max_epochs + 1):
        _, _, loss = train_epoch(params, state, train_part.x, targets, spec, cfg, shuffle)
        error = validation_error(params, spec, train_part, validation_part, cfg.k)
        report.losses.append(loss)
        report.validation_errors.append(error)
        logger.info("Epoch %d: loss %.6f, validation error %.2f%%", epoch, loss, error)
        if error < best_error:
            best_error, since_best, report.best_epoch = error, 0, epoch
        else:
            since_best += 1
            if since_best > cfg.patience:
                break
    report.stopped_epoch = len(report.losses)

    refit_epochs = min(max(report.best_epoch, 1), cfg.max_epochs)
    logger.info("Best validation error %.2f%% at epoch %d; refitting on %d rows for %d epochs",
                best_error, report.best_epoch, ds.n_samples, refit_epochs)
    params = start.copy()
    report.refit_losses = run_epochs(params, spec, ds.x, make_targets(ds, cfg.mode), cfg,
                                      refit_epochs, root.spawn(_REFIT_STREAM), 'Refit')
    report.seconds = time.perf_counter() - started
    return params, report


def stage_layers(spec: NetworkSpec, stage: int) -> List[int]:
    """Indices of the full network's weight layers present in pre-training stage `stage`."""
    last = spec.n_layers - 1
    return list(range(stage)) + list(range(last - stage + 1, last + 1))


def stage_spec(spec: NetworkSpec, stage: int) -> NetworkSpec:
    """Sub-network with encoder layers 1..stage and their mirrored decoder layers."""
    widths = spec.layer_widths
    sub_widths = widths[:stage + 1] + widths[len(widths) - stage:]
    activations = tuple(spec.activations[l] for l in stage_layers(spec, stage))
    return NetworkSpec(sub_widths, activations, stage)


def pretrain_layer_freeze(ds: Dataset, spec: NetworkSpec, cfg: TrainConfig,
                          stage_epochs: Optional[int] = None) -> ModelParams:
    """Pre-train hidden layer pairs one at a time, freezing earlier pairs.

    Stage k trains the network n -> h_1 .. h_k .. h_1 -> n on the original
    (x, target) pairs. The layer pair added at stage k starts fresh; pairs
    from earlier stages are frozen. The last stage adds the bottleneck pair,
    so it trains the full network with every hidden pair frozen. Afterwards
    every layer is unfrozen for fine-tuning with fit. A network without
    hidden layers before the bottleneck gets its plain initialization.

    Args:
        ds: Training data
        spec: Full network topology
        cfg: Optimization settings; cfg.mode picks the targets
        stage_epochs: Epochs per stage (cfg.pretrain_epochs when omitted)

    Returns:
        Unfrozen parameters for the full network
    """
    stage_epochs = cfg.pretrain_epochs if stage_epochs is None else stage_epochs
    root = SeededRng(cfg.seed)
    params = init_params(spec, root.spawn(_INIT_STREAM))
    n_stages = spec.bottleneck_index
    if n_stages < 2:
        logger.info("No hidden layers before the bottleneck; skipping pre-training")
        return params

    targets = make_targets(ds, cfg.mode)
    stages = root.spawn(_PRETRAIN_STREAM)
    previous: List[int] = []
    for stage in range(1, n_stages + 1):
        sub_spec = stage_spec(spec, stage)
        layers = stage_layers(spec, stage)
        stage_rng = stages.spawn(stage)
        sub = ModelParams([], [], [])
        for l in layers:
            if l in previous:
                sub.weights.append(params.weights[l])
                sub.biases.append(params.biases[l])
                sub.frozen.append(True)
            else:
                fan_in, fan_out = spec.layer_widths[l], spec.layer_widths[l + 1]
                sub.weights.append(glorot_uniform(fan_in, fan_out, stage_rng))
                sub.biases.append(np.zeros(fan_out))
                sub.frozen.append(False)
        logger.info("Pre-training stage %d/%d: widths %s", stage, n_stages, sub_spec.layer_widths)
        losses = run_epochs(sub, sub_spec, ds.x, targets, cfg, stage_epochs, stage_rng.spawn(0),
                             f"Stage {stage}")
        if losses:
            logger.info("Stage %d final loss %.6f", stage, losses[-1])
        for l, w, b in zip(layers, sub.weights, sub.biases):
            params.weights[l] = w
            params.biases[l] = b
        previous = layers

    params.frozen = [False] * spec.n_layers
    return params


def evaluate_split(ds: Dataset, split: Split, spec: NetworkSpec, cfg: TrainConfig,
                   zscore: bool = False, pretrain: bool = False) -> 'analysis.EvalReport':
    """Train on split.train_indices and report k-NN error on split.test_indices.

    Args:
        ds: Full dataset
        split: Rows to train on and rows to test on
        spec: Network topology
        cfg: Training settings
        zscore: Standardize features with training-row statistics first
        pretrain: Run layer-freeze pre-training before fitting

    Returns:
        EvalReport for the test rows
    """
    train, test = subset(ds, split.train_indices), subset(ds, split.test_indices)
    if zscore:
        train, mean, std = standardize(train, np.arange(train.n_samples))
        test = apply_standardization(test, mean, std)
    initial = pretrain_layer_freeze(train, spec, cfg) if pretrain else None
    params, _ = fit(train, spec, cfg, initial)
    reference = analysis.Embedding(encode(params, spec, train.x), train.labels)
    query = analysis.Embedding(encode(params, spec, test.x), test.labels)
    return analysis.evaluate(reference, query, cfg.k)


def cross_validate(ds: Dataset, spec: NetworkSpec, cfg: TrainConfig, folds: int,
                   zscore: bool = False) -> List[float]:
    """Stratified k-fold k-NN error (%) of every fold."""
    fold_rng = SeededRng(cfg.seed).spawn(_SPLIT_STREAM)
    errors = []
    for index, split in enumerate(stratified_kfold(ds, folds, fold_rng)):
        report = evaluate_split(ds, split, spec, replace(cfg, seed=fold_rng.spawn(index).seed), zscore)
        logger.info("Fold %d/%d: error %.2f%%", index + 1, folds, report.error_percent)
        errors.append(report.error_percent)
    return errors


def grid_search(ds: Dataset, spec: NetworkSpec, cfg: TrainConfig, grids: Dict[str, Sequence],
                folds: int, zscore: bool = False) -> List[Dict[str, float]]:
    """Mean k-fold error for every (learning_rate, batch_size, weight_decay) combination.

    Args:
        grids: Candidate values keyed by 'learning_rate', 'batch_size' and
            'weight_decay'; missing keys use cfg's value

    Returns:
        One row per combination, sorted by mean error (ties keep grid order)
    """
    axes = [grids.get(name) or (getattr(cfg, name),)
            for name in ('learning_rate', 'batch_size', 'weight_decay')]
    rows = []
    for lr, batch, decay in itertools.product(*axes):
        trial = replace(cfg, learning_rate=float(lr), batch_size=int(batch), weight_decay=float(decay))
        errors = cross_validate(ds, spec, trial, folds, zscore)
        rows.append({'learning_rate': float(lr), 'batch_size': int(batch), 'weight_decay': float(decay),
                     'mean_error': float(np.mean(errors)), 'std_error': float(np.std(errors))})
        logger.info("lr=%g batch=%d decay=%g: %.2f%% +/- %.2f", lr, batch, decay,
                    rows[-1]['mean_error'], rows[-1]['std_error'])
    return sorted(rows, key=lambda row: row['mean_error'])


def write_fit_log(report: FitReport, path: str):
    """Tab-separated training log: search epochs, then refit epochs."""
    with open(path, 'w') as f:
        f.write('epoch\tloss\tvalidation_error\n')
        for epoch, (loss, error) in enumerate(zip(report.losses, report.validation_errors), start=1):
            f.write(f'{epoch}\t{loss:.10g}\t{error:.4f}\n')
        f.write(f'# best_epoch\t{report.best_epoch}\n')
        f.write('refit_epoch\tloss\n')
        for epoch, loss in enumerate(report.refit_losses, start=1):
            f.write(f'{epoch}\t{loss:.10g}\n')
