"""Command-line experiment runner: train, eval, embed, variance and tune."""
import argparse
import csv
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from dotenv import dotenv_values

import config
import plots
from analysis import (Embedding, ce_transform_experiment, evaluate, pca_fit, variance_curve,
                      voronoi_sites, write_embedding_csv, write_variance_csv)
from dataset import (Dataset, Split, align_classes, apply_standardization, filter_classes, load_csv,
                     load_idx, standardize, stratified_kfold, stratified_split, subsample_per_class, subset)
from errors import CentroidEncoderError, ConfigError, ContractViolation, DataError
from network import NetworkSpec, encode, load_model, save_model
from numerics import SeededRng, derive_seed
from training import (MODES, TrainConfig, evaluate_split, fit, grid_search, pretrain_layer_freeze,
                      write_fit_log)

logger = logging.getLogger(__name__)

MODEL_FILE = 'model.cenc'
STANDARDIZATION_FILE = 'standardization.csv'
RESOLVED_CONFIG_FILE = 'resolved_config.env'
PROTOCOLS = ('resplit', 'kfold', 'holdout')


def _bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError(f"expected a boolean, got '{value}'")


def _ints(value: str) -> Tuple[int, ...]:
    return tuple(int(v) for v in value.split(',') if v.strip())


def _floats(value: str) -> Tuple[float, ...]:
    return tuple(float(v) for v in value.split(',') if v.strip())


def _names(value: str) -> Tuple[str, ...]:
    return tuple(v.strip() for v in value.split(',') if v.strip())


def _optional_bool(value: str) -> Optional[bool]:
    return None if value.strip().lower() in ('', 'auto') else _bool(value)


def _format(value) -> str:
    if value is None:
        return ''
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, tuple):
        return ','.join(_format(v) for v in value)
    return str(value)


@dataclass(frozen=True)
class ExperimentConfig:
    """Every knob of an experiment run.

    Config files use KEY=VALUE lines (dotenv syntax) with the upper-cased
    field names as keys. Only the data paths lack defaults.
    """
    # Data
    data_format: str = 'csv'
    data_path: str = ''
    images: str = ''
    labels: str = ''
    test_path: str = ''
    test_images: str = ''
    test_labels: str = ''
    label_column: str = '-1'
    delimiter: str = ','
    header: bool = False
    classes: Tuple[str, ...] = ()
    per_class: int = 0
    standardize: Optional[bool] = None
    # Network
    preset: str = ''
    hidden: Tuple[int, ...] = (100,)
    bottleneck: int = config.BOTTLENECK_WIDTH
    activation: str = 'relu'
    # Training
    mode: str = 'centroid_encoder'
    learning_rate: float = 0.001
    batch_size: int = 16
    weight_decay: float = 2e-5
    max_epochs: int = config.MAX_EPOCHS
    patience: int = config.PATIENCE
    pretrain: bool = False
    pretrain_epochs: int = config.PRETRAIN_STAGE_EPOCHS
    validation_fraction: float = config.VALIDATION_FRACTION
    # Evaluation
    k: int = config.KNN_K
    repeats: int = config.REPEATS
    test_fraction: float = config.TEST_FRACTION
    folds: int = config.FOLDS
    protocol: str = 'resplit'
    up_to: int = 0
    lr_grid: Tuple[float, ...] = ()
    batch_grid: Tuple[int, ...] = ()
    decay_grid: Tuple[float, ...] = ()
    # Run
    seed: int = config.SEED
    out_dir: str = config.OUT_DIR
    threads: int = config.THREADS

    @property
    def zscore(self) -> bool:
        """Standardize features; defaults to on for CSV tables and off for images."""
        return self.data_format == 'csv' if self.standardize is None else self.standardize

    def train_config(self) -> TrainConfig:
        try:
            return TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                               weight_decay=self.weight_decay, max_epochs=self.max_epochs,
                               patience=self.patience, seed=self.seed, mode=self.mode, k=self.k,
                               validation_fraction=self.validation_fraction,
                               pretrain_epochs=self.pretrain_epochs)
        except ContractViolation as e:
            raise ConfigError(str(e)) from None

    def network_spec(self, n_features: int) -> NetworkSpec:
        try:
            return NetworkSpec.symmetric(n_features, self.hidden, self.bottleneck, self.activation)
        except ContractViolation as e:
            raise ConfigError(str(e), 'HIDDEN') from None

    def to_env(self) -> str:
        """Fully resolved config as KEY=VALUE lines in field order."""
        lines = []
        for f in fields(self):
            value = _format(getattr(self, f.name))
            quoted = f'"{value}"' if any(c in value for c in ' #,=') or value == '' else value
            lines.append(f'{f.name.upper()}={quoted}')
        return '\n'.join(lines) + '\n'


_PARSERS = {
    'header': _bool, 'standardize': _optional_bool, 'pretrain': _bool,
    'classes': _names, 'hidden': _ints, 'lr_grid': _floats, 'batch_grid': _ints, 'decay_grid': _floats,
    'per_class': int, 'bottleneck': int, 'batch_size': int, 'max_epochs': int, 'patience': int,
    'pretrain_epochs': int, 'k': int, 'repeats': int, 'folds': int, 'up_to': int, 'seed': int,
    'threads': int,
    'learning_rate': float, 'weight_decay': float, 'validation_fraction': float, 'test_fraction': float,
}


def resolve_config(raw: Dict[str, str]) -> ExperimentConfig:
    """Build an ExperimentConfig from string values keyed by upper-case field name.

    A PRESET key fills topology and hyper-parameters first; explicit keys win.
    """
    known = {f.name for f in fields(ExperimentConfig)}
    values = {}
    for key, text in raw.items():
        name = key.strip().lower()
        if name not in known:
            raise ConfigError(f"unknown config key '{key}'", key)
        parser = _PARSERS.get(name, str)
        try:
            values[name] = parser(text if text is not None else '')
        except ValueError as e:
            raise ConfigError(f"invalid value '{text}' ({e})", key.upper()) from None

    preset_name = values.get('preset', '')
    if preset_name:
        if preset_name not in config.PRESETS:
            raise ConfigError(f"unknown preset '{preset_name}'; choose from {sorted(config.PRESETS)}", 'PRESET')
        for name, value in config.PRESETS[preset_name].items():
            values.setdefault(name, value)

    cfg = ExperimentConfig(**values)
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig):
    """Check every field that can be checked without touching data."""
    checks = [
        (cfg.data_format in ('csv', 'idx'), 'DATA_FORMAT', "must be 'csv' or 'idx'"),
        (cfg.activation in ('tanh', 'relu', 'linear'), 'ACTIVATION', "must be tanh, relu or linear"),
        (cfg.mode in MODES, 'MODE', f"must be one of {MODES}"),
        (cfg.protocol in PROTOCOLS, 'PROTOCOL', f"must be one of {PROTOCOLS}"),
        (cfg.bottleneck >= 1, 'BOTTLENECK', "must be >= 1"),
        (all(h >= 1 for h in cfg.hidden), 'HIDDEN', "widths must be >= 1"),
        (cfg.k >= 1, 'K', "must be >= 1"),
        (cfg.repeats >= 1, 'REPEATS', "must be >= 1"),
        (cfg.folds >= 2, 'FOLDS', "must be >= 2"),
        (0 < cfg.test_fraction < 1, 'TEST_FRACTION', "must lie in (0, 1)"),
        (0 < cfg.validation_fraction < 1, 'VALIDATION_FRACTION', "must lie in (0, 1)"),
        (cfg.per_class >= 0, 'PER_CLASS', "must be >= 0"),
        (cfg.up_to >= 0, 'UP_TO', "must be >= 0"),
        (cfg.threads >= 1, 'THREADS', "must be >= 1"),
    ]
    for ok, name, message in checks:
        if not ok:
            raise ConfigError(message, name)
    cfg.train_config()


def _check_label_column(path: str, cfg: ExperimentConfig):
    with open(path, newline='') as f:
        first = next(csv.reader(f, delimiter=cfg.delimiter), [])
    if not first:
        raise DataError(f"{path} is empty")
    column = cfg.label_column
    if column.lstrip('-').isdigit():
        if not -len(first) <= int(column) < len(first):
            raise ConfigError(f"column {column} out of range for {len(first)} columns", 'LABEL_COLUMN')
    elif not cfg.header or column not in [c.strip() for c in first]:
        raise ConfigError(f"column '{column}' not found in {path}", 'LABEL_COLUMN')


def load_data(cfg: ExperimentConfig, which: str = 'train',
              reference: Optional[Dataset] = None) -> Optional[Dataset]:
    """Load the training (or test) data named by the config, with the class filter applied.

    With a reference dataset, labels are re-encoded to its class names so
    that class j means the same class in both sets.

    Returns:
        The dataset, or None when `which` is 'test' and no test data is configured
    """
    if cfg.data_format == 'idx':
        images, labels = (cfg.images, cfg.labels) if which == 'train' else (cfg.test_images, cfg.test_labels)
        if not images and which == 'test':
            return None
        for name, value in (('IMAGES' if which == 'train' else 'TEST_IMAGES', images),
                            ('LABELS' if which == 'train' else 'TEST_LABELS', labels)):
            if not value:
                raise ConfigError("path is required for idx data", name)
        ds = load_idx(images, labels)
    else:
        path = cfg.data_path if which == 'train' else cfg.test_path
        if not path:
            if which == 'test':
                return None
            raise ConfigError("path is required for csv data", 'DATA_PATH')
        if not os.path.exists(path):
            raise DataError(f"{path}: no such file")
        _check_label_column(path, cfg)
        ds = load_csv(path, cfg.label_column, cfg.delimiter, cfg.header)

    if cfg.classes:
        ds = filter_classes(ds, cfg.classes)
    if reference is not None:
        ds = align_classes(ds, reference.class_names)
    if which == 'train' and cfg.per_class:
        ds = subsample_per_class(ds, cfg.per_class, SeededRng(cfg.seed).spawn(100))
    if ds.n_samples == 0:
        raise DataError(f"no {which} samples")
    return ds


def write_standardization(mean: np.ndarray, std: np.ndarray, path: str):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['feature', 'mean', 'std'])
        for i, (mu, sigma) in enumerate(zip(mean, std)):
            writer.writerow([i, repr(float(mu)), repr(float(sigma))])


def read_standardization(path: str) -> Tuple[np.ndarray, np.ndarray]:
    with open(path, newline='') as f:
        rows = list(csv.DictReader(f))
    return (np.array([float(r['mean']) for r in rows]), np.array([float(r['std']) for r in rows]))


def _model_normalizer(model_path: str):
    """Standardization saved next to the model, or None if the model saw raw features."""
    path = os.path.join(os.path.dirname(os.path.abspath(model_path)), STANDARDIZATION_FILE)
    if not os.path.exists(path):
        return None
    mean, std = read_standardization(path)
    return lambda ds: apply_standardization(ds, mean, std)


def _load_compatible_model(model_path: str, ds: Dataset):
    if not os.path.exists(model_path):
        raise DataError(f"{model_path}: no such model file")
    params, spec = load_model(model_path)
    if spec.n_inputs != ds.n_features:
        raise DataError(f"model expects {spec.n_inputs} features, data has {ds.n_features}")
    return params, spec


def _prepare_out_dir(cfg: ExperimentConfig) -> str:
    os.makedirs(cfg.out_dir, exist_ok=True)
    with open(os.path.join(cfg.out_dir, RESOLVED_CONFIG_FILE), 'w') as f:
        f.write(cfg.to_env())
    return cfg.out_dir


def cmd_train(cfg: ExperimentConfig) -> str:
    """Train a centroid-encoder (or autoencoder) and save model, log and config.

    Returns:
        Path of the saved model file
    """
    ds = load_data(cfg, 'train')
    out_dir = _prepare_out_dir(cfg)
    if cfg.zscore:
        ds, mean, std = standardize(ds, np.arange(ds.n_samples))
        write_standardization(mean, std, os.path.join(out_dir, STANDARDIZATION_FILE))

    spec = cfg.network_spec(ds.n_features)
    train_cfg = cfg.train_config()
    logger.info("Training %s on %d samples, widths %s", cfg.mode, ds.n_samples, spec.layer_widths)
    initial = pretrain_layer_freeze(ds, spec, train_cfg) if cfg.pretrain else None
    params, report = fit(ds, spec, train_cfg, initial)

    model_path = os.path.join(out_dir, MODEL_FILE)
    save_model(params, spec, model_path)
    write_fit_log(report, os.path.join(out_dir, 'fit_log.tsv'))
    logger.info("Saved %s after %d epochs (best %d) in %.1fs",
                model_path, report.stopped_epoch, report.best_epoch, report.seconds)
    return model_path


def _splits(cfg: ExperimentConfig, ds: Dataset) -> List[Split]:
    if cfg.protocol == 'kfold':
        return stratified_kfold(ds, cfg.folds, SeededRng(cfg.seed))
    return [stratified_split(ds, cfg.test_fraction, SeededRng(derive_seed(cfg.seed, repeat)))
            for repeat in range(cfg.repeats)]


def cmd_eval(cfg: ExperimentConfig, model_path: str) -> Dict[str, float]:
    """Mean and std of the k-NN prediction error over repeated splits.

    `resplit` retrains the model's topology on each stratified split,
    `kfold` on each fold, and `holdout` embeds the configured test set with
    the trained model, using the training embedding as reference.

    Returns:
        Dict with 'mean', 'std' and 'runs'
    """
    ds = load_data(cfg, 'train')
    params, spec = _load_compatible_model(model_path, ds)
    out_dir = _prepare_out_dir(cfg)
    train_cfg = cfg.train_config()

    if cfg.protocol == 'holdout':
        test = load_data(cfg, 'test', reference=ds)
        if test is None:
            raise ConfigError("holdout protocol needs a test set", 'TEST_PATH' if cfg.data_format == 'csv' else 'TEST_IMAGES')
        if cfg.k > ds.n_samples:
            raise ConfigError(f"k={cfg.k} exceeds the {ds.n_samples} training samples", 'K')
        normalizer = _model_normalizer(model_path)
        if normalizer:
            ds, test = normalizer(ds), normalizer(test)
        if test.n_features != spec.n_inputs:
            raise DataError(f"model expects {spec.n_inputs} features, test data has {test.n_features}")
        if cfg.repeats > 1:
            logger.warning("Holdout protocol evaluates once; ignoring REPEATS=%d", cfg.repeats)
        reports = [evaluate(Embedding(encode(params, spec, ds.x), ds.labels),
                            Embedding(encode(params, spec, test.x), test.labels), cfg.k)]
    else:
        splits = _splits(cfg, ds)
        smallest = min(len(s.train_indices) for s in splits)
        if cfg.k > smallest:
            raise ConfigError(f"k={cfg.k} exceeds the {smallest} training samples of a split", 'K')

        def run(index: int):
            fold_cfg = replace(train_cfg, seed=derive_seed(cfg.seed, index))
            report = evaluate_split(ds, splits[index], spec, fold_cfg, cfg.zscore, cfg.pretrain)
            logger.info("Run %d/%d: error %.2f%%", index + 1, len(splits), report.error_percent)
            return report

        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            reports = list(pool.map(run, range(len(splits))))

    errors = np.array([r.error_percent for r in reports])
    with open(os.path.join(out_dir, 'eval.csv'), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['run', 'error_percent'] + [f'error_class_{name}' for name in ds.class_names])
        for index, report in enumerate(reports, start=1):
            writer.writerow([index, repr(report.error_percent)] + [repr(e) for e in report.per_class_error])
    summary = {'mean': float(errors.mean()), 'std': float(errors.std()), 'runs': len(reports)}
    print(f"k-NN (k={cfg.k}) error over {summary['runs']} run(s): "
          f"{summary['mean']:.2f} +/- {summary['std']:.2f} %")
    return summary


def cmd_embed(cfg: ExperimentConfig, model_path: str) -> str:
    """Embed data with a trained model; write CSV and, for 2-D models, an SVG with Voronoi sites.

    Sites come from the training data embedding. The test set, when
    configured, is the set written and plotted; otherwise the training data is.

    Returns:
        Path of the embedding CSV
    """
    ds = load_data(cfg, 'train')
    params, spec = _load_compatible_model(model_path, ds)
    test = load_data(cfg, 'test', reference=ds)
    normalizer = _model_normalizer(model_path)
    if normalizer:
        ds = normalizer(ds)
        test = normalizer(test) if test is not None else None
    out_dir = _prepare_out_dir(cfg)

    reference = Embedding(encode(params, spec, ds.x), ds.labels)
    shown = reference if test is None else Embedding(encode(params, spec, test.x), test.labels)
    csv_path = os.path.join(out_dir, 'embedding.csv')
    write_embedding_csv(shown, ds.class_names, csv_path)

    if spec.bottleneck_width != 2:
        logger.warning("Bottleneck is %d-D; writing CSV only, no SVG", spec.bottleneck_width)
        return csv_path
    sites = voronoi_sites(reference)
    write_embedding_csv(Embedding(sites.centroids, np.arange(sites.centroids.shape[0])),
                        ds.class_names, os.path.join(out_dir, 'sites.csv'))
    plots.embedding_svg(shown, ds.class_names, os.path.join(out_dir, 'embedding.svg'), sites,
                        title='Centroid-encoder embedding')
    return csv_path


def cmd_variance(cfg: ExperimentConfig, ce_transform: bool = False) -> Dict[str, List[float]]:
    """Cumulative variance curve of the data, optionally also of CE-transformed data.

    Returns:
        Curves keyed by 'raw' and, with ce_transform, 'ce_transformed'
    """
    ds = load_data(cfg, 'train')
    out_dir = _prepare_out_dir(cfg)
    up_to = cfg.up_to or ds.n_features
    if up_to > ds.n_features:
        logger.warning("UP_TO=%d exceeds %d features; clamping", up_to, ds.n_features)
        up_to = ds.n_features

    curves = {'raw': variance_curve(pca_fit(ds.x), up_to)}
    write_variance_csv(curves['raw'], os.path.join(out_dir, 'variance.csv'))
    logger.info("Raw data: %.1f%% of variance in 2 dimensions", 100 * curves['raw'][min(1, up_to - 1)])

    if ce_transform:
        test = load_data(cfg, 'test', reference=ds)
        train = ds
        if test is None:
            split = stratified_split(ds, cfg.test_fraction, SeededRng(cfg.seed))
            train, test = subset(ds, split.train_indices), subset(ds, split.test_indices)
        result = ce_transform_experiment(train, test, cfg.train_config(), up_to)
        curves['ce_transformed'] = result.transformed_curve
        write_variance_csv(result.transformed_curve, os.path.join(out_dir, 'variance_ce.csv'))
        write_variance_csv(result.transformed_test_curve, os.path.join(out_dir, 'variance_ce_test.csv'))
        write_embedding_csv(Embedding(result.train_projection, train.labels), ds.class_names,
                            os.path.join(out_dir, 'ce_pca_train.csv'))
        write_embedding_csv(Embedding(result.test_projection, test.labels), ds.class_names,
                            os.path.join(out_dir, 'ce_pca_test.csv'))
        logger.info("CE-transformed data: %.1f%% of variance in 2 dimensions",
                    100 * result.transformed_curve[min(1, up_to - 1)])

    plots.variance_svg(curves, os.path.join(out_dir, 'variance.svg'), title='Variance captured by PCA')
    return curves


def cmd_tune(cfg: ExperimentConfig) -> Dict[str, float]:
    """Pick learning rate, batch size and weight decay by stratified k-fold search.

    Returns:
        The winning row of the search
    """
    ds = load_data(cfg, 'train')
    out_dir = _prepare_out_dir(cfg)
    grids = {'learning_rate': cfg.lr_grid or config.LEARNING_RATE_GRID,
             'batch_size': cfg.batch_grid or config.BATCH_SIZE_GRID,
             'weight_decay': cfg.decay_grid or config.WEIGHT_DECAY_GRID}
    rows = grid_search(ds, cfg.network_spec(ds.n_features), cfg.train_config(), grids, cfg.folds, cfg.zscore)
    with open(os.path.join(out_dir, 'tuning.csv'), 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(['learning_rate', 'batch_size', 'weight_decay', 'mean_error', 'std_error'])
        for row in rows:
            writer.writerow([repr(row['learning_rate']), row['batch_size'], repr(row['weight_decay']),
                             repr(row['mean_error']), repr(row['std_error'])])
    best = rows[0]
    tuned = replace(cfg, learning_rate=best['learning_rate'], batch_size=best['batch_size'],
                    weight_decay=best['weight_decay'])
    with open(os.path.join(out_dir, RESOLVED_CONFIG_FILE), 'w') as f:
        f.write(tuned.to_env())
    print(f"Best: lr={best['learning_rate']:g} batch={best['batch_size']} decay={best['weight_decay']:g} "
          f"({best['mean_error']:.2f} +/- {best['std_error']:.2f} %)")
    return best


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='KEY=VALUE experiment config file')
    common.add_argument('--seed', type=int, help='Override SEED')
    common.add_argument('--out-dir', help='Override OUT_DIR')
    common.add_argument('--threads', type=int, help='Override THREADS (parallel eval runs)')
    common.add_argument('--set', action='append', default=[], metavar='KEY=VALUE',
                        help='Override any config key; repeatable')
    common.add_argument('--log-level', default=config.LOG_LEVEL, help='Logging level')

    parser = argparse.ArgumentParser(prog='centroid-encoder', description=__doc__)
    commands = parser.add_subparsers(dest='command', required=True)

    train = commands.add_parser('train', parents=[common], help='Train and save a model')
    train.add_argument('--pretrain', action='store_true', help='Layer-freeze pre-training before fitting')

    evaluate_cmd = commands.add_parser('eval', parents=[common], help='Repeated k-NN evaluation')
    evaluate_cmd.add_argument('--model', required=True, help='Model file from train')
    evaluate_cmd.add_argument('--k', type=int, help='Override K')
    evaluate_cmd.add_argument('--repeats', type=int, help='Override REPEATS')
    evaluate_cmd.add_argument('--protocol', choices=PROTOCOLS, help='Override PROTOCOL')

    embed = commands.add_parser('embed', parents=[common], help='Embedding CSV and SVG')
    embed.add_argument('--model', required=True, help='Model file from train')

    variance = commands.add_parser('variance', parents=[common], help='Variance curves')
    variance.add_argument('--classes', help='Comma-separated classes to keep, e.g. 4,9')
    variance.add_argument('--up-to', type=int, help='Override UP_TO')
    variance.add_argument('--ce-transform', action='store_true', help='Also train the n->[n]->n transform')

    commands.add_parser('tune', parents=[common], help='Hyper-parameter grid search')
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    """Merge the config file with command-line overrides; flags win."""
    raw: Dict[str, str] = {}
    if args.config:
        if not os.path.exists(args.config):
            raise ConfigError(f"config file {args.config} not found", 'CONFIG')
        raw.update({k: v if v is not None else '' for k, v in dotenv_values(args.config).items()})
    for item in args.set:
        key, sep, value = item.partition('=')
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got '{item}'")
        raw[key.strip().upper()] = value
    flag_keys = {'seed': 'SEED', 'out_dir': 'OUT_DIR', 'threads': 'THREADS', 'k': 'K', 'repeats': 'REPEATS',
                 'protocol': 'PROTOCOL', 'classes': 'CLASSES', 'up_to': 'UP_TO'}
    for attr, key in flag_keys.items():
        value = getattr(args, attr, None)
        if value is not None:
            raw[key] = str(value)
    if getattr(args, 'pretrain', False):
        raw['PRETRAIN'] = 'true'
    return resolve_config(raw)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        cfg = config_from_args(args)
        if args.command == 'train':
            cmd_train(cfg)
        elif args.command == 'eval':
            cmd_eval(cfg, args.model)
        elif args.command == 'embed':
            cmd_embed(cfg, args.model)
        elif args.command == 'variance':
            cmd_variance(cfg, args.ce_transform)
        elif args.command == 'tune':
            cmd_tune(cfg)
    except CentroidEncoderError as e:
        logger.error("%s", e)
        return e.exit_code
    except OSError as e:
        logger.error("I/O error: %s", e)
        return DataError.exit_code
    return 0


if __name__ == '__main__':
    sys.exit(main())
