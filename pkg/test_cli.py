import logging
import os

import pytest
from dotenv import dotenv_values

from cli import (ExperimentConfig, cmd_embed, cmd_eval, cmd_train, cmd_tune, cmd_variance, main,
                 resolve_config)
from errors import ConfigError


def quick(iris_csv, out_dir, **extra):
    raw = {'DATA_PATH': iris_csv, 'PRESET': 'iris', 'MAX_EPOCHS': '3', 'OUT_DIR': str(out_dir), 'SEED': '7'}
    raw.update({k.upper(): str(v) for k, v in extra.items()})
    return resolve_config(raw)


def run(iris_csv, out_dir, command, *args, **extra):
    argv = [command, '--set', f'DATA_PATH={iris_csv}', '--set', 'PRESET=iris', '--set', 'MAX_EPOCHS=3',
            '--out-dir', str(out_dir)]
    for key, value in extra.items():
        argv += ['--set', f'{key.upper()}={value}']
    return main(argv + list(args))


def read_lines(path):
    with open(path) as f:
        return f.read().splitlines()


def reversed_copy(csv_path, path):
    """The same table with its rows in reverse order, so classes appear in a different order."""
    path.write_text('\n'.join(reversed(read_lines(csv_path))) + '\n')
    return str(path)


class TestConfig:
    def test_preset_fills_topology(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path)
        assert cfg.hidden == (100,)
        assert (cfg.learning_rate, cfg.batch_size, cfg.weight_decay) == (0.001, 16, 2e-5)
        assert cfg.network_spec(4).layer_widths == (4, 100, 2, 100, 4)

    def test_explicit_key_beats_preset(self, iris_csv, tmp_path):
        assert quick(iris_csv, tmp_path, batch_size=32).batch_size == 32

    def test_unknown_key(self):
        with pytest.raises(ConfigError, match='COLOUR'):
            resolve_config({'COLOUR': 'red'})

    @pytest.mark.parametrize('key,value', [('PRESET', 'cifar'), ('K', '0'), ('TEST_FRACTION', '1.5'),
                                           ('ACTIVATION', 'sigmoid'), ('BATCH_SIZE', 'many')])
    def test_invalid_values(self, key, value):
        with pytest.raises(ConfigError) as e:
            resolve_config({key: value})
        assert e.value.field == key

    def test_resolved_config_round_trip(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path, classes='setosa,virginica', lr_grid='0.01,0.001')
        path = tmp_path / 'resolved_config.env'
        path.write_text(cfg.to_env())
        assert resolve_config(dotenv_values(str(path))) == cfg

    def test_defaults(self):
        cfg = ExperimentConfig()
        assert cfg.zscore
        assert ExperimentConfig(data_format='idx').zscore is False


class TestTrain:
    def test_byte_identical_reruns(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path / 'a', 'train') == 0
        assert run(iris_csv, tmp_path / 'b', 'train') == 0
        for name in ('model.cenc', 'fit_log.tsv', 'standardization.csv', 'resolved_config.env'):
            a, b = tmp_path / 'a' / name, tmp_path / 'b' / name
            if name == 'resolved_config.env':
                assert a.read_text().replace(str(tmp_path / 'a'), '') == b.read_text().replace(str(tmp_path / 'b'), '')
            else:
                assert a.read_bytes() == b.read_bytes()

    def test_accepts_iris_topology(self, iris_csv, tmp_path):
        model_path = cmd_train(quick(iris_csv, tmp_path))
        assert os.path.exists(model_path)

    def test_missing_label_column(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'train', label_column='9') == 1
        assert run(iris_csv, tmp_path, 'train', label_column='species') == 1

    def test_empty_input(self, tmp_path):
        empty = tmp_path / 'empty.csv'
        empty.write_text('')
        assert main(['train', '--set', f'DATA_PATH={empty}', '--out-dir', str(tmp_path)]) == 2

    def test_missing_file(self, tmp_path):
        assert main(['train', '--set', f'DATA_PATH={tmp_path / "nope.csv"}', '--out-dir', str(tmp_path)]) == 2

    def test_missing_config_file(self, tmp_path):
        assert main(['train', '--config', str(tmp_path / 'nope.env')]) == 1

    def test_pretrain_flag(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'train', '--pretrain', hidden='8,6', pretrain_epochs=2) == 0
        assert 'PRETRAIN=true' in read_lines(tmp_path / 'resolved_config.env')


class TestEval:
    def test_single_repeat_has_zero_std(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path, repeats=1)
        summary = cmd_eval(cfg, cmd_train(cfg))
        assert summary['runs'] == 1
        assert summary['std'] == 0.0
        lines = read_lines(tmp_path / 'eval.csv')
        assert lines[0] == 'run,error_percent,error_class_setosa,error_class_versicolor,error_class_virginica'
        assert len(lines) == 2

    def test_k_larger_than_training_split(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'train') == 0
        model = str(tmp_path / 'model.cenc')
        assert run(iris_csv, tmp_path, 'eval', '--model', model, '--k', '200', '--repeats', '1') == 1

    def test_missing_model(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'eval', '--model', str(tmp_path / 'none.cenc')) == 2

    def test_kfold_and_threads(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path, protocol='kfold', folds=3, threads=2)
        summary = cmd_eval(cfg, cmd_train(cfg))
        assert summary['runs'] == 3
        serial = cmd_eval(quick(iris_csv, tmp_path / 'serial', protocol='kfold', folds=3), str(tmp_path / 'model.cenc'))
        assert serial['mean'] == summary['mean']

    def test_holdout(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path, protocol='holdout', test_path=iris_csv)
        summary = cmd_eval(cfg, cmd_train(cfg))
        assert summary['runs'] == 1

    def test_holdout_matches_classes_by_name(self, iris_csv, tmp_path):
        model = cmd_train(quick(iris_csv, tmp_path / 'model'))
        shuffled = reversed_copy(iris_csv, tmp_path / 'reversed.csv')
        same = cmd_eval(quick(iris_csv, tmp_path / 'same', protocol='holdout', test_path=iris_csv), model)
        flipped = cmd_eval(quick(iris_csv, tmp_path / 'flipped', protocol='holdout', test_path=shuffled), model)
        assert flipped['mean'] == same['mean']
        assert read_lines(tmp_path / 'flipped' / 'eval.csv') == read_lines(tmp_path / 'same' / 'eval.csv')

    def test_holdout_unknown_class(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'train') == 0
        unknown = tmp_path / 'unknown.csv'
        unknown.write_text('5.1,3.5,1.4,0.2,setosa\n6.0,3.0,4.0,1.0,daisy\n')
        assert run(iris_csv, tmp_path, 'eval', '--model', str(tmp_path / 'model.cenc'),
                   protocol='holdout', test_path=str(unknown)) == 2


class TestEmbed:
    def test_writes_one_row_per_sample(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path)
        csv_path = cmd_embed(cfg, cmd_train(cfg))
        assert len(read_lines(csv_path)) == 151
        assert len(read_lines(tmp_path / 'sites.csv')) == 4
        assert read_lines(tmp_path / 'embedding.svg')

    def test_test_set_labels_keep_their_names(self, iris_csv, tmp_path):
        model = cmd_train(quick(iris_csv, tmp_path / 'model'))
        shuffled = reversed_copy(iris_csv, tmp_path / 'reversed.csv')
        csv_path = cmd_embed(quick(iris_csv, tmp_path / 'out', test_path=shuffled), model)
        written = [line.split(',')[0] for line in read_lines(csv_path)[1:]]
        assert written == [line.split(',')[-1] for line in read_lines(shuffled)]

    def test_outputs_are_deterministic(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path / 'model')
        model = cmd_train(cfg)
        for name in ('a', 'b'):
            cmd_embed(quick(iris_csv, tmp_path / name), model)
        for name in ('embedding.csv', 'sites.csv', 'embedding.svg'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()

    def test_wider_bottleneck_writes_csv_only(self, iris_csv, tmp_path, caplog):
        cfg = quick(iris_csv, tmp_path, bottleneck=3)
        with caplog.at_level(logging.WARNING, logger='cli'):
            csv_path = cmd_embed(cfg, cmd_train(cfg))
        assert read_lines(csv_path)[0] == 'label,y1,y2,y3'
        assert not (tmp_path / 'embedding.svg').exists()
        assert 'CSV only' in caplog.text


class TestVariance:
    def test_up_to_is_clamped(self, iris_csv, tmp_path, caplog):
        with caplog.at_level(logging.WARNING, logger='cli'):
            curves = cmd_variance(quick(iris_csv, tmp_path, up_to=10))
        assert len(curves['raw']) == 4
        assert len(read_lines(tmp_path / 'variance.csv')) == 5
        assert 'clamping' in caplog.text

    def test_class_filter_flag(self, iris_csv, tmp_path):
        assert run(iris_csv, tmp_path, 'variance', '--classes', 'setosa,versicolor', '--up-to', '2') == 0
        assert read_lines(tmp_path / 'variance.csv')[0] == 'dimension,cumulative_fraction'
        assert 'CLASSES="setosa,versicolor"' in read_lines(tmp_path / 'resolved_config.env')

    def test_ce_transform_outputs(self, iris_csv, tmp_path):
        curves = cmd_variance(quick(iris_csv, tmp_path, learning_rate=0.01), ce_transform=True)
        assert set(curves) == {'raw', 'ce_transformed'}
        for name in ('variance_ce.csv', 'variance_ce_test.csv', 'ce_pca_train.csv', 'ce_pca_test.csv',
                     'variance.svg'):
            assert (tmp_path / name).exists()

    def test_reruns_identical(self, iris_csv, tmp_path):
        for name in ('a', 'b'):
            cmd_variance(quick(iris_csv, tmp_path / name))
        for name in ('variance.csv', 'variance.svg'):
            assert (tmp_path / 'a' / name).read_bytes() == (tmp_path / 'b' / name).read_bytes()


class TestTune:
    def test_grid_search_writes_table(self, iris_csv, tmp_path):
        cfg = quick(iris_csv, tmp_path, lr_grid='0.01,0.001', batch_grid='16', decay_grid='0.00002', folds=2,
                    max_epochs=2)
        best = cmd_tune(cfg)
        assert best['learning_rate'] in (0.01, 0.001)
        assert len(read_lines(tmp_path / 'tuning.csv')) == 3
        resolved = dotenv_values(str(tmp_path / 'resolved_config.env'))
        assert float(resolved['LEARNING_RATE']) == best['learning_rate']
