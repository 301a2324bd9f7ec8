import logging

import numpy as np
import pandas as pd
import pytest

from shoewear.app import (EXIT_DIVERGENCE, EXIT_FAILURE, EXIT_IO, EXIT_OK, EXIT_USAGE,
                          ShoewearApp, fit_to_network, main)
from shoewear.errors import DivergenceError, ShapeError
from shoewear.imaging.image import Image
from shoewear.imaging.pgm import read_pgm, write_pgm
from shoewear.model.delta import DeltaMode, Variant
from shoewear.model.wear_net import NetworkConfig, build
from shoewear.synth.dataset_writer import emit_dataset
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.checkpoint import save_checkpoint
from shoewear.training.experiment import ExperimentConfig


@pytest.fixture(autouse=True)
def workdir(tmp_path, monkeypatch):
    """Run every CLI call inside a temporary directory so the cache lands there."""
    monkeypatch.chdir(tmp_path)
    return tmp_path


@pytest.fixture
def forward_checkpoint(workdir):
    """Untrained tiny forward model saved to disk."""
    path = workdir / 'forward.ckpt'
    save_checkpoint(build(NetworkConfig.tiny(DeltaMode.SCALAR), seed=0),
                    ExperimentConfig(variant=Variant.FORWARD), path)
    return path


@pytest.fixture
def impression_file(workdir):
    """64x64 impression on disk, twice the tiny network's input size."""
    path = workdir / 'in.pgm'
    write_pgm(path, Image(np.random.default_rng(0).integers(0, 256, (64, 64)) / 255.0))
    return path


def test_fit_to_network_downsamples():
    """Test that a 2x impression is block-mean reduced to the input size."""
    network = NetworkConfig.tiny()
    image = fit_to_network(Image(np.ones((64, 64))), network)
    assert image.shape == (32, 32)
    with pytest.raises(ShapeError):
        fit_to_network(Image(np.ones((64, 48))), network)


@pytest.mark.parametrize('argv', [
    ['predict', '--checkpoint', 'm.ckpt', '--image', 'a.pgm', '--output', 'b.pgm',
     '--delta', '3'],
    ['generate'],
    ['denoise', '--input', 'a.pgm', '--output', 'b.pgm', '--kernel', '4'],
    ['train', '--variant', 'sideways'],
    [],
])
def test_usage_errors(argv):
    """Test that malformed command lines exit with the usage code."""
    assert main(argv) == EXIT_USAGE


def test_help_exits_cleanly():
    """Test that --help is not treated as an error."""
    assert main(['--help']) == EXIT_OK


def test_missing_input_is_io_error():
    """Test that an absent input file maps to the I/O exit code."""
    assert main(['denoise', '--input', 'absent.pgm', '--output', 'out.pgm']) == EXIT_IO


def test_divergence_exit_code(mocker):
    """Test that a diverged training run exits with its own code."""
    mocker.patch.object(ShoewearApp, 'train', side_effect=DivergenceError('loss is nan', 3))
    assert main(['train']) == EXIT_DIVERGENCE


def test_predict_writes_output(forward_checkpoint, impression_file, workdir):
    """Test forward prediction from a checkpoint to a PGM file."""
    out = workdir / 'pred.pgm'
    code = main(['predict', '--checkpoint', str(forward_checkpoint), '--image',
                 str(impression_file), '--delta', '10', '--input-week', '20', '--output', str(out)])
    assert code == EXIT_OK
    assert read_pgm(out).shape == (32, 32)


def test_unverifiable_prediction_warns(forward_checkpoint, impression_file, workdir, caplog):
    """Test that predictions past week 52 still run but are flagged."""
    with caplog.at_level(logging.WARNING, logger='shoewear.app'):
        code = main(['predict', '--checkpoint', str(forward_checkpoint), '--image',
                     str(impression_file), '--delta', '20', '--input-week', '44', '--output',
                     str(workdir / 'late.pgm')])
    assert code == EXIT_OK
    assert 'cannot be verified' in caplog.text


def test_reconstruct_refuses_forward_model(forward_checkpoint, impression_file, workdir):
    """Test that backward inference on a forward checkpoint is a domain failure."""
    code = main(['reconstruct', '--checkpoint', str(forward_checkpoint), '--image',
                 str(impression_file), '--week', '10', '--output', str(workdir / 'r.pgm')])
    assert code == EXIT_FAILURE


def test_generate_small_series(workdir):
    """Test the generate command at a reduced canvas."""
    code = main(['--seed', '1', 'generate', '--out', 'series', '--height', '128', '--width', '64',
                 '--blocks', '10', '--downsample', '2'])
    assert code == EXIT_OK
    clean = sorted((workdir / 'series' / 'clean').glob('*.pgm'))
    assert len(clean) == 52
    assert read_pgm(clean[0]).shape == (64, 32)


def test_denoise_emits_masks(workdir):
    """Test the denoise command and its intermediate mask files."""
    pixels = np.ones((64, 32))
    pixels[10:30, 5:25] = 0.4
    pixels[18, 8:20] = 0.05
    write_pgm(workdir / 'raw.pgm', Image(pixels))
    code = main(['denoise', '--input', 'raw.pgm', '--output', 'clean.pgm', '--emit-masks',
                 'masks'])
    assert code == EXIT_OK
    assert (workdir / 'clean.pgm').exists()
    for name in ('threshold', 'blocks', 'noise'):
        assert (workdir / 'masks' / f'{name}.pgm').exists()


@pytest.mark.parametrize('passed,expected', [(True, EXIT_OK), (False, EXIT_FAILURE)])
def test_gradcheck_exit_code(mocker, passed, expected):
    """Test that any failing gradient check fails the command."""
    listing = pd.DataFrame([{'check': 'conv2d', 'max_rel_error': 1e-7, 'tolerance': 1e-5,
                             'passed': True},
                            {'check': 'network (scalar)', 'max_rel_error': 1e-6,
                             'tolerance': 1e-4, 'passed': passed}])
    mocker.patch.object(ShoewearApp, 'gradcheck', return_value=listing)
    assert main(['gradcheck']) == expected


def test_overrides_reach_the_config(workdir):
    """Test that CLI-style overrides win over the packaged defaults."""
    app = ShoewearApp(overrides={'training': {'epochs': 9, 'seed': None}})
    assert app.config['training']['epochs'] == 9
    assert app.config['training']['seed'] == 0


@pytest.fixture
def square_series(workdir):
    """Synthetic series at 128x128, four times the tiny network's input size."""
    spec = OutsoleSpec(seed=0, height=128, width=128, block_count=10, hole_count=2,
                       merge_pairs=1)
    emit_dataset(spec, workdir / 'data')
    return workdir / 'data' / 'manifest.jsonl'


def test_train_and_evaluate_on_a_manifest(square_series, workdir):
    """Test training a tiny model and scoring it against the persistence baseline."""
    app = ShoewearApp(overrides={'network': {'preset': 'tiny'},
                                 'training': {'epochs': 2, 'batch_size': 64,
                                              'checkpoint_path': str(workdir / 'm.ckpt'),
                                              'loss_csv_path': str(workdir / 'loss.csv')}})
    result = app.train(str(square_series))
    assert len(result.loss_curve) == 2
    assert (workdir / 'loss.csv').exists()

    model, baseline = app.evaluate(str(workdir / 'm.ckpt'), str(square_series))
    assert model.name == 'forward' and baseline.name == 'persistence'
    assert len(model.scores) == len(baseline.scores) == 2 * 21 * 5
    assert (model.scores['delta_weeks'] > 0).all()


def test_train_writes_into_the_output_directory(square_series, workdir):
    """Test that train keeps its model and loss curve without --checkpoint or --loss-csv."""
    code = main(['train', '--manifest', str(square_series), '--epochs', '1', '--preset', 'tiny',
                 '--batch-size', '64'])
    assert code == EXIT_OK
    assert (workdir / 'results' / 'forward.ckpt').exists()
    loss = pd.read_csv(workdir / 'results' / 'forward_loss.csv')
    assert loss['epoch'].tolist() == [1]


def test_denoise_logs_the_parameters_it_used(workdir, caplog):
    """Test that the logged denoise parameters carry both flags and resolution scaling."""
    write_pgm(workdir / 'raw.pgm', Image(np.full((64, 32), 0.5)))
    with caplog.at_level(logging.INFO, logger='shoewear.app'):
        code = main(['denoise', '--input', 'raw.pgm', '--output', 'clean.pgm', '--window', '7'])
    assert code == EXIT_OK
    assert 'window: 7' in caplog.text
    assert 'min_area: 1' in caplog.text


def test_render_follows_the_output_format(workdir):
    """Test result tables as pipe tables by default and as CSV on request."""
    frame = pd.DataFrame({'Metric': ['SSIM Mean'], 'forward': [0.5]})
    assert ShoewearApp().render(frame).startswith('| Metric')
    rendered = ShoewearApp(overrides={'output': {'format': 'csv'}}).render(frame)
    assert rendered == 'Metric,forward\nSSIM Mean,0.5'


def _pipeline(root):
    generate = ['--seed', '2', 'generate', '--out', 'data', '--height', '128', '--width', '128',
                '--blocks', '10', '--downsample', '4']
    train = ['train', '--manifest', 'data/manifest.jsonl', '--epochs', '1', '--preset', 'tiny',
             '--batch-size', '64', '--checkpoint', 'run/m.ckpt', '--loss-csv', 'run/loss.csv']
    evaluate = ['evaluate', '--checkpoint', 'run/m.ckpt', '--manifest', 'data/manifest.jsonl',
                '--report-csv', 'run/report.csv']
    for argv in (generate, train, evaluate):
        assert main(argv) == EXIT_OK
    return {name: (root / 'run' / name).read_bytes() for name in ('m.ckpt', 'loss.csv',
                                                                  'report.csv')}


def test_pipeline_is_reproducible(workdir, monkeypatch):
    """Test that generate, train and evaluate twice give byte-identical outputs."""
    runs = []
    for name in ('a', 'b'):
        root = workdir / name
        root.mkdir()
        monkeypatch.chdir(root)
        runs.append(_pipeline(root))
    assert runs[0] == runs[1]
