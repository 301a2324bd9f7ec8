import numpy as np
import pandas as pd
import pytest

from shoewear.errors import ConfigError, DatasetError, DeltaEncodingError, DivergenceError
from shoewear.imaging.image import Image
from shoewear.model.delta import DeltaEncoding, DeltaMode, Variant
from shoewear.model.wear_net import NetworkConfig, WearNet, build
from shoewear.synth.dataset_writer import impression_series
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.checkpoint import load_checkpoint
from shoewear.training.dataset import ImpressionRecord, TrainingSample, make_samples
from shoewear.training.experiment import ExperimentConfig
from shoewear.training.trainer import Trainer, smoothed, train


@pytest.fixture
def tiny_network():
    """32x32 forward network."""
    return NetworkConfig.tiny(DeltaMode.SCALAR)


@pytest.fixture
def samples():
    """Four forward samples of 32x32 noise images."""
    rng = np.random.default_rng(1)
    return [TrainingSample(Image(rng.uniform(size=(32, 32)), week=0),
                           DeltaEncoding.scalar(2 * i),
                           Image(rng.uniform(size=(32, 32)), week=2 * i)) for i in range(4)]


def _config(**overrides):
    values = dict(variant=Variant.FORWARD, learning_rate=1e-3, epochs=3, seed=0, log_every=0)
    values.update(overrides)
    return ExperimentConfig(**values)


def test_zero_learning_rate_keeps_params(tiny_network, samples):
    """Test that lr 0 leaves every parameter untouched."""
    initial = build(tiny_network, seed=0)
    result = Trainer(_config(learning_rate=0.0, epochs=5), tiny_network).train(samples)
    for name, tensor in initial.tensors.items():
        np.testing.assert_array_equal(result.params.tensors[name], tensor)
    assert len(result.loss_curve) == 5


def test_same_seed_gives_identical_curves(tiny_network, samples):
    """Test determinism of init, shuffling and updates."""
    config = _config(batch_size=2, epochs=4)
    first = Trainer(config, tiny_network).train(samples)
    second = Trainer(config, tiny_network).train(samples)
    pd.testing.assert_frame_equal(first.loss_curve, second.loss_curve)


def test_loss_decreases(tiny_network, samples):
    """Test that a few full-batch epochs move the output towards a flat target."""
    flat = [TrainingSample(s.X, s.delta, s.Y.with_pixels(np.full((32, 32), 0.2)))
            for s in samples]
    result = Trainer(_config(learning_rate=1e-2, epochs=20), tiny_network).train(flat)
    curve = result.loss_curve['mean_loss']
    assert curve.iloc[-1] < curve.iloc[0]
    assert result.final_loss == curve.iloc[-1]


def test_non_finite_loss_aborts(tiny_network, samples, mocker):
    """Test that a NaN loss raises DivergenceError naming the epoch."""
    mocker.patch('shoewear.training.trainer.mse_loss',
                 return_value=(float('nan'), np.zeros((4, 1, 32, 32), dtype=np.float32)))
    with pytest.raises(DivergenceError) as excinfo:
        Trainer(_config(), tiny_network).train(samples)
    assert excinfo.value.epoch == 1


def test_non_finite_gradient_aborts(tiny_network, samples, mocker):
    """Test that a NaN gradient raises DivergenceError."""
    grad = np.full((4, 1, 32, 32), np.nan, dtype=np.float32)
    mocker.patch('shoewear.training.trainer.mse_loss', return_value=(1.0, grad))
    with pytest.raises(DivergenceError):
        Trainer(_config(), tiny_network).train(samples)


def test_checkpoints_periodically_and_at_end(tiny_network, samples, tmp_path, mocker):
    """Test that checkpoints are written every K epochs and once more at the end."""
    save = mocker.patch('shoewear.training.trainer.save_checkpoint')
    config = _config(epochs=4, checkpoint_every=2, checkpoint_path=str(tmp_path / 'm.ckpt'))
    Trainer(config, tiny_network).train(samples)
    assert save.call_count == 3


def test_final_checkpoint_and_loss_csv(tiny_network, samples, tmp_path):
    """Test the end-of-run checkpoint and the per-epoch loss CSV."""
    ckpt, csv = tmp_path / 'out' / 'm.ckpt', tmp_path / 'out' / 'loss.csv'
    config = _config(checkpoint_path=str(ckpt), loss_csv_path=str(csv))
    result = Trainer(config, tiny_network).train(samples)
    params, experiment = load_checkpoint(ckpt, expected_variant=Variant.FORWARD)
    assert experiment == config
    np.testing.assert_array_equal(params.tensors['decoder.4.weight'],
                                  result.params.tensors['decoder.4.weight'])
    frame = pd.read_csv(csv)
    assert list(frame.columns) == ['epoch', 'mean_loss']
    assert frame['epoch'].tolist() == [1, 2, 3]


def test_resume_continues_adam_steps(tiny_network, samples):
    """Test that training resumed from params carries the Adam step count."""
    first = Trainer(_config(epochs=2), tiny_network).train(samples)
    resumed = Trainer(_config(epochs=1), params=first.params).train(samples)
    assert resumed.params.adam_states['encoder.0.weight'].step_count == 3


def test_resume_leaves_callers_params_alone(tiny_network, samples):
    """Test that resuming trains a copy of the given parameters."""
    first = Trainer(_config(epochs=2), tiny_network).train(samples)
    before = first.params.copy()
    Trainer(_config(epochs=1), params=first.params).train(samples)
    assert first.params.adam_states['encoder.0.weight'].step_count == 2
    for name, tensor in before.tensors.items():
        np.testing.assert_array_equal(first.params.tensors[name], tensor)


def test_batches_cover_every_sample(tiny_network, samples):
    """Test that uneven batches still step once per batch."""
    result = Trainer(_config(batch_size=3, epochs=1), tiny_network).train(samples)
    assert result.params.adam_states['delta.0.bias'].step_count == 2


def test_variant_network_mismatch(tiny_network):
    """Test that a backward experiment refuses a scalar-delta network."""
    with pytest.raises(DeltaEncodingError):
        Trainer(_config(variant=Variant.BACKWARD), tiny_network)


def test_sample_mode_mismatch(tiny_network):
    """Test that one-hot samples cannot train a forward model."""
    image = Image(np.zeros((32, 32)), week=0)
    bad = [TrainingSample(image, DeltaEncoding.onehot_week(2), image)]
    with pytest.raises(DeltaEncodingError):
        Trainer(_config(), tiny_network).train(bad)


def test_empty_samples(tiny_network):
    """Test that training needs at least one sample."""
    with pytest.raises(DatasetError):
        Trainer(_config(), tiny_network).train([])


@pytest.mark.parametrize('field,value', [('learning_rate', -1e-3), ('epochs', 0),
                                         ('batch_size', 0), ('checkpoint_every', -1)])
def test_experiment_validation(field, value):
    """Test that invalid experiment settings are config errors."""
    with pytest.raises(ConfigError):
        _config(**{field: value})


def test_experiment_from_dict_ignores_unknown_and_none():
    """Test building an experiment from a config section."""
    config = ExperimentConfig.from_dict({'variant': 'backward', 'epochs': 7, 'batch_size': None,
                                         'unrelated': 1})
    assert config.variant is Variant.BACKWARD
    assert config.epochs == 7
    assert config.batch_size is None
    assert config.to_dict()['variant'] == 'backward'


def test_smoothed_window_means():
    """Test non-overlapping window means of a loss curve."""
    curve = pd.DataFrame({'epoch': range(1, 7), 'mean_loss': [6.0, 4.0, 3.0, 1.0, 1.0, 1.0]})
    assert smoothed(curve, window=2).tolist() == [5.0, 2.0, 1.0]


@pytest.fixture(scope='module')
def four_impressions():
    """Four forward samples of a plain outsole, weeks 0 and 20, rendered at 640x256 and
    block-mean reduced to the desk input size."""
    spec = OutsoleSpec(block_count=8, dot_density=0.0, hole_count=0, merge_pairs=0)
    records = [ImpressionRecord(week, side, image=image, denoised=True)
               for side, week, image in impression_series(spec, weeks=(0, 20), factor=4)]
    return make_samples(records, Variant.FORWARD)[:4]


@pytest.mark.slow
def test_desk_network_memorises_four_impressions(four_impressions):
    """Test that the desk network overfits four impressions within 2000 epochs."""
    config = _config(epochs=2000, learning_rate=5e-4, batch_size=1, seed=0)
    result = train(config, four_impressions, NetworkConfig.desk(DeltaMode.SCALAR))
    pixels = 160 * 64
    assert result.final_loss / pixels < 1e-3
    assert (smoothed(result.loss_curve).diff().dropna() <= 0).all()

    net = WearNet(result.params)
    errors = [np.mean((net.predict(s.X, s.delta).pixels - s.Y.pixels) ** 2)
              for s in four_impressions]
    assert np.mean(errors) < 1e-3
