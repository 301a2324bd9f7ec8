import argparse
import logging
import sys
from dataclasses import asdict, replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml
from tabulate import tabulate

from shoewear.analysis.evaluator import MetricReport, PersistenceModel, comparison_frame, evaluate
from shoewear.cache.cache_manager import CacheManager
from shoewear.config.config_loader import ConfigLoader
from shoewear.data_sources.base_source import BaseImpressionSource
from shoewear.data_sources.manifest_source import ManifestSource
from shoewear.data_sources.synthetic_source import SyntheticSource
from shoewear.denoise.noise_map import DenoiseParams, DenoiseResult, denoise_impression
from shoewear.engine.gradcheck import run_layer_suite
from shoewear.errors import DivergenceError, ShapeError, ShoewearError
from shoewear.imaging.image import Image, downsample
from shoewear.imaging.pgm import read_pgm, write_pgm
from shoewear.imaging.registration import align_translation
from shoewear.model.delta import DeltaEncoding, DeltaMode, Variant
from shoewear.model.gradcheck import NETWORK_TOLERANCE, check_network
from shoewear.model.wear_net import NetworkConfig, WearNet
from shoewear.synth.dataset_writer import emit_dataset
from shoewear.synth.noise import NoiseSpec
from shoewear.synth.outsole import OutsoleSpec
from shoewear.training.checkpoint import load_checkpoint
from shoewear.training.dataset import (ImpressionRecord, is_verifiable, make_samples,
                                       make_test_samples, split_dataset)
from shoewear.training.experiment import ExperimentConfig
from shoewear.training.trainer import Trainer, TrainingResult

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DIVERGENCE = 4


def fit_to_network(image: Image, network: NetworkConfig) -> Image:
    """Block-mean downsample an impression to the network's input size."""
    target = (network.input_height, network.input_width)
    if image.shape == target:
        return image
    factor = image.shape[0] // target[0]
    if factor < 1 or image.shape != (target[0] * factor, target[1] * factor):
        raise ShapeError("impression", target, image.shape)
    return downsample(image, factor).quantized()


class ShoewearApp:
    def __init__(self, config_path: Optional[str] = None,
                 overrides: Optional[Dict[str, Dict[str, Any]]] = None):
        """Initialize the application with configuration; CLI overrides win over the file."""
        self.config_loader = ConfigLoader(config_path).merged(overrides or {})
        self.config = self.config_loader.config
        cache = self.config_loader.get_cache_config()
        self.cache_manager = CacheManager(cache['directory'], cache['expiry_days'],
                                          enabled=cache['enabled'])
        logger.info("Resolved configuration:\n%s", self.config_loader.dump())

    def _denoise_params(self) -> DenoiseParams:
        return DenoiseParams.from_dict(self.config_loader.get_denoise_config())

    def _outsole_spec(self) -> OutsoleSpec:
        return OutsoleSpec.from_dict(self.config_loader.get_generator_config())

    def _noise_spec(self) -> NoiseSpec:
        return NoiseSpec.from_dict(self.config_loader.get_generator_config().get('noise') or {})

    def _network(self, variant: Variant) -> NetworkConfig:
        preset = self.config_loader.get_network_config().get('preset', 'desk')
        return NetworkConfig.preset(preset, variant.delta_mode)

    def _experiment(self) -> ExperimentConfig:
        """Training settings; the checkpoint and loss curve default into the output directory."""
        experiment = ExperimentConfig.from_dict(self.config_loader.get_training_config())
        prefix = Path(self.config_loader.get_output_config()['directory']) / experiment.variant.value
        return replace(experiment,
                       checkpoint_path=experiment.checkpoint_path or f'{prefix}.ckpt',
                       loss_csv_path=experiment.loss_csv_path or f'{prefix}_loss.csv')

    def render(self, frame: pd.DataFrame, floatfmt: str = '.4f') -> str:
        """A result table in the configured output format."""
        if self.config_loader.get_output_config().get('format', 'table') == 'csv':
            return frame.to_csv(index=False).rstrip('\n')
        return tabulate(frame, headers='keys', tablefmt='pipe', floatfmt=floatfmt, showindex=False)

    def _initialize_source(self, manifest: Optional[str] = None) -> BaseImpressionSource:
        """Initialize the impression source named by the configuration."""
        source = self.config_loader.get_data_source_config()
        if manifest is not None or source['default'] == 'manifest':
            settings = source.get('manifest', {})
            return ManifestSource(manifest or settings['path'], self.cache_manager,
                                  self._denoise_params(), settings.get('denoise_raw', True),
                                  self.config)
        if source['default'] == 'synthetic':
            factor = source.get('synthetic', {}).get('downsample', 1)
            return SyntheticSource(self._outsole_spec(), factor=factor, config=self.config)
        raise ShoewearError(f"Unsupported data source: {source['default']}")

    def _records(self, network: NetworkConfig, manifest: Optional[str]) -> List[ImpressionRecord]:
        records = self._initialize_source(manifest).load_records()
        return [replace(r, image=fit_to_network(r.image, network)) for r in records]

    def generate(self, out: str, factor: int = 1) -> List[ImpressionRecord]:
        return emit_dataset(self._outsole_spec(), out, self._noise_spec(), factor=factor)

    def denoise(self, input_path: str, output_path: str, overrides: Dict[str, Any],
                emit_masks: Optional[str] = None, register_to: Optional[str] = None
                ) -> DenoiseResult:
        image = read_pgm(input_path)
        if register_to:
            dy, dx, image = align_translation(read_pgm(register_to), image)
            logger.info("Registered %s by (%d, %d) px", input_path, dy, dx)
        params = self._denoise_params().scaled_to(image.shape)
        explicit = {k: v for k, v in overrides.items() if v is not None}
        params = replace(params, **explicit)
        logger.info("Denoise parameters for %s:\n%s", input_path,
                    yaml.safe_dump(asdict(params), sort_keys=True))
        result = denoise_impression(image, params)
        write_pgm(output_path, result.image)
        if emit_masks:
            masks = Path(emit_masks)
            for name, mask in [('threshold', result.noise_map.threshold_mask),
                               ('blocks', result.noise_map.block_mask),
                               ('noise', result.noise_map.mask)]:
                write_pgm(masks / f'{name}.pgm', Image(mask.astype(np.float64)))
        return result

    def train(self, manifest: Optional[str] = None) -> TrainingResult:
        experiment = self._experiment()
        network = self._network(experiment.variant)
        records = self._records(network, manifest)
        train_records, _ = split_dataset(records, experiment.variant)
        samples = make_samples(train_records, experiment.variant)
        logger.info("Checkpoint goes to %s, loss curve to %s", experiment.checkpoint_path,
                    experiment.loss_csv_path)
        return Trainer(experiment, network).train(samples)

    def predict(self, checkpoint: str, image_path: str, output_path: str, delta: int,
                input_week: Optional[int] = None) -> Image:
        params, _ = load_checkpoint(checkpoint, expected_variant=Variant.FORWARD)
        image = read_pgm(image_path, week=input_week)
        if not is_verifiable(input_week, delta):
            logger.warning("Week %d + %d lies beyond the recorded series; the prediction "
                           "cannot be verified", input_week, delta)
        result = WearNet(params).predict(fit_to_network(image, params.config),
                                         DeltaEncoding.scalar(delta))
        write_pgm(output_path, result)
        return result

    def reconstruct(self, checkpoint: str, image_path: str, output_path: str, week: int) -> Image:
        params, _ = load_checkpoint(checkpoint, expected_variant=Variant.BACKWARD)
        image = fit_to_network(read_pgm(image_path), params.config)
        result = WearNet(params).predict(image, DeltaEncoding.onehot_week(week))
        write_pgm(output_path, result)
        return result

    def evaluate(self, checkpoint: str, manifest: Optional[str] = None) -> List[MetricReport]:
        params, _ = load_checkpoint(checkpoint)
        variant = params.variant
        records = self._records(params.config, manifest)
        train_records, test_records = split_dataset(records, variant)
        samples = make_test_samples(train_records, test_records, variant)
        window = self.config_loader.get_metrics_config().get('ssim_window', 8)
        return [evaluate(WearNet(params), samples, variant, variant.value, window),
                evaluate(PersistenceModel(), samples, variant, 'persistence', window)]

    def gradcheck(self, seed: int = 0) -> pd.DataFrame:
        suite = run_layer_suite(seed)
        rows = []
        for mode in DeltaMode:
            errors = check_network(seed=seed, delta_mode=mode)
            worst = max(errors.values())
            rows.append({'check': f'network ({mode.value})', 'max_rel_error': worst,
                         'tolerance': NETWORK_TOLERANCE, 'passed': worst < NETWORK_TOLERANCE})
        return pd.concat([suite, pd.DataFrame(rows)], ignore_index=True)


def even_weeks(value: str) -> int:
    weeks = int(value)
    if weeks < 0 or weeks % 2:
        raise argparse.ArgumentTypeError(f"{value} is not an even, non-negative number of weeks")
    return weeks


def odd_pixels(value: str) -> int:
    pixels = int(value)
    if pixels < 3 or pixels % 2 == 0:
        raise argparse.ArgumentTypeError(f"{value} is not an odd size >= 3")
    return pixels


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='shoewear',
                                     description='Shoeprint wear prediction and reconstruction')
    parser.add_argument('--config', help='YAML configuration file (default: packaged config)')
    parser.add_argument('--log-level', default='INFO',
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'], help='logging verbosity')
    parser.add_argument('--seed', type=int, help='seed for training and generation')
    parser.add_argument('--format', choices=['table', 'csv'], help='result table format')
    commands = parser.add_subparsers(dest='command', required=True)

    generate = commands.add_parser('generate', help='write a synthetic impression series')
    generate.add_argument('--out', required=True, help='output directory')
    generate.add_argument('--height', type=int, help='native canvas height (multiple of 32)')
    generate.add_argument('--width', type=int, help='native canvas width (multiple of 32)')
    generate.add_argument('--downsample', type=int, default=1, help='block-mean output factor')
    generate.add_argument('--blocks', type=int, help='number of outsole block features')
    generate.add_argument('--noise-scale', type=float, help='noise intensity (0 disables)')

    denoise = commands.add_parser('denoise', help='remove lift debris from one impression')
    denoise.add_argument('--input', required=True, help='input PGM')
    denoise.add_argument('--output', required=True, help='output PGM')
    denoise.add_argument('--window', type=odd_pixels, help='adaptive threshold window')
    denoise.add_argument('--offset', type=float, help='adaptive threshold offset')
    denoise.add_argument('--min-area', type=int, help='smallest block area kept, in pixels')
    denoise.add_argument('--dilation-radius', type=int, help='noise map dilation radius')
    denoise.add_argument('--kernel', type=odd_pixels, help='averaging kernel size')
    denoise.add_argument('--polarity', choices=['dark', 'bright'], help='print polarity')
    denoise.add_argument('--emit-masks', help='directory for threshold/block/noise masks')
    denoise.add_argument('--register-to', help='reference PGM for translation alignment')

    train = commands.add_parser('train', help='train a forward or backward model')
    train.add_argument('--variant', choices=[v.value for v in Variant], help='model variant')
    train.add_argument('--manifest', help='JSON-lines manifest of impressions')
    train.add_argument('--epochs', type=int, help='training epochs')
    train.add_argument('--lr', type=float, help='Adam learning rate')
    train.add_argument('--batch-size', type=int, help='samples per step (default: full batch)')
    train.add_argument('--checkpoint', help='checkpoint path')
    train.add_argument('--checkpoint-every', type=int, help='epochs between checkpoints')
    train.add_argument('--loss-csv', help='per-epoch loss CSV path')
    train.add_argument('--preset', choices=['desk', 'full', 'tiny'], help='network size')

    predict = commands.add_parser('predict', help='forward prediction by delta weeks')
    predict.add_argument('--checkpoint', required=True, help='forward-variant checkpoint')
    predict.add_argument('--image', required=True, help='input PGM')
    predict.add_argument('--delta', required=True, type=even_weeks, help='weeks ahead (even)')
    predict.add_argument('--input-week', type=even_weeks, help='week of the input impression')
    predict.add_argument('--output', required=True, help='output PGM')

    reconstruct = commands.add_parser('reconstruct', help='reconstruct the outsole at a week')
    reconstruct.add_argument('--checkpoint', required=True, help='backward-variant checkpoint')
    reconstruct.add_argument('--image', required=True, help='input PGM')
    reconstruct.add_argument('--week', required=True, type=even_weeks, help='target week (even)')
    reconstruct.add_argument('--output', required=True, help='output PGM')

    evaluate_cmd = commands.add_parser('evaluate', help='score a checkpoint on its test split')
    evaluate_cmd.add_argument('--checkpoint', required=True, help='checkpoint path')
    evaluate_cmd.add_argument('--manifest', help='JSON-lines manifest of impressions')
    evaluate_cmd.add_argument('--report-csv', help='per-sample score CSV path')
    evaluate_cmd.add_argument('--min-delta', type=int, help='headline |delta t| threshold')

    gradcheck = commands.add_parser('gradcheck', help='finite-difference gradient suite')
    gradcheck.add_argument('--check-seed', type=int, default=0, help='seed for random inputs')
    return parser


def _overrides(args: argparse.Namespace) -> Dict[str, Dict[str, Any]]:
    get = lambda name: getattr(args, name, None)
    overrides = {
        'training': {'seed': args.seed, 'variant': get('variant'), 'epochs': get('epochs'),
                     'learning_rate': get('lr'), 'batch_size': get('batch_size'),
                     'checkpoint_path': get('checkpoint') if args.command == 'train' else None,
                     'checkpoint_every': get('checkpoint_every'),
                     'loss_csv_path': get('loss_csv')},
        'network': {'preset': get('preset')},
        'generator': {'seed': args.seed, 'height': get('height'), 'width': get('width'),
                      'block_count': get('blocks')},
        'metrics': {'min_delta': get('min_delta')},
        'output': {'format': args.format},
    }
    if get('noise_scale') is not None:
        overrides['generator']['noise'] = {'intensity': args.noise_scale}
    return overrides


def run(args: argparse.Namespace) -> int:
    app = ShoewearApp(args.config, _overrides(args))
    if args.command == 'generate':
        records = app.generate(args.out, args.downsample)
        print(f"Wrote {len(records)} clean impressions (and their noisy twins) to {args.out}")
    elif args.command == 'denoise':
        flags = {'window': args.window, 'offset': args.offset, 'min_area': args.min_area,
                 'dilation_radius': args.dilation_radius, 'kernel': args.kernel,
                 'polarity': args.polarity}
        result = app.denoise(args.input, args.output, flags, args.emit_masks, args.register_to)
        print(f"Repaired {int(result.noise_map.mask.sum())} noise pixels across "
              f"{result.noise_map.block_count} blocks")
    elif args.command == 'train':
        result = app.train(args.manifest)
        print(f"Final mean loss after {len(result.loss_curve)} epochs: {result.final_loss:.6g}")
    elif args.command == 'predict':
        app.predict(args.checkpoint, args.image, args.output, args.delta, args.input_week)
    elif args.command == 'reconstruct':
        app.reconstruct(args.checkpoint, args.image, args.output, args.week)
    elif args.command == 'evaluate':
        reports = app.evaluate(args.checkpoint, args.manifest)
        min_delta = app.config_loader.get_metrics_config().get('min_delta', 0)
        print("\nAll held-out pairs:")
        print(app.render(comparison_frame(reports)))
        print(f"\nPairs with |delta t| >= {min_delta}:")
        print(app.render(comparison_frame([r.filtered(min_delta) for r in reports])))
        if args.report_csv:
            reports[0].to_csv(args.report_csv)
    elif args.command == 'gradcheck':
        listing = app.gradcheck(args.check_seed)
        print(app.render(listing, floatfmt='.3e'))
        return EXIT_OK if listing['passed'].all() else EXIT_FAILURE
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    logging.basicConfig(level=args.log_level,
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    try:
        return run(args)
    except DivergenceError as e:
        logger.error("Training diverged: %s", e)
        return EXIT_DIVERGENCE
    except OSError as e:
        logger.error("I/O error: %s", e)
        return EXIT_IO
    except ShoewearError as e:
        logger.error("%s", e)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
