import copy
import os
from typing import Any, Dict, Optional, Union

import yaml

from shoewear.errors import ConfigError

DATA_SOURCES = ['manifest', 'synthetic']
OUTPUT_FORMATS = ['table', 'csv']
REQUIRED_SECTIONS = ['data_source', 'network', 'training', 'denoise', 'generator', 'metrics',
                     'cache', 'output']

DEFAULT_CONFIG: Dict[str, Any] = {
    'data_source': {
        'default': 'manifest',
        'manifest': {'path': 'data/manifest.jsonl', 'denoise_raw': True},
        'synthetic': {'downsample': 4},
    },
    'network': {'preset': 'desk'},
    'training': {
        'variant': 'forward',
        'learning_rate': 1e-5,
        'epochs': 2000,
        'batch_size': None,
        'seed': 0,
        'checkpoint_every': 500,
        'log_every': 100,
    },
    'denoise': {
        'window': 35,
        'offset': 0.02,
        'min_area': 30,
        'dilation_radius': 1,
        'kernel': 5,
        'polarity': 'dark',
    },
    'generator': {'seed': 0, 'height': 640, 'width': 256, 'block_count': 63, 'noise': {}},
    'metrics': {'ssim_window': 8, 'min_delta': 10},
    'cache': {'enabled': True, 'directory': 'cache', 'expiry_days': 7},
    'output': {'directory': 'results', 'format': 'table'},
}


class ConfigLoader:
    def __init__(self, config_input: Optional[Union[str, Dict[str, Any]]] = None):
        """Initialize the configuration loader.

        Args:
            config_input: Either a path to a YAML config file or a dictionary with configuration
        """
        self.config_path = config_input if isinstance(config_input, (str, os.PathLike)) else None
        self.config = (self._load_config() if self.config_path is not None
                       else config_input if isinstance(config_input, dict)
                       else self._load_default_config())
        self._validate_config()

    def _load_config(self) -> Dict[str, Any]:
        """Load configuration from YAML file."""
        try:
            with open(self.config_path, 'r') as f:
                return yaml.safe_load(f)
        except FileNotFoundError:
            raise FileNotFoundError(f"Configuration file not found at {self.config_path}")
        except yaml.YAMLError as e:
            raise ConfigError(f"Error parsing configuration file: {e}")

    def _load_default_config(self) -> Dict[str, Any]:
        """Load the packaged config.yaml, falling back to the built-in defaults."""
        default_config_path = os.path.join(os.path.dirname(__file__), "config.yaml")
        try:
            with open(default_config_path, 'r') as f:
                return yaml.safe_load(f)
        except (FileNotFoundError, yaml.YAMLError):
            return copy.deepcopy(DEFAULT_CONFIG)

    def _validate_config(self) -> None:
        """Validate the configuration has all required sections and fields."""
        if not isinstance(self.config, dict):
            raise ConfigError("Configuration must be a dictionary")

        for section in REQUIRED_SECTIONS:
            if section not in self.config:
                raise ConfigError(f"Missing required section '{section}' in config")

        source = self.config['data_source']
        if 'default' not in source:
            raise ConfigError("Missing default data source in config")
        if source['default'] not in DATA_SOURCES:
            raise ConfigError(f"Invalid default data source '{source['default']}', "
                              f"expected one of {DATA_SOURCES}")

        training = self.config['training']
        for field in ['variant', 'learning_rate', 'epochs', 'seed']:
            if field not in training:
                raise ConfigError(f"Missing required training field '{field}' in config")

        cache = self.config['cache']
        for field in ['enabled', 'directory', 'expiry_days']:
            if field not in cache:
                raise ConfigError(f"Missing required cache field '{field}' in config")

        output = self.config['output']
        if 'directory' not in output:
            raise ConfigError("Missing output directory in config")
        if output.get('format', 'table') not in OUTPUT_FORMATS:
            raise ConfigError(f"Invalid output format '{output['format']}', "
                              f"expected one of {OUTPUT_FORMATS}")

    def merged(self, overrides: Dict[str, Dict[str, Any]]) -> 'ConfigLoader':
        """A new loader with the non-None ``overrides`` applied section by section."""
        config = copy.deepcopy(self.config)
        for section, values in overrides.items():
            target = config.setdefault(section, {})
            for key, value in values.items():
                if value is not None:
                    target[key] = value
        return ConfigLoader(config)

    def dump(self) -> str:
        return yaml.safe_dump(self.config, sort_keys=True)

    def get_data_source_config(self) -> Dict[str, Any]:
        return self.config['data_source']

    def get_network_config(self) -> Dict[str, Any]:
        return self.config['network']

    def get_training_config(self) -> Dict[str, Any]:
        return self.config['training']

    def get_denoise_config(self) -> Dict[str, Any]:
        return self.config['denoise']

    def get_generator_config(self) -> Dict[str, Any]:
        return self.config['generator']

    def get_metrics_config(self) -> Dict[str, Any]:
        return self.config['metrics']

    def get_cache_config(self) -> Dict[str, Any]:
        return self.config['cache']

    def get_output_config(self) -> Dict[str, Any]:
        return self.config['output']
