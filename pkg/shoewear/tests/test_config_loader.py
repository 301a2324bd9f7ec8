import copy

import pytest
import yaml

from shoewear.config.config_loader import DEFAULT_CONFIG, ConfigLoader
from shoewear.errors import ConfigError


@pytest.fixture
def test_config():
    config = copy.deepcopy(DEFAULT_CONFIG)
    config['training'].update({'variant': 'backward', 'learning_rate': 1e-3, 'epochs': 50})
    config['cache'].update({'directory': 'test_cache', 'expiry_days': 3})
    return config


@pytest.fixture
def test_config_file(tmp_path, test_config):
    """Create a temporary config file for testing."""
    config_file = tmp_path / "test_config.yaml"
    with open(config_file, 'w') as f:
        yaml.dump(test_config, f)
    return str(config_file)


def test_config_loader_initialization(test_config_file):
    """Test that ConfigLoader initializes correctly."""
    loader = ConfigLoader(test_config_file)
    assert loader.config is not None
    for section in ['data_source', 'network', 'training', 'denoise', 'cache', 'output']:
        assert section in loader.config


def test_packaged_defaults():
    """Test that the packaged config.yaml loads and validates."""
    loader = ConfigLoader()
    assert loader.get_training_config()['variant'] == 'forward'
    assert loader.get_training_config()['learning_rate'] == pytest.approx(1e-5)
    assert loader.get_denoise_config()['window'] == 35
    assert loader.get_generator_config()['block_count'] == 63


def test_dict_input(test_config):
    """Test that a configuration dictionary is used as given."""
    loader = ConfigLoader(test_config)
    assert loader.get_network_config()['preset'] == 'desk'


def test_get_training_config(test_config_file):
    """Test retrieving training configuration."""
    config = ConfigLoader(test_config_file).get_training_config()
    assert config['variant'] == 'backward'
    assert config['learning_rate'] == 1e-3
    assert config['epochs'] == 50


def test_get_cache_config(test_config_file):
    """Test retrieving cache configuration."""
    config = ConfigLoader(test_config_file).get_cache_config()
    assert config['enabled'] is True
    assert config['directory'] == 'test_cache'
    assert config['expiry_days'] == 3


def test_missing_config_file():
    """Test handling of missing config file."""
    with pytest.raises(FileNotFoundError):
        ConfigLoader("nonexistent.yaml")


def test_invalid_config_format(tmp_path):
    """Test handling of invalid YAML format."""
    config_file = tmp_path / "invalid_config.yaml"
    with open(config_file, 'w') as f:
        f.write("invalid: yaml: content")
    with pytest.raises(ValueError):
        ConfigLoader(str(config_file))


def test_missing_required_sections(tmp_path):
    """Test handling of missing required sections."""
    config_file = tmp_path / "incomplete_config.yaml"
    with open(config_file, 'w') as f:
        yaml.dump({'data_source': {'default': 'manifest'}}, f)
    with pytest.raises(ConfigError):
        ConfigLoader(str(config_file))


@pytest.mark.parametrize('section,field', [('training', 'learning_rate'), ('training', 'variant'),
                                           ('cache', 'expiry_days'), ('data_source', 'default')])
def test_missing_required_fields(test_config, section, field):
    """Test handling of missing required fields."""
    del test_config[section][field]
    with pytest.raises(ConfigError):
        ConfigLoader(test_config)


def test_invalid_data_source(test_config):
    """Test that an unknown default data source is rejected."""
    test_config['data_source']['default'] = 'ftp'
    with pytest.raises(ConfigError):
        ConfigLoader(test_config)


@pytest.mark.parametrize('field,value', [('format', 'xml'), ('directory', None)])
def test_invalid_output_section(test_config, field, value):
    """Test that an unknown output format or a missing output directory is rejected."""
    if value is None:
        del test_config['output'][field]
    else:
        test_config['output'][field] = value
    with pytest.raises(ConfigError):
        ConfigLoader(test_config)


def test_get_output_config(test_config):
    """Test retrieving output configuration."""
    config = ConfigLoader(test_config).get_output_config()
    assert config['directory'] == 'results'
    assert config['format'] == 'table'


def test_merged_applies_overrides(test_config):
    """Test that overrides form a new loader and None values are skipped."""
    loader = ConfigLoader(test_config)
    merged = loader.merged({'training': {'epochs': 5, 'seed': None}, 'denoise': {'kernel': 7}})
    assert merged.get_training_config()['epochs'] == 5
    assert merged.get_training_config()['seed'] == 0
    assert merged.get_denoise_config()['kernel'] == 7
    assert loader.get_training_config()['epochs'] == 50


def test_dump_round_trips(test_config):
    """Test that the dumped YAML reloads to the same configuration."""
    loader = ConfigLoader(test_config)
    assert yaml.safe_load(loader.dump()) == loader.config
