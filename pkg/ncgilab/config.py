"""Run configuration: built-in defaults, then a YAML file, then flags."""
import copy
import logging

import yaml

from ncgilab.exceptions import ConfigError


logger = logging.getLogger(__name__)

CAMPAIGNS = ('identities', 'transgression', 'residue', 'index', 'all')
FORMATS = ('json', 'csv', 'text')

DEFAULTS = {
    'model': 'circle-shifted',
    'campaigns': ['all'],
    'seed': 0,
    'tol_scale': 1.0,
    'out': 'reports',
    'formats': ['json', 'csv', 'text'],
    'log_level': 'WARNING',
    'contour': {
        'abscissa': 0.25,
        'method': 'residues',
        'epsabs': 1e-12,
        'epsrel': 1e-10,
        'limit': 200,
        'tol': 1e-10,
    },
    'laurent': {
        'radii': [0.05, 0.1],
        'points': 16,
        'max_order': 5,
    },
    'probes': {
        'window': 10000,
        'cap': 1000000,
        'count': 20,
    },
    'index': {
        'k0': 64,
        'windings': [-2, -1, 0, 1, 2, 3],
        'mus': [0.25, 0.5],
        'kernel_threshold': 1e-8,
        'gap': 1e-6,
    },
    'lattice': {
        'head': 256,
        'budget': 1 << 22,
    },
}

# Acceptance tolerances per check family, before tol_scale.
TOLERANCES = {
    'exact': 1e-12,
    'pdo': 1e-10,
    'quadrature': 1e-9,
    'anchor': 1e-8,
    'zeta': 1e-6,
    'bicomplex': 1e-9,
    'identity': 1e-5,
    'transgression': 1e-5,
    'dt_law': 1e-4,
    'endpoint': 1e-6,
    'residue': 1e-4,
    'pole': 1e-4,
    'index': 1e-3,
}


def _merge(base, override, path=''):
    for key, value in override.items():
        where = path + key
        if key not in base:
            raise ConfigError("Expected a known configuration key, but got {!r}".format(where))
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError("Expected a mapping for {!r}, but got {!r}".format(where, value))
            _merge(base[key], value, where + '.')
        elif value is not None:
            base[key] = value


class RunConfig(object):
    """A validated run configuration.

    Attribute access reaches the top-level keys; nested sections are plain
    dicts (``config.contour['abscissa']``).
    """

    def __init__(self, settings=None):
        data = copy.deepcopy(DEFAULTS)
        _merge(data, settings or {})
        self._data = data
        self.validate()

    def __getattr__(self, name):
        try:
            return self.__dict__['_data'][name]
        except KeyError:
            raise AttributeError(name)

    def __eq__(self, other):
        return isinstance(other, RunConfig) and self._data == other._data

    def to_dict(self):
        return copy.deepcopy(self._data)

    def updated(self, settings):
        data = self.to_dict()
        _merge(data, settings)
        return RunConfig(data)

    @property
    def selected_campaigns(self):
        """Campaign names in run order, ``all`` expanded."""
        if 'all' in self.campaigns:
            return [c for c in CAMPAIGNS if c != 'all']
        return [c for c in CAMPAIGNS if c in self.campaigns]

    def tolerance(self, family):
        return TOLERANCES[family] * self.tol_scale

    def validate(self):
        campaigns = self._data['campaigns']
        if isinstance(campaigns, str):
            campaigns = self._data['campaigns'] = [campaigns]
        if not campaigns:
            raise ConfigError("Expected at least one campaign, but got none")
        unknown = [c for c in campaigns if c not in CAMPAIGNS]
        if unknown:
            raise ConfigError(
                "Expected campaigns from {}, but got {}".format(CAMPAIGNS, unknown)
            )
        bad_formats = [f for f in self._data['formats'] if f not in FORMATS]
        if bad_formats:
            raise ConfigError("Expected formats from {}, but got {}".format(FORMATS, bad_formats))
        if self._data['contour']['method'] not in ('residues', 'quadrature'):
            raise ConfigError(
                "Expected contour method 'residues' or 'quadrature', but got {!r}".format(
                    self._data['contour']['method']
                )
            )
        if not 0 < self._data['contour']['abscissa'] < 0.5:
            raise ConfigError(
                "Expected a contour abscissa in (0, 1/2), but got {}".format(
                    self._data['contour']['abscissa']
                )
            )
        positives = [
            ('tol_scale', self._data['tol_scale']),
            ('contour.epsabs', self._data['contour']['epsabs']),
            ('contour.epsrel', self._data['contour']['epsrel']),
            ('contour.tol', self._data['contour']['tol']),
            ('index.kernel_threshold', self._data['index']['kernel_threshold']),
            ('index.gap', self._data['index']['gap']),
        ] + [('laurent.radii', r) for r in self._data['laurent']['radii']]
        for name, value in positives:
            if not value > 0:
                raise ConfigError("Expected a positive {}, but got {}".format(name, value))


def load_config(path=None, overrides=None):
    """Defaults, then the YAML file at ``path``, then ``overrides`` (flags).

    :raises ConfigError: on an unreadable file or invalid settings
    """
    config = RunConfig()
    if path is not None:
        try:
            with open(path) as f:
                settings = yaml.safe_load(f) or {}
        except (IOError, OSError, yaml.YAMLError) as e:
            raise ConfigError("Expected a readable YAML configuration at {}, but got {}".format(path, e))
        if not isinstance(settings, dict):
            raise ConfigError("Expected a mapping at the top of {}, but got {!r}".format(path, settings))
        config = config.updated(settings)
        logger.info('configuration read from %s', path)
    if overrides:
        config = config.updated({k: v for k, v in overrides.items() if v is not None})
    return config
