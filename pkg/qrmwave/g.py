# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Global constants, paths and run options.

Globals are basically divided in 3 groups:

- Constants:
    In UPPERCASE. Factory defaults of the method live in the modules that use
    them (functional.EPSILON, optimizer.ITERS, ...) and are mirrored here so
    the command line help and the config template have a single place to look.

- Paths:
    Defined here and set only once, so also in UPPERCASE. The user config
    directory is only looked up, never created.

- Options:
    The group that gives this module a good and fair reason to exist. A run is
    described by a RunConfig, built in layers: factory defaults of the chosen
    preset, then the user config file, then config files named on the command
    line, then command line flags. Later layers win.
"""

import configparser
import dataclasses
import logging
import os.path
import time
import typing as t

import xdg.BaseDirectory

from . import experiments
from . import functional
from . import grid as grid_
from . import noise
from . import optimizer

log = logging.getLogger(__name__)
start_time = time.time()  # for profiling

# General
VERSION = "1.0"
APPNAME = 'qrmwave'
SECTION = 'run'

# Paths
PKGDIR = os.path.abspath(os.path.dirname(__file__) or '.')
DATADIR = os.path.join(PKGDIR, 'data')
TEMPLATE = os.path.join(DATADIR, 'config', 'config.template.ini')
CONFIGDIR = os.path.join(xdg.BaseDirectory.xdg_config_home, APPNAME)
CONFIGFILE = os.path.join(CONFIGDIR, '{}.conf'.format(APPNAME))
RUNCONFIG = 'config.ini'  # echo of the options, written next to every simulation

# Method
TEST = 'test1'
EPSILON = functional.EPSILON
W_TRACE_PHI = functional.W_TRACE_PHI
W_INIT_PSI = functional.W_INIT_PSI
ITERS = optimizer.ITERS
RESTART = optimizer.RESTART

# Options
debug = False
profile = False


@dataclasses.dataclass
class RunConfig:
    """Every option of a run. Weights left as None take the preset's values."""
    test: str = TEST
    extent: float = 4.0
    T: float = 3.0
    h: float = 0.1
    ht: float = 1 / 15
    a: float = 1.0
    phantom: str = 'sine-full'
    kind: str = 'phi'
    noise: t.List[float] = dataclasses.field(default_factory=lambda: [0.05])
    ablate_init_penalty: bool = False
    balanced: bool = True
    far_sides_zero: bool = True
    seed: int = 0
    seeds: int = 1
    epsilon: float = EPSILON
    w_trace: t.Optional[float] = None
    w_flux: t.Optional[float] = None
    w_init: t.Optional[float] = None
    iters: int = ITERS
    restart: int = RESTART
    log_every: int = 50

    @classmethod
    def from_preset(cls, name) -> 'RunConfig':
        presetclass = experiments.get_presets().get(name.lower())
        if presetclass is None:
            raise experiments.UnknownPreset("unknown test '{}', valid names: {}".format(
                name, ", ".join(sorted(experiments.get_presets()))))
        return cls(
            test=name.lower(),
            extent=presetclass.extent, T=presetclass.T,
            h=presetclass.h, ht=presetclass.ht, a=presetclass.a,
            phantom=presetclass.phantom, kind=presetclass.kind.value,
            noise=list(presetclass.noise),
            ablate_init_penalty=presetclass.ablate_init_penalty,
            balanced=presetclass.balanced,
            far_sides_zero=presetclass.far_sides_zero,
        )

    def preset(self) -> experiments.Preset:
        return experiments.load_preset(
            self.test,
            extent=self.extent, T=self.T, h=self.h, ht=self.ht, a=self.a,
            phantom=self.phantom, kind=self.kind, noise=self.noise,
            ablate_init_penalty=self.ablate_init_penalty,
            balanced=self.balanced, far_sides_zero=self.far_sides_zero,
        )

    def weights(self, preset: experiments.Preset = None) -> functional.Weights:
        weights = (preset or self.preset()).weights(self.epsilon)
        changes = {name: getattr(self, name) for name in ('w_trace', 'w_flux', 'w_init')
                   if getattr(self, name) is not None}
        if self.ablate_init_penalty and changes.pop('w_init', 0):
            log.warning("Ignoring w_init = %g, the initial condition penalty is ablated",
                        self.w_init)
        return weights.replace(**changes)

    def cg(self) -> optimizer.CgConfig:
        return optimizer.CgConfig(max_iters=self.iters, restart_period=self.restart,
                                  log_every=self.log_every)

    def validate(self):
        """Raise ConfigError (or CflViolation) on anything a run would reject."""
        preset = self.preset()
        self.weights(preset)
        self.cg()
        if not self.noise:
            raise grid_.ConfigError("at least one noise level is needed")
        for gamma in self.noise:
            noise.NoiseSpec(gamma, self.seed)
        if len(set(self.noise)) < len(self.noise):
            raise grid_.ConfigError("duplicate noise level in {}".format(self.noise))
        if self.seeds < 1:
            raise grid_.ConfigError("seeds must be >= 1, got {}".format(self.seeds))
        return preset

    def items(self) -> t.Dict[str, str]:
        """Options as config file strings, None values left out."""
        items = {}
        for name, value in dataclasses.asdict(self).items():
            if value is None:
                continue
            if isinstance(value, list):
                items[name] = ", ".join(repr(float(_)) for _ in value)
            elif isinstance(value, float):
                items[name] = repr(value)
            else:
                items[name] = str(value)
        return items


_TYPES = {_.name: _.type for _ in dataclasses.fields(RunConfig)}


def parse_option(name, text):
    """Convert config string <text> to the type of option <name>."""
    if name not in _TYPES:
        raise grid_.ConfigError("unknown option '{}', valid options: {}".format(
            name, ", ".join(_TYPES)))
    type_ = _TYPES[name]
    text = text.strip()
    try:
        if   type_ is bool:             return configparser.ConfigParser.BOOLEAN_STATES[text.lower()]
        elif type_ is int:              return int(text)
        elif type_ is float:            return float(text)
        elif type_ == t.List[float]:    return [float(_) for _ in text.split(',') if _.strip()]
        elif type_ == t.Optional[float]: return None if text.lower() in ('', 'none') else float(text)
        else:                            return text
    except (KeyError, ValueError):
        raise grid_.ConfigError("invalid value for '{}': {!r}".format(name, text))


def read_config(path) -> t.Dict[str, t.Any]:
    """Typed options set in config file <path>."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str  # 'T' and 't' differ

    log.debug("Loading config from: %s", path)
    try:
        if not cp.read(path, encoding='utf-8'):
            raise grid_.ConfigError("config file not found: {}".format(path))
    except configparser.Error as e:
        raise grid_.ConfigError("{} in {}".format(e.message, path))

    for section in cp.sections():
        if section != SECTION:
            raise grid_.ConfigError("unknown section [{}] in {}, only [{}] is allowed".format(
                section, path, SECTION))
    if not cp.has_section(SECTION):
        log.warning("Section [%s] not found in %s", SECTION, path)
        return {}
    return {key: parse_option(key, text) for key, text in cp.items(SECTION)}


def write_config(path, options: RunConfig):
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    cp[SECTION] = options.items()
    with open(path, 'w', encoding='utf-8', newline='\n') as fp:
        cp.write(fp)


def load_options(configs=(), overrides=None) -> t.Tuple[RunConfig, experiments.Preset]:
    """Build and validate the options of a run.

    <configs> are config file paths, lowest precedence first, all read after
    the user config file. <overrides> are command line values, None meaning
    not given.
    """
    layers = []
    if os.path.exists(CONFIGFILE):
        try:
            layers.append(read_config(CONFIGFILE))
        except grid_.ConfigError as e:
            log.warning("Error reading config: %s", e)
    for path in configs:
        if path:
            layers.append(read_config(path))
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    layers.append(overrides)

    # The preset must be known before its factory defaults are layered
    test = TEST
    for layer in layers:
        test = layer.get('test', test)

    options = RunConfig.from_preset(test)
    for layer in layers:
        for key, value in layer.items():
            setattr(options, key, value)
    log.debug(options)
    return options, options.validate()


def runtime(start=0):
    if not start:
        start = start_time
    return "{:.0f}".format(1000 * (time.time() - start))
