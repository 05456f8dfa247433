# This file is part of QRMWave
# License: GPLv3 or later, at your choice. See <http://www.gnu.org/licenses/gpl>

"""Experiment presets, the simulate-then-invert pipeline and its metrics.

Design notes:
- Presets are classes, looked up by lowercase class name, so a new experiment
  is just a new subclass of Preset (or of an existing preset, to make a variant)
- Presets know nothing about files, main and files modules do the I/O
- The forward simulation depends only on the preset, not on noise or seed,
  so sweeps compute it once and share it read-only between runs
"""

import concurrent.futures
import dataclasses
import logging
import math
import os
import typing as t

import numpy as np

from . import grid as grid_
from . import forward
from . import functional
from . import noise
from . import optimizer
from . import phantoms
from .functional import KIND

log = logging.getLogger(__name__)

# Line x1 = 0.2 runs through the nodal extremes of sine-full
CROSS_SECTION_X1 = 0.2

_presets = {}


class UnknownPreset(grid_.ConfigError):
    pass


def get_presets():
    if _presets:
        return _presets

    def list_classes(base):
        for cls in base.__subclasses__():
            _presets[cls.__name__.lower()] = cls
            list_classes(cls)
    list_classes(Preset)  # Root Base class
    return _presets


def load_preset(slug, **overrides) -> 'Preset':
    presetclass = get_presets().get(slug.lower(), None)
    if not presetclass:
        raise UnknownPreset("unknown test '{}', valid names: {}".format(
            slug, ", ".join(sorted(get_presets()))))
    preset = presetclass(**overrides)
    log.info("Loading preset '%s': %s", preset.name, preset.description)
    return preset


class Preset(object):
    """Base class for all experiments.

    Class attributes are the factory values, any of them can be overridden as
    keyword arguments:

    <extent>  side of the inverse domain Omega = (0, extent)^2
    <T>       final time; the forward domain is (-T, a + T)^2
    <h>, <ht> spatial and time steps, shared by forward and inverse grids
    <phantom> name of the exact unknown initial condition, see phantoms.PHANTOMS
    <kind>    KIND.PHI or KIND.PSI
    <noise>   noise levels run by default
    <ablate_init_penalty>  drop the known initial condition term from J
    <balanced>             use the balancing coefficients, all weights 1 if False
    <far_sides_zero>       data only on G1, G2 (Omega = SQ(a+T)), zero on G3, G4
    """
    description = ""
    extent = 4.0
    T = 3.0
    h = 0.1
    ht = 1 / 15
    a = 1.0
    phantom = 'zero'
    kind = KIND.PHI
    noise: t.Sequence[float] = (0.05,)
    ablate_init_penalty = False
    balanced = True
    far_sides_zero = True

    def __init__(self, **overrides):
        for key, val in overrides.items():
            attr = getattr(Preset, key, None)
            if key.startswith('_') or attr is None or callable(attr) or isinstance(attr, property):
                raise grid_.ConfigError("unknown preset option '{}'".format(key))
            setattr(self, key, val)
        if isinstance(self.kind, str):
            try:
                self.kind = KIND(self.kind.lower())
            except ValueError:
                raise grid_.ConfigError("kind must be 'phi' or 'psi', got '{}'".format(self.kind))
        self.noise = tuple(float(_) for _ in self.noise)
        self.validate()

    @property
    def name(self):
        return self.__class__.__name__.lower()

    def inverse_grid(self) -> grid_.SpaceTimeGrid:
        return grid_.square_grid(0, self.extent, self.T, self.h, self.ht, a=self.a)

    def forward_grid(self) -> grid_.SpaceTimeGrid:
        return grid_.square_grid(-self.T, self.a + self.T, self.T, self.h, self.ht, a=self.a)

    def weights(self, epsilon=functional.EPSILON) -> functional.Weights:
        if self.balanced:
            weights = functional.Weights.balanced(self.kind, epsilon)
        else:
            weights = functional.Weights(epsilon=epsilon)
        if self.ablate_init_penalty:
            weights = weights.replace(w_init=0.0)
        return weights

    def validate(self):
        """Check grids and the observation time before any computation."""
        if self.phantom not in phantoms.PHANTOMS:
            raise grid_.ConfigError("unknown phantom '{}', valid names: {}".format(
                self.phantom, ", ".join(sorted(phantoms.PHANTOMS))))
        for gamma in self.noise:
            noise.NoiseSpec(gamma)
        fg = self.forward_grid()
        self.inverse_grid()
        if not fg.cfl_ok:
            raise grid_.CflViolation("preset {}: lambda_x + lambda_y = {:g} > 1".format(
                self.name, fg.lam_x + fg.lam_y))
        if self.far_sides_zero:
            if self.extent < self.a + self.T - 1e-9:
                raise grid_.ConfigError("Omega must cover SQ(a + T) when far sides are zeroed")
            bound = self.a * math.sqrt(2) / (2 - math.sqrt(2))
            if not self.T > bound:
                log.warning("T = %g does not exceed a*sqrt(2)/(2 - sqrt(2)) = %g,"
                            " stability is not guaranteed", self.T, bound)
        elif self.T < self.extent * math.sqrt(2):
            log.warning("T = %g is below diam(Omega) = %g, the known initial condition"
                        " term is essential", self.T, self.extent * math.sqrt(2))

    def echo(self) -> t.Dict[str, t.Any]:
        """Flat description of every setting, for summaries."""
        return dict(
            test=self.name,
            extent=self.extent, T=self.T, h=self.h, ht=self.ht, a=self.a,
            phantom=self.phantom, kind=self.kind.value,
            ablate_init_penalty=self.ablate_init_penalty,
            balanced=self.balanced, far_sides_zero=self.far_sides_zero,
        )


class Test1(Preset):
    description = "phi-problem, sin(2 pi x1) sin(2 pi x2), Omega = (0,4)^2, T = 3"
    phantom = 'sine-full'
    noise = (0.25, 0.5)


class Test2(Preset):
    description = "psi-problem, shifted sine, Omega = (0,4)^2, T = 3"
    phantom = 'sine-shifted'
    kind = KIND.PSI
    noise = (0.05, 0.25, 0.5)


class Test3(Preset):
    description = "phi-problem in SQ(1), data on the whole boundary, T = 0.75 < diam"
    extent = 1.0
    T = 0.75
    h = 0.05
    ht = 0.025
    phantom = 'sine-full'
    noise = (0.25,)
    far_sides_zero = False


class Test4(Test3):
    description = "phi-problem in SQ(1), data on the whole boundary, T = 2 > diam"
    T = 2.0
    ht = 1 / 30


class Test5(Preset):
    description = "phi-problem, two discrete delta functions, Omega = (0,4)^2, T = 3"
    phantom = 'delta-pair'
    noise = (0.5,)


###############################################################################
# Pipeline

@dataclasses.dataclass
class Simulation:
    """Noise-free forward data of a preset."""
    forward_grid: grid_.SpaceTimeGrid
    inverse_grid: grid_.SpaceTimeGrid
    field: grid_.Field
    data: grid_.CauchyData
    exact: np.ndarray  # unknown initial condition on the inverse grid
    known: np.ndarray  # known initial condition on the inverse grid
    source: np.ndarray  # unknown initial condition on the forward grid
    far_max: float  # max |u| on G3, G4


def simulate(preset: Preset) -> Simulation:
    fg, ig = preset.forward_grid(), preset.inverse_grid()
    source = phantoms.make_phantom(preset.phantom, fg)
    if preset.kind is KIND.PHI:
        problem = forward.ForwardProblem(fg, phi=source)
    else:
        problem = forward.ForwardProblem(fg, psi=source)
    field = forward.solve_forward(problem)
    data = forward.extract_cauchy(field, fg, ig, far_sides_zero=preset.far_sides_zero)
    inside = forward.restrict(field, fg, ig).values
    far_max = 0.0
    for seg in (grid_.SEGMENT.G3, grid_.SEGMENT.G4):
        nodes = grid_.segment_nodes(ig, seg)
        far_max = max(far_max, float(np.max(np.abs(inside[:, nodes.rows, nodes.cols]))))
    return Simulation(
        forward_grid=fg,
        inverse_grid=ig,
        field=field,
        data=data,
        exact=forward.restrict_spatial(source, fg, ig),
        known=np.zeros(ig.spatial_shape),
        source=source,
        far_max=far_max,
    )


def forward_summary(simulation: Simulation) -> t.Dict[str, float]:
    """Sanity figures of the forward solve: amplitude, energy drift, far-side leakage."""
    energy = forward.discrete_energy(simulation.field, simulation.forward_grid)
    scale = float(np.max(np.abs(energy)))
    return dict(
        max_abs_u=float(np.max(np.abs(simulation.field.values))),
        energy_drift=float(np.max(energy) - np.min(energy)) / scale if scale else 0.0,
        far_sides_max=simulation.far_max,
    )


@dataclasses.dataclass
class Metrics:
    rel_l2_error: float
    max_value: float
    min_value: float
    cross_section: np.ndarray
    peak_locations: t.List[t.Tuple[float, float]]
    peak_heights: t.List[float]


@dataclasses.dataclass
class RunReport:
    preset: Preset
    gamma: float
    seed: int
    weights: functional.Weights
    cg: optimizer.CgConfig
    grid: grid_.SpaceTimeGrid
    exact: np.ndarray
    reconstruction: np.ndarray
    metrics: Metrics
    breakdown: functional.FunctionalBreakdown
    zero_breakdown: functional.FunctionalBreakdown
    history: optimizer.ConvergenceHistory

    def summary(self) -> t.Dict[str, t.Any]:
        """Flat key/value view of the configuration and results."""
        items = self.preset.echo()
        items.update(
            gamma=self.gamma, seed=self.seed,
            iterations=self.history.iterations,
            max_iters=self.cg.max_iters, restart_period=self.cg.restart_period,
            rel_l2_error=self.metrics.rel_l2_error,
            max_value=self.metrics.max_value,
            min_value=self.metrics.min_value,
            peaks=len(self.metrics.peak_heights),
        )
        items.update(dataclasses.asdict(self.weights))
        items.update(('J_' + k, v) for k, v in self.breakdown.as_dict().items())
        items['J_zero'] = self.zero_breakdown.total
        return items


def reconstructed_init(u, grid: grid_.SpaceTimeGrid, kind: KIND) -> np.ndarray:
    """Unknown initial condition read off a minimizer."""
    if kind is KIND.PHI:
        return u[0].copy()
    return functional.initial_velocity(u, grid)


def cross_section(values, grid: grid_.SpaceTimeGrid, x1_value=CROSS_SECTION_X1) -> np.ndarray:
    """Nodal values along the line x1 = <x1_value>, one per x2 row."""
    return np.asarray(values)[:, grid.column(x1_value)].copy()


def nearest_x1(grid: grid_.SpaceTimeGrid, x1_value=CROSS_SECTION_X1) -> float:
    """Node column closest to <x1_value>, for grids that miss the line."""
    return float(grid.x1[np.argmin(np.abs(grid.x1 - x1_value))])


def peak_metrics(values, grid: grid_.SpaceTimeGrid, expected_nodes=()
                 ) -> t.Tuple[t.List[t.Tuple[float, float]], t.List[float]]:
    """Local maxima above half the global maximum, as (x1, x2) and heights."""
    values = np.asarray(values, dtype=float)
    top = float(np.max(values))
    if not top > 0:
        return [], []
    padded = np.pad(values, 1, constant_values=-np.inf)
    ny, nx = values.shape
    peak = values > 0.5 * top
    for dm in (-1, 0, 1):
        for dn in (-1, 0, 1):
            if dm or dn:
                peak &= values >= padded[1 + dm:1 + dm + ny, 1 + dn:1 + dn + nx]
    rows, cols = np.nonzero(peak)
    locations = [(float(grid.x1[n]), float(grid.x2[m])) for m, n in zip(rows, cols)]
    heights = [float(values[m, n]) for m, n in zip(rows, cols)]

    for x1, x2 in expected_nodes:
        node = grid.row(x2), grid.column(x1)
        if not peak[node]:
            log.info("No peak at expected node (%g, %g), value there %g",
                     x1, x2, values[node])
    return locations, heights


def compute_metrics(reconstruction, exact, grid: grid_.SpaceTimeGrid,
                    expected_nodes=()) -> Metrics:
    norm = grid_.discrete_l2_sq(exact, grid)
    error = grid_.discrete_l2_sq(reconstruction - exact, grid)
    locations, heights = peak_metrics(reconstruction, grid, expected_nodes)
    return Metrics(
        rel_l2_error=math.sqrt(error / norm) if norm > 0 else math.sqrt(error),
        max_value=float(np.max(reconstruction)),
        min_value=float(np.min(reconstruction)),
        cross_section=cross_section(reconstruction, grid, nearest_x1(grid)),
        peak_locations=locations,
        peak_heights=heights,
    )


def run_experiment(preset: Preset, seed=0, gamma=None, weights=None, cg=None,
                   simulation: t.Optional[Simulation] = None,
                   data: t.Optional[grid_.CauchyData] = None) -> RunReport:
    """Phantom -> forward solve -> Cauchy data -> noise -> CG -> metrics.

    <gamma> defaults to the first noise level of the preset. A precomputed
    <simulation> may be shared between runs. Given <data>, the simulation and
    noise steps are skipped and <data> is inverted as is.
    """
    gamma = preset.noise[0] if gamma is None else float(gamma)
    weights = weights or preset.weights()
    cg = cg or optimizer.CgConfig()

    if data is None:
        simulation = simulation or simulate(preset)
        data = noise.add_noise(simulation.data, noise.NoiseSpec(gamma, seed))
        ig, exact, known = simulation.inverse_grid, simulation.exact, simulation.known
    else:
        ig = preset.inverse_grid()
        exact = phantoms.make_phantom(preset.phantom, ig)
        known = np.zeros(ig.spatial_shape)

    spec = functional.FunctionalSpec(ig, preset.kind, weights, data, known)
    u, history = optimizer.minimize(spec, cg)
    reconstruction = reconstructed_init(u, ig, preset.kind)

    breakdown = functional.evaluate(u, spec)
    zero_breakdown = functional.evaluate(np.zeros(ig.shape), spec)
    if breakdown.total > zero_breakdown.total:
        log.warning("Minimizer J = %g exceeds J(0) = %g", breakdown.total, zero_breakdown.total)

    expected = phantoms.DELTA_CENTERS if preset.phantom == 'delta-pair' else ()
    metrics = compute_metrics(reconstruction, exact, ig, expected)
    log.info("%s gamma=%g seed=%d: J=%.4e, rel. error %.4f, max %.4f, min %.4f",
             preset.name, gamma, seed, breakdown.total, metrics.rel_l2_error,
             metrics.max_value, metrics.min_value)
    return RunReport(
        preset=preset, gamma=gamma, seed=seed, weights=weights, cg=cg, grid=ig,
        exact=exact, reconstruction=reconstruction, metrics=metrics,
        breakdown=breakdown, zero_breakdown=zero_breakdown, history=history,
    )


###############################################################################
# Sweeps

@dataclasses.dataclass
class SweepReport:
    preset: Preset
    runs: t.List[RunReport]

    def rows(self):
        """(gamma, seed, rel_l2_error, max, min) per run, in run order."""
        for run in self.runs:
            yield (run.gamma, run.seed, run.metrics.rel_l2_error,
                   run.metrics.max_value, run.metrics.min_value)

    def mean_errors(self) -> t.Dict[float, float]:
        errors: t.Dict[float, t.List[float]] = {}
        for run in self.runs:
            errors.setdefault(run.gamma, []).append(run.metrics.rel_l2_error)
        return {gamma: float(np.mean(values)) for gamma, values in errors.items()}


def worker_count(jobs: int) -> int:
    try:
        cap = int(os.environ.get('QRM_THREADS', 0)) or (os.cpu_count() or 1)
    except ValueError:
        log.warning("Ignoring invalid QRM_THREADS=%r", os.environ['QRM_THREADS'])
        cap = os.cpu_count() or 1
    return max(1, min(cap, jobs))


def noise_sweep(preset: Preset, gammas, seeds, weights=None, cg=None,
                simulation: t.Optional[Simulation] = None) -> SweepReport:
    """One run per (gamma, seed), mean error per gamma.

    Runs are independent and may use worker threads; the result order and
    values do not depend on the thread count.
    """
    gammas, seeds = list(gammas), list(seeds)
    if not gammas:
        raise grid_.ConfigError("noise sweep needs at least one noise level")
    if not seeds:
        raise grid_.ConfigError("noise sweep needs at least one seed")
    simulation = simulation or simulate(preset)
    jobs = [(gamma, seed) for gamma in gammas for seed in seeds]

    def job(args):
        gamma, seed = args
        return run_experiment(preset, seed, gamma, weights, cg, simulation)

    workers = worker_count(len(jobs))
    log.info("Sweeping %s over %d runs with %d worker(s)", preset.name, len(jobs), workers)
    if workers == 1:
        runs = [job(_) for _ in jobs]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=workers) as pool:
            runs = list(pool.map(job, jobs))
    report = SweepReport(preset, runs)
    for gamma, mean in report.mean_errors().items():
        log.info("gamma=%g: mean rel. error %.4f over %d seed(s)", gamma, mean, len(seeds))
    return report
