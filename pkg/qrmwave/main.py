# qrmwave - Initial conditions of the wave equation from lateral Cauchy data
#
#    This program is free software: you can redistribute it and/or modify
#    it under the terms of the GNU General Public License as published by
#    the Free Software Foundation, either version 3 of the License, or
#    (at your option) any later version.
#
#    This program is distributed in the hope that it will be useful,
#    but WITHOUT ANY WARRANTY; without even the implied warranty of
#    MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
#    GNU General Public License for more details.
#
#    You should have received a copy of the GNU General Public License
#    along with this program. See <http://www.gnu.org/licenses/gpl.html>

"""Main module and entry point.

Artifact tree written by the commands:

    <out>/config.ini                  options of the run, reread by reconstruct
    <out>/phantom.csv                 exact initial condition, forward grid
    <out>/exact.csv                   exact initial condition, inverse grid
    <out>/forward_summary.ini
    <out>/data/clean/G1_f.csv ...     noise-free Cauchy data
    <out>/data/noise-<gamma>/...      noisy Cauchy data, one dir per level
    <out>/gamma-<gamma>/...           reconstruction, history, metrics
    <out>/reconstruction/...         default output of reconstruct
    <out>/MANIFEST.sha256
"""

import argparse
import logging
import os
import sys

from . import experiments
from . import files
from . import g
from . import grid as grid_
from . import noise

log = logging.getLogger(__name__)

SUMMARIES = ('forward_summary.ini', 'summary.ini', 'sweep_summary.ini')


def noise_dir(root, gamma):
    return os.path.join(root, 'data', 'noise-{!r}'.format(float(gamma)))


def gamma_dir(root, gamma):
    return os.path.join(root, 'gamma-{!r}'.format(float(gamma)))


###############################################################################
# Commands

def simulate(options: g.RunConfig, preset: experiments.Preset, out) -> experiments.Simulation:
    sim = experiments.simulate(preset)
    os.makedirs(out, exist_ok=True)
    g.write_config(os.path.join(out, g.RUNCONFIG), options)
    files.write_field(os.path.join(out, 'phantom.csv'), sim.source, sim.forward_grid, 'phantom')
    files.write_field(os.path.join(out, 'exact.csv'), sim.exact, sim.inverse_grid, 'exact')
    files.write_summary(os.path.join(out, 'forward_summary.ini'),
                        experiments.forward_summary(sim), 'forward')
    files.write_cauchy(os.path.join(out, 'data', 'clean'), sim.data)
    for gamma in options.noise:
        noisy = noise.add_noise(sim.data, noise.NoiseSpec(gamma, options.seed))
        files.write_cauchy(noise_dir(out, gamma), noisy)
    log.info("Simulated %s into %s", preset.name, out)
    return sim


def write_report(report: experiments.RunReport, dirname):
    grid, metrics = report.grid, report.metrics
    files.write_field(os.path.join(dirname, 'reconstruction.csv'),
                      report.reconstruction, grid, 'reconstruction')
    files.write_history(os.path.join(dirname, 'history.csv'), report.history)
    files.write_csv(os.path.join(dirname, 'cross_section.csv'),
                    ('x2', 'reconstruction', 'exact'),
                    zip(grid.x2.tolist(), metrics.cross_section.tolist(),
                        experiments.cross_section(report.exact, grid).tolist()))
    files.write_csv(os.path.join(dirname, 'peaks.csv'), ('x1', 'x2', 'height'),
                    ((x1, x2, h) for (x1, x2), h in zip(metrics.peak_locations,
                                                        metrics.peak_heights)))
    files.write_summary(os.path.join(dirname, 'summary.ini'), report.summary())


def reconstruct(options: g.RunConfig, preset: experiments.Preset, data_dir, out):
    weights, cg = options.weights(preset), options.cg()
    reports = []
    for gamma in options.noise:
        data = files.read_cauchy(noise_dir(data_dir, gamma))
        report = experiments.run_experiment(preset, options.seed, gamma, weights, cg, data=data)
        write_report(report, gamma_dir(out, gamma))
        reports.append(report)
    return reports


def cmd_simulate(args):
    options, preset = g.load_options([args.config], overrides(args))
    out = args.out or os.path.join('runs', preset.name)
    simulate(options, preset, out)
    files.write_manifest(out)


def cmd_reconstruct(args):
    options, preset = g.load_options(
        [os.path.join(args.data_dir, g.RUNCONFIG), args.config], overrides(args))
    out = args.out or os.path.join(args.data_dir, 'reconstruction')
    reconstruct(options, preset, args.data_dir, out)
    files.write_manifest(out)


def cmd_run_test(args):
    options, preset = g.load_options([args.config], dict(overrides(args), test=args.name))
    out = args.out or os.path.join('runs', preset.name)
    simulate(options, preset, out)
    for report in reconstruct(options, preset, out, out):
        print("{} gamma={:g} seed={}: rel_l2_error={:.4f} max={:.4f} min={:.4f}".format(
            preset.name, report.gamma, report.seed, report.metrics.rel_l2_error,
            report.metrics.max_value, report.metrics.min_value))
    files.write_manifest(out)


def cmd_sweep(args):
    options, preset = g.load_options([args.config], overrides(args))
    out = args.out or os.path.join('runs', preset.name + '-sweep')
    seeds = range(options.seed, options.seed + options.seeds)
    report = experiments.noise_sweep(preset, options.noise, seeds,
                                     options.weights(preset), options.cg())
    os.makedirs(out, exist_ok=True)
    g.write_config(os.path.join(out, g.RUNCONFIG), options)
    files.write_csv(os.path.join(out, 'sweep.csv'),
                    ('gamma', 'seed', 'rel_l2_error', 'max', 'min'), report.rows())
    files.write_summary(os.path.join(out, 'sweep_summary.ini'), {
        'mean_rel_l2_error_{!r}'.format(float(gamma)): mean
        for gamma, mean in report.mean_errors().items()
    }, 'sweep')
    files.write_manifest(out)


def cmd_report(args):
    checked = bad = 0
    for dirpath, _, filenames in sorted(os.walk(args.run_dir)):
        for name in SUMMARIES:
            if name in filenames:
                print("# {}".format(os.path.join(dirpath, name)))
                for section, items in files.read_summary(os.path.join(dirpath, name)).items():
                    print("[{}]".format(section))
                    for key, value in items.items():
                        print("{} = {}".format(key, value))
        if files.MANIFEST in filenames:
            mismatches = files.verify_manifest(dirpath)
            checked += 1
            bad += len(mismatches)
    if not checked:
        raise grid_.DataError("no {} found under {}".format(files.MANIFEST, args.run_dir))
    if bad:
        raise grid_.DataError("{} artifact(s) under {} fail their checksum".format(
            bad, args.run_dir))
    print("All checksums OK")


###############################################################################
# Command line

def noise_list(text):
    try:
        gammas = g.parse_option('noise', text)
    except grid_.ConfigError as e:
        raise argparse.ArgumentTypeError(str(e))
    if not gammas:
        raise argparse.ArgumentTypeError("empty noise list")
    if len(set(gammas)) < len(gammas):
        raise argparse.ArgumentTypeError("duplicate noise level in {!r}".format(text))
    return gammas


def overrides(args):
    return dict(
        test=getattr(args, 'test', None),
        seed=args.seed,
        seeds=getattr(args, 'seeds', None),
        noise=args.noise,
        ablate_init_penalty=args.ablate_init_penalty,
        epsilon=args.epsilon,
        w_trace=args.w_trace,
        w_flux=args.w_flux,
        w_init=args.w_init,
        iters=args.iters,
    )


def parse_args(args=None):
    common = argparse.ArgumentParser(add_help=False)
    group = common.add_argument_group("Run options")
    group.add_argument('--config', metavar="PATH", help="Options file, [run] section")
    group.add_argument('--out', metavar="DIR", help="Output directory")
    group.add_argument('--seed', type=int, help="Noise seed, unsigned 64-bit")
    group.add_argument('--noise', type=noise_list, metavar="LIST",
                       help="Comma-separated noise levels, 0.05 for 5%%")
    group.add_argument('--ablate-init-penalty', action='store_const', const=True,
                       help="Drop the known initial condition term")
    group.add_argument('--epsilon', type=float, metavar="REAL",
                       help="Regularization parameter [default: {}]".format(g.EPSILON))
    group.add_argument('--w-trace', type=float, metavar="REAL", help="Trace misfit weight")
    group.add_argument('--w-flux', type=float, metavar="REAL", help="Normal derivative weight")
    group.add_argument('--w-init', type=float, metavar="REAL",
                       help="Initial condition penalty weight")
    group.add_argument('--iters', type=int, metavar="N",
                       help="CG iterations [default: {}]".format(g.ITERS))
    group = common.add_argument_group("Logging")
    group.add_argument('--verbose', '-v', action='store_true', help="Log progress")
    group.add_argument('--debug', action='store_true', help="Log everything")
    group.add_argument('--profile', action='store_true', help="Log run times")

    parser = argparse.ArgumentParser(
        prog=g.APPNAME,
        description="Recover an initial condition of the 2D wave equation"
                    " from lateral Cauchy data by quasi-reversibility.")
    parser.add_argument('--version', action='version', version=g.VERSION)
    subparsers = parser.add_subparsers(dest='command', metavar="COMMAND", required=True)

    sub = subparsers.add_parser('simulate', parents=[common],
                                help="Forward solve and write clean and noisy data")
    sub.add_argument('--test', help="Preset [default: {}]".format(g.TEST))
    sub.set_defaults(func=cmd_simulate)

    sub = subparsers.add_parser('reconstruct', parents=[common],
                                help="Invert the noisy data written by simulate")
    sub.add_argument('data_dir', metavar="DATA_DIR")
    sub.set_defaults(func=cmd_reconstruct)

    sub = subparsers.add_parser('run-test', parents=[common],
                                help="Simulate and reconstruct a preset")
    sub.add_argument('name', metavar="NAME",
                     help="One of: {}".format(", ".join(sorted(experiments.get_presets()))))
    sub.set_defaults(func=cmd_run_test)

    sub = subparsers.add_parser('sweep', parents=[common],
                                help="Reconstruct over noise levels and seeds")
    sub.add_argument('--test', help="Preset [default: {}]".format(g.TEST))
    sub.add_argument('--seeds', type=int, metavar="N",
                     help="Number of consecutive seeds per noise level")
    sub.set_defaults(func=cmd_sweep)

    sub = subparsers.add_parser('report', parents=[common],
                                help="Print summaries and verify checksums of a run")
    sub.add_argument('run_dir', metavar="RUN_DIR")
    sub.set_defaults(func=cmd_report)

    return parser.parse_args(args)


def report_error(e: grid_.Error) -> int:
    message = " ".join(str(e).split())
    print("{}: error: code={} kind={} message={}".format(
        g.APPNAME, e.exitcode, e.__class__.__name__, message), file=sys.stderr)
    return e.exitcode


def main(args=None):
    """App entry point.

    <args> is a list of command line arguments, defaults to sys.argv[1:]
    Return the process exit code.
    """

    logging.basicConfig(
        format="[%(levelname)-8s] %(asctime)s %(module)s: %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    if args is None:
        args = sys.argv[1:]
    # pre-read debug to configure logging sooner
    if "--debug" in args:
        logging.getLogger(__package__).setLevel(logging.DEBUG)

    args = parse_args(args)
    g.debug, g.profile = args.debug, args.profile

    # Set the log level
    loglevel = logging.WARNING
    if args.profile or args.verbose: loglevel = logging.INFO
    if args.debug:                   loglevel = logging.DEBUG
    logging.getLogger(__package__).setLevel(loglevel)
    log.debug(args)

    try:
        args.func(args)
    except grid_.Error as e:
        return report_error(e)
    except OSError as e:
        return report_error(grid_.DataError(e))

    if g.profile:
        log.info("%s finished after %s ms", args.command, g.runtime())
    return 0


def run():
    """Wrapper to main() for graceful exit on KeyboardInterrupt (CTRL+C)"""
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        pass
