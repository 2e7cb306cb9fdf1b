# coding:utf-8

import os
import sys
import argparse

from . import gallery
from .acceptance import CRITERIA, run_acceptance
from .config import MODE_FLOAT, MODE_RATIONAL, ExperimentConfig
from .const import EXIT_OK, EXIT_USAGE, EXIT_VIOLATION, __version__
from .exception import ConfigError, LabException
from .frobenius_perron import IntervalMap, ulam_matrix
from .logger import Logger, logger
from .module import load_instances
from .runner import CHECKERS, ExperimentRunner, exit_code
from .serialize import FORMATS, FORMAT_CSV, FORMAT_JSON, atomic_write, coo_csv, dumps_json, envelope, load_json


class UsageParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, "%s: error: %s\n" % (self.prog, message))


def _experiment_flags(parser):
    parser.add_argument('-c', '--config', dest='config', metavar='file', type=str,
                        help='JSON experiment config; flags below override its values')
    parser.add_argument('--dim', type=int, help='truncation dimension N')
    parser.add_argument('--horizon', type=int, help='number of sampled steps')
    parser.add_argument('--tol', type=float, help='convergence and deficiency tolerance')
    parser.add_argument('--p', type=float, help='exponent of the weighted l^p space')
    parser.add_argument('--mode', choices=(MODE_RATIONAL, MODE_FLOAT), help='arithmetic mode')
    parser.add_argument('--seed', type=int, help='seed of randomized instances')
    parser.add_argument('--eps', type=float, help='epsilon floor of the individual-bounds check')
    parser.add_argument('--t0', type=float, help='period of the rotation instance')
    parser.add_argument('--steps', type=float, nargs='+', help='embedded step sizes')
    parser.add_argument('--m0', type=int, help='power of the discrete power-consistency check')
    parser.add_argument('--out', metavar='dir', type=str, help='directory for reports and traces')
    parser.add_argument('--format', choices=FORMATS, help='report encoding (default: json)')


def _worker_flags(parser):
    mxg = parser.add_mutually_exclusive_group()
    mxg.add_argument('-m', '--multiprocessing', dest='multiprocessing', action="store_true",
                     help='run experiments in a process pool (default: %(default)s)')
    mxg.add_argument('-g', '--gevent', dest='gevent', action="store_true",
                     help='run experiments on gevent greenlets (default: %(default)s)')


def parse(argv=None):
    parser = UsageParser(prog='lowerbound-lab', description='Lower-bound convergence lab for positive semigroups.')
    parser.add_argument('-v', '--verbose', action='count', default=1,
                        help='turn on verbose logging (default: %(default)s)')
    parser.add_argument('--version', '-version', action='version',
                        version='%(prog)s {version}'.format(version=__version__))
    parser.add_argument('--log-file', dest='log_file', metavar='file', type=str,
                        help='append log lines to this file as well')
    parser.add_argument('-d', '--instances-directory', dest='directory', metavar='directory', type=str,
                        help='directory of extra gallery instance modules')
    commands = parser.add_subparsers(dest='command', metavar='command', parser_class=UsageParser)
    commands.required = True

    p_gallery = commands.add_parser('gallery', help='list or run gallery instances')
    gallery_cmds = p_gallery.add_subparsers(dest='gallery_command', metavar='action', parser_class=UsageParser)
    gallery_cmds.required = True
    gallery_cmds.add_parser('list', help='list registered instances')
    p_run = gallery_cmds.add_parser('run', help='run the expected checks of one or more instances')
    p_run.add_argument('ids', nargs='+', metavar='id', help='gallery instance id')
    _experiment_flags(p_run)
    _worker_flags(p_run)

    p_ulam = commands.add_parser('ulam', help='Ulam discretisation of an interval map')
    ulam_cmds = p_ulam.add_subparsers(dest='ulam_command', metavar='action', parser_class=UsageParser)
    ulam_cmds.required = True
    p_build = ulam_cmds.add_parser('build', help='write the Ulam matrix of a map spec')
    p_build.add_argument('map', metavar='map.json', help='interval map spec')
    p_build.add_argument('--cells', type=int, required=True, help='number of equal cells')
    p_build.add_argument('--out', metavar='dir', type=str, help='directory for the matrix (default: stdout)')
    p_build.add_argument('--format', choices=(FORMAT_CSV, FORMAT_JSON), default=FORMAT_CSV,
                         help='COO CSV or operator JSON (default: %(default)s)')

    p_check = commands.add_parser('check', help='run one certifier on an instance')
    p_check.add_argument('certifier', choices=sorted(CHECKERS), metavar='certifier',
                         help='one of: %s' % ", ".join(sorted(CHECKERS)))
    p_check.add_argument('--instance', required=True, help='gallery id or path to an operator / semigroup spec')
    p_check.add_argument('--sub-instance', dest='sub_instance',
                         help='dominated instance of the domination-transfer check')
    _experiment_flags(p_check)

    p_suite = commands.add_parser('suite', help='run a test suite')
    p_suite.add_argument('suite', choices=('acceptance', ), help='suite name')
    p_suite.add_argument('--only', nargs='+', choices=list(CRITERIA), help='run a subset of the criteria')
    p_suite.add_argument('--out', metavar='dir', type=str, help='directory for the suite report')

    return parser.parse_args(argv)


def _instance(value):
    if value is not None and os.path.isfile(value):
        return load_json(value)
    return value


def experiment_config(args, **fixed):
    """Config file values, overridden by flags, overridden by ``fixed``."""
    data = load_json(args.config) if getattr(args, 'config', None) else {}
    for key in ('dim', 'horizon', 'tol', 'p', 'mode', 'seed', 'eps', 't0', 'steps', 'm0', 'out', 'format'):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    data.update(fixed)
    return ExperimentConfig.from_dict(data)


def _summary(result):
    return {
        "name": result.get("name") or result["instance"],
        "status": result["status"],
        "exit_code": result["exit_code"],
        "approximate": result.get("approximate", False),
        "error": result["error"],
        "checks": [dict((k, row[k]) for k in ("check", "status", "expected") if k in row) for row in result["checks"]],
    }


def gallery_list(args):
    sys.stdout.write(dumps_json([gallery.get(n).to_dict() for n in gallery.names()]))
    return EXIT_OK


def gallery_run(args):
    configs = [experiment_config(args, instance=i) for i in args.ids]
    runner = ExperimentRunner(loglevel=logger.level, use_multiprocess=args.multiprocessing,
                              use_gevent=args.gevent, instances_directory=args.directory)
    try:
        results = runner.run_and_write(configs)
    finally:
        runner.cleanup()
    sys.stdout.write(dumps_json([_summary(r) for r in results]))
    return exit_code(results)


def ulam_build(args):
    if args.cells < 2:
        raise ConfigError("--cells must be at least 2")
    imap = IntervalMap.from_spec(load_json(args.map))
    T = ulam_matrix(imap, args.cells)
    if T.approximate:
        logger.warning("%s is not Markov on %d cells; the Ulam matrix approximates its FP operator",
                       imap.name or args.map, args.cells)
    if args.format == FORMAT_JSON:
        data = dumps_json(dict(T.to_spec(), approximate=T.approximate, map=imap.to_spec()))
    else:
        data = coo_csv(T)
    if not args.out:
        sys.stdout.write(data)
        return EXIT_OK
    stem = os.path.splitext(os.path.basename(args.map))[0]
    path = os.path.join(args.out, "%s.ulam%d.%s" % (stem, args.cells, args.format))
    atomic_write(path, data)
    logger.info("wrote %s", path)
    return EXIT_OK


def check(args):
    fixed = {"instance": _instance(args.instance), "checks": [args.certifier]}
    if args.sub_instance:
        fixed["sub_instance"] = _instance(args.sub_instance)
    config = experiment_config(args, **fixed)
    runner = ExperimentRunner(loglevel=logger.level)
    results = runner.run_and_write([config])
    result = results[0]
    sys.stdout.write(dumps_json(dict((k, v) for k, v in result.items() if k != "traces")))
    return exit_code(results)


def suite(args):
    results, code = run_acceptance(args.only)
    report = envelope({"suite": args.suite, "passed": code == EXIT_OK, "criteria": [r.to_dict() for r in results]})
    if args.out:
        path = atomic_write(os.path.join(args.out, "%s.json" % args.suite), dumps_json(report))
        logger.info("wrote %s", path)
    sys.stdout.write(dumps_json([{"name": r.name, "passed": r.passed, "seconds": r.seconds} for r in results]))
    return code


def _dispatch(args):
    if args.command == 'gallery':
        return gallery_list(args) if args.gallery_command == 'list' else gallery_run(args)
    if args.command == 'ulam':
        return ulam_build(args)
    if args.command == 'check':
        return check(args)
    return suite(args)


def main(argv=None):
    args = parse(argv)
    logger.set_level(Logger.WARNING - args.verbose)
    if args.log_file:
        logger.set_logfile(args.log_file)

    try:
        if args.directory:
            load_instances(args.directory)
        code = _dispatch(args)
    except ConfigError as ex:
        logger.error("%s", ex)
        code = EXIT_USAGE
    except LabException as ex:
        logger.error("%s", ex)
        code = EXIT_VIOLATION
    except KeyboardInterrupt:
        logger.info("polite exit requested, terminating...")
        code = EXIT_VIOLATION
    logger.cleanup()
    return code


def start():
    sys.exit(main())


if __name__ == '__main__':
    start()
