# coding:utf-8
"""Experiment dispatch.

An experiment is one config: an instance plus a list of checks. The
runner builds the instance, runs every check and returns a plain result
dict. Independent experiments run on threads, gevent greenlets or a
process pool; results come back in submission order.
"""

import os
import threading
import multiprocessing

from gevent import joinall as gjoinall, spawn as gspawn
from gevent.lock import Semaphore as gSemaphore

try:
    import setproctitle
except:  # noqa: E722 do not use bare 'except
    setproctitle = None

from . import gallery
from .bounds import domination_transfer, ding_certify, individual_bounds_certify, individual_lower_bound_estimate, \
    lasota_yorke_certify, lattice_homo_rigidity, maximal_lower_bound_estimate, psi_lower_bound_certify, \
    uniform_lower_bound_check
from .config import ExperimentConfig
from .const import DEFAULT_HORIZON, DEFAULT_STEPS, EXIT_OK, EXIT_USAGE, EXIT_VIOLATION
from .exception import ConfigError, DomainError, LabException, NonConvergenceError, PreconditionError
from .frobenius_perron import adjoint_homo_norm_rigidity, fp_norm_rigidity_suite, fp_suite_report, \
    invariant_density
from .lattice import NORM_AL, LatticeVector
from .logger import Logger, logger
from .module import load_instances
from .report import CERTIFIED, CONVERGED, ERROR, HYPOTHESIS_FAILED, INDIVIDUAL, NOT_CERTIFIED, NOT_CHECKED, \
    NOT_CONVERGED, SAMPLED_DISCREPANCY, UNIFORM, VIOLATED, exit_code_for, worst_status
from .semigroup import MODE_OPERATOR_NORM, MODE_STRONG, EmbeddedConsistencyReport, detect_strong_convergence, \
    discrete_power_consistency, embedded_discrete_consistency, evaluate, operator_norm_convergence, orbit
from .serialize import FORMAT_JSON, FORMAT_MSGPACK, atomic_write, dumps_json, envelope, pack, \
    semigroup_from_spec, traces_csv, unpack


def locked_by(lock_name):
    def f(fn):
        def wrapper(*args, **kwargs):
            self = args[0]
            lock = getattr(self, lock_name)
            lock.acquire()
            try:
                return fn(*args, **kwargs)
            finally:
                lock.release()
        return wrapper

    return f


class Experiment(object):
    """A built instance with the horizon and vectors its checks resolve against."""

    def __init__(self, config, semigroup, entry=None):
        self.config = config
        self.S = semigroup
        self.entry = entry
        self.name = config.name or (entry.name if entry else semigroup.name) or "inline"
        limit = entry.horizon_limit(semigroup) if entry else None
        if config.horizon is not None:
            horizon = config.horizon
        elif "resolved_horizon" in semigroup.extras:
            horizon = semigroup.extras["resolved_horizon"]
        elif limit is not None:
            horizon = min(DEFAULT_HORIZON, limit)
        else:
            horizon = DEFAULT_HORIZON
        self.horizon = horizon
        self.approximate = bool(semigroup.extras.get("approximate", False))
        if limit is not None and horizon > limit:
            logger.warning("%s: horizon %d exceeds N - margin = %d, results are approximate", self.name, horizon, limit)
            self.approximate = True

    def vector(self, spec, default=None):
        space = self.S.space
        spec = default if spec is None else spec
        if spec is None:
            raise ConfigError("%s: a vector is needed for this check" % self.name)
        if isinstance(spec, int):
            return space.unit(spec)
        if isinstance(spec, (list, tuple)):
            return LatticeVector(space, spec)
        if isinstance(spec, dict) and "vertex" in spec:
            return space.unit(int(spec["vertex"])).scale(spec.get("scale", 1))
        if spec == "zero":
            return space.zeros()
        if spec == "perron-half":
            op = self.S.operator if self.S.is_discrete else evaluate(self.S, self.S.sample_step)
            return LatticeVector(space, gallery.perron_vector(op).scale(0.5).entries)
        raise ConfigError("%s: cannot resolve vector spec %r" % (self.name, spec))

    def bound(self):
        return self.vector(self.config.h, (self.entry.h if self.entry else None) or "perron-half")

    def start(self):
        return self.vector(self.config.start, self.entry.start if self.entry else 0)


def _convergence(report):
    return CONVERGED if report.converged else NOT_CONVERGED


def check_strong(ex):
    r = detect_strong_convergence(ex.S, ex.horizon, ex.config.tol)
    return _convergence(r), r.to_dict(), r.traces()


def check_operator_norm(ex):
    r = operator_norm_convergence(ex.S, ex.horizon, ex.config.tol)
    return _convergence(r), r.to_dict(), r.traces()


def _bound_status(lb):
    return CERTIFIED if lb.certified else NOT_CERTIFIED


def check_uniform(ex):
    lb = uniform_lower_bound_check(ex.S, ex.bound(), ex.horizon, ex.config.tol)
    return _bound_status(lb), lb.to_dict(), lb.traces()


def check_individual(ex):
    lb = individual_lower_bound_estimate(ex.S, ex.start(), ex.horizon, ex.config.shrink, ex.config.tol)
    return _bound_status(lb), lb.to_dict(), lb.traces()


def check_maximal(ex):
    lb = maximal_lower_bound_estimate(ex.S, ex.start(), ex.horizon, ex.config.tol)
    return _bound_status(lb), lb.to_dict(), lb.traces()


def _certifier(report):
    return report.status, report.to_dict(), report.traces()


def check_lasota_yorke(ex):
    mode = MODE_OPERATOR_NORM if ex.config.norm_mode == MODE_OPERATOR_NORM else MODE_STRONG
    try:
        report, _ = lasota_yorke_certify(ex.S, ex.bound(), ex.horizon, ex.config.tol, norm_mode=mode,
                                         agreement_tol=ex.config.agreement_tol)
    except PreconditionError as err:
        lb = getattr(err, "report", None)
        return HYPOTHESIS_FAILED, {"precondition": str(err), "bound": lb.to_dict() if lb else None}, \
            lb.traces() if lb else {}
    return _certifier(report)


def check_individual_bounds(ex):
    eps = ex.config.eps or ex.S.extras.get("epsilon") or 1e-3
    return _certifier(individual_bounds_certify(ex.S, eps, ex.horizon, ex.config.tol))


def _gated(fn, ex):
    try:
        return _certifier(fn(ex.S, ex.horizon, ex.config.tol))
    except PreconditionError as err:
        return HYPOTHESIS_FAILED, {"gate": str(err)}, {}


def check_ding(ex):
    return _gated(ding_certify, ex)


def check_lattice_homomorphism(ex):
    return _gated(lattice_homo_rigidity, ex)


def check_adjoint_homomorphism(ex):
    return _gated(adjoint_homo_norm_rigidity, ex)


def check_psi(ex):
    psi = ex.S.extras.get("psi") or ex.S.space.norm_functional()
    kind = UNIFORM if ex.config.h is not None else INDIVIDUAL
    h = ex.bound() if kind == UNIFORM else ex.S.space.zeros()
    return _certifier(psi_lower_bound_certify(ex.S, h, psi, horizon=ex.horizon, tol=ex.config.tol, kind=kind,
                                              eps=ex.config.eps, agreement_tol=ex.config.agreement_tol))


def check_domination(ex):
    if ex.config.sub_instance is None:
        raise ConfigError("domination transfer needs sub_instance")
    sub = build_semigroup(ExperimentConfig(instance=ex.config.sub_instance, dim=ex.config.dim, mode=ex.config.mode))
    return _certifier(domination_transfer(ex.S, sub, ex.horizon, ex.config.tol))


_EMBEDDED = {
    EmbeddedConsistencyReport.CONSISTENT: CERTIFIED,
    EmbeddedConsistencyReport.SAMPLED_DISCREPANCY: SAMPLED_DISCREPANCY,
    EmbeddedConsistencyReport.VIOLATED: VIOLATED,
}


def check_embedded(ex):
    steps = ex.config.steps
    if list(steps) == list(DEFAULT_STEPS) and "embedded_steps" in ex.S.extras:
        steps = ex.S.extras["embedded_steps"]
    mode = MODE_OPERATOR_NORM if ex.config.norm_mode == MODE_OPERATOR_NORM else MODE_STRONG
    r = embedded_discrete_consistency(ex.S, steps, ex.horizon, ex.config.tol, mode=mode,
                                      agreement_tol=ex.config.agreement_tol)
    return _EMBEDDED[r.status], r.to_dict(), r.continuous.traces()


def check_power(ex):
    r = discrete_power_consistency(ex.S, ex.config.m0 or 2, ex.horizon, ex.config.tol, ex.config.agreement_tol)
    status = NOT_CHECKED if r.prediction_holds is None else (CERTIFIED if r.prediction_holds else VIOLATED)
    return status, r.to_dict(), r.full.traces()


def check_fp_rigidity(ex):
    if not ex.S.is_discrete:
        raise DomainError("FP rigidity runs on discrete instances")
    rows = fp_norm_rigidity_suite([(ex.name, ex.S.operator, ex.horizon)], ex.config.tol)
    report = fp_suite_report(rows, ex.config.tol)
    traces = dict(("defect", [(n + 1, d) for n, d in enumerate(r.defects)]) for r in rows)
    return report.status, report.to_dict(), traces


def check_invariant_density(ex):
    try:
        density = invariant_density(ex.S.operator, tol=min(ex.config.tol, 1e-12))
    except NonConvergenceError as err:
        return NOT_CONVERGED, {"error": str(err)}, {}
    except DomainError as err:
        return HYPOTHESIS_FAILED, {"error": str(err)}, {}
    return CERTIFIED, {"density": density.tolist()}, {}


def check_envelope_residual(ex):
    """l^1-envelope orbit of e_1 against the closed-form residual of the weighted shift."""
    p = ex.S.extras.get("p")
    env = ex.S.extras.get("envelope")
    if p is None or env is None:
        raise DomainError("%s carries no l^1 envelope" % ex.name)
    S1 = ex.S.with_space(env).as_float()
    e1 = S1.space.unit(1)
    limit = S1.space.unit(0).scale(float(S1.space.norm_functional()(e1)))
    horizon = min(ex.horizon, ex.S.dim - 2)
    trace, worst = [], 0.0
    for n, f in enumerate(orbit(S1, e1, range(1, horizon + 1)), 1):
        residual = float((f - limit).norm(NORM_AL))
        oracle = gallery.example_6_6_tail_residual(n, p)
        worst = max(worst, abs(residual - oracle) / oracle)
        trace.append((n, residual))
    status = CERTIFIED if worst <= 1e-9 else VIOLATED
    return status, {"horizon": horizon, "residual": trace[-1][1], "oracle": gallery.example_6_6_tail_residual(
        horizon, p), "max_relative_gap": worst}, {"envelope_residual": trace}


CHECKERS = {
    "strong-convergence": check_strong,
    "operator-norm": check_operator_norm,
    "uniform-lower-bound": check_uniform,
    "individual-lower-bound": check_individual,
    "maximal-lower-bound": check_maximal,
    "lasota-yorke": check_lasota_yorke,
    "individual-bounds": check_individual_bounds,
    "domination-transfer": check_domination,
    "ding": check_ding,
    "lattice-homomorphism": check_lattice_homomorphism,
    "psi-lower-bound": check_psi,
    "adjoint-homomorphism": check_adjoint_homomorphism,
    "embedded-consistency": check_embedded,
    "power-consistency": check_power,
    "fp-rigidity": check_fp_rigidity,
    "invariant-density": check_invariant_density,
    "envelope-residual": check_envelope_residual,
}


def build_semigroup(config):
    if isinstance(config.instance, dict):
        return semigroup_from_spec(config.instance, exact=config.exact)
    return gallery.build(config.instance, config)


def _mismatch_code(status):
    code = exit_code_for(status)
    return code if code != EXIT_OK else EXIT_VIOLATION


def run_experiment(config):
    """Build the instance, run every check, return a plain result dict with an exit code."""
    result = {"instance": config.instance if isinstance(config.instance, str) else "inline",
              "config": config.to_dict(), "checks": [], "traces": {}, "error": None}
    try:
        entry = None
        if isinstance(config.instance, str):
            if config.instance not in gallery.REGISTRY:
                raise ConfigError("unknown gallery instance %r (known: %s)"
                                  % (config.instance, ", ".join(gallery.names())))
            entry = gallery.get(config.instance)
        ex = Experiment(config, build_semigroup(config), entry)
        result.update(name=ex.name, horizon=ex.horizon, approximate=ex.approximate)
        checks = list(config.checks) or (list(entry.expect) if entry else ["strong-convergence"])
        codes = []
        for name in checks:
            if name not in CHECKERS:
                raise ConfigError("unknown check %r (known: %s)" % (name, ", ".join(sorted(CHECKERS))))
            logger.debug("%s: running %s over horizon %d", ex.name, name, ex.horizon)
            status, payload, traces = CHECKERS[name](ex)
            expected = entry.expect.get(name) if entry else None
            row = {"check": name, "status": status, "report": payload}
            if expected is not None:
                row.update(expected=expected, matched=status == expected)
                codes.append(EXIT_OK if status == expected else _mismatch_code(status))
            else:
                codes.append(exit_code_for(status))
            result["checks"].append(row)
            for quantity, series in traces.items():
                result["traces"]["%s.%s" % (name, quantity)] = series
            logger.info("%s: %s -> %s%s", ex.name, name, status,
                        "" if expected is None else " (expected %s)" % expected)
        result["status"] = worst_status(r["status"] for r in result["checks"])
        result["exit_code"] = max(codes) if codes else EXIT_OK
    except ConfigError as err:
        logger.warning("experiment %s: %s", result["instance"], err)
        result.update(status=ERROR, error=str(err), exit_code=EXIT_USAGE)
    except LabException as err:
        logger.warning("experiment %s failed: %s", result["instance"], err)
        result.update(status=ERROR, error=str(err), exit_code=EXIT_VIOLATION)
    except Exception as err:
        logger.exception("unexpected error in experiment %s", result["instance"])
        result.update(status=ERROR, error="%s: %s" % (err.__class__.__name__, err), exit_code=EXIT_VIOLATION)
    return result


def write_result(result, config):
    """Write the report (and CSV traces) under ``config.out``; returns the written paths."""
    if not config.out:
        return []
    base = os.path.join(config.out, result.get("name") or result["instance"])
    report = envelope(dict((k, v) for k, v in result.items() if k != "traces"), config.tolerances())
    paths = []
    if config.format == FORMAT_MSGPACK:
        report["traces"] = result["traces"]
        paths.append(atomic_write(base + ".msgpack", pack(report)))
    else:
        if config.format == FORMAT_JSON:
            paths.append(atomic_write(base + ".json", dumps_json(report)))
        paths.append(atomic_write(base + ".traces.csv", traces_csv(result["traces"])))
    for p in paths:
        logger.info("wrote %s", p)
    return paths


def _run_packed(data):
    return pack(run_experiment(ExperimentConfig.from_dict(unpack(data))))


def _multiprocessing_init(pool_name, instances_directory, loglevel):
    p = multiprocessing.current_process()
    p.name = "%s: %s (ppid: %d)" % (pool_name, p.name, os.getppid())
    if setproctitle:
        setproctitle.setproctitle(p.name)
    logger.set_level(loglevel)
    if instances_directory:
        load_instances(instances_directory)


class ExperimentRunner(object):
    def __init__(self, loglevel=Logger.WARNING, use_multiprocess=False, use_gevent=False, name=None,
                 instances_directory=None, processes=None):
        if use_multiprocess:
            sem = multiprocessing.Semaphore
        elif use_gevent:
            sem = gSemaphore
        else:
            sem = threading.Semaphore

        self.results = {}
        self.r_lock = sem()
        self.use_multiprocess = use_multiprocess
        self.use_gevent = use_gevent
        self.instances_directory = instances_directory

        self.logger = logger
        self.logger.set_level(loglevel)

        if instances_directory:
            load_instances(instances_directory)

        title = "lowerbound-lab runner"
        if name:
            title = "%s \"%s\"" % (title, name)

        self._process_pool = None
        if use_multiprocess:
            self._process_pool = multiprocessing.Pool(
                processes or os.cpu_count(),
                _multiprocessing_init,
                (title, instances_directory, loglevel),
            )
            self.logger.debug("runner is in multiprocessing mode")
        elif use_gevent:
            self.logger.debug("runner is in gevent mode")

        if setproctitle:
            ppid = os.getppid()
            if use_multiprocess:
                setproctitle.setproctitle("%s: Manager (ppid: %d)" % (title, ppid))
            else:
                setproctitle.setproctitle("%s (ppid: %d)" % (title, ppid))

    def cleanup(self):
        if self._process_pool is not None:
            self._process_pool.terminate()
            self._process_pool.join()
            self._process_pool = None

    @locked_by("r_lock")
    def _record(self, idx, result):
        self.results[idx] = result

    def _run_one(self, idx, config):
        self._record(idx, run_experiment(config))

    def run(self, configs):
        """Run every config; the result list follows the input order."""
        configs = list(configs)
        self.results = {}
        if self.use_multiprocess:
            packed = [pack(c.to_dict()) for c in configs]
            for idx, data in enumerate(self._process_pool.map(_run_packed, packed)):
                self._record(idx, unpack(data))
        elif self.use_gevent:
            gjoinall([gspawn(self._run_one, idx, c) for idx, c in enumerate(configs)])
        else:
            threads = []
            for idx, c in enumerate(configs):
                t = threading.Thread(target=self._run_one, args=(idx, c))
                t.daemon = True
                t.start()
                threads.append(t)
            for t in threads:
                t.join()
        return [self.results[idx] for idx in range(len(configs))]

    def run_and_write(self, configs):
        configs = list(configs)
        results = self.run(configs)
        for config, result in zip(configs, results):
            write_result(result, config)
        return results


def exit_code(results):
    return max([r["exit_code"] for r in results] or [EXIT_OK])
