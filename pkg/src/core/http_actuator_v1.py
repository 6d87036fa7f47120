#!/usr/bin/env python3
"""
HTTP Actuator v1 - Concurrent virtual-user driver for a live SUT
Executes a workload of transaction scripts and aggregates latency / error rate
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from string import Template
from typing import Dict, List, Mapping, Optional, Tuple

import requests
import yaml

from .domain_v1 import PerfMeasurement, TransactionCatalog, TransactionId, Workload, check_catalog
from .errors_v1 import ConfigInvalid, ConnectFailure, EmptyWorkload, InvalidValue, IoFailure, MissingScript

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScriptStep:
    method: str
    path: str                            # ${user}, ${iteration}, ${transaction} placeholders
    headers: Dict[str, str] = field(default_factory=dict)
    body: Optional[str] = None
    expect_status_class: int = 2         # 2 -> any 2xx
    expect_body: Optional[str] = None    # substring required in the response body

    def render(self, context: Mapping[str, str]) -> Tuple[str, Optional[str]]:
        path = Template(self.path).safe_substitute(context)
        body = Template(self.body).safe_substitute(context) if self.body is not None else None
        return path, body

    def is_success(self, status_code: int, text: str) -> bool:
        if status_code // 100 != self.expect_status_class:
            return False
        return self.expect_body is None or self.expect_body in text


@dataclass(frozen=True)
class TransactionScript:
    """Request sequence for one transaction, prerequisites first"""

    transaction: TransactionId
    steps: Tuple[ScriptStep, ...]

    def __post_init__(self):
        if not self.steps:
            raise InvalidValue(f"script for {self.transaction.name!r} has no steps")


@dataclass(frozen=True)
class RunSpec:
    duration_s: float
    ramp_up_s: float
    base_url: str
    timeout_ms: float
    think_time_s: float = 0.0

    def __post_init__(self):
        if not self.duration_s > 0:
            raise InvalidValue(f"duration must be > 0, got {self.duration_s}")
        if self.ramp_up_s < 0 or self.ramp_up_s > self.duration_s:
            raise InvalidValue(f"ramp_up must be in [0, duration], got {self.ramp_up_s}")
        if not self.base_url:
            raise InvalidValue("base_url must be nonempty")
        if not self.timeout_ms > 0:
            raise InvalidValue(f"timeout must be > 0, got {self.timeout_ms}")

    def url_for(self, path: str) -> str:
        return self.base_url.rstrip('/') + '/' + path.lstrip('/')


class Outcome(Enum):
    COMPLETED = 'completed'
    FAILED = 'failed'
    TIMED_OUT = 'timed_out'


class RunStats:
    """
    Thread-safe request accumulator
    Sums and counts only, so the totals do not depend on completion order
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.issued = 0
        self.completed = 0
        self.failed = 0
        self.timed_out = 0
        self.latency_sum_ms = 0.0
        self.latency_count = 0

    def record(self, outcome: Outcome, latency_ms: Optional[float]):
        with self._lock:
            self.issued += 1
            if outcome is Outcome.COMPLETED:
                self.completed += 1
            elif outcome is Outcome.TIMED_OUT:
                self.timed_out += 1
            else:
                self.failed += 1
            # Connection errors carry no latency
            if latency_ms is not None:
                self.latency_sum_ms += latency_ms
                self.latency_count += 1

    def to_measurement(self, timeout_ms: float) -> PerfMeasurement:
        with self._lock:
            if self.issued == 0:
                return PerfMeasurement(0.0, 0.0)
            avg = self.latency_sum_ms / self.latency_count if self.latency_count else float(timeout_ms)
            return PerfMeasurement(avg, (self.failed + self.timed_out) / self.issued)

    def as_dict(self) -> Dict:
        with self._lock:
            return {
                'issued': self.issued,
                'completed': self.completed,
                'failed': self.failed,
                'timed_out': self.timed_out,
                'latency_sum_ms': self.latency_sum_ms,
                'latency_count': self.latency_count
            }


def _issue(session: requests.Session, step: ScriptStep, spec: RunSpec,
           context: Mapping[str, str]) -> Tuple[Outcome, Optional[float], Optional[int], str]:
    """Send one scripted request; returns (outcome, latency_ms, status, detail)"""
    path, body = step.render(context)
    start = time.perf_counter()
    try:
        response = session.request(step.method, spec.url_for(path), headers=step.headers or None,
                                   data=body, timeout=spec.timeout_ms / 1000.0)
    except requests.Timeout:
        return Outcome.TIMED_OUT, float(spec.timeout_ms), None, 'timeout'
    except requests.RequestException as e:
        return Outcome.FAILED, None, None, f"request error: {e}"
    latency_ms = (time.perf_counter() - start) * 1000.0
    if step.is_success(response.status_code, response.text):
        return Outcome.COMPLETED, latency_ms, response.status_code, 'ok'
    return Outcome.FAILED, latency_ms, response.status_code, 'predicate failed'


def _check_reachable(spec: RunSpec):
    """Reachability check before any virtual user starts"""
    try:
        requests.get(spec.base_url, timeout=spec.timeout_ms / 1000.0)
    except requests.RequestException as e:
        raise ConnectFailure(f"SUT unreachable at {spec.base_url}: {e}", module='http-actuator')


def _virtual_user(script: TransactionScript, spec: RunSpec, stats: RunStats,
                  user_index: int, start_at: float, deadline: float):
    delay = start_at - time.monotonic()
    if delay > 0:
        time.sleep(delay)
    with requests.Session() as session:
        iteration = 0
        # Every user completes at least one iteration
        while True:
            context = {'user': str(user_index), 'iteration': str(iteration),
                       'transaction': script.transaction.name}
            for step in script.steps:
                outcome, latency_ms, _, _ = _issue(session, step, spec, context)
                stats.record(outcome, latency_ms)
            iteration += 1
            if time.monotonic() >= deadline:
                break
            if spec.think_time_s > 0:
                time.sleep(spec.think_time_s)


def _check_scripts(w: Workload, scripts: Mapping[str, TransactionScript], catalog: TransactionCatalog):
    if w.total < 1:
        raise EmptyWorkload("cannot execute a workload with zero users", module='http-actuator')
    for tx in catalog.transactions:
        if w.users[tx.index] > 0 and tx.name not in scripts:
            raise MissingScript(f"transaction {tx.name!r} has {w.users[tx.index]} users but no script",
                                module='http-actuator')


def run_workload(w: Workload, scripts: Mapping[str, TransactionScript], spec: RunSpec,
                 catalog: Optional[TransactionCatalog] = None) -> RunStats:
    """
    Run users[j] concurrent virtual users per transaction for the run duration

    Args:
        w: Workload to execute
        scripts: Transaction name -> script
        spec: Run duration, ramp-up, base URL and timeout
        catalog: Transaction catalog (default catalog when omitted)

    Returns:
        Request accounting for the whole run
    """
    # Validate inputs and SUT reachability before spawning users
    catalog = catalog or TransactionCatalog.default()
    check_catalog(catalog, w)
    _check_scripts(w, scripts, catalog)
    _check_reachable(spec)

    stats = RunStats()
    total = w.total
    t0 = time.monotonic()
    deadline = t0 + spec.duration_s
    user_index = 0

    # One thread per virtual user, start times spread over the ramp-up
    with ThreadPoolExecutor(max_workers=total) as executor:
        futures = []
        for tx in catalog.transactions:
            for _ in range(w.users[tx.index]):
                start_at = t0 + spec.ramp_up_s * user_index / total
                futures.append(executor.submit(_virtual_user, scripts[tx.name], spec, stats,
                                               user_index, start_at, deadline))
                user_index += 1
        # Surface worker exceptions
        for future in futures:
            future.result()

    logger.debug(f"HTTP run finished: {stats.as_dict()}")
    return stats


def execute(w: Workload, scripts: Mapping[str, TransactionScript], spec: RunSpec,
            catalog: Optional[TransactionCatalog] = None) -> PerfMeasurement:
    """Execute a workload and reduce it to (avg response time, error rate)"""
    return run_workload(w, scripts, spec, catalog).to_measurement(spec.timeout_ms)


def dry_run(scripts: Mapping[str, TransactionScript], spec: RunSpec) -> Dict:
    """
    Execute every script once with a single user

    Args:
        scripts: Transaction name -> script
        spec: Run settings (only base URL and timeout are used)

    Returns:
        Report with per-step status / latency and the failing step positions
    """
    _check_reachable(spec)
    steps_report: List[Dict] = []
    failed_steps: List[Dict] = []

    for name, script in scripts.items():
        with requests.Session() as session:
            context = {'user': '0', 'iteration': '0', 'transaction': name}
            for index, step in enumerate(script.steps):
                outcome, latency_ms, status, detail = _issue(session, step, spec, context)
                entry = {
                    'transaction': name,
                    'step': index,
                    'method': step.method,
                    'path': step.path,
                    'status': status,
                    'latency_ms': None if latency_ms is None else round(latency_ms, 3),
                    'ok': outcome is Outcome.COMPLETED,
                    'detail': detail
                }
                steps_report.append(entry)
                if not entry['ok']:
                    failed_steps.append({'transaction': name, 'step': index})

    return {
        'base_url': spec.base_url,
        'steps': steps_report,
        'failed_steps': failed_steps,
        'all_ok': not failed_steps
    }


def load_scripts(path: str, catalog: Optional[TransactionCatalog] = None) -> Dict[str, TransactionScript]:
    """
    Load transaction scripts from a YAML file

    Schema:
        transactions:
          - name: <catalog transaction name>
            steps:
              - method: GET
                path: /cart?user=${user}
                headers: {Accept: text/html}
                body: null
                expect_status: 2          # status class
                expect_body: "Cart"       # optional substring

    Args:
        path: YAML file path
        catalog: Catalog the names must belong to

    Returns:
        Transaction name -> script
    """
    catalog = catalog or TransactionCatalog.default()
    try:
        with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
    except OSError as e:
        raise IoFailure(f"cannot read scripts file {path}: {e}", module='http-actuator')
    except yaml.YAMLError as e:
        raise ConfigInvalid(f"scripts file {path} is not valid YAML: {e}", module='http-actuator')

    scripts: Dict[str, TransactionScript] = {}
    for entry in data.get('transactions') or []:
        name = entry.get('name')
        try:
            tx = catalog.transactions[catalog.index_of(name)]
        except KeyError:
            raise ConfigInvalid(f"scripts file names unknown transaction {name!r}", module='http-actuator')
        try:
            steps = tuple(
                ScriptStep(method=str(step.get('method', 'GET')).upper(),
                           path=str(step['path']),
                           headers={str(k): str(v) for k, v in (step.get('headers') or {}).items()},
                           body=step.get('body'),
                           expect_status_class=int(step.get('expect_status', 2)),
                           expect_body=step.get('expect_body'))
                for step in entry.get('steps') or []
            )
            scripts[name] = TransactionScript(tx, steps)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigInvalid(f"invalid step in script {name!r}: {e}", module='http-actuator')

    logger.info(f"Loaded {len(scripts)} transaction scripts from {path}")
    return scripts


class HttpEnvironment:
    """Environment adapter executing workloads against a live SUT"""

    name = 'http'

    def __init__(self, scripts: Mapping[str, TransactionScript], spec: RunSpec,
                 catalog: Optional[TransactionCatalog] = None):
        self.scripts = dict(scripts)
        self.spec = spec
        self.catalog = catalog or TransactionCatalog.default()
        self.calls = 0

    def measure(self, workload: Workload, episode: int = 0, step: int = 0) -> PerfMeasurement:
        self.calls += 1
        logger.info(f"🌐 HTTP step e{episode} s{step}: {workload.total} users for {self.spec.duration_s:.0f}s")
        try:
            return execute(workload, self.scripts, self.spec, self.catalog)
        except (EmptyWorkload, MissingScript, ConnectFailure) as e:
            raise e.with_context(module='http-actuator', episode=episode, step=step)

    @property
    def is_pure(self) -> bool:
        return False
