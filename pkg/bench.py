"""
Benchmark harness
- Log-linear scaling of the exact sum against the binned path and the naive oracle
- Desk-scale ICA, MDH and PPR recovery runs over many seeds
- Seeds run in a thread pool; finished cases persist to a progress file so an
  interrupted run resumes where it stopped
"""

import json
import logging
import math
import os
import statistics
import threading
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime, timedelta
from typing import Callable, Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

import settings
from datasets import simulate, train_test_split, write_csv
from errors import InputError
from fastsum import fk_sum, naive_ksum
from kernel_core import PolyExpKernel, default_kernel
from metrics import amari_distance, cluster_split_error, mixture_density_on_hyperplane, r_squared
from projpursuit import ica_fit, mdh_fit, ppr_fit, ppr_predict
from smoothers import kde

logger = logging.getLogger(__name__)

CaseKey = Tuple[str, int, int, int]

# Binning grid of the ica_bin benchmark variant
ICA_BENCH_NBIN = 5000


class ProgressBar:
    """Visual progress bar for terminal"""

    def __init__(self, total: int, label: str = "Bench", width: int = 50):
        self.total = total
        self.label = label
        self.width = width
        self.current = 0
        self.start_time = time.time()

    def update(self, current: int):
        self.current = current
        fraction = current / self.total if self.total > 0 else 0
        filled = int(fraction * self.width)
        bar = '█' * filled + '░' * (self.width - filled)

        elapsed = time.time() - self.start_time
        rate = current / elapsed if elapsed > 0 else 0.0
        remaining = (self.total - current) / rate if rate > 0 else 0
        eta = timedelta(seconds=int(remaining))

        print(f"\r🚀 {self.label}: [{bar}] {fraction * 100:.1f}% ({current:,}/{self.total:,}) | ETA: {eta} | Rate: {rate:.2f}/sec", end='', flush=True)

    def finish(self):
        elapsed = time.time() - self.start_time
        print(f"\n✅ Completed in {timedelta(seconds=int(elapsed))}")


@dataclass(frozen=True)
class BenchRecord:
    method: str
    n: int
    d: int
    seed: int
    wall_time_seconds: float
    metric: str
    value: float

    @property
    def key(self) -> CaseKey:
        return (self.method, self.n, self.d, self.seed)


@dataclass
class BenchReport:
    records: List[BenchRecord] = field(default_factory=list)

    def add(self, record: BenchRecord):
        if record.wall_time_seconds < 0:
            raise InputError(f"negative wall time for {record.key}")
        self.records.append(record)

    def extend(self, records):
        for record in records:
            self.add(record)

    def summary(self) -> List[Tuple[str, int, int, str, int, float, float]]:
        """(method, n, d, metric, cases, mean time, mean metric) per configuration."""
        groups: Dict[Tuple[str, int, int, str], List[BenchRecord]] = {}
        for r in self.records:
            groups.setdefault((r.method, r.n, r.d, r.metric), []).append(r)
        rows = []
        for (method, n, d, metric), recs in sorted(groups.items()):
            values = [r.value for r in recs if not math.isnan(r.value)]
            rows.append((
                method, n, d, metric, len(recs),
                statistics.fmean(r.wall_time_seconds for r in recs),
                statistics.fmean(values) if values else math.nan,
            ))
        return rows

    def mean(self, method: str, metric: str) -> float:
        values = [r.value for r in self.records if r.method == method and r.metric == metric]
        return statistics.fmean(values) if values else math.nan

    def wide(self) -> Tuple[List[str], np.ndarray]:
        """
        One row per (n, d, seed) with <method>_seconds and <method>_<metric>
        columns; absent combinations are NaN.
        """
        columns: List[str] = []
        cells: Dict[Tuple[int, int, int], Dict[str, float]] = {}
        for r in self.records:
            row = cells.setdefault((r.n, r.d, r.seed), {})
            for name, value in ((f"{r.method}_seconds", r.wall_time_seconds), (f"{r.method}_{r.metric}", r.value)):
                if name not in columns:
                    columns.append(name)
                row[name] = value
        keys = sorted(cells)
        data = np.full((len(keys), 3 + len(columns)), np.nan)
        for i, key in enumerate(keys):
            data[i, :3] = key
            for j, name in enumerate(columns):
                data[i, 3 + j] = cells[key].get(name, np.nan)
        return ["n", "d", "seed"] + columns, data

    def to_csv(self, target: Union[str, TextIO]):
        columns, data = self.wide()
        write_csv(target, columns, data)

    def table(self) -> str:
        header = f"{'method':<10} {'n':>9} {'d':>4} {'metric':<22} {'cases':>5} {'mean time (s)':>14} {'mean value':>12}"
        lines = [header, "-" * len(header)]
        for method, n, d, metric, count, t, v in self.summary():
            lines.append(f"{method:<10} {n:>9,} {d:>4} {metric:<22} {count:>5} {t:>14.4f} {v:>12.5g}")
        return "\n".join(lines)


class BenchProgress:
    """Completed records persisted between runs of the same benchmark."""

    def __init__(self, progress_file: Optional[str], benchmark: str, fresh: bool = False):
        self.progress_file = progress_file
        self.benchmark = benchmark
        self.session_start_time = time.time()
        self.previous_compute_time = 0.0
        self.completed: Dict[CaseKey, List[BenchRecord]] = {}
        self._lock = threading.Lock()
        if progress_file and not fresh:
            self.load_progress()

    def load_progress(self):
        """Load progress from file"""
        try:
            if os.path.exists(self.progress_file):
                with open(self.progress_file, 'r') as f:
                    progress = json.load(f)
                if progress.get('benchmark') != self.benchmark:
                    print(f"⚠️ Ignoring progress file for benchmark '{progress.get('benchmark')}'")
                    return
                for item in progress.get('records', []):
                    record = BenchRecord(**item)
                    self.completed.setdefault(record.key, []).append(record)
                self.previous_compute_time = progress.get('total_compute_time', 0.0)
                if self.completed:
                    print(f"📊 Resuming with {len(self.completed)} cases already done")
                    print(f"⏱️  Previous compute time: {timedelta(seconds=int(self.previous_compute_time))}")
        except (OSError, ValueError, TypeError) as e:
            print(f"⚠️ Could not load progress: {e}")

    def record(self, key: CaseKey, records: List[BenchRecord]):
        with self._lock:
            self.completed[key] = records
            self.save_progress()

    def save_progress(self):
        """Save progress to file"""
        if not self.progress_file:
            return
        try:
            progress = {
                'benchmark': self.benchmark,
                'records': [asdict(r) for recs in self.completed.values() for r in recs],
                'session_start_time': self.session_start_time,
                'total_compute_time': self.previous_compute_time + time.time() - self.session_start_time,
                'last_update': datetime.now().isoformat(),
            }
            with open(self.progress_file, 'w') as f:
                json.dump(progress, f)
        except OSError as e:
            print(f"⚠️ Could not save progress: {e}")

    def clear(self):
        if self.progress_file and os.path.exists(self.progress_file):
            os.remove(self.progress_file)
            print("🧹 Cleaned up progress file")


def run_cases(
    benchmark: str,
    keys: Sequence[CaseKey],
    case_fn: Callable[[CaseKey], List[BenchRecord]],
    workers: int = settings.BENCH_WORKERS,
    progress_file: Optional[str] = settings.PROGRESS_FILE,
    fresh: bool = False,
    show_progress: bool = False,
) -> BenchReport:
    """
    Run every case not already in the progress file, in a thread pool.

    On KeyboardInterrupt the finished cases are saved and the interrupt is
    re-raised; after a clean run the progress file is removed.
    """
    progress = BenchProgress(progress_file, benchmark, fresh)
    todo = [k for k in keys if k not in progress.completed]
    bar = ProgressBar(len(keys), label=benchmark) if show_progress else None
    done = len(keys) - len(todo)
    if bar:
        bar.update(done)

    executor = ThreadPoolExecutor(max_workers=max(1, workers))
    try:
        futures = {executor.submit(case_fn, key): key for key in todo}
        for future in as_completed(futures):
            progress.record(futures[future], future.result())
            done += 1
            if bar:
                bar.update(done)
    except KeyboardInterrupt:
        executor.shutdown(wait=False, cancel_futures=True)
        progress.save_progress()
        print("\n\n⚠️ Benchmark interrupted by user")
        print("📊 Progress saved - rerun the same command to resume")
        raise
    executor.shutdown(wait=True)
    if bar:
        bar.finish()

    report = BenchReport()
    for key in keys:
        report.extend(progress.completed[key])
    progress.clear()
    return report


def _median_time(fn: Callable[[], object], repetitions: int) -> float:
    times = []
    for _ in range(max(1, repetitions)):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def bench_scaling(
    sizes: Sequence[int],
    kernel: Optional[PolyExpKernel] = None,
    repetitions: int = settings.TIMING_REPS,
    naive_cap: int = settings.NAIVE_CAP,
    nbin: int = 1000,
    seed: int = 1,
) -> BenchReport:
    """
    Median wall time of the exact sum, the binned sum and (up to naive_cap)
    the naive oracle on uniform data. Each record carries the per-doubling
    time ratio against the previous size.
    """
    sizes = [int(s) for s in sizes]
    if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise InputError(f"sizes must be non-empty and strictly ascending, got {sizes}")
    kernel = kernel or default_kernel()
    # warm the compiled sweep so the first size is not charged for it
    fk_sum(np.arange(4.0), 1.0, kernel)

    report = BenchReport()
    last: Dict[str, Tuple[int, float]] = {}
    for n in sizes:
        x = simulate("uniform", n, 1, seed).dataset.data[:, 0]
        h = 0.1 * n ** -0.2
        runs = {
            "fast": lambda: fk_sum(x, h, kernel, mode="both"),
            "binned": lambda: fk_sum(x, h, kernel, mode="both", nbin=min(nbin, max(n, 2))),
        }
        if n <= naive_cap:
            runs["naive"] = lambda: naive_ksum(x, h, kernel, mode="both")
        for method, fn in runs.items():
            t = _median_time(fn, repetitions)
            ratio = math.nan
            if method in last:
                n_prev, t_prev = last[method]
                ratio = (t / t_prev) ** (1.0 / math.log2(n / n_prev)) if t_prev > 0 else math.nan
            last[method] = (n, t)
            report.add(BenchRecord(method, n, 1, seed, t, "doubling_ratio", ratio))
            logger.info("scaling %-6s n=%-9d %.4fs ratio %.3f", method, n, t, ratio)
    return report


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


def _ica_case(key: CaseKey, nbin: int = ICA_BENCH_NBIN) -> List[BenchRecord]:
    method, n, d, seed = key
    sim = simulate("ica", n, d, seed)
    binned = nbin if method == "ica_bin" else None
    model, t = _timed(lambda: ica_fit(sim.dataset.data, d, nbin=binned))
    dist = amari_distance(model.unmixing_matrix, np.linalg.inv(sim.truth["mixing"]))
    return [BenchRecord(method, n, d, seed, t, "amari_distance", dist)]


def _mdh_case(key: CaseKey) -> List[BenchRecord]:
    method, n, d, seed = key
    sim = simulate("clusters", n, d, seed)
    X = sim.dataset.matrix(exclude=("label",))
    model, t = _timed(lambda: mdh_fit(X))
    truth = sim.truth
    proj = X @ model.v
    at_mean = float(np.mean(proj))
    dens = kde(proj, model.h, model.kernel, x_eval=[model.b, at_mean]).density
    return [
        BenchRecord(method, n, d, seed, t, "separation_error", cluster_split_error(truth["labels"], model.predict_side(X))),
        BenchRecord(method, n, d, seed, t, "hyperplane_density",
                    mixture_density_on_hyperplane(model.v, model.b, truth["means"], truth["sds"], truth["proportions"])),
        BenchRecord(method, n, d, seed, t, "split_below_mean", float(dens[0] <= dens[1])),
    ]


def _ppr_case(key: CaseKey, nterms: int = 2) -> List[BenchRecord]:
    method, n, d, seed = key
    sim = simulate("ppr", n, d, seed)
    X, y = sim.dataset.matrix(exclude=("y",)), sim.dataset.column("y")
    train, test = train_test_split(n, 0.5)
    model, t = _timed(lambda: ppr_fit(X[train], y[train], nterms))
    sse = [
        float(np.sum((y[train] - ppr_predict(replace(model, components=model.components[:j]), X[train])) ** 2))
        for j in range(1, nterms + 1)
    ]
    return [
        BenchRecord(method, n, d, seed, t, "test_r2", r_squared(y[test], ppr_predict(model, X[test]))),
        BenchRecord(method, n, d, seed, t, "train_sse_nonincreasing", float(all(b <= a for a, b in zip(sse, sse[1:])))),
    ]


def bench_ica(seeds: Sequence[int], n: int = 2000, d: int = 4, nbin: int = ICA_BENCH_NBIN, **run_options) -> BenchReport:
    """Exact and binned ICA on the same seeds, reported as methods ica and ica_bin."""
    cases = [(method, n, d, s) for s in seeds for method in ("ica", "ica_bin")]
    return run_cases("ica", cases, lambda key: _ica_case(key, nbin), **run_options)


def bench_mdh(seeds: Sequence[int], n: int = 2000, d: int = 10, **run_options) -> BenchReport:
    return run_cases("mdh", [("mdh", n, d, s) for s in seeds], _mdh_case, **run_options)


def bench_ppr(seeds: Sequence[int], n: int = 1000, d: int = 10, nterms: int = 2, **run_options) -> BenchReport:
    return run_cases("ppr", [("ppr", n, d, s) for s in seeds], lambda key: _ppr_case(key, nterms), **run_options)
