"""
Data ingestion and synthetic generators

- Dataset / load_csv / write_csv: numeric CSV files with a header row
- CounterRNG: reproducible draws from a Philox counter-based stream
- simulate: the generators used by the examples and benchmarks
- train_test_split
"""

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

from errors import InputError

logger = logging.getLogger(__name__)

SIMULATION_KINDS = ("bimodal", "sine_kink", "clusters", "ica", "ppr", "uniform")

# Fraction of the bimodal mixture drawn from the Gaussian component
BIMODAL_GAUSS_WEIGHT = 2.0 / 3.0


@dataclass(frozen=True)
class Dataset:
    columns: Tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(self.columns):
            raise InputError(f"data shape {data.shape} does not match {len(self.columns)} columns")
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "data", data)

    @property
    def n_rows(self) -> int:
        return self.data.shape[0]

    def index(self, name: str) -> int:
        """Position of a column given by name or, failing that, by 1-based number."""
        name = str(name)
        if name in self.columns:
            return self.columns.index(name)
        if name.isdigit() and 1 <= int(name) <= len(self.columns):
            return int(name) - 1
        raise InputError(f"unknown column '{name}', available: {', '.join(self.columns)}")

    def column(self, name: str) -> np.ndarray:
        return self.data[:, self.index(name)]

    def matrix(self, names: Optional[Sequence[str]] = None, exclude: Sequence[str] = ()) -> np.ndarray:
        """Columns by name, or every column not excluded."""
        if names is None:
            drop = {self.columns[self.index(e)] for e in exclude}
            names = [c for c in self.columns if c not in drop]
        if not names:
            raise InputError("no columns selected")
        return self.data[:, [self.index(c) for c in names]]

    def subset(self, rows) -> "Dataset":
        return Dataset(self.columns, self.data[rows])


def load_csv(path: str, columns: Optional[Sequence[str]] = None, missing: Optional[float] = None) -> Dataset:
    """
    Read a numeric CSV file with a header row.

    Blank lines are skipped. Empty cells are rejected unless a `missing`
    value is given to stand in for them. Errors name the offending data row (1-based)
    and column.
    """
    if not os.path.exists(path):
        raise InputError(f"file not found: {path}")
    with open(path, newline="") as f:
        reader = csv.reader(f)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise InputError(f"{path}: duplicate column names in header")
        rows: List[List[float]] = []
        for row in reader:
            if not row or all(not cell.strip() for cell in row):
                continue
            r = len(rows) + 1
            if len(row) != len(header):
                raise InputError(f"{path}: row {r} has {len(row)} fields, expected {len(header)}")
            values = []
            for name, cell in zip(header, row):
                if missing is not None and not cell.strip():
                    values.append(missing)
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    v = math.nan
                if not math.isfinite(v):
                    raise InputError(f"{path}: non-numeric value '{cell.strip()}' at row {r}, column '{name}'")
                values.append(v)
            rows.append(values)
    if not rows:
        raise InputError(f"{path}: no data rows")
    dataset = Dataset(tuple(header), np.array(rows, dtype=float))
    logger.debug("loaded %s: %d rows, %d columns", path, dataset.n_rows, len(header))
    if columns is not None:
        dataset = Dataset(tuple(columns), dataset.matrix(columns))
    return dataset


def write_csv(target: Union[str, TextIO], columns: Sequence[str], data) -> None:
    """Write a header and rows; floats use repr so they read back exactly, NaN as an empty cell."""
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    if data.shape[1] != len(columns):
        raise InputError(f"{data.shape[1]} data columns but {len(columns)} names")
    own = isinstance(target, str)
    f = open(target, "w", newline="") if own else target
    try:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in data:
            writer.writerow(["" if math.isnan(v) else repr(float(v)) for v in row])
    finally:
        if own:
            f.close()


def dataset_to_csv_text(dataset: Dataset) -> str:
    buf = io.StringIO()
    write_csv(buf, dataset.columns, dataset.data)
    return buf.getvalue()


class CounterRNG:
    """
    Draws built from a Philox 4x64 stream: 53-bit uniforms, Box-Muller
    normals and inverse-CDF exponentials. Identical seeds give identical
    draws on every platform.
    """

    def __init__(self, seed: int):
        if int(seed) != seed or seed < 0:
            raise InputError(f"seed must be a non-negative integer, got {seed}")
        self.seed = int(seed)
        self._bits = np.random.Philox(self.seed)

    def _raw53(self, size: int) -> np.ndarray:
        return (self._bits.random_raw(size) >> np.uint64(11)).astype(float)

    def uniform(self, size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
        """Uniform on [low, high)."""
        return low + (high - low) * self._raw53(size) * 2.0 ** -53

    def open_uniform(self, size: int) -> np.ndarray:
        """Uniform on (0, 1), safe to take logs of."""
        return (self._raw53(size) + 0.5) * 2.0 ** -53

    def normal(self, size: int, loc: float = 0.0, scale: float = 1.0) -> np.ndarray:
        m = (size + 1) // 2
        u1 = self.open_uniform(m)
        u2 = self.uniform(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.concatenate([r * np.cos(2.0 * np.pi * u2), r * np.sin(2.0 * np.pi * u2)])
        return loc + scale * z[:size]

    def exponential(self, size: int, rate: float = 1.0) -> np.ndarray:
        return -np.log(self.open_uniform(size)) / rate

    def student_t3(self, size: int) -> np.ndarray:
        z = self.normal(size)
        chi2 = np.sum(self.normal(3 * size).reshape(size, 3) ** 2, axis=1)
        return z / np.sqrt(chi2 / 3.0)

    def gamma2(self, size: int, rate: float) -> np.ndarray:
        """Gamma with shape 2: the sum of two exponentials."""
        return self.exponential(size, rate) + self.exponential(size, rate)

    def beta22(self, size: int) -> np.ndarray:
        """Beta(2, 2): the median of three uniforms."""
        return np.median(self.uniform(3 * size).reshape(size, 3), axis=1)

    def categorical(self, size: int, probs) -> np.ndarray:
        cdf = np.cumsum(probs)
        return np.minimum(np.searchsorted(cdf / cdf[-1], self.uniform(size), side="right"), len(cdf) - 1)

    def orthogonal(self, d: int) -> np.ndarray:
        q, r = np.linalg.qr(self.normal(d * d).reshape(d, d))
        return q * np.sign(np.diag(r))

    def permutation(self, n: int) -> np.ndarray:
        return np.argsort(self.uniform(n), kind="stable")


@dataclass(frozen=True)
class Simulation:
    dataset: Dataset
    truth: Dict[str, np.ndarray] = field(default_factory=dict)


def sine_kink(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return 3.0 * np.sin(2.0 * x) + 10.0 * (x > 5) * (x - 5.0)


def _names(prefix: str, d: int) -> List[str]:
    return [f"{prefix}{j + 1}" for j in range(d)]


def _sim_bimodal(rng: CounterRNG, n: int, d: int) -> Simulation:
    gauss = rng.uniform(n) < BIMODAL_GAUSS_WEIGHT
    x = np.where(gauss, rng.normal(n), rng.exponential(n) + 1.0)
    return Simulation(Dataset(("x",), x[:, None]), {"gaussian": gauss.astype(float)})


def _sim_sine_kink(rng: CounterRNG, n: int, d: int) -> Simulation:
    x = 10.0 * rng.beta22(n)
    fx = sine_kink(x)
    y = fx + rng.student_t3(n) + (rng.gamma2(n, 2.0) - 1.0) * ((x - 5.0) ** 2 + 3.0)
    return Simulation(Dataset(("x", "y"), np.column_stack([x, y])), {"f": fx})


def _sim_clusters(rng: CounterRNG, n: int, d: int, n_comp: int = 10) -> Simulation:
    mu = rng.uniform(n_comp * d).reshape(n_comp, d)
    sds = rng.exponential(n_comp * d).reshape(n_comp, d) / 7.0
    ps = rng.uniform(n_comp) + 0.1
    ps = ps / ps.sum()
    labels = rng.categorical(n, ps)
    X = mu[labels] + rng.normal(n * d).reshape(n, d) * sds[labels]
    data = np.column_stack([X, labels.astype(float)])
    return Simulation(
        Dataset(tuple(_names("x", d) + ["label"]), data),
        {"labels": labels, "means": mu, "sds": sds, "proportions": ps},
    )


def _ica_source(rng: CounterRNG, kind: int, n: int) -> np.ndarray:
    """Unit-variance, zero-mean sources: uniform, Laplace, bimodal mixture, exponential."""
    if kind == 0:
        return rng.uniform(n, -math.sqrt(3.0), math.sqrt(3.0))
    if kind == 1:
        sign = np.where(rng.uniform(n) < 0.5, -1.0, 1.0)
        return sign * rng.exponential(n) / math.sqrt(2.0)
    if kind == 2:
        sign = np.where(rng.uniform(n) < 0.5, -1.0, 1.0)
        return (2.0 * sign + 0.5 * rng.normal(n)) / math.sqrt(4.25)
    return rng.exponential(n) - 1.0


def _sim_ica(rng: CounterRNG, n: int, d: int) -> Simulation:
    S = np.column_stack([_ica_source(rng, j % 4, n) for j in range(d)])
    U, V = rng.orthogonal(d), rng.orthogonal(d)
    s = rng.uniform(d, 1.0, 2.0)
    mixing = U @ np.diag(s) @ V.T
    X = S @ mixing.T
    return Simulation(Dataset(tuple(_names("x", d)), X), {"mixing": mixing, "sources": S})


def _sim_ppr(rng: CounterRNG, n: int, d: int) -> Simulation:
    X = rng.normal(n * d).reshape(n, d) @ rng.uniform(d * d, -1.0, 1.0).reshape(d, d)
    w1, w2 = rng.normal(d), rng.normal(d)
    s1, s2 = X @ w1, X @ w2
    s1, s2 = s1 / np.std(s1), s2 / np.std(s2)
    signal = 2.0 * np.tanh(s1) + 0.5 * s2 ** 2
    y = signal + rng.normal(n, scale=0.5)
    return Simulation(
        Dataset(tuple(_names("x", d) + ["y"]), np.column_stack([X, y])),
        {"w1": w1, "w2": w2, "signal": signal},
    )


def _sim_uniform(rng: CounterRNG, n: int, d: int) -> Simulation:
    return Simulation(Dataset(tuple(_names("x", d)), rng.uniform(n * d).reshape(n, d)))


_GENERATORS = {
    "bimodal": _sim_bimodal,
    "sine_kink": _sim_sine_kink,
    "clusters": _sim_clusters,
    "ica": _sim_ica,
    "ppr": _sim_ppr,
    "uniform": _sim_uniform,
}


def simulate(kind: str, n: int, d: int = 1, seed: int = 1) -> Simulation:
    """
    bimodal: 2/3 N(0,1) + 1/3 (1 + Exp(1)); d ignored
    sine_kink: x = 10 Beta(2,2), y = 3 sin 2x + 10 (x-5) I(x>5) + t3 + (G-1)((x-5)^2 + 3), G ~ Gamma(2, rate 2)
    clusters: 10-component axis-aligned Gaussian mixture, labels in the last column
    ica: independent non-Gaussian sources mixed by U diag(s) V^T, s in [1, 2]
    ppr: correlated Gaussian X, y = 2 tanh(s1) + s2^2 / 2 + N(0, 0.25) on two random indices
    uniform: U[0, 1]^d
    """
    if kind not in _GENERATORS:
        raise InputError(f"unknown simulation kind '{kind}', choose from {', '.join(SIMULATION_KINDS)}")
    if n < 1 or d < 1:
        raise InputError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    logger.debug("simulating %s: n=%d d=%d seed=%d", kind, n, d, seed)
    return _GENERATORS[kind](CounterRNG(seed), n, d)


def train_test_split(n: int, test_fraction: float = 0.5, seed: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Row indices (train, test); without a seed the first rows are used for training."""
    if not 0 < test_fraction < 1:
        raise InputError(f"test_fraction must lie in (0, 1), got {test_fraction}")
    n_test = int(round(n * test_fraction))
    if n_test < 1 or n_test >= n:
        raise InputError(f"cannot split {n} rows with test fraction {test_fraction}")
    order = np.arange(n) if seed is None else CounterRNG(seed).permutation(n)
    return order[: n - n_test], order[n - n_test:]
