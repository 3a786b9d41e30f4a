"""Problem-instance data model, file ingestion, and instance generators.

A problem instance is a (train, validation) pair of datasets over a shared
feature space.  Generators produce synthetic instances with bounded entries
and uniformly jittered labels (so the label density is bounded by
kappa = 1 / (2 * kappa_jitter)), plus leave-one-out and Monte-Carlo
cross-validation draws from a fixed dataset.
"""

import json
import os
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, InvalidConfig, ParseError, TooFewRows


def _as_readonly(a, dtype=float):
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class Dataset:
    """A design matrix X (m rows, p features) with labels y (length m)."""

    X: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _as_readonly(np.atleast_2d(self.X)))
        object.__setattr__(self, "y", _as_readonly(np.ravel(self.y)))
        if self.X.ndim != 2:
            raise DimensionMismatch("X must be a matrix")
        if self.X.shape[0] != self.y.shape[0]:
            raise DimensionMismatch(
                f"X has {self.X.shape[0]} rows but y has {self.y.shape[0]} entries"
            )
        if not (np.all(np.isfinite(self.X)) and np.all(np.isfinite(self.y))):
            raise ParseError("dataset contains non-finite entries")

    @property
    def m(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    def max_abs(self):
        if self.X.size == 0:
            return float(np.max(np.abs(self.y), initial=0.0))
        return float(max(np.max(np.abs(self.X)), np.max(np.abs(self.y), initial=0.0)))


@dataclass(frozen=True)
class ProblemInstance:
    """One training set and one validation set sharing a feature space."""

    train: Dataset
    val: Dataset
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.train.p != self.val.p:
            raise DimensionMismatch(
                f"train has {self.train.p} features, val has {self.val.p}"
            )

    @property
    def p(self):
        return self.train.p


@dataclass(frozen=True)
class GeneratorConfig:
    """Settings for the bounded, smooth synthetic generator.

    Entries of X are i.i.d. uniform on [-R, R]; labels are X @ beta_star plus
    uniform noise on [-kappa_jitter, kappa_jitter], clamped back to [-R, R].
    The label noise density is 1 / (2 * kappa_jitter), recorded as ``kappa``
    in instance metadata.
    """

    m: int
    p: int
    m_prime: int
    R: float = 1.0
    kappa_jitter: float = 0.05
    beta_star: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        if min(self.m, self.p, self.m_prime) < 1:
            raise InvalidConfig("m, p, m_prime must all be >= 1")
        if not (self.R > 0 and np.isfinite(self.R)):
            raise InvalidConfig("R must be positive and finite")
        if not (self.kappa_jitter > 0 and self.kappa_jitter < self.R):
            raise InvalidConfig("kappa_jitter must lie in (0, R)")
        if self.beta_star is not None:
            b = np.ravel(np.asarray(self.beta_star, dtype=float))
            if b.shape[0] != self.p or not np.all(np.isfinite(b)):
                raise InvalidConfig("beta_star must be a finite vector of length p")
            object.__setattr__(self, "beta_star", _as_readonly(b))

    @property
    def kappa(self):
        return 1.0 / (2.0 * self.kappa_jitter)


def _default_beta(cfg, rng):
    # Scale so |x . beta| <= R - kappa_jitter whenever |x|_inf <= R, which
    # makes label clamping a measure-zero event.
    b = rng.standard_normal(cfg.p)
    l1 = np.sum(np.abs(b))
    target = 0.9 * (cfg.R - cfg.kappa_jitter) / cfg.R
    return b * (target / l1) if l1 > 0 else b


def _draw_dataset(cfg, beta, n_rows, rng):
    X = rng.uniform(-cfg.R, cfg.R, size=(n_rows, cfg.p))
    noise = rng.uniform(-cfg.kappa_jitter, cfg.kappa_jitter, size=n_rows)
    y = np.clip(X @ beta + noise, -cfg.R, cfg.R)
    return Dataset(X, y)


def gen_synthetic(cfg):
    """Draw one synthetic ProblemInstance; deterministic given cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    beta = cfg.beta_star if cfg.beta_star is not None else _default_beta(cfg, rng)
    train = _draw_dataset(cfg, beta, cfg.m, rng)
    val = _draw_dataset(cfg, beta, cfg.m_prime, rng)
    meta = {"kappa": cfg.kappa, "R": cfg.R, "seed": cfg.seed, "generator": "synthetic"}
    return ProblemInstance(train, val, meta)


def loocv_draw(full, seed):
    """Hold out one uniformly chosen row of ``full`` as the validation set."""
    n = full.m
    if n < 2:
        raise TooFewRows("leave-one-out needs at least 2 rows")
    j = int(np.random.default_rng(seed).integers(n))
    keep = np.arange(n) != j
    train = Dataset(full.X[keep], full.y[keep])
    val = Dataset(full.X[j : j + 1], full.y[j : j + 1])
    return ProblemInstance(train, val, {"generator": "loocv", "held_out": j, "seed": seed})


def mccv_draw(full, val_fraction, seed):
    """Uniformly random train/validation split without replacement."""
    if not 0.0 < val_fraction < 1.0:
        raise InvalidConfig("val_fraction must lie in (0, 1)")
    n = full.m
    n_val = int(np.floor(val_fraction * n))
    if n_val < 1 or int(np.floor((1.0 - val_fraction) * n)) < 1:
        raise TooFewRows(f"cannot split {n} rows with val_fraction={val_fraction}")
    perm = np.random.default_rng(seed).permutation(n)
    val_idx, train_idx = np.sort(perm[:n_val]), np.sort(perm[n_val:])
    train = Dataset(full.X[train_idx], full.y[train_idx])
    val = Dataset(full.X[val_idx], full.y[val_idx])
    return ProblemInstance(
        train, val, {"generator": "mccv", "val_fraction": val_fraction, "seed": seed}
    )


# -- file formats -------------------------------------------------------------
#
# json-bundle: {"train": {"X": [[..]], "y": [..]}, "val": {"X": [[..]], "y": [..]}}
# csv-pair:    a directory holding train_X.csv, train_y.csv, val_X.csv, val_y.csv
#              (headerless, comma separated, row-major; y one value per line)

_CSV_NAMES = ("train_X.csv", "train_y.csv", "val_X.csv", "val_y.csv")


def _parse_array(raw, what):
    try:
        a = np.asarray(raw, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"{what}: not numeric") from exc
    if not np.all(np.isfinite(a)):
        raise ParseError(f"{what}: contains NaN or Inf")
    return a


def _dataset_from_parts(X_raw, y_raw, what):
    X = _parse_array(X_raw, what + ".X")
    y = _parse_array(y_raw, what + ".y")
    if X.ndim == 1:
        X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
    if X.ndim != 2 or y.ndim != 1:
        raise ParseError(f"{what}: X must be a matrix and y a vector")
    if X.shape[0] != y.shape[0]:
        raise ParseError(f"{what}: X has {X.shape[0]} rows but y has {y.shape[0]}")
    return Dataset(X, y)


def _read_csv_matrix(path):
    try:
        rows = []
        with open(path) as fh:
            for line in fh:
                line = line.strip()
                if line:
                    rows.append([float(tok) for tok in line.split(",")])
    except (OSError, ValueError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if rows and any(len(r) != len(rows[0]) for r in rows):
        raise ParseError(f"{path}: ragged rows")
    return rows


def load_instance(path, format="json-bundle"):
    """Load and validate a ProblemInstance from disk.

    ``format`` is "json-bundle" (single JSON file) or "csv-pair" (directory of
    four headerless CSV files).  Raises ParseError on malformed or non-finite
    input and DimensionMismatch when train/val feature counts differ.
    """
    if format == "json-bundle":
        try:
            with open(path) as fh:
                blob = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ParseError(f"{path}: {exc}") from exc
        try:
            train_raw, val_raw = blob["train"], blob["val"]
            train = _dataset_from_parts(train_raw["X"], train_raw["y"], "train")
            val = _dataset_from_parts(val_raw["X"], val_raw["y"], "val")
        except (KeyError, TypeError) as exc:
            raise ParseError(f"{path}: missing train/val X/y fields") from exc
        meta = blob.get("meta", {})
    elif format == "csv-pair":
        parts = [_read_csv_matrix(os.path.join(path, name)) for name in _CSV_NAMES]
        train = _dataset_from_parts(parts[0], [r[0] for r in parts[1]], "train")
        val = _dataset_from_parts(parts[2], [r[0] for r in parts[3]], "val")
        meta = {}
    else:
        raise InvalidConfig(f"unknown format {format!r}")
    return ProblemInstance(train, val, meta)


def save_instance(inst, path):
    """Write a ProblemInstance as a json-bundle; floats keep full precision."""
    blob = {
        "train": {"X": inst.train.X.tolist(), "y": inst.train.y.tolist()},
        "val": {"X": inst.val.X.tolist(), "y": inst.val.y.tolist()},
        "meta": {k: v for k, v in inst.meta.items() if _jsonable(v)},
    }
    with open(path, "w") as fh:
        json.dump(blob, fh)


def _jsonable(v):
    return isinstance(v, (int, float, str, bool, type(None)))
