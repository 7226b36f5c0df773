"""Data ingestion and the half-day forecasting pipeline."""
from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field

import numpy as np

from .chordal import complete, inv_pd
from .errors import MissingValue, ModelError, ParseError, SingularBlock
from .estimators import bayes_bundle, mle_g, reference_bundle, sample_cov
from .graph import JunctionTree, banded_graph
from .priors import parse_prior


@dataclass(frozen=True)
class Dataset:
    values: np.ndarray
    labels: tuple
    transform: str = "raw"   # raw | sqrt-quarter
    source: str = ""

    @property
    def n(self):
        return self.values.shape[0]

    @property
    def r(self):
        return self.values.shape[1]


def ingest(src, sqrt_transform=False, header=False) -> Dataset:
    """Read a numeric CSV (path or text). ``sqrt_transform`` applies x = (N + 1/4)^(1/2)."""
    if isinstance(src, str) and os.path.exists(src):
        with open(src, newline="") as fh:
            text = fh.read()
        source = src
    else:
        text, source = str(src), "<text>"
    rows = [row for row in csv.reader(io.StringIO(text)) if row and any(c.strip() for c in row)]
    if not rows:
        raise ParseError("empty CSV")
    labels = tuple(c.strip() for c in rows[0]) if header else None
    body = rows[1:] if header else rows
    width = len(body[0]) if body else 0
    vals = np.empty((len(body), width))
    for i, row in enumerate(body):
        if len(row) != width:
            raise ParseError(f"row {i + 1} has {len(row)} fields, expected {width}")
        for j, cell in enumerate(row):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan"):
                raise MissingValue(f"missing value at row {i + 1}, column {j + 1}")
            try:
                vals[i, j] = float(cell)
            except ValueError:
                raise ParseError(f"non-numeric cell {cell!r} at row {i + 1}, column {j + 1}") from None
    if not len(vals):
        raise ParseError("CSV has no data rows")
    if labels is None:
        labels = tuple(f"x{j + 1}" for j in range(width))
    if sqrt_transform:
        if (vals < -0.25).any():
            raise ParseError("counts below -1/4 cannot be square-root transformed")
        vals = np.sqrt(vals + 0.25)
    return Dataset(vals, labels, "sqrt-quarter" if sqrt_transform else "raw", source)


def half_split_predict(x, split, sigma, mu):
    """Best linear predictor of columns [split:] from columns [:split] for each row of x."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    sigma = np.asarray(sigma, dtype=float)
    mu = np.asarray(mu, dtype=float)
    s11 = sigma[:split, :split]
    s21 = sigma[split:, :split]
    coef = s21 @ inv_pd(s11, SingularBlock, "leading covariance block")
    return mu[split:] + (x[:, :split] - mu[:split]) @ coef.T


def forecast_errors(x, split, sigma, mu):
    """Average absolute error at each predicted time point (column)."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    pred = half_split_predict(x, split, sigma, mu)
    return np.abs(pred - x[:, split:]).mean(axis=0)


def fold_bounds(n, K):
    """Contiguous folds in row order: sizes ceil(n/K) first, then the remainder sizes."""
    if not 1 <= K <= n:
        raise ValueError(f"need 1 <= K <= n, got K={K}, n={n}")
    edges = np.cumsum([0] + [len(a) for a in np.array_split(np.arange(n), K)])
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


def fit_sigma(train, t: JunctionTree, prior, which="sigma_l2"):
    """Completed covariance estimate from centered training rows.

    ``prior`` is a prior spec (string or PriorSpec), or one of "mle", "mle_g".
    """
    from .modelselect import resolve_prior

    n = train.shape[0]
    S = sample_cov(train)
    if prior == "mle":
        return S
    if prior == "mle_g":
        return complete(mle_g(S, t, n)[1])
    spec = parse_prior(prior) if isinstance(prior, str) else prior
    if spec.kind == "reference":
        b = reference_bundle(n, S, t)
    else:
        b = bayes_bundle(resolve_prior(spec, t, train), n, S)
    return b.matrices()[which]


def kfold_cv(data, candidates, K, prior, split=None, which="sigma_l2"):
    """Mean over folds of the average absolute half-split forecast error, per candidate.

    A candidate that cannot be fitted on some fold scores None.
    """
    data = np.asarray(data, dtype=float)
    n, r = data.shape
    split = r // 2 if split is None else split
    out = []
    bounds = fold_bounds(n, K)
    for _, t in candidates:
        errs = []
        try:
            for a, b in bounds:
                train = np.concatenate([data[:a], data[b:]])
                test = data[a:b]
                mu = train.mean(axis=0)
                sig = fit_sigma(train - mu, t, prior, which)
                errs.append(forecast_errors(test, split, sig, mu).mean())
            out.append(float(np.mean(errs)))
        except ModelError:
            out.append(None)
    return out


@dataclass
class ForecastReport:
    errors: dict            # estimator label -> per-time-point error array
    split: int
    train_size: int
    baseline: str = "mle"
    summary: dict = field(default_factory=dict)

    def reductions(self):
        """Percent reduction of the mean error relative to the baseline estimator."""
        base = self.errors.get(self.baseline)
        if base is None:
            return {}
        b = float(np.mean(base))
        return {k: 100.0 * (1 - float(np.mean(v)) / b) for k, v in self.errors.items()}

    def to_json(self):
        return {
            "split": self.split,
            "train_size": self.train_size,
            "baseline": self.baseline,
            "mean_error": {k: float(np.mean(v)) for k, v in self.errors.items()},
            "reduction_pct": self.reductions(),
            "errors": {k: [float(e) for e in v] for k, v in self.errors.items()},
        }

    def to_csv(self):
        keys = list(self.errors)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_point"] + keys)
        for i in range(len(self.errors[keys[0]])):
            w.writerow([self.split + i + 1] + [f"{self.errors[k][i]:.10g}" for k in keys])
        return buf.getvalue()


def forecast_report(dataset, train_size, estimators, t: JunctionTree, split=None,
                    truth=None) -> ForecastReport:
    """Train on the first ``train_size`` rows, forecast the second block on the rest.

    ``estimators`` maps labels to prior specs (or "mle", "mle_g"); ``truth`` adds
    an oracle row using the given covariance.
    """
    x = dataset.values if isinstance(dataset, Dataset) else np.asarray(dataset, dtype=float)
    n, r = x.shape
    if not 0 < train_size < n:
        raise ValueError(f"train size must be in 1..{n - 1}")
    split = r // 2 if split is None else split
    train, test = x[:train_size], x[train_size:]
    mu = train.mean(axis=0)
    errors = {}
    for label, spec in estimators.items():
        try:
            sig = fit_sigma(train - mu, t, spec)
        except ModelError:
            continue
        errors[label] = forecast_errors(test, split, sig, mu)
    if truth is not None:
        errors["truth"] = forecast_errors(test, split, truth, mu)
    return ForecastReport(errors, split, train_size)


def synthetic_call_center(n=239, r=102, k=4, seed=0):
    """Day-by-interval data with a smooth intraday mean and a k-banded precision.

    Returns (data, true covariance).
    """
    rng = np.random.default_rng(np.random.SeedSequence([seed, 239102]))
    t = banded_graph(r, k)
    lag = 0.55 * 0.6 ** np.arange(1, k + 1)
    omega = np.eye(r)
    for d, v in enumerate(lag, start=1):
        omega -= v * (np.eye(r, k=d) + np.eye(r, k=-d)) / 2
    omega = omega * t.mask
    # rescale so the marginal variances look like sqrt counts
    sig = inv_pd(omega)
    sd = 0.8 + 0.4 * np.sin(np.linspace(0, np.pi, r))
    sig = sig * np.outer(sd, sd) / np.sqrt(np.outer(np.diag(sig), np.diag(sig)))
    mu = 8 + 6 * np.sin(np.linspace(0.2, np.pi - 0.2, r))
    z = rng.standard_normal((n, r)) @ np.linalg.cholesky(sig).T
    return mu + z, sig
