"""Monte-Carlo RMSE / solve-time sweeps over the snapshot count."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .array_model import ArrayGeometry, SourceConfig, analytic_ccm, simulate
from .covariance import ConfigurationError, estimate_error_model, sample_ccm, vec
from .metrics import match_and_rmse
from .retrieval import retrieve
from .solver import NumericError, SdpProblem, SolverOptions, solve

log = logging.getLogger(__name__)

METHODS = ("cc_anm", "mcc_anm")
TRIAL_COLUMNS = ("method", "L", "trial", "rmse_deg", "solve_seconds", "k_hat")
AGGREGATE_COLUMNS = ("method", "L", "rmse_deg", "mean_solve_seconds", "median_solve_seconds",
                     "trials_used", "failures", "k_hat_match_rate")


@dataclass
class BenchSpec:
    """One experiment: a geometry, a source scene and a snapshot sweep.

    ``eta`` is either a fixed CC-ANM radius or ``"oracle"``, which uses the
    Frobenius norm of the actual cross-covariance error of each trial.
    """

    geometry: ArrayGeometry
    sources: SourceConfig
    snapshot_grid: list
    trials: int = 400
    methods: tuple = ("mcc_anm",)
    eta: float | str | None = None
    kappa: float = 1e-4
    seed: int = 0
    tau: float = 1e-3
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        self.snapshot_grid = [int(v) for v in self.snapshot_grid]
        self.methods = tuple(self.methods)
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not self.snapshot_grid or any(b <= a for a, b in zip(self.snapshot_grid, self.snapshot_grid[1:])):
            raise ValueError("snapshot_grid must be nonempty and strictly ascending")
        if any(l < 1 for l in self.snapshot_grid):
            raise ValueError("snapshot counts must be positive")
        unknown = set(self.methods) - set(METHODS)
        if unknown or not self.methods:
            raise ValueError(f"methods must be a nonempty subset of {METHODS}, got {self.methods}")
        if "cc_anm" in self.methods:
            if self.eta is None:
                raise ValueError("cc_anm needs eta (a number or 'oracle')")
            if self.eta != "oracle" and float(self.eta) < 0:
                raise ValueError("eta must be non-negative")

    @property
    def snr_db(self) -> float:
        return self.sources.snr_db

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSpec":
        d = dict(d)
        geometry = ArrayGeometry.from_dict(d)
        sources = SourceConfig.from_dict(d)
        eta = d.get("eta")
        return cls(
            geometry=geometry,
            sources=sources,
            snapshot_grid=d.get("snapshot_grid", [50, 100, 150, 200]),
            trials=int(d.get("trials", 400)),
            methods=tuple(d.get("methods", ("mcc_anm",))),
            eta=eta if eta in (None, "oracle") else float(eta),
            kappa=float(d.get("kappa", 1e-4)),
            seed=int(d.get("seed", sources.seed)),
            tau=float(d.get("tau", 1e-3)),
            solver=SolverOptions.from_dict(d.get("solver")),
        )


def trial_seed(master: int, l: int, trial: int) -> np.random.SeedSequence:
    """Seed of one trial, hashed from the master seed and the (L, trial) counter.

    Every method sees the same data for a given (L, trial).
    """
    return np.random.SeedSequence([int(master), int(l), int(trial)])


def run_trial(spec: BenchSpec, l: int, trial: int) -> list[dict]:
    """Simulate one data set and run every requested method on it."""
    snaps = simulate(spec.geometry, spec.sources, l, seed=trial_seed(spec.seed, l, trial))
    ccm = sample_ccm(snaps)
    rows = []
    for method in spec.methods:
        row = {"method": method, "L": l, "trial": trial,
               "rmse_deg": float("nan"), "solve_seconds": float("nan"), "k_hat": -1}
        try:
            if method == "cc_anm":
                if spec.eta == "oracle":
                    r_true = vec(analytic_ccm(spec.geometry, spec.sources))
                    eta = float(np.linalg.norm(ccm.r_hat - r_true))
                else:
                    eta = float(spec.eta)
                problem = SdpProblem.ball(spec.geometry, ccm.r_hat, eta)
            else:
                em = estimate_error_model(snaps, spec.kappa)
                problem = SdpProblem.whitened(spec.geometry, ccm.r_hat, em)
            sol = solve(problem, spec.solver)
            est = retrieve(sol.tlt, tau=spec.tau)
            row.update(rmse_deg=match_and_rmse(spec.sources, est),
                       solve_seconds=sol.solve_seconds, k_hat=est.k_hat)
        except (NumericError, ConfigurationError, ValueError, np.linalg.LinAlgError) as exc:
            log.warning("trial failed (method=%s, L=%d, trial=%d): %s", method, l, trial, exc)
        rows.append(row)
    return rows


def run_bench(spec: BenchSpec, n_jobs: int = 1, progress=None) -> list[dict]:
    """Run every (L, trial) and return per-trial rows ordered by method, L, trial."""
    tasks = [(l, t) for l in spec.snapshot_grid for t in range(spec.trials)]
    if n_jobs == 1:
        results = []
        for i, (l, t) in enumerate(tasks):
            results.append(run_trial(spec, l, t))
            if progress is not None:
                progress(i + 1, len(tasks))
    else:
        from joblib import Parallel, delayed
        results = Parallel(n_jobs=n_jobs)(delayed(run_trial)(spec, l, t) for l, t in tasks)
    rows = [row for group in results for row in group]
    order = {m: i for i, m in enumerate(spec.methods)}
    rows.sort(key=lambda r: (order[r["method"]], r["L"], r["trial"]))
    return rows


def aggregate(rows: list[dict], k_true: int | None = None) -> list[dict]:
    """Per (method, L) RMSE over successful trials plus timing statistics."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row["method"], row["L"]), []).append(row)
    out = []
    for (method, l), grp in groups.items():
        ok = [r for r in grp if np.isfinite(r["rmse_deg"])]
        err = np.array([r["rmse_deg"] for r in ok])
        secs = np.array([r["solve_seconds"] for r in ok])
        rate = (float(np.mean([r["k_hat"] == k_true for r in ok]))
                if ok and k_true is not None else float("nan"))
        out.append({
            "method": method,
            "L": l,
            "rmse_deg": float(np.sqrt(np.mean(err ** 2))) if ok else float("nan"),
            "mean_solve_seconds": float(secs.mean()) if ok else float("nan"),
            "median_solve_seconds": float(np.median(secs)) if ok else float("nan"),
            "trials_used": len(ok),
            "failures": len(grp) - len(ok),
            "k_hat_match_rate": rate,
        })
    return out


def write_csv(rows: list[dict], path, columns) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(columns), extrasaction="ignore",
                                lineterminator="\r\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({k: ("" if isinstance(row[k], float) and np.isnan(row[k]) else row[k])
                             for k in columns})


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def bootstrap_rmse(sq_errors, n_boot: int = 2000, seed: int = 0) -> np.ndarray:
    """Bootstrap replicates of the RMSE of per-trial squared errors."""
    sq = np.asarray(sq_errors, dtype=float)
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, sq.size, size=(n_boot, sq.size))
    return np.sqrt(sq[idx].mean(axis=1))
