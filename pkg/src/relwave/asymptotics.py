"""Thin-width eigenvalue asymptotics: sweeps, fits, and sandwich checks.

For each half-width eps the discrete eigenvalues of the waveguide are the
square roots of the even-indexed min-max values of the squared-operator
form.  Subtracting the essential-spectrum edge and rescaling by eps gives
the splitting

    r_j(eps) = (lambda_j(eps) - E_1(m*eps)/eps) / eps,

which converges to (2/pi) times the j-th bound-state energy of the
effective 1-d operator; a linear fit in eps extracts the limit while
absorbing the first-order remainder.  The sandwich check brackets every
computed min-max value between the two comparison forms.
"""

from __future__ import annotations

import csv
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, asdict, replace

import numpy as np

from .effective import Grid1D, assemble_qe, effective_spectrum
from .eigensolve import SpectralResult, lowest_eigenpairs
from .geometry import CurveProfile, epsilon0
from .strip import (StripDiscretization, assemble_a_pm, assemble_fqunit,
                    estimate_sandwich_constant)
from .transverse import essential_threshold

__all__ = [
    "AsymptoticReport",
    "dirac_eigenvalues_from_square",
    "run_epsilon_sweep",
    "sandwich_report",
    "emit_report",
    "report_from_json",
    "default_report_name",
]


@dataclass
class AsymptoticReport:
    """Per-sweep record of eigenvalues, splittings, fits and references.

    Arrays indexed (i_eps, j); NaN marks entries absorbed into the
    essential spectrum or not computed.
    """

    profile: str
    m: float
    epsilons: list
    j_max: int
    lambdas: np.ndarray
    thresholds: np.ndarray
    splittings: np.ndarray
    absorbed: np.ndarray
    degeneracy_gaps: np.ndarray
    mu_hat: np.ndarray
    fit_slopes: np.ndarray
    fit_residuals: np.ndarray
    reference: np.ndarray
    rel_error: np.ndarray
    sandwich: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def row_iter(self):
        for i, eps in enumerate(self.epsilons):
            for j in range(self.j_max):
                yield {
                    "j": j + 1,
                    "epsilon": eps,
                    "lambda": self.lambdas[i, j],
                    "threshold": self.thresholds[i],
                    "splitting": self.splittings[i, j],
                    "mu_hat": self.mu_hat[j],
                    "reference": self.reference[j],
                    "rel_error": self.rel_error[j],
                }


def dirac_eigenvalues_from_square(square: SpectralResult | np.ndarray,
                                  j_max: int,
                                  neg_slack: float = 1e-9,
                                  degeneracy_tol: float = 1e-6):
    """Positive eigenvalues from the squared-operator min-max values.

    The j-th positive eigenvalue is the square root of the 2j-th min-max
    value of the square; the near-equality of the (2j-1, 2j) pair is the
    discrete echo of the spectral symmetry and is asserted here, with a
    failure downgraded to a recorded warning.

    Returns (lambdas, pair_gaps, warnings).
    """
    mu = square.eigenvalues if isinstance(square, SpectralResult) else np.asarray(square)
    if mu.size < 2 * j_max:
        raise ValueError(f"need at least {2 * j_max} squared values, got {mu.size}")
    scale = float(np.max(np.abs(mu))) or 1.0
    if np.any(mu[: 2 * j_max] < -neg_slack * scale):
        raise ValueError(
            "squared-operator value significantly negative: "
            "discretization inconsistency"
        )
    lams = np.empty(j_max)
    gaps = np.empty(j_max)
    warnings = []
    for j in range(1, j_max + 1):
        lo, hi = mu[2 * j - 2], mu[2 * j - 1]
        gap = abs(hi - lo) / max(abs(hi), 1e-300)
        gaps[j - 1] = gap
        if gap > degeneracy_tol:
            warnings.append(
                f"pair ({2 * j - 1}, {2 * j}) splits by {gap:.2e} relative"
            )
        lams[j - 1] = math.sqrt(max(hi, 0.0))
    return lams, gaps, warnings


def _fit_linear(eps: np.ndarray, r: np.ndarray):
    """Least-squares fit r = mu_hat + b*eps; returns (mu_hat, b, residuals)."""
    X = np.vstack([np.ones_like(eps), eps]).T
    coef, *_ = np.linalg.lstsq(X, r, rcond=None)
    res = r - X @ coef
    return float(coef[0]), float(coef[1]), res


def _worker_count() -> int:
    raw = os.environ.get("RELWAVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_epsilon_sweep(profile: CurveProfile, m: float, epsilons,
                      j_max: int = 1,
                      disc: StripDiscretization | None = None,
                      qe_nodes: int = 4000,
                      solver_tol: float = 1e-9,
                      seed: int = 0) -> AsymptoticReport:
    """Compute lambda_j over a decreasing list of half-widths and fit the
    splitting slope against the effective-operator reference.

    Entries at or above the essential-spectrum edge are marked absorbed
    and excluded from the fit.  All widths must stay below half the
    fold-over threshold.
    """
    epsilons = list(map(float, epsilons))
    if any(e2 >= e1 for e1, e2 in zip(epsilons, epsilons[1:])):
        raise ValueError("epsilons must be strictly decreasing")
    if any(e >= 0.5 * epsilon0(profile) for e in epsilons):
        raise ValueError("every epsilon must be below epsilon0/2")
    if disc is None:
        disc = StripDiscretization(epsilon=epsilons[0] if epsilons else 0.05, m=m)

    # reference spectrum of the effective operator on a matched window
    grid = Grid1D(half_length=disc.half_length, n=qe_nodes)
    eff = effective_spectrum(assemble_qe(profile, grid),
                             n_ev=max(j_max + 2, 6), seed=seed)
    j_eff = min(j_max, eff.J) if eff.J > 0 else 0
    reference = np.full(j_max, np.nan)
    reference[:j_eff] = (2.0 / math.pi) * eff.mu[:j_eff]

    n_eps = len(epsilons)
    lambdas = np.full((n_eps, j_max), np.nan)
    split = np.full((n_eps, j_max), np.nan)
    gaps = np.full((n_eps, j_max), np.nan)
    absorbed = np.zeros((n_eps, j_max), dtype=bool)
    thresholds = np.empty(n_eps)
    all_warnings: list = []

    def solve_one(i_eps):
        eps = epsilons[i_eps]
        d = replace(disc, epsilon=eps, m=m)
        form = assemble_fqunit(profile, d)
        n_ev = 2 * j_max + 4
        res = lowest_eigenpairs(form, n_ev, tol=solver_tol, seed=seed)
        return i_eps, res

    workers = min(_worker_count(), n_eps)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            solved = list(pool.map(solve_one, range(n_eps)))
    else:
        solved = [solve_one(i) for i in range(n_eps)]

    for i_eps, res in sorted(solved, key=lambda t: t[0]):
        eps = epsilons[i_eps]
        thr = essential_threshold(m, eps)
        thresholds[i_eps] = thr
        lams, pair_gaps, warns = dirac_eigenvalues_from_square(res, j_max)
        all_warnings.extend(f"eps={eps}: {w}" for w in warns)
        for j in range(j_max):
            lambdas[i_eps, j] = lams[j]
            gaps[i_eps, j] = pair_gaps[j]
            if lams[j] >= thr * (1.0 - 1e-12):
                absorbed[i_eps, j] = True
            else:
                split[i_eps, j] = (lams[j] - thr) / eps

    mu_hat = np.full(j_max, np.nan)
    slopes = np.full(j_max, np.nan)
    fit_res = np.full(j_max, np.nan)
    rel_err = np.full(j_max, np.nan)
    eps_arr = np.asarray(epsilons)
    for j in range(j_max):
        ok = ~absorbed[:, j] & np.isfinite(split[:, j])
        if ok.sum() >= 3:
            mu_hat[j], slopes[j], res_j = _fit_linear(eps_arr[ok], split[ok, j])
            fit_res[j] = float(np.max(np.abs(res_j)))
            if np.isfinite(reference[j]) and reference[j] != 0:
                rel_err[j] = abs(mu_hat[j] - reference[j]) / abs(reference[j])

    return AsymptoticReport(
        profile=profile.name, m=m, epsilons=epsilons, j_max=j_max,
        lambdas=lambdas, thresholds=thresholds, splittings=split,
        absorbed=absorbed, degeneracy_gaps=gaps,
        mu_hat=mu_hat, fit_slopes=slopes, fit_residuals=fit_res,
        reference=reference, rel_error=rel_err,
        provenance={
            "J": eff.J,
            "effective_mu": eff.mu.tolist(),
            "qe_nodes": qe_nodes,
            "half_length": disc.half_length,
            "n_s": disc.n_s,
            "backend": disc.backend,
            "n_modes": disc.n_modes,
            "n_t": disc.n_t,
            "solver_tol": solver_tol,
            "seed": seed,
            "warnings": all_warnings,
        },
    )


def sandwich_report(profile: CurveProfile, m: float, eps_values,
                    disc: StripDiscretization | None = None,
                    c: float | None = None, j_count: int = 4,
                    solver_tol: float = 1e-9, seed: int = 0) -> dict:
    """Bracket the squared-form min-max values between the sandwich forms.

    A single comparison constant is used across all requested widths (the
    estimator evaluated at the smallest one, where it is sharpest, still
    valid for the larger widths by a posteriori matrix-level checking).
    An ordering violation raises: it signals an assembly bug or
    insufficient resolution, not a tolerance issue.
    """
    eps_values = sorted(map(float, np.atleast_1d(eps_values)), reverse=True)
    if disc is None:
        disc = StripDiscretization(epsilon=eps_values[0], m=m)
    if c is None:
        c = estimate_sandwich_constant(profile, min(eps_values))

    grid = Grid1D(half_length=disc.half_length, n=4000)
    eff = effective_spectrum(assemble_qe(profile, grid),
                             n_ev=max(j_count, 4), seed=seed)
    mu_pair = np.sort(np.repeat(eff.mu, 2))[:j_count]

    records = []
    for eps in eps_values:
        d = replace(disc, epsilon=eps, m=m)
        f_mid = assemble_fqunit(profile, d)
        f_lo = assemble_a_pm(profile, d, c, -1)
        f_hi = assemble_a_pm(profile, d, c, +1)
        k = max(j_count + 2, 6)
        w_mid = lowest_eigenpairs(f_mid, k, tol=solver_tol, seed=seed).eigenvalues
        w_lo = lowest_eigenpairs(f_lo, k, tol=solver_tol, seed=seed).eigenvalues
        w_hi = lowest_eigenpairs(f_hi, k, tol=solver_tol, seed=seed).eigenvalues
        slack = 1e-12
        for j in range(j_count):
            scale = max(abs(w_mid[j]), 1.0)
            if not (w_lo[j] <= w_mid[j] + slack * scale
                    and w_mid[j] <= w_hi[j] + slack * scale):
                raise RuntimeError(
                    f"sandwich ordering violated at eps={eps}, j={j + 1}: "
                    f"{w_lo[j]} / {w_mid[j]} / {w_hi[j]}"
                )
        thr = essential_threshold(m, eps)
        deviation = np.abs(w_mid[:j_count] - thr**2 - mu_pair)
        records.append({
            "epsilon": eps,
            "mu_minus": w_lo[:j_count].tolist(),
            "mu_fq": w_mid[:j_count].tolist(),
            "mu_plus": w_hi[:j_count].tolist(),
            "gap_1": float(w_hi[0] - w_lo[0]),
            "deviation": deviation.tolist(),
            "deviation_over_eps": (deviation / eps).tolist(),
        })
    return {
        "profile": profile.name,
        "m": m,
        "c": float(c),
        "j_count": j_count,
        "records": records,
    }


# ---------------------------------------------------------------------------
# report I/O
# ---------------------------------------------------------------------------

def default_report_name(profile: str, m: float, eps: float) -> str:
    return f"{profile}_{m:g}_{eps:g}.csv"


_CSV_COLUMNS = ["j", "epsilon", "lambda", "threshold", "splitting",
                "mu_hat", "reference", "rel_error"]


def emit_report(report: AsymptoticReport, fmt: str, path) -> None:
    """Write the sweep report as CSV rows or a JSON document."""
    if fmt == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_CSV_COLUMNS)
            writer.writeheader()
            for row in report.row_iter():
                writer.writerow({k: _fmt_num(row[k]) if k != "j" else row[k]
                                 for k in _CSV_COLUMNS})
    elif fmt == "json":
        doc = asdict(report)
        for key, val in doc.items():
            if isinstance(val, np.ndarray):
                doc[key] = val.tolist()
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=2)
    else:
        raise ValueError("format must be 'csv' or 'json'")


def _fmt_num(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return "nan"
    return f"{x:.16e}"


def report_from_json(path) -> AsymptoticReport:
    """Inverse of the JSON emitter, field for field."""
    with open(path) as fh:
        doc = json.load(fh)
    arrays = ["lambdas", "thresholds", "splittings", "degeneracy_gaps",
              "mu_hat", "fit_slopes", "fit_residuals", "reference",
              "rel_error"]
    for key in arrays:
        doc[key] = np.asarray(doc[key], dtype=float)
    doc["absorbed"] = np.asarray(doc["absorbed"], dtype=bool)
    return AsymptoticReport(**doc)
