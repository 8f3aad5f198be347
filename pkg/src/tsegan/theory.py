"""Numerical checks of the Metric-GAN / WGAN objective relations.

Notation: ``c`` stands in for SI-SNR(s, s) (infinite in theory, a large finite
constant here), ``d`` for SI-SNR(G(x), s), ``dss``/``dgs`` for the real-valued
discriminator outputs on the clean and enhanced pairs. With ``a = c - dss`` and
``b = dgs - d`` the absolute-residual objective satisfies

    |a| + |b| >= |a + b| = |(c - d) - (dss - dgs)|

with equality exactly when ``a`` and ``b`` share a sign.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import spearmanr

from .metrics import CAP_DB, si_snr, snr


@dataclass
class TheorySample:
    c: float
    d: float
    dss: float
    dgs: float

    def __post_init__(self):
        if not np.isfinite([self.c, self.d, self.dss, self.dgs]).all():
            raise ValueError("TheorySample values must be finite")
        if not self.c > self.d:
            raise ValueError(f"need c > d, got c={self.c}, d={self.d}")

    @property
    def lhs(self) -> float:
        return abs(self.c - self.dss) + abs(self.dgs - self.d)

    @property
    def rhs(self) -> float:
        return abs((self.c - self.d) - (self.dss - self.dgs))


@dataclass
class TheoryReport:
    name: str
    samples: int
    violations: int = 0
    max_violation: float = 0.0
    tolerance: float = 0.0
    equality_residuals: dict[str, float] = field(default_factory=dict)
    skipped: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.violations == 0 and not self.skipped

    def summary(self) -> str:
        status = "SKIPPED" if self.skipped else ("PASS" if self.passed else "FAIL")
        line = (
            f"{self.name}: {status} samples={self.samples} violations={self.violations} "
            f"max_violation={self.max_violation:.3e} tol={self.tolerance:g}"
        )
        extras = [f"{k}={v:.3e}" for k, v in self.equality_residuals.items()]
        return " ".join([line, *extras, *self.notes])


def reports_to_csv(reports: list[TheoryReport]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["check", "status", "samples", "violations", "max_violation", "tolerance"])
    for r in reports:
        status = "skipped" if r.skipped else ("pass" if r.passed else "fail")
        w.writerow([r.name, status, r.samples, r.violations, f"{r.max_violation:.6e}", r.tolerance])
    return buf.getvalue()


def minkowski_gap(c, d, dss, dgs):
    """LHS - RHS of the bound; non-negative wherever the inequality holds."""
    c, d, dss, dgs = map(np.asarray, (c, d, dss, dgs))
    return np.abs(c - dss) + np.abs(dgs - d) - np.abs((c - d) - (dss - dgs))


def check_minkowski(
    n_samples: int,
    seed: int = 0,
    tol: float = 1e-9,
    c: float | None = None,
    low: float = -200.0,
    high: float = 200.0,
    chunk: int = 250_000,
) -> TheoryReport:
    """Sample (c, d, dss, dgs) uniformly and count bound violations beyond ``tol``.

    With ``c=None`` both c and d are drawn and ordered so that c > d;
    otherwise c is fixed and d is drawn below it.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    violations, worst, done = 0, 0.0, 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        dss, dgs = rng.uniform(low, high, (2, m))
        if c is None:
            u, v = rng.uniform(low, high, (2, m))
            while np.any(u == v):
                v = np.where(u == v, rng.uniform(low, high, m), v)
            cc, dd = np.maximum(u, v), np.minimum(u, v)
        else:
            cc = np.full(m, float(c))
            dd = rng.uniform(min(low, c - 1.0), c, m)
        deficit = -minkowski_gap(cc, dd, dss, dgs)
        bad = deficit > tol
        violations += int(bad.sum())
        worst = max(worst, float(deficit.max(initial=0.0)))
        done += m
    label = "minkowski" if c is None else f"minkowski(c={c:g})"
    return TheoryReport(label, n_samples, violations, max(worst, 0.0), tol)


def equality_grid(c: float = 120.0, d: float = 15.0, span: int = 20) -> dict[str, np.ndarray]:
    """Integer-valued (dss, dgs) grids for branch (i), branch (ii) and the off-condition set.

    Integers keep every sum exact in floating point, so equality can be tested with ``==``.
    """
    steps = np.arange(0, span + 1, dtype=float)
    a, b = np.meshgrid(steps, steps, indexing="ij")
    a, b = a.ravel(), b.ravel()
    branch_i = np.stack([c - a, d + b], axis=1)                 # dss <= c, dgs >= d
    branch_ii = np.stack([np.full(span, c), d - steps[1:]], axis=1)  # dss == c, dgs < d
    pos = steps[1:]
    pa, pb = np.meshgrid(pos, pos, indexing="ij")
    pa, pb = pa.ravel(), pb.ravel()
    off = np.concatenate(
        [np.stack([c - pa, d - pb], axis=1), np.stack([c + pa, d + pb], axis=1)]
    )  # a, b of opposite sign
    return {"i": branch_i, "ii": branch_ii, "off": off}


def check_equality_conditions(grid: dict[str, np.ndarray] | None = None, c: float = 120.0, d: float = 15.0, tol: float = 1e-9) -> TheoryReport:
    """Equality on branches (i)/(ii), the accompanying orderings, and strict inequality off them."""
    grid = grid or equality_grid(c, d)
    failures = 0
    residuals = {}
    notes = []
    for branch in ("i", "ii"):
        pts = grid[branch]
        dss, dgs = pts[:, 0], pts[:, 1]
        gap = minkowski_gap(c, d, dss, dgs)
        residuals[f"max_residual_{branch}"] = float(np.abs(gap).max())
        failures += int(np.count_nonzero(gap != 0.0))
        if branch == "i":
            ok = (c - d) >= (dss - dgs)
        else:
            ok = (c - d) < (dss - dgs)
        bad_order = int(np.count_nonzero(~ok))
        if bad_order:
            notes.append(f"branch({branch}) ordering fails at {bad_order} points")
        failures += bad_order
    off = grid["off"]
    margin = minkowski_gap(c, d, off[:, 0], off[:, 1])
    residuals["min_margin_off"] = float(margin.min())
    failures += int(np.count_nonzero(margin <= tol))
    n = sum(len(v) for v in grid.values())
    return TheoryReport("equality_conditions", n, failures, 0.0, tol, residuals, notes=notes)


def argmin_first(values) -> int:
    return int(np.argmin(values))


def check_scalar_norm_equivalence(candidates) -> TheoryReport:
    """argmin of y^2 and of |y| pick the same candidate (first index on ties).

    ``candidates`` is one list or a list of lists.
    """
    lists = candidates
    if len(lists) and np.ndim(lists[0]) == 0:
        lists = [lists]
    if len(lists) == 0 or any(len(c) == 0 for c in lists):
        raise ValueError("candidate lists must be non-empty")
    mismatches = 0
    for cand in lists:
        y = np.asarray(cand, dtype=float)
        if argmin_first(y * y) != argmin_first(np.abs(y)):
            mismatches += 1
    return TheoryReport("scalar_norm_equivalence", len(lists), mismatches)


def random_candidate_lists(n_lists: int, seed: int = 0, max_len: int = 12) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_lists):
        k = int(rng.integers(1, max_len + 1))
        y = rng.normal(scale=rng.choice([1e-3, 1.0, 100.0]), size=k)
        if k > 1 and rng.random() < 0.2:
            y[rng.integers(k)] = -y[0]  # force |y| ties
        out.append(y)
    return out


# ---------------------------------------------------------------------------
# regime equivalence: absolute objective vs Wasserstein-style objective


@dataclass
class ToyProblem:
    """Fixed clean signal, noisy inputs at several levels and a frozen shrinkage generator."""

    clean: np.ndarray
    enhanced: list[np.ndarray]
    probes: list[np.ndarray]

    @classmethod
    def build(cls, n_train: int = 24, n_probes: int = 12, length: int = 256, seed: int = 0, gain: float = 0.8):
        rng = np.random.default_rng(seed)
        t = np.arange(length)
        clean = np.sin(2 * np.pi * 5 * t / length) + 0.5 * np.sin(2 * np.pi * 13 * t / length + 1.0)

        def frozen_generator(x):
            return gain * x

        def noisy(level):
            return clean + level * rng.standard_normal(length)

        train_levels = np.exp(rng.uniform(np.log(0.01), np.log(2.0), n_train))
        probe_levels = np.geomspace(0.005, 3.0, n_probes)
        enhanced = [frozen_generator(noisy(lv)) for lv in train_levels]
        probes = [frozen_generator(noisy(lv)) for lv in probe_levels]
        return cls(clean, enhanced, probes)


def _feature(y: np.ndarray, s: np.ndarray) -> float:
    # the scalar discriminators are affine in plain SNR (dB)
    return snr(y, s).value


def _fit_absolute(gaps: np.ndarray, targets: np.ndarray, w_max: float) -> float:
    """argmin_w mean|target - w*gap| over |w| <= w_max: a weighted median, clipped."""
    nz = gaps != 0
    if not np.any(nz):
        return 0.0
    ratios = targets[nz] / gaps[nz]
    weights = np.abs(gaps[nz])
    order = np.argsort(ratios)
    cum = np.cumsum(weights[order])
    w = ratios[order][np.searchsorted(cum, 0.5 * cum[-1])]
    return float(np.clip(w, -w_max, w_max))


def check_regime_equivalence(
    problem: ToyProblem | None = None,
    c: float = CAP_DB,
    bias: float = 0.0,
    w_max: float = 1.0,
    min_probes: int = 10,
) -> TheoryReport:
    """Fit two scalar discriminators ``D(y, s) = w * snr_db(y, s) + bias`` on the same data.

    One minimizes ``mean|(c - d) - (D(s,s) - D(G(x),s))|``, the other
    ``mean[-D(s,s) + D(G(x),s)]``; both under ``|w| <= w_max``. The bias cancels
    in both objectives, so it only decides whether the regime
    ``D(G(x), s) >= d`` holds. Outside that regime the check is skipped and
    flagged. Inside it, both discriminators must rank the probes identically
    (Spearman correlation 1).
    """
    problem = problem or ToyProblem.build()
    s = problem.clean
    phi_ss = _feature(s, s)
    phi = np.array([_feature(y, s) for y in problem.enhanced])
    d = np.array([si_snr(y, s).value for y in problem.enhanced])
    gaps = phi_ss - phi
    w_abs = _fit_absolute(gaps, c - d, w_max)
    w_was = w_max * np.sign(np.mean(gaps))  # maximizes mean[D(s,s) - D(G(x),s)]

    probe_phi = np.array([_feature(y, s) for y in problem.probes])
    probe_d = np.array([si_snr(y, s).value for y in problem.probes])
    report = TheoryReport("regime_equivalence", len(problem.probes))
    d_gs_abs = w_abs * np.concatenate([phi, probe_phi]) + bias
    in_regime = d_gs_abs >= np.concatenate([d, probe_d])
    report.equality_residuals = {"w_abs": w_abs, "w_wasserstein": float(w_was)}
    if not np.all(in_regime):
        report.skipped = True
        report.notes.append(f"regime D(G(x),s) >= d violated at {int((~in_regime).sum())} points; check skipped")
        return report
    if len(problem.probes) < min_probes:
        report.notes.append(f"only {len(problem.probes)} probes (< {min_probes})")
    scores_abs = w_abs * probe_phi + bias
    scores_was = w_was * probe_phi + bias
    if len(problem.probes) < 2:
        rho = 1.0
    else:
        rho = float(spearmanr(scores_abs, scores_was).statistic)
        if np.isnan(rho):  # constant scores on one side
            rho = 1.0 if np.array_equal(np.argsort(scores_abs), np.argsort(scores_was)) else 0.0
    report.equality_residuals["spearman"] = rho
    if rho < 1.0 - 1e-12:
        report.violations = 1
        report.max_violation = 1.0 - rho
    return report


def verify_all(n_samples: int = 1_000_000, seed: int = 0, c: float | None = None) -> list[TheoryReport]:
    reports = [check_minkowski(n_samples, seed, c=c)]
    for cc in (60.0, 120.0, 1000.0):
        reports.append(check_minkowski(min(n_samples, 100_000), seed + 1, c=cc))
    c_eq = CAP_DB if c is None else c
    reports.append(check_equality_conditions(c=c_eq))
    reports.append(check_scalar_norm_equivalence(random_candidate_lists(10_000, seed)))
    reports.append(check_regime_equivalence(ToyProblem.build(seed=seed), c=c_eq, bias=c_eq))
    return reports
