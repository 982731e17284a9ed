"""Average treatment effect of syntax-guided masking, per node type.

Identification follows the fixed causal graph Z -> T, Z -> Y, T -> Y: a
logistic propensity model of treatment on the seven standardized code
features, stabilized inverse-propensity weighting with trimming, a cluster
bootstrap over snippets for uncertainty, and a label-permutation placebo as a
refutation check.
"""

from __future__ import annotations

import hashlib
import logging
from dataclasses import dataclass, field

import numpy as np

from ._kernels import bootstrap_sums
from .analysis import ConfounderVector
from .metrics import OUTCOME_METRICS, SimilarityScores

log = logging.getLogger(__name__)

RIDGE = 1e-6
IRLS_TOL = 1e-8
IRLS_MAX_ITER = 100
TRIM_LOW, TRIM_HIGH = 0.01, 0.99
MIN_GROUP_SIZE = 30
PLACEBO_ABS = 0.02
PLACEBO_REL = 0.10
DEFAULT_RESAMPLES = 500


@dataclass(frozen=True)
class EvaluationRecord:
    snippet_id: str
    node_type: str
    treatment: int  # 1 = node-type masking, 0 = matched random masking
    outcomes: SimilarityScores
    confounders: ConfounderVector

    def __post_init__(self):
        if self.treatment not in (0, 1):
            raise ValueError(f"treatment must be 0 or 1, got {self.treatment}")

    def to_dict(self) -> dict:
        return {
            "snippet_id": self.snippet_id,
            "node_type": self.node_type,
            "treatment": self.treatment,
            "outcomes": self.outcomes.as_dict(),
            "confounders": self.confounders.as_dict(),
        }

    @staticmethod
    def from_dict(obj: dict) -> "EvaluationRecord":
        return EvaluationRecord(
            snippet_id=obj["snippet_id"],
            node_type=obj["node_type"],
            treatment=int(obj["treatment"]),
            outcomes=SimilarityScores(**obj["outcomes"]),
            confounders=ConfounderVector(**obj["confounders"]),
        )


@dataclass(frozen=True)
class PropensityModel:
    coefficients: np.ndarray  # intercept first, then one weight per kept feature
    feature_means: np.ndarray  # over all 7 features
    feature_stds: np.ndarray
    kept: np.ndarray  # bool mask: features with nonzero variance
    converged: bool
    iterations: int

    def design_matrix(self, Z: np.ndarray) -> np.ndarray:
        """Standardized kept features with a leading intercept column."""
        Zs = (Z[:, self.kept] - self.feature_means[self.kept]) / self.feature_stds[self.kept]
        return np.column_stack([np.ones(len(Z)), Zs])

    def predict_proba(self, Z: np.ndarray) -> np.ndarray:
        eta = self.design_matrix(Z) @ self.coefficients
        return _sigmoid(eta)


@dataclass(frozen=True)
class BootstrapResult:
    tau_mean: float
    ci_low: float
    ci_high: float
    tau_std: float


@dataclass(frozen=True)
class CausalResult:
    node_type: str
    outcome_metric: str
    tau: float
    tau_naive: float
    ci_low: float
    ci_high: float
    placebo_tau: float
    n_treated: int
    n_control: int
    mean_t1: float
    std_t1: float
    mean_t0: float
    std_t0: float
    flags: tuple[str, ...] = field(default_factory=tuple)

    def to_dict(self) -> dict:
        return {
            "node_type": self.node_type,
            "metric": self.outcome_metric,
            "tau": self.tau,
            "tau_naive": self.tau_naive,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "placebo_tau": self.placebo_tau,
            "n_treated": self.n_treated,
            "n_control": self.n_control,
            "mean_t1": self.mean_t1,
            "std_t1": self.std_t1,
            "mean_t0": self.mean_t0,
            "std_t0": self.std_t0,
            "flags": list(self.flags),
        }


CSV_COLUMNS = (
    "node_type",
    "metric",
    "tau",
    "tau_naive",
    "ci_low",
    "ci_high",
    "placebo_tau",
    "n_treated",
    "n_control",
    "mean_t1",
    "std_t1",
    "mean_t0",
    "std_t0",
    "flags",
)


def _sigmoid(eta: np.ndarray) -> np.ndarray:
    return 1.0 / (1.0 + np.exp(-np.clip(eta, -30.0, 30.0)))


def penalized_loglik(coef: np.ndarray, X: np.ndarray, t: np.ndarray, ridge: float = RIDGE) -> float:
    """Bernoulli log-likelihood minus 0.5*ridge*|w|^2 (intercept unpenalized)."""
    eta = X @ coef
    ll = float(np.sum(t * eta - np.logaddexp(0.0, eta)))
    return ll - 0.5 * ridge * float(np.sum(coef[1:] ** 2))


def penalized_gradient(coef: np.ndarray, X: np.ndarray, t: np.ndarray, ridge: float = RIDGE) -> np.ndarray:
    mu = _sigmoid(X @ coef)
    grad = X.T @ (t - mu)
    grad[1:] -= ridge * coef[1:]
    return grad


def _records_arrays(records: list[EvaluationRecord], metric: str | None = None):
    Z = np.stack([r.confounders.as_array() for r in records])
    t = np.array([r.treatment for r in records], dtype=np.float64)
    y = None
    if metric is not None:
        y = np.array([r.outcomes.get(metric) for r in records], dtype=np.float64)
    return Z, t, y


def _fit_irls(X: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, bool, int]:
    coef = np.zeros(X.shape[1])
    iterations = 0
    for iterations in range(1, IRLS_MAX_ITER + 1):
        mu = _sigmoid(X @ coef)
        grad = X.T @ (t - mu)
        grad[1:] -= RIDGE * coef[1:]
        weights = mu * (1.0 - mu)
        hess = X.T @ (weights[:, None] * X)
        hess[np.diag_indices_from(hess)] += RIDGE
        step = np.linalg.solve(hess, grad)
        coef = coef + step
        if np.max(np.abs(grad)) < IRLS_TOL or np.max(np.abs(step)) < IRLS_TOL:
            break
    final_grad = penalized_gradient(coef, X, t)
    converged = bool(np.max(np.abs(final_grad)) <= 1e-6)
    return coef, converged, iterations


def fit_propensity(records: list[EvaluationRecord]) -> PropensityModel:
    """Logistic regression of treatment on standardized confounders (IRLS)."""
    Z, t, _ = _records_arrays(records)
    if t.min() == t.max():
        raise ValueError("records must contain both treatment arms")
    means = Z.mean(axis=0)
    stds = Z.std(axis=0)
    kept = stds > 0.0
    dropped = [name for name, keep in zip(ConfounderVector.FEATURE_NAMES, kept) if not keep]
    if dropped:
        log.info("propensity fit: dropping zero-variance features %s", dropped)
    stds = np.where(kept, stds, 1.0)
    Zs = (Z[:, kept] - means[kept]) / stds[kept]
    X = np.column_stack([np.ones(len(Z)), Zs])
    coef, converged, iterations = _fit_irls(X, t)
    if not converged:
        log.warning("propensity fit did not reach gradient tolerance after %d iterations", iterations)
    return PropensityModel(
        coefficients=coef,
        feature_means=means,
        feature_stds=stds,
        kept=kept,
        converged=converged,
        iterations=iterations,
    )


def _ipw_tau(y: np.ndarray, t: np.ndarray, p: np.ndarray) -> float:
    p = np.clip(p, TRIM_LOW, TRIM_HIGH)
    treated = t == 1
    control = ~treated
    w1 = 1.0 / p[treated]
    w0 = 1.0 / (1.0 - p[control])
    return float(np.sum(w1 * y[treated]) / np.sum(w1) - np.sum(w0 * y[control]) / np.sum(w0))


def estimate_ate_ipw(
    records: list[EvaluationRecord], model: PropensityModel, outcome_metric: str
) -> tuple[float, float]:
    """Stabilized IPW mean difference and the naive (unweighted) difference."""
    Z, t, y = _records_arrays(records, outcome_metric)
    if not (t == 1).any() or not (t == 0).any():
        raise ValueError("both treatment arms required to estimate an effect")
    p = model.predict_proba(Z)
    tau = _ipw_tau(y, t, p)
    tau_naive = float(y[t == 1].mean() - y[t == 0].mean())
    return tau, tau_naive


def _canonical_order(records: list[EvaluationRecord]) -> list[EvaluationRecord]:
    """Record-order-invariant ordering so seeded draws ignore input shuffles."""
    return sorted(records, key=lambda r: (r.snippet_id, r.node_type, -r.treatment))


def _clusters(records: list[EvaluationRecord]) -> list[list[int]]:
    by_snippet: dict[str, list[int]] = {}
    for i, r in enumerate(records):
        by_snippet.setdefault(r.snippet_id, []).append(i)
    return [by_snippet[sid] for sid in sorted(by_snippet)]


def bootstrap_ate(
    records: list[EvaluationRecord],
    model_refit: bool,
    outcome_metric: str,
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
) -> BootstrapResult:
    """Cluster bootstrap over snippets with a 95% percentile interval.

    Snippets are the resampling unit so paired treatment/control records stay
    together. With model_refit the propensity model is refit per resample;
    otherwise record weights from the full-data fit are reused, which is exact
    in the paired design (propensities 0.5) and far cheaper.
    """
    records = _canonical_order(records)
    Z, t, y = _records_arrays(records, outcome_metric)
    if (t == 1).sum() < 2 or (t == 0).sum() < 2:
        raise ValueError("need at least two records per arm to bootstrap")
    clusters = _clusters(records)
    n_clusters = len(clusters)
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, n_clusters, size=(n_resamples, n_clusters))

    if model_refit:
        taus = np.empty(n_resamples)
        for r in range(n_resamples):
            idx = np.concatenate([clusters[c] for c in draws[r]])
            sub = [records[i] for i in idx]
            try:
                model = fit_propensity(sub)
                taus[r], _ = estimate_ate_ipw(sub, model, outcome_metric)
            except (ValueError, np.linalg.LinAlgError):
                taus[r] = np.nan
    else:
        model = fit_propensity(records)
        p = np.clip(model.predict_proba(Z), TRIM_LOW, TRIM_HIGH)
        w = np.where(t == 1, 1.0 / p, 1.0 / (1.0 - p))
        # per-cluster aggregates: [sum w*y | T=1, sum w | T=1, same for T=0]
        agg = np.zeros((n_clusters, 4))
        for c, idxs in enumerate(clusters):
            for i in idxs:
                if t[i] == 1:
                    agg[c, 0] += w[i] * y[i]
                    agg[c, 1] += w[i]
                else:
                    agg[c, 2] += w[i] * y[i]
                    agg[c, 3] += w[i]
        sums = bootstrap_sums(agg, draws)
        with np.errstate(divide="ignore", invalid="ignore"):
            taus = sums[:, 0] / sums[:, 1] - sums[:, 2] / sums[:, 3]
        taus[~np.isfinite(taus)] = np.nan

    dropped = int(np.isnan(taus).sum())
    if dropped:
        log.info("bootstrap: %d/%d resamples lacked an arm and were dropped", dropped, n_resamples)
    return BootstrapResult(
        tau_mean=float(np.nanmean(taus)),
        ci_low=float(np.nanpercentile(taus, 2.5)),
        ci_high=float(np.nanpercentile(taus, 97.5)),
        tau_std=float(np.nanstd(taus)),
    )


def placebo_refute(records: list[EvaluationRecord], outcome_metric: str, seed: int = 0) -> float:
    """ATE re-estimated under uniformly permuted treatment labels.

    Permutation preserves arm counts and severs the treatment-outcome link,
    so a sound analysis yields a placebo effect near zero.
    """
    records = _canonical_order(records)
    Z, t, y = _records_arrays(records, outcome_metric)
    if not (t == 1).any() or not (t == 0).any():
        raise ValueError("both treatment arms required for a placebo refutation")
    rng = np.random.default_rng(seed)
    t_perm = t[rng.permutation(len(t))]
    means = Z.mean(axis=0)
    stds = Z.std(axis=0)
    kept = stds > 0.0
    stds = np.where(kept, stds, 1.0)
    X = np.column_stack([np.ones(len(Z)), (Z[:, kept] - means[kept]) / stds[kept]])
    coef, _, _ = _fit_irls(X, t_perm)
    p = _sigmoid(X @ coef)
    return _ipw_tau(y, t_perm, p)


def _derive_seed(seed: int, *parts: str) -> int:
    payload = f"{seed}|" + "|".join(parts)
    return int.from_bytes(hashlib.sha256(payload.encode()).digest()[:8], "big")


def _validate_group(records: list[EvaluationRecord]) -> None:
    seen: set[tuple[str, int]] = set()
    for r in records:
        key = (r.snippet_id, r.treatment)
        if key in seen:
            raise ValueError(
                f"duplicate record for snippet {r.snippet_id!r}, node type {r.node_type!r}, arm T={r.treatment}"
            )
        seen.add(key)


def run_causal_analysis(
    records: list[EvaluationRecord],
    n_resamples: int = DEFAULT_RESAMPLES,
    seed: int = 0,
    model_refit: bool = False,
    min_group_size: int = MIN_GROUP_SIZE,
) -> list[CausalResult]:
    """One CausalResult per (node type, outcome metric), sorted."""
    if not records:
        raise ValueError("no evaluation records to analyze")
    groups: dict[str, list[EvaluationRecord]] = {}
    for r in records:
        groups.setdefault(r.node_type, []).append(r)

    results: list[CausalResult] = []
    for node_type in sorted(groups):
        group = groups[node_type]
        _validate_group(group)
        t = np.array([r.treatment for r in group])
        n_treated = int((t == 1).sum())
        n_control = int((t == 0).sum())
        if n_treated == 0 or n_control == 0:
            log.info("node type %s has a single arm (T1=%d, T0=%d); omitted", node_type, n_treated, n_control)
            continue
        model = fit_propensity(group)
        for metric in OUTCOME_METRICS:
            y = np.array([r.outcomes.get(metric) for r in group])
            tau, tau_naive = estimate_ate_ipw(group, model, metric)
            if n_treated >= 2 and n_control >= 2:
                boot = bootstrap_ate(
                    group,
                    model_refit=model_refit,
                    outcome_metric=metric,
                    n_resamples=n_resamples,
                    seed=_derive_seed(seed, node_type, metric, "bootstrap"),
                )
            else:  # too few records to resample; interval undefined
                boot = BootstrapResult(tau, float("nan"), float("nan"), float("nan"))
            placebo = placebo_refute(group, metric, seed=_derive_seed(seed, node_type, metric, "placebo"))
            flags = []
            if n_treated < min_group_size or n_control < min_group_size:
                flags.append("underpowered")
            if abs(placebo) > max(PLACEBO_ABS, PLACEBO_REL * abs(tau)):
                flags.append("refuted")
            if not model.converged:
                flags.append("propensity_not_converged")
            y1, y0 = y[t == 1], y[t == 0]
            results.append(
                CausalResult(
                    node_type=node_type,
                    outcome_metric=metric,
                    tau=tau,
                    tau_naive=tau_naive,
                    ci_low=boot.ci_low,
                    ci_high=boot.ci_high,
                    placebo_tau=placebo,
                    n_treated=n_treated,
                    n_control=n_control,
                    mean_t1=float(y1.mean()),
                    std_t1=float(y1.std(ddof=1)) if len(y1) > 1 else 0.0,
                    mean_t0=float(y0.mean()),
                    std_t0=float(y0.std(ddof=1)) if len(y0) > 1 else 0.0,
                    flags=tuple(flags),
                )
            )
    return results


def results_to_csv_rows(results: list[CausalResult]) -> list[list[str]]:
    rows = [list(CSV_COLUMNS)]
    for r in results:
        d = r.to_dict()
        row = []
        for col in CSV_COLUMNS:
            value = d["metric"] if col == "metric" else d[col]
            if col == "flags":
                row.append(";".join(value))
            elif isinstance(value, float):
                row.append(repr(value))
            else:
                row.append(str(value))
        rows.append(row)
    return rows
