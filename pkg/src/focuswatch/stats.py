"""Evaluation statistics: one-way ANOVA, Scheffé post hoc, chi-squared
frequency test, SUS questionnaire scoring, and session-report assembly.

The regularized incomplete beta and gamma functions are implemented here
(series / continued-fraction switching at the conventional argument
boundary) so the p-values need no external statistics package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateTable,
    InsufficientData,
    InvalidAlpha,
    OutOfRangeAnswer,
    WrongItemCount,
    ZeroWithinVariance,
)
from .types import EMOTION_LABELS, SessionRecord

_SPECIAL_TOL = 1e-10
_MAX_ITER = 500

EVENT_WINDOW_MS = 2000  # post-notification window for event-locked analysis


# ---------------------------------------------------------------------------
# Special functions
# ---------------------------------------------------------------------------

def _gamma_series(a: float, x: float) -> float:
    """P(a, x) by series expansion; valid for x < a + 1."""
    term = 1.0 / a
    total = term
    n = a
    for _ in range(_MAX_ITER):
        n += 1.0
        term *= x / n
        total += term
        if abs(term) < abs(total) * _SPECIAL_TOL:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))

def _gamma_cf(a: float, x: float) -> float:
    """Q(a, x) by Lentz continued fraction; valid for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _SPECIAL_TOL:
            break
    return h * math.exp(-x + a * math.log(x) - math.lgamma(a))


def regularized_gamma_p(a: float, x: float) -> float:
    """Regularized lower incomplete gamma P(a, x)."""
    if x < 0 or a <= 0:
        raise ValueError("require x >= 0 and a > 0")
    if x == 0:
        return 0.0
    if x < a + 1.0:
        return _gamma_series(a, x)
    return 1.0 - _gamma_cf(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    """Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x)."""
    if x < a + 1.0:
        return 1.0 - _gamma_series(a, x) if x > 0 else 1.0
    return _gamma_cf(a, x)


def _beta_cf(a: float, b: float, x: float) -> float:
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, _MAX_ITER):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _SPECIAL_TOL:
            break
    return h


def regularized_beta(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0:
        return 0.0
    if x == 1.0:
        return 1.0
    front = math.exp(
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_cf(a, b, x) / a
    return 1.0 - front * _beta_cf(b, a, 1.0 - x) / b


def f_cdf(f: float, df1: int, df2: int) -> float:
    if f <= 0:
        return 0.0
    x = df1 * f / (df1 * f + df2)
    return regularized_beta(df1 / 2.0, df2 / 2.0, x)


def f_sf(f: float, df1: int, df2: int) -> float:
    return 1.0 - f_cdf(f, df1, df2)


def f_inv(p: float, df1: int, df2: int, tol: float = 1e-8) -> float:
    """Quantile of the F distribution by bisection on f_cdf."""
    if not 0.0 < p < 1.0:
        raise InvalidAlpha("quantile probability must lie in (0, 1)")
    lo, hi = 0.0, 1.0
    while f_cdf(hi, df1, df2) < p:
        hi *= 2.0
        if hi > 1e12:
            break
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f_cdf(mid, df1, df2) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def chi2_sf(stat: float, df: int) -> float:
    if stat <= 0:
        return 1.0
    return regularized_gamma_q(df / 2.0, stat / 2.0)


# ---------------------------------------------------------------------------
# Tests
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AnovaResult:
    f_statistic: float
    df_between: int
    df_within: int
    p_value: float
    group_means: tuple[float, ...]
    ms_between: float
    ms_within: float


def one_way_anova(groups) -> AnovaResult:
    """Standard one-way fixed-effects ANOVA over >= 2 groups."""
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if len(arrays) < 2 or any(len(a) < 2 for a in arrays):
        raise InsufficientData("need >= 2 groups with >= 2 observations each")
    n_total = sum(len(a) for a in arrays)
    grand = sum(float(a.sum()) for a in arrays) / n_total
    ss_between = sum(len(a) * (float(a.mean()) - grand) ** 2 for a in arrays)
    ss_within = sum(float(((a - a.mean()) ** 2).sum()) for a in arrays)
    df_b = len(arrays) - 1
    df_w = n_total - len(arrays)
    ms_b = ss_between / df_b
    ms_w = ss_within / df_w
    if ms_w <= 0.0:
        raise ZeroWithinVariance("all within-group variances are zero; F undefined")
    f = ms_b / ms_w
    return AnovaResult(
        f_statistic=f,
        df_between=df_b,
        df_within=df_w,
        p_value=f_sf(f, df_b, df_w),
        group_means=tuple(float(a.mean()) for a in arrays),
        ms_between=ms_b,
        ms_within=ms_w,
    )


@dataclass(frozen=True)
class ScheffePair:
    i: int
    j: int
    mean_difference: float
    statistic: float
    critical_value: float
    significant: bool


@dataclass(frozen=True)
class ScheffeResult:
    pairs: tuple[ScheffePair, ...]
    alpha: float


def scheffe_posthoc(groups, alpha: float = 0.05) -> ScheffeResult:
    """All pairwise Scheffé comparisons at the given alpha."""
    if not 0.0 < alpha < 1.0:
        raise InvalidAlpha(f"alpha={alpha} must lie in (0, 1)")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    anova = one_way_anova(arrays)
    k = len(arrays)
    critical = (k - 1) * f_inv(1.0 - alpha, anova.df_between, anova.df_within)
    pairs = []
    for i in range(k):
        for j in range(i + 1, k):
            diff = float(arrays[i].mean() - arrays[j].mean())
            stat = diff**2 / (anova.ms_within * (1.0 / len(arrays[i]) + 1.0 / len(arrays[j])))
            pairs.append(
                ScheffePair(
                    i=i,
                    j=j,
                    mean_difference=diff,
                    statistic=stat,
                    critical_value=critical,
                    significant=stat > critical,
                )
            )
    return ScheffeResult(pairs=tuple(pairs), alpha=alpha)


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    df: int
    p_value: float
    observed: np.ndarray
    expected: np.ndarray


def chi_squared_frequency(observed) -> Chi2Result:
    """Pearson chi-squared test of independence on a groups x categories
    count table; expected counts from the row/column marginals."""
    obs = np.asarray(observed, dtype=np.float64)
    if obs.ndim != 2 or np.any(obs < 0):
        raise DegenerateTable("need a non-negative 2-D count table")
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if np.any(row <= 0) or np.any(col <= 0):
        raise DegenerateTable("every row and column total must be positive")
    expected = np.outer(row, col) / obs.sum()
    stat = float(((obs - expected) ** 2 / expected).sum())
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return Chi2Result(
        statistic=stat,
        df=df,
        p_value=chi2_sf(stat, df),
        observed=obs,
        expected=expected,
    )


def sus_score(answers) -> float:
    """System Usability Scale: odd items contribute (answer - 1), even
    items (5 - answer); the sum is scaled by 2.5 onto [0, 100]."""
    answers = list(answers)
    if len(answers) != 10:
        raise WrongItemCount(f"SUS needs exactly 10 answers, got {len(answers)}")
    total = 0
    for pos, a in enumerate(answers, start=1):
        if not isinstance(a, (int, np.integer)) or not 1 <= a <= 5:
            raise OutOfRangeAnswer(f"item {pos} answer {a!r} outside 1..5")
        total += (a - 1) if pos % 2 == 1 else (5 - a)
    return total * 2.5


# ---------------------------------------------------------------------------
# Session report
# ---------------------------------------------------------------------------

def _levels(record: SessionRecord) -> np.ndarray:
    return np.array([p.anomaly_level for p in record.packets])


def _emotion_counts(records) -> list[int]:
    counts = dict.fromkeys(EMOTION_LABELS, 0)
    for rec in records:
        for p in rec.packets:
            counts[p.emotion_label] += 1
    return [counts[label] for label in EMOTION_LABELS]


def event_locked_means(record: SessionRecord, window_ms: int = EVENT_WINDOW_MS):
    """Per DAS event: mean anomaly in [event, event + window] vs the
    whole-session baseline mean."""
    levels = _levels(record)
    if len(levels) == 0:
        return []
    baseline = float(levels.mean())
    times = np.array([p.timestamp_ms for p in record.packets])
    out = []
    for t_event, kind in record.events:
        mask = (times >= t_event) & (times <= t_event + window_ms)
        if not mask.any():
            continue
        out.append(
            {
                "event_ms": t_event,
                "event_kind": kind,
                "window_mean": float(levels[mask].mean()),
                "baseline_mean": baseline,
                "above_baseline": bool(levels[mask].mean() > baseline),
            }
        )
    return out


def session_report(records_by_kind: dict[str, list[SessionRecord]], alpha: float = 0.05):
    """Aggregates per-session anomaly statistics, runs the cross-session
    ANOVA + Scheffé on per-frame anomaly levels, chi-squared on emotion
    frequencies, and the event-locked DAS analysis.

    Observations for ANOVA are per-frame anomaly levels pooled per session
    kind (the within-group unit is the frame).
    """
    kinds = [k for k in ("FS", "DAS", "MWS", "LIVE") if records_by_kind.get(k)]
    if not kinds:
        raise InsufficientData("no session records")
    report = {"sessions": [], "by_kind": {}, "alpha": alpha}
    pooled = {}
    for kind in kinds:
        records = records_by_kind[kind]
        levels = np.concatenate([_levels(r) for r in records if len(r.packets)])
        pooled[kind] = levels
        report["by_kind"][kind] = {
            "sessions": len(records),
            "frames": int(len(levels)),
            "mean_anomaly": float(levels.mean()),
            "var_anomaly": float(levels.var(ddof=1)) if len(levels) > 1 else 0.0,
            "emotion_counts": _emotion_counts(records),
        }
        for rec in records:
            lv = _levels(rec)
            entry = {
                "session_id": rec.meta.session_id,
                "user_id": rec.meta.user_id,
                "kind": kind,
                "frames": int(len(lv)),
                "mean_anomaly": float(lv.mean()) if len(lv) else None,
                "var_anomaly": float(lv.var(ddof=1)) if len(lv) > 1 else 0.0,
                "quiz_score": rec.quiz_score,
                "self_report_distraction": rec.self_report_distraction,
                "perceived_accuracy": rec.perceived_accuracy,
            }
            report["sessions"].append(entry)

    if len(kinds) >= 2:
        groups = [pooled[k] for k in kinds]
        try:
            anova = one_way_anova(groups)
            scheffe = scheffe_posthoc(groups, alpha)
            report["anova"] = {
                "kinds": kinds,
                "f": anova.f_statistic,
                "df": [anova.df_between, anova.df_within],
                "p_value": anova.p_value,
                "group_means": list(anova.group_means),
            }
            report["scheffe"] = [
                {
                    "pair": [kinds[p.i], kinds[p.j]],
                    "mean_difference": p.mean_difference,
                    "statistic": p.statistic,
                    "critical_value": p.critical_value,
                    "significant": p.significant,
                }
                for p in scheffe.pairs
            ]
        except ZeroWithinVariance:
            report["anova"] = {"kinds": kinds, "error": "zero within-group variance"}

        # emotion-frequency independence across kinds; drop labels that
        # never occur so every column marginal is positive
        table = np.array([report["by_kind"][k]["emotion_counts"] for k in kinds])
        keep = table.sum(axis=0) > 0
        if keep.sum() >= 2 and np.all(table.sum(axis=1) > 0):
            chi = chi_squared_frequency(table[:, keep])
            report["chi_squared_emotions"] = {
                "kinds": kinds,
                "labels": [l for l, k in zip(EMOTION_LABELS, keep) if k],
                "statistic": chi.statistic,
                "df": chi.df,
                "p_value": chi.p_value,
            }

    event_locked = []
    for rec in records_by_kind.get("DAS", []):
        event_locked.extend(event_locked_means(rec))
    report["event_locked"] = event_locked
    return report


def report_summary_text(report: dict) -> str:
    lines = ["session report", "=" * 40]
    for kind, agg in report["by_kind"].items():
        lines.append(
            f"{kind}: {agg['sessions']} session(s), {agg['frames']} frames, "
            f"mean anomaly {agg['mean_anomaly']:.4f} (var {agg['var_anomaly']:.5f})"
        )
    anova = report.get("anova")
    if anova and "f" in anova:
        lines.append(
            f"ANOVA over {'/'.join(anova['kinds'])}: "
            f"F({anova['df'][0]},{anova['df'][1]}) = {anova['f']:.3f}, "
            f"p = {anova['p_value']:.3g}"
        )
    for pair in report.get("scheffe", []):
        tag = "significant" if pair["significant"] else "not significant"
        lines.append(
            f"  {pair['pair'][0]} vs {pair['pair'][1]}: "
            f"diff {pair['mean_difference']:+.4f}, S = {pair['statistic']:.3f} "
            f"(critical {pair['critical_value']:.3f}) -> {tag}"
        )
    chi = report.get("chi_squared_emotions")
    if chi:
        lines.append(
            f"emotion frequency chi-squared: X2({chi['df']}) = {chi['statistic']:.3f}, "
            f"p = {chi['p_value']:.3g}"
        )
    events = report.get("event_locked", [])
    if events:
        above = sum(1 for e in events if e["above_baseline"])
        lines.append(
            f"event-locked (DAS): {above}/{len(events)} events above session baseline"
        )
    return "\n".join(lines)


def report_csv(report: dict) -> str:
    """Per-session aggregate rows, one line per session."""
    header = (
        "session_id,user_id,kind,frames,mean_anomaly,var_anomaly,"
        "quiz_score,self_report_distraction,perceived_accuracy"
    )
    rows = [header]
    for s in report["sessions"]:
        rows.append(
            ",".join(
                "" if s[k] is None else str(s[k])
                for k in (
                    "session_id",
                    "user_id",
                    "kind",
                    "frames",
                    "mean_anomaly",
                    "var_anomaly",
                    "quiz_score",
                    "self_report_distraction",
                    "perceived_accuracy",
                )
            )
        )
    return "\n".join(rows) + "\n"
