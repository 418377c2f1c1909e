"""Equal error rate, AUC over iterations, the sampling-rate schedule, and
tabular report assembly.

AUC here is the paper-style average of per-iteration EERs, not ROC-AUC.
Printed table cells are truncated (not rounded) to 2 decimal places;
the emitted CSV carries full-precision parallel columns alongside.
"""

import io
import csv
from dataclasses import dataclass
from decimal import Decimal, ROUND_DOWN
from typing import Optional, Sequence

import numpy as np


@dataclass(frozen=True)
class MetricRecord:
    iteration: int
    sampling_percent: float
    eer_percent: Optional[float]

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "sampling_percent": self.sampling_percent,
            "eer_percent": self.eer_percent,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "MetricRecord":
        e = rec.get("eer_percent")
        return cls(int(rec["iteration"]), float(rec["sampling_percent"]),
                   None if e is None else float(e))


def eer(scores, labels) -> float:
    """Equal error rate, in percent.

    Thresholds sweep the sorted unique scores (predict change when
    score >= threshold). FPR falls and FNR rises as the threshold grows;
    the EER is read off at their crossing, linearly interpolated between
    the two adjacent thresholds where sign(FPR - FNR) flips. Interpolating
    in (FPR, FNR) space keeps the value invariant under strictly monotone
    transforms of the scores.
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    if not np.all(np.isin(y, (-1, 1))):
        raise ValueError("labels must be -1 or +1")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == -1))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("eer needs at least one sample of each class")

    thresholds = np.unique(s)  # ascending
    pos = np.sort(s[y == 1])
    neg = np.sort(s[y == -1])
    # FPR(t) = #(neg >= t)/n_neg, FNR(t) = #(pos < t)/n_pos; append +inf so
    # the sweep always ends at (FPR, FNR) = (0, 1).
    grid = np.concatenate([thresholds, [np.inf]])
    fpr = (n_neg - np.searchsorted(neg, grid, side="left")) / n_neg
    fnr = np.searchsorted(pos, grid, side="left") / n_pos

    diff = fpr - fnr
    # diff starts at +1 (lowest threshold accepts everything) and ends at -1.
    flip = int(np.argmax(diff <= 0.0))
    if diff[flip] == 0.0:
        return float(fpr[flip] * 100.0)
    f0, f1 = diff[flip - 1], diff[flip]
    t = f0 / (f0 - f1)
    value = fpr[flip - 1] + t * (fpr[flip] - fpr[flip - 1])
    return float(value * 100.0)


def auc_over_iterations(eers: Sequence[float]) -> float:
    """Arithmetic mean of per-iteration EERs (the paper's AUC)."""
    values = list(eers)
    if not values:
        raise ValueError("auc needs at least one EER value")
    return float(np.mean(np.asarray(values, dtype=np.float64)))


def sampling_percent(t: int, K: int, n_total: int) -> float:
    """Cumulative labeled fraction of the training half after t iterations,
    in percent: (t*K) / (n_total/2) * 100."""
    if t < 0:
        raise ValueError("iteration index must be non-negative")
    if n_total <= 0:
        raise ValueError("pool size must be positive")
    if t == 0 or K == 0:
        return 0.0
    return (t * K) / (n_total / 2.0) * 100.0


def format_2dp(value: Optional[float]) -> str:
    """Two-decimal display string, truncated toward zero (1.4545 -> '1.45',
    2.9090 -> '2.90'). None renders as the empty string."""
    if value is None:
        return ""
    q = Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_DOWN)
    return str(q)


def report_table(sessions) -> str:
    """Assemble the experiment report CSV from completed sessions.

    One data row per session: its label, variant, per-iteration EERs and
    their mean (AUC), truncated to 2 d.p., followed by full-precision
    parallel columns. A final `samp` footer row carries the sampling
    schedule. All sessions must share T and K.
    """
    sessions = list(sessions)
    if not sessions:
        raise ValueError("report needs at least one session")
    T = sessions[0].T
    K = sessions[0].K
    n_total = sessions[0].n_total
    for s in sessions:
        if s.T != T:
            raise ValueError("sessions disagree on T")
        if s.K != K or s.n_total != n_total:
            raise ValueError("sessions disagree on K or pool size")

    buf = io.StringIO()
    writer = csv.writer(buf)
    header = (["config", "variant"]
              + [f"iter{t}" for t in range(1, T + 1)] + ["auc"]
              + [f"iter{t}_full" for t in range(1, T + 1)] + ["auc_full"])
    writer.writerow(header)
    for s in sessions:
        eers = [m.eer_percent for m in s.metrics]
        if len(eers) != T:
            raise ValueError("session has a metric record count != T")
        known = [e for e in eers if e is not None]
        auc = auc_over_iterations(known) if len(known) == len(eers) else None
        row = [s.report_label, s.report_variant]
        row += [format_2dp(e) for e in eers] + [format_2dp(auc)]
        row += ["" if e is None else repr(float(e)) for e in eers]
        row += ["" if auc is None else repr(float(auc))]
        writer.writerow(row)
    samp = [sampling_percent(t, K, n_total) for t in range(1, T + 1)]
    writer.writerow(["samp", ""] + [format_2dp(v) for v in samp] + [""]
                    + [repr(float(v)) for v in samp] + [""])
    return buf.getvalue()
