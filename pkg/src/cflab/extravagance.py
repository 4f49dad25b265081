"""Finite-horizon extravagance estimation.

The extravagance of a non-negative sequence is the limsup of M_n =
x_{n+1} / (x_1 + ... + x_n).  A finite horizon can never certify the limsup,
so every report carries two witnesses: the running supremum (a lower-bound
witness for a large limsup) and the maximum of M_n over the tail half of the
horizon (a decay witness for limsup zero).  Ratios before the first positive
partial sum are skipped; the all-zero sequence has extravagance 0 by
convention.

Two lanes: exact rational traces for explicit sequences, and a vectorized
log-domain lane for Monte Carlo at horizons where values overflow floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .measures import ProcessSample, SamplerSpec, realize_process

TAIL_WINDOW_FRACTION = 0.5


# ---------------------------------------------------------------------------
# exact lane


@dataclass
class ExtravaganceTrace:
    """Exact ratios M_n and their running supremum.

    ratios[i] is (n, M_n); the trace starts at the first n whose partial sum
    is positive and ends at horizon-1 (the last n with x_{n+1} available).
    """

    ratios: list[tuple[int, Fraction]]
    running_sup: list[Fraction]
    start_index: Optional[int]
    horizon: int

    @property
    def final_sup(self) -> Fraction:
        return self.running_sup[-1] if self.running_sup else Fraction(0)

    def tail_window_max(self, window: float = TAIL_WINDOW_FRACTION) -> Fraction:
        cut = int(self.horizon * window)
        vals = [m for n, m in self.ratios if n >= cut]
        return max(vals) if vals else Fraction(0)

    def ratio_at(self, n: int) -> Optional[Fraction]:
        for m_n, v in self.ratios:
            if m_n == n:
                return v
        return None


def sequence_extravagance(xs: Sequence, horizon: Optional[int] = None) -> ExtravaganceTrace:
    """Exact extravagance trace of a non-negative rational sequence."""
    vals = [Fraction(x) for x in xs]
    if horizon is not None:
        vals = vals[:horizon]
    if any(v < 0 for v in vals):
        raise ValueError("extravagance is defined for non-negative sequences")
    n_total = len(vals)
    ratios: list[tuple[int, Fraction]] = []
    running: list[Fraction] = []
    s = Fraction(0)
    start: Optional[int] = None
    best = Fraction(0)
    for n in range(1, n_total):
        s += vals[n - 1]
        if s == 0:
            continue
        if start is None:
            start = n
        m = vals[n] / s
        best = max(best, m)
        ratios.append((n, m))
        running.append(best)
    return ExtravaganceTrace(ratios=ratios, running_sup=running, start_index=start, horizon=n_total)


# ---------------------------------------------------------------------------
# log-domain lane


@dataclass
class LogDomainStats:
    """Summary of one realization, computed from logs of the values."""

    n_steps: int
    start_index: Optional[int]
    final_running_sup: float
    tail_window_max: float
    sup_argmax: int
    curve_n: np.ndarray
    curve_running_sup: np.ndarray


def log_domain_stats(
    log_values: np.ndarray,
    tail_window: float = TAIL_WINDOW_FRACTION,
    n_checkpoints: int = 64,
) -> LogDomainStats:
    """Running-sup and tail-window-max of M_n from ln(x_k) (zeros as -inf).

    Ratio selection happens in the log domain, so values spanning thousands
    of orders of magnitude are handled without overflow; the reported maxima
    are midpoint-style floats (the exact lane serves exact needs).
    """
    lv = np.asarray(log_values, dtype=np.float64)
    n = lv.shape[0]
    if n < 2:
        return LogDomainStats(n, None, 0.0, 0.0, 0, np.array([], dtype=np.int64), np.array([]))
    with np.errstate(invalid="ignore"):
        log_s = np.logaddexp.accumulate(lv)
    with np.errstate(invalid="ignore"):
        log_ratio = lv[1:] - log_s[:-1]  # index j <-> n = j+1
    defined = log_s[:-1] > -np.inf
    log_ratio = np.where(defined, log_ratio, -np.inf)
    if not defined.any():
        return LogDomainStats(n, None, 0.0, 0.0, 0, np.array([], dtype=np.int64), np.array([]))
    start = int(np.argmax(defined)) + 1
    with np.errstate(over="ignore"):
        ratios = np.exp(log_ratio)
    running = np.maximum.accumulate(ratios)
    sup_argmax = int(np.argmax(ratios)) + 1
    cut = max(int(n * tail_window) - 1, 0)
    tail_max = float(ratios[cut:].max()) if cut < ratios.shape[0] else 0.0
    cps = np.unique(np.geomspace(1, ratios.shape[0], num=min(n_checkpoints, ratios.shape[0])).astype(np.int64))
    return LogDomainStats(
        n_steps=n,
        start_index=start,
        final_running_sup=float(running[-1]),
        tail_window_max=tail_max,
        sup_argmax=sup_argmax,
        curve_n=cps,
        curve_running_sup=running[cps - 1],
    )


# ---------------------------------------------------------------------------
# process-level estimation


@dataclass
class ReplicaStats:
    replica: int
    stats: LogDomainStats


@dataclass
class ProcessExtravaganceReport:
    spec: SamplerSpec
    horizon: int
    replicas: int
    seed: int
    tail_window: float
    rows: list[ReplicaStats]
    summary: dict = field(default_factory=dict)

    def finalize(self) -> "ProcessExtravaganceReport":
        sups = np.array([r.stats.final_running_sup for r in self.rows])
        tails = np.array([r.stats.tail_window_max for r in self.rows])
        self.summary = {
            "running_sup_median": float(np.median(sups)),
            "running_sup_q25": float(np.quantile(sups, 0.25)),
            "running_sup_q75": float(np.quantile(sups, 0.75)),
            "tail_max_median": float(np.median(tails)),
            "tail_max_q25": float(np.quantile(tails, 0.25)),
            "tail_max_q75": float(np.quantile(tails, 0.75)),
        }
        return self


def replica_stats(
    spec: SamplerSpec, horizon: int, seed: int, replica: int, tail_window: float = TAIL_WINDOW_FRACTION
) -> ReplicaStats:
    sample = realize_process(spec, horizon, seed, replica)
    return ReplicaStats(replica, log_domain_stats(sample.log_values, tail_window))


def process_extravagance(
    spec: SamplerSpec,
    horizon: int,
    replicas: int,
    seed: int,
    tail_window: float = TAIL_WINDOW_FRACTION,
) -> ProcessExtravaganceReport:
    """Per-replica running-sup/tail-max diagnostics plus quantile summary."""
    if replicas < 1:
        raise ValueError("need at least one replica")
    rows = [replica_stats(spec, horizon, seed, r, tail_window) for r in range(replicas)]
    return ProcessExtravaganceReport(
        spec=spec,
        horizon=horizon,
        replicas=replicas,
        seed=seed,
        tail_window=tail_window,
        rows=rows,
    ).finalize()


@dataclass
class PerturbationReport:
    spec: SamplerSpec
    f_spec: SamplerSpec
    horizon: int
    replicas: int
    seed: int
    base_rows: list[ReplicaStats]
    perturbed_rows: list[ReplicaStats]
    summary: dict = field(default_factory=dict)

    def finalize(self) -> "PerturbationReport":
        base_tail = np.array([r.stats.tail_window_max for r in self.base_rows])
        pert_tail = np.array([r.stats.tail_window_max for r in self.perturbed_rows])
        base_sup = np.array([r.stats.final_running_sup for r in self.base_rows])
        pert_sup = np.array([r.stats.final_running_sup for r in self.perturbed_rows])
        self.summary = {
            "base_tail_max_median": float(np.median(base_tail)),
            "perturbed_tail_max_median": float(np.median(pert_tail)),
            "tail_max_median_diff": float(np.median(pert_tail) - np.median(base_tail)),
            "base_running_sup_median": float(np.median(base_sup)),
            "perturbed_running_sup_median": float(np.median(pert_sup)),
        }
        return self


def perturbation_check(
    spec: SamplerSpec,
    f_spec: SamplerSpec,
    horizon: int,
    replicas: int,
    seed: int,
    tail_window: float = TAIL_WINDOW_FRACTION,
) -> PerturbationReport:
    """Paired comparison of the process and its additive perturbation by an
    integrable process sharing the same replica seeds."""
    base_rows = []
    pert_rows = []
    for r in range(replicas):
        base = realize_process(spec, horizon, seed, r)
        bump = realize_process(f_spec, horizon, seed, r, rng_label="perturbation")
        lv_sum = np.logaddexp(base.log_values, bump.log_values)
        base_rows.append(ReplicaStats(r, log_domain_stats(base.log_values, tail_window)))
        pert_rows.append(ReplicaStats(r, log_domain_stats(lv_sum, tail_window)))
    return PerturbationReport(
        spec=spec,
        f_spec=f_spec,
        horizon=horizon,
        replicas=replicas,
        seed=seed,
        base_rows=base_rows,
        perturbed_rows=pert_rows,
    ).finalize()
