"""Monte Carlo experiments: single-filter extraction rates and protocol round counts.

Every trial derives its own seeds from ``(master_seed, experiment, params,
trial index)``, so results do not depend on the number of worker processes or
the order in which trials finish.
"""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from .counting import failure_bound, format_prob, min_extracted
from .hashing import HashSpec, derive_seed, sample_distinct_elements
from .ibf import Ibf, extract_all
from .markov import MarkovConfig, expected_rounds_table
from .protocol import Mode, Outcome, run_iterative

DEFAULT_THRESHOLDS = (Fraction(1, 10), Fraction(1, 5), Fraction(1, 2), Fraction(1))
COMMON_ELEMENTS = 100


@dataclass(frozen=True)
class TrialConfig:
    N: int
    h: int
    f: int
    trials: int = 1000
    master_seed: int = 0
    thresholds: tuple[Fraction, ...] = DEFAULT_THRESHOLDS
    layout: str = "partitioned"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.h < 1 or self.N % self.h:
            raise ValueError(f"N={self.N} must be a positive multiple of h={self.h}")
        if self.f < 0:
            raise ValueError("f must be non-negative")
        ts = tuple(Fraction(r) for r in self.thresholds)
        if any(not 0 < r <= 1 for r in ts):
            raise ValueError("rate thresholds must lie in (0, 1]")
        object.__setattr__(self, "thresholds", tuple(sorted(ts)))


@dataclass
class TrialStats:
    config: TrialConfig
    extracted: list[int]
    failures: dict[Fraction, int] = field(default_factory=dict)

    @property
    def trials(self) -> int:
        return len(self.extracted)

    def failure_fraction(self, R) -> Fraction:
        return Fraction(self.failures[Fraction(R)], self.trials)

    @property
    def mean_rate(self) -> Fraction:
        f = self.config.f
        if f == 0:
            return Fraction(1)
        return Fraction(sum(self.extracted), f * self.trials)

    @property
    def std_rate(self) -> float:
        f = self.config.f
        if f == 0 or self.trials < 2:
            return 0.0
        n = self.trials
        s1 = sum(self.extracted)
        s2 = sum(e * e for e in self.extracted)
        var = Fraction(n * s2 - s1 * s1, n * (n - 1) * f * f)
        return math.sqrt(var)


def _extraction_trial(args) -> int:
    N, h, f, master_seed, t, layout = args
    spec = HashSpec(
        seed=derive_seed(master_seed, "extract", N, h, f, t, "index"),
        checksum_seed=derive_seed(master_seed, "extract", N, h, f, t, "checksum"),
        h=h,
        N=N,
        layout=layout,
    )
    xs = sample_distinct_elements(derive_seed(master_seed, "extract", N, h, f, t, "elements", bits=64), f)
    return len(extract_all(Ibf(spec).update(xs)).extracted)


def _map(fn, jobs: list, workers: int) -> list:
    if workers <= 1 or len(jobs) < 2:
        return [fn(j) for j in jobs]
    chunk = max(1, len(jobs) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs, chunksize=chunk))


def run_extraction_trials(cfg: TrialConfig, workers: int = 1) -> TrialStats:
    """Insert ``f`` fresh random elements into a freshly seeded filter and peel, per trial."""
    jobs = [(cfg.N, cfg.h, cfg.f, cfg.master_seed, t, cfg.layout) for t in range(cfg.trials)]
    extracted = _map(_extraction_trial, jobs, workers)
    failures = {}
    for R in cfg.thresholds:
        need = min_extracted(R, cfg.f)
        failures[R] = sum(1 for e in extracted if e < need)
    return TrialStats(cfg, extracted, failures)


@dataclass
class RoundsPoint:
    d: int
    rounds: list[int]
    reconciled: int
    sound: int

    @property
    def trials(self) -> int:
        return len(self.rounds)

    @property
    def mean(self) -> float:
        return sum(self.rounds) / self.trials

    @property
    def stderr(self) -> float:
        n = self.trials
        if n < 2:
            return 0.0
        s1 = sum(self.rounds)
        s2 = sum(r * r for r in self.rounds)
        var = Fraction(n * s2 - s1 * s1, n * (n - 1))
        return math.sqrt(var / n)


def split_difference(d: int, elements: Sequence[int]) -> tuple[set[int], set[int]]:
    """First ``ceil(d/2)`` elements go only to A, next ``floor(d/2)`` only to B, rest to both."""
    a_only = (d + 1) // 2
    common = set(elements[d:])
    return set(elements[:a_only]) | common, set(elements[a_only:d]) | common


def _rounds_trial(args) -> tuple[int, bool, bool]:
    N, h, d, master_seed, t, max_rounds, mode, common = args
    xs = sample_distinct_elements(derive_seed(master_seed, "rounds", N, h, d, t, bits=64), d + common)
    S_A, S_B = split_difference(d, xs)
    union = S_A | S_B
    A, B, tr = run_iterative(S_A, S_B, N, h, derive_seed(master_seed, "session", N, h, d, t, bits=64),
                             max_rounds=max_rounds, mode=mode)
    ok = tr.outcome is Outcome.RECONCILED
    if ok and Mode(mode) is not Mode.ONE_WAY:
        ok = A == B == union
    return tr.rounds, ok, A <= union and B <= union


def default_max_rounds(N: int, h: int, d: int) -> int:
    return 10 * math.ceil(expected_rounds_table(d, MarkovConfig(N, h))[d])


def run_rounds_experiment(N: int, h: int, d_values: Iterable[int], trials: int, master_seed: int = 0,
                          workers: int = 1, max_rounds: Optional[int] = None,
                          mode: str = Mode.CLIENT_SERVER.value,
                          common: int = COMMON_ELEMENTS) -> list[RoundsPoint]:
    """Rounds needed by the iterative protocol for each difference size ``d``.

    ``max_rounds`` defaults to ten times the rounded-up model expectation.
    """
    points = []
    for d in d_values:
        if d < 1:
            raise ValueError("difference sizes must be at least 1")
        cap = max_rounds if max_rounds is not None else default_max_rounds(N, h, d)
        jobs = [(N, h, d, master_seed, t, cap, Mode(mode).value, common) for t in range(trials)]
        results = _map(_rounds_trial, jobs, workers)
        points.append(RoundsPoint(
            d=d,
            rounds=[r for r, _, _ in results],
            reconciled=sum(1 for _, ok, _ in results if ok),
            sound=sum(1 for _, _, s in results if s),
        ))
    return points


# CSV output

def extraction_csv(stats: Iterable[TrialStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["h", "f", "R", "bound", "empirical", "trials"])
    for st in stats:
        c = st.config
        for R in c.thresholds:
            bound = failure_bound(c.N // c.h, c.f, c.h, R) if c.f else Fraction(0)
            w.writerow([c.h, c.f, _fmt_rate(R), format_prob(bound),
                        format_prob(st.failure_fraction(R)), st.trials])
    return buf.getvalue()


def _fmt_rate(R: Fraction) -> str:
    return str(R.numerator) if R.denominator == 1 else f"{float(R):g}"


def rounds_csv(by_h: dict[int, list[RoundsPoint]]) -> str:
    """Semicolon table ``f;<h>;<h>...`` of mean simulated rounds."""
    hs = sorted(by_h)
    ds = [p.d for p in by_h[hs[0]]]
    lines = [";".join(["f"] + [str(h) for h in hs])]
    for k, d in enumerate(ds):
        lines.append(";".join([str(d)] + [f"{by_h[h][k].mean:.6f}" for h in hs]))
    return "\n".join(lines) + "\n"


def rounds_bound_csv(N: int, hs: Sequence[int], fs: Sequence[int]) -> str:
    """Comma table ``x,<h>,<h>...`` of model expected rounds."""
    tables = {h: expected_rounds_table(max(fs), MarkovConfig(N, h)) for h in hs}
    lines = [",".join(["x"] + [str(h) for h in hs])]
    for f in fs:
        lines.append(",".join([str(f)] + [f"{tables[h][f]:.6f}" for h in hs]))
    return "\n".join(lines) + "\n"
