"""Learning rule parameters from training samples.

Each sample yields a min-max equation system whose unknowns are the rule
parameters (s_1, r_1, ..., s_n, r_n). Consistent systems are solved exactly;
inconsistent ones are replaced by their lowest Chebyshev approximation before
all reliable systems are stacked and solved together.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .core import ValidationError, maxeps_product, minmax_product
from .inference import Cascade, PremiseDegrees, RuleSet, _interleave, infer, premise_degrees
from .parallel import parallel_map


@dataclass
class Sample:
    """Input possibility distributions plus target label indices for any produced attributes."""

    inputs: dict[str, np.ndarray]
    targets: dict[str, int] = field(default_factory=dict)


class NoReliableSamples(RuntimeError):
    def __init__(self, stage: str, tau: float):
        super().__init__(f"rule set {stage!r}: no training sample is reliable under tau={tau:.12g}")
        self.stage = stage
        self.tau = tau


@dataclass(frozen=True)
class EquationSystem:
    """y = gamma (min-max) x, with row mu of gamma holding (lam_j, 1) or (1, rho_j) per rule j.

    `signs` marks which rows lie inside each rule conclusion; it is None for stacked systems.
    """

    gamma: np.ndarray
    y: np.ndarray
    signs: np.ndarray | None = None


@dataclass(frozen=True)
class SolveResult:
    e_low: np.ndarray
    e_high: np.ndarray
    nabla: float
    consistent: bool
    y_approx: np.ndarray
    x_approx: np.ndarray


def one_hot(size: int, index: int) -> np.ndarray:
    out = np.zeros(size)
    out[index] = 1.0
    return out


def cell_maxima(rules: RuleSet, target) -> np.ndarray:
    """Pi of the target distribution over every partition cell."""
    target = np.asarray(target, dtype=float)
    if target.shape != (rules.output_domain.size,):
        raise ValidationError(f"target for {rules.output!r} needs {rules.output_domain.size} degrees")
    y = np.zeros(rules.partition.omega)
    np.maximum.at(y, rules.cell_of_value, target)
    return y


def build_system(rules: RuleSet, degrees: PremiseDegrees, target) -> EquationSystem:
    gamma = _interleave(rules.sign_matrix, degrees.lam, degrees.rho)
    return EquationSystem(gamma, cell_maxima(rules, target), rules.sign_matrix)


def upper_solution(signs: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Per rule j, the max of y over rows inside Q_j and over rows outside it (0 when none)."""
    n = signs.shape[1]
    out = np.zeros(2 * n)
    if y.size:
        column = y[:, None]
        out[0::2] = np.where(signs, column, 0.0).max(axis=0)
        out[1::2] = np.where(signs, 0.0, column).max(axis=0)
    return out


def chebyshev_rows(gamma, y) -> np.ndarray:
    """Per-row terms nabla_mu whose max is the Chebyshev distance of the system.

    nabla_mu = min_l max[(g_mu,l - y_mu)+, max_mu' min((y_mu' - y_mu)+ / 2, (y_mu' - g_mu',l)+)].

    The inner max over mu' is found without the full mu x mu' table: once rows are
    sorted by y, the first term grows and the suffix max of the second term
    shrinks along the order, so the best row sits where they cross, located by
    binary search. Every compared value is computed exactly as in the formula.
    """
    gamma = np.asarray(gamma, dtype=float)
    y = np.asarray(y, dtype=float)
    m, c = gamma.shape
    if m == 0:
        return np.zeros(0)
    ones = y == 1.0
    if ones.any() and np.all(ones | (y == 0.0)):
        # crisp second member: only rows at 1 can lift a row at 0, each by min(1/2, 1 - g)
        lift = np.minimum(0.5, np.maximum(1.0 - gamma[ones], 0.0).max(axis=0))
        return np.where(ones, 0.0, np.maximum(gamma, lift[None, :]).min(axis=1))
    order = np.argsort(y, kind="stable")
    ys = y[order]
    gap = np.maximum(ys[:, None] - gamma[order], 0.0)
    tail = np.maximum.accumulate(gap[::-1], axis=0)[::-1]
    # the inner max depends on a row only through its y value
    levels, row_level = np.unique(y, return_inverse=True)
    u = levels.size
    cols = np.arange(c)[None, :]
    y0 = levels[:, None]

    def rise(p):
        return np.maximum(ys[p] - y0, 0.0) / 2.0

    lo = np.zeros((u, c), dtype=np.intp)
    hi = np.full((u, c), m, dtype=np.intp)
    while True:
        active = lo < hi
        if not active.any():
            break
        mid = (lo + hi) // 2
        safe = np.minimum(mid, m - 1)
        crossed = rise(safe) >= tail[safe, cols]
        hi = np.where(active & crossed, mid, hi)
        lo = np.where(active & ~crossed, mid + 1, lo)
    best = np.zeros((u, c))
    for p in (lo - 1, lo):
        ok = (p >= 0) & (p < m)
        q = np.clip(p, 0, m - 1)
        best = np.maximum(best, np.where(ok, np.minimum(rise(q), tail[q, cols]), 0.0))
    best = best[row_level.ravel()]
    y0 = y[:, None]
    own = np.maximum(gamma - y0, 0.0)
    return np.maximum(own, best).min(axis=1)


def chebyshev_distance(system: EquationSystem) -> float:
    rows = chebyshev_rows(system.gamma, system.y)
    return float(rows.max()) if rows.size else 0.0


def approximate(gamma, y, nabla: float) -> tuple[np.ndarray, np.ndarray]:
    """Lowest approximate solution and the lowest Chebyshev approximation it produces."""
    lowered = np.maximum(np.asarray(y, dtype=float) - nabla, 0.0)
    x = maxeps_product(np.asarray(gamma).T, lowered)
    return x, minmax_product(gamma, x)


def solve(system: EquationSystem) -> SolveResult:
    e_low = maxeps_product(system.gamma.T, system.y)
    if system.signs is not None:
        e_high = upper_solution(system.signs, system.y)
    else:
        e_high = np.full(system.gamma.shape[1], np.nan)
    nabla = chebyshev_distance(system)
    if nabla == 0.0:
        return SolveResult(e_low, e_high, 0.0, True, system.y.copy(), e_low.copy())
    x, y_approx = approximate(system.gamma, system.y, nabla)
    return SolveResult(e_low, e_high, nabla, False, y_approx, x)


def reliable(system: EquationSystem, tau: float) -> bool:
    if tau <= 0:
        raise ValidationError("tau must be positive")
    return chebyshev_distance(system) < tau


def stack(systems: Sequence[EquationSystem]) -> EquationSystem:
    return EquationSystem(np.vstack([s.gamma for s in systems]), np.concatenate([s.y for s in systems]))


@dataclass
class RuleSetReport:
    stage: str
    tau: float
    nablas: list[float]
    selected: list[bool]
    stacked_nabla: float = 0.0

    @property
    def selected_count(self) -> int:
        return sum(self.selected)

    @property
    def selected_percent(self) -> float:
        return 100.0 * self.selected_count / len(self.selected) if self.selected else 0.0

    def as_dict(self) -> dict:
        return {
            "stage": self.stage,
            "tau": self.tau,
            "samples": len(self.selected),
            "selected": self.selected_count,
            "selected_percent": self.selected_percent,
            "stacked_nabla": self.stacked_nabla,
            "nablas": self.nablas,
            "reliable": self.selected,
        }


def _sample_system(rules: RuleSet, item):
    inputs, target = item
    degrees = premise_degrees(rules, inputs)
    system = build_system(rules, degrees, target)
    return degrees, system.y, chebyshev_distance(system)


def _fit(rules: RuleSet, built, tau: float) -> tuple[RuleSet, RuleSetReport]:
    report = RuleSetReport(rules.name, tau, [float(nabla) for _, _, nabla in built],
                           [nabla < tau for _, _, nabla in built])
    chosen, seen = [], set()
    for (degrees, y, nabla), keep in zip(built, report.selected):
        # a repeated sample adds only repeated rows, which change neither the distance nor the lowest solution
        key = degrees.lam.tobytes() + degrees.rho.tobytes() + y.tobytes()
        if not keep or key in seen:
            continue
        seen.add(key)
        gamma = _interleave(rules.sign_matrix, degrees.lam, degrees.rho)
        if nabla > 0.0:
            _, y = approximate(gamma, y, nabla)
        chosen.append(EquationSystem(gamma, y))
    if not chosen:
        raise NoReliableSamples(rules.name, tau)
    stacked = stack(chosen)
    report.stacked_nabla = chebyshev_distance(stacked)
    x, _ = approximate(stacked.gamma, stacked.y, report.stacked_nabla)
    return rules.with_parameters(x[0::2], x[1::2]), report


def learn_ruleset(rules: RuleSet, samples: Sequence[tuple[Mapping[str, np.ndarray], np.ndarray]], tau: float,
                  jobs: int | None = 1) -> tuple[RuleSet, RuleSetReport]:
    """Learn (s, r) from the samples whose system lies closer than tau to consistency."""
    if tau <= 0:
        raise ValidationError("tau must be positive")
    return _fit(rules, parallel_map(functools.partial(_sample_system, rules), samples, jobs), tau)


def resolve_tau(taus: float | Mapping[str, float], rules: RuleSet) -> float:
    if isinstance(taus, Mapping):
        for key in (rules.name, rules.tau_group):
            if key in taus:
                return float(taus[key])
        raise ValidationError(f"no tau given for rule set {rules.name!r} (group {rules.tau_group!r})")
    return float(taus)


def _infer_one(rules: RuleSet, inputs):
    return infer(rules, inputs)


def _parameter_key(stages: Sequence[RuleSet]) -> bytes:
    return b"".join(np.concatenate([stage.s, stage.r]).tobytes() for stage in stages)


def cascade_learn(cascade: Cascade, samples: Sequence[Sample], taus: float | Mapping[str, float],
                  jobs: int | None = 1, cache: dict | None = None) -> tuple[Cascade, list[RuleSetReport]]:
    """Learn every stage in order, feeding each learned stage's inferences to the next.

    `cache` may be shared between calls on the same samples (as threshold search
    does): per-sample systems and inferred outputs are reused whenever the
    parameters learned for the earlier stages come out the same.
    """
    cache = {} if cache is None else cache
    known = [dict(sample.inputs) for sample in samples]
    learned, reports = [], []
    for stage in cascade.stages:
        tau = resolve_tau(taus, stage)
        if tau <= 0:
            raise ValidationError("tau must be positive")
        upstream = _parameter_key(learned)
        size = stage.output_domain.size
        key = ("systems", stage.name, upstream)
        if key not in cache:
            items = [(inputs, one_hot(size, sample.targets[stage.output]))
                     for inputs, sample in zip(known, samples) if stage.output in sample.targets]
            cache[key] = parallel_map(functools.partial(_sample_system, stage), items, jobs)
        if not cache[key]:
            raise NoReliableSamples(stage.name, tau)
        fitted, report = _fit(stage, cache[key], tau)
        learned.append(fitted)
        reports.append(report)
        key = ("outputs", stage.name, _parameter_key(learned))
        if key not in cache:
            cache[key] = parallel_map(functools.partial(_infer_one, fitted), known, jobs)
        for inputs, out in zip(known, cache[key]):
            inputs[stage.output] = out
    return cascade.with_stages(learned), reports


@dataclass(frozen=True)
class ThresholdConfig:
    l: int = 30
    h: float = 5.0
    eps: float = 0.001
    min_improvement: float = 0.01
    stagnation: int = 1

    def __post_init__(self):
        if self.l < 1 or self.h < 1 or self.eps <= 0 or self.stagnation < 1:
            raise ValidationError("threshold config needs l >= 1, h >= 1, eps > 0 and stagnation >= 1")

    def candidates(self) -> np.ndarray:
        i = np.arange(1, self.l + 1)
        return (i / self.l) ** self.h * (1.0 + self.eps)


@dataclass
class ThresholdResult:
    taus: dict[str, float]
    accuracy: float
    history: list[tuple[dict[str, float], float | None]]


def threshold_search(cascade: Cascade, train: Sequence[Sample], valid: Sequence[Sample],
                     config: ThresholdConfig = ThresholdConfig(),
                     metric: Callable[[Cascade, Sequence[Sample]], float] | None = None,
                     jobs: int | None = 1) -> ThresholdResult:
    """Walk the candidate thresholds upwards until validation accuracy stops improving.

    All tau groups advance together through the candidates. Candidates under which
    some stage has no reliable sample are skipped.
    """
    if metric is None:
        from .benchmarks import evaluate

        def metric(learned, samples):
            return evaluate(learned, samples, jobs=jobs).accuracy

    groups = list(dict.fromkeys(stage.tau_group for stage in cascade.stages))
    history: list[tuple[dict[str, float], float | None]] = []
    best, best_taus, reference, stale = None, None, None, 0
    cache: dict = {}
    scores: dict[bytes, float] = {}
    for t in config.candidates():
        taus = {group: float(t) for group in groups}
        try:
            learned, _ = cascade_learn(cascade, train, taus, jobs, cache)
        except NoReliableSamples:
            history.append((taus, None))
            continue
        key = _parameter_key(learned.stages)
        if key not in scores:
            scores[key] = float(metric(learned, valid))
        score = scores[key]
        history.append((taus, score))
        if reference is None or score - reference >= config.min_improvement:
            reference = score
            stale = 0
        else:
            stale += 1
        if best is None or score > best:
            best, best_taus = score, taus
        if stale >= config.stagnation:
            break
    return ThresholdResult(best_taus, best, history)
