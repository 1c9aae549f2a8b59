"""Aggregations over a filled result table and the two-sample KS test."""
from __future__ import annotations

import math
from collections import defaultdict
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ..attacks.registry import MATHEMATICAL, NON_MATHEMATICAL
from ..errors import EvalError
from .cases import CASES, DumbCase
from .matrix import ExperimentCell

BALANCE_ORDER = ("balanced", "weak", "medium", "strong")
ARCH_ORDER = ("arch-S", "arch-M", "arch-L")


def _scored(cells: Iterable[ExperimentCell]) -> List[ExperimentCell]:
    return [c for c in cells if c.asr is not None and not (isinstance(c.asr, float) and math.isnan(c.asr))]


def _mean(values: Sequence[float]) -> float:
    # fsum is exactly rounded, so the mean does not depend on row order
    return math.fsum(values) / len(values)


def cell_cases(cell: ExperimentCell) -> Tuple[DumbCase, ...]:
    """Cases a cell counts toward during aggregation.

    A model-free transform has no surrogate architecture, so it counts toward
    both the same-architecture and different-architecture case with its
    source and balance relation.
    """
    case = cell.dumb_case
    if cell.family == NON_MATHEMATICAL:
        return (case.with_arch(True), case.with_arch(False))
    return (case,)


def aggregate_by_case(cells: Iterable[ExperimentCell]) -> List[dict]:
    """Mean ASR per (task, attack, case), with group sizes.

    Rows come sorted by task, attack and case.
    """
    groups: Dict[tuple, list] = defaultdict(list)
    family: Dict[str, str] = {}
    for c in _scored(cells):
        family[c.attack] = c.family
        for case in cell_cases(c):
            groups[(c.task, c.attack, case.name)].append(float(c.asr))
    rows = []
    for (task, attack, case), vals in sorted(groups.items()):
        rows.append({"task": task, "attack": attack, "family": family[attack], "case": case, "mean_asr": _mean(vals), "n_cells": len(vals)})
    return rows


def overall_by_case(cells: Iterable[ExperimentCell], family: str) -> List[dict]:
    """Per (task, case) mean over attacks of the per-attack case means."""
    per_attack = [r for r in aggregate_by_case(cells) if r["family"] == family]
    groups: Dict[tuple, list] = defaultdict(list)
    for r in per_attack:
        groups[(r["task"], r["case"])].append(r["mean_asr"])
    return [{"task": t, "case": k, "family": family, "mean_asr": _mean(v), "n_attacks": len(v)} for (t, k), v in sorted(groups.items())]


def compare_families(cells_or_rows) -> List[dict]:
    """Per (task, case): how often a model-free transform beats a model-based attack.

    Every (model-based, model-free) attack pair is one comparison of their
    case-mean ASR; a win needs a strictly higher mean.
    """
    rows = list(cells_or_rows)
    if rows and isinstance(rows[0], ExperimentCell):
        rows = aggregate_by_case(rows)
    means: Dict[tuple, Dict[str, float]] = defaultdict(dict)
    fam: Dict[str, str] = {}
    for r in rows:
        means[(r["task"], r["case"])][r["attack"]] = r["mean_asr"]
        fam[r["attack"]] = r["family"]
    math_attacks = sorted(a for a, f in fam.items() if f == MATHEMATICAL)
    free_attacks = sorted(a for a, f in fam.items() if f == NON_MATHEMATICAL)
    tasks = sorted({t for t, _ in means})
    out = []
    for task in tasks:
        for case in CASES:
            m = means.get((task, case.name), {})
            wins = comparisons = 0
            for a in math_attacks:
                for b in free_attacks:
                    if a in m and b in m:
                        comparisons += 1
                        wins += m[b] > m[a]
            out.append({"task": task, "case": case.name, "wins": wins, "comparisons": comparisons})
    return out


def family_win_totals(comparisons: Iterable[dict]) -> Dict[str, dict]:
    totals: Dict[str, dict] = defaultdict(lambda: {"wins": 0, "comparisons": 0})
    for r in comparisons:
        totals[r["task"]]["wins"] += r["wins"]
        totals[r["task"]]["comparisons"] += r["comparisons"]
    return dict(totals)


def asr_by_class(
    cells: Iterable[ExperimentCell],
    task: Optional[str] = None,
    attack: Optional[str] = None,
    minority_class: int = 0,
    balances: Sequence[str] = BALANCE_ORDER,
) -> Dict[str, np.ndarray]:
    """Minority- and majority-class ASR over (surrogate balance, victim balance).

    Entry ``[i, j]`` is the mean per-class ASR over model-based cells whose
    surrogate has ``balances[i]`` and victim ``balances[j]``. Empty groups are NaN.
    """
    sel = [
        c for c in _scored(cells)
        if c.family == MATHEMATICAL and (task is None or c.task == task) and (attack is None or c.attack == attack)
    ]
    pos = {b: i for i, b in enumerate(balances)}
    k = len(balances)
    buckets = {name: [[[] for _ in range(k)] for _ in range(k)] for name in ("minority", "majority", "combined")}
    for c in sel:
        if c.src_balance not in pos or c.trg_balance not in pos:
            continue
        i, j = pos[c.src_balance], pos[c.trg_balance]
        per_class = {0: (c.success_class0, c.n_class0), 1: (c.success_class1, c.n_class1)}
        s_min, n_min = per_class[minority_class]
        s_maj, n_maj = per_class[1 - minority_class]
        if n_min:
            buckets["minority"][i][j].append(s_min / n_min)
        if n_maj:
            buckets["majority"][i][j].append(s_maj / n_maj)
        buckets["combined"][i][j].append(float(c.asr))
    out = {}
    for name, grid in buckets.items():
        out[name] = np.array([[_mean(v) if v else np.nan for v in row] for row in grid])
    out["balances"] = np.array(balances)
    return out


def arch_transfer(cells: Iterable[ExperimentCell], attack: str = "TIFGSM", archs: Sequence[str] = ARCH_ORDER) -> np.ndarray:
    """Mean ASR of one attack over (surrogate architecture, victim architecture)."""
    pos = {a: i for i, a in enumerate(archs)}
    grid = [[[] for _ in archs] for _ in archs]
    for c in _scored(cells):
        if c.attack == attack and c.src_arch in pos and c.trg_arch in pos:
            grid[pos[c.src_arch]][pos[c.trg_arch]].append(float(c.asr))
    return np.array([[_mean(v) if v else np.nan for v in row] for row in grid])


def _kolmogorov_sf(lam: float) -> float:
    """Survival function of the limiting Kolmogorov distribution."""
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        # Jacobi-theta form converges fast for small arguments
        t = math.pi**2 / (8 * lam * lam)
        s = sum(math.exp(-((2 * k - 1) ** 2) * t) for k in range(1, 8))
        return max(0.0, min(1.0, 1.0 - math.sqrt(2 * math.pi) / lam * s))
    s = sum((-1) ** (k - 1) * math.exp(-2 * k * k * lam * lam) for k in range(1, 101))
    return max(0.0, min(1.0, 2 * s))


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    a = np.sort(a)
    b = np.sort(b)
    pts = np.concatenate([a, b])
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_test(sample_a, sample_b) -> Tuple[float, float]:
    """Two-sided two-sample Kolmogorov-Smirnov test.

    Returns ``(D, p)`` with ``D = sup |F_a - F_b|`` over the pooled sample and
    ``p`` from the limiting distribution at ``sqrt(n m / (n + m)) * D``.
    """
    a = np.asarray(sample_a, dtype=np.float64).ravel()
    b = np.asarray(sample_b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise EvalError("ks_test needs two non-empty samples")
    d = ks_statistic(a, b)
    en = a.size * b.size / (a.size + b.size)
    return d, _kolmogorov_sf(math.sqrt(en) * d)


def mismatch_distributions(
    cells: Iterable[ExperimentCell], balance: str = "strong", task: Optional[str] = None, bins: int = 10
) -> Dict[str, object]:
    """Model-based ASRs of cross-source cells at one victim balance, split by direction.

    Returns the two samples keyed ``"<src>-><trg>"``, a shared histogram
    (density) for each and the KS result between them.
    """
    sel = [
        c for c in _scored(cells)
        if c.family == MATHEMATICAL and c.src_source != c.trg_source and c.trg_balance == balance
        and (task is None or c.task == task)
    ]
    directions: Dict[str, list] = defaultdict(list)
    for c in sorted(sel, key=lambda c: c.key):
        directions[f"{c.src_source}->{c.trg_source}"].append(float(c.asr))
    edges = np.linspace(0.0, 1.0, bins + 1)
    out: Dict[str, object] = {"task": task, "balance": balance, "edges": edges, "samples": {}, "density": {}}
    for name, vals in sorted(directions.items()):
        arr = np.array(vals)
        out["samples"][name] = arr
        out["density"][name] = np.histogram(arr, bins=edges, density=True)[0] if arr.size else np.zeros(bins)
    names = sorted(directions)
    if len(names) == 2:
        d, p = ks_test(out["samples"][names[0]], out["samples"][names[1]])
        out["ks"] = {"directions": names, "D": d, "p": p}
    else:
        out["ks"] = None
    return out
