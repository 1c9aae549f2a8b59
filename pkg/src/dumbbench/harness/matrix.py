"""Enumeration of the experiment matrix: which (attack, surrogate, victim) cells exist."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, List, Optional, Sequence

from ..attacks.registry import AttackSpec
from ..errors import MatrixError
from .cases import DumbCase, classify_case

# balance of the reference models that score model-free transforms
REFERENCE_BALANCE = "balanced"


@dataclass
class ExperimentCell:
    """One observation: adversarial samples from ``src`` evaluated on ``trg``.

    For model-based attacks ``src`` is the surrogate model id. For model-free
    transforms ``src`` names the source dataset (``<task>-<source>``) whose
    test images were transformed; such cells carry ``src_arch = "*"`` and the
    reference balance.
    """

    task: str
    attack: str
    family: str
    src: str
    trg: str
    case: str
    src_source: str
    src_arch: str
    src_balance: str
    trg_source: str
    trg_arch: str
    trg_balance: str
    status: str = "pending"
    asr: Optional[float] = None
    n: int = 0
    n_success: int = 0
    n_class0: int = 0
    success_class0: int = 0
    n_class1: int = 0
    success_class1: int = 0
    gamma: object = None
    param_name: Optional[str] = None
    seed: int = 0

    @property
    def key(self) -> tuple:
        return (self.task, self.attack, self.src, self.trg)

    @property
    def dumb_case(self) -> DumbCase:
        return DumbCase[self.case]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> List[str]:
        return [f.name for f in fields(cls)]


def dataset_id(task: str, source: str) -> str:
    return f"{task}-{source}"


def _prov(record):
    return getattr(record, "provenance", record)


def expected_models_per_task(n_sources: int = 2, n_balances: int = 4, n_archs: int = 3) -> int:
    return n_sources * n_balances * n_archs


def build_matrix(task: str, models: Sequence, attacks: Iterable[AttackSpec], expected: int = 24) -> List[ExperimentCell]:
    """Pending cells for one task.

    ``models`` are records (or provenances) of this task's models. Model-based
    attacks get every ordered (surrogate, victim) pair; each model-free
    transform gets one cell per (source dataset, victim).

    Model-free cells have no surrogate architecture. Their case is assigned
    with "same architecture" set to True, because the reference models used
    to tune them span every architecture, including the victim's; aggregation
    treats them as architecture-neutral.
    """
    provs = [_prov(m) for m in models]
    if len(provs) != expected:
        raise MatrixError(f"task {task}: expected {expected} models, got {len(provs)}")
    for p in provs:
        if p.task != task:
            raise MatrixError(f"model {p.model_id} belongs to task {p.task!r}, not {task!r}")
    ids = [p.model_id for p in provs]
    if len(set(ids)) != len(ids):
        raise MatrixError(f"task {task}: duplicate model ids")
    provs = sorted(provs, key=lambda p: p.model_id)
    sources = sorted({p.source for p in provs})
    cells: List[ExperimentCell] = []
    for spec in attacks:
        if spec.is_mathematical:
            for s in provs:
                for t in provs:
                    cells.append(
                        ExperimentCell(
                            task, spec.name, spec.family, s.model_id, t.model_id, classify_case(s, t).name,
                            s.source, s.arch, s.balance, t.source, t.arch, t.balance, param_name=spec.param_name,
                        )
                    )
        else:
            for src in sources:
                for t in provs:
                    case = DumbCase.from_flags(src == t.source, True, REFERENCE_BALANCE == t.balance)
                    cells.append(
                        ExperimentCell(
                            task, spec.name, spec.family, dataset_id(task, src), t.model_id, case.name,
                            src, "*", REFERENCE_BALANCE, t.source, t.arch, t.balance, param_name=spec.param_name,
                        )
                    )
    return cells


def case_census(cells: Iterable[ExperimentCell]) -> Dict[str, int]:
    out = {c.name: 0 for c in DumbCase}
    for cell in cells:
        out[cell.case] += 1
    return out
