"""Attacker scenarios C1..C8 from (same source?, same architecture?, same balance?)."""
from __future__ import annotations

import enum
from typing import Mapping, Tuple, Union

from ..errors import TaskMismatchError


class DumbCase(enum.Enum):
    C1 = (True, True, True)  # white-box: surrogate == victim training conditions
    C2 = (True, True, False)
    C3 = (True, False, True)
    C4 = (True, False, False)
    C5 = (False, True, True)
    C6 = (False, True, False)
    C7 = (False, False, True)
    C8 = (False, False, False)

    @property
    def same_source(self) -> bool:
        return self.value[0]

    @property
    def same_arch(self) -> bool:
        return self.value[1]

    @property
    def same_balance(self) -> bool:
        return self.value[2]

    @classmethod
    def from_flags(cls, same_source: bool, same_arch: bool, same_balance: bool) -> "DumbCase":
        return cls((bool(same_source), bool(same_arch), bool(same_balance)))

    def with_arch(self, same_arch: bool) -> "DumbCase":
        return DumbCase.from_flags(self.same_source, same_arch, self.same_balance)

    def __str__(self) -> str:
        return self.name


CASES: Tuple[DumbCase, ...] = tuple(DumbCase)

Provenanceish = Union[Mapping, object]


def _get(p: Provenanceish, key: str):
    return p[key] if isinstance(p, Mapping) else getattr(p, key)


def classify_case(src: Provenanceish, trg: Provenanceish) -> DumbCase:
    """Case of a (surrogate, victim) pair from their provenance.

    Both arguments expose ``task``, ``source``, ``arch`` and ``balance`` as
    attributes or mapping keys.
    """
    if _get(src, "task") != _get(trg, "task"):
        raise TaskMismatchError(f"surrogate task {_get(src, 'task')!r} vs victim task {_get(trg, 'task')!r}")
    return DumbCase.from_flags(
        _get(src, "source") == _get(trg, "source"),
        _get(src, "arch") == _get(trg, "arch"),
        _get(src, "balance") == _get(trg, "balance"),
    )


def parse_case(name: str) -> DumbCase:
    return DumbCase[name]
