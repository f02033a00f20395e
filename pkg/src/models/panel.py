"""Two-period two-group panel data models."""
from dataclasses import dataclass, field
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .enums import OutcomeKind


@dataclass(frozen=True)
class PanelUnit:
    """One unit followed over the before (t) and after (t+1) periods."""
    unit_id: Hashable
    group: int          # 1 = treated in the after period, 0 = never treated
    y_pre: float
    y_post: float
    stratum: Optional[Hashable] = None


def _frozen(values: Any, dtype: Any) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PanelDataset:
    """
    Column-oriented, immutable collection of PanelUnits.

    Arrays are read-only after construction so a dataset can be shared across
    bootstrap workers without copies. Unit order is preserved from input.
    """
    unit_ids: np.ndarray
    group: np.ndarray
    y_pre: np.ndarray
    y_post: np.ndarray
    outcome_kind: OutcomeKind
    strata: Optional[np.ndarray] = None
    # Level materialized for "K+" cells when built from a contingency table
    top_code: Optional[int] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "unit_ids", _frozen(self.unit_ids, object))
        object.__setattr__(self, "group", _frozen(self.group, np.int64))
        object.__setattr__(self, "y_pre", _frozen(self.y_pre, np.float64))
        object.__setattr__(self, "y_post", _frozen(self.y_post, np.float64))
        object.__setattr__(self, "outcome_kind", OutcomeKind(self.outcome_kind))
        if self.strata is not None:
            object.__setattr__(self, "strata", _frozen(self.strata, object))
        lengths = {len(self.unit_ids), len(self.group), len(self.y_pre), len(self.y_post)}
        if self.strata is not None:
            lengths.add(len(self.strata))
        if len(lengths) > 1:
            raise ValueError(f"PanelDataset columns have unequal lengths: {sorted(lengths)}")

    @classmethod
    def from_units(
        cls,
        units: Sequence[PanelUnit],
        outcome_kind: OutcomeKind,
        top_code: Optional[int] = None,
        notes: Sequence[str] = (),
    ) -> "PanelDataset":
        has_strata = any(u.stratum is not None for u in units)
        return cls(
            unit_ids=[u.unit_id for u in units],
            group=[u.group for u in units],
            y_pre=[u.y_pre for u in units],
            y_post=[u.y_post for u in units],
            outcome_kind=outcome_kind,
            strata=[u.stratum for u in units] if has_strata else None,
            top_code=top_code,
            notes=tuple(notes),
        )

    # --- sizes and masks ---
    @property
    def n(self) -> int:
        return int(self.group.shape[0])

    @property
    def treated(self) -> np.ndarray:
        return self.group == 1

    @property
    def control(self) -> np.ndarray:
        return self.group == 0

    @property
    def n_treated(self) -> int:
        return int(np.count_nonzero(self.treated))

    @property
    def n_control(self) -> int:
        return int(np.count_nonzero(self.control))

    @property
    def units(self) -> List[PanelUnit]:
        strata = self.strata if self.strata is not None else [None] * self.n
        return [
            PanelUnit(unit_id=u, group=int(g), y_pre=float(a), y_post=float(b), stratum=s)
            for u, g, a, b, s in zip(self.unit_ids, self.group, self.y_pre, self.y_post, strata)
        ]

    # --- derived datasets ---
    def take(self, indices: np.ndarray) -> "PanelDataset":
        """Rows at `indices` (repeats allowed, used for resampling)."""
        return PanelDataset(
            unit_ids=self.unit_ids[indices],
            group=self.group[indices],
            y_pre=self.y_pre[indices],
            y_post=self.y_post[indices],
            outcome_kind=self.outcome_kind,
            strata=self.strata[indices] if self.strata is not None else None,
            top_code=self.top_code,
            notes=self.notes,
        )

    def subset(self, mask: np.ndarray) -> "PanelDataset":
        return self.take(np.flatnonzero(mask))

    def with_outcomes(
        self,
        y_pre: np.ndarray,
        y_post: np.ndarray,
        outcome_kind: OutcomeKind,
        notes: Sequence[str] = (),
    ) -> "PanelDataset":
        return PanelDataset(
            unit_ids=self.unit_ids,
            group=self.group,
            y_pre=y_pre,
            y_post=y_post,
            outcome_kind=outcome_kind,
            strata=self.strata,
            top_code=self.top_code,
            notes=self.notes + tuple(notes),
        )

    def with_strata(self, strata: Optional[Sequence[Hashable]]) -> "PanelDataset":
        return PanelDataset(
            unit_ids=self.unit_ids,
            group=self.group,
            y_pre=self.y_pre,
            y_post=self.y_post,
            outcome_kind=self.outcome_kind,
            strata=strata,
            top_code=self.top_code,
            notes=self.notes,
        )

    # --- export / comparison ---
    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame({
            "unit": self.unit_ids,
            "group": self.group,
            "y_pre": self.y_pre,
            "y_post": self.y_post,
        })
        if self.strata is not None:
            frame["stratum"] = self.strata
        return frame

    def equals_ignoring_order(self, other: "PanelDataset") -> bool:
        """Compare two datasets as multisets of units."""
        if not isinstance(other, PanelDataset):
            return False
        if self.outcome_kind != other.outcome_kind or self.n != other.n:
            return False
        if (self.strata is None) != (other.strata is None):
            return False
        left = self.to_frame().astype({"unit": str}).sort_values("unit").reset_index(drop=True)
        right = other.to_frame().astype({"unit": str}).sort_values("unit").reset_index(drop=True)
        return left.equals(right)

    def summary(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "n_treated": self.n_treated,
            "n_control": self.n_control,
            "outcome_kind": self.outcome_kind.value,
            "stratified": self.strata is not None,
            "top_code": self.top_code,
            "notes": list(self.notes),
        }


@dataclass(frozen=True)
class ContingencyCell:
    """Number of units with a given (group, y_pre level, y_post level)."""
    group: int
    y_pre_level: int
    y_post_level: int
    count: int


@dataclass(frozen=True)
class ContingencyTable:
    """Discrete-outcome panel in tabulated form; `top_code` means "this level and above"."""
    cells: Tuple[ContingencyCell, ...]
    top_code: Optional[int] = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "cells", tuple(self.cells))
        seen = set()
        for cell in self.cells:
            key = (cell.group, cell.y_pre_level, cell.y_post_level)
            if key in seen:
                raise ValueError(f"duplicate contingency cell {key}")
            seen.add(key)
            if cell.count < 0:
                raise ValueError(f"negative count in contingency cell {key}")

    def tallies(self) -> Dict[Tuple[int, int, int], int]:
        """(group, y_pre, y_post) -> count, zero cells dropped."""
        return {(c.group, c.y_pre_level, c.y_post_level): c.count for c in self.cells if c.count > 0}


@dataclass
class ValidationReport:
    """All invariant violations of a dataset; empty means usable by estimators."""
    violations: List[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> Dict[str, Any]:
        return {"ok": self.ok, "violations": list(self.violations)}
