"""Shared fixtures: the five-unit hand-worked panel and the road-crash tables."""
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pytest

from src.data import load_panel_file
from src.models import Layout, OutcomeKind, PanelDataset

DATA_DIR = Path(__file__).parent.parent / "data"


def make_dataset(
    group: Sequence[int],
    y_pre: Sequence[float],
    y_post: Sequence[float],
    kind: OutcomeKind = OutcomeKind.CONTINUOUS,
    strata: Optional[Sequence] = None,
) -> PanelDataset:
    return PanelDataset(
        unit_ids=[f"u{i}" for i in range(len(group))],
        group=group,
        y_pre=y_pre,
        y_post=y_post,
        outcome_kind=kind,
        strata=strata,
    )


def random_discrete_dataset(rng: np.random.Generator, max_level: int = 3, max_n: int = 50) -> PanelDataset:
    """Small count panel with at least one unit per group and every treated level covered by controls."""
    n = int(rng.integers(6, max_n + 1))
    n_treated = int(rng.integers(1, n - 2))
    group = np.array([1] * n_treated + [0] * (n - n_treated))
    levels = np.arange(max_level + 1)
    control_pre = rng.choice(levels, size=n - n_treated)
    treated_pre = rng.choice(np.unique(control_pre), size=n_treated)
    y_pre = np.concatenate([treated_pre, control_pre]).astype(float)
    y_post = rng.integers(0, max_level + 1, size=n).astype(float)
    return make_dataset(group, y_pre, y_post, OutcomeKind.COUNT)


@pytest.fixture
def tiny() -> PanelDataset:
    """Control {(0,0),(1,1),(2,3)}, treated {(1,2),(3,5)} as (y_pre, y_post)."""
    return make_dataset(
        group=[0, 0, 0, 1, 1],
        y_pre=[0, 1, 2, 1, 3],
        y_post=[0, 1, 3, 2, 5],
    )


@pytest.fixture(scope="session")
def crash_counts() -> PanelDataset:
    ds, _ = load_panel_file(DATA_DIR / "crash_counts.csv", Layout.CONTINGENCY, OutcomeKind.COUNT, top_code=3)
    return ds


@pytest.fixture(scope="session")
def crash_binary() -> PanelDataset:
    ds, _ = load_panel_file(DATA_DIR / "crash_binary.csv", Layout.CONTINGENCY, OutcomeKind.BINARY)
    return ds
