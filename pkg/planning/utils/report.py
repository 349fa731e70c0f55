"""Tabular outputs: method comparison reports and learning curves."""
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import pandas as pd

from ..exceptions import FormatError
from ..services.agents import TrainedModel
from .formats import atomic_write, load_plan

logger = logging.getLogger(__name__)

REPORT_COLUMNS = ["instance", "method", "view_count", "coverage_fraction", "runtime_seconds", "lambda_sequence"]
CURVE_COLUMNS = ["episode", "length", "return", "moving_average"]
DEFAULT_WINDOW = 500
DEFAULT_DOWNSAMPLE = (10_000, 100)


@dataclass(frozen=True)
class RunReport:
    methods: pd.DataFrame
    curves: pd.DataFrame | None = None

    def write_csv(self, path: str | Path) -> None:
        atomic_write(path, self.methods.to_csv(index=False))

    def write_xlsx(self, path: str | Path) -> None:
        path = Path(path)
        tmp = path.with_name(f".{path.name}.tmp.xlsx")
        with pd.ExcelWriter(tmp, engine="openpyxl") as writer:
            self.methods.to_excel(writer, sheet_name="methods", index=False)
            if self.curves is not None:
                self.curves.to_excel(writer, sheet_name="learning_curves", index=False)
        tmp.replace(path)

    def write_curves_csv(self, path: str | Path) -> None:
        if self.curves is None:
            raise FormatError("Report has no learning curves")
        atomic_write(path, self.curves.to_csv(index=False))


def learning_curve(model: TrainedModel, window: int = DEFAULT_WINDOW,
                   downsample: tuple[int, int] | None = DEFAULT_DOWNSAMPLE) -> pd.DataFrame:
    """
    One row per episode with the trailing moving average of the plan length.

    With ``downsample = (after, every)`` episodes beyond ``after`` are kept only
    every ``every``-th; the moving average is computed before thinning.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    frame = pd.DataFrame(
        {
            "episode": range(len(model.episode_log)),
            "length": [record.length for record in model.episode_log],
            "return": [record.episode_return for record in model.episode_log],
        }
    )
    frame["moving_average"] = frame["length"].rolling(window, min_periods=1).mean()
    if downsample is not None:
        after, every = downsample
        keep = (frame["episode"] < after) | (frame["episode"] % every == 0)
        frame = frame[keep].reset_index(drop=True)
    return frame[CURVE_COLUMNS]


def write_learning_curve(path: str | Path, model: TrainedModel, window: int = DEFAULT_WINDOW,
                         downsample: tuple[int, int] | None = DEFAULT_DOWNSAMPLE) -> pd.DataFrame:
    frame = learning_curve(model, window, downsample)
    atomic_write(path, frame.to_csv(index=False))
    return frame


def _plan_row(path: Path) -> dict:
    plan, instance = load_plan(path)
    return {
        "instance": instance if instance is not None else path.stem,
        "method": plan.method,
        "view_count": len(plan),
        "coverage_fraction": plan.final_coverage_fraction,
        "runtime_seconds": plan.runtime_seconds,
        "lambda_sequence": " ".join(f"{lam:g}" for lam in plan.lambdas),
    }


def _read_curve(path: Path) -> pd.DataFrame:
    try:
        frame = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise FormatError(f"Cannot read learning curve {path}: {e}") from e
    missing = [column for column in CURVE_COLUMNS if column not in frame.columns]
    if missing:
        raise FormatError(f"{path} is missing learning-curve columns {missing}")
    frame = frame[CURVE_COLUMNS].copy()
    frame.insert(0, "source", path.stem)
    return frame


def build_report(plan_paths: Iterable[str | Path], curve_paths: Iterable[str | Path] = ()) -> RunReport:
    """
    Collect plan files into one row per (instance, method).

    Rows are sorted by instance then method so identical inputs always give
    identical reports; a duplicate (instance, method) pair is rejected.
    """
    rows = [_plan_row(Path(path)) for path in plan_paths]
    if not rows:
        raise FormatError("No plan files given")
    methods = pd.DataFrame(rows, columns=REPORT_COLUMNS)
    duplicated = methods.duplicated(subset=["instance", "method"])
    if duplicated.any():
        first = methods[duplicated].iloc[0]
        raise FormatError(f"Duplicate plan for instance {first['instance']!r}, method {first['method']!r}")
    methods = methods.sort_values(["instance", "method"], kind="mergesort").reset_index(drop=True)

    curves = None
    curve_paths = [Path(path) for path in curve_paths]
    if curve_paths:
        curves = pd.concat([_read_curve(path) for path in curve_paths], ignore_index=True)

    logger.info(f"Report over {len(methods)} plans and {len(curve_paths)} learning curves")
    return RunReport(methods, curves)
