"""
Distances between posterior files and the comparison report (CSV plus aligned text).
"""
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.core.config import MetricType, ReportConfig, ReportMode
from src.core.exceptions import InvalidArgumentError
from src.data.loaders import read_partitions_file, read_posterior
from src.partitions.partition import Partition
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.transport.entropic_ot import TransportPlan, posterior_distance
from src.utils.formatters import format_range, format_value
from src.utils.helpers import ensure_directory

PathLike = Union[str, Path]
CSV_FLOAT_FORMAT = "%.10g"


def wasserstein_distance(path_a: PathLike, path_b: PathLike, epsilon: float = 0.05,
                         metric: Union[MetricType, str] = MetricType.VOI,
                         return_plan: bool = False) -> Union[float, TransportPlan]:
    """
    Entropic Wasserstein distance between two posterior files.

    Args:
        path_a: First posterior file
        path_b: Second posterior file
        epsilon: Entropic regularization
        metric: Ground metric
        return_plan: Return the full plan (objective and bare transport cost) instead

    Returns:
        Objective <pi, M> - eps H(pi), or the TransportPlan
    """
    plan = posterior_distance(read_posterior(path_a), read_posterior(path_b), epsilon, metric)
    return plan if return_plan else plan.objective


@dataclass
class ReportRow:
    """One table row: a posterior measured against the reference."""
    label: str
    kind: str
    objective: Optional[float] = None
    transport_cost: Optional[float] = None
    expected_voi: Optional[float] = None
    low: Optional[float] = None
    high: Optional[float] = None

    @property
    def value(self) -> Optional[float]:
        return self.expected_voi if self.expected_voi is not None else self.objective

    def display_value(self) -> str:
        if self.low is not None and self.high is not None:
            return format_range(self.low, self.high)
        return format_value(self.value)


@dataclass
class ReportEntry:
    """A labelled posterior to be measured."""
    label: str
    kind: str
    posterior: EmpiricalPartitionPosterior


class Report:
    """Rows of a distance or expected-VoI comparison."""

    def __init__(self, mode: ReportMode, reference_label: str):
        self.mode = mode
        self.reference_label = reference_label
        self.rows: List[ReportRow] = []

    def add_row(self, row: ReportRow) -> None:
        # the entropic objective may be negative; the other metrics may not
        for v in (row.transport_cost, row.expected_voi):
            if v is not None and v < 0:
                raise InvalidArgumentError(f"row {row.label!r} has a negative metric value")
        self.rows.append(row)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame([asdict(r) for r in self.rows],
                            columns=["label", "kind", "objective", "transport_cost",
                                     "expected_voi", "low", "high"])

    def to_text(self) -> str:
        header = ("Expected VoI to " if self.mode == ReportMode.EXPECTED_VOI
                  else "Entropic W to ") + self.reference_label
        table = pd.DataFrame({
            "posterior": [r.label for r in self.rows],
            "value": [r.display_value() for r in self.rows],
            "transport_cost": [format_value(r.transport_cost) for r in self.rows],
        })
        if self.mode == ReportMode.EXPECTED_VOI:
            table = table.drop(columns=["transport_cost"])
        return f"{header}\n{table.to_string(index=False)}\n"

    def write(self, out_dir: PathLike, stem: str = "report") -> Tuple[Path, Path]:
        ensure_directory(out_dir)
        csv_path = Path(out_dir) / f"{stem}.csv"
        txt_path = Path(out_dir) / f"{stem}.txt"
        self.to_frame().to_csv(csv_path, index=False, float_format=CSV_FLOAT_FORMAT)
        with open(txt_path, "w", encoding="utf-8") as f:
            f.write(self.to_text())
        logger.info(f"Report written to {csv_path} and {txt_path}")
        return csv_path, txt_path


def _measure(entry: ReportEntry, reference: Union[EmpiricalPartitionPosterior, Partition],
             config: ReportConfig, metric: MetricType) -> ReportRow:
    if config.mode == ReportMode.EXPECTED_VOI:
        return ReportRow(entry.label, entry.kind, expected_voi=entry.posterior.expected_voi_to(reference))
    plan = posterior_distance(entry.posterior, reference, config.epsilon, metric,
                              max_iter=config.max_iter, tol=config.tol)
    return ReportRow(entry.label, entry.kind, objective=plan.objective,
                     transport_cost=plan.transport_cost)


def build_report(entries: Sequence[ReportEntry],
                 reference: Union[EmpiricalPartitionPosterior, Partition],
                 config: Optional[ReportConfig] = None, reference_label: str = "reference",
                 metric: Union[MetricType, str] = MetricType.VOI) -> Report:
    """
    Measure every entry against the reference.

    Shard rows collapse into one '[min, max]' row when there are more than
    ``config.range_threshold`` of them.
    """
    config = config or ReportConfig()
    metric = MetricType(metric)
    if config.mode == ReportMode.EXPECTED_VOI and not isinstance(reference, Partition):
        raise InvalidArgumentError("expected-VoI mode needs a reference partition")
    if config.mode == ReportMode.DISTANCE and not isinstance(reference, EmpiricalPartitionPosterior):
        raise InvalidArgumentError("distance mode needs a reference posterior")
    if any(e.posterior.n != reference.n for e in entries):
        raise InvalidArgumentError("report entries and reference cover different item counts")

    report = Report(config.mode, reference_label)
    shard_rows = [_measure(e, reference, config, metric) for e in entries if e.kind == "shard"]
    collapse = len(shard_rows) > config.range_threshold
    if collapse:
        values = np.array([r.value for r in shard_rows])
        report.add_row(ReportRow(label=f"Shards 1-{len(shard_rows)}", kind="shard_range",
                                 low=float(values.min()), high=float(values.max())))
    for entry in entries:
        if entry.kind == "shard":
            if not collapse:
                report.add_row(shard_rows.pop(0))
            continue
        report.add_row(_measure(entry, reference, config, metric))
    return report


def report_from_files(posteriors: Sequence[Tuple[str, str, PathLike]], reference_path: PathLike,
                      config: Optional[ReportConfig] = None,
                      metric: Union[MetricType, str] = MetricType.VOI) -> Report:
    """Build a report from (label, kind, posterior file) triples and a reference file."""
    config = config or ReportConfig()
    entries = [ReportEntry(label, kind, read_posterior(path)) for label, kind, path in posteriors]
    if config.mode == ReportMode.EXPECTED_VOI:
        reference = read_partitions_file(reference_path)[0]
    else:
        reference = read_posterior(reference_path)
    return build_report(entries, reference, config, os.path.basename(str(reference_path)), metric)
