"""
Trace sink for phasealign experiments.

This module contains the convergence-trace value objects and the TraceSink
that collects them. Strategies write into a per-trial TrialRecorder buffer;
finished buffers are committed to the shared sink under a lock, so trials
running concurrently never interleave their records. Traces are always
handed back in trial-index order.
"""

import csv
import json
import logging
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, TextIO

logger = logging.getLogger(__name__)

TRACE_CSV_HEADER = ["trial", "algorithm", "slot", "rss", "normalized_rss"]


def format_float(value: float) -> str:
    """Render a float with 12 significant digits."""
    return f"{value:.12g}"


@dataclass(frozen=True)
class TraceRecord:
    """RSS observed in one time slot."""

    slot: int
    rss: float
    normalized_rss: float

    def to_dict(self) -> Dict[str, Any]:
        """Convert TraceRecord to a dictionary for serialization"""
        return {"slot": self.slot, "rss": self.rss, "normalized_rss": self.normalized_rss}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TraceRecord':
        """Create a TraceRecord from a dictionary"""
        return cls(slot=int(data["slot"]), rss=float(data["rss"]), normalized_rss=float(data["normalized_rss"]))


@dataclass
class ConvergenceTrace:
    """Per-slot RSS sequence of one trial."""

    trial_index: int
    algorithm: str
    seed: Optional[int] = None
    records: List[TraceRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def final(self) -> Optional[TraceRecord]:
        return self.records[-1] if self.records else None

    def normalized_values(self) -> List[float]:
        return [record.normalized_rss for record in self.records]

    def to_dict(self) -> Dict[str, Any]:
        """Convert ConvergenceTrace to a dictionary for serialization"""
        return {
            "trial_index": self.trial_index,
            "algorithm": self.algorithm,
            "seed": self.seed,
            "records": [record.to_dict() for record in self.records],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'ConvergenceTrace':
        """Create a ConvergenceTrace from a dictionary"""
        return cls(
            trial_index=int(data["trial_index"]),
            algorithm=data["algorithm"],
            seed=data.get("seed"),
            records=[TraceRecord.from_dict(r) for r in data.get("records", [])],
        )


class TrialRecorder:
    """Buffers the slot records and round logs of a single trial.

    A recorder is owned by exactly one trial and is not thread-safe.
    """

    def __init__(self, trial_index: int, algorithm: str, aligned_rss: float, seed: Optional[int] = None):
        """Initialize a recorder.

        Args:
            trial_index: Index of the trial being recorded
            algorithm: Strategy name written into every CSV row
            aligned_rss: Fully aligned RSS used to normalize each record
            seed: Per-trial seed, kept for reproducibility
        """
        if aligned_rss <= 0:
            raise ValueError("aligned_rss must be positive")
        self.trial_index = trial_index
        self.algorithm = algorithm
        self.aligned_rss = aligned_rss
        self.seed = seed
        self.records: List[TraceRecord] = []
        self.round_logs: List[Any] = []

    @property
    def next_slot(self) -> int:
        return len(self.records)

    def record_slot(self, rss_value: float) -> TraceRecord:
        """Append the RSS observed in the next slot.

        Args:
            rss_value: RSS of the committed beamformer state in this slot

        Returns:
            The stored TraceRecord
        """
        record = TraceRecord(
            slot=self.next_slot,
            rss=float(rss_value),
            normalized_rss=float(rss_value) / self.aligned_rss,
        )
        self.records.append(record)
        return record

    def record_round(self, round_log: Any) -> None:
        """Keep a per-round algorithm log (e.g. one DDSA round)."""
        self.round_logs.append(round_log)

    def to_trace(self) -> ConvergenceTrace:
        return ConvergenceTrace(
            trial_index=self.trial_index,
            algorithm=self.algorithm,
            seed=self.seed,
            records=list(self.records),
        )


class TraceSink:
    """Collects finished trial traces from any number of threads."""

    def __init__(self):
        self._lock = threading.Lock()
        self._traces: Dict[int, ConvergenceTrace] = {}
        self._round_logs: Dict[int, List[Any]] = {}

    def open_trial(self, trial_index: int, algorithm: str, aligned_rss: float,
                   seed: Optional[int] = None) -> TrialRecorder:
        """Create the private buffer a trial records into."""
        return TrialRecorder(trial_index, algorithm, aligned_rss, seed=seed)

    def commit(self, recorder: TrialRecorder) -> ConvergenceTrace:
        """Merge a finished trial buffer into the sink.

        Args:
            recorder: The trial's buffer

        Returns:
            The committed ConvergenceTrace
        """
        trace = recorder.to_trace()
        with self._lock:
            if trace.trial_index in self._traces:
                logger.warning(f"Trial {trace.trial_index} committed twice; keeping the latest trace")
            self._traces[trace.trial_index] = trace
            self._round_logs[trace.trial_index] = list(recorder.round_logs)
        return trace

    def get_traces(self) -> List[ConvergenceTrace]:
        """All committed traces ordered by trial index."""
        with self._lock:
            return [self._traces[k] for k in sorted(self._traces)]

    def get_round_logs(self, trial_index: int) -> List[Any]:
        with self._lock:
            return list(self._round_logs.get(trial_index, []))

    def clear(self) -> None:
        with self._lock:
            self._traces.clear()
            self._round_logs.clear()


def write_trace_csv(traces: Iterable[ConvergenceTrace], sink: TextIO) -> None:
    """Write traces as CSV rows ordered by (trial, slot).

    Args:
        traces: Traces to write
        sink: Open text stream; LF line endings are always used
    """
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(TRACE_CSV_HEADER)
    for trace in sorted(traces, key=lambda t: t.trial_index):
        for record in sorted(trace.records, key=lambda r: r.slot):
            writer.writerow([
                trace.trial_index,
                trace.algorithm,
                record.slot,
                format_float(record.rss),
                format_float(record.normalized_rss),
            ])


def read_trace_csv(source: TextIO) -> List[ConvergenceTrace]:
    """Parse a CSV written by write_trace_csv back into traces."""
    traces: Dict[int, ConvergenceTrace] = {}
    for row in csv.DictReader(source):
        trial = int(row["trial"])
        trace = traces.setdefault(trial, ConvergenceTrace(trial_index=trial, algorithm=row["algorithm"]))
        trace.records.append(TraceRecord(
            slot=int(row["slot"]),
            rss=float(row["rss"]),
            normalized_rss=float(row["normalized_rss"]),
        ))
    return [traces[k] for k in sorted(traces)]


def save_trace_csv(traces: Iterable[ConvergenceTrace], path: str) -> str:
    """Write traces to a CSV file, creating parent directories as needed."""
    _ensure_parent(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        write_trace_csv(traces, f)
    return path


def save_json(data: Dict[str, Any], path: str) -> str:
    """Write a JSON document with sorted keys so reruns are byte-identical."""
    _ensure_parent(path)
    with open(path, "w", newline="\n", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True)
        f.write("\n")
    return path


def _ensure_parent(path: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
