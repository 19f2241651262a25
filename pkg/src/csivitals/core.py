"""Domain types and trace I/O for WiFi CSI vital-sign streams.

A CSI stream is a sequence of timestamped complex channel tensors, one entry
per (tx antenna, rx antenna, OFDM subcarrier).  Traces and ground-truth labels
are stored as JSONL: one UTF-8 JSON document per line, complex values encoded
as ``[re, im]`` pairs.
"""

from __future__ import annotations

import io
import json
import os
from dataclasses import dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

GT_STATES = ("breathing", "motion", "absent")
GT_BPM_MIN = 10.0
GT_BPM_MAX = 40.0


class RecordError(ValueError):
    """Malformed stream input; carries the offending 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class TraceError(RecordError):
    """Malformed CSI trace input."""


class GroundTruthError(RecordError):
    """Malformed ground-truth input."""


@dataclass
class CsiFrame:
    """One timestamped CSI measurement.

    Attributes:
        timestamp: capture time in seconds, monotonic within a stream.
        csi: complex tensor of shape (n_tx, n_rx, n_sub).
    """

    timestamp: float
    csi: np.ndarray

    def __post_init__(self):
        self.timestamp = float(self.timestamp)
        self.csi = np.asarray(self.csi, dtype=np.complex128)
        if self.csi.ndim != 3:
            raise ValueError(f"csi tensor must have 3 axes, got {self.csi.ndim}")
        if not np.isfinite(self.timestamp):
            raise ValueError("timestamp must be finite")
        if not np.all(np.isfinite(self.csi)):
            raise ValueError("csi entries must be finite")

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.csi.shape  # type: ignore[return-value]

    @property
    def n_channels(self) -> int:
        return int(np.prod(self.csi.shape))


@dataclass
class RealChannelMatrix:
    """Real-valued multichannel series derived from a CSI stream.

    ``samples[k, c]`` indexes time step ``k`` and flattened channel ``c``
    (tx-major, then rx, then subcarrier).
    """

    samples: np.ndarray
    sample_rate: float
    timestamps: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.timestamps = np.asarray(self.timestamps, dtype=np.float64)
        if self.samples.ndim != 2:
            raise ValueError("samples must be a 2-D [time, channel] matrix")
        if len(self.timestamps) != len(self.samples):
            raise ValueError("timestamps length must match samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("samples must be finite")

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]


@dataclass
class GroundTruthRecord:
    """Reference label at one instant: breathing (with BPM), motion or absent."""

    timestamp: float
    state: str
    bpm: float | None = None

    def __post_init__(self):
        self.timestamp = float(self.timestamp)
        if self.state not in GT_STATES:
            raise GroundTruthError(f"unknown state {self.state!r}")
        if self.bpm is not None:
            if self.state != "breathing":
                raise GroundTruthError("bpm only valid on breathing records")
            self.bpm = float(self.bpm)
            if not (GT_BPM_MIN <= self.bpm <= GT_BPM_MAX):
                raise GroundTruthError(
                    f"bpm {self.bpm} outside [{GT_BPM_MIN}, {GT_BPM_MAX}]"
                )


@dataclass
class StreamConfig:
    """Stream timing conventions: nominal rate and epoch partitioning."""

    nominal_rate_hz: float = 800.0
    epoch_seconds: float = 30.0
    epoch_samples: int = 600

    def __post_init__(self):
        if min(self.nominal_rate_hz, self.epoch_seconds, self.epoch_samples) <= 0:
            raise ValueError("all stream parameters must be positive")
        if self.epoch_samples > self.nominal_rate_hz * self.epoch_seconds:
            raise ValueError("epoch_samples exceeds samples per epoch at nominal rate")

    @property
    def epoch_rate_hz(self) -> float:
        """Effective rate of a downsampled full epoch."""
        return self.epoch_samples / self.epoch_seconds


@dataclass
class Epoch:
    """One 30 s analysis unit of processed CSI.

    ``data`` holds the real channel matrix restricted to the epoch, resampled
    to the configured fixed length.  ``projections`` and ``explained_power``
    are attached by the subspace stage.
    """

    index: int
    start_s: float
    data: np.ndarray
    partial: bool = False
    projections: np.ndarray | None = None
    explained_power: np.ndarray | None = None


def _as_line_source(source) -> Iterable[bytes]:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.readlines()
    if isinstance(source, (bytes, bytearray)):
        return io.BytesIO(bytes(source)).readlines()
    return source.readlines()


def read_trace(source: str | os.PathLike | bytes | IO[bytes]) -> list[CsiFrame]:
    """Read a JSONL CSI trace from a path, byte string or binary stream.

    Returns frames in file order.  Raises TraceError with the 1-based line
    number on malformed lines, non-increasing timestamps or tensor dimensions
    that differ from the first frame.
    """
    frames: list[CsiFrame] = []
    dims: tuple[int, int, int] | None = None
    last_t = None
    for lineno, raw in enumerate(_as_line_source(source), start=1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
            t = float(doc["t"])
            tensor = np.asarray(doc["csi"], dtype=np.float64)
        except (ValueError, KeyError, TypeError) as exc:
            raise TraceError(f"cannot parse frame: {exc}", line=lineno) from exc
        if tensor.ndim != 4 or tensor.shape[-1] != 2:
            raise TraceError(
                f"csi must nest [tx][rx][subcarrier][re,im], got shape {tensor.shape}",
                line=lineno,
            )
        csi = tensor[..., 0] + 1j * tensor[..., 1]
        if dims is None:
            dims = csi.shape
        elif csi.shape != dims:
            raise TraceError(
                f"tensor dimensions {csi.shape} differ from stream dimensions {dims}",
                line=lineno,
            )
        if last_t is not None and t <= last_t:
            raise TraceError(
                f"timestamp {t} not greater than previous {last_t}", line=lineno
            )
        last_t = t
        try:
            frames.append(CsiFrame(t, csi))
        except ValueError as exc:
            raise TraceError(str(exc), line=lineno) from exc
    return frames


def frame_to_json(frame: CsiFrame) -> str:
    """Encode one frame as a compact JSON trace line (without newline)."""
    stacked = np.stack([frame.csi.real, frame.csi.imag], axis=-1)
    return json.dumps(
        {"t": frame.timestamp, "csi": stacked.tolist()}, separators=(",", ":")
    )


def write_trace(frames: Sequence[CsiFrame]) -> bytes:
    """Serialize frames to JSONL bytes, re-readable by :func:`read_trace`.

    Values survive the round trip exactly (shortest round-trip decimal
    encoding).  Raises ValueError naming the frame index on any invariant
    violation.
    """
    out = io.BytesIO()
    dims = None
    last_t = None
    for i, frame in enumerate(frames):
        if not isinstance(frame, CsiFrame):
            raise ValueError(f"frame {i}: not a CsiFrame")
        if dims is None:
            dims = frame.dims
        elif frame.dims != dims:
            raise ValueError(f"frame {i}: dimensions {frame.dims} != {dims}")
        if last_t is not None and frame.timestamp <= last_t:
            raise ValueError(f"frame {i}: timestamp not strictly increasing")
        last_t = frame.timestamp
        out.write(frame_to_json(frame).encode())
        out.write(b"\n")
    return out.getvalue()


def read_ground_truth(
    source: str | os.PathLike | bytes | IO[bytes],
) -> list[GroundTruthRecord]:
    """Read JSONL ground-truth records; timestamps must be non-decreasing."""
    records: list[GroundTruthRecord] = []
    last_t = None
    for lineno, raw in enumerate(_as_line_source(source), start=1):
        if not raw.strip():
            continue
        try:
            doc = json.loads(raw)
            rec = GroundTruthRecord(float(doc["t"]), doc["state"], doc.get("bpm"))
        except GroundTruthError as exc:
            raise GroundTruthError(str(exc), line=lineno) from exc
        except (ValueError, KeyError, TypeError) as exc:
            raise GroundTruthError(f"cannot parse record: {exc}", line=lineno) from exc
        if last_t is not None and rec.timestamp < last_t:
            raise GroundTruthError("timestamps must be non-decreasing", line=lineno)
        last_t = rec.timestamp
        records.append(rec)
    return records


def write_ground_truth(records: Sequence[GroundTruthRecord]) -> bytes:
    """Serialize ground-truth records to JSONL bytes."""
    out = io.BytesIO()
    for rec in records:
        doc: dict = {"t": rec.timestamp, "state": rec.state}
        if rec.bpm is not None:
            doc["bpm"] = rec.bpm
        out.write(json.dumps(doc, separators=(",", ":")).encode())
        out.write(b"\n")
    return out.getvalue()


def frames_to_arrays(frames: Sequence[CsiFrame]) -> tuple[np.ndarray, np.ndarray]:
    """Stack a frame sequence into (timestamps, complex tensor [time, tx, rx, sub])."""
    if not frames:
        return np.empty(0), np.empty((0, 0, 0, 0), dtype=np.complex128)
    t = np.array([f.timestamp for f in frames])
    tensor = np.stack([f.csi for f in frames])
    return t, tensor
