"""Detection evaluation against labeled flows.

Two granularities. Flow-level: the detector's evidence uids are compared
against flow labels one-to-one (Malicious is the positive class, Unknown
flows are excluded and reported separately, unlabeled ``(empty)`` flows
count as negatives). IP-level: time is cut into fixed windows aligned to
the epoch and each (source IP, window) pair becomes one decision, which is
how "was the attacker flagged while attacking" is scored.

Undefined ratios stay undefined (None), they are never reported as 0.
"""

from __future__ import annotations

import ipaddress
import json
import logging
import math
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import LogFormatError, UsageError

logger = logging.getLogger(__name__)

MALICIOUS = "Malicious"
BENIGN = "Benign"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class LabeledFlow:
    """The slice of a labeled conn row that evaluation needs."""

    uid: str
    start: float
    src_ip: ipaddress.IPv4Address | ipaddress.IPv6Address
    label: str


@dataclass(frozen=True)
class DetectionRecord:
    ip: ipaddress.IPv4Address | ipaddress.IPv6Address
    time: float
    evidence: frozenset[str]


@dataclass
class ConfusionCounts:
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def add(self, status: str) -> None:
        setattr(self, status.lower(), getattr(self, status.lower()) + 1)


@dataclass(frozen=True)
class MetricsReport:
    """Derived ratios; a None metric had a zero denominator."""

    counts: ConfusionCounts
    fpr: float | None
    tpr: float | None
    accuracy: float | None
    f1: float | None


def compute_metrics(counts: ConfusionCounts) -> MetricsReport:
    def ratio(num: int, den: int) -> float | None:
        return num / den if den else None

    return MetricsReport(
        counts=counts,
        fpr=ratio(counts.fp, counts.fp + counts.tn),
        tpr=ratio(counts.tp, counts.tp + counts.fn),
        accuracy=ratio(counts.tp + counts.tn, counts.total()),
        f1=ratio(2 * counts.tp, 2 * counts.tp + counts.fp + counts.fn),
    )


def flow_confusion(
    flows: Sequence[LabeledFlow],
    evidence: Iterable[str],
    cutoff: float | None = None,
) -> ConfusionCounts:
    """Flow-level confusion between labels and a detector's evidence uids.

    Evidence uids must exist in ``flows`` (checked against the full list);
    when a cutoff is given only flows starting at or before it are counted.
    Unknown-labeled flows are excluded entirely; any other non-Malicious
    label, including ``(empty)``, is a negative.
    """
    evidence_set = set(evidence)
    known = {flow.uid for flow in flows}
    missing = sorted(evidence_set - known)
    if missing:
        raise UsageError(
            "evidence uids not present in the labeled flows: " + ", ".join(missing)
        )
    counts = ConfusionCounts()
    for flow in flows:
        if cutoff is not None and flow.start > cutoff:
            continue
        if flow.label == UNKNOWN:
            continue
        positive_truth = flow.label == MALICIOUS
        detected = flow.uid in evidence_set
        if positive_truth:
            if detected:
                counts.tp += 1
            else:
                counts.fn += 1
        else:
            if detected:
                counts.fp += 1
            else:
                counts.tn += 1
    return counts


@dataclass(frozen=True)
class WindowStatus:
    window_start: float
    truth: bool
    predicted: bool

    @property
    def status(self) -> str:
        if self.truth:
            return "TP" if self.predicted else "FN"
        return "FP" if self.predicted else "TN"


def ip_detection_timeline(
    flows: Sequence[LabeledFlow],
    detections: Sequence[DetectionRecord],
    window: float,
    threshold: int = 1,
) -> dict[ipaddress.IPv4Address | ipaddress.IPv6Address, list[WindowStatus]]:
    """Per-source-IP, per-window ground truth and prediction.

    Windows tumble in fixed strides aligned to the epoch. Ground truth for
    (ip, window) is positive iff a malicious-labeled flow of that IP starts
    inside the window. The prediction is positive in a detection's own
    window (detections below the evidence threshold are ignored), and stays
    positive afterwards only while the IP's most recent activity window
    contains malicious flows; once the IP goes quiet or benign the alert
    reverts immediately.
    """
    if window <= 0:
        raise UsageError("window must be a positive number of seconds")
    qualifying = [d for d in detections if len(d.evidence) >= threshold]

    def win(ts: float) -> int:
        return math.floor(ts / window)

    activity: dict[object, set[int]] = {}
    malicious: dict[object, set[int]] = {}
    detected: dict[object, set[int]] = {}
    lo: int | None = None
    hi: int | None = None

    def widen(w: int) -> None:
        nonlocal lo, hi
        lo = w if lo is None else min(lo, w)
        hi = w if hi is None else max(hi, w)

    for flow in flows:
        w = win(flow.start)
        widen(w)
        activity.setdefault(flow.src_ip, set()).add(w)
        if flow.label == MALICIOUS:
            malicious.setdefault(flow.src_ip, set()).add(w)
    for det in qualifying:
        w = win(det.time)
        widen(w)
        detected.setdefault(det.ip, set()).add(w)

    timelines: dict = {}
    if lo is None:
        return timelines
    ips = sorted(set(activity) | set(detected), key=lambda ip: (ip.version, int(ip)))
    for ip in ips:
        acts = activity.get(ip, set())
        mals = malicious.get(ip, set())
        dets = detected.get(ip, set())
        statuses: list[WindowStatus] = []
        last_activity: int | None = None
        has_detection_before = False
        for w in range(lo, hi + 1):
            if w in acts:
                last_activity = w
            if w in dets:
                predicted = True
                has_detection_before = True
            else:
                predicted = (
                    has_detection_before
                    and last_activity is not None
                    and last_activity in mals
                )
            statuses.append(
                WindowStatus(
                    window_start=w * window,
                    truth=w in mals,
                    predicted=predicted,
                )
            )
        timelines[ip] = statuses
    return timelines


def timeline_confusion(timelines: dict) -> ConfusionCounts:
    counts = ConfusionCounts()
    for statuses in timelines.values():
        for status in statuses:
            counts.add(status.status)
    return counts


def read_detections(stream: IO[str], source: str = "<detections>") -> list[DetectionRecord]:
    """Parse detections from JSON lines: {"ip", "time", "evidence": [uids]}."""
    records: list[DetectionRecord] = []
    for lineno, line in enumerate(stream, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError:
            raise LogFormatError(f"{source}: line {lineno}: invalid JSON") from None
        if not isinstance(obj, dict):
            raise LogFormatError(f"{source}: line {lineno}: expected an object")
        try:
            ip = ipaddress.ip_address(obj["ip"])
            time = float(obj["time"])
            evidence = frozenset(str(u) for u in obj["evidence"])
        except (KeyError, TypeError, ValueError) as exc:
            raise LogFormatError(
                f"{source}: line {lineno}: needs ip, time and evidence ({exc})"
            ) from None
        records.append(DetectionRecord(ip=ip, time=time, evidence=evidence))
    return records


def check_detection_times(
    detections: Sequence[DetectionRecord], flows: Sequence[LabeledFlow]
) -> None:
    """Warn when a detection claims evidence from its own future."""
    starts = {flow.uid: flow.start for flow in flows}
    for det in detections:
        latest = max((starts[u] for u in det.evidence if u in starts), default=None)
        if latest is not None and det.time < latest:
            logger.warning(
                "detection of %s at %.6f predates evidence flow at %.6f",
                det.ip,
                det.time,
                latest,
            )
