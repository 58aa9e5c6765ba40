"""Command line interface.

Subcommands: label (apply rules to conn.log), propagate (carry conn labels
into the other logs of a directory), eval (score detections against labels),
validate-config, show-ontology. Outputs never overwrite inputs; labeled
copies get a ``.labeled`` infix. Exit codes: 0 success, 1 data/runtime
problem, 2 usage or configuration problem.
"""

from __future__ import annotations

import argparse
import hashlib
import ipaddress
import json
import logging
import sys
from collections import Counter
from pathlib import Path

from .errors import ConfigError, LogFormatError, UsageError
from .labeler import (
    EMPTY_PAIR,
    apply_rules,
    index_from_labeled_rows,
)
from .metrics import (
    LabeledFlow,
    check_detection_times,
    compute_metrics,
    flow_confusion,
    ip_detection_timeline,
    read_detections,
    timeline_confusion,
    MALICIOUS,
    UNKNOWN,
)
from .ontology import builtin_ontology, load_ontology
from .propagate import (
    X509_ID_FIELDS,
    accumulate_cert_labels,
    files_row_labels,
    lookup_row,
)
from .rules import load_config
from .zeekio import LABEL_FIELDS, ConnSchema, ZeekLogReader, ZeekLogWriter, read_log, row_field

logger = logging.getLogger(__name__)


def _read_config(path: Path) -> tuple[str, str]:
    """Config text plus the sha256 of the file bytes."""
    data = path.read_bytes()
    digest = hashlib.sha256(data).hexdigest()
    try:
        return data.decode("utf-8"), digest
    except UnicodeDecodeError:
        raise ConfigError(f"{path}: config file is not valid UTF-8") from None


def _labeled_path(path: Path) -> Path:
    if path.name.endswith(".log"):
        return path.with_name(path.name[: -len(".log")] + ".labeled.log")
    return path.with_name(path.name + ".labeled")


def _pct(value: float | None) -> str:
    return "n/a" if value is None else f"{100.0 * value:.1f}%"


def cmd_label(ns: argparse.Namespace) -> int:
    config_path = Path(ns.config)
    conn_path = Path(ns.conn)
    text, digest = _read_config(config_path)
    _, ruleset = load_config(text)

    out_path = Path(ns.output) if ns.output else _labeled_path(conn_path)
    if out_path.resolve() == conn_path.resolve():
        raise UsageError(f"refusing to overwrite the input file {conn_path}")

    histogram: Counter[str] = Counter()
    rows = 0
    with open(conn_path, encoding="utf-8") as src, open(
        out_path, "w", encoding="utf-8"
    ) as dst:
        reader = ZeekLogReader(src, str(conn_path))
        schema = ConnSchema(reader.header, reader.format)
        writer = ZeekLogWriter(dst, reader.header, reader.format)
        for row in reader.rows():
            pair = apply_rules(ruleset, schema.view(row))
            writer.write_row(row, pair[0], pair[1])
            histogram[pair[0]] += 1
            rows += 1
        writer.finish(reader.trailer)

    unlabeled = histogram.get(EMPTY_PAIR[0], 0)
    print(f"rows: {rows}")
    print(f"labeled: {rows - unlabeled}")
    print(f"(empty): {unlabeled}")
    for name, count in sorted(histogram.items(), key=lambda kv: (-kv[1], kv[0])):
        if name != EMPTY_PAIR[0]:
            print(f"  {name}: {count}")
    print(f"config sha256: {digest}")
    print(f"wrote: {out_path}")
    return 0


def _route_for(path: Path, fields: list[str], header_path: str | None) -> str:
    stem = path.name.split(".", 1)[0]
    if stem == "conn" or header_path == "conn":
        return "conn"
    if "conn_uids" in fields:
        return "files"
    if stem == "x509" or header_path == "x509":
        return "x509"
    if "uid" in fields or "uids" in fields:
        return "uid"
    return "none"


def cmd_propagate(ns: argparse.Namespace) -> int:
    conn_path = Path(ns.conn_labeled)
    log_dir = Path(ns.log_dir)
    out_dir = Path(ns.output) if ns.output else log_dir
    if not log_dir.is_dir():
        raise UsageError(f"{log_dir} is not a directory")
    out_dir.mkdir(parents=True, exist_ok=True)

    with open(conn_path, encoding="utf-8") as src:
        reader = ZeekLogReader(src, str(conn_path))
        index = index_from_labeled_rows(reader.header, reader.rows())

    candidates = sorted(
        p
        for p in log_dir.iterdir()
        if p.is_file()
        and p.name.endswith(".log")
        and ".labeled" not in p.name
        and p.resolve() != conn_path.resolve()
    )

    routes: dict[Path, str] = {}
    for path in candidates:
        with open(path, encoding="utf-8") as fh:
            reader = ZeekLogReader(fh, str(path))
            routes[path] = _route_for(path, reader.header.fields, reader.header.path)

    # the flow log is where the labels come from, not a propagation target
    for path in [p for p in candidates if routes[p] == "conn"]:
        logger.info("%s is the label source; skipping", path.name)
        candidates.remove(path)

    cert_map: dict[str, tuple[str, str]] = {}
    if any(route == "x509" for route in routes.values()):
        ssl_paths = [
            p
            for p in candidates
            if p.name.split(".", 1)[0] == "ssl" and routes.get(p) == "uid"
        ]
        if not ssl_paths:
            logger.warning(
                "x509 log present but no ssl.log found; certificates will be "
                "labeled (empty)"
            )
        for ssl_path in ssl_paths:
            with open(ssl_path, encoding="utf-8") as fh:
                reader = ZeekLogReader(fh, str(ssl_path))
                accumulate_cert_labels(reader.header, reader.rows(), index, cert_map)

    for path in candidates:
        route = routes[path]
        out_path = out_dir / (path.name[: -len(".log")] + ".labeled.log")
        rows = 0
        labeled = 0
        with open(path, encoding="utf-8") as src, open(
            out_path, "w", encoding="utf-8"
        ) as dst:
            reader = ZeekLogReader(src, str(path))
            header = reader.header
            writer = ZeekLogWriter(dst, header, reader.format)
            if route == "none":
                logger.warning(
                    "%s has no uid linkage; passing rows through as (empty)",
                    path.name,
                )
            id_field = None
            if route == "x509":
                for name in X509_ID_FIELDS:
                    if name in header.fields:
                        id_field = name
                        break
            for row in reader.rows():
                if route == "uid":
                    pair = lookup_row(row, header, index)
                elif route == "files":
                    pair = files_row_labels(row, header, index)
                elif route == "x509" and id_field is not None:
                    fid = row_field(row, header, id_field)
                    pair = cert_map.get(fid, EMPTY_PAIR) if fid else EMPTY_PAIR
                else:
                    pair = EMPTY_PAIR
                writer.write_row(row, pair[0], pair[1])
                rows += 1
                if pair != EMPTY_PAIR:
                    labeled += 1
            writer.finish(reader.trailer)
        note = {"uid": "", "files": " (via conn_uids)", "x509": " (via ssl.log)"}.get(
            route, " (no uid field)"
        )
        print(
            f"{path.name}: {rows} rows, {labeled} labeled, "
            f"{rows - labeled} (empty){note} -> {out_path.name}"
        )
    print(f"index: {len(index)} uids")
    return 0


def _load_flows(conn_path: Path) -> list[LabeledFlow]:
    with open(conn_path, encoding="utf-8") as fh:
        table = read_log(fh, str(conn_path))
    header = table.header
    if header.index_of(LABEL_FIELDS[0]) is None:
        raise UsageError(
            f"{conn_path} has no label column; run 'label' before 'eval'"
        )
    flows: list[LabeledFlow] = []
    skipped = 0
    for row in table.iter_rows():
        uid = row_field(row, header, "uid")
        ts = row_field(row, header, "ts")
        src = row_field(row, header, "id.orig_h")
        label = row_field(row, header, LABEL_FIELDS[0])
        if uid is None or ts is None or src is None:
            skipped += 1
            continue
        try:
            flows.append(
                LabeledFlow(
                    uid=uid,
                    start=float(ts),
                    src_ip=ipaddress.ip_address(src),
                    label=label if label is not None else EMPTY_PAIR[0],
                )
            )
        except ValueError:
            skipped += 1
    if skipped:
        logger.warning(
            "%d rows skipped during evaluation (missing uid, ts or source IP)",
            skipped,
        )
    return flows


def cmd_eval(ns: argparse.Namespace) -> int:
    flows = _load_flows(Path(ns.conn_labeled))
    with open(ns.detections, encoding="utf-8") as fh:
        detections = read_detections(fh, str(ns.detections))
    check_detection_times(detections, flows)

    evidence: set[str] = set()
    for det in detections:
        evidence.update(det.evidence)

    cutoff = ns.cutoff
    counts = flow_confusion(flows, evidence, cutoff)
    flow_report = compute_metrics(counts)
    in_scope = [f for f in flows if cutoff is None or f.start <= cutoff]
    unknown_excluded = sum(1 for f in in_scope if f.label == UNKNOWN)
    unlabeled = sum(1 for f in in_scope if f.label == EMPTY_PAIR[0])
    malicious = sum(1 for f in in_scope if f.label == MALICIOUS)

    timelines = ip_detection_timeline(flows, detections, ns.window, ns.threshold)
    ip_counts = timeline_confusion(timelines)
    ip_report = compute_metrics(ip_counts)

    if ns.json:
        payload = {
            "parameters": {
                "window": ns.window,
                "threshold": ns.threshold,
                "cutoff": cutoff,
            },
            "flow": {
                "flows": len(in_scope),
                "malicious": malicious,
                "unknown_excluded": unknown_excluded,
                "unlabeled_negative": unlabeled,
                "counts": vars(flow_report.counts),
                "metrics": {
                    "fpr": flow_report.fpr,
                    "tpr": flow_report.tpr,
                    "accuracy": flow_report.accuracy,
                    "f1": flow_report.f1,
                },
            },
            "ip": {
                "counts": vars(ip_report.counts),
                "metrics": {
                    "fpr": ip_report.fpr,
                    "tpr": ip_report.tpr,
                    "accuracy": ip_report.accuracy,
                    "f1": ip_report.f1,
                },
                "timelines": {
                    str(ip): [
                        {
                            "window_start": s.window_start,
                            "truth": s.truth,
                            "predicted": s.predicted,
                            "status": s.status,
                        }
                        for s in statuses
                    ]
                    for ip, statuses in timelines.items()
                },
            },
        }
        print(json.dumps(payload, indent=2))
        return 0

    print("flow-level evaluation")
    print(
        f"  flows: {len(in_scope)} (malicious {malicious}, "
        f"unknown excluded {unknown_excluded}, unlabeled {unlabeled})"
    )
    c = flow_report.counts
    print(f"  TP {c.tp}  FP {c.fp}  FN {c.fn}  TN {c.tn}")
    print(
        f"  FPR {_pct(flow_report.fpr)}  TPR {_pct(flow_report.tpr)}  "
        f"Accuracy {_pct(flow_report.accuracy)}  F1 {_pct(flow_report.f1)}"
    )
    print(
        f"ip-level evaluation (window {ns.window:g}s, threshold {ns.threshold})"
    )
    for ip, statuses in timelines.items():
        marks = " ".join(s.status for s in statuses)
        print(f"  {ip}: {marks}")
    c = ip_report.counts
    print(f"  TP {c.tp}  FP {c.fp}  FN {c.fn}  TN {c.tn}")
    print(
        f"  FPR {_pct(ip_report.fpr)}  TPR {_pct(ip_report.tpr)}  "
        f"Accuracy {_pct(ip_report.accuracy)}  F1 {_pct(ip_report.f1)}"
    )
    return 0


def cmd_validate_config(ns: argparse.Namespace) -> int:
    text, digest = _read_config(Path(ns.config))
    spec, ruleset = load_config(text)
    print(f"config OK ({len(ruleset)} rules)")
    for lvl in spec.levels:
        kind = "extensible" if lvl.extensible else "fixed"
        print(f"  {lvl.name} ({kind}): {len(lvl.items)} items")
    print(f"config sha256: {digest}")
    return 0


def cmd_show_ontology(ns: argparse.Namespace) -> int:
    if ns.config:
        text, _ = _read_config(Path(ns.config))
        spec = load_ontology(text)
    else:
        spec = builtin_ontology()
    if ns.json:
        payload = {
            lvl.name: {
                "mandatory": lvl.mandatory,
                "extensible": lvl.extensible,
                "items": list(lvl.items),
            }
            for lvl in spec.levels
        }
        print(json.dumps(payload, indent=2))
        return 0
    for lvl in spec.levels:
        flags = []
        if lvl.mandatory:
            flags.append("mandatory")
        flags.append("extensible" if lvl.extensible else "fixed")
        items = ", ".join(lvl.items) if lvl.items else "(none)"
        print(f"{lvl.name} [{'/'.join(flags)}]: {items}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="zeeklabel",
        description="Label Zeek conn.log flows from a rule config, propagate "
        "the labels to the other Zeek logs, and evaluate detections "
        "against them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("label", help="label a conn.log with a rule config")
    p.add_argument("conn", help="conn.log to label (TSV or JSON lines)")
    p.add_argument("--config", required=True, help="rule configuration file")
    p.add_argument("--output", help="output path (default: adds .labeled)")
    p.set_defaults(func=cmd_label)

    p = sub.add_parser(
        "propagate", help="copy conn.log labels onto the other logs by uid"
    )
    p.add_argument("conn_labeled", help="labeled conn.log")
    p.add_argument("log_dir", help="directory holding the other Zeek logs")
    p.add_argument("--output", help="output directory (default: log_dir)")
    p.set_defaults(func=cmd_propagate)

    p = sub.add_parser("eval", help="score detections against flow labels")
    p.add_argument("conn_labeled", help="labeled conn.log (ground truth)")
    p.add_argument("detections", help="detections as JSON lines")
    p.add_argument(
        "--window", type=float, default=3600.0, help="window seconds (default 3600)"
    )
    p.add_argument(
        "--threshold",
        type=int,
        default=1,
        help="minimum evidence flows for a detection to count (default 1)",
    )
    p.add_argument(
        "--cutoff", type=float, default=None, help="only score flows starting at or before this epoch time"
    )
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate-config", help="parse and check a config file")
    p.add_argument("--config", required=True, help="rule configuration file")
    p.set_defaults(func=cmd_validate_config)

    p = sub.add_parser("show-ontology", help="print the label vocabulary")
    p.add_argument("--config", help="config file with ontology additions")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_show_ontology)
    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        level=logging.INFO, format="%(levelname)s: %(message)s", stream=sys.stderr
    )
    ns = build_parser().parse_args(argv)
    try:
        return ns.func(ns)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (LogFormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
