"""Carrying conn.log labels to the other Zeek logs.

Most logs share conn.log's uid, so their rows take the labels of the flow
they belong to. Two logs need indirection: files.log points at its flows
through the ``conn_uids`` set, and x509.log is reachable only through
ssl.log (certificate id -> ssl cert chain -> ssl uid). When one row has
several parent flows the labels merge by severity: Malicious beats Unknown
beats Benign beats ``(empty)``, ties keeping the first candidate seen.
"""

from __future__ import annotations

from typing import Iterable

from .errors import LogFormatError
from .labeler import EMPTY_PAIR, LabelPair, UidIndex
from .zeekio import Row, ZeekHeader, ZeekLogTable, row_field, row_set_field

_RANK = {"Malicious": 3, "Unknown": 2, "Benign": 1}

# accepted spellings of the join fields across Zeek versions
SSL_CHAIN_FIELDS = ("cert_chain_fuids", "cert_chain_fps")
X509_ID_FIELDS = ("id", "fingerprint")


def _rank(pair: LabelPair | None) -> int:
    if pair is None:
        return 0
    return _RANK.get(pair[0], 0)


def merge_labels(candidates: list[LabelPair | None]) -> LabelPair:
    """Pick the most severe candidate pair; None entries count as (empty)."""
    best: LabelPair | None = None
    best_rank = -1
    for candidate in candidates:
        rank = _rank(candidate)
        if rank > best_rank:
            best = candidate
            best_rank = rank
    if best is None:
        return EMPTY_PAIR
    return best


def lookup_row(row: Row, header: ZeekHeader, index: UidIndex) -> LabelPair:
    """Labels for one uid-bearing row (uid scalar or uids set)."""
    uid = row_field(row, header, "uid")
    if uid is not None:
        return index.get(uid) or EMPTY_PAIR
    uids = row_set_field(row, header, "uids")
    if uids:
        return merge_labels([index.get(u) for u in uids])
    return EMPTY_PAIR


def propagate_log(table: ZeekLogTable, index: UidIndex) -> list[LabelPair]:
    """Label any log that references flows by uid (or a uids set)."""
    header = table.header
    if "uid" not in header.fields and "uids" not in header.fields:
        raise LogFormatError(
            f"log '{header.path or '?'}' has no uid field; use the files/x509 "
            f"paths or pass it through unlabeled"
        )
    return [lookup_row(row, header, index) for row in table.iter_rows()]


def files_row_labels(row: Row, header: ZeekHeader, index: UidIndex) -> LabelPair:
    uids = row_set_field(row, header, "conn_uids")
    if not uids:
        return EMPTY_PAIR
    return merge_labels([index.get(u) for u in uids])


def propagate_files_log(
    table: ZeekLogTable, index: UidIndex
) -> tuple[list[LabelPair], dict[str, LabelPair]]:
    """Label files.log rows through conn_uids.

    Also returns {fuid: labels} so callers can resolve file ids later.
    """
    header = table.header
    if "conn_uids" not in header.fields:
        raise LogFormatError("files log has no conn_uids field")
    assignments: list[LabelPair] = []
    by_fuid: dict[str, LabelPair] = {}
    for row in table.iter_rows():
        pair = files_row_labels(row, header, index)
        assignments.append(pair)
        fuid = row_field(row, header, "fuid")
        if fuid is not None and fuid not in by_fuid:
            by_fuid[fuid] = pair
    return assignments, by_fuid


def _field_alias(header: ZeekHeader, names: tuple[str, ...]) -> str | None:
    for name in names:
        if name in header.fields:
            return name
    return None


def accumulate_cert_labels(
    header: ZeekHeader,
    rows: Iterable[Row],
    index: UidIndex,
    mapping: dict[str, LabelPair],
) -> None:
    """Fold ssl rows into a certificate-id -> merged-labels mapping."""
    chain_field = _field_alias(header, SSL_CHAIN_FIELDS)
    if chain_field is None:
        raise LogFormatError(
            f"ssl log has no certificate chain field "
            f"({' or '.join(SSL_CHAIN_FIELDS)})"
        )
    for row in rows:
        uid = row_field(row, header, "uid")
        pair = (index.get(uid) if uid is not None else None) or EMPTY_PAIR
        for fid in row_set_field(row, header, chain_field):
            current = mapping.get(fid)
            if current is None:
                mapping[fid] = pair
            elif _rank(pair) > _rank(current):
                mapping[fid] = pair


def cert_label_map(ssl_table: ZeekLogTable, index: UidIndex) -> dict[str, LabelPair]:
    """certificate id -> merged labels of every ssl row whose chain holds it."""
    mapping: dict[str, LabelPair] = {}
    accumulate_cert_labels(ssl_table.header, ssl_table.iter_rows(), index, mapping)
    return mapping


def propagate_x509(
    x509_table: ZeekLogTable, ssl_table: ZeekLogTable, index: UidIndex
) -> list[LabelPair]:
    """Label x509.log rows through the ssl.log rows that presented them.

    Exactly two hops: certificate id into ssl's chain, ssl's uid into the
    index. Certificates no ssl row references come out ``(empty)``.
    """
    id_field = _field_alias(x509_table.header, X509_ID_FIELDS)
    if id_field is None:
        raise LogFormatError(
            f"x509 log has no certificate id field "
            f"({' or '.join(X509_ID_FIELDS)})"
        )
    mapping = cert_label_map(ssl_table, index)
    assignments: list[LabelPair] = []
    for row in x509_table.iter_rows():
        fid = row_field(row, x509_table.header, id_field)
        pair = mapping.get(fid) if fid is not None else None
        assignments.append(pair or EMPTY_PAIR)
    return assignments
