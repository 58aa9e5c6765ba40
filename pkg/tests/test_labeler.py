from __future__ import annotations

import io

import pytest

from conftest import conn_log_text, conn_row, table_from_text

from zeeklabel.errors import UsageError
from zeeklabel.labeler import (
    EMPTY_PAIR,
    build_uid_index,
    index_from_labeled_rows,
    label_conn,
    labels_of_table,
)
from zeeklabel.rules import load_config
from zeeklabel.zeekio import ZeekLogReader, write_log

TCP_OR_UDP = (
    "Malicious, (empty):\n    - Proto=tcp\n"
    "Benign, (empty):\n    - Proto=udp\n"
)


def test_label_conn_first_match_wins_over_later_rules():
    _, ruleset = load_config(
        "Benign, (empty):\n    - srcPort>=0\nMalicious, (empty):\n    - Proto=tcp\n"
    )
    table = table_from_text(conn_log_text([conn_row()]))
    assert label_conn(table, ruleset) == [("Benign", "(empty)")]


def test_label_conn_no_match_is_empty_pair():
    _, ruleset = load_config("Malicious, (empty):\n    - Proto=icmp\n")
    table = table_from_text(conn_log_text([conn_row(proto="tcp")]))
    assert label_conn(table, ruleset) == [EMPTY_PAIR]


def test_label_conn_empty_ruleset_labels_nothing():
    _, ruleset = load_config("")
    table = table_from_text(conn_log_text([conn_row(), conn_row(uid="C2")]))
    assert label_conn(table, ruleset) == [EMPTY_PAIR, EMPTY_PAIR]


def test_build_uid_index_maps_uids():
    _, ruleset = load_config(TCP_OR_UDP)
    table = table_from_text(
        conn_log_text(
            [conn_row(uid="Ctcp", proto="tcp"), conn_row(uid="Cudp", proto="udp")]
        )
    )
    pairs = label_conn(table, ruleset)
    index = build_uid_index(table, pairs)
    assert len(index) == 2
    assert index.get("Ctcp") == ("Malicious", "(empty)")
    assert index.get("Cudp") == ("Benign", "(empty)")
    assert index.get("Cabsent") is None
    assert "Ctcp" in index and "Cabsent" not in index


def test_build_uid_index_skips_unset_uids_with_warning(caplog):
    table = table_from_text(
        conn_log_text([conn_row(uid="-"), conn_row(uid="Cok")])
    )
    with caplog.at_level("WARNING"):
        index = build_uid_index(table, [EMPTY_PAIR, EMPTY_PAIR])
    assert len(index) == 1
    assert index.skipped_unset == 1
    assert "had no uid" in caplog.text


def test_build_uid_index_keeps_first_of_duplicates(caplog):
    table = table_from_text(
        conn_log_text([conn_row(uid="Cdup"), conn_row(uid="Cdup")])
    )
    with caplog.at_level("WARNING"):
        index = build_uid_index(
            table, [("Benign", "(empty)"), ("Malicious", "(empty)")]
        )
    assert index.get("Cdup") == ("Benign", "(empty)")
    assert index.duplicates == 1
    assert "duplicate uids" in caplog.text


def test_build_uid_index_rejects_length_mismatch():
    table = table_from_text(conn_log_text([conn_row()]))
    with pytest.raises(UsageError, match="0 label pairs for 1 records"):
        build_uid_index(table, [])


def _labeled_text(rows, pairs) -> str:
    table = table_from_text(conn_log_text(rows))
    out = io.StringIO()
    write_log(table, pairs, out)
    return out.getvalue()


def test_labels_of_table_reads_back_written_labels():
    text = _labeled_text([conn_row()], [("Malicious", "From_malicious")])
    table = table_from_text(text)
    assert labels_of_table(table) == [("Malicious", "From_malicious")]


def test_labels_of_table_requires_label_columns():
    table = table_from_text(conn_log_text([conn_row()]))
    with pytest.raises(UsageError, match="label it first"):
        labels_of_table(table)


def test_index_from_labeled_rows_streaming():
    text = _labeled_text(
        [conn_row(uid="Ca"), conn_row(uid="Cb", proto="udp")],
        [("Malicious", "From_malicious"), EMPTY_PAIR],
    )
    reader = ZeekLogReader(io.StringIO(text), "conn.labeled.log")
    index = index_from_labeled_rows(reader.header, reader.rows())
    assert index.get("Ca") == ("Malicious", "From_malicious")
    # the written (empty) marker reads back as the (empty) pair, not None
    assert index.get("Cb") == EMPTY_PAIR


def test_index_from_labeled_rows_requires_label_columns():
    reader = ZeekLogReader(io.StringIO(conn_log_text([conn_row()])), "conn.log")
    with pytest.raises(UsageError, match="run 'label' before 'propagate'"):
        index_from_labeled_rows(reader.header, reader.rows())
