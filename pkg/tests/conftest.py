from __future__ import annotations

import io
from pathlib import Path

import pytest

from zeeklabel.zeekio import read_log

DATA_DIR = Path(__file__).parent / "data"

CONN_FIELDS = [
    "ts", "uid", "id.orig_h", "id.orig_p", "id.resp_h", "id.resp_p",
    "proto", "service", "duration", "orig_bytes", "resp_bytes", "conn_state",
    "local_orig", "local_resp", "missed_bytes", "history",
    "orig_pkts", "orig_ip_bytes", "resp_pkts", "resp_ip_bytes", "tunnel_parents",
]
CONN_TYPES = [
    "time", "string", "addr", "port", "addr", "port",
    "enum", "string", "interval", "count", "count", "string",
    "bool", "bool", "count", "string",
    "count", "count", "count", "count", "set[string]",
]


def zeek_tsv(path: str, fields: list[str], types: list[str], rows: list[list[str]],
             close: bool = True) -> str:
    lines = [
        "#separator \\x09",
        "#set_separator\t,",
        "#empty_field\t(empty)",
        "#unset_field\t-",
        f"#path\t{path}",
        "#open\t2023-01-24-13-00-00",
        "#fields\t" + "\t".join(fields),
        "#types\t" + "\t".join(types),
    ]
    for row in rows:
        assert len(row) == len(fields)
        lines.append("\t".join(str(c) for c in row))
    if close:
        lines.append("#close\t2023-01-24-14-00-00")
    return "\n".join(lines) + "\n"


def conn_row(**overrides) -> list[str]:
    defaults = {
        "ts": "1674567890.500000",
        "uid": "CDEFAULTuid",
        "id.orig_h": "10.0.0.1",
        "id.orig_p": "40000",
        "id.resp_h": "203.0.113.10",
        "id.resp_p": "443",
        "proto": "tcp",
        "service": "ssl",
        "duration": "1.500000",
        "orig_bytes": "900",
        "resp_bytes": "4100",
        "conn_state": "SF",
        "local_orig": "-",
        "local_resp": "-",
        "missed_bytes": "0",
        "history": "ShADadfF",
        "orig_pkts": "12",
        "orig_ip_bytes": "1860",
        "resp_pkts": "10",
        "resp_ip_bytes": "4900",
        "tunnel_parents": "-",
    }
    defaults.update(overrides)
    return [defaults[name] for name in CONN_FIELDS]


def conn_log_text(rows: list[list[str]]) -> str:
    return zeek_tsv("conn", CONN_FIELDS, CONN_TYPES, rows)


def table_from_text(text: str, source: str = "<test>"):
    return read_log(io.StringIO(text), source)


@pytest.fixture
def data_dir() -> Path:
    return DATA_DIR
