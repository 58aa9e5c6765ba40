"""Reading and writing Zeek logs without disturbing them.

Both on-disk shapes are supported: classic tab-separated logs with their
``#``-directive header block, and JSON-lines logs (one object per line).
TSV is treated as the canonical form; headers and data cells are kept
verbatim so a labeled file is byte-identical to its input apart from the
two appended columns. JSON-lines rows are re-serialized from the original
objects with the two label keys added.

The module also owns the rule-facing view of a conn.log record: the mapping
from rule columns (srcIP, Bytes, Date, ...) onto Zeek's field names, with
typed access and an explicit unset notion.
"""

from __future__ import annotations

import datetime
import ipaddress
import json
from dataclasses import dataclass, field
from functools import lru_cache
from typing import IO, Iterator

from .errors import LogFormatError, UsageError

UNSET_DEFAULT = "-"
EMPTY_DEFAULT = "(empty)"
LABEL_FIELDS = ("label", "detailed_label")

_UTC = datetime.timezone.utc


@dataclass
class ZeekHeader:
    """Parsed header metadata plus the raw directive lines for round-trips."""

    separator: str = "\t"
    set_separator: str = ","
    empty_field: str = EMPTY_DEFAULT
    unset_field: str = UNSET_DEFAULT
    path: str | None = None
    fields: list[str] = field(default_factory=list)
    types: list[str] | None = None
    preamble: list[str] = field(default_factory=list)

    def index_of(self, name: str) -> int | None:
        try:
            return self.fields.index(name)
        except ValueError:
            return None


@dataclass(slots=True)
class Row:
    """One data record: TSV rows carry cells+raw line, JSON rows the object."""

    cells: list[str] | None
    raw: str | None
    obj: dict | None


@dataclass
class ZeekLogTable:
    """A whole log held in memory; records are lists of verbatim string cells."""

    header: ZeekHeader
    records: list[list[str]]
    raws: list[str] | None
    objects: list[dict] | None
    trailer: list[str]
    format: str  # "tsv" | "json"

    def __len__(self) -> int:
        return len(self.records)

    def iter_rows(self) -> Iterator[Row]:
        for i, cells in enumerate(self.records):
            yield Row(
                cells,
                self.raws[i] if self.raws is not None else None,
                self.objects[i] if self.objects is not None else None,
            )


def _unescape_separator(text: str) -> str:
    # the #separator directive spells the byte as an escape, e.g. \x09
    return text.encode("ascii").decode("unicode_escape")


def _json_scalar(value: object) -> str:
    if isinstance(value, bool):
        return "T" if value else "F"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _json_cell(value: object, header: ZeekHeader) -> str:
    if value is None:
        return header.unset_field
    if isinstance(value, list):
        if not value:
            return header.empty_field
        return header.set_separator.join(_json_scalar(v) for v in value)
    return _json_scalar(value)


class ZeekLogReader:
    """Streaming reader; header is available right after construction.

    For JSON-lines input the field list starts from the first object's keys
    and grows as later objects introduce new ones.
    """

    def __init__(self, stream: IO[str], source: str = "<log>") -> None:
        self._stream = stream
        self.source = source
        self.header = ZeekHeader()
        self.trailer: list[str] = []
        self.format = ""
        self._pending: str | None = None
        self._lineno = 0
        self._rowno = 0
        self._read_preamble()

    def _next_line(self) -> str | None:
        line = self._stream.readline()
        if line == "":
            return None
        self._lineno += 1
        return line.rstrip("\n")

    def _read_preamble(self) -> None:
        line = self._next_line()
        while line is not None and not line.strip():
            line = self._next_line()
        if line is None:
            raise LogFormatError(f"{self.source}: empty input")
        if line.lstrip().startswith("{"):
            self.format = "json"
            self._pending = line
            self._ingest_json_keys(self._parse_json(line))
            return
        if not line.startswith("#separator"):
            raise LogFormatError(
                f"{self.source}: not a Zeek log (expected '#separator' or a "
                f"JSON object on the first line)"
            )
        self.format = "tsv"
        h = self.header
        while line is not None and line.startswith("#"):
            h.preamble.append(line)
            if line.startswith("#separator "):
                h.separator = _unescape_separator(line[len("#separator ") :])
            else:
                parts = line.split(h.separator)
                name = parts[0]
                if name == "#set_separator" and len(parts) > 1:
                    h.set_separator = parts[1]
                elif name == "#empty_field" and len(parts) > 1:
                    h.empty_field = parts[1]
                elif name == "#unset_field" and len(parts) > 1:
                    h.unset_field = parts[1]
                elif name == "#path" and len(parts) > 1:
                    h.path = parts[1]
                elif name == "#fields":
                    h.fields = parts[1:]
                elif name == "#types":
                    h.types = parts[1:]
            line = self._next_line()
        if not h.fields:
            raise LogFormatError(f"{self.source}: missing #fields line")
        if h.types is not None and len(h.types) != len(h.fields):
            raise LogFormatError(
                f"{self.source}: #fields and #types disagree "
                f"({len(h.fields)} vs {len(h.types)})"
            )
        self._pending = line

    def _parse_json(self, line: str) -> dict:
        try:
            obj = json.loads(line)
        except ValueError:
            raise LogFormatError(
                f"{self.source}: line {self._lineno}: invalid JSON"
            ) from None
        if not isinstance(obj, dict):
            raise LogFormatError(
                f"{self.source}: line {self._lineno}: expected a JSON object"
            )
        return obj

    def _ingest_json_keys(self, obj: dict) -> None:
        known = set(self.header.fields)
        for key in obj:
            if key not in known:
                self.header.fields.append(key)

    def rows(self) -> Iterator[Row]:
        if self.format == "tsv":
            yield from self._tsv_rows()
        else:
            yield from self._json_rows()

    def _tsv_rows(self) -> Iterator[Row]:
        sep = self.header.separator
        n_fields = len(self.header.fields)
        line = self._pending
        self._pending = None
        while line is not None:
            if line.startswith("#"):
                # footer directives (#close); everything after is kept verbatim
                self.trailer.append(line)
                line = self._next_line()
                while line is not None:
                    self.trailer.append(line)
                    line = self._next_line()
                return
            cells = line.split(sep)
            self._rowno += 1
            if len(cells) != n_fields:
                raise LogFormatError(
                    f"{self.source}: row {self._rowno}: expected {n_fields} "
                    f"fields, got {len(cells)}"
                )
            yield Row(cells, line, None)
            line = self._next_line()

    def _json_rows(self) -> Iterator[Row]:
        line = self._pending
        self._pending = None
        first = True
        while line is not None:
            if line.strip():
                obj = self._parse_json(line)
                if not first:
                    self._ingest_json_keys(obj)
                first = False
                self._rowno += 1
                yield Row(None, line, obj)
            line = self._next_line()


def read_log(stream: IO[str], source: str = "<log>") -> ZeekLogTable:
    """Read a whole log into a table.

    JSON-lines input gets a synthetic header whose fields are the union of
    keys in first-appearance order; missing keys surface as the unset marker.
    """
    reader = ZeekLogReader(stream, source)
    rows = list(reader.rows())
    header = reader.header
    if reader.format == "json":
        records = [
            [
                _json_cell(row.obj.get(name), header) if name in row.obj else header.unset_field  # type: ignore[union-attr]
                for name in header.fields
            ]
            for row in rows
        ]
        objects = [row.obj for row in rows]  # type: ignore[misc]
        raws = None
    else:
        records = [row.cells for row in rows]  # type: ignore[misc]
        objects = None
        raws = [row.raw for row in rows]  # type: ignore[misc]
    return ZeekLogTable(header, records, raws, objects, reader.trailer, reader.format)


class ZeekLogWriter:
    """Streaming writer that appends label columns while copying everything else."""

    def __init__(
        self,
        stream: IO[str],
        header: ZeekHeader,
        fmt: str,
        label_fields: tuple[str, str] = LABEL_FIELDS,
    ) -> None:
        self._stream = stream
        self._header = header
        self._format = fmt
        self._label_fields = label_fields
        if fmt == "tsv":
            self._write_preamble()

    def _write_preamble(self) -> None:
        h = self._header
        sep = h.separator
        lines = h.preamble or self._synthesized_preamble()
        for line in lines:
            if line.startswith("#fields" + sep) or line == "#fields":
                line = line + sep + sep.join(self._label_fields)
            elif line.startswith("#types" + sep) or line == "#types":
                line = line + sep + sep.join(["string"] * len(self._label_fields))
            self._stream.write(line + "\n")

    def _synthesized_preamble(self) -> list[str]:
        # used only for programmatically built tables (no original header text)
        h = self._header
        sep = h.separator
        out = [
            "#separator " + "".join(f"\\x{ord(c):02x}" for c in sep),
            "#set_separator" + sep + h.set_separator,
            "#empty_field" + sep + h.empty_field,
            "#unset_field" + sep + h.unset_field,
        ]
        if h.path is not None:
            out.append("#path" + sep + h.path)
        out.append("#fields" + sep + sep.join(h.fields))
        if h.types is not None:
            out.append("#types" + sep + sep.join(h.types))
        return out

    def write_row(self, row: Row, label: str, detailed: str) -> None:
        if self._format == "tsv":
            sep = self._header.separator
            raw = row.raw if row.raw is not None else sep.join(row.cells or [])
            self._stream.write(raw + sep + label + sep + detailed + "\n")
        else:
            obj = dict(row.obj or {})
            obj[self._label_fields[0]] = label
            obj[self._label_fields[1]] = detailed
            self._stream.write(
                json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n"
            )

    def finish(self, trailer: list[str] | None = None) -> None:
        for line in trailer or []:
            self._stream.write(line + "\n")


def write_log(
    table: ZeekLogTable, labels: list[tuple[str, str]], stream: IO[str]
) -> None:
    """Write a table with one (label, detailed_label) pair per record."""
    if len(labels) != len(table.records):
        raise UsageError(
            f"{len(labels)} label pairs for {len(table.records)} records"
        )
    writer = ZeekLogWriter(stream, table.header, table.format)
    for row, (label, detailed) in zip(table.iter_rows(), labels):
        writer.write_row(row, label, detailed)
    writer.finish(table.trailer)


def row_field(row: Row, header: ZeekHeader, name: str) -> str | None:
    """A single field as verbatim text, or None when unset/absent."""
    if row.obj is not None:
        value = row.obj.get(name)
        if value is None:
            return None
        text = _json_cell(value, header)
    else:
        idx = header.index_of(name)
        if idx is None:
            return None
        text = row.cells[idx]  # type: ignore[index]
    if text == header.unset_field or text == header.empty_field or text == "":
        return None
    return text


def row_set_field(row: Row, header: ZeekHeader, name: str) -> list[str]:
    """A set/vector field as a list of member strings (empty when unset)."""
    if row.obj is not None:
        value = row.obj.get(name)
        if value is None:
            return []
        if isinstance(value, list):
            return [_json_scalar(v) for v in value]
        text = _json_scalar(value)
        if text in (header.unset_field, header.empty_field, ""):
            return []
        return [text]
    cell = row_field(row, header, name)
    if cell is None:
        return []
    return cell.split(header.set_separator)


@lru_cache(maxsize=65536)
def _parse_ip(text: str):
    try:
        return ipaddress.ip_address(text)
    except ValueError:
        return None


def _to_float(value) -> float | None:
    if value is None:
        return None
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(value)
    except ValueError:
        return None


def _to_int(value) -> int | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return None
    if isinstance(value, int):
        return value
    try:
        return int(float(value))
    except (ValueError, TypeError):
        return None


class FlowView:
    """Typed, rule-facing accessors over one conn.log record.

    Unset cells (and cells that fail to parse as their expected type) are
    None; the additive Packets/Bytes views treat unset halves as 0 so a
    partially logged flow still has a defined volume.
    """

    __slots__ = ()

    def _cell(self, name: str):
        raise NotImplementedError

    @property
    def uid(self) -> str | None:
        value = self._cell("uid")
        return None if value is None else str(value)

    @property
    def start(self) -> float | None:
        return _to_float(self._cell("ts"))

    @property
    def date(self) -> datetime.date | None:
        ts = self.start
        if ts is None:
            return None
        return datetime.datetime.fromtimestamp(ts, tz=_UTC).date()

    @property
    def duration(self) -> float | None:
        return _to_float(self._cell("duration"))

    @property
    def proto(self) -> str | None:
        value = self._cell("proto")
        return None if value is None else str(value)

    @property
    def state(self) -> str | None:
        value = self._cell("conn_state")
        return None if value is None else str(value)

    @property
    def tos(self) -> int | None:
        return _to_int(self._cell("tos"))

    @property
    def src_ip(self):
        value = self._cell("id.orig_h")
        return None if value is None else _parse_ip(str(value))

    @property
    def dst_ip(self):
        value = self._cell("id.resp_h")
        return None if value is None else _parse_ip(str(value))

    @property
    def src_port(self) -> int | None:
        return _to_int(self._cell("id.orig_p"))

    @property
    def dst_port(self) -> int | None:
        return _to_int(self._cell("id.resp_p"))

    @property
    def packets(self) -> int:
        return (_to_int(self._cell("orig_pkts")) or 0) + (
            _to_int(self._cell("resp_pkts")) or 0
        )

    @property
    def bytes(self) -> int:
        return (_to_int(self._cell("orig_bytes")) or 0) + (
            _to_int(self._cell("resp_bytes")) or 0
        )

    def value(self, column: str):
        """Look up a rule column's typed value; None means unset."""
        return _COLUMN_GETTERS[column](self)


_COLUMN_GETTERS = {
    "Date": FlowView.date.fget,
    "start": FlowView.start.fget,
    "Duration": FlowView.duration.fget,
    "Proto": FlowView.proto.fget,
    "srcIP": FlowView.src_ip.fget,
    "srcPort": FlowView.src_port.fget,
    "dstIP": FlowView.dst_ip.fget,
    "dstPort": FlowView.dst_port.fget,
    "State": FlowView.state.fget,
    "Tos": FlowView.tos.fget,
    "Packets": FlowView.packets.fget,
    "Bytes": FlowView.bytes.fget,
}

_CONN_FIELDS = (
    "ts",
    "uid",
    "id.orig_h",
    "id.orig_p",
    "id.resp_h",
    "id.resp_p",
    "proto",
    "conn_state",
    "duration",
    "tos",
    "orig_pkts",
    "resp_pkts",
    "orig_bytes",
    "resp_bytes",
)


class _TsvFlowView(FlowView):
    __slots__ = ("_cells", "_schema")

    def __init__(self, cells: list[str], schema: "ConnSchema") -> None:
        self._cells = cells
        self._schema = schema

    def _cell(self, name: str):
        idx = self._schema.indices[name]
        if idx is None:
            return None
        value = self._cells[idx]
        if value in self._schema.null_cells:
            return None
        return value


class _JsonFlowView(FlowView):
    __slots__ = ("_obj", "_schema")

    def __init__(self, obj: dict, schema: "ConnSchema") -> None:
        self._obj = obj
        self._schema = schema

    def _cell(self, name: str):
        value = self._obj.get(name)
        if value is None:
            return None
        if isinstance(value, str) and value in self._schema.null_cells:
            return None
        return value


class ConnSchema:
    """Precomputed column lookup for viewing a table's rows as flows."""

    def __init__(self, header: ZeekHeader, fmt: str) -> None:
        if "uid" not in header.fields:
            raise LogFormatError("flow table has no uid field")
        self.format = fmt
        self.null_cells = frozenset({header.unset_field, header.empty_field, ""})
        self.indices = {name: header.index_of(name) for name in _CONN_FIELDS}

    def view(self, row: Row) -> FlowView:
        if row.obj is not None:
            return _JsonFlowView(row.obj, self)
        return _TsvFlowView(row.cells, self)  # type: ignore[arg-type]
