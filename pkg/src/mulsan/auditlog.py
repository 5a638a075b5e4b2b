"""Audit-log entries as block messages.

An entry has one block per schema field, ``name=value``, in schema order.
The redaction policy names the fields a sanitizer may overwrite; redacting
writes a visible tombstone so readers can tell a segment was removed.

Schema config is a JSON object::

    {"fields": ["timestamp", "actor", "action", "resource", "detail"],
     "redactable": ["detail"]}

Log files are JSON lines, one object per entry with string values.
"""

from __future__ import annotations

import json
from collections.abc import Iterable, Mapping
from dataclasses import dataclass
from pathlib import Path

from .errors import SchemaViolation, UnknownField
from .sss import AdmissibleDescription, BlockMessage, Modification

SEPARATOR = b"="
DEFAULT_REPLACEMENT = b"[REDACTED]"


@dataclass(frozen=True)
class Schema:
    names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "names", tuple(self.names))
        if not self.names:
            raise SchemaViolation("schema must declare at least one field")
        if len(set(self.names)) != len(self.names):
            raise SchemaViolation("schema field names must be unique")
        for name in self.names:
            if "=" in name:
                raise SchemaViolation(f"field name {name!r} contains '='")

    def index(self, name: str) -> int:
        try:
            return self.names.index(name)
        except ValueError:
            raise UnknownField(f"field {name!r} is not in the schema") from None


@dataclass(frozen=True)
class RedactionPolicy:
    redactable_names: frozenset[str]

    def __post_init__(self):
        object.__setattr__(self, "redactable_names", frozenset(self.redactable_names))


@dataclass(frozen=True)
class AuditEntry:
    fields: tuple[tuple[bytes, bytes], ...]

    @classmethod
    def from_mapping(cls, schema: Schema, values: Mapping[str, str]) -> AuditEntry:
        """Order ``values`` by the schema; every schema field must be present exactly once."""
        unknown = set(values) - set(schema.names)
        if unknown:
            raise SchemaViolation(f"unknown fields: {sorted(unknown)}")
        missing = [n for n in schema.names if n not in values]
        if missing:
            raise SchemaViolation(f"missing fields: {missing}")
        pairs = []
        for name in schema.names:
            value = values[name]
            if not isinstance(value, str):
                raise SchemaViolation(f"field {name!r} must be a string, got {type(value).__name__}")
            pairs.append((name.encode(), value.encode()))
        return cls(tuple(pairs))

    def as_dict(self) -> dict[str, str]:
        return {k.decode(): v.decode() for k, v in self.fields}


def canonicalize_entry(entry: AuditEntry, schema: Schema | None = None) -> BlockMessage:
    names = [name for name, _ in entry.fields]
    if len(set(names)) != len(names):
        raise SchemaViolation("duplicate field names in entry")
    if schema is not None and tuple(n.decode() for n in names) != schema.names:
        raise SchemaViolation("entry fields do not match the schema order")
    return BlockMessage(tuple(name + SEPARATOR + value for name, value in entry.fields))


def parse_entry(msg: BlockMessage, schema: Schema) -> AuditEntry:
    """Inverse of :func:`canonicalize_entry`."""
    if msg.count != len(schema.names):
        raise SchemaViolation(f"expected {len(schema.names)} blocks, got {msg.count}")
    pairs = []
    for name, block in zip(schema.names, msg.blocks):
        prefix = name.encode() + SEPARATOR
        if not block.startswith(prefix):
            raise SchemaViolation(f"block does not start with {prefix!r}")
        pairs.append((name.encode(), block[len(prefix):]))
    return AuditEntry(tuple(pairs))


def policy_to_ad(policy: RedactionPolicy, schema: Schema) -> AdmissibleDescription:
    return AdmissibleDescription(len(schema.names), frozenset(schema.index(n) for n in policy.redactable_names))


def redact(entry: AuditEntry, names: Iterable[str], schema: Schema,
           replacement: bytes = DEFAULT_REPLACEMENT) -> Modification:
    reps = {}
    for name in names:
        idx = schema.index(name)
        reps[idx] = name.encode() + SEPARATOR + replacement
    if len(entry.fields) != len(schema.names):
        raise SchemaViolation("entry does not match the schema")
    return Modification(reps)


def load_config(path: str | Path) -> tuple[Schema, RedactionPolicy]:
    try:
        raw = json.loads(Path(path).read_text())
        fields = raw["fields"]
        redactable = raw.get("redactable", [])
    except (ValueError, KeyError, TypeError) as exc:
        raise SchemaViolation(f"bad schema config {path}: {exc}") from None
    if not (isinstance(fields, list) and all(isinstance(f, str) for f in fields)):
        raise SchemaViolation("'fields' must be a list of strings")
    if not (isinstance(redactable, list) and all(isinstance(f, str) for f in redactable)):
        raise SchemaViolation("'redactable' must be a list of strings")
    schema = Schema(tuple(fields))
    for name in redactable:
        schema.index(name)
    return schema, RedactionPolicy(frozenset(redactable))


def read_jsonl(path: str | Path, schema: Schema) -> list[AuditEntry]:
    entries = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except ValueError as exc:
            raise SchemaViolation(f"line {lineno}: invalid JSON ({exc})") from None
        if not isinstance(obj, dict):
            raise SchemaViolation(f"line {lineno}: expected a JSON object")
        try:
            entries.append(AuditEntry.from_mapping(schema, obj))
        except SchemaViolation as exc:
            raise SchemaViolation(f"line {lineno}: {exc}") from None
    return entries


def write_jsonl(path: str | Path, entries: Iterable[AuditEntry]) -> None:
    lines = [json.dumps(e.as_dict(), ensure_ascii=False) for e in entries]
    Path(path).write_text("".join(line + "\n" for line in lines))
