"""Declarative task files: JSON documents describing defined tasks.

A task file is `{"version": 1, "tasks": [...]}` where each entry carries
name, template, return_schema, and optionally param_schemas, fewshot, tests,
codable, and target_language. Schemas are written in a small textual syntax
mirroring the type constructors:

    int  float  bool  str  void
    literal(123)  literal('yes')  literal(true)
    list(int)
    dict({'x': int, 'y': int})
    union(literal('yes'), literal('no'))
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping

from .codegen import TaskSpec
from .errors import TaskFileError
from .prompts import Example
from .template import parse as parse_template
from .types import (
    BOOL,
    FLOAT,
    INT,
    STR,
    VOID,
    Literal,
    ListOf,
    Record,
    TypeSchema,
    UnionOf,
    VoidType,
)

_PUNCT = set("(){}:,")


class _SchemaParser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def parse(self) -> TypeSchema | VoidType:
        schema = self._schema()
        self._skip_ws()
        if self.pos != len(self.text):
            self._fail(f"unexpected trailing text {self.text[self.pos:]!r}")
        return schema

    def _schema(self) -> TypeSchema | VoidType:
        head = self._ident()
        if head == "int":
            return INT
        if head == "float":
            return FLOAT
        if head == "bool":
            return BOOL
        if head == "str":
            return STR
        if head == "void":
            return VOID
        if head == "literal":
            self._expect("(")
            value = self._scalar()
            self._expect(")")
            return Literal(value)
        if head == "list":
            self._expect("(")
            element = self._require_schema(self._schema(), "list element")
            self._expect(")")
            return ListOf(element)
        if head == "dict":
            self._expect("(")
            self._expect("{")
            fields = []
            if not self._peek_is("}"):
                while True:
                    key = self._field_name()
                    self._expect(":")
                    fields.append((key, self._require_schema(self._schema(), f"field {key!r}")))
                    if not self._peek_is(","):
                        break
                    self._expect(",")
            self._expect("}")
            self._expect(")")
            return Record(tuple(fields))
        if head == "union":
            self._expect("(")
            members = [self._require_schema(self._schema(), "union member")]
            while self._peek_is(","):
                self._expect(",")
                members.append(self._require_schema(self._schema(), "union member"))
            self._expect(")")
            return UnionOf(tuple(members))
        self._fail(f"unknown type constructor {head!r}")

    def _require_schema(self, schema, where: str) -> TypeSchema:
        if isinstance(schema, VoidType):
            self._fail(f"void is not allowed as a {where}")
        return schema

    def _scalar(self):
        self._skip_ws()
        if self.pos >= len(self.text):
            self._fail("expected a literal value")
        char = self.text[self.pos]
        if char in "'\"":
            return self._string(char)
        if char.isdigit() or char == "-":
            return self._number()
        word = self._ident()
        if word == "true":
            return True
        if word == "false":
            return False
        self._fail(f"expected a scalar literal, got {word!r}")

    def _string(self, quote: str) -> str:
        end = self.pos + 1
        out = []
        while end < len(self.text):
            char = self.text[end]
            if char == "\\" and end + 1 < len(self.text):
                out.append(self.text[end + 1])
                end += 2
                continue
            if char == quote:
                self.pos = end + 1
                return "".join(out)
            out.append(char)
            end += 1
        self._fail("unterminated string literal")

    def _number(self):
        start = self.pos
        end = self.pos + 1 if self.text[self.pos] == "-" else self.pos
        while end < len(self.text) and (self.text[end].isdigit() or self.text[end] in ".eE+-"):
            end += 1
        token = self.text[start:end]
        self.pos = end
        try:
            return int(token)
        except ValueError:
            try:
                return float(token)
            except ValueError:
                self._fail(f"bad number literal {token!r}")

    def _ident(self) -> str:
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
            self.pos += 1
        if start == self.pos:
            self._fail("expected a type constructor name")
        return self.text[start:self.pos]

    def _field_name(self) -> str:
        self._skip_ws()
        if self.pos < len(self.text) and self.text[self.pos] in "'\"":
            return self._string(self.text[self.pos])
        return self._ident()

    def _expect(self, char: str) -> None:
        self._skip_ws()
        if self.pos >= len(self.text) or self.text[self.pos] != char:
            found = self.text[self.pos] if self.pos < len(self.text) else "end of text"
            self._fail(f"expected {char!r}, found {found!r}")
        self.pos += 1

    def _peek_is(self, char: str) -> bool:
        self._skip_ws()
        return self.pos < len(self.text) and self.text[self.pos] == char

    def _skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _fail(self, message: str):
        raise TaskFileError(f"schema text {self.text!r}: {message} (offset {self.pos})")


def parse_schema_text(text: str) -> TypeSchema | VoidType:
    """Parse the textual schema syntax used in task files."""
    if not isinstance(text, str):
        raise TaskFileError(f"schema must be text, got {type(text).__name__}")
    return _SchemaParser(text).parse()


@dataclass(frozen=True)
class TaskEntry:
    name: str
    template_text: str
    return_schema: TypeSchema | VoidType
    param_schemas: tuple[tuple[str, TypeSchema], ...] | None
    fewshot: tuple[Example, ...]
    tests: tuple[Example, ...]
    codable: bool
    target_language: str

    def to_spec(self, target_language: str | None = None) -> TaskSpec:
        return TaskSpec(
            name=self.name,
            template=parse_template(self.template_text),
            return_schema=self.return_schema,
            param_schemas=self.param_schemas,
            fewshot=self.fewshot,
            tests=self.tests,
            target_language=target_language or self.target_language,
        )


@dataclass(frozen=True)
class TaskFile:
    version: int
    entries: dict[str, TaskEntry]

    def get(self, name: str) -> TaskEntry:
        if name not in self.entries:
            raise KeyError(name)
        return self.entries[name]


def _examples_from(raw: Any, where: str) -> tuple[Example, ...]:
    if raw is None:
        return ()
    if not isinstance(raw, list):
        raise TaskFileError(f"{where} must be a list of {{input, output}} objects")
    examples = []
    for item in raw:
        if not isinstance(item, Mapping) or "input" not in item or "output" not in item:
            raise TaskFileError(f"{where} entries need 'input' and 'output' fields")
        if not isinstance(item["input"], Mapping):
            raise TaskFileError(f"{where} input must be an object of named values")
        examples.append(Example(input=dict(item["input"]), output=item["output"]))
    return tuple(examples)


def load_task_file(path: str | Path) -> TaskFile:
    """Load and validate a task file; entries keep their file order."""
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise TaskFileError(f"cannot read task file {path}: {exc}") from exc
    except ValueError as exc:
        raise TaskFileError(f"task file {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or raw.get("version") != 1:
        raise TaskFileError("task file must be an object with \"version\": 1")
    tasks = raw.get("tasks")
    if not isinstance(tasks, list):
        raise TaskFileError('task file needs a "tasks" list')
    entries: dict[str, TaskEntry] = {}
    for item in tasks:
        if not isinstance(item, Mapping):
            raise TaskFileError("every task entry must be an object")
        try:
            name = item["name"]
            template_text = item["template"]
            return_text = item["return_schema"]
        except KeyError as exc:
            raise TaskFileError(f"task entry is missing required field {exc}") from exc
        if name in entries:
            raise TaskFileError(f"duplicate task name {name!r}")
        params_raw = item.get("param_schemas")
        if params_raw is None:
            param_schemas = None
        elif isinstance(params_raw, Mapping):
            param_schemas = tuple(
                (key, _param_schema(key, value)) for key, value in params_raw.items()
            )
        else:
            raise TaskFileError(f"task {name!r}: param_schemas must be an object")
        entry = TaskEntry(
            name=name,
            template_text=template_text,
            return_schema=parse_schema_text(return_text),
            param_schemas=param_schemas,
            fewshot=_examples_from(item.get("fewshot"), f"task {name!r} fewshot"),
            tests=_examples_from(item.get("tests"), f"task {name!r} tests"),
            codable=bool(item.get("codable", False)),
            target_language=item.get("target_language", "python"),
        )
        entry.to_spec()  # fail fast: template parses, schemas line up
        entries[name] = entry
    return TaskFile(version=1, entries=entries)


def _param_schema(key: str, value: Any) -> TypeSchema:
    schema = parse_schema_text(value)
    if isinstance(schema, VoidType):
        raise TaskFileError(f"parameter {key!r} cannot be void")
    return schema
