"""The unified interface: ask once, define a reusable task, or compile it.

One TaskSpec serves both execution modes. A DefinedFunction answers by
querying the model at call time; its compile() swaps in generated, validated,
cached code without touching the template. The transition is the whole point:
nothing about the task description changes between modes.
"""

from __future__ import annotations

import threading
from typing import Any, Iterable, Mapping, NamedTuple

from .clients import ClientConfig, LiveClient
from .codegen import (
    CodegenConfig,
    GeneratedFunction,
    TaskSpec,
    cache_lookup,
    generate,
    invoke,
)
from .encoding import stable_digest
from .engine import EngineConfig, ask_until_valid
from .errors import ExecutionError, NotCodable, SchemaError, UnboundParameter, UnknownParameter
from .prompts import Example
from .runner import Worker
from .template import parse
from .types import TypeSchema, VoidType, render


class AskResult(NamedTuple):
    value: Any
    reason: str
    attempts: int


def _normalize_examples(examples: Iterable) -> tuple[Example, ...]:
    normalized = []
    for item in examples or ():
        if isinstance(item, Example):
            normalized.append(item)
        elif isinstance(item, Mapping):
            normalized.append(Example(input=dict(item["input"]), output=item["output"]))
        else:
            bound, output = item
            normalized.append(Example(input=dict(bound), output=output))
    return tuple(normalized)


def _default_client():
    return LiveClient(ClientConfig.from_env())


def _merge_args(args, kwargs):
    merged = dict(args or {})
    merged.update(kwargs)
    return merged


def ask(
    answer_schema: TypeSchema,
    template_text: str,
    args: Mapping[str, Any] | None = None,
    *,
    fewshot: Iterable = (),
    client=None,
    config: EngineConfig | None = None,
) -> AskResult:
    """One-shot direct path: parse the template, query until the answer validates.

    Binding problems surface before any client call. Returns the typed value,
    the model's stated reasoning, and the attempt count.
    """
    if isinstance(answer_schema, VoidType):
        raise SchemaError("a void task has no answer to ask for")
    template = parse(template_text)
    result = ask_until_valid(
        client or _default_client(),
        template,
        dict(args or {}),
        answer_schema,
        _normalize_examples(fewshot),
        config,
    )
    return AskResult(result.value, result.reason, result.attempts)


def define(
    answer_schema: TypeSchema | VoidType,
    template_text: str,
    *,
    param_schemas: Mapping[str, TypeSchema] | Iterable[tuple[str, TypeSchema]] | None = None,
    fewshot: Iterable = (),
    tests: Iterable = (),
    name: str | None = None,
    target_language: str = "python",
    reuse_fewshot_as_tests: bool = False,
    client=None,
    config: EngineConfig | None = None,
) -> "DefinedFunction":
    """Build a reusable function from a prompt template.

    Calling the result runs the direct path; compile() switches it to
    generated code. When a name is omitted a digest-derived one is assigned.
    The few-shot set conditions prompts; the test set gates generated code
    (pass reuse_fewshot_as_tests=True to use the former as the latter).
    """
    template = parse(template_text)
    if param_schemas is not None:
        if isinstance(param_schemas, Mapping):
            schema_items = tuple(param_schemas.items())
        else:
            schema_items = tuple(param_schemas)
    else:
        schema_items = None
    fewshot_examples = _normalize_examples(fewshot)
    test_examples = _normalize_examples(tests)
    if not test_examples and reuse_fewshot_as_tests:
        test_examples = fewshot_examples
    if name is None:
        return_text = "void" if isinstance(answer_schema, VoidType) else render(answer_schema)
        name = f"task_{stable_digest([template_text, return_text, target_language])}"
    spec = TaskSpec(
        name=name,
        template=template,
        return_schema=answer_schema,
        param_schemas=schema_items,
        fewshot=fewshot_examples,
        tests=test_examples,
        target_language=target_language,
    )
    return DefinedFunction(spec, client=client, config=config)


class DefinedFunction:
    """A task bound to the direct path. Immutable; safe to share."""

    def __init__(self, spec: TaskSpec, client=None, config: EngineConfig | None = None):
        self._spec = spec
        self._client = client
        self._config = config

    @property
    def spec(self) -> TaskSpec:
        return self._spec

    @property
    def name(self) -> str:
        return self._spec.name

    def ask(self, args: Mapping[str, Any] | None = None, /, **kwargs) -> AskResult:
        """Run the direct path and return value, reason, and attempt count."""
        if isinstance(self._spec.return_schema, VoidType):
            raise SchemaError("a void task has no answer; compile it instead")
        result = ask_until_valid(
            self._client or _default_client(),
            self._spec.template,
            _merge_args(args, kwargs),
            self._spec.return_schema,
            self._spec.fewshot,
            self._config,
        )
        return AskResult(result.value, result.reason, result.attempts)

    def __call__(self, args: Mapping[str, Any] | None = None, /, **kwargs) -> Any:
        return self.ask(args, **kwargs).value

    def compile(self, config: CodegenConfig | None = None, client=None) -> "CompiledFunction":
        """Generate (or load from cache) code for this task and wrap it."""
        return compile(self, config=config, client=client)


def compile(
    defined: DefinedFunction, config: CodegenConfig | None = None, client=None
) -> "CompiledFunction":
    """Switch a defined task to the generated-code path.

    Cache hits make zero client calls. Raises NotCodable when an allowlist is
    configured and excludes this name, GenerationFailed when every candidate
    was rejected.
    """
    config = config or CodegenConfig()
    spec = defined.spec
    if not config.allows(spec.name):
        raise NotCodable(f"{spec.name!r} is not in the codable allowlist")
    if config.require_param_schemas and spec.param_schemas is None:
        raise SchemaError(
            "parameter schemas are required before code generation;"
            " pass param_schemas to define, or set require_param_schemas=False"
        )
    generated = cache_lookup(spec, config)
    if generated is None:
        generated = generate(client or defined._client or _default_client(), spec, config)
    return CompiledFunction(spec, generated, config)


class CompiledFunction:
    """A task backed by validated generated code; calls never touch the client.

    Calls go through a lazily started warm harness process (restarted if it
    dies); call_isolated() runs one fresh process per call instead. Close()
    or use as a context manager to reap the worker eagerly.
    """

    def __init__(self, spec: TaskSpec, generated: GeneratedFunction, config: CodegenConfig):
        self._spec = spec
        self._generated = generated
        self._config = config
        self._worker: Worker | None = None
        self._lock = threading.Lock()

    @property
    def spec(self) -> TaskSpec:
        return self._spec

    @property
    def generated(self) -> GeneratedFunction:
        return self._generated

    def __call__(self, args: Mapping[str, Any] | None = None, /, **kwargs) -> Any:
        merged = self._check_binding(_merge_args(args, kwargs))
        with self._lock:
            worker = self._ensure_worker()
            try:
                return worker.call(self._generated.entry, merged)
            except ExecutionError:
                if worker.alive:
                    raise  # the generated function failed; the worker is fine
                self._worker = None
                worker.close()
                return self._ensure_worker().call(self._generated.entry, merged)

    def call_isolated(self, args: Mapping[str, Any] | None = None, /, **kwargs) -> Any:
        """One fresh harness process for this call only."""
        merged = self._check_binding(_merge_args(args, kwargs))
        return invoke(self._generated, merged, timeout=self._config.invoke_timeout)

    def close(self) -> None:
        with self._lock:
            if self._worker is not None:
                self._worker.close()
                self._worker = None

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _ensure_worker(self) -> Worker:
        if self._worker is None:
            self._worker = Worker(
                self._generated.cache_path, call_timeout=self._config.invoke_timeout
            )
        return self._worker

    def _check_binding(self, args: dict) -> dict:
        declared = set(self._spec.template.params)
        for name in declared:
            if name not in args:
                raise UnboundParameter(f"parameter {name!r} is not bound")
        for name in args:
            if name not in declared:
                raise UnknownParameter(f"argument {name!r} is not a task parameter")
        return args
