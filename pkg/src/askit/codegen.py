"""Code generation: prompt, vet, cache, execute.

A task is turned into a one-shot prompt; candidate code from the model is
checked syntactically (target-language checker in a child process) and
semantically (test examples run through the execution harness). The first
candidate passing every check is written to the on-disk cache; retries
re-send the identical prompt and rely on sampling temperature for variation.
Generation for a given cache key happens once: lookups hit the cached source
and never touch the client.
"""

from __future__ import annotations

import fcntl
import json
import math
import re
import shutil
import subprocess
import sys
import tempfile
from contextlib import contextmanager
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from .encoding import canonical_json, stable_digest
from .engine import Message
from .errors import (
    BlockNotFound,
    ExecutionError,
    ExecutionTimeout,
    GenerationFailed,
    ProtocolError,
    SchemaError,
    ToolchainUnavailable,
)
from .prompts import Example, Violation, ViolationKind, build_codegen, extract_block
from .runner import run_once
from .template import PromptTemplate, substitute_comment
from .types import IDENT_RE, TypeSchema, VoidType, render

DEFAULT_MAX_RETRIES = 9
DEFAULT_CACHE_DIR = "askit"

_PY_CHECK_SNIPPET = (
    "import ast, sys\n"
    "with open(sys.argv[1], encoding='utf-8') as handle:\n"
    "    ast.parse(handle.read(), filename=sys.argv[1])\n"
)


@dataclass(frozen=True)
class TargetLanguage:
    name: str  # doubles as the markdown fence tag
    extension: str
    runnable: bool


LANGUAGES = {
    "python": TargetLanguage("python", "py", runnable=True),
    "typescript": TargetLanguage("typescript", "ts", runnable=False),
}


@dataclass(frozen=True)
class TaskSpec:
    """Everything a defined task carries.

    `fewshot` conditions the prompt; `tests` gate generated code. Parameter
    schemas are optional for the direct path but (by default) required before
    code generation.
    """

    name: str
    template: PromptTemplate
    return_schema: TypeSchema | VoidType
    param_schemas: tuple[tuple[str, TypeSchema], ...] | None = None
    fewshot: tuple[Example, ...] = ()
    tests: tuple[Example, ...] = ()
    target_language: str = "python"

    def __post_init__(self):
        if not IDENT_RE.match(self.name):
            raise SchemaError(f"function name {self.name!r} is not a valid identifier")
        if self.target_language not in LANGUAGES:
            raise SchemaError(f"unsupported target language {self.target_language!r}")
        if self.param_schemas is not None:
            declared = {name for name, _ in self.param_schemas}
            expected = set(self.template.params)
            if declared != expected:
                raise SchemaError(
                    f"parameter schemas {sorted(declared)} do not match template parameters {sorted(expected)}"
                )
        params = set(self.template.params)
        for example in (*self.fewshot, *self.tests):
            extra = set(example.input) - params
            if extra:
                raise SchemaError(f"example binds unknown parameters {sorted(extra)}")


@dataclass(frozen=True)
class CodegenConfig:
    max_retries: int = DEFAULT_MAX_RETRIES
    temperature: float = 1.0
    cache_dir: Path = field(default_factory=lambda: Path(DEFAULT_CACHE_DIR))
    codable_allowlist: frozenset[str] | None = None
    require_param_schemas: bool = True
    invoke_timeout: float = 10.0

    def __post_init__(self):
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be within [0.0, 2.0]")
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        if self.codable_allowlist is not None:
            object.__setattr__(self, "codable_allowlist", frozenset(self.codable_allowlist))

    def allows(self, name: str) -> bool:
        """Allowlist check: exact names, or prefix groups written as 'prefix*'."""
        if self.codable_allowlist is None:
            return True
        for entry in self.codable_allowlist:
            if entry.endswith("*"):
                if name.startswith(entry[:-1]):
                    return True
            elif name == entry:
                return True
        return False


@dataclass(frozen=True)
class GeneratedFunction:
    source: str
    entry: str
    language: str
    cache_path: Path
    retries_used: int


def spec_digest(spec: TaskSpec) -> str:
    """Stable 8-hex digest over template, rendered schemas, and language."""
    return_text = "void" if isinstance(spec.return_schema, VoidType) else render(spec.return_schema)
    params = (
        None
        if spec.param_schemas is None
        else [[name, render(schema)] for name, schema in spec.param_schemas]
    )
    return stable_digest([spec.template.raw, return_text, params, spec.target_language])


def cache_slug(template: PromptTemplate) -> str:
    """First 40 chars of the quoted-name task text, lowercased, `_` for non-alphanumerics."""
    text = substitute_comment(template).lower()[:40]
    return re.sub(r"[^a-z0-9]", "_", text).rstrip("_")


def cache_paths(spec: TaskSpec, config: CodegenConfig) -> tuple[Path, Path]:
    stem = f"{cache_slug(spec.template)}_{spec_digest(spec)}"
    extension = LANGUAGES[spec.target_language].extension
    return config.cache_dir / f"{stem}.{extension}", config.cache_dir / f"{stem}.json"


def cache_store(spec: TaskSpec, source: str, config: CodegenConfig, retries_used: int = 0) -> Path:
    """Persist validated source plus its sidecar metadata, atomically."""
    code_path, meta_path = cache_paths(spec, config)
    config.cache_dir.mkdir(parents=True, exist_ok=True)
    metadata = {
        "entry": spec.name,
        "language": spec.target_language,
        "template": spec.template.raw,
        "return_schema": "void" if isinstance(spec.return_schema, VoidType) else render(spec.return_schema),
        "param_schemas": (
            None
            if spec.param_schemas is None
            else [[name, render(schema)] for name, schema in spec.param_schemas]
        ),
        "digest": spec_digest(spec),
        "retries_used": retries_used,
    }
    _atomic_write(meta_path, canonical_json(metadata) + "\n")
    _atomic_write(code_path, source)
    return code_path


def cache_lookup(spec: TaskSpec, config: CodegenConfig) -> GeneratedFunction | None:
    """Return the cached function for this spec, or None on a miss."""
    code_path, meta_path = cache_paths(spec, config)
    if not code_path.exists():
        return None
    source = code_path.read_text(encoding="utf-8")
    retries_used = 0
    if meta_path.exists():
        try:
            retries_used = int(json.loads(meta_path.read_text(encoding="utf-8")).get("retries_used", 0))
        except (ValueError, TypeError):
            retries_used = 0
    return GeneratedFunction(
        source=source,
        entry=spec.name,
        language=spec.target_language,
        cache_path=code_path,
        retries_used=retries_used,
    )


def syntax_check(source: str, language: str) -> Violation | None:
    """Run the target language's checker in a child process.

    Returns None when the code parses, a syntax-error Violation with the
    checker's diagnostics otherwise. Raises ToolchainUnavailable when the
    checker itself is missing.
    """
    if language not in LANGUAGES:
        raise SchemaError(f"unsupported target language {language!r}")
    extension = LANGUAGES[language].extension
    with tempfile.TemporaryDirectory(prefix="askit-check-") as scratch:
        path = Path(scratch) / f"candidate.{extension}"
        path.write_text(source if source.endswith("\n") else source + "\n", encoding="utf-8")
        command = _checker_command(language, path)
        proc = subprocess.run(command, capture_output=True, cwd=scratch, timeout=60)
    if proc.returncode == 0:
        return None
    diagnostics = (proc.stderr + proc.stdout).decode("utf-8", errors="replace").strip()
    return Violation(ViolationKind.SYNTAX_ERROR, diagnostics[-500:])


def _checker_command(language: str, path: Path) -> list[str]:
    if language == "python":
        return [sys.executable, "-I", "-c", _PY_CHECK_SNIPPET, str(path)]
    tsc = shutil.which("tsc")
    if tsc is None:
        raise ToolchainUnavailable("tsc is not installed; cannot check typescript sources")
    return [tsc, "--noEmit", str(path)]


def invoke(fn: GeneratedFunction, args: Mapping[str, Any], timeout: float = 10.0) -> Any:
    """Run a cached function in a fresh harness process and return its value."""
    if not LANGUAGES[fn.language].runnable:
        raise ToolchainUnavailable(f"no execution harness for {fn.language}")
    return run_once(fn.cache_path, fn.entry, args, timeout=timeout)


def output_equal(expected: Any, actual: Any) -> bool:
    """Deep structural equality over JSON values.

    Numbers compare exactly when both are integral, otherwise with relative
    tolerance 1e-6. Arrays are order-sensitive; objects must have equal key
    sets. Booleans never equal numbers.
    """
    if isinstance(expected, bool) or isinstance(actual, bool):
        return isinstance(expected, bool) and isinstance(actual, bool) and expected == actual
    if isinstance(expected, (int, float)) and isinstance(actual, (int, float)):
        if _is_integral(expected) and _is_integral(actual):
            return expected == actual
        return math.isclose(expected, actual, rel_tol=1e-6)
    if isinstance(expected, list) and isinstance(actual, list):
        return len(expected) == len(actual) and all(
            output_equal(e, a) for e, a in zip(expected, actual)
        )
    if isinstance(expected, dict) and isinstance(actual, dict):
        return expected.keys() == actual.keys() and all(
            output_equal(value, actual[key]) for key, value in expected.items()
        )
    if isinstance(expected, (list, dict)) or isinstance(actual, (list, dict)):
        return False
    return expected == actual


def _is_integral(value: float | int) -> bool:
    return isinstance(value, int) or value.is_integer()


def generate(client, spec: TaskSpec, config: CodegenConfig | None = None) -> GeneratedFunction:
    """Obtain, validate, and cache code for a task.

    Loops up to max_retries + 1 attempts: send the prompt, extract the fenced
    code, syntax-check it, run every test example through the harness. The
    winning candidate is cached and returned with its retry count. Raises
    GenerationFailed with the last violation and the full attempt transcript.
    Concurrent calls for the same cache key are serialized by a file lock;
    whoever enters second finds the cache populated.
    """
    config = config or CodegenConfig()
    prompt = build_codegen(spec)
    with _cache_lock(spec, config):
        cached = cache_lookup(spec, config)
        if cached is not None:
            return cached
        messages = [Message("user", prompt.text)]
        transcript: list[tuple[str, Violation]] = []
        violation: Violation | None = None
        for attempt in range(config.max_retries + 1):
            response = client.complete(messages, temperature=config.temperature)
            source, violation = _vet_candidate(response, spec, config)
            if source is not None:
                path = cache_store(spec, source, config, retries_used=attempt)
                return GeneratedFunction(
                    source=source,
                    entry=spec.name,
                    language=spec.target_language,
                    cache_path=path,
                    retries_used=attempt,
                )
            transcript.append((response, violation))
        raise GenerationFailed(violation, transcript)


def _vet_candidate(
    response: str, spec: TaskSpec, config: CodegenConfig
) -> tuple[str | None, Violation | None]:
    try:
        source = extract_block(response, LANGUAGES[spec.target_language].name)
    except BlockNotFound as exc:
        return None, Violation(ViolationKind.NO_CODE_BLOCK, str(exc))
    if not source.endswith("\n"):
        source += "\n"
    violation = syntax_check(source, spec.target_language)
    if violation is not None:
        return None, violation
    violation = _run_test_examples(source, spec, config)
    if violation is not None:
        return None, violation
    return source, None


def _run_test_examples(source: str, spec: TaskSpec, config: CodegenConfig) -> Violation | None:
    if not spec.tests:
        return None
    if not LANGUAGES[spec.target_language].runnable:
        raise ToolchainUnavailable(
            f"cannot run test examples: no execution harness for {spec.target_language}"
        )
    extension = LANGUAGES[spec.target_language].extension
    with tempfile.TemporaryDirectory(prefix="askit-vet-") as scratch:
        path = Path(scratch) / f"candidate.{extension}"
        path.write_text(source if source.endswith("\n") else source + "\n", encoding="utf-8")
        for example in spec.tests:
            shown = canonical_json(dict(example.input))
            try:
                actual = run_once(path, spec.name, example.input, timeout=config.invoke_timeout)
            except (ExecutionError, ExecutionTimeout, ProtocolError) as exc:
                return Violation(ViolationKind.TEST_FAILURE, f"input {shown} raised: {exc}")
            if not output_equal(example.output, actual):
                return Violation(
                    ViolationKind.TEST_FAILURE,
                    f"input {shown}: expected {canonical_json(example.output)},"
                    f" got {canonical_json(actual)}",
                )
    return None


@contextmanager
def _cache_lock(spec: TaskSpec, config: CodegenConfig):
    config.cache_dir.mkdir(parents=True, exist_ok=True)
    stem = f"{cache_slug(spec.template)}_{spec_digest(spec)}"
    lock_path = config.cache_dir / f"{stem}.lock"
    with open(lock_path, "w") as handle:
        fcntl.flock(handle, fcntl.LOCK_EX)
        try:
            yield
        finally:
            fcntl.flock(handle, fcntl.LOCK_UN)


def _atomic_write(path: Path, content: str) -> None:
    temp = path.with_name(path.name + ".tmp")
    temp.write_text(content, encoding="utf-8")
    temp.replace(path)
