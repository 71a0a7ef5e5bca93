"""Parent-side drivers for the execution harness.

run_once spawns one harness process per call: full isolation, ~tens of
milliseconds of interpreter start-up. Worker keeps a single harness process
alive in serve mode and pays that cost once, which is what makes compiled
calls cheap enough to benchmark; requests are serialized over its pipe.
"""

from __future__ import annotations

import json
import os
import select
import subprocess
import sys
import tempfile
import threading
import time
import weakref
from pathlib import Path
from typing import Any, Mapping

from .errors import ExecutionError, ExecutionTimeout, ProtocolError

HARNESS_PATH = Path(__file__).with_name("harness.py")

DEFAULT_INVOKE_TIMEOUT = 10.0


def _child_env(scratch: str) -> dict[str, str]:
    # Deliberately minimal: no API keys, no PYTHONPATH, temp dir inside scratch.
    return {
        "PATH": os.environ.get("PATH", ""),
        "PYTHONDONTWRITEBYTECODE": "1",
        "TMPDIR": scratch,
        "HOME": scratch,
        "LANG": os.environ.get("LANG", "C.UTF-8"),
    }


def _encode_request(entry: str, args: Mapping[str, Any]) -> str:
    return json.dumps({"entry": entry, "args": dict(args)}, ensure_ascii=False)


def _decode_response(raw: str, stderr_tail: str = "") -> Any:
    try:
        document = json.loads(raw)
    except ValueError as exc:
        raise ProtocolError(f"harness output is not valid JSON: {raw[:200]!r}") from exc
    if not isinstance(document, dict) or "ok" not in document:
        raise ProtocolError(f"harness output is not a response document: {raw[:200]!r}")
    if not document["ok"]:
        error = document.get("error", "unknown error")
        if stderr_tail:
            error = f"{error}\n{stderr_tail}"
        raise ExecutionError(error)
    return document.get("result")


def run_once(
    source_path: str | Path,
    entry: str,
    args: Mapping[str, Any],
    timeout: float = DEFAULT_INVOKE_TIMEOUT,
    python: str | None = None,
) -> Any:
    """Execute entry(**args) from a source file in a fresh harness process."""
    request = _encode_request(entry, args)
    with tempfile.TemporaryDirectory(prefix="askit-run-") as scratch:
        # -I: isolated mode keeps the harness directory off sys.path and
        # ignores PYTHON* env vars; -B never writes bytecode caches.
        command = [python or sys.executable, "-I", "-B", str(HARNESS_PATH), str(source_path)]
        try:
            proc = subprocess.run(
                command,
                input=request.encode("utf-8"),
                capture_output=True,
                cwd=scratch,
                env=_child_env(scratch),
                timeout=timeout,
            )
        except subprocess.TimeoutExpired as exc:
            raise ExecutionTimeout(f"{entry} exceeded {timeout}s") from exc
    stderr_tail = proc.stderr.decode("utf-8", errors="replace")[-500:].strip()
    if proc.returncode != 0:
        raise ExecutionError(
            f"harness exited with status {proc.returncode}"
            + (f": {stderr_tail}" if stderr_tail else "")
        )
    return _decode_response(proc.stdout.decode("utf-8", errors="replace"), stderr_tail)


class Worker:
    """A long-lived harness process answering one request per line.

    The generated module is loaded once and stays warm, so state it keeps at
    module level persists across calls; run_once is the fully isolated
    variant. Thread-safe: calls are serialized by an internal lock.
    """

    def __init__(self, source_path: str | Path, python: str | None = None, call_timeout: float = 30.0):
        self.source_path = str(source_path)
        self.call_timeout = call_timeout
        self._scratch = tempfile.TemporaryDirectory(prefix="askit-worker-")
        self._stderr_path = Path(self._scratch.name) / "stderr.log"
        self._stderr_handle = open(self._stderr_path, "wb")
        self._proc = subprocess.Popen(
            [python or sys.executable, "-I", "-B", str(HARNESS_PATH), self.source_path, "--serve"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=self._stderr_handle,
            cwd=self._scratch.name,
            env=_child_env(self._scratch.name),
            bufsize=0,
        )
        self._buffer = b""
        self._lock = threading.Lock()
        self._finalizer = weakref.finalize(self, _shutdown, self._proc, self._scratch, self._stderr_handle)

    @property
    def alive(self) -> bool:
        return self._proc.poll() is None

    def call(self, entry: str, args: Mapping[str, Any]) -> Any:
        with self._lock:
            if self._proc.poll() is not None:
                raise ExecutionError(f"harness exited with status {self._proc.returncode}: {self._stderr_tail()}")
            line = (_encode_request(entry, args) + "\n").encode("utf-8")
            try:
                self._proc.stdin.write(line)
                self._proc.stdin.flush()
            except (BrokenPipeError, OSError) as exc:
                raise ExecutionError(f"harness pipe closed: {self._stderr_tail()}") from exc
            raw = self._read_line()
        return _decode_response(raw, self._stderr_tail())

    def close(self) -> None:
        self._finalizer()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()

    def _read_line(self) -> str:
        fd = self._proc.stdout.fileno()
        deadline = None if self.call_timeout is None else _now() + self.call_timeout
        while b"\n" not in self._buffer:
            remaining = None if deadline is None else max(0.0, deadline - _now())
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                self._proc.kill()
                self._proc.wait(timeout=5.0)
                raise ExecutionTimeout(f"no response within {self.call_timeout}s")
            chunk = os.read(fd, 65536)
            if not chunk:
                raise ExecutionError(f"harness closed its output: {self._stderr_tail()}")
            self._buffer += chunk
        raw, self._buffer = self._buffer.split(b"\n", 1)
        return raw.decode("utf-8", errors="replace")

    def _stderr_tail(self) -> str:
        try:
            self._stderr_handle.flush()
            return self._stderr_path.read_bytes()[-500:].decode("utf-8", errors="replace").strip()
        except OSError:
            return ""


def _now() -> float:
    return time.monotonic()


def _shutdown(proc, scratch, stderr_handle):
    try:
        if proc.poll() is None:
            proc.terminate()
            try:
                proc.wait(timeout=2.0)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait(timeout=2.0)
    finally:
        for stream in (proc.stdin, proc.stdout):
            try:
                if stream:
                    stream.close()
            except OSError:
                pass
        try:
            stderr_handle.close()
        except OSError:
            pass
        scratch.cleanup()
