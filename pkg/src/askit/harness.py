"""Child-process harness that loads generated source and calls one function.

Run as a plain script, never imported by the parent:

    python harness.py SOURCE_FILE          one request, one response, exit
    python harness.py SOURCE_FILE --serve  one request per input line, loop

Wire protocol, one JSON document per direction:

    request   {"entry": <name>, "args": {...}}
    response  {"ok": true, "result": ...}
    response  {"ok": false, "error": <text>}

The harness keeps the protocol channel to itself: the real stdout/stdin file
descriptors are duplicated away before user code runs, fd 1 is pointed at
stderr (so stray prints cannot corrupt responses) and fd 0 at /dev/null.

Before executing the generated source an audit-hook sandbox is installed in
this process: file writes, renames and deletes outside the scratch directory
(the working directory) are denied, as are sockets and subprocesses. This is
containment against careless generated code, not a security boundary against
a determined adversary; the parent additionally enforces a wall-clock
timeout.

This file is intentionally self-contained (stdlib only) so it works no matter
how the parent package was installed.
"""

import json
import os
import sys
import traceback

WRITE_FLAGS = os.O_WRONLY | os.O_RDWR | os.O_APPEND | os.O_CREAT | os.O_TRUNC | os.O_EXCL

DENIED_ALWAYS = {
    "socket.connect",
    "socket.connect_ex",
    "socket.bind",
    "socket.sendto",
    "socket.sendmsg",
    "subprocess.Popen",
    "os.system",
    "os.posix_spawn",
    "os.spawn",
    "os.fork",
    "os.forkpty",
}

PATH_EVENTS = {
    "os.mkdir",
    "os.rmdir",
    "os.remove",
    "os.rename",
    "os.replace",
    "os.link",
    "os.symlink",
    "os.truncate",
    "os.chmod",
    "shutil.rmtree",
    "shutil.move",
}


def install_sandbox(scratch_root):
    allowed_prefix = os.path.realpath(scratch_root) + os.sep
    devnull = os.path.realpath(os.devnull)

    def allowed(path):
        if isinstance(path, int) or path is None:
            return True  # fd-based ops act on files that passed the open check
        if isinstance(path, bytes):
            path = os.fsdecode(path)
        if not isinstance(path, str):
            return True
        real = os.path.realpath(path)
        return real == devnull or real == allowed_prefix[:-1] or real.startswith(allowed_prefix)

    def hook(event, args):
        if event in DENIED_ALWAYS:
            raise PermissionError(f"sandbox: {event} is not allowed in generated code")
        if event == "open":
            path, mode, flags = args
            writing = ("w" in mode or "a" in mode or "x" in mode or "+" in mode) if mode else bool(flags & WRITE_FLAGS)
            if writing and not allowed(path):
                raise PermissionError(f"sandbox: write outside scratch directory: {path!r}")
        elif event in PATH_EVENTS:
            for candidate in args[:2]:
                if not allowed(candidate):
                    raise PermissionError(f"sandbox: {event} outside scratch directory: {candidate!r}")

    sys.addaudithook(hook)


def load_module(source_path):
    with open(source_path, encoding="utf-8") as handle:
        source = handle.read()
    namespace = {"__name__": "askit_generated", "__file__": source_path}
    code = compile(source, source_path, "exec")
    exec(code, namespace)
    return namespace


def handle_request(namespace, load_error, request):
    if load_error is not None:
        return {"ok": False, "error": load_error}
    try:
        entry = request["entry"]
        args = request.get("args") or {}
    except (TypeError, KeyError):
        return {"ok": False, "error": "request must be an object with an 'entry' field"}
    function = namespace.get(entry)
    if not callable(function):
        return {"ok": False, "error": f"generated source defines no function named {entry!r}"}
    try:
        result = function(**args)
    except BaseException as exc:  # noqa: BLE001 - everything becomes an error doc
        line = traceback.format_exception_only(type(exc), exc)[-1].strip()
        return {"ok": False, "error": line}
    return {"ok": True, "result": result}


def encode_response(response):
    try:
        return json.dumps(response, ensure_ascii=False)
    except (TypeError, ValueError) as exc:
        return json.dumps({"ok": False, "error": f"result is not JSON-serializable: {exc}"})


def main(argv):
    if len(argv) < 2:
        print("usage: harness.py SOURCE_FILE [--serve]", file=sys.stderr)
        return 2
    source_path = argv[1]
    serve = "--serve" in argv[2:]

    # Claim the protocol descriptors before any user code can touch them.
    protocol_out = os.dup(1)
    protocol_in = os.dup(0)
    os.dup2(2, 1)
    devnull_fd = os.open(os.devnull, os.O_RDONLY)
    os.dup2(devnull_fd, 0)
    os.close(devnull_fd)
    requests = os.fdopen(protocol_in, "r", encoding="utf-8")

    def respond(response):
        os.write(protocol_out, (encode_response(response) + "\n").encode("utf-8"))

    install_sandbox(os.getcwd())

    def load():
        try:
            return load_module(source_path), None
        except BaseException as exc:  # noqa: BLE001
            line = traceback.format_exception_only(type(exc), exc)[-1].strip()
            return {}, f"generated source failed to load: {line}"

    if serve:
        namespace, load_error = load()
        for line in requests:
            line = line.strip()
            if not line:
                continue
            try:
                request = json.loads(line)
            except ValueError as exc:
                respond({"ok": False, "error": f"request is not valid JSON: {exc}"})
                continue
            respond(handle_request(namespace, load_error, request))
    else:
        # Drain the request before touching user code so a large payload can
        # never deadlock against a module that is slow to load.
        raw = requests.read()
        try:
            request = json.loads(raw)
        except ValueError as exc:
            respond({"ok": False, "error": f"request is not valid JSON: {exc}"})
            return 0
        namespace, load_error = load()
        respond(handle_request(namespace, load_error, request))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
