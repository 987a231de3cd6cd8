"""Runs one program and reports how it terminated.

argv: program path, memory cap in bytes (0 = unlimited).

The program's stdout is redirected to stderr; the original stdout carries a
single result line prefixed with the sentinel. Writes outside the working
directory, network access and process spawning are refused through an audit
hook, which the program cannot remove.
"""

import json
import os
import resource
import sys
import traceback

SENTINEL = "__SOBENCH_RESULT__"


def _report(fd, status, exception=None):
    line = SENTINEL + json.dumps({"status": status, "exception": exception}) + "\n"
    os.write(fd, line.encode("utf-8"))


def _install_guard(work):
    realpath = os.path.realpath
    join = os.path.join
    fsdecode = os.fsdecode
    sep = os.sep
    write_flags = os.O_WRONLY | os.O_RDWR | os.O_CREAT | os.O_TRUNC | os.O_APPEND
    denied = frozenset(
        [
            "socket.__new__",
            "socket.connect",
            "socket.bind",
            "socket.getaddrinfo",
            "subprocess.Popen",
            "os.system",
            "os.exec",
            "os.spawn",
            "os.posix_spawn",
            "os.fork",
            "os.forkpty",
            "os.kill",
            "os.killpg",
        ]
    )
    path_events = {
        "os.remove": (0,),
        "os.rmdir": (0,),
        "os.mkdir": (0,),
        "os.rename": (0, 1),
        "os.link": (0, 1),
        "os.symlink": (1,),
        "os.truncate": (0,),
        "os.chmod": (0,),
        "os.chown": (0,),
        "os.utime": (0,),
        "shutil.rmtree": (0,),
    }

    def inside(path):
        if isinstance(path, int):
            return True
        try:
            if isinstance(path, bytes):
                path = fsdecode(path)
            full = realpath(join(work, path))
        except Exception:
            return False
        return full == work or full.startswith(work + sep)

    def guard(event, args):
        if event == "open":
            path, mode, flags = args[0], args[1], args[2] if len(args) > 2 else 0
            writing = (isinstance(mode, str) and any(c in mode for c in "wax+")) or bool(
                (flags or 0) & write_flags
            )
            if writing and path is not None and not inside(path):
                raise PermissionError("sandbox: write outside working directory: %r" % (path,))
        elif event in path_events:
            for index in path_events[event]:
                if index < len(args) and not inside(args[index]):
                    raise PermissionError("sandbox: %s outside working directory" % event)
        elif event in denied:
            raise PermissionError("sandbox: %s is not permitted" % event)

    sys.addaudithook(guard)


def main():
    result_fd = os.dup(1)
    os.dup2(2, 1)
    program_path, memory_cap = sys.argv[1], int(sys.argv[2])

    with open(program_path, "rb") as handle:
        source = handle.read()
    try:
        code = compile(source, "program.py", "exec", dont_inherit=True)
    except (SyntaxError, ValueError) as exc:
        _report(result_fd, "syntax", type(exc).__name__)
        os._exit(0)

    if memory_cap > 0:
        resource.setrlimit(resource.RLIMIT_AS, (memory_cap, memory_cap))
    _install_guard(os.path.realpath(os.getcwd()))

    status, exception = "ok", None
    namespace = {"__name__": "__main__", "__builtins__": __builtins__}
    try:
        exec(code, namespace)
    except SystemExit as exc:
        if exc.code not in (None, 0):
            status, exception = "exception", "SystemExit"
    except BaseException as exc:
        status, exception = "exception", type(exc).__name__
        try:
            traceback.print_exc()
        except BaseException:
            pass
    try:
        namespace.clear()
        sys.stdout.flush()
        sys.stderr.flush()
    except BaseException:
        pass
    _report(result_fd, status, exception)
    os._exit(0)


main()
