import contextlib


@contextlib.contextmanager
def open_text(target):
    """Yield a writable text handle for a path or an already-open file."""
    if hasattr(target, "write"):
        yield target
    else:
        with open(target, "w", newline="", encoding="utf-8") as fh:
            yield fh
