"""
Logging setup shared by the services, the CLI and the HTTP app.
Handlers are attached once to the package root logger ("app").
"""
import logging
from threading import Lock

from app.core.config import settings

_FORMAT = "[%(asctime)s] %(levelname)s %(name)s: %(message)s"
_configured = False
_lock = Lock()


def configure_logging(level: str = None, log_file: str = None) -> None:
    global _configured
    with _lock:
        root = logging.getLogger("app")
        root.setLevel((level or settings.LOG_LEVEL).upper())
        if _configured:
            return

        formatter = logging.Formatter(_FORMAT)
        stream_handler = logging.StreamHandler()
        stream_handler.setFormatter(formatter)
        root.addHandler(stream_handler)

        path = log_file if log_file is not None else settings.LOG_FILE
        if path:
            file_handler = logging.FileHandler(path, encoding="utf-8")
            file_handler.setFormatter(formatter)
            root.addHandler(file_handler)

        root.propagate = False
        _configured = True


def get_logger(name: str) -> logging.Logger:
    configure_logging()
    return logging.getLogger(name)
