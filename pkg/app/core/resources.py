"""
Centralized lazily-built resources shared by the services: the list of conic
backends actually installed and a cache of informationally complete frames.
Double-checked properties with granular locks, one per resource.
"""
from threading import Lock
from typing import Dict, List

from app.core.config import settings
from app.core.logger import get_logger

logger = get_logger(__name__)


class Resources:
    def __init__(self):
        self._solvers = None
        self._frames: Dict[int, object] = {}

        self._solver_lock = Lock()
        self._frame_lock = Lock()

    @property
    def solvers(self) -> List[str]:
        if self._solvers is None:
            with self._solver_lock:
                if self._solvers is not None:
                    return self._solvers

                import cvxpy as cp
                installed = set(cp.installed_solvers())
                available = [name for name in settings.SOLVERS if name in installed]
                if not available:
                    logger.error(f"Resources: none of {settings.SOLVERS} is installed (found {sorted(installed)})")
                else:
                    logger.debug(f"Resources: conic backends in order {available}")
                self._solvers = available
        return self._solvers

    def frame(self, d: int):
        """Informationally complete frame on a d-dimensional system, built once per dimension."""
        cached = self._frames.get(d)
        if cached is not None:
            return cached
        with self._frame_lock:
            if d not in self._frames:
                from app.services.majorization import build_frame
                logger.debug(f"Resources: building IC frame for d={d}")
                self._frames[d] = build_frame(d)
        return self._frames[d]


# Global singleton instance
resources = Resources()
