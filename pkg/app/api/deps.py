import math
from contextlib import contextmanager
from typing import Optional

from fastapi import HTTPException

from app.core.exceptions import QSCError, SolverError
from app.core.logger import get_logger

logger = get_logger(__name__)


@contextmanager
def service_errors(operation: str):
    """
    Map service failures onto HTTP errors: a bad payload is the caller's
    problem (400), a failed solve or anything unexpected is ours (500).
    """
    try:
        yield
    except HTTPException:
        raise
    except SolverError as e:
        logger.error(f"API: {operation} failed in the solver: {e}")
        raise HTTPException(status_code=500, detail=str(e))
    except QSCError as e:
        raise HTTPException(status_code=400, detail=str(e))
    except Exception as e:
        logger.exception(f"API: {operation} failed")
        raise HTTPException(status_code=500, detail=str(e))


def finite(value: Optional[float]) -> Optional[float]:
    """JSON has no NaN or infinity; those travel as null."""
    if value is None or not math.isfinite(value):
        return None
    return float(value)
