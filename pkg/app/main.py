from dotenv import load_dotenv
import os

# Load .env from the project directory (parent of app)
current_dir = os.path.dirname(os.path.abspath(__file__))
project_dir = os.path.dirname(current_dir)
load_dotenv(os.path.join(project_dir, ".env"))

from contextlib import asynccontextmanager
import threading

from fastapi import FastAPI
from fastapi.middleware.cors import CORSMiddleware

from app.api.v1 import channels, divergences, entropies, majorization, superchannels
from app.core.config import settings
from app.core.logger import get_logger
from app.core.resources import resources

logger = get_logger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    # Warm up the conic backends off the event loop; cvxpy import is slow
    def pre_load():
        try:
            backends = resources.solvers
            logger.info(f"Lifespan: conic backends ready {backends}")
        except Exception as e:
            logger.error(f"Lifespan: backend warm-up failed: {e}")

    threading.Thread(target=pre_load, daemon=True).start()
    logger.info("Lifespan: server starting, backends warming up in background")
    yield


app = FastAPI(
    title=settings.PROJECT_NAME,
    openapi_url="/openapi.json",
    debug=settings.DEBUG,
    lifespan=lifespan,
)

app.add_middleware(
    CORSMiddleware,
    allow_origins=["*"],
    allow_credentials=True,
    allow_methods=["*"],
    allow_headers=["*"],
)

app.include_router(channels.router, prefix="/api/v1", tags=["channels"])
app.include_router(superchannels.router, prefix="/api/v1", tags=["superchannels"])
app.include_router(entropies.router, prefix="/api/v1", tags=["entropies"])
app.include_router(divergences.router, prefix="/api/v1", tags=["divergences"])
app.include_router(majorization.router, prefix="/api/v1", tags=["majorization"])


@app.get("/")
async def root():
    return {"message": f"Welcome to {settings.PROJECT_NAME}"}


@app.get("/health")
def health_check():
    """Configured tolerances and the conic backends actually available."""
    health_status = {
        "status": "healthy",
        "tolerances": {
            "channel": settings.CHANNEL_TOL,
            "hermitian": settings.HERMITIAN_TOL,
            "rank_cutoff": settings.RANK_CUTOFF,
            "gap": settings.GAP_TOL,
            "feasibility": settings.FEAS_TOL,
            "majorization": settings.MAJORIZATION_TOL,
        },
        "services": {},
    }

    try:
        backends = resources.solvers
        health_status["services"]["solvers"] = {
            "status": "ready" if backends else "not_installed",
            "backends": backends,
            "max_iters": settings.QSC_MAX_ITERS,
        }
        if not backends:
            health_status["status"] = "degraded"
    except Exception as e:
        health_status["services"]["solvers"] = {"status": "error", "message": str(e)[:50]}
        health_status["status"] = "degraded"

    health_status["services"]["sdp_dump"] = {
        "status": "enabled" if settings.SDP_DUMP_DIR else "disabled"
    }
    return health_status
