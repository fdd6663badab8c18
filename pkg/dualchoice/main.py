"""
Main application module for the Dual Choice Evaluator
"""
import logging

from fastapi import FastAPI

from dualchoice.api import evaluation
from dualchoice.core.config import LOG_FORMAT, settings

# Configure logging
logging.basicConfig(level=settings.LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger(__name__)

# Create FastAPI application
app = FastAPI(title=settings.PROJECT_NAME)

# Include API routers
app.include_router(
    evaluation.router,
    prefix=f"{settings.API_V1_STR}/evaluation",
    tags=["evaluation"]
)


@app.get("/")
async def root():
    """
    Root endpoint
    """
    return {
        "message": f"Welcome to the {settings.PROJECT_NAME} API",
        "docs": "/docs",
        "version": "1.0.0"
    }


@app.get("/health")
async def health_check():
    """
    Health check endpoint
    """
    return {
        "status": "healthy",
        "tolerances": {
            "exact": settings.EXACT_TOL,
            "entropic": settings.ENTROPIC_TOL,
            "comonotone": settings.COMONOTONE_TOL,
            "quantile": settings.QUANTILE_TOL,
        },
        "max_workers": settings.MAX_WORKERS,
    }
