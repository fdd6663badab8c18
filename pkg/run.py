"""
Script to run the Dual Choice Evaluator HTTP service
"""
import logging
import signal
import sys

import uvicorn

from dualchoice.core.config import LOG_FORMAT, settings

# Configure logging
logging.basicConfig(level=settings.LOG_LEVEL, format=LOG_FORMAT)
logger = logging.getLogger("startup")


def handle_exit(signum, frame):
    """Handle exit signals gracefully"""
    logger.info("Received shutdown signal, exiting...")
    sys.exit(0)


if __name__ == "__main__":
    signal.signal(signal.SIGINT, handle_exit)
    signal.signal(signal.SIGTERM, handle_exit)

    logger.info("Starting API server...")
    uvicorn.run("dualchoice.main:app", host="0.0.0.0", port=8001, reload=False)
