import sys

from loguru import logger

from fockwalk.utils.config.server import LOG_LEVEL

LOG_FORMAT = "<green>{time:HH:mm:ss.SSS}</green> | <level>{level: <8}</level> | <cyan>{name}</cyan> - <level>{message}</level>"

_configured = False


def _stderr(message):
    # resolved per message so redirected streams are honoured
    sys.stderr.write(message)


def configure_logging(level: str = LOG_LEVEL, force: bool = False):
    global _configured
    if _configured and not force:
        return
    logger.remove()
    try:
        logger.add(_stderr, level=level, format=LOG_FORMAT, colorize=False)
    except ValueError:
        logger.add(_stderr, level="INFO", format=LOG_FORMAT, colorize=False)
        logger.warning(f"Unknown log level {level!r}, falling back to INFO")
    _configured = True
