import structlog
import logging
import sys
from config import get_settings

def configure_logger(quiet: bool = False):
    settings = get_settings()

    processors = [
        structlog.contextvars.merge_contextvars,
        structlog.processors.add_log_level,
        structlog.processors.TimeStamper(fmt="iso"),
        structlog.processors.StackInfoRenderer(),
        structlog.processors.format_exc_info,
    ]

    # JSON lines in production, readable console output everywhere else
    if settings.is_production:
        processors.append(structlog.processors.JSONRenderer())
    else:
        processors.append(structlog.dev.ConsoleRenderer())

    level = logging.WARNING if quiet else getattr(logging, settings.LOG_LEVEL, logging.INFO)

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=sys.stderr),
        # loggers follow the latest configure_logger() call
        cache_logger_on_first_use=False,
    )

    # Stdlib loggers (scipy, matplotlib) go to the same stream
    logging.basicConfig(format="%(message)s", stream=sys.stderr, level=level)
