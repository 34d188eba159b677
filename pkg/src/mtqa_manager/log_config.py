"""
Flexible logging configuration supporting multiple backends.
Supports console, rotating local files and JSON lines.
"""
import logging
import os
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Any, Dict, Optional

from .log_handlers import ActiveContextFilter

DEFAULT_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


class LogBackendFactory:
    """Factory to create appropriate log handler based on configuration."""

    @staticmethod
    def create_handler(config: Dict[str, Any]) -> logging.Handler:
        """
        Create a log handler based on configuration.

        Args:
            config: Configuration dict with 'type' and backend-specific settings

        Returns:
            logging.Handler
        """
        backend_type = config.get("type", "console").lower()

        if backend_type == "file":
            return LogBackendFactory._create_file_handler(config)
        elif backend_type == "json":
            return LogBackendFactory._create_json_handler(config)
        elif backend_type == "console":
            return logging.StreamHandler(sys.stderr)
        else:
            raise ValueError(f"Unknown log backend type: {backend_type}")

    @staticmethod
    def _create_file_handler(config: Dict[str, Any]) -> logging.Handler:
        """Create RotatingFileHandler for local files."""
        filepath = config.get("path")
        if not filepath:
            raise ValueError("File path required for 'file' backend")

        Path(filepath).parent.mkdir(parents=True, exist_ok=True)

        return RotatingFileHandler(
            filepath,
            maxBytes=config.get("max_bytes", 10 * 1024 * 1024),
            backupCount=config.get("backup_count", 5),
            encoding=config.get("encoding", "utf-8"),
        )

    @staticmethod
    def _create_json_handler(config: Dict[str, Any]) -> logging.Handler:
        """JSON-lines handler; writes to ``path`` when given, else stderr."""
        try:
            from pythonjsonlogger import jsonlogger
        except ImportError:
            raise ImportError(
                "python-json-logger package required for json backend. "
                "Install: pip install python-json-logger"
            )

        path = config.get("path")
        if path:
            handler: logging.Handler = LogBackendFactory._create_file_handler(config)
        else:
            handler = logging.StreamHandler(sys.stderr)
        # Run-context fields stamped by RunContextFilter become JSON keys.
        handler.setFormatter(
            jsonlogger.JsonFormatter(
                "%(asctime)s %(levelname)s %(name)s %(message)s %(mode)s %(seed)s %(instance)s"
            )
        )
        return handler


class LogConfig:
    """Main logging configuration class with multi-backend support."""

    @staticmethod
    def get_config() -> Dict[str, Any]:
        """
        Get logging configuration from environment variables or defaults.

        Environment variables:
        - LOG_BACKENDS: Comma-separated list of backends (default: 'console')
          Examples: 'console', 'file', 'console,json'
        - LOG_FILE_PATH: Path for file backend
        - LOG_JSON_PATH: Path for json backend (stderr when unset)
        - LOG_LEVEL: Logging level (default: INFO)
        """
        backends_str = os.getenv("LOG_BACKENDS", "console").lower()
        backends = [b.strip() for b in backends_str.split(",") if b.strip()]
        level = os.getenv("LOG_LEVEL", "INFO").upper()

        config: Dict[str, Any] = {
            "backends": backends,
            "level": level,
        }

        if "file" in backends:
            config["file"] = {
                "path": os.getenv("LOG_FILE_PATH"),
                "max_bytes": int(os.getenv("LOG_FILE_MAX_BYTES", 10 * 1024 * 1024)),
                "backup_count": int(os.getenv("LOG_FILE_BACKUP_COUNT", 5)),
            }

        if "json" in backends:
            config["json"] = {"path": os.getenv("LOG_JSON_PATH")}

        return config

    @staticmethod
    def setup_logger(
        logger_name: str,
        log_file: Optional[str] = None,
        config: Optional[Dict[str, Any]] = None,
    ) -> logging.Logger:
        """
        Setup a logger with multiple configured backends.

        Args:
            logger_name: Name for the logger
            log_file: Optional file path (overrides config)
            config: Optional config dict (uses env vars if not provided)

        Returns:
            Configured logger instance with all backend handlers

        Example:
            # Console plus a rotating file
            export LOG_BACKENDS=console,file
            export LOG_FILE_PATH=runs/mtqa.log
            logger = LogConfig.setup_logger("mtqa_manager")
        """
        logger = logging.getLogger(logger_name)

        if config is None:
            config = LogConfig.get_config()

        level = getattr(logging, str(config.get("level", "INFO")).upper(), logging.INFO)
        logger.setLevel(level)

        # Avoid duplicate handlers
        if logger.handlers:
            return logger

        formatter = logging.Formatter(DEFAULT_FORMAT)
        backends = config.get("backends", ["console"])
        handler_count = 0
        errors = []

        for backend in backends:
            try:
                if backend == "file":
                    file_config = config.get("file", {})
                    handler = LogBackendFactory.create_handler(
                        {
                            "type": "file",
                            "path": log_file or file_config.get("path"),
                            "max_bytes": file_config.get("max_bytes", 10 * 1024 * 1024),
                            "backup_count": file_config.get("backup_count", 5),
                        }
                    )
                    handler.setFormatter(formatter)
                elif backend == "json":
                    # JSON handler keeps its own formatter
                    handler = LogBackendFactory.create_handler(
                        {"type": "json", **config.get("json", {})}
                    )
                else:
                    handler = LogBackendFactory.create_handler({"type": backend})
                    handler.setFormatter(formatter)
                handler.addFilter(ActiveContextFilter())
                logger.addHandler(handler)
                handler_count += 1
            except (ValueError, ImportError, OSError) as e:
                errors.append(f"{backend}: {e}")

        # Fallback to console if no handlers succeeded
        if handler_count == 0:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setFormatter(formatter)
            console_handler.addFilter(ActiveContextFilter())
            logger.addHandler(console_handler)
            logger.warning(f"Failed to set up log backends ({'; '.join(errors)}), using console")
        elif errors:
            logger.warning(f"Some log backends failed to initialize: {'; '.join(errors)}")

        return logger
