"""
Custom logging filters for the experiment harness.
"""
import logging
from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator, Optional

CONTEXT_FIELDS = ("mode", "seed", "instance")

# 当前线程正在运行的模式（线程池中每个模式各自设置）
_active_context: ContextVar[Optional["RunContextFilter"]] = ContextVar(
    "mtqa_run_context", default=None
)


class RunContextFilter(logging.Filter):
    """Stamp run identity (mode + seed + instance) onto every record.

    Records that already carry a field keep it, so an inner filter with a
    specific ``instance`` wins over an outer mode-level one.
    """

    def __init__(self, mode: str, seed: int, instance: Optional[str] = None):
        """
        Initialize filter with the run identity.

        Args:
            mode: Experiment mode (e.g. "MTQA-isolated", "PQA")
            seed: Seed driving this run
            instance: Instance key such as "mvcp-n6-s0#0", if any
        """
        super().__init__()
        self.mode = mode
        self.seed = seed
        self.instance = instance

    def filter(self, record: logging.LogRecord) -> bool:
        # 已有字段保持不变
        if not hasattr(record, "mode"):
            record.mode = self.mode
        if not hasattr(record, "seed"):
            record.seed = self.seed
        if getattr(record, "instance", None) is None:
            record.instance = self.instance
        return True

    @contextmanager
    def active(self) -> Iterator["RunContextFilter"]:
        """Expose this context to ``ActiveContextFilter`` for the current thread."""
        token = _active_context.set(self)
        try:
            yield self
        finally:
            _active_context.reset(token)

    def describe(self) -> str:
        suffix = f" instance={self.instance}" if self.instance else ""
        return f"mode={self.mode} seed={self.seed}{suffix}"


class ActiveContextFilter(logging.Filter):
    """Handler-level filter for records from any module.

    Stamps the run context active in the emitting thread; outside a run the
    context fields are set to None.
    """

    def filter(self, record: logging.LogRecord) -> bool:
        context = _active_context.get()
        if context is not None:
            return context.filter(record)
        # 不在任何模式中 → 字段为空（系统日志）
        for key in CONTEXT_FIELDS:
            if not hasattr(record, key):
                setattr(record, key, None)
        return True
