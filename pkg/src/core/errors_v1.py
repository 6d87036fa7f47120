#!/usr/bin/env python3
"""
Errors v1 - Exception hierarchy for the RL load testing toolkit
Every error can carry module / episode / step context for diagnostics
"""

from typing import Optional


class ReloadError(Exception):
    """Base error; context fields are rendered into the message"""

    def __init__(self, message: str, module: Optional[str] = None,
                 episode: Optional[int] = None, step: Optional[int] = None):
        super().__init__(message)
        self.message = message
        self.module = module
        self.episode = episode
        self.step = step

    def with_context(self, module: Optional[str] = None, episode: Optional[int] = None,
                     step: Optional[int] = None) -> 'ReloadError':
        """Fill in missing context fields and return self for re-raising"""
        if self.module is None:
            self.module = module
        if self.episode is None:
            self.episode = episode
        if self.step is None:
            self.step = step
        return self

    def context_string(self) -> str:
        return (f"module={self.module or '-'} "
                f"episode={'-' if self.episode is None else self.episode} "
                f"step={'-' if self.step is None else self.step}")

    def __str__(self) -> str:
        if self.module is None and self.episode is None and self.step is None:
            return self.message
        return f"{self.message} [{self.context_string()}]"


class InvalidValue(ReloadError, ValueError):
    """A value type was constructed in violation of its invariants"""


class EmptyWorkload(ReloadError):
    """Workload with zero total users was executed"""


class MissingScript(ReloadError):
    """A transaction carries load but has no transaction script"""


class ConnectFailure(ReloadError):
    """System under test could not be reached"""


class CatalogMismatch(ReloadError):
    """Stored policy was learned against a different transaction catalog"""


class VersionMismatch(ReloadError):
    """Persisted snapshot format version is not supported"""


class IoFailure(ReloadError):
    """Reading or writing an artifact failed"""


class ArchMismatch(ReloadError):
    """Two networks do not share the same layer sizes"""


class ZeroReference(ReloadError):
    """Cost saving requested against a non-positive reference mean"""


class ConfigInvalid(ReloadError):
    """Run configuration is missing keys or internally inconsistent"""
