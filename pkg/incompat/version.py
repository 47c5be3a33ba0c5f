"""Build and runtime information printed by ``incompat version``."""

import platform
import subprocess
from functools import cache
from pathlib import Path
from typing import Self

import numpy as np
import pydantic
import scipy

from incompat import __version__
from incompat.model import RecordModel

SHA_FILE = Path("GIT_HEAD")


@cache
def source_revision() -> str:
    """Short git revision of the source tree, from ``GIT_HEAD`` in packaged builds."""
    if SHA_FILE.exists():
        return SHA_FILE.read_text(encoding="utf-8").strip()[:8]
    try:
        output = subprocess.check_output(["git", "rev-parse", "--short=8", "HEAD"], stderr=subprocess.DEVNULL)
    except (OSError, subprocess.CalledProcessError):
        return "unknown"
    return output.decode().strip()


class VersionInfo(RecordModel):
    incompat: str
    python: str
    implementation: str
    numpy: str
    scipy: str
    pydantic: str
    system: str
    revision: str

    @classmethod
    def collect(cls) -> Self:
        return cls(
            incompat=__version__,
            python=platform.python_version(),
            implementation=platform.python_implementation(),
            numpy=np.__version__,
            scipy=scipy.__version__,
            pydantic=pydantic.VERSION,
            system=platform.system(),
            revision=source_revision(),
        )

    def text(self) -> str:
        return ", ".join(
            [
                f"incompat {self.incompat} ({self.revision})",
                f"with {self.implementation} {self.python}",
                f"numpy {self.numpy}",
                f"scipy {self.scipy}",
                f"pydantic {self.pydantic}",
                f"on {self.system}",
            ]
        )

    def __str__(self) -> str:
        return self.text()
