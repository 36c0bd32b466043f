"""Loader for the versioned prompt template files.

Prompt text is configuration, not code: each template lives in
``prompts/<name>.<version>.txt`` with ``{placeholder}`` fields.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

PROMPT_VERSION = "v1"


@lru_cache(maxsize=None)
def load_template(name: str, version: str = PROMPT_VERSION) -> str:
    ref = resources.files("scenedit.reasoning") / "prompts" / f"{name}.{version}.txt"
    return ref.read_text(encoding="utf-8")


def render(name: str, version: str = PROMPT_VERSION, **fields: str) -> str:
    return load_template(name, version).format(**fields)
