"""Backend configuration: per-service endpoints or fixture files, plus limits.

Read from a TOML or JSON file; ``SCENEDIT_<SERVICE>_ENDPOINT`` and
``SCENEDIT_AUTH_TOKEN`` environment variables override file values.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import ConfigError

try:
    import tomllib
except ImportError:  # python < 3.11
    import tomli as tomllib

SERVICES = ("segment", "detect", "depth", "inpaint", "embed", "chat")

_TOP_KEYS = {"timeout", "retry_count", "auth_token", "preservation",
             "preservation_tolerance", "max_image_bytes", "services"}
_SERVICE_KEYS = {"kind", "endpoint", "path", "options"}


@dataclass(frozen=True)
class ServiceConfig:
    """One backend service: an HTTP endpoint or an in-process fixture."""

    kind: str = "http"  # "http" | "fixture"
    endpoint: str = ""
    path: str = ""  # fixture description file
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ("http", "fixture"):
            raise ConfigError(f"service kind must be http or fixture, got {self.kind!r}")
        if self.kind == "http" and not self.endpoint:
            raise ConfigError("http service needs an endpoint")
        if self.kind == "fixture" and not self.path:
            raise ConfigError("fixture service needs a path")


@dataclass(frozen=True)
class BackendConfig:
    services: dict = field(default_factory=dict)  # service name -> ServiceConfig
    timeout: float = 30.0
    retry_count: int = 2
    auth_token: str | None = None
    preservation: str = "strict"  # "strict" | "lenient"
    preservation_tolerance: int = 2  # per-channel, 0..255 units (lenient mode)
    max_image_bytes: int = 16 * 2**20

    def __post_init__(self):
        if self.timeout <= 0:
            raise ConfigError("timeout must be > 0")
        if not 0 <= self.retry_count <= 5:
            raise ConfigError("retry_count must be in 0..5")
        if self.preservation not in ("strict", "lenient"):
            raise ConfigError(f"preservation must be strict or lenient, got {self.preservation!r}")
        if self.preservation_tolerance < 0:
            raise ConfigError("preservation_tolerance must be >= 0")
        for name in self.services:
            if name not in SERVICES:
                raise ConfigError(f"unknown service {name!r}")


def _load_raw(path: Path) -> dict:
    raw = path.read_bytes()
    if path.suffix == ".toml":
        return tomllib.loads(raw.decode("utf-8"))
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        # allow .conf/.cfg TOML without the extension
        try:
            return tomllib.loads(raw.decode("utf-8"))
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: neither valid JSON nor TOML ({exc})") from exc


def load_backend_config(path: str | Path | None, base_dir: Path | None = None) -> BackendConfig:
    """Load a backend config file and apply environment overrides.

    Relative fixture paths resolve against the config file's directory.
    """
    doc: dict = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise ConfigError(f"backend config {path} not found")
        doc = _load_raw(path)
        base_dir = base_dir or path.parent
    base_dir = base_dir or Path.cwd()

    if not isinstance(doc, dict):
        raise ConfigError("backend config must be a table/object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown backend config key {sorted(unknown)[0]!r}")

    services: dict[str, ServiceConfig] = {}
    for name, entry in (doc.get("services") or {}).items():
        if name not in SERVICES:
            raise ConfigError(f"unknown service {name!r}")
        if not isinstance(entry, dict):
            raise ConfigError(f"service {name} must be a table/object")
        unknown = set(entry) - _SERVICE_KEYS
        if unknown:
            raise ConfigError(f"unknown key {sorted(unknown)[0]!r} in service {name}")
        fixture_path = entry.get("path", "")
        if fixture_path and not os.path.isabs(fixture_path):
            fixture_path = str(base_dir / fixture_path)
        services[name] = ServiceConfig(
            kind=entry.get("kind", "http"),
            endpoint=entry.get("endpoint", ""),
            path=fixture_path,
            options=dict(entry.get("options", {})),
        )

    for name in SERVICES:
        override = os.environ.get(f"SCENEDIT_{name.upper()}_ENDPOINT")
        if override:
            services[name] = ServiceConfig(kind="http", endpoint=override)

    token = os.environ.get("SCENEDIT_AUTH_TOKEN", doc.get("auth_token"))

    return BackendConfig(
        services=services,
        timeout=float(doc.get("timeout", 30.0)),
        retry_count=int(doc.get("retry_count", 2)),
        auth_token=token,
        preservation=doc.get("preservation", "strict"),
        preservation_tolerance=int(doc.get("preservation_tolerance", 2)),
        max_image_bytes=int(doc.get("max_image_bytes", 16 * 2**20)),
    )
