"""Defense pipeline configuration and source merging (flags > env > file > defaults)."""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Mapping

VARIANT_REGENERATED = "replace-with-regenerated"
VARIANT_GRAY = "replace-with-gray"
VARIANTS = (VARIANT_REGENERATED, VARIANT_GRAY)

BACKEND_NATIVE = "native"
BACKEND_REMOTE = "remote"
BACKEND_IDENTITY = "identity-stub"
BACKEND_CONSTANT = "constant-stub"
BACKENDS = (BACKEND_NATIVE, BACKEND_REMOTE, BACKEND_IDENTITY, BACKEND_CONSTANT)

REMOTE_MODES = ("diffusion", "stub-blur", "stub-identity")

#: Environment variable that overrides the remote backend URL (beaten only by
#: an explicit command-line flag).
ENV_BACKEND_URL = "PATCHRECT_BACKEND_URL"


@dataclass(frozen=True)
class DefenseConfig:
    """Every knob of the defense pipeline, immutable and hashable to JSON."""

    n_grids: int = 32
    steps: int = 5
    canonical_size: int = 512
    blur_kernel: int = 9
    degeneracy_epsilon: float = 1e-6
    variant: str = VARIANT_REGENERATED
    rectification_enabled: bool = True
    backend: str = BACKEND_NATIVE
    backend_url: str | None = None
    backend_timeout: float = 60.0
    remote_mode: str = "diffusion"
    constant_value: float = 0.5
    seed: int | None = None
    workers: int = 1

    def __post_init__(self) -> None:
        if self.n_grids < 1:
            raise ValueError(f"n_grids must be >= 1, got {self.n_grids}")
        if self.canonical_size < 1:
            raise ValueError(f"canonical_size must be >= 1, got {self.canonical_size}")
        if self.n_grids > self.canonical_size:
            raise ValueError(
                f"n_grids ({self.n_grids}) cannot exceed canonical_size ({self.canonical_size})"
            )
        if self.steps < 1:
            raise ValueError(f"steps must be >= 1, got {self.steps}")
        if self.blur_kernel < 1 or self.blur_kernel % 2 == 0:
            raise ValueError(f"blur_kernel must be odd and >= 1, got {self.blur_kernel}")
        if self.degeneracy_epsilon < 0:
            raise ValueError("degeneracy_epsilon must be nonnegative")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        if self.backend == BACKEND_REMOTE and not self.backend_url:
            raise ValueError("remote backend requires backend_url (or the "
                             f"{ENV_BACKEND_URL} environment variable)")
        if self.remote_mode not in REMOTE_MODES:
            raise ValueError(f"remote_mode must be one of {REMOTE_MODES}, got {self.remote_mode!r}")
        if not 0.0 <= self.constant_value <= 1.0:
            raise ValueError("constant_value must lie in [0, 1]")
        if self.backend_timeout <= 0:
            raise ValueError("backend_timeout must be positive")
        if self.workers < 1:
            raise ValueError(f"workers must be >= 1, got {self.workers}")

    def to_dict(self) -> dict[str, Any]:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    def config_hash(self) -> str:
        """SHA-256 over the canonical JSON form; stable across field order."""
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    @classmethod
    def from_sources(
        cls,
        file_values: Mapping[str, Any] | None = None,
        overrides: Mapping[str, Any] | None = None,
        env: Mapping[str, str] | None = None,
    ) -> "DefenseConfig":
        """Merge config sources with precedence overrides > env > file > defaults.

        ``overrides`` entries whose value is None are treated as unset.
        Unknown keys in either source raise ValueError.
        """
        known = {f.name for f in fields(cls)}
        merged: dict[str, Any] = {}
        for source_name, source in (("config file", file_values), ("overrides", overrides)):
            if source:
                unknown = sorted(set(source) - known)
                if unknown:
                    raise ValueError(f"unknown {source_name} keys: {', '.join(unknown)}")
        if file_values:
            merged.update(file_values)
        env = os.environ if env is None else env
        if env.get(ENV_BACKEND_URL):
            merged["backend_url"] = env[ENV_BACKEND_URL]
        if overrides:
            merged.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**merged)


def load_config_file(path) -> dict[str, Any]:
    """Read a JSON config file into a plain dict (validated on merge)."""
    p = Path(path)
    if not p.is_file():
        raise FileNotFoundError(f"no such config file: {p}")
    try:
        data = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValueError(f"config file {p} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ValueError(f"config file {p} must contain a JSON object")
    return data
