"""Toolchain configuration."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path

COMPILER_ENV = "CLBFORGE_CC"


@dataclass
class Config:
    compiler: str = "cc {flags} -o {output} {inputs}"
    compile_flags: list[str] = field(default_factory=lambda: ["-O0"])
    seed: int = 0
    min_key_bits: int = 0
    min_region_bytes: int = 16
    min_string_len: int = 8
    detection_exit_status: int = 42
    timeout_seconds: float = 10.0
    include_globs: list[str] = field(default_factory=lambda: ["**/*.c"])
    exclude_globs: list[str] = field(default_factory=list)
    project_headers: list[str] = field(default_factory=list)

    def __post_init__(self):
        for name in ("seed", "min_key_bits", "min_region_bytes", "min_string_len",
                     "detection_exit_status", "timeout_seconds"):
            if getattr(self, name) < 0:
                raise ValueError(f"config field {name} must be >= 0")
        if "{inputs}" not in self.compiler or "{output}" not in self.compiler:
            raise ValueError("compiler template must contain {inputs} and {output}")


def load_config(path: str | os.PathLike | None = None, seed: int | None = None) -> Config:
    """Config from an optional JSON file, the compiler env override, and flags."""
    values = {}
    if path is not None:
        values = json.loads(Path(path).read_text(encoding="utf-8"))
        unknown = set(values) - set(Config.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config fields: {', '.join(sorted(unknown))}")
    cfg = Config(**values)
    env_cc = os.environ.get(COMPILER_ENV)
    if env_cc:
        cfg.compiler = env_cc
        cfg.__post_init__()
    if seed is not None:
        cfg.seed = seed
    return cfg
