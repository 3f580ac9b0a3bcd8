"""INI configuration for LLM backends and the model sidecar.

Example:

    [backend.gpt]
    base_url = https://api.example.com/v1
    model_id = gpt-4o-mini
    context_limit_tokens = 128000
    supports_json_response = true

    [modelserve]
    base_url = http://127.0.0.1:8617

API keys are never stored in the file; each backend reads the environment
variable named after it (``GPT_API_KEY`` for ``[backend.gpt]``).
"""

from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass
from typing import Optional

from .llm import HttpChatBackend


@dataclass(frozen=True)
class BackendSettings:
    name: str
    base_url: str
    model_id: str
    context_limit_tokens: int = 128000
    supports_json_response: bool = False

    @property
    def api_key_env(self) -> str:
        return re.sub(r"[^A-Za-z0-9]", "_", self.name).upper() + "_API_KEY"

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)

    def build(self) -> HttpChatBackend:
        return HttpChatBackend(
            descriptor=self.name,
            base_url=self.base_url,
            api_key=self.api_key(),
            supports_json_response=self.supports_json_response,
        )


@dataclass
class AppConfig:
    backends: dict[str, BackendSettings]
    modelserve_url: Optional[str] = None

    def backend(self, name: str) -> BackendSettings:
        if name not in self.backends:
            raise KeyError(f"backend {name!r} not configured "
                           f"(have: {sorted(self.backends) or 'none'})")
        return self.backends[name]


def load_config(path) -> AppConfig:
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise FileNotFoundError(f"config file not found: {path}")
    backends: dict[str, BackendSettings] = {}
    modelserve_url = None
    for section in parser.sections():
        if section == "modelserve":
            modelserve_url = parser.get(section, "base_url")
        elif section.startswith("backend."):
            name = section.split(".", 1)[1]
            backends[name] = BackendSettings(
                name=name,
                base_url=parser.get(section, "base_url"),
                model_id=parser.get(section, "model_id"),
                context_limit_tokens=parser.getint(section, "context_limit_tokens",
                                                   fallback=128000),
                supports_json_response=parser.getboolean(section, "supports_json_response",
                                                         fallback=False),
            )
    return AppConfig(backends=backends, modelserve_url=modelserve_url)
