"""Calibrated-constants file: plain "key = value" text, '#' comments."""

from __future__ import annotations

__all__ = ["save_constants", "load_constants"]


def save_constants(path, constants: dict, header: str | None = None) -> None:
    with open(path, "w") as fh:
        if header:
            for line in header.splitlines():
                fh.write(f"# {line}\n")
        for key in sorted(constants):
            fh.write(f"{key} = {constants[key]:.17g}\n")


def load_constants(path) -> dict:
    out = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ValueError(f"malformed constants line {raw!r}")
            out[key.strip()] = float(value)
    return out
