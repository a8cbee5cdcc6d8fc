"""
Helper utility functions for Vertical Consensus Inference.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, Union

import yaml
from loguru import logger

_SEED_MASK = (1 << 63) - 1


def derive_seed(base_seed: int, key: Union[int, str]) -> int:
    """
    Derive an independent RNG seed for a shard or chain.

    The seed is ``base_seed XOR hash(key)`` with a stable hash, so adding
    shards never changes the seeds of existing ones.

    Args:
        base_seed: Run-level seed
        key: Shard index or chain name (e.g. "full")

    Returns:
        Non-negative 63-bit seed
    """
    digest = hashlib.sha256(f"vci-stream:{key}".encode("utf-8")).digest()
    return (int(base_seed) ^ int.from_bytes(digest[:8], "big")) & _SEED_MASK


def file_sha256(path: Union[str, Path]) -> str:
    """Return the hex sha256 of a file's contents."""
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def save_yaml_config(config: Dict[str, Any], file_path: Union[str, Path]) -> bool:
    """
    Save configuration to YAML file.

    Args:
        config: Configuration dictionary
        file_path: Path to save the file

    Returns:
        True if successful, False otherwise
    """
    try:
        parent = os.path.dirname(str(file_path))
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(file_path, 'w', encoding='utf-8') as file:
            yaml.safe_dump(config, file, default_flow_style=False, indent=2, sort_keys=False)
        return True
    except Exception as e:
        logger.error(f"Error saving configuration to {file_path}: {e}")
        return False


def write_json(data: Any, file_path: Union[str, Path]) -> None:
    """Write JSON with sorted keys so reruns produce identical bytes."""
    ensure_directory(os.path.dirname(str(file_path)) or ".")
    with open(file_path, "w", encoding="utf-8") as f:
        json.dump(data, f, indent=2, sort_keys=True, default=str)
        f.write("\n")


def ensure_directory(path: Union[str, Path]) -> bool:
    """
    Ensure directory exists, create if it doesn't.

    Args:
        path: Directory path

    Returns:
        True if successful, False otherwise
    """
    try:
        os.makedirs(path, exist_ok=True)
        return True
    except Exception as e:
        logger.error(f"Error creating directory {path}: {e}")
        return False
