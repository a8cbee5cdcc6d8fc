"""
Data ingestion, vertical splitting and partition/posterior file I/O.
"""
import os
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
import pandas as pd
from loguru import logger

from src.core.config import LayoutKind, ShardLayoutConfig
from src.core.exceptions import ConfigError, DataIOError, InvalidArgumentError
from src.partitions.partition import Partition, read_partitions
from src.partitions.posterior import EmpiricalPartitionPosterior
from src.utils.helpers import ensure_directory

PathLike = Union[str, Path]


def load_csv(path: PathLike) -> np.ndarray:
    """Load a headerless numeric CSV, one row per observation."""
    try:
        frame = pd.read_csv(path, header=None)
    except FileNotFoundError:
        raise DataIOError(f"Data file not found: {path}")
    except (pd.errors.ParserError, pd.errors.EmptyDataError, UnicodeDecodeError) as e:
        raise DataIOError(f"Could not parse data file {path}: {e}")
    try:
        data = frame.to_numpy(dtype=float)
    except ValueError as e:
        raise DataIOError(f"Data file {path} contains non-numeric entries: {e}")
    logger.info(f"Loaded {data.shape[0]}x{data.shape[1]} matrix from {path}")
    return data


def save_csv(data: np.ndarray, path: PathLike) -> None:
    ensure_directory(os.path.dirname(str(path)) or ".")
    pd.DataFrame(np.asarray(data)).to_csv(path, header=False, index=False)


def shard_dimensions(p: int, layout: ShardLayoutConfig) -> List[List[int]]:
    """Column indices of every shard for a p-column matrix."""
    if layout.kind == LayoutKind.EXPLICIT:
        dims = [list(d) for d in layout.dims]
    elif layout.kind == LayoutKind.CONTIGUOUS:
        dims = [list(map(int, block)) for block in np.array_split(np.arange(p), layout.n_shards)]
    else:
        dims = [list(range(k, p, layout.n_shards)) for k in range(layout.n_shards)]
    for k, d in enumerate(dims):
        if not d:
            raise ConfigError(f"shard {k} has no dimensions (p={p})")
        bad = [i for i in d if i < 0 or i >= p]
        if bad:
            raise ConfigError(f"shard {k} references column {bad[0]} outside [0, {p})")
    return dims


def split(data: np.ndarray, layout: ShardLayoutConfig) -> List[np.ndarray]:
    """Vertical shards: selected columns, all rows. Overlapping shards are allowed."""
    x = np.asarray(data)
    if x.ndim != 2:
        raise InvalidArgumentError("data must be a 2-d matrix")
    return [x[:, d] for d in shard_dimensions(x.shape[1], layout)]


def write_partitions(partitions: Sequence[Partition], path: PathLike) -> None:
    ensure_directory(os.path.dirname(str(path)) or ".")
    with open(path, "w", encoding="utf-8") as f:
        for p in partitions:
            f.write(p.to_line() + "\n")


def read_partitions_file(path: PathLike) -> List[Partition]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except FileNotFoundError:
        raise DataIOError(f"Partition file not found: {path}")
    parts = list(read_partitions(lines))
    if not parts:
        raise DataIOError(f"Partition file {path} is empty")
    return parts


def format_posterior(post: EmpiricalPartitionPosterior) -> str:
    lines = [f"n={post.n}"]
    lines.extend(f"{w:.17g};{a.to_line()}" for a, w in zip(post.atoms, post.weights))
    return "\n".join(lines) + "\n"


def write_posterior(post: EmpiricalPartitionPosterior, path: PathLike) -> None:
    """Header ``n=<n>`` then one ``<weight>;<labels>`` line per atom."""
    ensure_directory(os.path.dirname(str(path)) or ".")
    with open(path, "w", encoding="utf-8") as f:
        f.write(format_posterior(post))


def parse_posterior(lines: Sequence[str], source: str = "<posterior>") -> EmpiricalPartitionPosterior:
    """Parse the posterior format; weights may be unnormalized."""
    lines = [line.strip() for line in lines if line.strip()]
    if not lines or not lines[0].startswith("n="):
        raise DataIOError(f"{source}: missing 'n=<n>' header")
    try:
        n = int(lines[0][2:])
    except ValueError:
        raise DataIOError(f"{source}: bad header {lines[0]!r}")
    atoms, weights = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        weight, sep, labels = line.partition(";")
        if not sep:
            raise DataIOError(f"{source} line {lineno}: expected '<weight>;<labels>'")
        try:
            weights.append(float(weight))
            (atom,) = read_partitions([labels])
        except (ValueError, InvalidArgumentError) as e:
            raise DataIOError(f"{source} line {lineno}: {e}")
        if atom.n != n:
            raise DataIOError(f"{source} line {lineno}: {atom.n} labels, header says n={n}")
        atoms.append(atom)
    if not atoms:
        raise DataIOError(f"{source}: no atoms")
    try:
        return EmpiricalPartitionPosterior.from_samples(atoms, weights)
    except InvalidArgumentError as e:
        raise DataIOError(f"{source}: {e}")


def read_posterior(path: PathLike) -> EmpiricalPartitionPosterior:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except FileNotFoundError:
        raise DataIOError(f"Posterior file not found: {path}")
    return parse_posterior(lines, source=str(path))
