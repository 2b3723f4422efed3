"""Utility functions shared across hin-embed."""

import hashlib
from collections.abc import Iterator
from pathlib import Path
from typing import Union

import numpy as np

PathLike = Union[str, Path]


def iter_tsv(path: PathLike) -> Iterator[tuple[int, list[str]]]:
    """
    Yield (line number, fields) for every data line of a UTF-8 TSV file.

    Blank lines and lines starting with ``#`` are skipped.

    Raises:
        FileNotFoundError: If the file does not exist
    """
    with open(path, encoding="utf-8") as f:
        for line_number, line in enumerate(f, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            yield line_number, line.split("\t")


def format_vector(vector: np.ndarray) -> str:
    """Tab-joined floats with enough digits to be stable across runs."""
    return "\t".join(format(float(x), ".10g") for x in vector)


def file_digest(path: PathLike) -> str:
    """SHA-256 hex digest of a file's bytes."""
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def safe_create_directory(path: PathLike) -> Path:
    """Create a directory (and parents) if missing and return it as a Path."""
    directory = Path(path)
    if directory.exists() and not directory.is_dir():
        raise NotADirectoryError(f"Not a directory: {directory}")
    directory.mkdir(parents=True, exist_ok=True)
    return directory
