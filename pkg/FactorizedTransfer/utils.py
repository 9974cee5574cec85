from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Tuple, Union

import torch


__all__: Tuple[str, ...] = (
    "derive_seed",
    "make_generator",
    "content_id",
    "atomic_write",
    "file_id",
)

SeedPart = Union[int, str]

_SEED_MASK: int = (1 << 63) - 1


def derive_seed(*parts: SeedPart) -> int:
    """
    Derive a 63-bit seed from a master seed and any number of sub-keys.

    The result depends only on the values passed, never on call order, which is
    what lets samples and sweep cells be generated in any order or in parallel.

    >>> derive_seed(0, 1) == derive_seed(0, 1)
    True
    >>> derive_seed(0, 1) == derive_seed(1, 0)
    False

    Returns
    -------
    int
        A non-negative integer usable with ``torch.Generator.manual_seed``.
    """
    digest = hashlib.blake2b(
        "/".join(f"{type(p).__name__}:{p}" for p in parts).encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little") & _SEED_MASK


def make_generator(*parts: SeedPart) -> torch.Generator:
    """Return a CPU generator seeded with ``derive_seed(*parts)``."""
    generator = torch.Generator(device="cpu")
    generator.manual_seed(derive_seed(*parts))
    return generator


def content_id(data: bytes) -> str:
    """
    Git-style blob id of ``data``: sha1 over ``b"blob <len>\\0" + data``.

    Returns
    -------
    str
        The hex digest.
    """
    sha = hashlib.sha1()
    sha.update(b"blob %d\0" % len(data))
    sha.update(data)
    return sha.hexdigest()



def atomic_write(path: Union[str, "os.PathLike[str]"], data: bytes) -> Path:
    """Write ``data`` to a sibling temporary file, then rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)
    return path


def file_id(path: Union[str, "os.PathLike[str]"]) -> str:
    """`content_id` of a file's bytes."""
    return content_id(Path(path).read_bytes())
