"""Q-table checkpoints: JSON payload, optional compression, SHA-256 checksum."""

import gzip
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

from ssdlab.core.config import settings
from ssdlab.core.errors import ConfigurationError
from ssdlab.core.learning import QTable

logger = logging.getLogger(__name__)

EXTENSIONS = {"none": "", "gzip": ".gz", "zstd": ".zst"}


@dataclass
class CheckpointData:
    """Serialized checkpoint container."""

    content: bytes
    size_original: int
    size_compressed: int
    compression: str
    checksum: str


def calculate_checksum(content: bytes) -> str:
    return hashlib.sha256(content).hexdigest()


def compress(content: bytes, compression: str = "gzip") -> CheckpointData:
    """Compress a payload; the checksum is taken over the uncompressed bytes."""
    checksum = calculate_checksum(content)
    if compression == "none":
        compressed = content
    elif compression == "gzip":
        # fixed mtime keeps repeated runs byte-identical
        compressed = gzip.compress(content, mtime=0)
    elif compression == "zstd":
        try:
            import zstandard as zstd
        except ImportError:
            raise ConfigurationError("zstandard library not available") from None
        compressed = zstd.ZstdCompressor().compress(content)
    else:
        raise ConfigurationError(f"Unsupported compression: {compression}")
    return CheckpointData(
        content=compressed,
        size_original=len(content),
        size_compressed=len(compressed),
        compression=compression,
        checksum=checksum,
    )


def decompress(data: CheckpointData) -> bytes:
    if data.compression == "none":
        content = data.content
    elif data.compression == "gzip":
        content = gzip.decompress(data.content)
    elif data.compression == "zstd":
        try:
            import zstandard as zstd
        except ImportError:
            raise ConfigurationError("zstandard library not available") from None
        content = zstd.ZstdDecompressor().decompress(data.content)
    else:
        raise ConfigurationError(f"Unsupported compression: {data.compression}")
    if calculate_checksum(content) != data.checksum:
        raise ValueError("checkpoint checksum mismatch")
    return content


def checkpoint_path(directory: Union[str, Path], seed: int, compression: str) -> Path:
    return Path(directory) / f"checkpoint_seed{seed}.json{EXTENSIONS[compression]}"


def save_checkpoint(
    q_tables: Dict[str, QTable],
    path: Union[str, Path],
    compression: Optional[str] = None,
) -> CheckpointData:
    """Write Q-tables keyed by agent; a `<path>.sha256` sidecar holds the checksum."""
    compression = compression or settings.checkpoint_compression
    payload = json.dumps(
        {agent_id: table.to_dict() for agent_id, table in q_tables.items()},
        sort_keys=True,
    ).encode()
    data = compress(payload, compression)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data.content)
    Path(f"{path}.sha256").write_text(f"{data.checksum}  {compression}\n")
    logger.debug(
        "checkpoint %s: %d -> %d bytes (%s)",
        path,
        data.size_original,
        data.size_compressed,
        compression,
    )
    return data


def load_checkpoint(path: Union[str, Path]) -> Dict[str, QTable]:
    """Read Q-tables back, verifying the checksum."""
    path = Path(path)
    checksum, compression = Path(f"{path}.sha256").read_text().split()
    content = path.read_bytes()
    data = CheckpointData(
        content=content,
        size_original=0,
        size_compressed=len(content),
        compression=compression,
        checksum=checksum,
    )
    raw = json.loads(decompress(data))
    return {agent_id: QTable.from_dict(table) for agent_id, table in raw.items()}
