import hashlib


def derive_seed(*parts: object) -> int:
    """Stable 32-bit seed derived from any sequence of printable parts

    Used for per-trial and per-stage seeds so that results never depend on
    evaluation scheduling.
    """
    payload: str = "/".join(str(p) for p in parts)
    digest: bytes = hashlib.sha256(payload.encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "little")
