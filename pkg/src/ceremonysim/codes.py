"""Meeting security codes: derivation from host identity keys, formatting, parsing.

The code is the chained-hash digest of a fixed context string and the host's
public identity key, reduced to 40 decimal digits and displayed as 8 blocks
of 5 digits.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass

from .errors import CodeParseError, KeyFormatError

KEY_LEN = 32
CODE_LEN = 40
BLOCK_LEN = 5

# Fixed ASCII context hashed into every security code.
_CONTEXT = b"Zoombase-1-ClientOnly-MAC-SecurityCode"


@dataclass(frozen=True)
class IdentityKey:
    """Host's public identity verification key (opaque 32 bytes)."""

    public_bytes: bytes

    def __post_init__(self):
        if not isinstance(self.public_bytes, (bytes, bytearray)):
            raise KeyFormatError("key must be a byte sequence")
        object.__setattr__(self, "public_bytes", bytes(self.public_bytes))
        if len(self.public_bytes) != KEY_LEN:
            raise KeyFormatError(
                f"identity key must be {KEY_LEN} bytes, got {len(self.public_bytes)}"
            )

    @classmethod
    def from_hex(cls, text: str) -> "IdentityKey":
        try:
            raw = bytes.fromhex(text)
        except ValueError as exc:
            raise KeyFormatError(f"invalid hex key: {text!r}") from exc
        return cls(raw)


@dataclass(frozen=True)
class SecurityCode:
    """Ordered sequence of 40 decimal digits."""

    digits: tuple[int, ...]

    def __post_init__(self):
        digits = tuple(int(d) for d in self.digits)
        object.__setattr__(self, "digits", digits)
        if len(digits) != CODE_LEN:
            raise CodeParseError(f"code must have {CODE_LEN} digits, got {len(digits)}")
        if any(d < 0 or d > 9 for d in digits):
            raise CodeParseError("code digits must be in 0..9")

    def __str__(self) -> str:
        return format_code(self)

    def as_string(self) -> str:
        """Digits with no separators, e.g. '4000855812...'."""
        return "".join(str(d) for d in self.digits)


def derive_security_code(key: IdentityKey) -> SecurityCode:
    """Derive the 40-digit security code for a host identity key.

    Chains SHA-256 over the fixed context and the key bytes, then maps the
    digest to digits as big-endian integer mod 10**40, zero-padded. Pure and
    deterministic.
    """
    digest = hashlib.sha256(
        hashlib.sha256(_CONTEXT).digest()
        + hashlib.sha256(key.public_bytes).digest()
    ).digest()
    value = int.from_bytes(digest, "big") % 10**CODE_LEN
    text = f"{value:0{CODE_LEN}d}"
    return SecurityCode(tuple(int(c) for c in text))


def format_code(code: SecurityCode) -> str:
    """Render a code as 8 space-separated blocks of 5 digits."""
    text = code.as_string()
    blocks = [text[i : i + BLOCK_LEN] for i in range(0, CODE_LEN, BLOCK_LEN)]
    return " ".join(blocks)


def parse_code(text: str) -> SecurityCode:
    """Parse a displayed code; whitespace between digits is ignored.

    Inverse of :func:`format_code`. Raises CodeParseError on a wrong digit
    count or any non-digit character.
    """
    stripped = "".join(text.split())
    if len(stripped) != CODE_LEN:
        raise CodeParseError(
            f"expected {CODE_LEN} digits, got {len(stripped)} in {text!r}"
        )
    if not stripped.isdigit() or not stripped.isascii():
        raise CodeParseError(f"non-digit character in {text!r}")
    return SecurityCode(tuple(int(c) for c in stripped))


def digit_multiset(code: SecurityCode) -> dict[int, int]:
    """Count how often each digit 0..9 appears in the code."""
    counts = Counter(code.digits)
    return {d: counts.get(d, 0) for d in range(10)}


def has_all_digits(code: SecurityCode) -> bool:
    """True when every digit 0..9 occurs at least once."""
    return len(set(code.digits)) == 10
