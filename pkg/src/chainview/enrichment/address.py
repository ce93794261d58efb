"""Address extraction from output scripts (P2PKH, P2SH, P2PK) and Base58Check."""
from __future__ import annotations

import hashlib
from typing import Optional, Tuple

from Crypto.Hash import RIPEMD160

from ..model import double_sha256

B58_ALPHABET = "123456789ABCDEFGHJKLMNPQRSTUVWXYZabcdefghijkmnopqrstuvwxyz"
_B58_INDEX = {c: i for i, c in enumerate(B58_ALPHABET)}

OP_DUP = 0x76
OP_HASH160 = 0xA9
OP_EQUAL = 0x87
OP_EQUALVERIFY = 0x88
OP_CHECKSIG = 0xAC

# (pubkey-hash version, script-hash version)
ADDRESS_VERSIONS = {
    "mainnet": (0x00, 0x05),
    "testnet": (0x6F, 0xC4),
    "regtest": (0x6F, 0xC4),
}


def hash160(data: bytes) -> bytes:
    return RIPEMD160.new(hashlib.sha256(data).digest()).digest()


def b58encode(data: bytes) -> str:
    n = int.from_bytes(data, "big")
    out = []
    while n:
        n, rem = divmod(n, 58)
        out.append(B58_ALPHABET[rem])
    pad = len(data) - len(data.lstrip(b"\x00"))
    return "1" * pad + "".join(reversed(out))


def b58decode(text: str) -> bytes:
    n = 0
    for ch in text:
        try:
            n = n * 58 + _B58_INDEX[ch]
        except KeyError:
            raise ValueError(f"invalid base58 character {ch!r}") from None
    body = n.to_bytes((n.bit_length() + 7) // 8, "big")
    pad = len(text) - len(text.lstrip("1"))
    return b"\x00" * pad + body


def base58check_encode(version: int, payload: bytes) -> str:
    raw = bytes((version,)) + payload
    return b58encode(raw + double_sha256(raw)[:4])


def base58check_decode(text: str) -> Tuple[int, bytes]:
    raw = b58decode(text)
    if len(raw) < 5:
        raise ValueError("base58check string too short")
    body, checksum = raw[:-4], raw[-4:]
    if double_sha256(body)[:4] != checksum:
        raise ValueError("base58check checksum mismatch")
    return body[0], body[1:]


def address_of(script_pubkey: bytes, network: str = "mainnet") -> Optional[str]:
    """Address able to redeem the output, or None for non-standard scripts.

    Witness programs are not recognised.
    """
    s = script_pubkey
    pkh_version, sh_version = ADDRESS_VERSIONS[network]
    n = len(s)
    if (n == 25 and s[0] == OP_DUP and s[1] == OP_HASH160 and s[2] == 20
            and s[23] == OP_EQUALVERIFY and s[24] == OP_CHECKSIG):
        return base58check_encode(pkh_version, s[3:23])
    if n == 23 and s[0] == OP_HASH160 and s[1] == 20 and s[22] == OP_EQUAL:
        return base58check_encode(sh_version, s[2:22])
    if n in (35, 67) and s[0] == n - 2 and s[-1] == OP_CHECKSIG:
        pubkey = s[1:-1]
        if pubkey[0] in ((2, 3) if n == 35 else (4,)):
            return base58check_encode(pkh_version, hash160(pubkey))
    return None


def p2pkh_script(pubkey_hash: bytes) -> bytes:
    return bytes((OP_DUP, OP_HASH160, 20)) + pubkey_hash + bytes((OP_EQUALVERIFY, OP_CHECKSIG))


def p2sh_script(script_hash: bytes) -> bytes:
    return bytes((OP_HASH160, 20)) + script_hash + bytes((OP_EQUAL,))


def p2pk_script(pubkey: bytes) -> bytes:
    return bytes((len(pubkey),)) + pubkey + bytes((OP_CHECKSIG,))
