#!/usr/bin/env python3
"""Reference values for test_crypto_suite.cpp and test_ratchet.cpp.

Everything here is computed with Python's hashlib/hmac, plain integer EC
arithmetic, and the `cryptography` package. None of it shares code with the
C++ implementation.
"""
import hashlib
import hmac

from cryptography.hazmat.primitives.asymmetric import ec
from cryptography.hazmat.primitives.ciphers.aead import AESGCM


def hkdf384(salt, ikm, info, length):
    if not salt:
        salt = bytes(48)
    prk = hmac.new(salt, ikm, hashlib.sha384).digest()
    out, block, i = b"", b"", 1
    while len(out) < length:
        block = hmac.new(prk, block + info + bytes([i]), hashlib.sha384).digest()
        out += block
        i += 1
    return out[:length]


print("sha256('')", hashlib.sha256(b"").hexdigest())
print("sha256('abc')", hashlib.sha256(b"abc").hexdigest())

# HKDF-SHA384 with the RFC 5869 test-case-1 inputs.
ikm = bytes([0x0B]) * 22
salt = bytes(range(0x00, 0x0D))
info = bytes(range(0xF0, 0xFA))
print("hkdf384(rfc5869-tc1 inputs, 42)", hkdf384(salt, ikm, info, 42).hex())
print("hkdf384(empty salt, ikm=0b*22, info='', 42)", hkdf384(b"", ikm, b"", 42).hex())
print("hkdf384(salt='', ikm=11*32, 'chain', 32)", hkdf384(b"", bytes([0x11]) * 32, b"chain", 32).hex())
print("hkdf384(salt='', ikm=11*32, 'model', 32)", hkdf384(b"", bytes([0x11]) * 32, b"model", 32).hex())

# Ratchet root derivation: RK_1 = HKDF(salt=0x00.., ikm=ss_k||ss_e, 'pqbfl-root').
ss_k = bytes([0xA1]) * 32
ss_e = bytes([0xB2]) * 32
okm = hkdf384(bytes(48), ss_k + ss_e, b"pqbfl-root", 64)
print("init_root RK_1", okm[:32].hex())
print("init_root CK_0", okm[32:].hex())
k1 = hkdf384(b"", okm[32:], b"model", 32)
print("first model key K_1,1", k1.hex())

# P-256 ECDH, RFC 5903 section 8.1 vector (checked here with `cryptography`).
i = int("C88F01F510D9AC3F70A292DAA2316DE544E9AAB8AFE84049C62A9C57862D1433", 16)
r = int("C6EF9C5D78AE012A011164ACB397CE2088685D8F06BF9BE0B283AB46476BEE53", 16)
ki = ec.derive_private_key(i, ec.SECP256R1())
kr = ec.derive_private_key(r, ec.SECP256R1())
print("p256 gi", ki.public_key().public_numbers().x.to_bytes(32, "big").hex(),
      ki.public_key().public_numbers().y.to_bytes(32, "big").hex())
print("p256 gr", kr.public_key().public_numbers().x.to_bytes(32, "big").hex(),
      kr.public_key().public_numbers().y.to_bytes(32, "big").hex())
print("p256 shared", ki.exchange(ec.ECDH(), kr.public_key()).hex())

# secp256k1 ECDSA with RFC 6979 nonces over SHA-256, low-s normalised.
P = 2**256 - 2**32 - 977
N = 0xFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFFEBAAEDCE6AF48A03BBFD25E8CD0364141
G = (0x79BE667EF9DCBBAC55A06295CE870B07029BFCDB2DCE28D959F2815B16F81798,
     0x483ADA7726A3C4655DA4FBFC0E1108A8FD17B448A68554199C47D08FFB10D4B8)


def add(p, q):
    if p is None:
        return q
    if q is None:
        return p
    if p[0] == q[0] and (p[1] + q[1]) % P == 0:
        return None
    if p == q:
        lam = 3 * p[0] * p[0] * pow(2 * p[1], -1, P) % P
    else:
        lam = (q[1] - p[1]) * pow(q[0] - p[0], -1, P) % P
    x = (lam * lam - p[0] - q[0]) % P
    return x, (lam * (p[0] - x) - p[1]) % P


def mul(k, p):
    acc = None
    while k:
        if k & 1:
            acc = add(acc, p)
        p = add(p, p)
        k >>= 1
    return acc


def rfc6979(x, h1):
    xb = x.to_bytes(32, "big")
    hb = (int.from_bytes(h1, "big") % N).to_bytes(32, "big")
    v, k = b"\x01" * 32, b"\x00" * 32
    k = hmac.new(k, v + b"\x00" + xb + hb, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    k = hmac.new(k, v + b"\x01" + xb + hb, hashlib.sha256).digest()
    v = hmac.new(k, v, hashlib.sha256).digest()
    while True:
        v = hmac.new(k, v, hashlib.sha256).digest()
        cand = int.from_bytes(v, "big")
        if 1 <= cand < N:
            return cand
        k = hmac.new(k, v + b"\x00", hashlib.sha256).digest()
        v = hmac.new(k, v, hashlib.sha256).digest()


def sign(x, msg):
    h1 = hashlib.sha256(msg).digest()
    z = int.from_bytes(h1, "big")
    k = rfc6979(x, h1)
    r = mul(k, G)[0] % N
    s = pow(k, -1, N) * (z + r * x) % N
    if s > N // 2:
        s = N - s
    return r.to_bytes(32, "big") + s.to_bytes(32, "big")


for key, msg in [(1, b"Satoshi Nakamoto"), (0xC0FFEE, b""), (0xC0FFEE, b"pqbfl")]:
    print(f"ecdsa k1 x={key:#x} msg={msg!r}", sign(key, msg).hex())
pub = mul(0xC0FFEE, G)
pub_bytes = b"\x04" + pub[0].to_bytes(32, "big") + pub[1].to_bytes(32, "big")
print("secp256k1 pub(0xc0ffee)", pub_bytes.hex())
print("address(0xc0ffee)", hashlib.sha256(pub_bytes).digest()[-20:].hex())

# AES-256-GCM fixed vector.
key = bytes(range(32))
nonce = bytes(range(12))
print("aes256gcm", AESGCM(key).encrypt(nonce, b"federated model bytes", b"hdr").hex())
print("nonce(round=3,dir=1)", hashlib.sha256((3).to_bytes(4, "big") + b"\x01").digest()[:12].hex())
