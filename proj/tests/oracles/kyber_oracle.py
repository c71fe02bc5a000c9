#!/usr/bin/env python3
"""Independent Kyber-768 (round 3) reference values for test_kyber.cpp.

Uses kyber-py (pip install kyber-py) as the reference implementation. kyber-py's
DRBG imports pycryptodome's AES; a shim backed by `cryptography` is installed
below so only the stock sandbox packages are needed.

Run:  PYTHONPATH=<dir containing kyber_py> python3 kyber_oracle.py
"""
import hashlib
import sys
import types

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


class _Ecb:
    def __init__(self, key):
        self._enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()

    def encrypt(self, block):
        return self._enc.update(block)


aes_mod = types.ModuleType("Crypto.Cipher.AES")
aes_mod.MODE_ECB = 1
aes_mod.new = lambda key, mode: _Ecb(key)
cipher_mod = types.ModuleType("Crypto.Cipher")
cipher_mod.AES = aes_mod
crypto_mod = types.ModuleType("Crypto")
crypto_mod.Cipher = cipher_mod
sys.modules.update({"Crypto": crypto_mod, "Crypto.Cipher": cipher_mod, "Crypto.Cipher.AES": aes_mod})

from kyber_py.drbg.aes256_ctr_drbg import AES256_CTR_DRBG  # noqa: E402
from kyber_py.kyber import Kyber768  # noqa: E402


def sha256(b):
    return hashlib.sha256(b).hexdigest()


def report(tag, pk, sk, ct, ss):
    print(f"[{tag}]")
    print("  pk.len", len(pk), "sk.len", len(sk), "ct.len", len(ct))
    print("  pk[0:16] ", pk[:16].hex())
    print("  sha256(pk)", sha256(pk))
    print("  sha256(sk)", sha256(sk))
    print("  sha256(ct)", sha256(ct))
    print("  ss        ", ss.hex())


# NIST KAT flow: master DRBG seeded with 0..47, per-count seed = randombytes(48).
master = AES256_CTR_DRBG(bytes(range(48)))
seed0 = master.random_bytes(48)
print("kat.count0.seed", seed0.hex())
Kyber768.set_drbg_seed(seed0)
pk, sk = Kyber768.keygen()
ss, ct = Kyber768.encaps(pk)
assert Kyber768.decaps(sk, ct) == ss
report("nist-kat-count0", pk, sk, ct, ss)


# Derandomized vector: d = 00..1f, z = 20..3f, m = 40..5f.
def feed(chunks):
    it = iter(chunks)
    return lambda n: next(it)


Kyber768.random_bytes = feed([bytes(range(32)), bytes(range(32, 64)), bytes(range(64, 96))])
pk, sk = Kyber768.keygen()
ss, ct = Kyber768.encaps(pk)
assert Kyber768.decaps(sk, ct) == ss
report("derand d=00.. z=20.. m=40..", pk, sk, ct, ss)

# Implicit rejection on the same pair: flip bit 0 of ct[0].
bad = bytes([ct[0] ^ 1]) + ct[1:]
print("  ss(flipped ct)", Kyber768.decaps(sk, bad).hex())

# Seeded keygen used by crypto_suite: (d || z) = SHA3-512(seed), seed = 0x07 * 32.
dz = hashlib.sha3_512(bytes([7]) * 32).digest()
Kyber768.random_bytes = feed([dz[:32], dz[32:]])
pk, sk = Kyber768.keygen()
print("[seeded keygen seed=07*32]")
print("  sha256(pk)", sha256(pk))
print("  sha256(sk)", sha256(sk))
