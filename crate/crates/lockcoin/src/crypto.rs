//! Keys, hashing, the blind-signature scheme, and address derivation.
//!
//! The signature scheme is full-domain-hash RSA: `sign(m) = H(m)^d mod n`
//! with `H` a counter-widened SHA-256 reduced into the modulus. Blinding
//! multiplies the hashed message by `r^e` for a uniformly sampled unit `r`;
//! unblinding divides the blind signature by `r`. Because FDH signing is
//! deterministic, the unblinded signature is bit-identical to a directly
//! issued one, so the final artifact carries no trace of the blinding factor.
//!
//! Addresses are 20-byte digests of a public key (or of the canonically
//! ordered key pair for 2-of-2 escrow addresses).

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::wire::{Reader, WireDecode, WireEncode, WireError, Writer};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CryptoError {
    #[error("unsupported key size {0} (supported: 512 test-only, 1024, 2048)")]
    UnsupportedKeySize(u32),
    #[error("blinded payload is not below the signer modulus")]
    PayloadOutOfRange,
    #[error("blinding factor is not invertible modulo the signer modulus")]
    NonInvertibleFactor,
    #[error("2-of-2 escrow requires two distinct keys")]
    IdenticalKeys,
    #[error("malformed public key")]
    MalformedKey,
}

/// Supported modulus sizes. 512 is permitted for tests and simulation speed
/// only; it is far below a production margin.
pub const SUPPORTED_KEY_BITS: [u32; 3] = [512, 1024, 2048];

/// RSA verification key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PublicKey {
    n: BigUint,
    e: BigUint,
}

/// RSA signing key. Holds the modulus so signing is self-contained.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrivateKey {
    n: BigUint,
    d: BigUint,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// Multiplicative mask applied to a hashed message before signing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindingFactor(BigUint);

/// A hashed-and-masked message awaiting a blind signature.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BlindedMessage(BigUint);

/// Signature over a blinded payload; meaningless until unblinded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlindSignature(BigUint);

/// Ordinary FDH-RSA signature.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Signature(BigUint);

impl PublicKey {
    pub fn modulus(&self) -> &BigUint {
        &self.n
    }

    pub fn modulus_bits(&self) -> u64 {
        self.n.bits()
    }

    pub fn fingerprint(&self) -> String {
        hex::encode(&digest20(&self.to_wire())[..8])
    }
}

impl BlindedMessage {
    pub fn payload(&self) -> &BigUint {
        &self.0
    }

    pub fn from_payload(payload: BigUint) -> BlindedMessage {
        BlindedMessage(payload)
    }
}

impl BlindingFactor {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn from_value(r: BigUint) -> BlindingFactor {
        BlindingFactor(r)
    }
}

impl BlindSignature {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    /// Test hook: a corrupted copy, for exercising rejection paths.
    pub fn tampered(&self) -> BlindSignature {
        BlindSignature(&self.0 + 1u32)
    }
}

impl Signature {
    pub fn value(&self) -> &BigUint {
        &self.0
    }

    pub fn tampered(&self) -> Signature {
        Signature(&self.0 + 1u32)
    }
}

/// Generate an RSA key pair with modulus of exactly `security_bits`.
pub fn keygen(security_bits: u32, rng: &mut dyn RngCore) -> Result<KeyPair, CryptoError> {
    if !SUPPORTED_KEY_BITS.contains(&security_bits) {
        return Err(CryptoError::UnsupportedKeySize(security_bits));
    }
    let e = BigUint::from(65537u32);
    let half = (security_bits / 2) as u64;
    let p = gen_prime(half, &e, rng);
    let q = loop {
        let q = gen_prime(half, &e, rng);
        if q != p {
            break q;
        }
    };
    let n = &p * &q;
    debug_assert_eq!(n.bits(), security_bits as u64);
    let phi = (&p - 1u32) * (&q - 1u32);
    let d = mod_inverse(&e, &phi).expect("e coprime to phi by construction");
    Ok(KeyPair {
        public: PublicKey { n: n.clone(), e },
        private: PrivateKey { n, d },
    })
}

/// Hash a message into the multiplicative group of `n` (full-domain hash):
/// SHA-256 blocks under an incrementing counter, widened to the modulus size
/// and reduced.
pub fn full_domain_hash(msg: &[u8], n: &BigUint) -> BigUint {
    let byte_len = n.bits().div_ceil(8) as usize;
    let mut out = Vec::with_capacity(byte_len + 32);
    let mut counter: u32 = 0;
    while out.len() < byte_len {
        let mut h = Sha256::new();
        h.update((msg.len() as u64).to_be_bytes());
        h.update(msg);
        h.update(counter.to_be_bytes());
        out.extend_from_slice(&h.finalize());
        counter += 1;
    }
    out.truncate(byte_len);
    BigUint::from_bytes_be(&out) % n
}

/// Deterministic FDH signature: `H(m)^d mod n`.
pub fn sign(private: &PrivateKey, msg: &[u8]) -> Signature {
    let m = full_domain_hash(msg, &private.n);
    Signature(m.modpow(&private.d, &private.n))
}

/// `true` iff `sig^e == H(m) mod n`. Malformed inputs verify false.
pub fn verify(public: &PublicKey, msg: &[u8], sig: &Signature) -> bool {
    if sig.0 >= public.n {
        return false;
    }
    sig.0.modpow(&public.e, &public.n) == full_domain_hash(msg, &public.n)
}

/// Blind `msg` for the signer behind `signer_pub` with a fresh uniform unit.
/// Returns the payload to send and the factor to keep private.
pub fn blind(
    signer_pub: &PublicKey,
    msg: &[u8],
    rng: &mut dyn RngCore,
) -> (BlindedMessage, BlindingFactor) {
    let r = sample_unit(&signer_pub.n, rng);
    let blinded = blind_with_factor(signer_pub, msg, &r);
    (blinded, r)
}

/// Blinding with a caller-chosen factor: `H(m) * r^e mod n`. Used by `blind`
/// and by evidence verifiers re-deriving a payload from a disclosed factor.
pub fn blind_with_factor(
    signer_pub: &PublicKey,
    msg: &[u8],
    r: &BlindingFactor,
) -> BlindedMessage {
    let m = full_domain_hash(msg, &signer_pub.n);
    let mask = r.0.modpow(&signer_pub.e, &signer_pub.n);
    BlindedMessage(m * mask % &signer_pub.n)
}

/// Sign a blinded payload: `payload^d mod n`. Deterministic.
pub fn blind_sign(
    private: &PrivateKey,
    bm: &BlindedMessage,
) -> Result<BlindSignature, CryptoError> {
    if bm.0 >= private.n {
        return Err(CryptoError::PayloadOutOfRange);
    }
    Ok(BlindSignature(bm.0.modpow(&private.d, &private.n)))
}

/// Strip the blinding factor: `sigma * r^-1 mod n`.
pub fn unblind(
    bs: &BlindSignature,
    r: &BlindingFactor,
    signer_pub: &PublicKey,
) -> Result<Signature, CryptoError> {
    let r_inv = mod_inverse(&r.0, &signer_pub.n).ok_or(CryptoError::NonInvertibleFactor)?;
    Ok(Signature(&bs.0 * r_inv % &signer_pub.n))
}

// ---------------------------------------------------------------------------
// Addresses

pub const ADDRESS_DIGEST_LEN: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AddressKind {
    Single,
    Multisig2of2,
    OpReturnSink,
}

impl AddressKind {
    fn tag(self) -> u8 {
        match self {
            AddressKind::Single => 0x01,
            AddressKind::Multisig2of2 => 0x02,
            AddressKind::OpReturnSink => 0x03,
        }
    }

    fn from_tag(tag: u8) -> Result<AddressKind, WireError> {
        match tag {
            0x01 => Ok(AddressKind::Single),
            0x02 => Ok(AddressKind::Multisig2of2),
            0x03 => Ok(AddressKind::OpReturnSink),
            other => Err(WireError::BadDiscriminant(other)),
        }
    }
}

/// A 20-byte digest of a public key (or key pair), tagged with what it is.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Address {
    pub kind: AddressKind,
    pub id: [u8; ADDRESS_DIGEST_LEN],
}

impl Address {
    /// The unspendable sink used as the nominal destination of log posts.
    pub const SINK: Address = Address {
        kind: AddressKind::OpReturnSink,
        id: [0; ADDRESS_DIGEST_LEN],
    };

    pub fn to_hex(&self) -> String {
        hex::encode(self.to_wire())
    }

    pub fn from_hex(s: &str) -> Result<Address, WireError> {
        let bytes = hex::decode(s).map_err(|_| WireError::BadDiscriminant(0))?;
        Address::from_wire(&bytes)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Address({})", self.to_hex())
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Address {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Address {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Address, D::Error> {
        let s = String::deserialize(d)?;
        Address::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// Address of a single public key.
pub fn address_of(public: &PublicKey) -> Address {
    let mut preimage = vec![AddressKind::Single.tag()];
    preimage.extend_from_slice(&public.to_wire());
    Address {
        kind: AddressKind::Single,
        id: digest20(&preimage),
    }
}

/// 2-of-2 escrow address over the canonically (lexicographically) ordered
/// key pair, so both parties derive the same address without negotiation.
pub fn multisig_address(pk_a: &PublicKey, pk_m: &PublicKey) -> Result<Address, CryptoError> {
    if pk_a == pk_m {
        return Err(CryptoError::IdenticalKeys);
    }
    let (first, second) = canonical_key_order(pk_a, pk_m);
    let mut preimage = vec![AddressKind::Multisig2of2.tag()];
    preimage.extend_from_slice(&first.to_wire());
    preimage.extend_from_slice(&second.to_wire());
    Ok(Address {
        kind: AddressKind::Multisig2of2,
        id: digest20(&preimage),
    })
}

/// Lexicographic order on the serialized keys.
pub fn canonical_key_order<'a>(
    a: &'a PublicKey,
    b: &'a PublicKey,
) -> (&'a PublicKey, &'a PublicKey) {
    if a.to_wire() <= b.to_wire() {
        (a, b)
    } else {
        (b, a)
    }
}

pub fn sha256(data: &[u8]) -> [u8; 32] {
    Sha256::digest(data).into()
}

fn digest20(data: &[u8]) -> [u8; ADDRESS_DIGEST_LEN] {
    let full = sha256(data);
    full[..ADDRESS_DIGEST_LEN].try_into().unwrap()
}

// ---------------------------------------------------------------------------
// Modular arithmetic helpers

fn mod_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from_biguint(Sign::Plus, a.clone());
    let m = BigInt::from_biguint(Sign::Plus, m.clone());
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return None;
    }
    let mut x = ext.x % &m;
    if x.sign() == Sign::Minus {
        x += &m;
    }
    x.to_biguint()
}

/// Uniform sample from [0, bound).
fn sample_below(bound: &BigUint, rng: &mut dyn RngCore) -> BigUint {
    let bits = bound.bits();
    let byte_len = bits.div_ceil(8) as usize;
    let top_mask = if bits % 8 == 0 {
        0xFF
    } else {
        (1u8 << (bits % 8)) - 1
    };
    let mut buf = vec![0u8; byte_len];
    loop {
        rng.fill_bytes(&mut buf);
        buf[0] &= top_mask;
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Uniform invertible element of Z_n^* excluding 1 (an identity factor would
/// not hide anything).
fn sample_unit(n: &BigUint, rng: &mut dyn RngCore) -> BlindingFactor {
    loop {
        let r = sample_below(n, rng);
        if r <= BigUint::one() {
            continue;
        }
        if r.gcd(n).is_one() {
            return BlindingFactor(r);
        }
    }
}

fn gen_prime(bits: u64, e: &BigUint, rng: &mut dyn RngCore) -> BigUint {
    let byte_len = bits.div_ceil(8) as usize;
    let mut buf = vec![0u8; byte_len];
    loop {
        rng.fill_bytes(&mut buf);
        // Top two bits set so p*q has exactly 2*bits bits; low bit set for odd.
        buf[0] |= 0b1100_0000;
        buf[byte_len - 1] |= 1;
        let candidate = BigUint::from_bytes_be(&buf);
        if !passes_trial_division(&candidate) {
            continue;
        }
        if !miller_rabin(&candidate, 32, rng) {
            continue;
        }
        if (&candidate - 1u32).gcd(e).is_one() {
            return candidate;
        }
    }
}

const SMALL_PRIMES: [u32; 53] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
    101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191, 193,
    197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

fn passes_trial_division(candidate: &BigUint) -> bool {
    SMALL_PRIMES
        .iter()
        .all(|&p| !(candidate % p).is_zero() || candidate == &BigUint::from(p))
}

/// Probabilistic primality test; error probability <= 4^-rounds.
fn miller_rabin(candidate: &BigUint, rounds: u32, rng: &mut dyn RngCore) -> bool {
    let one = BigUint::one();
    let two = &one + &one;
    if candidate < &two {
        return false;
    }
    let n_minus_one = candidate - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for _ in 0..rounds {
        let base = loop {
            let b = sample_below(&n_minus_one, rng);
            if b >= two {
                break b;
            }
        };
        let mut x = base.modpow(&d, candidate);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, candidate);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

// ---------------------------------------------------------------------------
// Wire encodings

impl WireEncode for PublicKey {
    fn encode(&self, w: &mut Writer) {
        w.put_biguint(&self.n);
        w.put_biguint(&self.e);
    }
}

impl WireDecode for PublicKey {
    fn decode(r: &mut Reader<'_>) -> Result<PublicKey, WireError> {
        let n = r.get_biguint()?;
        let e = r.get_biguint()?;
        Ok(PublicKey { n, e })
    }
}

impl WireEncode for Signature {
    fn encode(&self, w: &mut Writer) {
        w.put_biguint(&self.0);
    }
}

impl WireDecode for Signature {
    fn decode(r: &mut Reader<'_>) -> Result<Signature, WireError> {
        Ok(Signature(r.get_biguint()?))
    }
}

impl WireEncode for BlindSignature {
    fn encode(&self, w: &mut Writer) {
        w.put_biguint(&self.0);
    }
}

impl WireDecode for BlindSignature {
    fn decode(r: &mut Reader<'_>) -> Result<BlindSignature, WireError> {
        Ok(BlindSignature(r.get_biguint()?))
    }
}

impl WireEncode for BlindedMessage {
    fn encode(&self, w: &mut Writer) {
        w.put_biguint(&self.0);
    }
}

impl WireDecode for BlindedMessage {
    fn decode(r: &mut Reader<'_>) -> Result<BlindedMessage, WireError> {
        Ok(BlindedMessage(r.get_biguint()?))
    }
}

impl WireEncode for BlindingFactor {
    fn encode(&self, w: &mut Writer) {
        w.put_biguint(&self.0);
    }
}

impl WireDecode for BlindingFactor {
    fn decode(r: &mut Reader<'_>) -> Result<BlindingFactor, WireError> {
        Ok(BlindingFactor(r.get_biguint()?))
    }
}

impl WireEncode for Address {
    fn encode(&self, w: &mut Writer) {
        w.put_u8(self.kind.tag());
        w.put_raw(&self.id);
    }
}

impl WireDecode for Address {
    fn decode(r: &mut Reader<'_>) -> Result<Address, WireError> {
        let kind = AddressKind::from_tag(r.get_u8()?)?;
        let id = r.get_array::<ADDRESS_DIGEST_LEN>()?;
        Ok(Address { kind, id })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn rng(seed: u64) -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(seed)
    }

    fn test_pair(seed: u64) -> KeyPair {
        keygen(512, &mut rng(seed)).unwrap()
    }

    #[test]
    fn sign_verify_round_trip() {
        let kp = test_pair(1);
        let sig = sign(&kp.private, b"x");
        assert!(verify(&kp.public, b"x", &sig));
        assert!(!verify(&kp.public, b"y", &sig));
        assert!(!verify(&kp.public, b"x", &sig.tampered()));
    }

    #[test]
    fn keygen_rejects_unsupported_sizes() {
        assert_eq!(
            keygen(256, &mut rng(1)).unwrap_err(),
            CryptoError::UnsupportedKeySize(256)
        );
        assert_eq!(
            keygen(4096, &mut rng(1)).unwrap_err(),
            CryptoError::UnsupportedKeySize(4096)
        );
    }

    #[test]
    fn keygen_hits_requested_modulus_size() {
        let kp = test_pair(2);
        assert_eq!(kp.public.modulus_bits(), 512);
    }

    #[test]
    #[ignore = "slow: full-size key generation"]
    fn keygen_2048_modulus_size() {
        let kp = keygen(2048, &mut rng(3)).unwrap();
        assert_eq!(kp.public.modulus_bits(), 2048);
        let sig = sign(&kp.private, b"x");
        assert!(verify(&kp.public, b"x", &sig));
    }

    #[test]
    fn keygen_moduli_are_distinct() {
        let mut r = rng(4);
        let mut moduli = std::collections::HashSet::new();
        for _ in 0..100 {
            let kp = keygen(512, &mut r).unwrap();
            assert!(moduli.insert(kp.public.modulus().clone()));
        }
    }

    #[test]
    fn identity_factor_is_plain_hash() {
        let kp = test_pair(5);
        let one = BlindingFactor::from_value(BigUint::one());
        let bm = blind_with_factor(&kp.public, b"msg", &one);
        assert_eq!(
            bm.payload(),
            &full_domain_hash(b"msg", kp.public.modulus())
        );
    }

    #[test]
    fn blinding_hides_and_randomizes() {
        let kp = test_pair(6);
        let mut r = rng(7);
        let h = full_domain_hash(b"msg", kp.public.modulus());
        let mut seen = std::collections::HashSet::new();
        for _ in 0..1000 {
            let (bm, _) = blind(&kp.public, b"msg", &mut r);
            assert_ne!(bm.payload(), &h);
            assert!(seen.insert(bm.payload().clone()), "payload repeated");
        }
    }

    #[test]
    fn full_pipeline_verifies_and_matches_direct_signature() {
        let kp = test_pair(8);
        let mut r = rng(9);
        for i in 0..200u32 {
            let msg = format!("output-address-{i}").into_bytes();
            let (bm, factor) = blind(&kp.public, &msg, &mut r);
            let bs = blind_sign(&kp.private, &bm).unwrap();
            let sig = unblind(&bs, &factor, &kp.public).unwrap();
            assert!(verify(&kp.public, &msg, &sig));
            // FDH determinism: unblinded equals the direct signature.
            assert_eq!(sig, sign(&kp.private, &msg));
        }
    }

    #[test]
    fn blind_sign_is_deterministic_and_bounded() {
        let kp = test_pair(10);
        let one = BlindedMessage::from_payload(BigUint::one());
        assert_eq!(
            blind_sign(&kp.private, &one).unwrap().value(),
            &BigUint::one()
        );
        let (bm, _) = blind(&kp.public, b"m", &mut rng(11));
        assert_eq!(
            blind_sign(&kp.private, &bm).unwrap(),
            blind_sign(&kp.private, &bm).unwrap()
        );
        let oversized = BlindedMessage::from_payload(kp.public.modulus().clone());
        assert_eq!(
            blind_sign(&kp.private, &oversized).unwrap_err(),
            CryptoError::PayloadOutOfRange
        );
    }

    #[test]
    fn unblind_identity_and_tampering() {
        let kp = test_pair(12);
        let mut r = rng(13);
        let (bm, factor) = blind(&kp.public, b"m", &mut r);
        let bs = blind_sign(&kp.private, &bm).unwrap();

        let one = BlindingFactor::from_value(BigUint::one());
        assert_eq!(unblind(&bs, &one, &kp.public).unwrap().value(), bs.value());

        for _ in 0..100 {
            let mut corrupted = bs.clone();
            let bump = 1 + (r.next_u32() % 1000) as u32;
            corrupted.0 = (&corrupted.0 + bump) % kp.public.modulus();
            let sig = unblind(&corrupted, &factor, &kp.public).unwrap();
            assert!(!verify(&kp.public, b"m", &sig));
        }
    }

    #[test]
    fn non_invertible_factor_rejected() {
        let kp = test_pair(14);
        let bs = BlindSignature(BigUint::from(5u32));
        let zero = BlindingFactor::from_value(BigUint::zero());
        assert_eq!(
            unblind(&bs, &zero, &kp.public).unwrap_err(),
            CryptoError::NonInvertibleFactor
        );
    }

    #[test]
    fn cross_key_matrix_only_diagonal_verifies() {
        let pairs: Vec<KeyPair> = (20..25).map(test_pair).collect();
        let msg = b"matrix";
        let sigs: Vec<Signature> = pairs.iter().map(|kp| sign(&kp.private, msg)).collect();
        for (i, kp) in pairs.iter().enumerate() {
            for (j, sig) in sigs.iter().enumerate() {
                assert_eq!(verify(&kp.public, msg, sig), i == j);
            }
        }
    }

    #[test]
    fn multisig_address_is_order_insensitive() {
        let a = test_pair(30).public;
        let b = test_pair(31).public;
        assert_eq!(
            multisig_address(&a, &b).unwrap(),
            multisig_address(&b, &a).unwrap()
        );
        assert_eq!(
            multisig_address(&a, &a).unwrap_err(),
            CryptoError::IdenticalKeys
        );
    }

    #[test]
    fn multisig_addresses_do_not_collide() {
        let mut r = rng(32);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..100 {
            let a = keygen(512, &mut r).unwrap().public;
            let b = keygen(512, &mut r).unwrap().public;
            let addr = multisig_address(&a, &b).unwrap();
            assert_eq!(addr.kind, AddressKind::Multisig2of2);
            assert!(seen.insert(addr));
        }
    }

    #[test]
    fn address_derivation_is_deterministic() {
        let kp = test_pair(33);
        assert_eq!(address_of(&kp.public), address_of(&kp.public));
        assert_eq!(address_of(&kp.public).kind, AddressKind::Single);
    }

    #[test]
    fn key_and_address_wire_round_trip() {
        let kp = test_pair(34);
        let pk_bytes = kp.public.to_wire();
        assert_eq!(PublicKey::from_wire(&pk_bytes).unwrap(), kp.public);

        let addr = address_of(&kp.public);
        assert_eq!(Address::from_wire(&addr.to_wire()).unwrap(), addr);
        assert_eq!(Address::from_hex(&addr.to_hex()).unwrap(), addr);

        let sig = sign(&kp.private, b"m");
        assert_eq!(Signature::from_wire(&sig.to_wire()).unwrap(), sig);
    }

    #[test]
    fn keygen_is_deterministic_for_a_seed() {
        let a = keygen(512, &mut rng(35)).unwrap();
        let b = keygen(512, &mut rng(35)).unwrap();
        assert_eq!(a.public, b.public);
        assert_eq!(a.private, b.private);
    }
}
