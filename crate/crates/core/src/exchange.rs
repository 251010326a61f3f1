//! Cryptographic primitives of the exchange protocol: asset identifiers,
//! symmetric payload encryption under an Asset Encryption Key (AEK), and
//! asymmetric sealing of the AEK for accessors.
//!
//! One AEAD scheme (XChaCha20-Poly1305) and one sealing scheme (X25519
//! sealed boxes) ship by default. Both are addressed by stable string
//! identifiers so the registry can grow without changing event layouts.

use crate::types::{hex_bytes, AssetId};
use chacha20poly1305::aead::{Aead, KeyInit};
use chacha20poly1305::{Key, XChaCha20Poly1305, XNonce};
use rand::rngs::OsRng;
use rand::RngCore;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Identifier of the default sealing scheme: X25519 ECDH + XSalsa20-Poly1305
/// sealed boxes. Carried in `RequestAccess.encryption_algorithm`.
pub const SEALING_X25519: &str = "x25519-xsalsa20-poly1305";

/// Identifier of the payload AEAD scheme.
pub const AEAD_XCHACHA20: &str = "xchacha20-poly1305";

/// Byte length of a sealed 32-byte AEK under [`SEALING_X25519`]:
/// ephemeral public key (32) + Poly1305 tag (16) + key (32).
pub const SEALED_AEK_LEN: usize = 80;

const NONCE_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExchangeError {
    #[error("unsupported encryption algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("decryption failed: wrong key or corrupted ciphertext")]
    DecryptionFailed,
    #[error("unsealing failed: wrong private key or corrupted blob")]
    UnsealFailed,
}

/// 256-bit symmetric key encrypting one asset's payload. Serializes as hex
/// so keystores stay readable.
#[derive(Clone, PartialEq, Eq)]
pub struct AssetEncryptionKey(pub [u8; 32]);

impl Serialize for AssetEncryptionKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(self.0))
    }
}

impl<'de> Deserialize<'de> for AssetEncryptionKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        let mut key = [0u8; 32];
        hex::decode_to_slice(&s, &mut key).map_err(serde::de::Error::custom)?;
        Ok(Self(key))
    }
}

impl AssetEncryptionKey {
    pub fn generate() -> Self {
        let mut key = [0u8; 32];
        OsRng.fill_bytes(&mut key);
        Self(key)
    }

    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        Self(bytes)
    }
}

impl std::fmt::Debug for AssetEncryptionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        // never print key material
        f.write_str("AssetEncryptionKey(..)")
    }
}

/// Asymmetric keypair created by an accessor for one access request.
#[derive(Clone, Serialize, Deserialize)]
pub struct SealingKeyPair {
    pub algorithm: String,
    #[serde(with = "hex_bytes")]
    pub public_key: Vec<u8>,
    #[serde(with = "hex_bytes")]
    pub secret_key: Vec<u8>,
}

impl std::fmt::Debug for SealingKeyPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SealingKeyPair")
            .field("algorithm", &self.algorithm)
            .field("public_key", &hex::encode(&self.public_key))
            .finish_non_exhaustive()
    }
}

/// An AEK sealed under an accessor's public key, tagged with the scheme that
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SealedKey {
    pub algorithm: String,
    #[serde(with = "hex_bytes")]
    pub ciphertext: Vec<u8>,
}

/// Authenticated ciphertext of an asset payload: random nonce followed by
/// ciphertext-plus-tag.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncryptedPayload {
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

impl EncryptedPayload {
    /// Flat wire form: nonce || ciphertext+tag. This is what external
    /// storage holds.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(NONCE_LEN + self.ciphertext.len());
        out.extend_from_slice(&self.nonce);
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ExchangeError> {
        if bytes.len() < NONCE_LEN {
            return Err(ExchangeError::DecryptionFailed);
        }
        let mut nonce = [0u8; NONCE_LEN];
        nonce.copy_from_slice(&bytes[..NONCE_LEN]);
        Ok(Self {
            nonce,
            ciphertext: bytes[NONCE_LEN..].to_vec(),
        })
    }
}

/// SHA-256 of the plaintext payload; the asset's identity across all modules.
pub fn compute_asset_id(payload: &[u8]) -> AssetId {
    AssetId(Sha256::digest(payload).into())
}

/// Encrypt a payload under the AEK with a fresh random nonce.
pub fn encrypt_payload(aek: &AssetEncryptionKey, payload: &[u8]) -> EncryptedPayload {
    let cipher = XChaCha20Poly1305::new(Key::from_slice(&aek.0));
    let mut nonce = [0u8; NONCE_LEN];
    OsRng.fill_bytes(&mut nonce);
    let ciphertext = cipher
        .encrypt(XNonce::from_slice(&nonce), payload)
        .expect("XChaCha20Poly1305 encryption is infallible for in-memory payloads");
    EncryptedPayload { nonce, ciphertext }
}

/// Decrypt and authenticate a payload. Fails on a wrong key or any tampered
/// ciphertext bit.
pub fn decrypt_payload(
    aek: &AssetEncryptionKey,
    payload: &EncryptedPayload,
) -> Result<Vec<u8>, ExchangeError> {
    let cipher = XChaCha20Poly1305::new(Key::from_slice(&aek.0));
    cipher
        .decrypt(XNonce::from_slice(&payload.nonce), payload.ciphertext.as_ref())
        .map_err(|_| ExchangeError::DecryptionFailed)
}

fn check_algorithm(algorithm: &str) -> Result<(), ExchangeError> {
    if algorithm == SEALING_X25519 {
        Ok(())
    } else {
        Err(ExchangeError::UnsupportedAlgorithm(algorithm.to_string()))
    }
}

/// Generate a fresh sealing keypair for the given algorithm identifier.
pub fn generate_keypair(algorithm: &str) -> Result<SealingKeyPair, ExchangeError> {
    check_algorithm(algorithm)?;
    let secret = crypto_box::SecretKey::generate(&mut OsRng);
    Ok(SealingKeyPair {
        algorithm: algorithm.to_string(),
        public_key: secret.public_key().as_bytes().to_vec(),
        secret_key: secret.to_bytes().to_vec(),
    })
}

/// Seal an AEK under an accessor's public key.
pub fn seal_aek(
    algorithm: &str,
    public_key: &[u8],
    aek: &AssetEncryptionKey,
) -> Result<SealedKey, ExchangeError> {
    check_algorithm(algorithm)?;
    let pk = crypto_box::PublicKey::from_slice(public_key)
        .map_err(|_| ExchangeError::UnsupportedAlgorithm(algorithm.to_string()))?;
    let ciphertext = pk
        .seal(&mut OsRng, &aek.0)
        .map_err(|_| ExchangeError::UnsealFailed)?;
    Ok(SealedKey {
        algorithm: algorithm.to_string(),
        ciphertext,
    })
}

/// Recover an AEK from a sealed blob. The algorithm tag is checked before any
/// key material is touched.
pub fn unseal_aek(
    algorithm: &str,
    secret_key: &[u8],
    sealed: &SealedKey,
) -> Result<AssetEncryptionKey, ExchangeError> {
    check_algorithm(algorithm)?;
    if sealed.algorithm != algorithm {
        return Err(ExchangeError::UnsealFailed);
    }
    let sk_bytes: [u8; 32] = secret_key
        .try_into()
        .map_err(|_| ExchangeError::UnsealFailed)?;
    let sk = crypto_box::SecretKey::from_bytes(sk_bytes);
    let plain = sk
        .unseal(&sealed.ciphertext)
        .map_err(|_| ExchangeError::UnsealFailed)?;
    let key: [u8; 32] = plain.try_into().map_err(|_| ExchangeError::UnsealFailed)?;
    Ok(AssetEncryptionKey(key))
}
