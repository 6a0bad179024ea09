use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::curve::{mul_mod, CurveParams, Point};
use crate::error::{Error, Result};

pub type NodeId = usize;

/// 64-bit digest used for record signatures.
pub trait RecordDigest {
    fn digest(&self, bytes: &[u8]) -> u64;
}

/// Built-in digests. FNV-1a is the default and is NOT collision resistant;
/// it is here because the simulator only needs signatures that bind the
/// record fields, not security against an adversary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DigestKind {
    #[default]
    Fnv1a,
    /// First eight bytes of SHA-256, big-endian.
    Sha256,
}

impl RecordDigest for DigestKind {
    fn digest(&self, bytes: &[u8]) -> u64 {
        match self {
            DigestKind::Fnv1a => fnv1a(bytes),
            DigestKind::Sha256 => {
                let h = Sha256::digest(bytes);
                u64::from_be_bytes(h[..8].try_into().expect("32-byte hash"))
            }
        }
    }
}

pub(crate) fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyPair {
    pub private: u64,
    pub public: Point,
    pub issued_at: f64,
    /// `f64::INFINITY` for keys that never expire.
    pub expires_at: f64,
}

impl KeyPair {
    pub fn from_scalar(curve: &CurveParams, private: u64, now: f64, ttl: f64) -> Result<Self> {
        if private == 0 || private >= curve.n {
            return Err(Error::domain(format!(
                "private scalar {private} outside [1, {}]",
                curve.n - 1
            )));
        }
        if !(ttl > 0.0) {
            return Err(Error::domain(format!("key ttl must be > 0, got {ttl}")));
        }
        Ok(KeyPair {
            private,
            public: curve.scalar_mul(private, &curve.g)?,
            issued_at: now,
            expires_at: now + ttl,
        })
    }

    /// Draws scalars from `draw` until one lands in `[1, n-1]`.
    pub fn generate_with(
        curve: &CurveParams,
        now: f64,
        ttl: f64,
        mut draw: impl FnMut() -> u64,
    ) -> Result<Self> {
        loop {
            let x = draw();
            if (1..curve.n).contains(&x) {
                return KeyPair::from_scalar(curve, x, now, ttl);
            }
        }
    }

    /// Valid while `now < expires_at`.
    pub fn is_valid(&self, now: f64) -> bool {
        now < self.expires_at
    }
}

pub fn keygen<R: Rng + ?Sized>(
    curve: &CurveParams,
    rng: &mut R,
    now: f64,
    ttl: f64,
) -> Result<KeyPair> {
    KeyPair::generate_with(curve, now, ttl, || rng.random_range(0..curve.n))
}

/// Fresh pair once `now` reaches the current expiry, otherwise `kp` itself.
pub fn rotate_if_expired<R: Rng + ?Sized>(
    kp: KeyPair,
    curve: &CurveParams,
    rng: &mut R,
    now: f64,
    ttl: f64,
) -> Result<KeyPair> {
    if kp.is_valid(now) {
        Ok(kp)
    } else {
        keygen(curve, rng, now, ttl)
    }
}

/// Schnorr signature `(e, s)`: `e` is the full 64-bit challenge digest and
/// `s = k + (e mod n)·x mod n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub e: u64,
    pub s: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PublicKeyRecord {
    pub owner: NodeId,
    pub key: Point,
    pub expires_at: f64,
    pub signature: Signature,
}

pub const RECORD_ENCODING_LEN: usize = 4 + 8 + 8 + 8;

/// Canonical signing bytes: big-endian `owner: u32 ‖ key.x: u64 ‖ key.y: u64
/// ‖ expires_at_millis: u64`. Infinite expiry encodes as `u64::MAX`.
pub fn encode_record(owner: NodeId, key: &Point, expires_at: f64) -> Result<[u8; RECORD_ENCODING_LEN]> {
    let owner = u32::try_from(owner)
        .map_err(|_| Error::domain(format!("node id {owner} does not fit in 32 bits")))?;
    let Point::Affine { x, y } = *key else {
        return Err(Error::domain("cannot encode the identity as a public key"));
    };
    let millis = if expires_at.is_infinite() && expires_at > 0.0 {
        u64::MAX
    } else {
        (expires_at * 1000.0).round() as u64
    };
    let mut out = [0u8; RECORD_ENCODING_LEN];
    out[0..4].copy_from_slice(&owner.to_be_bytes());
    out[4..12].copy_from_slice(&x.to_be_bytes());
    out[12..20].copy_from_slice(&y.to_be_bytes());
    out[20..28].copy_from_slice(&millis.to_be_bytes());
    Ok(out)
}

fn challenge<D: RecordDigest + ?Sized>(digest: &D, commitment: &Point, msg: &[u8]) -> u64 {
    let mut buf = [0u8; 16 + RECORD_ENCODING_LEN];
    buf[..16].copy_from_slice(&commitment.to_be_bytes());
    buf[16..].copy_from_slice(msg);
    digest.digest(&buf)
}

pub fn sign_record<D: RecordDigest + ?Sized, R: Rng + ?Sized>(
    kp: &KeyPair,
    owner: NodeId,
    key: &Point,
    expires_at: f64,
    curve: &CurveParams,
    digest: &D,
    rng: &mut R,
) -> Result<Signature> {
    let msg = encode_record(owner, key, expires_at)?;
    let nonce = rng.random_range(1..curve.n);
    let commitment = curve.scalar_mul(nonce, &curve.g)?;
    let e = challenge(digest, &commitment, &msg);
    let s = (nonce as u128 + mul_mod(e % curve.n, kp.private, curve.n) as u128) % curve.n as u128;
    Ok(Signature { e, s: s as u64 })
}

pub fn verify_record<D: RecordDigest + ?Sized>(
    rec: &PublicKeyRecord,
    curve: &CurveParams,
    digest: &D,
) -> bool {
    if rec.key.is_infinity() || !curve.is_on_curve(&rec.key) || rec.signature.s >= curve.n {
        return false;
    }
    let Ok(msg) = encode_record(rec.owner, &rec.key, rec.expires_at) else {
        return false;
    };
    let e_reduced = rec.signature.e % curve.n;
    // R' = s·G − e·Y
    let sg = curve.scalar_mul(rec.signature.s, &curve.g);
    let ey = curve.scalar_mul((curve.n - e_reduced) % curve.n, &rec.key);
    let commitment = match (sg, ey) {
        (Ok(a), Ok(b)) => match curve.point_add(&a, &b) {
            Ok(r) => r,
            Err(_) => return false,
        },
        _ => return false,
    };
    !commitment.is_infinity() && challenge(digest, &commitment, &msg) == rec.signature.e
}

impl PublicKeyRecord {
    /// Signs `kp`'s public key on behalf of `owner`, valid until the pair
    /// expires.
    pub fn issue<D: RecordDigest + ?Sized, R: Rng + ?Sized>(
        owner: NodeId,
        kp: &KeyPair,
        curve: &CurveParams,
        digest: &D,
        rng: &mut R,
    ) -> Result<Self> {
        let signature = sign_record(kp, owner, &kp.public, kp.expires_at, curve, digest, rng)?;
        Ok(PublicKeyRecord {
            owner,
            key: kp.public,
            expires_at: kp.expires_at,
            signature,
        })
    }

    pub fn is_valid(&self, now: f64) -> bool {
        now < self.expires_at
    }

    pub fn verified<D: RecordDigest + ?Sized>(
        self,
        curve: &CurveParams,
        digest: &D,
    ) -> Result<VerifiedRecord> {
        if verify_record(&self, curve, digest) {
            Ok(VerifiedRecord(self))
        } else {
            Err(Error::RejectedRecord {
                owner: self.owner,
                reason: "signature does not verify",
            })
        }
    }
}

/// A record whose signature has been checked. Key tables only accept these.
#[derive(Debug, Clone, PartialEq)]
pub struct VerifiedRecord(PublicKeyRecord);

impl VerifiedRecord {
    pub fn record(&self) -> &PublicKeyRecord {
        &self.0
    }

    pub fn into_inner(self) -> PublicKeyRecord {
        self.0
    }
}

impl std::ops::Deref for VerifiedRecord {
    type Target = PublicKeyRecord;
    fn deref(&self) -> &PublicKeyRecord {
        &self.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn rng() -> crate::rng::SimRng {
        substream(5, 0, Purpose::Signing)
    }

    #[test]
    fn forced_scalars() {
        let c = CurveParams::toy();
        assert_eq!(KeyPair::from_scalar(&c, 1, 0.0, 10.0).unwrap().public, c.g);
        assert_eq!(KeyPair::from_scalar(&c, 2, 0.0, 10.0).unwrap().public, Point::new(6, 3));
        assert!(KeyPair::from_scalar(&c, 0, 0.0, 10.0).is_err());
        assert!(KeyPair::from_scalar(&c, 19, 0.0, 10.0).is_err());
        let mut draws = [0u64, 0, 19, 2].into_iter();
        let kp = KeyPair::generate_with(&c, 0.0, 10.0, || draws.next().unwrap()).unwrap();
        assert_eq!(kp.private, 2);
    }

    #[test]
    fn keygen_sets_expiry() {
        let c = CurveParams::toy();
        let kp = keygen(&c, &mut rng(), 3.0, 100.0).unwrap();
        assert!((1..19).contains(&kp.private));
        assert_eq!(kp.public, c.scalar_mul(kp.private, &c.g).unwrap());
        assert_eq!(kp.expires_at, 103.0);
        assert!(keygen(&c, &mut rng(), 0.0, 0.0).is_err());
        let forever = keygen(&c, &mut rng(), 0.0, f64::INFINITY).unwrap();
        assert!(forever.is_valid(1e300));
    }

    #[test]
    fn rotation_boundary() {
        let c = CurveParams::simulation();
        let kp = KeyPair::from_scalar(&c, 12345, 0.0, 100.0).unwrap();
        let same = rotate_if_expired(kp.clone(), &c, &mut rng(), 99.999, 100.0).unwrap();
        assert_eq!(same, kp);
        let fresh = rotate_if_expired(kp.clone(), &c, &mut rng(), 100.0, 100.0).unwrap();
        assert_ne!(fresh.private, kp.private);
        assert_eq!(fresh.expires_at, 200.0);
        assert_eq!(fresh.issued_at, 100.0);
        let inf = KeyPair::from_scalar(&c, 7, 0.0, f64::INFINITY).unwrap();
        assert_eq!(rotate_if_expired(inf.clone(), &c, &mut rng(), 1e12, f64::INFINITY).unwrap(), inf);
    }

    #[test]
    fn encoding_is_fixed_width_big_endian() {
        let bytes = encode_record(0x0102_0304, &Point::new(5, 1), 1.5).unwrap();
        assert_eq!(&bytes[0..4], &[1, 2, 3, 4]);
        assert_eq!(&bytes[4..12], &5u64.to_be_bytes());
        assert_eq!(&bytes[12..20], &1u64.to_be_bytes());
        assert_eq!(&bytes[20..28], &1500u64.to_be_bytes());
        let inf = encode_record(0, &Point::new(5, 1), f64::INFINITY).unwrap();
        assert_eq!(&inf[20..28], &[0xff; 8]);
        assert!(encode_record(0, &Point::Infinity, 1.0).is_err());
    }

    #[test]
    fn sign_verify_and_tamper() {
        for digest in [DigestKind::Fnv1a, DigestKind::Sha256] {
            for curve in [CurveParams::toy(), CurveParams::simulation()] {
                let kp = keygen(&curve, &mut rng(), 0.0, 120.0).unwrap();
                let rec = PublicKeyRecord::issue(4, &kp, &curve, &digest, &mut rng()).unwrap();
                assert!(verify_record(&rec, &curve, &digest));

                let mut later = rec.clone();
                later.expires_at += 1.0;
                assert!(!verify_record(&later, &curve, &digest));

                let other = KeyPair::from_scalar(&curve, if kp.private == 1 { 2 } else { 1 }, 0.0, 120.0).unwrap();
                let mut swapped = rec.clone();
                swapped.key = other.public;
                assert!(!verify_record(&swapped, &curve, &digest));

                let mut renamed = rec.clone();
                renamed.owner = 5;
                assert!(!verify_record(&renamed, &curve, &digest));
            }
        }
    }

    #[test]
    fn verified_wrapper_rejects_bad_signature() {
        let c = CurveParams::toy();
        let kp = keygen(&c, &mut rng(), 0.0, 50.0).unwrap();
        let mut rec = PublicKeyRecord::issue(1, &kp, &c, &DigestKind::Fnv1a, &mut rng()).unwrap();
        assert!(rec.clone().verified(&c, &DigestKind::Fnv1a).is_ok());
        rec.signature.s = (rec.signature.s + 1) % c.n;
        assert!(matches!(
            rec.verified(&c, &DigestKind::Fnv1a),
            Err(Error::RejectedRecord { owner: 1, .. })
        ));
    }
}
