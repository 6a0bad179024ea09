//! Elliptic-curve key pairs, signed expiring public-key records, and the
//! bounded key tables nodes fill during contacts.

pub mod curve;
pub mod record;
pub mod selftest;
pub mod table;

pub use curve::{CurveParams, Point};
pub use record::{
    encode_record, keygen, rotate_if_expired, sign_record, verify_record, DigestKind, KeyPair,
    NodeId, PublicKeyRecord, RecordDigest, Signature, VerifiedRecord,
};
pub use table::{exchange, InsertOutcome, KeyTable, Partition, Strategy};
