//! Exhaustive checks on the toy curve `y² = x³ + 2x + 2` over F₁₇.

use rand::Rng;

use super::curve::{CurveParams, Point};
use super::record::{verify_record, DigestKind, KeyPair, PublicKeyRecord};
use crate::rng::{substream, Purpose};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &'static str, passed: bool, detail: String) -> Self {
        Check { name, passed, detail }
    }
}

/// Every affine point of `curve`, by brute force over F_p².
pub fn enumerate_points(curve: &CurveParams) -> Vec<Point> {
    (0..curve.p)
        .flat_map(|x| (0..curve.p).map(move |y| Point::new(x, y)))
        .filter(|pt| curve.is_on_curve(pt))
        .collect()
}

/// Runs the suite with `fuzz_cases` sign/verify/tamper rounds.
pub fn toy_suite(fuzz_cases: usize, seed: u64) -> Vec<Check> {
    let c = CurveParams::toy();
    let mut checks = Vec::new();

    let points = enumerate_points(&c);
    let group_order = points.len() as u64 + 1;
    checks.push(Check::new(
        "group_order",
        group_order == 19,
        format!("{} affine points + identity = {group_order}", points.len()),
    ));

    let mut acc = Point::Infinity;
    let mut mismatches = Vec::new();
    for s in 0..=19u64 {
        match c.scalar_mul(s, &c.g) {
            Ok(p) if p == acc => {}
            _ => mismatches.push(s),
        }
        acc = c.point_add(&acc, &c.g).expect("multiples of G stay on the curve");
    }
    checks.push(Check::new(
        "scalar_mul_matches_repeated_addition",
        mismatches.is_empty(),
        format!("s = 0..=19, mismatches at {mismatches:?}"),
    ));

    let order_g = (1..=group_order).find(|&k| c.scalar_mul(k, &c.g).is_ok_and(|p| p.is_infinity()));
    checks.push(Check::new(
        "order_of_g",
        order_g == Some(19) && c.scalar_mul(19, &c.g).is_ok_and(|p| p.is_infinity()),
        format!("smallest k with k·G = O: {order_g:?}"),
    ));

    let mut rng = substream(seed, 0, Purpose::Signing);
    let (mut roundtrip_failures, mut tamper_accepts) = (0usize, 0usize);
    for case in 0..fuzz_cases {
        let digest = if case % 2 == 0 { DigestKind::Fnv1a } else { DigestKind::Sha256 };
        let private = rng.random_range(1..c.n);
        let expires = rng.random_range(0..100_000u32) as f64 / 10.0;
        let kp = KeyPair::from_scalar(&c, private, expires - 50.0, 50.0)
            .expect("scalar in range, positive ttl");
        let owner = rng.random_range(0..1000usize);
        let rec = PublicKeyRecord::issue(owner, &kp, &c, &digest, &mut rng).expect("toy signing");
        if !verify_record(&rec, &c, &digest) {
            roundtrip_failures += 1;
        }
        for tampered in tampers(&rec, &c, &points, &mut rng) {
            if verify_record(&tampered, &c, &digest) {
                tamper_accepts += 1;
            }
        }
    }
    checks.push(Check::new(
        "sign_verify_roundtrip",
        roundtrip_failures == 0,
        format!("{roundtrip_failures} of {fuzz_cases} honest records rejected"),
    ));
    checks.push(Check::new(
        "single_field_tamper_rejected",
        tamper_accepts == 0,
        format!("{tamper_accepts} of {} tampered records accepted", 5 * fuzz_cases),
    ));
    checks
}

/// One copy of `rec` per field, each with exactly that field changed.
fn tampers<R: Rng + ?Sized>(
    rec: &PublicKeyRecord,
    c: &CurveParams,
    points: &[Point],
    rng: &mut R,
) -> Vec<PublicKeyRecord> {
    let mut out = Vec::with_capacity(5);

    let mut t = rec.clone();
    t.owner = other(rec.owner, || rng.random_range(0..1000usize));
    out.push(t);

    let mut t = rec.clone();
    t.key = other(rec.key, || points[rng.random_range(0..points.len())]);
    out.push(t);

    let mut t = rec.clone();
    t.expires_at = other(rec.expires_at, || rng.random_range(0..100_000u32) as f64 / 10.0);
    out.push(t);

    let mut t = rec.clone();
    t.signature.e = other(rec.signature.e, || rng.random());
    out.push(t);

    let mut t = rec.clone();
    t.signature.s = other(rec.signature.s, || rng.random_range(0..c.n));
    out.push(t);

    out
}

fn other<T: PartialEq + Copy>(current: T, mut draw: impl FnMut() -> T) -> T {
    loop {
        let v = draw();
        if v != current {
            return v;
        }
    }
}
