//! Short-Weierstrass curves `y² = x³ + ax + b` over a prime field that fits
//! in a `u64`. Affine coordinates, double-and-add; none of this is constant
//! time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Point {
    Infinity,
    Affine { x: u64, y: u64 },
}

impl Point {
    pub const fn new(x: u64, y: u64) -> Self {
        Point::Affine { x, y }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    /// Fixed-width big-endian `x ‖ y`; the identity encodes as all ones.
    pub fn to_be_bytes(&self) -> [u8; 16] {
        let mut out = [0xff; 16];
        if let Point::Affine { x, y } = *self {
            out[..8].copy_from_slice(&x.to_be_bytes());
            out[8..].copy_from_slice(&y.to_be_bytes());
        }
        out
    }
}

/// Domain parameters `(p, a, b, G, n, h)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CurveParams {
    pub p: u64,
    pub a: u64,
    pub b: u64,
    pub g: Point,
    /// Order of `g`.
    pub n: u64,
    /// Cofactor; carried along, never used in arithmetic.
    pub h: u64,
}

impl CurveParams {
    /// Validates every domain invariant: `p > 3` prime, non-singular curve,
    /// `G` on the curve, `n` prime and `n·G = O`.
    pub fn new(p: u64, a: u64, b: u64, g: Point, n: u64, h: u64) -> Result<Self> {
        if p <= 3 || p >= 1 << 63 || !is_prime(p) {
            return Err(Error::domain(format!("p = {p} must be a prime in (3, 2^63)")));
        }
        let c = CurveParams {
            p,
            a: a % p,
            b: b % p,
            g,
            n,
            h,
        };
        let disc = c.add_mod(
            c.mul_mod(4, c.mul_mod(c.a, c.mul_mod(c.a, c.a))),
            c.mul_mod(27, c.mul_mod(c.b, c.b)),
        );
        if disc == 0 {
            return Err(Error::domain("singular curve: 4a³ + 27b² ≡ 0"));
        }
        if g.is_infinity() || !c.is_on_curve(&g) {
            return Err(Error::domain("base point is not on the curve"));
        }
        if n < 2 || n >= 1 << 63 || !is_prime(n) {
            return Err(Error::domain(format!("order n = {n} must be prime")));
        }
        if !c.scalar_mul(n, &g)?.is_infinity() {
            return Err(Error::domain("n·G is not the identity"));
        }
        Ok(c)
    }

    /// `y² = x³ + 2x + 2` over F₁₇ with `G = (5, 1)` of order 19.
    pub fn toy() -> Self {
        CurveParams::new(17, 2, 2, Point::new(5, 1), 19, 1).expect("toy curve is valid")
    }

    /// `y² = x³ + 2x + 9` over F₁₀₄₈₅₇₃ (p = the largest prime below 2²⁰),
    /// with `G = (1, 2048)` generating the whole group of prime order
    /// 1 049 603. Large enough that independently drawn keys essentially
    /// never collide across a run.
    pub fn simulation() -> Self {
        CurveParams::new(1_048_573, 2, 9, Point::new(1, 2048), 1_049_603, 1)
            .expect("simulation curve is valid")
    }

    pub fn is_on_curve(&self, pt: &Point) -> bool {
        match *pt {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                if x >= self.p || y >= self.p {
                    return false;
                }
                let rhs = self.add_mod(
                    self.add_mod(self.mul_mod(x, self.mul_mod(x, x)), self.mul_mod(self.a, x)),
                    self.b,
                );
                self.mul_mod(y, y) == rhs
            }
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match *pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::new(x, (self.p - y) % self.p),
        }
    }

    pub fn point_add(&self, lhs: &Point, rhs: &Point) -> Result<Point> {
        self.check(lhs)?;
        self.check(rhs)?;
        Ok(self.add_unchecked(lhs, rhs))
    }

    pub fn scalar_mul(&self, s: u64, pt: &Point) -> Result<Point> {
        self.check(pt)?;
        let mut acc = Point::Infinity;
        let mut addend = *pt;
        let mut k = s;
        while k > 0 {
            if k & 1 == 1 {
                acc = self.add_unchecked(&acc, &addend);
            }
            addend = self.add_unchecked(&addend, &addend);
            k >>= 1;
        }
        Ok(acc)
    }

    fn check(&self, pt: &Point) -> Result<()> {
        if self.is_on_curve(pt) {
            Ok(())
        } else {
            Err(Error::domain(format!("{pt:?} is not on the curve")))
        }
    }

    fn add_unchecked(&self, lhs: &Point, rhs: &Point) -> Point {
        let (x1, y1, x2, y2) = match (*lhs, *rhs) {
            (Point::Infinity, q) => return q,
            (p, Point::Infinity) => return p,
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };
        let lambda = if x1 == x2 {
            if self.add_mod(y1, y2) == 0 {
                return Point::Infinity;
            }
            // tangent: (3x² + a) / 2y
            let num = self.add_mod(self.mul_mod(3, self.mul_mod(x1, x1)), self.a);
            self.mul_mod(num, self.inv(self.mul_mod(2, y1)))
        } else {
            let num = self.sub_mod(y2, y1);
            self.mul_mod(num, self.inv(self.sub_mod(x2, x1)))
        };
        let x3 = self.sub_mod(self.sub_mod(self.mul_mod(lambda, lambda), x1), x2);
        let y3 = self.sub_mod(self.mul_mod(lambda, self.sub_mod(x1, x3)), y1);
        Point::new(x3, y3)
    }

    fn add_mod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + b as u128) % self.p as u128) as u64
    }

    fn sub_mod(&self, a: u64, b: u64) -> u64 {
        ((a as u128 + self.p as u128 - b as u128) % self.p as u128) as u64
    }

    fn mul_mod(&self, a: u64, b: u64) -> u64 {
        mul_mod(a, b, self.p)
    }

    fn inv(&self, a: u64) -> u64 {
        pow_mod(a, self.p - 2, self.p)
    }
}

pub(crate) fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub(crate) fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    let mut acc = 1 % m;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, exact for every `u64`.
pub fn is_prime(n: u64) -> bool {
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    if n < 2 {
        return false;
    }
    for &p in &BASES {
        if n % p == 0 {
            return n == p;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}
