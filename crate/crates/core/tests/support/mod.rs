//! Shared test support: double-double arithmetic and an independent
//! power-series Bessel oracle accurate to ~30 significant digits, plus small
//! fitting helpers used by several integration suites.
#![allow(dead_code)]

/// Unevaluated double-double value `hi + lo` with |lo| <= ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = f64::mul_add(a, b, -p);
    (p, err)
}

impl Dd {
    pub fn from(a: f64) -> Self {
        Dd { hi: a, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, other.hi);
        let e = e + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s, e);
        Dd { hi, lo }
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(Dd { hi: -other.hi, lo: -other.lo })
    }

    pub fn mul(self, other: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, other.hi);
        let e = e + self.hi * other.lo + self.lo * other.hi;
        let (hi, lo) = quick_two_sum(p, e);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul(Dd::from(q1)));
        let q2 = r.hi / other.hi;
        let r2 = r.sub(other.mul(Dd::from(q2)));
        let q3 = r2.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2 + q3);
        Dd { hi, lo }
    }

    pub fn scale(self, c: f64) -> Dd {
        self.mul(Dd::from(c))
    }
}

/// I0(r) by the defining power series in double-double arithmetic.
/// Valid (no overflow) for 0 <= r <= ~700.
pub fn i0_dd(r: f64) -> Dd {
    let x = Dd::from(r).scale(0.5);
    let x2 = x.mul(x);
    let mut term = Dd::from(1.0);
    let mut sum = term;
    let mut k = 1.0f64;
    loop {
        term = term.mul(x2).div(Dd::from(k * k));
        sum = sum.add(term);
        if term.hi < 1e-35 * sum.hi || k > 1500.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

/// I1(r) by the defining power series in double-double arithmetic.
pub fn i1_dd(r: f64) -> Dd {
    let x = Dd::from(r).scale(0.5);
    let x2 = x.mul(x);
    let mut term = Dd::from(1.0);
    let mut sum = term;
    let mut k = 1.0f64;
    loop {
        term = term.mul(x2).div(Dd::from(k * (k + 1.0)));
        sum = sum.add(term);
        if term.hi < 1e-35 * sum.hi || k > 1500.0 {
            break;
        }
        k += 1.0;
    }
    sum.mul(x)
}

/// ratio(r) = I1/I0 via the double-double series (oracle value).
pub fn ratio_dd(r: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    i1_dd(r).div(i0_dd(r)).to_f64()
}

/// Relative error with a floor on the denominator.
pub fn rel_err(approx: f64, exact: f64) -> f64 {
    (approx - exact).abs() / exact.abs().max(1e-300)
}

/// Least-squares slope of y against x.
pub fn lsq_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys.iter()) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Deterministic pseudo-random stream (SplitMix64) for reproducible fixtures.
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
}
