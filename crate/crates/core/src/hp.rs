//! Thin wrapper over astro-float for the handful of high-precision evaluations.

use astro_float::{BigFloat, Consts, Radix, RoundingMode};

use crate::arith::BigRat;

const RM: RoundingMode = RoundingMode::ToEven;

pub struct Ctx {
    pub bits: usize,
    cc: Consts,
}

impl Ctx {
    pub fn new(bits: usize) -> Self {
        Ctx { bits: bits.max(64), cc: Consts::new().expect("astro-float constant cache") }
    }

    pub fn int(&self, v: i64) -> BigFloat {
        BigFloat::from_i64(v, self.bits)
    }

    pub fn f64(&self, v: f64) -> BigFloat {
        BigFloat::from_f64(v, self.bits)
    }

    pub fn rat(&mut self, x: &BigRat) -> BigFloat {
        let n = BigFloat::parse(&x.numer().to_string(), Radix::Dec, self.bits, RM, &mut self.cc);
        let d = BigFloat::parse(&x.denom().to_string(), Radix::Dec, self.bits, RM, &mut self.cc);
        n.div(&d, self.bits, RM)
    }

    pub fn add(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.add(b, self.bits, RM)
    }

    pub fn sub(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.sub(b, self.bits, RM)
    }

    pub fn mul(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.mul(b, self.bits, RM)
    }

    pub fn div(&self, a: &BigFloat, b: &BigFloat) -> BigFloat {
        a.div(b, self.bits, RM)
    }

    pub fn powi(&self, a: &BigFloat, n: usize) -> BigFloat {
        a.powi(n, self.bits, RM)
    }

    pub fn sqrt(&self, a: &BigFloat) -> BigFloat {
        a.sqrt(self.bits, RM)
    }

    pub fn ln(&mut self, a: &BigFloat) -> BigFloat {
        a.ln(self.bits, RM, &mut self.cc)
    }

    pub fn exp(&mut self, a: &BigFloat) -> BigFloat {
        a.exp(self.bits, RM, &mut self.cc)
    }
}

pub fn to_f64(x: &BigFloat) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x.is_inf_pos() {
        return f64::INFINITY;
    }
    if x.is_inf_neg() {
        return f64::NEG_INFINITY;
    }
    x.to_string().parse().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;

    #[test]
    fn round_trip_and_logs() {
        let mut c = Ctx::new(128);
        let third = c.rat(&rat(1, 3));
        assert!((to_f64(&third) - 1.0 / 3.0).abs() < 1e-16);
        let two = c.int(2);
        let l = c.ln(&two);
        assert!((to_f64(&l) - std::f64::consts::LN_2).abs() < 1e-16);
        let e = c.exp(&c.int(1));
        assert!((to_f64(&e) - std::f64::consts::E).abs() < 1e-15);
        let big = c.powi(&c.int(10), 40);
        assert!((to_f64(&big) / 1e40 - 1.0).abs() < 1e-15);
        let s = c.sqrt(&two);
        assert!((to_f64(&s) - std::f64::consts::SQRT_2).abs() < 1e-16);
    }
}
