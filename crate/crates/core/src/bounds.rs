//! Degree-bound arithmetic, root bounds, pole radii, Cauchy bounds and the evaluation
//! estimates for C and C-hat on the diagonal.

use astro_float::BigFloat;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, BigRat, binomial, ln_rat, pow, rat, rat_pow, rat_to_f64, ser};
use crate::check::{Finding, Tally};
use crate::error::{Error, Result};
use crate::genfun::{diagonal_c_formula, diagonal_c_hat_formula, diagonal_value, p_series};
use crate::hp::{self, Ctx};

/// Weighted sum 1 a_1 + ... + n a_n with a_i = r^{n-i}, summed term by term.
pub fn mu_weight_direct(n: usize, r: u64) -> BigInt {
    let rr = BigInt::from(r);
    (1..=n).map(|i| BigInt::from(i) * pow(&rr, n - i)).sum()
}

/// (r^{n+1} - (n+1) r + n)/(r-1)^2.
pub fn mu_weight(n: usize, r: u64) -> Result<BigRat> {
    if n < 1 || r < 2 {
        return Err(Error::invalid("mu needs n >= 1 and r >= 2"));
    }
    let rr = BigInt::from(r);
    let num = pow(&rr, n + 1) - BigInt::from(n + 1) * &rr + BigInt::from(n);
    Ok(BigRat::new(num, pow(&(rr - 1), 2)))
}

/// Closed form equals the direct sum and stays below r^{n+1}/(r-1)^2.
pub fn mu_check(n: usize, r: u64) -> Result<bool> {
    let closed = mu_weight(n, r)?;
    let rr = BigInt::from(r);
    let cap = BigRat::new(pow(&rr, n + 1), pow(&(rr - 1), 2));
    Ok(closed == BigRat::from_integer(mu_weight_direct(n, r)) && closed <= cap)
}

/// 1/a_i = r^{-(n-i)} for i = 1..n.
pub fn inverse_weights(n: usize, r: u64) -> Vec<BigRat> {
    (1..=n).map(|i| rat_pow(&rat(1, r as i64), (n - i) as i32)).collect()
}

/// sigma_0, ..., sigma_n of positive values.
pub fn elementary_symmetric(values: &[BigRat]) -> Result<Vec<BigRat>> {
    if values.iter().any(|v| !v.is_positive()) {
        return Err(Error::Domain("symmetric functions need positive values".into()));
    }
    let mut e = vec![BigRat::zero(); values.len() + 1];
    e[0] = BigRat::one();
    for (j, v) in values.iter().enumerate() {
        for p in (1..=j + 1).rev() {
            let add = &e[p - 1] * v;
            e[p] += add;
        }
    }
    Ok(e)
}

pub fn sigma_p(values: &[BigRat], p: usize) -> Result<BigRat> {
    let e = elementary_symmetric(values)?;
    e.get(p).cloned().ok_or_else(|| Error::invalid(format!("p = {p} exceeds {}", values.len())))
}

/// s_p^{1/p} >= s_{p+1}^{1/(p+1)} with s_p = sigma_p / C(n,p), compared as s_p^{p+1} >= s_{p+1}^p.
pub fn maclaurin_check(values: &[BigRat]) -> Result<bool> {
    let e = elementary_symmetric(values)?;
    let n = values.len() as i64;
    let s: Vec<BigRat> = (0..=n).map(|p| &e[p as usize] / BigRat::from_integer(binomial(n, p))).collect();
    Ok((1..n as usize).all(|p| rat_pow(&s[p], p as i32 + 1) >= rat_pow(&s[p + 1], p as i32)))
}

/// sigma_p^{1/p} >= sigma_{p+1}^{1/(p+1)} for all p, exactly.
pub fn sigma_root_chain_check(values: &[BigRat]) -> Result<bool> {
    let e = elementary_symmetric(values)?;
    Ok((1..values.len()).all(|p| rat_pow(&e[p], p as i32 + 1) >= rat_pow(&e[p + 1], p as i32)))
}

/// The p at which sigma_p^{1/p} is largest.
pub fn argmax_sigma_root(values: &[BigRat]) -> Result<usize> {
    let e = elementary_symmetric(values)?;
    let mut best = (1, f64::NEG_INFINITY);
    for (p, s) in e.iter().enumerate().skip(1) {
        let v = ln_rat(s) / p as f64;
        if v > best.1 {
            best = (p, v);
        }
    }
    Ok(best.0)
}

/// C(n,p)^{p+1} >= C(n,p+1)^p for 1 <= p <= n-1.
pub fn binomial_chain_check(n: usize) -> bool {
    let n = n as i64;
    (1..n).all(|p| pow(&binomial(n, p), p as usize + 1) >= pow(&binomial(n, p + 1), p as usize))
}

/// Unique positive zero of z^n - z^{n-1} - ... - 1, by bisection on [1, 2].
pub fn kappa_n(n: usize, tol: f64) -> Result<f64> {
    if n < 1 || !(tol > 0.0) {
        return Err(Error::invalid("kappa_n needs n >= 1 and tol > 0"));
    }
    let p = |z: f64| {
        let mut lower = 0.0;
        let mut zp = 1.0;
        for _ in 0..n {
            lower += zp;
            zp *= z;
        }
        zp - lower
    };
    let (mut lo, mut hi) = (1.0f64, 2.0f64);
    if p(lo) >= 0.0 {
        return Ok(lo);
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if p(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// kappa_n max_p (|c_p|/|c_0|)^{1/p} for c_0 z^n + ... + c_n.
pub fn fujiwara_bound(coeffs: &[Complex64]) -> Result<f64> {
    let c0 = coeffs.first().ok_or_else(|| Error::invalid("empty polynomial"))?.norm();
    if c0 == 0.0 {
        return Err(Error::invalid("leading coefficient is zero"));
    }
    let n = coeffs.len() - 1;
    if n == 0 {
        return Ok(0.0);
    }
    let m = coeffs[1..].iter().enumerate().map(|(j, c)| (c.norm() / c0).powf(1.0 / (j + 1) as f64)).fold(0.0, f64::max);
    Ok(kappa_n(n, 1e-12)? * m)
}

fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All roots of c_0 z^n + ... + c_n by Aberth-Ehrlich iteration.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let lead = *coeffs.first().ok_or_else(|| Error::invalid("empty polynomial"))?;
    if lead.norm() == 0.0 {
        return Err(Error::invalid("leading coefficient is zero"));
    }
    let mut c: Vec<Complex64> = coeffs.iter().map(|v| v / lead).collect();
    let mut roots = Vec::new();
    while c.len() > 1 && c.last().is_some_and(|v| v.norm() == 0.0) {
        c.pop();
        roots.push(Complex64::new(0.0, 0.0));
    }
    let n = c.len() - 1;
    if n == 0 {
        return Ok(roots);
    }
    let radius = fujiwara_bound(&c)?.max(1e-3);
    let mut z: Vec<Complex64> =
        (0..n).map(|k| Complex64::from_polar(radius, std::f64::consts::TAU * k as f64 / n as f64 + 0.4)).collect();
    for _ in 0..2000 {
        let mut biggest = 0.0f64;
        for k in 0..n {
            let (p, dp) = horner(&c, z[k]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = if dp.norm() == 0.0 { Complex64::new(1e-8, 1e-8) } else { p / dp };
            let s: Complex64 = (0..n).filter(|&j| j != k).map(|j| Complex64::new(1.0, 0.0) / (z[k] - z[j])).sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * s);
            z[k] -= w;
            biggest = biggest.max(w.norm() / z[k].norm().max(1.0));
        }
        if biggest < 1e-15 {
            break;
        }
    }
    roots.extend(z);
    Ok(roots)
}

#[derive(Clone, Debug, Serialize)]
pub struct InverseWeightReport {
    pub n: usize,
    pub r: u64,
    /// C-hat at (1/a_1, ..., 1/a_n), exact.
    #[serde(serialize_with = "ser::rat")]
    pub value: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub first_product: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub second_product: BigRat,
    pub alpha: f64,
    pub findings: Vec<Finding>,
}

/// alpha(r) = prod_{l >= 2} (1 + (r+1)/(r^l - 2r - 1)), summed in logs until the terms vanish.
pub fn alpha(r: u64) -> f64 {
    let rf = r as f64;
    let mut ln = 0.0;
    for l in 2..200 {
        let t = (rf + 1.0) / (rf.powi(l) - 2.0 * rf - 1.0);
        ln += t.ln_1p();
        if t < 1e-20 {
            break;
        }
    }
    ln.exp()
}

/// exp(2/(r-1)) <= 1 + 3/r.
pub fn exp_bound_holds(r: u64) -> bool {
    let rf = r as f64;
    (2.0 / (rf - 1.0)).exp() <= 1.0 + 3.0 / rf
}

/// 4r + 2 <= r^l - r^{l-1}, exactly.
pub fn weight_gap_holds(r: u64, l: usize) -> bool {
    let rr = BigInt::from(r);
    BigInt::from(4 * r + 2) <= pow(&rr, l) - pow(&rr, l - 1)
}

/// Product form of C-hat at the inverse weights with its two bounding chains.
pub fn c_hat_inverse_weights(n: usize, r: u64) -> Result<InverseWeightReport> {
    if r < 4 {
        return Err(Error::Domain(format!("r = {r}: the inverse-weight bounds need r >= 4")));
    }
    if n < 2 {
        return Err(Error::invalid("n must be at least 2"));
    }
    let rr = BigInt::from(r);
    let mut first = BigRat::one();
    for k in 1..n {
        let rk = pow(&rr, k);
        first *= BigRat::new(&rk - 1, &rk - 2);
    }
    let mut second = BigRat::one();
    let mut single = BigRat::one();
    for l in 2..n {
        let rl = pow(&rr, l);
        let f = BigRat::new(&rl - &rr, &rl - BigInt::from(2) * &rr - 1);
        second *= rat_pow(&f, (n - l) as i32);
        single *= f;
    }
    let value = &first * &second;
    let three_r = BigRat::one() + rat(3, r as i64);
    let al = alpha(r);
    let findings = vec![
        Finding::single(
            "product form equals C-hat^{n-1}(1/r)",
            value == diagonal_value(n, &rat(1, r as i64), true)?,
            arith::rat_to_string(&value),
        ),
        Finding::single("first product <= 1 + 3/r", first <= three_r, format!("{:.12}", rat_to_f64(&first))),
        Finding::single(
            "second product <= (single product)^{n-2}",
            second <= rat_pow(&single, n as i32 - 2),
            format!("{:.12}", rat_to_f64(&second)),
        ),
        Finding::single(
            "second product <= alpha(r)^{n-2} <= (1 + 3/r)^{n-2}",
            rat_to_f64(&second) <= al.powi(n as i32 - 2) * (1.0 + 1e-12)
                && al <= rat_to_f64(&three_r)
                && al <= (2.0 / (r as f64 - 1.0)).exp(),
            format!("alpha = {al:.12}"),
        ),
        Finding::single("exp(2/(r-1)) <= 1 + 3/r", exp_bound_holds(r), format!("{:.12}", (2.0 / (r as f64 - 1.0)).exp())),
    ];
    Ok(InverseWeightReport { n, r, value, first_product: first, second_product: second, alpha: al, findings })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeBound {
    pub n: usize,
    pub r: u64,
    #[serde(serialize_with = "ser::rat")]
    pub refined: BigRat,
    #[serde(serialize_with = "ser::int")]
    pub coarse: BigInt,
}

/// (20n^2 + 4n) r^3/((r-1)^3 (r+3)) (r+3)^n and 25 n^2 (r+3)^n.
pub fn degree_bound(n: usize, r: u64) -> Result<DegreeBound> {
    if r < 2 {
        return Err(Error::invalid("degree bound needs r >= 2"));
    }
    let rr = BigInt::from(r);
    let n_big = BigInt::from(n);
    let r3 = pow(&(&rr + 3), n);
    let refined = BigRat::new(
        (BigInt::from(20) * &n_big * &n_big + BigInt::from(4) * &n_big) * pow(&rr, 3) * &r3,
        pow(&(&rr - 1), 3) * (&rr + 3),
    );
    Ok(DegreeBound { n, r, refined, coarse: BigInt::from(25) * &n_big * &n_big * r3 })
}

/// (10n+2)(1+3/r)^{n-1} 2n r/(r-1)^2 r^n r/(r-1), the unsimplified end of the root-bound chain.
pub fn degree_bound_chain(n: usize, r: u64) -> BigRat {
    let rq = BigRat::from_integer(BigInt::from(r));
    let one = BigRat::one();
    BigRat::from_integer(BigInt::from(10 * n + 2))
        * rat_pow(&(&one + rat(3, r as i64)), n as i32 - 1)
        * BigRat::from_integer(BigInt::from(2 * n))
        * (&rq / rat_pow(&(&rq - &one), 2))
        * rat_pow(&rq, n as i32)
        * (&rq / (&rq - &one))
}

/// (2n/(2n-1))^{n+1} <= 2, exactly.
pub fn b_factor_holds(n: usize) -> bool {
    let q = BigRat::new(BigInt::from(2 * n), BigInt::from(2 * n - 1));
    rat_pow(&q, n as i32 + 1) <= BigRat::from_integer(BigInt::from(2))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GatePoint {
    pub n: usize,
    pub factor: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateResult {
    pub label: String,
    pub r: Option<u64>,
    /// Least n from which the inequality holds throughout the scan.
    pub n_min: Option<usize>,
    pub scan_max: usize,
    pub points: Vec<GatePoint>,
}

impl GateResult {
    pub fn factor_at(&self, n: usize) -> Option<f64> {
        self.points.iter().find(|p| p.n == n).map(|p| p.factor)
    }

    pub fn holds_from(&self, n: usize) -> bool {
        self.points.iter().filter(|p| p.n >= n).all(|p| p.holds)
    }
}

fn least_suffix(points: &[GatePoint]) -> Option<usize> {
    let mut n_min = None;
    for p in points.iter().rev() {
        if !p.holds {
            break;
        }
        n_min = Some(p.n);
    }
    n_min
}

fn power_gate(label: &str, r: u64, scan_max: usize, base_exp: usize, scale: usize) -> Result<GateResult> {
    if r < 9 {
        return Err(Error::Domain(format!("gates are defined for r >= 9, got {r}")));
    }
    let points: Vec<GatePoint> = (1..=scan_max)
        .into_par_iter()
        .map(|n| {
            let bound = degree_bound(scale * n, r).expect("r >= 9").refined;
            let target = BigRat::from_integer(pow(&BigInt::from(2), base_exp * n));
            let ratio = &bound / &target;
            GatePoint { n, factor: rat_to_f64(&ratio), holds: bound <= target }
        })
        .collect();
    Ok(GateResult { label: label.into(), r: Some(r), n_min: least_suffix(&points), scan_max, points })
}

/// 2^{5n} >= refined d_GG(n, r) scanned over 1..=scan_max.
pub fn refined_gate(r: u64, scan_max: usize) -> Result<GateResult> {
    power_gate("2^{5n} >= d_GG(n, r)", r, scan_max, 5, 1)
}

/// 4^{5n} >= refined d_GG(2n, r) scanned over 1..=scan_max.
pub fn reduced_gate(r: u64, scan_max: usize) -> Result<GateResult> {
    power_gate("4^{5n} >= d_GG(2n, r)", r, scan_max, 10, 2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalBound {
    pub n: usize,
    /// log of the degree bound produced by the chosen r(n)
    pub ln_bound: f64,
    /// log of the announced bound
    pub ln_target: f64,
    pub gate_exponent: f64,
    pub gate_factor: f64,
    pub holds: bool,
}

impl FinalBound {
    pub fn gate_below_one(&self) -> bool {
        self.gate_exponent < 0.0
    }
}

fn check_logs(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("log log n is not positive at n = {n}")));
    }
    Ok(())
}

/// d_GG(n) = 25 n^2 (sqrt(n) log(n)/2 + 3)^n against (sqrt(n) log n)^n.
pub fn dgg_final(n: usize) -> Result<FinalBound> {
    check_logs(n)?;
    let nf = n as f64;
    let l = nf.ln();
    let ln_bound = nf * (nf.sqrt() * l / 2.0 + 3.0).ln() + (25.0 * nf * nf).ln();
    let ln_target = nf * (nf.sqrt() * l).ln();
    let gate_exponent = -nf * std::f64::consts::LN_2 + 6.0 * nf.sqrt() / l;
    Ok(FinalBound { n, ln_bound, ln_target, gate_exponent, gate_factor: gate_exponent.exp(), holds: ln_bound <= ln_target })
}

/// d_K(n) = 100 n^2 (sqrt(2n) log log(2n)/2 + 3)^{2n} against (n log n)^n.
pub fn dk_final(n: usize) -> Result<FinalBound> {
    check_logs(n)?;
    let nf = n as f64;
    let ll2 = (2.0 * nf).ln().ln();
    let ln_bound = 2.0 * nf * ((2.0 * nf).sqrt() * ll2 / 2.0 + 3.0).ln() + (100.0 * nf * nf).ln();
    let ln_target = nf * (nf * nf.ln()).ln();
    let gate_exponent = 2.0 * nf * ll2.ln() - nf * nf.ln().ln() - nf * std::f64::consts::LN_2
        + 2.0 * nf.sqrt() * 3.0 * std::f64::consts::SQRT_2 / ll2;
    Ok(FinalBound { n, ln_bound, ln_target, gate_exponent, gate_factor: gate_exponent.exp(), holds: ln_bound <= ln_target })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GateSearch {
    pub label: String,
    /// Least N with gate factor < 1 and the final inequality on [N, 2N].
    pub n_min: usize,
    /// Least N with gate factor < 1 on [N, 2N], ignoring the polynomial prefactor.
    pub gate_only_n_min: usize,
    pub window: Vec<FinalBound>,
}

fn search(label: &str, cap: usize, eval: fn(usize) -> Result<FinalBound>) -> Result<GateSearch> {
    let table: Vec<FinalBound> = (3..=2 * cap).into_par_iter().map(eval).collect::<Result<_>>()?;
    let at = |n: usize| &table[n - 3];
    let first = |pred: &dyn Fn(&FinalBound) -> bool| (3..=cap).find(|&big| (big..=2 * big).all(|m| pred(at(m))));
    let n_min = first(&|b| b.gate_below_one() && b.holds)
        .ok_or_else(|| Error::Domain(format!("{label}: no threshold below {cap}")))?;
    let gate_only = first(&|b| b.gate_below_one()).unwrap_or(n_min);
    Ok(GateSearch { label: label.into(), n_min, gate_only_n_min: gate_only, window: (n_min..=2 * n_min).map(|m| at(m).clone()).collect() })
}

pub fn find_n_gg(cap: usize) -> Result<GateSearch> {
    search("N_GG", cap, dgg_final)
}

pub fn find_n_k(cap: usize) -> Result<GateSearch> {
    search("N_K", cap, dk_final)
}

/// Polynomial sum c_j x^{e_j}, as coefficients from the leading power down.
fn sparse_poly(terms: &[(usize, f64)]) -> Vec<Complex64> {
    let deg = terms.iter().map(|t| t.0).max().unwrap_or(0);
    let mut c = vec![Complex64::new(0.0, 0.0); deg + 1];
    for &(e, v) in terms {
        c[deg - e] += v;
    }
    c
}

/// Roots of `den` that are not cancelled by a root of `num`.
fn uncancelled_roots(num: &[(usize, f64)], den: &[(usize, f64)]) -> Result<Vec<Complex64>> {
    let mut poles = polynomial_roots(&sparse_poly(den))?;
    for z in polynomial_roots(&sparse_poly(num))? {
        if let Some(j) = (0..poles.len()).min_by(|&a, &b| (poles[a] - z).norm().total_cmp(&(poles[b] - z).norm()))
            && (poles[j] - z).norm() < 1e-6
        {
            poles.swap_remove(j);
        }
    }
    Ok(poles)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoleRadii {
    pub n: usize,
    pub r: f64,
    pub r_hat: f64,
    /// smallest sampled |1 - 2x^{i-1} +- x^i| on |x| <= 1/2, i >= 3
    pub sampled_min: f64,
}

/// Smallest pole moduli of C^{n-1}(x) and C-hat^{n-1}(x) from the roots of their factors.
pub fn pole_radii(n: usize) -> Result<PoleRadii> {
    if n < 3 {
        return Err(Error::invalid("pole radii need n >= 3"));
    }
    let mut r = f64::INFINITY;
    let mut r_hat = f64::INFINITY;
    let mut sampled_min = f64::INFINITY;
    for i in 1..n {
        let m = uncancelled_roots(&[(0, 1.0), (i, -1.0)], &[(0, 1.0), (i, -2.0)])?
            .iter()
            .map(|z| z.norm())
            .fold(f64::INFINITY, f64::min);
        r = r.min(m);
        r_hat = r_hat.min(m);
    }
    for i in 2..n {
        let num = [(0, 1.0), (i - 1, -1.0)];
        for (sign, target) in [(1.0, &mut r), (-1.0, &mut r_hat)] {
            let den = [(0, 1.0), (i - 1, -2.0), (i, sign)];
            let m = uncancelled_roots(&num, &den)?.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
            *target = target.min(m);
            if i >= 3 {
                sampled_min = sampled_min.min(min_modulus_on_disc(i, sign, 0.5, 2048));
            }
        }
    }
    Ok(PoleRadii { n, r, r_hat, sampled_min })
}

/// Sampled minimum of |1 - 2x^{i-1} + sign x^i| over circles of radius up to `radius`.
pub fn min_modulus_on_disc(i: usize, sign: f64, radius: f64, samples: usize) -> f64 {
    let mut m = f64::INFINITY;
    for ring in 1..=4 {
        let rho = radius * ring as f64 / 4.0;
        for s in 0..samples {
            let x = Complex64::from_polar(rho, std::f64::consts::TAU * s as f64 / samples as f64);
            let v = Complex64::new(1.0, 0.0) - 2.0 * x.powu(i as u32 - 1) + sign * x.powu(i as u32);
            m = m.min(v.norm());
        }
    }
    m
}

/// 0 < rho < sqrt(2) - 1, decided exactly as (rho + 1)^2 < 2.
pub fn rho_in_disc(rho: &BigRat) -> bool {
    rho.is_positive() && rat_pow(&(rho + BigRat::one()), 2) < BigRat::from_integer(BigInt::from(2))
}

/// C-hat_h rho^h <= C-hat^{n-1}(rho) for h <= h_max, exactly.
pub fn cauchy_bound_check(n: usize, rho: &BigRat, h_max: usize) -> Result<Finding> {
    if !rho_in_disc(rho) {
        return Err(Error::Domain(format!("rho = {} lies outside (0, sqrt2 - 1)", arith::rat_to_string(rho))));
    }
    let value = diagonal_value(n, rho, true)?;
    let diag = diagonal_c_hat_formula(n, h_max);
    let mut t = Tally::new(format!("C-hat_h rho^h <= C-hat(rho), n={n}, rho={}", arith::rat_to_string(rho)));
    for h in 0..=h_max {
        let lhs = BigRat::from_integer(diag.coeff(h).clone()) * rat_pow(rho, h as i32);
        t.record(lhs <= value, || format!("h={h}"));
    }
    Ok(t.with_value(format!("{:.12}", rat_to_f64(&value))).finish())
}

/// log C^{n-1}(x) (or of C-hat) from the reorganised product over k = 1..n-1.
pub fn ln_diagonal_hp(ctx: &mut Ctx, n: usize, x: &BigFloat, hat: bool) -> Result<BigFloat> {
    let one = ctx.int(1);
    let two = ctx.int(2);
    let mut acc = ctx.int(0);
    for k in 1..n {
        let xk = ctx.powi(x, k);
        let xk1 = ctx.mul(&xk, x);
        let a = ctx.sub(&one, &ctx.mul(&two, &xk));
        let b = ctx.sub(&one, &xk);
        let c = if hat { ctx.sub(&a, &xk1) } else { ctx.add(&a, &xk1) };
        if !a.is_positive() || !b.is_positive() || !c.is_positive() {
            return Err(Error::Pole(format!("factor of degree {k} is not positive at x = {}", hp::to_f64(x))));
        }
        let la = ctx.ln(&a);
        let lb = ctx.ln(&b);
        let lc = ctx.ln(&c);
        acc = ctx.sub(&acc, &la);
        acc = ctx.add(&acc, &ctx.mul(&ctx.int((n - k) as i64), &lb));
        acc = ctx.sub(&acc, &ctx.mul(&ctx.int((n - k - 1) as i64), &lc));
    }
    Ok(acc)
}

/// C-hat^{n-1}(1/sqrt n) <= e^{12} e^{sqrt n}.
pub fn cauchy_instantiation(n: usize, bits: usize) -> Result<Finding> {
    if n < 6 {
        return Err(Error::Domain(format!("1/sqrt({n}) lies outside the convergence disc")));
    }
    let mut ctx = Ctx::new(bits);
    let sq = ctx.sqrt(&ctx.int(n as i64));
    let x = ctx.div(&ctx.int(1), &sq);
    let lhs = ln_diagonal_hp(&mut ctx, n, &x, true)?;
    let rhs = ctx.add(&ctx.int(12), &sq);
    Ok(Finding::single(
        format!("C-hat(1/sqrt n) <= e^12 e^sqrt(n), n={n}"),
        lhs <= rhs,
        format!("{:.9} <= {:.9}", hp::to_f64(&lhs), hp::to_f64(&rhs)),
    ))
}

#[derive(Clone, Debug, Serialize)]
pub struct EstimateReport {
    pub n: usize,
    pub r: u64,
    pub bits: usize,
    pub ln_c_hat: f64,
    pub ln_c: f64,
    pub a: f64,
    pub ln_c_at_sqrt_n_a: f64,
    pub findings: Vec<Finding>,
}

/// a(n) = log log n, required to be at least 1.
pub fn default_a(n: usize) -> Result<f64> {
    let a = (n as f64).ln().ln();
    if !(a >= 1.0) {
        return Err(Error::Domain(format!("a(n) = log log n = {a:.4} < 1 at n = {n}")));
    }
    Ok(a)
}

/// log C(1/(sqrt(n) a)) >= sqrt(n)/(2a).
pub fn growth_check(n: usize, a: f64, bits: usize) -> Result<(f64, Finding)> {
    let mut ctx = Ctx::new(bits);
    let r = ctx.mul(&ctx.sqrt(&ctx.int(n as i64)), &ctx.f64(a));
    let x = ctx.div(&ctx.int(1), &r);
    let lhs = ln_diagonal_hp(&mut ctx, n, &x, false)?;
    let rhs = ctx.div(&ctx.sqrt(&ctx.int(n as i64)), &ctx.f64(2.0 * a));
    let v = hp::to_f64(&lhs);
    Ok((
        v,
        Finding::single(
            format!("C(1/(sqrt(n) a)) >= e^(sqrt(n)/(2a)), n={n}"),
            lhs >= rhs,
            format!("{v:.9} >= {:.9}", hp::to_f64(&rhs)),
        ),
    ))
}

/// The three evaluation estimates at x = 1/r and x = 1/(sqrt(n) a(n)).
pub fn evaluation_estimates(n: usize, r: u64, bits: usize) -> Result<EstimateReport> {
    if r < 10 {
        return Err(Error::Domain(format!("the estimates assume r >= 10, got {r}")));
    }
    let a = default_a(n)?;
    let bits = bits.max(128);
    let mut ctx = Ctx::new(bits);
    let x = ctx.div(&ctx.int(1), &ctx.int(r as i64));
    let lh = ln_diagonal_hp(&mut ctx, n, &x, true)?;
    let lc = ln_diagonal_hp(&mut ctx, n, &x, false)?;
    let rr = ctx.int(r as i64);
    let nn = ctx.int(n as i64);
    let r2 = ctx.mul(&rr, &rr);
    let b91 = ctx.add(&ctx.div(&nn, &rr), &ctx.div(&ctx.mul(&ctx.int(12), &nn), &r2));
    let b92 = ctx.div(&ctx.mul(&ctx.int(17), &nn), &r2);
    let diff = ctx.sub(&lh, &lc);
    let (lg, growth) = growth_check(n, a, bits)?;
    let findings = vec![
        Finding::single(
            format!("C-hat(1/r) <= e^(n/r + 12n/r^2), n={n}, r={r}"),
            lh <= b91,
            format!("{:.9} <= {:.9}", hp::to_f64(&lh), hp::to_f64(&b91)),
        ),
        Finding::single(
            format!("C-hat(1/r)/C(1/r) <= e^(17n/r^2), n={n}, r={r}"),
            diff <= b92,
            format!("{:.9} <= {:.9}", hp::to_f64(&diff), hp::to_f64(&b92)),
        ),
        Finding::single(format!("C-hat(1/r) >= C(1/r), n={n}, r={r}"), !diff.is_negative(), format!("{:.9}", hp::to_f64(&diff))),
        growth,
    ];
    Ok(EstimateReport { n, r, bits, ln_c_hat: hp::to_f64(&lh), ln_c: hp::to_f64(&lc), a, ln_c_at_sqrt_n_a: lg, findings })
}

/// P_h^{n-1} >= 1 and C_h^{n-1} >= 2^h for 0 <= h <= floor(sqrt n), exact integers.
pub fn square_growth_check(n: usize) -> Result<Finding> {
    if n < 2 {
        return Err(Error::invalid("square growth check needs n >= 2"));
    }
    let h_max = n.isqrt();
    let p = p_series(n, h_max);
    let c = diagonal_c_formula(n, h_max);
    let mut t = Tally::new(format!("P_h >= 1 and C_h >= 2^h for h <= {h_max}, n={n}"));
    for h in 0..=h_max {
        t.record(p.coeff(h) >= &BigInt::one(), || format!("P_{h} = {}", p.coeff(h)));
        t.record(c.coeff(h) >= &(BigInt::one() << h), || format!("C_{h} = {}", c.coeff(h)));
    }
    Ok(t.with_value(format!("C_{h_max} = {}", c.coeff(h_max))).finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng, rngs::StdRng};

    #[test]
    fn mu() {
        assert_eq!(mu_weight(2, 3).unwrap(), rat(5, 1));
        assert_eq!(mu_weight_direct(2, 3), BigInt::from(5));
        assert_eq!(mu_weight(1, 7).unwrap(), rat(1, 1));
        for n in 1..=30 {
            for r in 2..=20 {
                assert!(mu_check(n, r).unwrap(), "n={n} r={r}");
            }
        }
        assert!(mu_weight(3, 1).is_err());
    }

    #[test]
    fn symmetric_functions() {
        let ones = vec![rat(1, 1); 6];
        for p in 0..=6 {
            assert_eq!(sigma_p(&ones, p).unwrap(), BigRat::from_integer(binomial(6, p as i64)));
        }
        assert!(sigma_root_chain_check(&ones).unwrap());
        assert!(maclaurin_check(&ones).unwrap());
        let w = inverse_weights(4, 9);
        assert_eq!(argmax_sigma_root(&w).unwrap(), 1);
        for n in 1..=20 {
            assert!(sigma_p(&inverse_weights(n, 9), 1).unwrap() <= rat(9, 8));
        }
        for n in 1..=30 {
            assert!(binomial_chain_check(n));
        }
        assert!(sigma_p(&[rat(1, 2), rat(0, 1)], 1).is_err());
        assert!(sigma_p(&[rat(1, 2)], 3).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]
        #[test]
        fn sigma_chains_hold(v in proptest::collection::vec((1i64..50, 1i64..50), 1..10)) {
            let values: Vec<BigRat> = v.iter().map(|&(p, q)| rat(p, q)).collect();
            prop_assert!(maclaurin_check(&values).unwrap());
            prop_assert!(sigma_root_chain_check(&values).unwrap());
        }
    }

    #[test]
    fn kappa() {
        assert_eq!(kappa_n(1, 1e-12).unwrap(), 1.0);
        assert!((kappa_n(2, 1e-13).unwrap() - (1.0 + 5f64.sqrt()) / 2.0).abs() < 1e-12);
        let k10 = kappa_n(10, 1e-12).unwrap();
        assert!(k10 > 1.99 && k10 < 2.0);
        let mut prev = 1.0;
        for n in 2..=30 {
            let k = kappa_n(n, 1e-12).unwrap();
            assert!(k > prev && k < 2.0);
            prev = k;
        }
    }

    fn c(v: f64) -> Complex64 {
        Complex64::new(v, 0.0)
    }

    #[test]
    fn fujiwara_examples() {
        let b = fujiwara_bound(&[c(1.0), c(-3.0), c(2.0)]).unwrap();
        assert!((b - (1.0 + 5f64.sqrt()) / 2.0 * 3.0).abs() < 1e-9);
        assert_eq!(fujiwara_bound(&[c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap(), 0.0);
        assert!(fujiwara_bound(&[c(0.0), c(1.0)]).is_err());
        let mut roots: Vec<f64> = polynomial_roots(&[c(1.0), c(-3.0), c(2.0)]).unwrap().iter().map(|z| z.re).collect();
        roots.sort_by(f64::total_cmp);
        assert!((roots[0] - 1.0).abs() < 1e-12 && (roots[1] - 2.0).abs() < 1e-12);
    }

    fn companion_roots(coeffs: &[f64]) -> Vec<Complex64> {
        let n = coeffs.len() - 1;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for j in 0..n {
            m[(0, j)] = -coeffs[j + 1] / coeffs[0];
        }
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        m.complex_eigenvalues().iter().cloned().collect()
    }

    #[test]
    fn random_polynomials_inside_bound() {
        let mut rng = StdRng::seed_from_u64(7);
        for _ in 0..100 {
            let deg = rng.gen_range(1..=8);
            let mut coeffs: Vec<f64> = (0..=deg).map(|_| rng.gen_range(-10.0..10.0)).collect();
            if coeffs[0].abs() < 0.1 {
                coeffs[0] = 1.0;
            }
            let cs: Vec<Complex64> = coeffs.iter().map(|&v| c(v)).collect();
            let bound = fujiwara_bound(&cs).unwrap();
            let ours = polynomial_roots(&cs).unwrap();
            let oracle = companion_roots(&coeffs);
            let mut a: Vec<f64> = ours.iter().map(|z| z.norm()).collect();
            let mut b: Vec<f64> = oracle.iter().map(|z| z.norm()).collect();
            a.sort_by(f64::total_cmp);
            b.sort_by(f64::total_cmp);
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-6 * y.max(1.0), "{a:?} vs {b:?}");
                assert!(*x <= bound + 1e-9);
            }
        }
    }

    #[test]
    fn inverse_weight_chains() {
        for r in 9..=20 {
            assert!(exp_bound_holds(r));
            for n in [2usize, 3, 5, 8] {
                let rep = c_hat_inverse_weights(n, r).unwrap();
                for f in &rep.findings {
                    assert!(f.passed, "n={n} r={r}: {}", f.name);
                }
            }
        }
        for r in 6..=20 {
            for l in 2..=12 {
                assert!(weight_gap_holds(r, l));
            }
        }
        assert!(!weight_gap_holds(5, 2));
        assert!(c_hat_inverse_weights(5, 3).is_err());
    }

    #[test]
    fn degree_bounds() {
        for n in 2..=50 {
            for r in 9..=20 {
                let d = degree_bound(n, r).unwrap();
                assert!(d.refined <= BigRat::from_integer(d.coarse.clone()));
                if n <= 12 {
                    assert_eq!(degree_bound_chain(n, r), d.refined);
                }
            }
        }
        let d = degree_bound(20, 20).unwrap();
        assert!(BigRat::from_integer(pow(&BigInt::from(2), 100)) >= d.refined);
        for n in 4..=200 {
            assert!(b_factor_holds(n));
        }
        assert!(!b_factor_holds(2));
    }

    #[test]
    fn power_gates() {
        let g9 = refined_gate(9, 100).unwrap();
        assert_eq!(g9.n_min, Some(4));
        let g20 = refined_gate(20, 100).unwrap();
        assert_eq!(g20.n_min, Some(18));
        assert!(g20.holds_from(20) && !g20.holds_from(10));
        assert!(g20.factor_at(17).unwrap() > 1.0);
        let k20 = reduced_gate(20, 100).unwrap();
        assert_eq!(k20.n_min, Some(9));
        assert!(refined_gate(8, 10).is_err());
    }

    #[test]
    fn final_gates() {
        let gg = find_n_gg(500).unwrap();
        assert_eq!(gg.n_min, 26);
        assert_eq!(gg.gate_only_n_min, 13);
        assert!(gg.window.iter().all(|b| b.gate_factor < 1.0 && b.holds));
        let k = find_n_k(500).unwrap();
        assert_eq!(k.n_min, 32);
        assert_eq!(k.gate_only_n_min, 26);
        assert!(k.window.iter().all(|b| b.gate_factor < 1.0 && b.holds));
        assert!(dk_final(2).is_err());
        assert!(!dgg_final(13).unwrap().holds);
    }

    #[test]
    fn poles() {
        for n in 3..=10 {
            let p = pole_radii(n).unwrap();
            assert!((p.r - 0.5).abs() < 1e-9, "n={n} {p:?}");
            assert!((p.r_hat - (2f64.sqrt() - 1.0)).abs() < 1e-9, "n={n} {p:?}");
            assert!(p.sampled_min >= 0.375 - 1e-12);
        }
        assert!((min_modulus_on_disc(3, 1.0, 0.5, 4096) - 0.375).abs() < 1e-3);
        let roots = polynomial_roots(&sparse_poly(&[(0, 1.0), (1, -2.0), (2, -1.0)])).unwrap();
        let mut m: Vec<f64> = roots.iter().map(|z| z.norm()).collect();
        m.sort_by(f64::total_cmp);
        assert!((m[0] - (2f64.sqrt() - 1.0)).abs() < 1e-12 && (m[1] - (1.0 + 2f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn cauchy() {
        for n in 2..=8 {
            for rho in [rat(1, 10), rat(1, 4), rat(2, 5)] {
                assert!(cauchy_bound_check(n, &rho, 20).unwrap().passed);
            }
        }
        assert!(cauchy_bound_check(4, &rat(5, 12), 5).is_err());
        assert!(rho_in_disc(&rat(41421, 100000)) && !rho_in_disc(&rat(41422, 100000)));
        for n in [16usize, 17, 50, 100] {
            assert!(cauchy_instantiation(n, 128).unwrap().passed);
        }
    }

    #[test]
    fn hp_product_matches_exact() {
        let mut ctx = Ctx::new(128);
        let x = ctx.rat(&rat(1, 10));
        for hat in [false, true] {
            let v = ln_diagonal_hp(&mut ctx, 10, &x, hat).unwrap();
            let exact = ln_rat(&diagonal_value(10, &rat(1, 10), hat).unwrap());
            assert!((hp::to_f64(&v) - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn square_growth() {
        for n in [4usize, 9, 16, 25] {
            let f = square_growth_check(n).unwrap();
            assert!(f.passed, "{f:?}");
            assert_eq!(f.points, 2 * (n.isqrt() as u64 + 1));
        }
        assert!(square_growth_check(1).is_err());
    }

    #[test]
    fn evaluation_estimate_suite() {
        for n in [50usize, 100, 200] {
            let rep = evaluation_estimates(n, 10, 128).unwrap();
            for f in &rep.findings {
                assert!(f.passed, "{}: {:?}", f.name, f.value);
            }
        }
        assert!(evaluation_estimates(15, 10, 128).is_err());
        assert!(evaluation_estimates(100, 9, 128).is_err());
    }
}
