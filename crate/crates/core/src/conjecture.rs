//! The central monomial, the quotients M^n_k, the constant term CA and its decomposition.

use std::time::Instant;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::arith::{self, BigRat, ln_rat, multinomial, pow, prepare_factorials, rat_to_f64, ser};
use crate::cache::{SeriesCache, SeriesKind};
use crate::check::{Finding, Tally};
use crate::error::{Error, Result};
use crate::genfun::{
    build_c, build_c_hat, diagonal_c_hat_formula, diagonal_value, for_each_staircase, i_indices, in_staircase,
    m_quotient, staircase_hull,
};
use crate::series::{MultiSeries, TruncationBox, unpack};

pub const DEFAULT_BUDGET: u64 = 2_000_000;
pub const EXACT_CUTOFF: usize = 6;

#[derive(Clone, Debug)]
pub struct Options {
    /// Largest number of coefficients a C table may have.
    pub budget: u64,
    /// Worker threads; 0 uses the global rayon pool.
    pub workers: usize,
    pub cache: Option<SeriesCache>,
    /// Radius used for the geometric cap of the certified tail.
    pub tail_rho: BigRat,
    /// Number of exact diagonal coefficients used past the truncation order.
    pub tail_terms: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options { budget: DEFAULT_BUDGET, workers: 0, cache: None, tail_rho: arith::rat(2, 5), tail_terms: 60 }
    }
}

pub(crate) fn with_pool<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return f();
    }
    rayon::ThreadPoolBuilder::new().num_threads(workers).build().expect("thread pool").install(f)
}

/// C or C-hat on `bx`, through the cache when one is configured.
pub fn c_table(n: usize, bx: &TruncationBox, kind: SeriesKind, opts: &Options) -> Result<(MultiSeries, bool)> {
    let required = bx.count();
    if required > opts.budget as u128 {
        return Err(Error::ResourceLimit { required, budget: opts.budget });
    }
    let build = || match kind {
        SeriesKind::C => build_c(n, bx),
        SeriesKind::CHat => build_c_hat(n, bx),
        SeriesKind::Sums => Err(Error::invalid("bucket sums are not a coefficient table")),
    };
    match &opts.cache {
        Some(cache) => cache.get_or_build(kind, n, bx, build),
        None => Ok((build()?, false)),
    }
}

/// Builds and stores the C table the CA computation for `n` reads: the full staircase hull,
/// or its total-degree-`t` part when `trunc` is given. Returns whether it was already cached.
pub fn warm_table(n: usize, trunc: Option<u32>, opts: &Options) -> Result<bool> {
    if opts.cache.is_none() {
        return Err(Error::invalid("warming needs a cache directory"));
    }
    match trunc {
        None => Ok(exact_buckets(n, opts)?.2),
        Some(t) => Ok(c_table(n, &staircase_hull(n, Some(t))?, SeriesKind::C, opts)?.1),
    }
}

/// (n^2)!/(n!)^n r^{n n(n-1)/2}.
pub fn central_monomial(n: usize, r: u64) -> BigInt {
    multinomial(&vec![n; n]) * pow(&BigInt::from(r), n * n * (n - 1) / 2)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MultinomialQuotient {
    pub n: usize,
    pub ks: Vec<u32>,
    #[serde(serialize_with = "ser::rat")]
    pub value: BigRat,
}

pub fn multinomial_quotient(n: usize, ks: &[u32]) -> Result<MultinomialQuotient> {
    Ok(MultinomialQuotient { n, ks: ks.to_vec(), value: m_quotient(n, ks)? })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Certified { trunc: u32 },
    Inconclusive { trunc: u32 },
}

#[derive(Clone, Debug, Serialize)]
pub struct ConjectureReport {
    pub n: usize,
    pub r: u64,
    #[serde(serialize_with = "ser::int")]
    pub i0_tilde: BigInt,
    /// Exact CA, or a certified lower bound for it.
    #[serde(serialize_with = "ser::rat")]
    pub ca: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub i0: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub margin: BigRat,
    pub ca_decimal: f64,
    pub mode: Mode,
    #[serde(serialize_with = "ser::opt_rat")]
    pub tail_bound: Option<BigRat>,
    pub coefficients: usize,
    #[serde(skip)]
    pub elapsed: f64,
    #[serde(skip)]
    pub cache_hit: bool,
}

impl ConjectureReport {
    pub fn holds(&self) -> bool {
        !self.margin.is_negative()
    }

    pub fn to_json(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["timing"] = serde_json::json!({ "elapsed_seconds": self.elapsed, "cache_hit": self.cache_hit });
        v
    }
}

/// Sum over staircase indices k (|k| <= max_total) of (n^2)!/prod i! * C_k, bucketed by |k|.
fn bucketed_sums(n: usize, c: &MultiSeries, max_total: Option<u32>) -> Vec<BigInt> {
    let top = n * n * (n - 1) / 2;
    prepare_factorials(n * n);
    let big = arith::factorial(n * n);
    let facts: Vec<BigInt> = (0..=n * n).map(arith::factorial).collect();
    let nv = n - 1;
    let terms = c.packed_terms();
    let chunk = (terms.len() / 256).max(256);
    let partials: Vec<Vec<BigInt>> = terms
        .par_chunks(chunk)
        .map(|part| {
            let mut acc = vec![BigInt::zero(); top + 1];
            for (key, ck) in part {
                let k = unpack(*key, nv);
                let s: u32 = k.iter().sum();
                if max_total.is_some_and(|t| s > t) || !in_staircase(n, &k) {
                    continue;
                }
                let i = i_indices(n, &k).expect("staircase index");
                let den = i.iter().fold(BigInt::one(), |d, &v| d * &facts[v]);
                let mult = arith::exact_div(&big, &den);
                acc[s as usize] += mult * ck;
            }
            acc
        })
        .collect();
    let mut total = vec![BigInt::zero(); top + 1];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Bucket sums over the whole staircase with the size of the C table they came from. Both are
/// r-independent, so they are cached as a one-variable series whose slot N + 1 holds the size.
fn exact_buckets(n: usize, opts: &Options) -> Result<(Vec<BigInt>, usize, bool)> {
    let bx = staircase_hull(n, None)?;
    let required = bx.count();
    if required > opts.budget as u128 {
        return Err(Error::ResourceLimit { required, budget: opts.budget });
    }
    let top = n * n * (n - 1) / 2;
    let build = || -> Result<(Vec<BigInt>, usize, bool)> {
        let (c, hit) = c_table(n, &bx, SeriesKind::C, opts)?;
        Ok((with_pool(opts.workers, || bucketed_sums(n, &c, None)), c.len(), hit))
    };
    let (Some(cache), Ok(sbx)) = (&opts.cache, TruncationBox::new(vec![top as u32 + 1], None)) else {
        return build();
    };
    if let Some(s) = cache.load(SeriesKind::Sums, n, &sbx)? {
        let mut buckets = vec![BigInt::zero(); top + 1];
        let mut size = None;
        for (k, v) in s.iter() {
            match buckets.get_mut(k[0] as usize) {
                Some(b) => *b = v.clone(),
                None => size = v.to_usize(),
            }
        }
        if let Some(size) = size {
            return Ok((buckets, size, true));
        }
    }
    let (buckets, size, hit) = build()?;
    let mut terms: Vec<(Vec<u32>, BigInt)> = buckets.iter().enumerate().map(|(h, v)| (vec![h as u32], v.clone())).collect();
    terms.push((vec![top as u32 + 1], BigInt::from(size)));
    if let Err(e) = cache.store(SeriesKind::Sums, n, &MultiSeries::from_terms(sbx, terms)?) {
        log::warn!("could not write cache entry: {e}");
    }
    Ok((buckets, size, hit))
}

/// I_0 = sum_s S_s r^{N - s} with N = n^2(n-1)/2.
fn i0_from_buckets(buckets: &[BigInt], r: u64) -> BigInt {
    let rr = BigInt::from(r);
    let mut acc = BigInt::zero();
    // Horner in r, from |k| = 0 (highest power) down
    for b in buckets {
        acc = acc * &rr + b;
    }
    acc
}

fn check_nr(n: usize, r: u64) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("CA needs n >= 2"));
    }
    if r < 1 {
        return Err(Error::invalid("r must be positive"));
    }
    Ok(())
}

/// CA = sum over the staircase of M^n_k r^{-|k|} C_k, exactly.
pub fn compute_ca_exact(n: usize, r: u64, opts: &Options) -> Result<ConjectureReport> {
    check_nr(n, r)?;
    let start = Instant::now();
    let (buckets, size, hit) = exact_buckets(n, opts)?;
    let i0 = i0_from_buckets(&buckets, r);
    let i0_tilde = central_monomial(n, r);
    let ca = BigRat::new(i0.clone(), i0_tilde.clone());
    Ok(ConjectureReport {
        n,
        r,
        margin: &ca - BigRat::one(),
        ca_decimal: rat_to_f64(&ca),
        i0: BigRat::from_integer(i0),
        i0_tilde,
        ca,
        mode: Mode::Exact,
        tail_bound: None,
        coefficients: size,
        elapsed: start.elapsed().as_secs_f64(),
        cache_hit: hit,
    })
}

/// Exact rational version of the sum through an explicit A table; used as a cross-check.
pub fn ca_from_a_table(n: usize, r: u64, c: &MultiSeries) -> Result<BigRat> {
    let a = crate::genfun::build_a(n, r)?;
    let mut acc = BigRat::zero();
    for (k, v) in a.iter() {
        acc += v * BigRat::from_integer(c.coefficient(k)?);
    }
    Ok(acc)
}

/// Upper bound for sum_{h > t} C-hat_h r^{-h}: exact diagonal terms up to `t + extra`,
/// then C-hat(rho) q^{H+1}/(1 - q) with q = 1/(r rho).
pub fn certified_tail(n: usize, r: u64, t: u32, extra: usize, rho: &BigRat) -> Result<BigRat> {
    let one = BigRat::one();
    let sqrt2m1_lower = arith::rat(41421, 100000);
    if !rho.is_positive() || rho >= &sqrt2m1_lower {
        return Err(Error::Domain("tail radius must lie in (0, sqrt2 - 1)".into()));
    }
    let q = one.clone() / (BigRat::from_integer(BigInt::from(r)) * rho);
    if q >= one {
        return Err(Error::Domain(format!("r = {r} too small for tail radius {}", arith::rat_to_string(rho))));
    }
    let h_max = t as usize + extra;
    let diag = diagonal_c_hat_formula(n, h_max);
    let rinv = arith::rat(1, r as i64);
    let mut acc = BigRat::zero();
    for h in t as usize + 1..=h_max {
        acc += BigRat::from_integer(diag.coeff(h).clone()) * arith::rat_pow(&rinv, h as i32);
    }
    let cap = diagonal_value(n, rho, true)? * arith::rat_pow(&q, h_max as i32 + 1) / (&one - &q);
    Ok(acc + cap)
}

/// Lower bound for CA from the terms with |k| <= t and a majorant of the rest.
pub fn compute_ca_certified(n: usize, r: u64, t: u32, opts: &Options) -> Result<ConjectureReport> {
    check_nr(n, r)?;
    let start = Instant::now();
    let bx = staircase_hull(n, Some(t))?;
    let (c, hit) = c_table(n, &bx, SeriesKind::C, opts)?;
    let buckets = with_pool(opts.workers, || bucketed_sums(n, &c, Some(t)));
    let i0_trunc = i0_from_buckets(&buckets, r);
    let i0_tilde = central_monomial(n, r);
    let truncated = BigRat::new(i0_trunc, i0_tilde.clone());
    let tail = certified_tail(n, r, t, opts.tail_terms, &opts.tail_rho)?;
    let bound = truncated - &tail;
    let mode = if bound >= BigRat::one() { Mode::Certified { trunc: t } } else { Mode::Inconclusive { trunc: t } };
    Ok(ConjectureReport {
        n,
        r,
        i0: &bound * BigRat::from_integer(i0_tilde.clone()),
        margin: &bound - BigRat::one(),
        ca_decimal: rat_to_f64(&bound),
        i0_tilde,
        ca: bound,
        mode,
        tail_bound: Some(tail),
        coefficients: c.len(),
        elapsed: start.elapsed().as_secs_f64(),
        cache_hit: hit,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub r: u64,
    #[serde(serialize_with = "ser::rat")]
    pub ca: BigRat,
    pub ca_decimal: f64,
    pub log_ca_per_n: f64,
}

/// Exact CA for each n, with log(CA)/n as a descriptive growth rate.
pub fn ratio_table(ns: &[usize], r: u64, opts: &Options) -> Result<Vec<RatioRow>> {
    ns.iter()
        .map(|&n| {
            let rep = compute_ca_exact(n, r, opts)?;
            Ok(RatioRow { n, r, ca_decimal: rep.ca_decimal, log_ca_per_n: ln_rat(&rep.ca) / n as f64, ca: rep.ca })
        })
        .collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct DominanceReport {
    pub n: usize,
    pub compositions: u64,
    #[serde(serialize_with = "ser::int")]
    pub central: BigInt,
    #[serde(serialize_with = "ser::int")]
    pub largest_other: BigInt,
    pub holds: bool,
}

/// Enumerates all compositions of n^2 into n parts and compares each multinomial
/// with the central one.
pub fn verify_central_dominance(n: usize) -> Result<DominanceReport> {
    if !(1..=4).contains(&n) {
        return Err(Error::invalid("central dominance is enumerated for 1 <= n <= 4"));
    }
    let central = multinomial(&vec![n; n]);
    let mut largest = BigInt::zero();
    let mut count = 0u64;
    let mut holds = true;
    let mut parts = vec![0usize; n];
    fn go(j: usize, left: usize, parts: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if j + 1 == parts.len() {
            parts[j] = left;
            f(parts);
            return;
        }
        for v in 0..=left {
            parts[j] = v;
            go(j + 1, left - v, parts, f);
        }
    }
    go(0, n * n, &mut parts, &mut |p| {
        count += 1;
        if p.iter().all(|&v| v == n) {
            return;
        }
        let m = multinomial(p);
        if m >= central {
            holds = false;
        }
        if m > largest {
            largest = m;
        }
    });
    Ok(DominanceReport { n, compositions: count, central, largest_other: largest, holds })
}

/// Every M^n_k on the staircase lies in (0, 1], with equality only at k = 0.
pub fn quotient_range_check(n: usize) -> Result<Finding> {
    let mut t = Tally::new(format!("M^n_k in (0,1), n={n}"));
    let mut err = None;
    for_each_staircase(n, None, |k| {
        match m_quotient(n, k) {
            Ok(m) => {
                let zero = k.iter().all(|&v| v == 0);
                let ok = m.is_positive() && if zero { m.is_one() } else { m < BigRat::one() };
                t.record(ok, || format!("k={k:?} M={}", arith::rat_to_string(&m)));
            }
            Err(e) => err = Some(e),
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(t.finish()),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinorationReport {
    pub n: usize,
    pub findings: Vec<Finding>,
    /// Largest delta on a 1e-6 grid where log(1 - delta) >= -delta - delta^2 still holds.
    pub delta_threshold: f64,
}

fn log_ge(lhs: f64, rhs: f64) -> bool {
    lhs >= rhs - 1e-12 * rhs.abs().max(1.0)
}

/// n!/(n-k)! >= n^k e^{-k^2/n} for k <= 3n/5, n!/(n+l)! >= n^{-l} e^{-l^2/n},
/// their uniform form over -3n/5 <= m <= l_max, and log(1 - d) >= -d - d^2 on [0, 3/5].
pub fn minoration_suite(n: usize, k_max: usize, ell_max: usize) -> Result<MinorationReport> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let nf = n as f64;
    let kcap = k_max.min(3 * n / 5);
    let q = |m: i64| arith::falling_quotient(n as u64, m).map(|v| ln_rat(&v));
    let mut lower = Tally::new("n!/(n-k)! >= n^k e^{-k^2/n}");
    for k in 0..=kcap {
        let lhs = q(-(k as i64))?;
        let rhs = k as f64 * nf.ln() - (k * k) as f64 / nf;
        lower.record(log_ge(lhs, rhs), || format!("n={n} k={k}"));
    }
    let mut upper = Tally::new("n!/(n+l)! >= n^{-l} e^{-l^2/n}");
    for l in 0..=ell_max {
        let lhs = q(l as i64)?;
        let rhs = -(l as f64) * nf.ln() - (l * l) as f64 / nf;
        upper.record(log_ge(lhs, rhs), || format!("n={n} l={l}"));
    }
    let mut uniform = Tally::new("n!/(n+m)! >= n^{-m} e^{-m^2/n}, -3n/5 <= m");
    for m in -((3 * n / 5) as i64)..=ell_max as i64 {
        let lhs = q(m)?;
        let rhs = -(m as f64) * nf.ln() - (m * m) as f64 / nf;
        uniform.record(log_ge(lhs, rhs), || format!("n={n} m={m}"));
    }
    let holds = |d: f64| (1.0 - d).ln() >= -d - d * d;
    let mut grid = Tally::new("log(1-d) >= -d - d^2 on [0, 3/5]");
    for j in 0..=6000 {
        let d = j as f64 / 10000.0;
        grid.record(holds(d), || format!("d={d}"));
    }
    let mut d = 0.6;
    while holds(d + 1e-6) && d < 0.99 {
        d += 1e-6;
    }
    let findings = vec![
        lower.finish(),
        upper.finish(),
        uniform.finish(),
        grid.finish(),
        Finding::single("log(1-d) >= -d - d^2 at d = 0.683", holds(0.683), format!("{:.6}", (1.0f64 - 0.683).ln() + 0.683 + 0.683 * 0.683)),
        Finding::single("log(1-d) >= -d - d^2 fails at d = 0.70", !holds(0.70), format!("{:.6}", (1.0f64 - 0.70).ln() + 0.70 + 0.49)),
    ];
    Ok(MinorationReport { n, findings, delta_threshold: d })
}

/// A rational interval [lo, hi].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Interval {
    #[serde(serialize_with = "ser::rat")]
    pub lo: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub hi: BigRat,
}

#[derive(Clone, Debug, Serialize)]
pub struct CmrDecomposition {
    pub n: usize,
    pub r: u64,
    pub c: f64,
    pub threshold: u32,
    #[serde(serialize_with = "ser::rat")]
    pub cmr: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cmr_t: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cmr_r: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cmr_t_plus: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cmr_t_minus: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr_t: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr_r: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr_t_plus: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr_t_minus: BigRat,
    #[serde(serialize_with = "ser::rat")]
    pub cr_inf: BigRat,
    pub cr_inf_plus: Interval,
    pub cr_inf_minus: Interval,
    #[serde(serialize_with = "ser::rat")]
    pub crhat_inf: BigRat,
    /// sum over indices outside the box of C-hat_k r^{-|k|}
    #[serde(serialize_with = "ser::rat")]
    pub box_tail: BigRat,
    /// smallest M^n_k over the staircase with |k| <= threshold
    #[serde(serialize_with = "ser::rat")]
    pub min_m_truncated: BigRat,
}

impl CmrDecomposition {
    pub fn identities_hold(&self) -> bool {
        self.cmr == &self.cmr_t + &self.cmr_r
            && self.cmr_t == &self.cmr_t_plus - &self.cmr_t_minus
            && self.cr == &self.cr_t + &self.cr_r
            && self.cr_t == &self.cr_t_plus - &self.cr_t_minus
    }

    /// CR_inf^+ + CR_inf^- <= CR-hat_inf, using the lower ends of the intervals
    /// (the true values differ from them by at most `box_tail` each).
    pub fn majorant_inequality_holds(&self) -> bool {
        &self.cr_inf_plus.lo + &self.cr_inf_minus.lo <= self.crhat_inf
    }

    /// CR_inf^- <= (e^{17n/r^2} - 1)/2 CR_inf^+, with the unfavourable interval ends.
    pub fn negative_part_ratio(&self) -> (f64, f64) {
        let lhs = rat_to_f64(&self.cr_inf_minus.hi);
        let factor = 0.5 * ((17.0 * self.n as f64 / (self.r as f64).powi(2)).exp() - 1.0);
        (lhs, factor * rat_to_f64(&self.cr_inf_plus.lo))
    }

    /// M >= e^{-4/c^2} on the truncated range.
    pub fn derived_minoration_holds(&self) -> bool {
        rat_to_f64(&self.min_m_truncated) >= (-4.0 / (self.c * self.c)).exp()
    }

    /// M >= e^{-2/c^2} on the truncated range (reported only).
    pub fn stated_minoration_holds(&self) -> bool {
        rat_to_f64(&self.min_m_truncated) >= (-2.0 / (self.c * self.c)).exp()
    }
}

/// floor(sqrt(n)/c).
pub fn cmr_threshold(n: usize, c: f64) -> Result<u32> {
    if !(c > 0.0) {
        return Err(Error::Domain(format!("c = {c} must be positive")));
    }
    Ok(((n as f64).sqrt() / c).floor() as u32)
}

pub fn cmr_decomposition(n: usize, r: u64, c: f64, opts: &Options) -> Result<CmrDecomposition> {
    check_nr(n, r)?;
    let tau = cmr_threshold(n, c)?;
    let bx = staircase_hull(n, None)?;
    let (cs, _) = c_table(n, &bx, SeriesKind::C, opts)?;
    let (chat, _) = c_table(n, &bx, SeriesKind::CHat, opts)?;
    let top = n * n * (n - 1) / 2;
    let rr = BigInt::from(r);
    let rpow: Vec<BigInt> = (0..=top).map(|e| pow(&rr, e)).collect();
    let i0_tilde = central_monomial(n, r);
    let big = arith::factorial(n * n);
    // numerators over I0_tilde for the M-weighted sums, over r^top for the plain ones
    let (mut cmr_t_plus, mut cmr_t_minus, mut cmr_r) = (BigInt::zero(), BigInt::zero(), BigInt::zero());
    let (mut cr_t_plus, mut cr_t_minus, mut cr_r) = (BigInt::zero(), BigInt::zero(), BigInt::zero());
    let mut min_m: Option<BigRat> = None;
    let mut err = None;
    for_each_staircase(n, None, |k| {
        let ck = match cs.coefficient(k) {
            Ok(v) => v,
            Err(e) => {
                err = Some(e);
                return;
            }
        };
        let s: u32 = k.iter().sum();
        let truncated = s <= tau;
        if truncated {
            let m = m_quotient(n, k).expect("staircase index");
            if min_m.as_ref().is_none_or(|v| &m < v) {
                min_m = Some(m);
            }
        }
        if ck.is_zero() {
            return;
        }
        let i = i_indices(n, k).expect("staircase index");
        let den = i.iter().fold(BigInt::one(), |d, &v| d * arith::factorial(v));
        let weighted = arith::exact_div(&big, &den) * &ck * &rpow[top - s as usize];
        let plain = &ck * &rpow[top - s as usize];
        if truncated {
            if ck.is_positive() {
                cmr_t_plus += weighted;
                cr_t_plus += plain;
            } else {
                cmr_t_minus -= weighted;
                cr_t_minus -= plain;
            }
        } else {
            cmr_r += weighted;
            cr_r += plain;
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    let over_tilde = |v: BigInt| BigRat::new(v, i0_tilde.clone());
    let over_rpow = |v: BigInt| BigRat::new(v, rpow[top].clone());
    let cmr_t_plus = over_tilde(cmr_t_plus);
    let cmr_t_minus = over_tilde(cmr_t_minus);
    let cmr_r = over_tilde(cmr_r);
    let cr_t_plus = over_rpow(cr_t_plus);
    let cr_t_minus = over_rpow(cr_t_minus);
    let cr_r = over_rpow(cr_r);
    let cmr_t = &cmr_t_plus - &cmr_t_minus;
    let cr_t = &cr_t_plus - &cr_t_minus;

    let rinv = arith::rat(1, r as i64);
    let cr_inf = diagonal_value(n, &rinv, false)?;
    let crhat_inf = diagonal_value(n, &rinv, true)?;
    let max_deg = bx.max_degree() as usize;
    let mut box_pos = vec![BigInt::zero(); max_deg + 1];
    let mut box_neg = vec![BigInt::zero(); max_deg + 1];
    let mut box_hat = vec![BigInt::zero(); max_deg + 1];
    for (k, v) in cs.iter() {
        let s = k.iter().sum::<u32>() as usize;
        if v.is_positive() {
            box_pos[s] += v;
        } else {
            box_neg[s] -= v;
        }
    }
    for (k, v) in chat.iter() {
        box_hat[k.iter().sum::<u32>() as usize] += v;
    }
    let eval = |coeffs: &[BigInt]| -> BigRat {
        let mut acc = BigRat::zero();
        for (s, c) in coeffs.iter().enumerate() {
            if !c.is_zero() {
                acc += BigRat::new(c.clone(), pow(&rr, s));
            }
        }
        acc
    };
    let pos = eval(&box_pos);
    let neg = eval(&box_neg);
    let box_tail = &crhat_inf - eval(&box_hat);
    Ok(CmrDecomposition {
        n,
        r,
        c,
        threshold: tau,
        cmr: &cmr_t + &cmr_r,
        cmr_t,
        cmr_r,
        cmr_t_plus,
        cmr_t_minus,
        cr: &cr_t + &cr_r,
        cr_t,
        cr_r,
        cr_t_plus,
        cr_t_minus,
        cr_inf,
        cr_inf_plus: Interval { hi: &pos + &box_tail, lo: pos },
        cr_inf_minus: Interval { hi: &neg + &box_tail, lo: neg },
        crhat_inf,
        box_tail,
        min_m_truncated: min_m.unwrap_or_else(BigRat::one),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct StaircaseTailReport {
    pub n: usize,
    pub r: u64,
    pub a: f64,
    pub c: f64,
    pub threshold: u32,
    #[serde(serialize_with = "ser::rat")]
    pub cmr_r_abs: BigRat,
    /// sum over staircase indices with |k| > threshold of C-hat_k r^{-|k|}
    #[serde(serialize_with = "ser::rat")]
    pub staircase_majorant: BigRat,
    /// sum over all indices with |k| > threshold of C-hat_k r^{-|k|}
    #[serde(serialize_with = "ser::rat")]
    pub full_majorant: BigRat,
    pub first_holds: bool,
    pub asymptotic_bound: f64,
    pub asymptotic_holds: bool,
}

/// Tail of the staircase sum past floor(sqrt(n)/c), at r = floor(sqrt(n) a).
pub fn staircase_tail_check(n: usize, a: f64, c: f64, opts: &Options) -> Result<StaircaseTailReport> {
    if !(a > 0.0) {
        return Err(Error::Domain(format!("a = {a} must be positive")));
    }
    let r = ((n as f64).sqrt() * a).floor() as u64;
    if r < 3 {
        return Err(Error::Domain(format!("r = floor(sqrt(n) a) = {r} is below 3")));
    }
    staircase_tail_at(n, r, a, c, opts)
}

pub fn staircase_tail_at(n: usize, r: u64, a: f64, c: f64, opts: &Options) -> Result<StaircaseTailReport> {
    let d = cmr_decomposition(n, r, c, opts)?;
    let bx = staircase_hull(n, None)?;
    let (chat, _) = c_table(n, &bx, SeriesKind::CHat, opts)?;
    let tau = d.threshold;
    let mut stair = BigRat::zero();
    let rinv = arith::rat(1, r as i64);
    for_each_staircase(n, None, |k| {
        let s: u32 = k.iter().sum();
        if s > tau {
            let v = chat.coefficient(k).expect("staircase inside hull");
            if !v.is_zero() {
                stair += BigRat::from_integer(v) * arith::rat_pow(&rinv, s as i32);
            }
        }
    });
    let diag = diagonal_c_hat_formula(n, tau as usize);
    let mut head = BigRat::zero();
    for h in 0..=tau as usize {
        head += BigRat::from_integer(diag.coeff(h).clone()) * arith::rat_pow(&rinv, h as i32);
    }
    let full = &d.crhat_inf - head;
    let abs_r = d.cmr_r.abs();
    let first_holds = abs_r <= stair && stair <= full;
    let bound = 2.0 * 12f64.exp() / a;
    Ok(StaircaseTailReport {
        n,
        r,
        a,
        c,
        threshold: tau,
        asymptotic_holds: rat_to_f64(&full) <= bound,
        cmr_r_abs: abs_r,
        staircase_majorant: stair,
        full_majorant: full,
        first_holds,
        asymptotic_bound: bound,
    })
}
