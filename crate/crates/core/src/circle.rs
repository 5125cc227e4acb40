//! Maximum-modulus scans for G_k and H_l on circles |z| = rho, the positivity chain f, g, h
//! behind the H claim, and the CSV plot data.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::check::{Finding, Tally};
use crate::error::{Error, Result};

const POLE_EPS: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CircleFn {
    /// |G_k(rho e^{i theta})| / G_k(rho)
    G,
    /// |H_l(rho e^{i theta})| / H_l(rho)
    H,
    F,
    #[serde(rename = "g")]
    LowerG,
    #[serde(rename = "h")]
    LowerH,
    #[serde(rename = "g_prime")]
    DerivG,
}

impl fmt::Display for CircleFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CircleFn::G => "G",
            CircleFn::H => "H",
            CircleFn::F => "f",
            CircleFn::LowerG => "g",
            CircleFn::LowerH => "h",
            CircleFn::DerivG => "g_prime",
        })
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn check_index(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::invalid("index must be at least 1"));
    }
    Ok(())
}

/// (1 - z^k)/(1 - 2z^k).
pub fn eval_g_k(k: usize, z: Complex64) -> Result<Complex64> {
    check_index(k)?;
    let zk = z.powu(k as u32);
    let den = one() - 2.0 * zk;
    if den.norm() <= POLE_EPS {
        return Err(Error::Pole(format!("1 - 2z^{k} vanishes at {z}")));
    }
    Ok((one() - zk) / den)
}

/// (1 - z^l)/(1 - 2z^l - z^{l+1}).
pub fn eval_h_l(l: usize, z: Complex64) -> Result<Complex64> {
    check_index(l)?;
    let zl = z.powu(l as u32);
    let den = one() - 2.0 * zl - zl * z;
    if den.norm() <= POLE_EPS {
        return Err(Error::Pole(format!("1 - 2z^{l} - z^{} vanishes at {z}", l + 1)))
    }
    Ok((one() - zl) / den)
}

/// The cleared difference for H_l, written as a cosine polynomial.
pub fn eval_f(l: usize, rho: f64, theta: f64) -> f64 {
    let lf = l as f64;
    let c = |m: f64| (m * theta).cos();
    let p = |e: usize| rho.powi(e as i32);
    2.0 * p(l) * (1.0 - 2.0 * p(2 * l)) * (1.0 - c(lf))
        + 2.0 * p(l + 1) * (1.0 - c(lf + 1.0))
        + p(2 * l + 1) * (4.0 * c(1.0) + 4.0 * c(lf + 1.0) - 4.0 * c(lf) - 4.0)
        + p(3 * l + 1) * (-8.0 * c(1.0) - 2.0 * c(lf + 1.0) + 8.0 * c(lf) + 2.0)
        + p(3 * l + 2) * (2.0 * c(lf) - 2.0)
        + p(4 * l + 1) * (4.0 * c(1.0) - 4.0)
}

pub fn eval_g(l: usize, rho: f64, theta: f64) -> f64 {
    let lf = l as f64;
    let c = |m: f64| (m * theta).cos();
    let p = |e: usize| rho.powi(e as i32);
    1.0 - c(lf)
        + 2.0 * rho * (1.0 - c(lf + 1.0))
        + p(l + 1) * (4.0 * c(1.0) + 4.0 * c(lf + 1.0) - 4.0 * c(lf) - 4.0)
        + p(2 * l + 1) * (-8.0 * c(1.0) - 2.0 * c(lf + 1.0) + 8.0 * c(lf) + 2.0)
        + p(2 * l + 2) * (2.0 * c(lf) - 2.0)
        + p(3 * l + 1) * (4.0 * c(1.0) - 4.0)
}

/// Closed-form derivative of `eval_g` in theta.
pub fn eval_g_prime(l: usize, rho: f64, theta: f64) -> f64 {
    let lf = l as f64;
    let s = |m: f64| (m * theta).sin();
    let p = |e: usize| rho.powi(e as i32);
    lf * s(lf)
        + 2.0 * rho * (lf + 1.0) * s(lf + 1.0)
        + p(l + 1) * (-4.0 * s(1.0) - 4.0 * (lf + 1.0) * s(lf + 1.0) + 4.0 * lf * s(lf))
        + p(2 * l + 1) * (8.0 * s(1.0) + 2.0 * (lf + 1.0) * s(lf + 1.0) - 8.0 * lf * s(lf))
        + p(2 * l + 2) * (-2.0 * lf * s(lf))
        + p(3 * l + 1) * (-4.0 * s(1.0))
}

pub fn eval_h(l: usize, rho: f64, theta: f64) -> f64 {
    let lf = l as f64;
    1.0 - (lf * theta).cos() + 2.0 * rho * (1.0 - ((lf + 1.0) * theta).cos()) - 18.0 * rho.powi(l as i32 + 1)
}

/// (1 - rho^l)^2 |den|^2 - (1 - 2rho^l - rho^{l+1})^2 |num|^2 at z = rho e^{i theta}.
pub fn h_cleared_difference(l: usize, rho: f64, theta: f64) -> f64 {
    let z = Complex64::from_polar(rho, theta);
    let zl = z.powu(l as u32);
    let num = (one() - zl).norm_sqr();
    let den = (one() - 2.0 * zl - zl * z).norm_sqr();
    let rl = rho.powi(l as i32);
    (1.0 - rl).powi(2) * den - (1.0 - 2.0 * rl - rl * rho).powi(2) * num
}

/// Same difference for G_k, expanded as printed.
pub fn g_cleared_difference(k: usize, rho: f64, theta: f64) -> f64 {
    let rk = rho.powi(k as i32);
    let c = (k as f64 * theta).cos();
    (1.0 - 2.0 * rk + rk * rk) * (1.0 - 4.0 * rk * c + 4.0 * rk * rk)
        - (1.0 - 4.0 * rk + 4.0 * rk * rk) * (1.0 - 2.0 * rk * c + rk * rk)
}

/// 2 rho^k (1 - 2rho^{2k})(1 - cos k theta).
pub fn g_factored(k: usize, rho: f64, theta: f64) -> f64 {
    let rk = rho.powi(k as i32);
    2.0 * rk * (1.0 - 2.0 * rk * rk) * (1.0 - (k as f64 * theta).cos())
}

fn check_rho(rho: f64) -> Result<()> {
    if !(rho > 0.0 && rho <= 0.25) {
        return Err(Error::Domain(format!("rho = {rho} must lie in (0, 1/4]")));
    }
    Ok(())
}

fn point_value(func: CircleFn, index: usize, rho: f64, theta: f64) -> Result<f64> {
    Ok(match func {
        CircleFn::G => eval_g_k(index, Complex64::from_polar(rho, theta))?.norm() / eval_g_k(index, Complex64::new(rho, 0.0))?.re,
        CircleFn::H => eval_h_l(index, Complex64::from_polar(rho, theta))?.norm() / eval_h_l(index, Complex64::new(rho, 0.0))?.re,
        CircleFn::F => eval_f(index, rho, theta),
        CircleFn::LowerG => eval_g(index, rho, theta),
        CircleFn::LowerH => eval_h(index, rho, theta),
        CircleFn::DerivG => eval_g_prime(index, rho, theta),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleScan {
    pub func: CircleFn,
    pub index: usize,
    pub rho: f64,
    pub samples: usize,
    #[serde(skip)]
    pub theta: Vec<f64>,
    #[serde(skip)]
    pub values: Vec<f64>,
    pub min_value: f64,
    pub argmin: f64,
    pub max_value: f64,
    pub argmax: f64,
}

impl CircleScan {
    pub fn step(&self) -> f64 {
        if self.theta.len() < 2 { 0.0 } else { self.theta[1] - self.theta[0] }
    }
}

fn extrema(theta: &[f64], values: &[f64]) -> (f64, f64, f64, f64) {
    let mut lo = (f64::INFINITY, 0.0);
    let mut hi = (f64::NEG_INFINITY, 0.0);
    for (&t, &v) in theta.iter().zip(values) {
        if v < lo.0 {
            lo = (v, t);
        }
        if v > hi.0 {
            hi = (v, t);
        }
    }
    (lo.0, lo.1, hi.0, hi.1)
}

/// `samples` equally spaced points on [a, b], both ends included.
pub fn grid(a: f64, b: f64, samples: usize) -> Vec<f64> {
    if samples < 2 {
        return vec![a];
    }
    (0..samples).map(|j| a + (b - a) * j as f64 / (samples - 1) as f64).collect()
}

/// Values of `func` on a uniform grid over [-pi, pi]; an odd sample count puts theta = 0 on the grid.
pub fn scan(func: CircleFn, index: usize, rho: f64, samples: usize) -> Result<CircleScan> {
    check_rho(rho)?;
    check_index(index)?;
    if samples < 3 {
        return Err(Error::invalid("a scan needs at least 3 samples"));
    }
    let theta = grid(-PI, PI, samples);
    let values: Vec<f64> = theta.par_iter().map(|&t| point_value(func, index, rho, t)).collect::<Result<_>>()?;
    let (min_value, argmin, max_value, argmax) = extrema(&theta, &values);
    Ok(CircleScan { func, index, rho, samples, theta, values, min_value, argmin, max_value, argmax })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MaxModulus {
    pub func: CircleFn,
    pub index: usize,
    pub rho: f64,
    pub samples: usize,
    pub argmax: f64,
    /// max over the grid and the refinement, as a ratio to the value at z = rho
    pub max_ratio: f64,
    pub step: f64,
    pub passed: bool,
}

/// Checks that the maximum modulus on |z| = rho is attained at theta = 0 (G or H only).
pub fn max_modulus_on_circle(func: CircleFn, index: usize, rho: f64, samples: usize) -> Result<MaxModulus> {
    if !matches!(func, CircleFn::G | CircleFn::H) {
        return Err(Error::invalid("maximum-modulus scans apply to G and H"));
    }
    let s = scan(func, index, rho, samples | 1)?;
    let step = s.step();
    // 100x denser pass around the grid maximum
    let local = grid(s.argmax - step, s.argmax + step, 201);
    let mut best = (s.max_value, s.argmax);
    for t in local {
        let v = point_value(func, index, rho, t)?;
        if v > best.0 {
            best = (v, t);
        }
    }
    // periodic in 2pi/k: among near-ties report the maximiser closest to 0
    let at_zero = point_value(func, index, rho, 0.0)?;
    if at_zero >= best.0 - 1e-12 {
        best.1 = 0.0;
    }
    let passed = (at_zero - 1.0).abs() <= 1e-15 && best.0 <= at_zero + 1e-10;
    Ok(MaxModulus { func, index, rho, samples: s.samples, argmax: best.1, max_ratio: best.0, step, passed })
}

/// The printed expansion of the cleared G difference equals its factored form, which is >= 0.
pub fn g_identity_check(k: usize, rho: f64, samples: usize) -> Result<Finding> {
    if !(0.0..=0.25).contains(&rho) {
        return Err(Error::Domain(format!("rho = {rho} must lie in [0, 1/4]")));
    }
    check_index(k)?;
    let mut t = Tally::new(format!("G_{k} cleared difference = 2 rho^k (1 - 2rho^2k)(1 - cos k theta) >= 0, rho={rho}"));
    let mut worst = 0.0f64;
    for th in grid(-PI, PI, samples) {
        let a = g_cleared_difference(k, rho, th);
        let b = g_factored(k, rho, th);
        worst = worst.max((a - b).abs());
        t.record((a - b).abs() < 1e-12 && b >= 0.0, || format!("theta={th}"));
    }
    Ok(t.with_value(format!("max residual {worst:e}")).finish())
}

/// f equals the cleared difference for H_l, and f/rho^l - g = (1 - 4 rho^{2l})(1 - cos l theta).
pub fn f_identity_check(l: usize, rho: f64, samples: usize) -> Result<Finding> {
    check_rho(rho)?;
    check_index(l)?;
    let mut t = Tally::new(format!("f_{l} equals the cleared H_{l} difference, rho={rho}"));
    let mut worst = 0.0f64;
    let rl = rho.powi(l as i32);
    for th in grid(-PI, PI, samples) {
        let d = (eval_f(l, rho, th) - h_cleared_difference(l, rho, th)).abs();
        let gap = eval_f(l, rho, th) / rl - eval_g(l, rho, th) - (1.0 - 4.0 * rl * rl) * (1.0 - (l as f64 * th).cos());
        worst = worst.max(d);
        t.record(d < 1e-12 && gap.abs() < 1e-9, || format!("theta={th}"));
    }
    Ok(t.with_value(format!("max residual {worst:e}")).finish())
}

/// True when `value` starts with the printed digits, i.e. printed <= value < printed + one unit in the last place.
pub fn matches_printed(value: f64, printed: &str) -> bool {
    let p: f64 = match printed.parse() {
        Ok(v) => v,
        Err(_) => return false,
    };
    let decimals = printed.split('.').nth(1).map_or(0, str::len) as i32;
    let ulp = 10f64.powi(-decimals);
    value >= p - 1e-15 && value < p + ulp
}

/// (5/6) l - 0.25^{l+1}(8 + 16l/6) - 0.25^{2l+1}(5/4 + 27l/4) - 0.25^{2l+2}(2l) - 0.25^{3l+1} 2.
pub fn derivative_bracket(l: usize) -> f64 {
    let lf = l as f64;
    let q = |e: usize| 0.25f64.powi(e as i32);
    5.0 / 6.0 * lf - q(l + 1) * (8.0 + 16.0 / 6.0 * lf) - q(2 * l + 1) * (1.25 + 6.75 * lf) - q(2 * l + 2) * (2.0 * lf)
        - q(3 * l + 1) * 2.0
}

/// 8/sqrt2 - 6/4^3, the worst case of the l = 1 brace after dividing by rho.
pub fn derivative_bracket_l1() -> f64 {
    8.0 / SQRT_2 - 6.0 / 64.0
}

#[derive(Clone, Debug, Serialize)]
pub struct DerivativeReport {
    pub l: usize,
    pub rho: f64,
    pub bracket: f64,
    pub min_sampled: f64,
    pub findings: Vec<Finding>,
}

/// g' > 0 on (0, pi/(4l)], sampled, cross-checked by central differences, plus the bracket certificate.
pub fn derivative_positivity(l: usize, rho: f64, samples: usize) -> Result<DerivativeReport> {
    check_rho(rho)?;
    check_index(l)?;
    let end = PI / (4.0 * l as f64);
    let mut pos = Tally::new(format!("g'_{l} > 0 on (0, pi/(4l)], rho={rho}"));
    let mut fd = Tally::new(format!("g'_{l} matches central differences"));
    let mut min_sampled = f64::INFINITY;
    let h = 1e-6;
    for j in 1..=samples {
        let th = end * j as f64 / samples as f64;
        let v = eval_g_prime(l, rho, th);
        min_sampled = min_sampled.min(v);
        pos.record(v > 0.0, || format!("theta={th} g'={v:e}"));
        let num = (eval_g(l, rho, th + h) - eval_g(l, rho, th - h)) / (2.0 * h);
        fd.record((num - v).abs() <= 1e-6 * v.abs().max(1e-3), || format!("theta={th} {num} vs {v}"));
    }
    let mut findings = vec![pos.finish(), fd.finish()];
    let bracket = if l == 1 {
        let mut brace = Tally::new("1 + 8rho cos - 16rho^2 cos + 8rho^3 cos - 6rho^4 > 0 on (0, pi/4]");
        for j in 1..=samples {
            let c = (end * j as f64 / samples as f64).cos();
            let v = 1.0 + 8.0 * rho * c - 16.0 * rho * rho * c + 8.0 * rho.powi(3) * c - 6.0 * rho.powi(4);
            brace.record(v > 0.0, || format!("cos={c}"));
        }
        findings.push(brace.finish());
        let b = derivative_bracket_l1();
        findings.push(Finding::single("l = 1 bracket 8/sqrt2 - 6/64 = 5.563...", matches_printed(b, "5.563"), format!("{b:.6}")));
        b
    } else {
        let b = derivative_bracket(l);
        findings.push(Finding::single(format!("l = {l} bracket > 0"), b > 0.0, format!("{b:.6}")));
        if l == 2 {
            findings.push(Finding::single("l = 2 bracket = 1.442...", matches_printed(b, "1.442"), format!("{b:.6}")));
        }
        b
    };
    Ok(DerivativeReport { l, rho, bracket, min_sampled, findings })
}

fn sample_tally(
    name: String,
    a: f64,
    b: f64,
    samples: usize,
    pred: impl Fn(f64) -> (bool, f64) + Sync,
) -> Finding {
    let results: Vec<(f64, bool, f64)> = grid(a, b, samples)
        .into_par_iter()
        .map(|t| {
            let (ok, v) = pred(t);
            (t, ok, v)
        })
        .collect();
    let mut tally = Tally::new(name);
    let mut min_v = f64::INFINITY;
    for (t, ok, v) in results {
        min_v = min_v.min(v);
        tally.record(ok, || format!("theta={t} value={v:e}"));
    }
    tally.with_value(format!("min {min_v:.6e}")).finish()
}

/// The printed numeric certificates, each reproduced to its printed digits.
pub fn certificate_constants() -> Vec<Finding> {
    let q = 0.25f64;
    let c113 = (1.0 - FRAC_1_SQRT_2) * (1.0 - 6.0 * q.powi(4));
    let c115 = 1.0 - FRAC_1_SQRT_2 - 18.0 * q.powi(3);
    let c114 = 1.0 - 10.0 * q * q - 2.0 * q.powi(3) - 4.0 * q.powi(4);
    let c2 = (1.0 - (5.0 * PI / 8.0).cos()) - 9.0 * q * q;
    let lhs = 3.0 * (1.0 + SQRT_2) / 8.0;
    let rhs = 7.0 * PI / 24.0;
    let row = |name: &str, v: f64, printed: &str| Finding::single(name, matches_printed(v, printed) && v > 0.0, format!("{v:.6}"));
    vec![
        row("(1 - 1/sqrt2)(1 - 6 0.25^4) = 0.286...", c113, "0.286"),
        row("1 - 1/sqrt2 - 18 0.25^3 = 0.01164...", c115, "0.01164"),
        row("1 - 10 0.25^2 - 2 0.25^3 - 4 0.25^4 = 0.328...", c114, "0.328"),
        row("(1 - cos 5pi/8) - 9 0.25^2 = 0.820...", c2, "0.820"),
        row("l = 2 derivative bracket = 1.442...", derivative_bracket(2), "1.442"),
        row("8/sqrt2 - 6/64 = 5.563...", derivative_bracket_l1(), "5.563"),
        Finding::single(
            "3(1 + sqrt2)/2^3 = 0.905... < 0.916... = 7pi/24",
            matches_printed(lhs, "0.905") && matches_printed(rhs, "0.916") && lhs < rhs,
            format!("{lhs:.6} < {rhs:.6}"),
        ),
    ]
}

/// Sampled positivity of g and h on the intervals used for the H claim, for 1 <= l <= l_max.
pub fn interval_positivity_suite(rho: f64, l_max: usize, samples: usize) -> Result<Vec<Finding>> {
    check_rho(rho)?;
    let mut out = Vec::new();
    out.push(sample_tally(format!("g_1 > 0 on [pi/4, pi], rho={rho}"), PI / 4.0, PI, samples, |t| {
        let v = eval_g(1, rho, t);
        (v > 0.0, v)
    }));
    out.push(sample_tally(format!("g_1 >= (1 - cos)(1 - 6rho^4) on [pi/4, pi], rho={rho}"), PI / 4.0, PI, samples, |t| {
        let v = eval_g(1, rho, t) - (1.0 - FRAC_1_SQRT_2) * (1.0 - 6.0 * rho.powi(4));
        (v >= -1e-12, v)
    }));
    for l in 1..=l_max {
        let lf = l as f64;
        out.push(sample_tally(format!("g_{l} > 0 on (0, pi], f_{l}(0) = g_{l}(0) = 0"), PI / samples as f64, PI, samples, |t| {
            let v = eval_g(l, rho, t);
            (v > 0.0, v)
        }));
        let at0 = eval_f(l, rho, 0.0).abs().max(eval_g(l, rho, 0.0).abs());
        out.push(Finding::single(format!("f_{l}(0) = g_{l}(0) = 0"), at0 < 1e-15, format!("{at0:e}")));
        if l < 2 {
            continue;
        }
        let rl = rho.powi(l as i32);
        out.push(sample_tally(format!("h_{l} <= g_{l} <= f_{l}/rho^l on [pi/(4l), pi]"), PI / (4.0 * lf), PI, samples, |t| {
            let h = eval_h(l, rho, t);
            let g = eval_g(l, rho, t);
            let f = eval_f(l, rho, t) / rl;
            (h <= g + 1e-12 && g <= f + 1e-12, g - h)
        }));
        let tail = 1.0 - 10.0 * rl - 2.0 * rl * rho - 4.0 * rl * rl;
        out.push(Finding::single(format!("1 - 10rho^l - 2rho^(l+1) - 4rho^(2l) > 0.328, l={l}"), tail > 0.328, format!("{tail:.6}")));
        out.push(sample_tally(format!("h_{l} > 0 on [pi/(4l), 7pi/(4l)]"), PI / (4.0 * lf), (7.0 * PI / (4.0 * lf)).min(PI), samples, |t| {
            let v = eval_h(l, rho, t);
            (v > 0.0, v)
        }));
        if l == 2 {
            out.push(sample_tally("h_2 >= 2rho 0.820 on [7pi/8, pi]".into(), 7.0 * PI / 8.0, PI, samples, |t| {
                let v = eval_h(2, rho, t);
                (v > 0.0 && v >= 2.0 * rho * 0.820, v)
            }));
        } else {
            out.push(sample_tally(format!("h_{l} > 0 on [7pi/(4l), pi]"), 7.0 * PI / (4.0 * lf), PI, samples, |t| {
                let v = eval_h(l, rho, t);
                (v > 0.0, v)
            }));
        }
    }
    Ok(out)
}

/// 3(1 + sqrt2)/2^l < 7pi/(8l), and no sampled theta in [7pi/(4l), pi] meets both sine conditions.
pub fn sine_pair_check(ls: std::ops::RangeInclusive<usize>, rho: f64, samples: usize) -> Result<Vec<Finding>> {
    check_rho(rho)?;
    if *ls.start() < 3 {
        return Err(Error::invalid("the sine-pair exclusion starts at l = 3"));
    }
    let mut out = Vec::new();
    let mut margins = Tally::new("3(1 + sqrt2)/2^l < 7pi/(8l) with growing margin");
    let ratio = |l: usize| (7.0 * PI / (8.0 * l as f64)) / (3.0 * (1.0 + SQRT_2) / 2f64.powi(l as i32));
    for l in ls.clone() {
        let r = ratio(l);
        margins.record(r > 1.0 && (l == 3 || r > ratio(l - 1)), || format!("l={l} ratio={r}"));
    }
    out.push(margins.finish());
    for l in ls {
        let lf = l as f64;
        let a = 9.0 * rho.powi(l as i32 + 1);
        let b = 4.5 * rho.powi(l as i32);
        out.push(sample_tally(format!("no theta in [7pi/(4l), pi] with both sine bounds, l={l}"), 7.0 * PI / (4.0 * lf), PI, samples, |t| {
            let s1 = (lf * t / 2.0).sin().powi(2);
            let s2 = ((lf + 1.0) * t / 2.0).sin().powi(2);
            (!(s1 <= a && s2 <= b), (s1 - a).max(s2 - b))
        }));
    }
    Ok(out)
}

/// |g|/2 <= |sin g| <= |g| on [-pi/2, pi/2] and sin p >= p - p^3/6 on [0, pi].
pub fn sine_bounds(samples: usize) -> Vec<Finding> {
    vec![
        sample_tally("|x|/2 <= |sin x| <= |x| on [-pi/2, pi/2]".into(), -PI / 2.0, PI / 2.0, samples, |x| {
            let s = x.sin().abs();
            (x.abs() / 2.0 <= s + 1e-15 && s <= x.abs() + 1e-15, s - x.abs() / 2.0)
        }),
        sample_tally("sin x >= x - x^3/6 on [0, pi]".into(), 0.0, PI, samples, |x| {
            let d = x.sin() - (x - x.powi(3) / 6.0);
            (d >= -1e-15, d)
        }),
    ]
}

/// Writes "theta,value" rows for every grid point.
pub fn emit_plot_csv(scan: &CircleScan, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "theta,value")?;
    for (t, v) in scan.theta.iter().zip(&scan.values) {
        writeln!(out, "{t},{v}")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn point_values() {
        for k in 1..5 {
            assert_eq!(eval_g_k(k, c(0.0)).unwrap(), c(1.0));
        }
        assert!((eval_g_k(1, c(0.25)).unwrap() - c(1.5)).norm() < 1e-15);
        assert!((eval_h_l(1, c(0.25)).unwrap() - c(12.0 / 7.0)).norm() < 1e-15);
        assert!(eval_g_k(1, c(0.5)).is_err());
        assert!(eval_h_l(1, c(SQRT_2 - 1.0)).is_err());
        assert!(eval_g_k(0, c(0.1)).is_err());
        assert!((eval_h(2, 0.25, PI) - 0.71875).abs() < 1e-15);
        for l in 1..=10 {
            assert!(eval_f(l, 0.25, 0.0).abs() < 1e-16);
            assert!(eval_g(l, 0.25, 0.0).abs() < 1e-16);
        }
    }

    #[test]
    fn max_modulus_at_real_point() {
        for func in [CircleFn::G, CircleFn::H] {
            for k in [1usize, 2, 5, 10] {
                let m = max_modulus_on_circle(func, k, 0.25, 100_001).unwrap();
                assert!(m.passed, "{func} {k}: {m:?}");
            }
        }
        for k in [5usize, 10] {
            let s = scan(CircleFn::G, k, 1e-3, 1001).unwrap();
            assert!(s.values.iter().all(|v| (v - 1.0).abs() < 1e-6));
        }
        assert!(max_modulus_on_circle(CircleFn::F, 1, 0.25, 11).is_err());
        assert!(scan(CircleFn::G, 2, 0.3, 11).is_err());
    }

    #[test]
    fn even_functions() {
        for func in [CircleFn::G, CircleFn::H, CircleFn::F, CircleFn::LowerG, CircleFn::LowerH] {
            let s = scan(func, 5, 0.25, 2001).unwrap();
            let n = s.values.len();
            for j in 0..n {
                assert!((s.values[j] - s.values[n - 1 - j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identities() {
        let f = g_identity_check(3, 0.25, 10_000).unwrap();
        assert!(f.passed, "{f:?}");
        assert_eq!(g_factored(4, 0.25, 0.0), 0.0);
        assert_eq!(1.0 - 2.0 * 0.25f64 * 0.25, 7.0 / 8.0);
        for k in 1..=10 {
            assert!(g_identity_check(k, 0.1, 2001).unwrap().passed);
        }
        for l in 1..=10 {
            for rho in [0.05, 0.25] {
                assert!(f_identity_check(l, rho, 2001).unwrap().passed);
            }
        }
    }

    #[test]
    fn derivative() {
        for l in 1..=10 {
            for rho in [0.05, 0.1, 0.2, 0.25] {
                let rep = derivative_positivity(l, rho, 1000).unwrap();
                for f in &rep.findings {
                    assert!(f.passed, "l={l} rho={rho} {f:?}");
                }
            }
        }
        assert!(matches_printed(derivative_bracket(2), "1.442"));
        assert!(matches_printed(derivative_bracket_l1(), "5.563"));
        for l in 2..=20 {
            assert!(derivative_bracket(l) >= derivative_bracket(2));
        }
    }

    #[test]
    fn constants_and_intervals() {
        for f in certificate_constants() {
            assert!(f.passed, "{f:?}");
        }
        assert!(!matches_printed(0.2859, "0.286"));
        for rho in [0.05, 0.1, 0.2, 0.25] {
            for f in interval_positivity_suite(rho, 20, 5000).unwrap() {
                assert!(f.passed, "rho={rho} {f:?}");
            }
        }
        for f in sine_pair_check(3..=10, 0.25, 100_000).unwrap() {
            assert!(f.passed, "{f:?}");
        }
        for f in sine_bounds(10_001) {
            assert!(f.passed, "{f:?}");
        }
        assert!(sine_pair_check(2..=3, 0.25, 10).is_err());
    }

    #[test]
    fn csv_output() {
        let dir = tempfile::tempdir().unwrap();
        let s = scan(CircleFn::G, 2, 0.25, 101).unwrap();
        let p = dir.path().join("g.csv");
        emit_plot_csv(&s, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta,value");
        assert_eq!(lines.len(), 102);
        let mid: Vec<f64> = lines[51].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(mid[0], 0.0);
        assert!((mid[1] - 1.0).abs() < 1e-15);
    }
}
