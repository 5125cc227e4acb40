//! The generating functions E, F, F-hat, C, C-hat, A and their diagonals.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::arith::{BigRat, binomial, factorial, falling_quotient, pow};
use crate::error::{Error, Result};
use crate::series::{
    MultiIndex, MultiSeries, SmallPoly, TruncationBox, UniSeries, Workspace, geometric_inverse, ms_mul, uni_div_unit,
    uni_mul, uni_pow,
};

/// E(x) = (1 - x)/(1 - 2x) to the given order.
pub fn e_series(order: usize) -> UniSeries {
    let mut c = Vec::with_capacity(order + 1);
    c.push(BigInt::one());
    for k in 1..=order {
        c.push(BigInt::one() << (k - 1));
    }
    UniSeries::new(c)
}

fn f_coeff_abs(k: i64, l: i64) -> BigInt {
    if l == 0 {
        return if k == 0 { BigInt::one() } else { BigInt::zero() };
    }
    if k < 0 || k > l {
        return BigInt::zero();
    }
    let mut v = BigInt::zero();
    let b1 = binomial(l - 1, k);
    if !b1.is_zero() {
        v += b1 << (l - 1 - k) as usize;
    }
    let b2 = binomial(l - 1, k - 1);
    if !b2.is_zero() {
        v += b2 << (l - k) as usize;
    }
    v
}

/// Coefficient of x^k y^l in F(x, y) = (1 - y)/(1 - 2y + xy).
pub fn f_coeff(k: i64, l: i64) -> BigInt {
    let v = f_coeff_abs(k, l);
    if k % 2 == 1 { -v } else { v }
}

/// Coefficient of x^k y^l in F-hat(x, y) = (1 - y)/(1 - 2y - xy).
pub fn f_hat_coeff(k: i64, l: i64) -> BigInt {
    f_coeff_abs(k, l)
}

/// Monomial with exponent 1 on variables w_a, ..., w_b (both inclusive, 2 <= a <= b <= n).
fn run(n: usize, a: usize, b: usize) -> MultiIndex {
    let mut m = vec![0u32; n - 1];
    for i in a..=b {
        m[i - 2] = 1;
    }
    m
}

fn check_box(n: usize, bx: &TruncationBox) -> Result<()> {
    if n < 2 {
        return Err(Error::invalid("C needs n >= 2"));
    }
    if bx.n_vars() != n - 1 {
        return Err(Error::invalid(format!("box has {} variables, expected {}", bx.n_vars(), n - 1)));
    }
    Ok(())
}

fn build_product(n: usize, bx: &TruncationBox, hat: bool) -> Result<MultiSeries> {
    check_box(n, bx)?;
    let zero = vec![0u32; n - 1];
    let sign = if hat { -1 } else { 1 };
    let mut ws = Workspace::<BigInt>::one(bx);
    for i in (2..n).rev() {
        for j in i + 1..=n {
            let y = run(n, i + 1, j);
            let xy = run(n, i, j);
            let num: SmallPoly = vec![(zero.clone(), 1), (y.clone(), -1)];
            let den: SmallPoly = vec![(zero.clone(), 1), (y, -2), (xy, sign)];
            ws.apply(&num, &den);
        }
    }
    for i in 2..=n {
        let u = run(n, 2, i);
        ws.apply(&vec![(zero.clone(), 1), (u.clone(), -1)], &vec![(zero.clone(), 1), (u, -2)]);
    }
    Ok(ws.into_series())
}

/// C(w_2, ..., w_n) = prod E(w_2...w_i) prod F(w_i, w_{i+1}...w_j), truncated to `bx`.
pub fn build_c(n: usize, bx: &TruncationBox) -> Result<MultiSeries> {
    build_product(n, bx, false)
}

/// The majorant C-hat, built like C with F-hat in place of F.
pub fn build_c_hat(n: usize, bx: &TruncationBox) -> Result<MultiSeries> {
    build_product(n, bx, true)
}

fn ratio_series(bx: &TruncationBox, num: &SmallPoly, den: &SmallPoly) -> Result<MultiSeries> {
    let lift = |p: &SmallPoly| MultiSeries::from_terms(bx.clone(), p.iter().map(|(k, c)| (k.clone(), BigInt::from(*c))));
    let u = MultiSeries::one(bx.clone()).sub(&lift(den)?)?;
    ms_mul(&lift(num)?, &geometric_inverse(&u, bx)?, bx)
}

/// C built from the row-by-row factorization in w-coordinates:
/// (1 - u)/(1 - 2u) for u = w_i...w_j, 2 <= i <= j <= n, and
/// (1 - 2u)/(1 - 2u + w_{i-1}u) for u = w_i...w_j, 3 <= i <= j <= n,
/// using the generic sparse product and geometric inverse.
pub fn build_c_alternative(n: usize, bx: &TruncationBox) -> Result<MultiSeries> {
    check_box(n, bx)?;
    let zero = vec![0u32; n - 1];
    let mut acc = MultiSeries::one(bx.clone());
    for i in 2..=n {
        for j in i..=n {
            let u = run(n, i, j);
            let f = ratio_series(bx, &vec![(zero.clone(), 1), (u.clone(), -1)], &vec![(zero.clone(), 1), (u, -2)])?;
            acc = ms_mul(&acc, &f, bx)?;
        }
    }
    for i in 3..=n {
        for j in i..=n {
            let u = run(n, i, j);
            let wu = run(n, i - 1, j);
            let f = ratio_series(
                bx,
                &vec![(zero.clone(), 1), (u.clone(), -2)],
                &vec![(zero.clone(), 1), (u, -2), (wu, 1)],
            )?;
            acc = ms_mul(&acc, &f, bx)?;
        }
    }
    Ok(acc)
}

/// Rectangular box k_j <= (j - 1) n, j = 2..n, which contains the staircase.
pub fn staircase_hull(n: usize, total: Option<u32>) -> Result<TruncationBox> {
    let caps: Vec<u32> = (1..n).map(|j| (j * n) as u32).collect();
    let caps = match total {
        Some(t) => caps.into_iter().map(|c| c.min(t)).collect(),
        None => caps,
    };
    TruncationBox::new(caps, total)
}

/// Calls `f` on every index of the staircase 0 <= k_2 <= n, 0 <= k_j <= n + k_{j-1},
/// in lexicographic order, optionally restricted to total degree <= `max_total`.
pub fn for_each_staircase(n: usize, max_total: Option<u32>, mut f: impl FnMut(&[u32])) {
    if n < 2 {
        f(&[]);
        return;
    }
    let mut cur = vec![0u32; n - 1];
    fn go(n: u32, j: usize, used: u32, cap: Option<u32>, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if j == cur.len() {
            f(cur);
            return;
        }
        let mut hi = if j == 0 { n } else { n + cur[j - 1] };
        if let Some(c) = cap {
            if used > c {
                return;
            }
            hi = hi.min(c - used);
        }
        for k in 0..=hi {
            cur[j] = k;
            go(n, j + 1, used + k, cap, cur, f);
        }
        cur[j] = 0;
    }
    go(n as u32, 0, 0, max_total, &mut cur, &mut f);
}

pub fn staircase(n: usize) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    for_each_staircase(n, None, |k| out.push(k.to_vec()));
    out
}

pub fn in_staircase(n: usize, k: &[u32]) -> bool {
    k.len() + 1 == n && k.iter().enumerate().all(|(j, &kj)| kj <= n as u32 + if j == 0 { 0 } else { k[j - 1] })
}

/// (i_1, ..., i_n) attached to k: i_n = n - k_2, i_{n-j} = n + k_{j+1} - k_{j+2}, i_1 = n + k_n.
pub fn i_indices(n: usize, k: &[u32]) -> Option<Vec<usize>> {
    if k.len() + 1 != n {
        return None;
    }
    let n = n as i64;
    let mut ks = vec![0i64];
    ks.extend(k.iter().map(|&v| v as i64));
    ks.push(0);
    // ks = (0, k_2, ..., k_n, 0); i_{n+1-m} = n + ks[m-1] - ks[m] for m = 1..n, and i_1 = n + k_n.
    let mut i = vec![0usize; n as usize];
    for m in 1..=n as usize {
        let v = n + ks[m - 1] - ks[m];
        if v < 0 {
            return None;
        }
        i[n as usize - m] = v as usize;
    }
    Some(i)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    pub n: usize,
    pub r: u64,
    pub values: Vec<BigInt>,
}

impl WeightVector {
    pub fn new(n: usize, r: u64) -> Self {
        let values = (1..=n).map(|i| pow(&BigInt::from(r), n - i)).collect();
        WeightVector { n, r, values }
    }
}

/// Finite table over the staircase: entry k is M^n_k / r^{|k|}.
#[derive(Clone, Debug, PartialEq)]
pub struct APolynomial {
    pub n: usize,
    pub r: u64,
    entries: BTreeMap<MultiIndex, BigRat>,
}

impl APolynomial {
    pub fn get(&self, k: &[u32]) -> Option<&BigRat> {
        self.entries.get(k)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &BigRat)> {
        self.entries.iter()
    }
}

fn check_nr(n: usize, r: u64) -> Result<()> {
    if n < 2 || r < 1 {
        return Err(Error::invalid(format!("need n >= 2 and r >= 1, got n={n}, r={r}")));
    }
    Ok(())
}

/// M^n_k as the product of falling quotients n!/(n - k_2)! ... n!/(n + k_n)!.
pub fn m_quotient(n: usize, k: &[u32]) -> Result<BigRat> {
    if !in_staircase(n, k) {
        return Err(Error::invalid(format!("{k:?} is not in the staircase for n={n}")));
    }
    let mut ks = vec![0i64];
    ks.extend(k.iter().map(|&v| v as i64));
    let mut acc = BigRat::one();
    for m in 1..ks.len() {
        acc *= falling_quotient(n as u64, ks[m - 1] - ks[m])?;
    }
    acc *= falling_quotient(n as u64, *ks.last().unwrap())?;
    Ok(acc)
}

pub fn build_a(n: usize, r: u64) -> Result<APolynomial> {
    check_nr(n, r)?;
    let rr = BigInt::from(r);
    let mut entries = BTreeMap::new();
    for k in staircase(n) {
        let s: u32 = k.iter().sum();
        let v = m_quotient(n, &k)? / BigRat::from_integer(pow(&rr, s as usize));
        entries.insert(k, v);
    }
    Ok(APolynomial { n, r, entries })
}

/// A obtained by enumerating i-indices with sum n^2 under the partial-sum constraints
/// i_n + ... + i_{n-j+1} <= jn, then changing to k_{j+1} = jn - (i_n + ... + i_{n-j+1}).
pub fn build_a_from_i_indices(n: usize, r: u64) -> Result<APolynomial> {
    check_nr(n, r)?;
    let nf = factorial(n);
    let top = pow(&nf, n);
    let rr = BigInt::from(r);
    let mut entries = BTreeMap::new();
    // tail[0] = i_n, tail[1] = i_{n-1}, ...; i_1 is determined by the total
    let mut tail = vec![0usize; n - 1];
    fn go(
        n: usize,
        j: usize,
        partial: usize,
        tail: &mut Vec<usize>,
        emit: &mut dyn FnMut(&[usize], usize),
    ) {
        if j == n - 1 {
            if partial <= n * n {
                emit(tail, n * n - partial);
            }
            return;
        }
        let cap = (j + 1) * n - partial;
        for v in 0..=cap {
            tail[j] = v;
            go(n, j + 1, partial + v, tail, emit);
        }
    }
    let mut emit = |tail: &[usize], i1: usize| {
        let mut k = Vec::with_capacity(n - 1);
        let mut s = 0usize;
        for (j, &v) in tail.iter().enumerate() {
            s += v;
            k.push(((j + 1) * n - s) as u32);
        }
        let mut den = factorial(i1);
        for &v in tail {
            den *= factorial(v);
        }
        let total: u32 = k.iter().sum();
        let val = BigRat::new(top.clone(), den * pow(&rr, total as usize));
        entries.insert(k, val);
    };
    go(n, 0, 0, &mut tail, &mut emit);
    Ok(APolynomial { n, r, entries })
}

fn binomial_poly(terms: &[(usize, i64)], order: usize) -> UniSeries {
    let mut c = vec![BigInt::zero(); order + 1];
    for &(d, v) in terms {
        if d <= order {
            c[d] += v;
        }
    }
    UniSeries::new(c)
}

fn ratio(num: &[(usize, i64)], den: &[(usize, i64)], order: usize) -> UniSeries {
    uni_div_unit(&binomial_poly(num, order), &binomial_poly(den, order), order).expect("unit denominator")
}

fn diagonal_formula(n: usize, order: usize, hat: bool) -> UniSeries {
    let sign = if hat { -1 } else { 1 };
    let mut acc = UniSeries::one(order);
    for i in 1..n {
        acc = uni_mul(&acc, &ratio(&[(0, 1), (i, -1)], &[(0, 1), (i, -2)], order), order);
    }
    for i in 2..n {
        let f = ratio(&[(0, 1), (i - 1, -1)], &[(0, 1), (i - 1, -2), (i, sign)], order);
        acc = uni_mul(&acc, &uni_pow(&f, n - i, order), order);
    }
    acc
}

/// C^{n-1}(x) = prod_{i=1}^{n-1} (1-x^i)/(1-2x^i) prod_{i=2}^{n-1} ((1-x^{i-1})/(1-2x^{i-1}+x^i))^{n-i}.
pub fn diagonal_c_formula(n: usize, order: usize) -> UniSeries {
    diagonal_formula(n, order, false)
}

pub fn diagonal_c_hat_formula(n: usize, order: usize) -> UniSeries {
    diagonal_formula(n, order, true)
}

/// P^{n-1}(x) = (1/(1-x))^{n-2} prod_{k=2}^{n-2} ((1-x^k)/(1-2x^k+x^{k+1}))^{n-k-1}.
pub fn p_series(n: usize, order: usize) -> UniSeries {
    let mut acc = uni_pow(&ratio(&[(0, 1)], &[(0, 1), (1, -1)], order), n.saturating_sub(2), order);
    for k in 2..n.saturating_sub(1) {
        let f = ratio(&[(0, 1), (k, -1)], &[(0, 1), (k, -2), (k + 1, 1)], order);
        acc = uni_mul(&acc, &uni_pow(&f, n - k - 1, order), order);
    }
    acc
}

/// Exact value of C^{n-1}(x) (or C-hat^{n-1}(x)) from its product form.
pub fn diagonal_value(n: usize, x: &BigRat, hat: bool) -> Result<BigRat> {
    let one = BigRat::one();
    let two = BigRat::from_integer(BigInt::from(2));
    let xp = |e: usize| crate::arith::rat_pow(x, e as i32);
    let mut acc = BigRat::one();
    for i in 1..n {
        let den = &one - &two * xp(i);
        if den.is_zero() {
            return Err(Error::Pole(format!("1 - 2x^{i} vanishes")));
        }
        acc *= (&one - xp(i)) / den;
    }
    for i in 2..n {
        let den = if hat { &one - &two * xp(i - 1) - xp(i) } else { &one - &two * xp(i - 1) + xp(i) };
        if den.is_zero() {
            return Err(Error::Pole(format!("denominator of degree {i} vanishes")));
        }
        let f = (&one - xp(i - 1)) / den;
        acc *= crate::arith::rat_pow(&f, (n - i) as i32);
    }
    Ok(acc)
}

const POLE_EPS: f64 = 1e-14;

fn guarded(num: f64, den: f64, what: &str) -> Result<f64> {
    if den.abs() <= POLE_EPS {
        return Err(Error::Pole(format!("{what}: denominator {den:e}")));
    }
    Ok(num / den)
}

/// C in w-coordinates; `w[0]` is w_2.
pub fn eval_c_w(n: usize, w: &[f64]) -> Result<f64> {
    if n < 2 || w.len() != n - 1 {
        return Err(Error::invalid("eval_c_w needs n >= 2 and n - 1 values"));
    }
    let prod = |a: usize, b: usize| (a..=b).map(|i| w[i - 2]).product::<f64>();
    let mut acc = 1.0;
    for i in 2..=n {
        let u = prod(2, i);
        acc *= guarded(1.0 - u, 1.0 - 2.0 * u, "E factor")?;
    }
    for i in 2..n {
        for j in i + 1..=n {
            let y = prod(i + 1, j);
            let x = w[i - 2];
            acc *= guarded(1.0 - y, 1.0 - 2.0 * y + x * y, "F factor")?;
        }
    }
    Ok(acc)
}

/// C in the original t-coordinates; `t[0]` is t_1.
pub fn eval_c_t(t: &[f64]) -> Result<f64> {
    let n = t.len();
    let mut acc = 1.0;
    for i in 0..n {
        for j in i + 1..n {
            acc *= guarded(t[j] - t[i], t[j] - 2.0 * t[i], "first product")?;
        }
    }
    for i in 1..n {
        for j in i + 1..n {
            acc *= guarded(t[j] - 2.0 * t[i], t[j] - 2.0 * t[i] + t[i - 1], "second product")?;
        }
    }
    Ok(acc)
}

/// w_i = t_{i-1}/t_i for i = 2..n.
pub fn w_from_t(t: &[f64]) -> Vec<f64> {
    t.windows(2).map(|p| p[0] / p[1]).collect()
}

/// Exact C in w-coordinates at a rational point.
pub fn eval_c_w_exact(n: usize, w: &[BigRat], hat: bool) -> Result<BigRat> {
    if n < 2 || w.len() != n - 1 {
        return Err(Error::invalid("eval_c_w_exact needs n >= 2 and n - 1 values"));
    }
    let prod = |a: usize, b: usize| (a..=b).fold(BigRat::one(), |p, i| p * &w[i - 2]);
    let one = BigRat::one();
    let two = BigRat::from_integer(BigInt::from(2));
    let div = |a: BigRat, b: BigRat| {
        if b.is_zero() { Err(Error::Pole("vanishing denominator".into())) } else { Ok(a / b) }
    };
    let mut acc = BigRat::one();
    for i in 2..=n {
        let u = prod(2, i);
        acc *= div(&one - &u, &one - &two * &u)?;
    }
    for i in 2..n {
        for j in i + 1..=n {
            let y = prod(i + 1, j);
            let xy = &w[i - 2] * &y;
            let den = if hat { &one - &two * &y - xy } else { &one - &two * &y + xy };
            acc *= div(&one - &y, den)?;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::rat;
    use num_traits::Signed;
    use rand::{Rng, SeedableRng};

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    #[test]
    fn e_series_values() {
        assert_eq!(e_series(3).coeffs(), &[bi(1), bi(1), bi(2), bi(4)]);
        let order = 12;
        let back = uni_mul(&e_series(order), &UniSeries::from_poly(&[bi(1), bi(-2)], order), order);
        assert_eq!(back, UniSeries::from_poly(&[bi(1), bi(-1)], order));
        // 1 + x * sum (2x)^j
        for k in 1..=order {
            assert_eq!(e_series(order).coeff(k), &(bi(1) << (k - 1)));
        }
    }

    #[test]
    fn f_coefficients_against_double_sum() {
        // F = 1 + (y - xy) sum_h y^h (2 - x)^h
        let m = 10i64;
        let mut table = vec![vec![BigInt::zero(); (m + 1) as usize]; (m + 1) as usize];
        table[0][0] = bi(1);
        for h in 0..m {
            for a in 0..=h {
                let c = binomial(h, a) * (bi(1) << (h - a) as usize) * if a % 2 == 1 { -1 } else { 1 };
                table[a as usize][(h + 1) as usize] += &c;
                if a < m {
                    table[(a + 1) as usize][(h + 1) as usize] -= &c;
                }
            }
        }
        for k in 0..=m {
            for l in 0..=m {
                assert_eq!(f_coeff(k, l), table[k as usize][l as usize], "k={k} l={l}");
                assert_eq!(f_coeff(k, l).abs(), f_hat_coeff(k, l));
            }
        }
        assert_eq!(f_coeff(0, 1), bi(1));
        assert_eq!(f_coeff(3, 2), bi(0));
        assert_eq!(f_coeff(1, 0), bi(0));
    }

    #[test]
    fn n2_is_single_e_factor() {
        let bx = staircase_hull(2, None).unwrap();
        let c = build_c(2, &bx).unwrap();
        let want: Vec<BigInt> = e_series(2).into_coeffs();
        for k in 0..=2u32 {
            assert_eq!(c.coefficient(&[k]).unwrap(), want[k as usize]);
        }
        let bx = TruncationBox::new(vec![3], None).unwrap();
        assert_eq!(build_c(2, &bx).unwrap().coefficient(&[3]).unwrap(), bi(4));
        assert_eq!(build_c_alternative(2, &bx).unwrap(), build_c(2, &bx).unwrap());
    }

    #[test]
    fn groupings_agree() {
        for n in 2..=5usize {
            let bx = TruncationBox::uniform(n - 1, 8, Some(8)).unwrap();
            let fast = build_c(n, &bx).unwrap();
            assert_eq!(fast.constant_term(), bi(1));
            assert_eq!(fast, build_c_alternative(n, &bx).unwrap(), "n={n}");
        }
        let bx = TruncationBox::uniform(2, 6, None).unwrap();
        assert_eq!(build_c(3, &bx).unwrap(), build_c_alternative(3, &bx).unwrap());
    }

    #[test]
    fn c_coefficients_n3_frozen() {
        // independent Fraction-arithmetic expansion, caps (3, 6)
        let bx = staircase_hull(3, None).unwrap();
        let c = build_c(3, &bx).unwrap();
        let frozen: &[(&[u32], i64)] = &[
            (&[0, 0], 1),
            (&[1, 0], 1),
            (&[0, 1], 1),
            (&[2, 0], 2),
            (&[2, 2], 4),
            (&[3, 3], 10),
            (&[3, 6], -24),
            (&[2, 5], 36),
            (&[1, 4], -8),
        ];
        for (k, v) in frozen {
            assert_eq!(c.coefficient(k).unwrap(), bi(*v), "{k:?}");
        }
        let c4 = build_c(4, &staircase_hull(4, None).unwrap()).unwrap();
        assert_eq!(c4.coefficient(&[4, 8, 12]).unwrap(), bi(461424));
        assert_eq!(c4.coefficient(&[0, 0, 5]).unwrap(), bi(16));
        assert_eq!(c4.coefficient(&[3, 0, 2]).unwrap(), bi(8));
        assert_eq!(c4.len(), 577);
    }

    #[test]
    fn majorant_domination() {
        for n in 2..=5usize {
            let bx = TruncationBox::uniform(n - 1, 8, Some(8)).unwrap();
            let c = build_c(n, &bx).unwrap();
            let ch = build_c_hat(n, &bx).unwrap();
            for k in bx.indices() {
                let a = c.coefficient(&k).unwrap();
                let b = ch.coefficient(&k).unwrap();
                assert!(!b.is_negative());
                assert!(a.abs() <= b, "n={n} k={k:?}");
            }
        }
    }

    #[test]
    fn diagonals_agree() {
        for n in 2..=4usize {
            for t in 0..=8u32 {
                let bx = TruncationBox::uniform(n - 1, t, Some(t)).unwrap();
                let d = crate::series::diagonal(&build_c(n, &bx).unwrap()).unwrap();
                assert_eq!(d, diagonal_c_formula(n, t as usize));
                let dh = crate::series::diagonal(&build_c_hat(n, &bx).unwrap()).unwrap();
                assert_eq!(dh, diagonal_c_hat_formula(n, t as usize));
            }
        }
    }

    #[test]
    fn reduced_product_identity() {
        for n in 2..=12usize {
            let order = 15;
            let p = p_series(n, order);
            assert_eq!(p.coeff(0), &bi(1));
            let reduced = uni_mul(&e_series(order), &p, order);
            for h in 0..=order {
                let mut s = p.coeff(h).clone();
                for i in 1..=h {
                    s += (bi(1) << (i - 1)) * p.coeff(h - i);
                }
                assert_eq!(reduced.coeff(h), &s);
            }
            // C is the reduced product times the remaining E(x^i), i >= 2
            let mut full = reduced;
            for i in 2..n {
                full = uni_mul(&full, &ratio(&[(0, 1), (i, -1)], &[(0, 1), (i, -2)], order), order);
            }
            assert_eq!(full, diagonal_c_formula(n, order));
        }
        let x = crate::arith::rat(1, 10);
        for n in 2..=6usize {
            for hat in [false, true] {
                let d = if hat { diagonal_c_hat_formula(n, 40) } else { diagonal_c_formula(n, 40) };
                let partial: BigRat = d.coeffs().iter().enumerate().map(|(h, c)| BigRat::from_integer(c.clone()) * crate::arith::rat_pow(&x, h as i32)).sum();
                let exact = diagonal_value(n, &x, hat).unwrap();
                assert!(crate::arith::rat_to_f64(&(exact - partial)).abs() < 1e-18);
            }
        }
        let c4 = diagonal_c_formula(4, 2);
        for h in 0..=2 {
            assert!(c4.coeff(h) >= &(bi(1) << h));
        }
    }

    #[test]
    fn staircase_sizes_and_i_indices() {
        assert_eq!(staircase(2).len(), 3);
        assert_eq!(staircase(3).len(), 22);
        assert_eq!(staircase(4).len(), 285);
        for n in 2..=5 {
            let st = staircase(n);
            assert!(st.windows(2).all(|w| w[0] < w[1]));
            let hull = staircase_hull(n, None).unwrap();
            for k in &st {
                assert!(hull.admits(k));
                let i = i_indices(n, k).unwrap();
                assert_eq!(i.iter().sum::<usize>(), n * n);
            }
        }
        assert!(i_indices(2, &[3]).is_none());
    }

    #[test]
    fn a_tables() {
        let a = build_a(2, 9).unwrap();
        assert_eq!(a.get(&[0]).unwrap(), &rat(1, 1));
        assert_eq!(a.get(&[1]).unwrap(), &rat(2, 27));
        assert_eq!(a.get(&[2]).unwrap(), &rat(1, 6 * 81));
        for n in 2..=5usize {
            let a = build_a(n, 9).unwrap();
            let b = build_a_from_i_indices(n, 9).unwrap();
            assert_eq!(a, b, "n={n}");
            for (k, v) in a.iter() {
                let zero = k.iter().all(|&x| x == 0);
                assert!(v > &BigRat::zero() && v <= &BigRat::one());
                assert_eq!(v == &BigRat::one(), zero);
            }
        }
        let w = WeightVector::new(4, 9);
        assert_eq!(w.values, vec![bi(729), bi(81), bi(9), bi(1)]);
    }

    #[test]
    fn evaluators() {
        assert_eq!(eval_c_w(4, &[0.0; 3]).unwrap(), 1.0);
        assert!((eval_c_w(2, &[0.25]).unwrap() - 1.5).abs() < 1e-15);
        assert!(eval_c_w(2, &[0.5]).is_err());
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for n in 2..=6usize {
            for _ in 0..20 {
                let mut t = vec![1.0f64; n];
                for i in (0..n - 1).rev() {
                    let ratio = rng.gen_range(0.02..0.3) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    t[i] = t[i + 1] * ratio;
                }
                let a = eval_c_t(&t).unwrap();
                let b = eval_c_w(n, &w_from_t(&t)).unwrap();
                assert!((a - b).abs() < 1e-12, "n={n} {a} {b}");
            }
        }
        let w = [rat(1, 5), rat(-1, 7), rat(1, 9)];
        let exact = eval_c_w_exact(4, &w, false).unwrap();
        let approx = eval_c_w(4, &[0.2, -1.0 / 7.0, 1.0 / 9.0]).unwrap();
        assert!((crate::arith::rat_to_f64(&exact) - approx).abs() < 1e-14);
    }

    #[test]
    fn partial_sums_converge_to_value() {
        let n = 3;
        let w = [0.05f64, 0.08];
        let target = eval_c_w(n, &w).unwrap();
        let mut prev = f64::INFINITY;
        for t in [2u32, 4, 8, 12] {
            let bx = TruncationBox::uniform(2, t, Some(t)).unwrap();
            let c = build_c(n, &bx).unwrap();
            let s: f64 = c
                .iter()
                .map(|(k, v)| crate::arith::rat_to_f64(&BigRat::from_integer(v.clone())) * w[0].powi(k[0] as i32) * w[1].powi(k[1] as i32))
                .sum();
            let err = (s - target).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-8);
    }
}
