//! Truncated power series: sparse multivariate over exact coefficients, dense univariate,
//! and an in-place kernel that multiplies a series by rational factors with constant term 1.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{AddAssign, MulAssign, Neg, SubAssign};

use num_bigint::BigInt;
use num_traits::{FromPrimitive, One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const MAX_VARS: usize = 16;
pub const MAX_EXP: u32 = 255;

/// Exponent vector (k_2, ..., k_n).
pub type MultiIndex = Vec<u32>;

pub trait Coeff:
    Clone
    + PartialEq
    + Zero
    + One
    + FromPrimitive
    + Send
    + Sync
    + fmt::Debug
    + Neg<Output = Self>
    + for<'a> AddAssign<&'a Self>
    + for<'a> SubAssign<&'a Self>
    + for<'a> MulAssign<&'a Self>
{
}

impl<T> Coeff for T where
    T: Clone
        + PartialEq
        + Zero
        + One
        + FromPrimitive
        + Send
        + Sync
        + fmt::Debug
        + Neg<Output = T>
        + for<'a> AddAssign<&'a T>
        + for<'a> SubAssign<&'a T>
        + for<'a> MulAssign<&'a T>
{
}

fn mul_ref<T: Coeff>(a: &T, b: &T) -> T {
    let mut t = a.clone();
    t *= b;
    t
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TruncationBox {
    caps: Vec<u32>,
    total: Option<u32>,
}

impl TruncationBox {
    pub fn new(caps: Vec<u32>, total: Option<u32>) -> Result<Self> {
        if caps.len() > MAX_VARS {
            return Err(Error::invalid(format!("at most {MAX_VARS} variables are supported")));
        }
        if caps.iter().any(|&c| c > MAX_EXP) {
            return Err(Error::invalid(format!("per-variable caps above {MAX_EXP} are not supported")));
        }
        Ok(TruncationBox { caps, total })
    }

    pub fn uniform(n_vars: usize, cap: u32, total: Option<u32>) -> Result<Self> {
        Self::new(vec![cap; n_vars], total)
    }

    pub fn n_vars(&self) -> usize {
        self.caps.len()
    }

    pub fn caps(&self) -> &[u32] {
        &self.caps
    }

    pub fn total_cap(&self) -> Option<u32> {
        self.total
    }

    pub fn admits(&self, idx: &[u32]) -> bool {
        idx.len() == self.caps.len()
            && idx.iter().zip(&self.caps).all(|(k, c)| k <= c)
            && self.total.is_none_or(|t| idx.iter().map(|&k| k as u64).sum::<u64>() <= t as u64)
    }

    /// `admits` on a packed index; bits above the last variable must be clear.
    pub(crate) fn admits_packed(&self, key: u128) -> bool {
        let nv = self.caps.len();
        if nv < 16 && key >> (8 * nv) != 0 {
            return false;
        }
        let mut sum = 0u64;
        for (j, &c) in self.caps.iter().enumerate() {
            let k = component(key, nv, j);
            if k > c {
                return false;
            }
            sum += k as u64;
        }
        self.total.is_none_or(|t| sum <= t as u64)
    }

    /// Largest total degree any admissible index can reach.
    pub fn max_degree(&self) -> u32 {
        let s: u32 = self.caps.iter().sum();
        self.total.map_or(s, |t| t.min(s))
    }

    pub fn intersect(&self, other: &TruncationBox) -> Result<TruncationBox> {
        if self.n_vars() != other.n_vars() {
            return Err(Error::invalid("boxes over different variable sets"));
        }
        let caps = self.caps.iter().zip(&other.caps).map(|(a, b)| *a.min(b)).collect();
        let total = match (self.total, other.total) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        TruncationBox::new(caps, total)
    }

    /// Number of points of the enclosing rectangle.
    pub fn rect_size(&self) -> u128 {
        self.caps.iter().map(|&c| c as u128 + 1).product()
    }

    /// Exact number of admissible indices.
    pub fn count(&self) -> u128 {
        let Some(t) = self.total else { return self.rect_size() };
        let t = t as usize;
        let mut ways = vec![0u128; t + 1];
        ways[0] = 1;
        for &c in &self.caps {
            let mut next = vec![0u128; t + 1];
            for (s, &w) in ways.iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for k in 0..=(c as usize).min(t - s) {
                    next[s + k] += w;
                }
            }
            ways = next;
        }
        ways.iter().sum()
    }

    /// All admissible indices in lexicographic order.
    pub fn indices(&self) -> Vec<MultiIndex> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; self.n_vars()];
        self.walk(0, 0, &mut cur, &mut |k| out.push(k.to_vec()));
        out
    }

    fn walk(&self, j: usize, used: u32, cur: &mut Vec<u32>, f: &mut dyn FnMut(&[u32])) {
        if j == cur.len() {
            f(cur);
            return;
        }
        let mut hi = self.caps[j];
        if let Some(t) = self.total {
            hi = hi.min(t - used);
        }
        for k in 0..=hi {
            cur[j] = k;
            self.walk(j + 1, used + k, cur, f);
        }
        cur[j] = 0;
    }
}

pub(crate) fn pack(idx: &[u32]) -> u128 {
    idx.iter().fold(0u128, |acc, &k| (acc << 8) | k as u128)
}

pub(crate) fn unpack(key: u128, n_vars: usize) -> MultiIndex {
    (0..n_vars).map(|j| ((key >> (8 * (n_vars - 1 - j))) & 0xff) as u32).collect()
}

fn component(key: u128, n_vars: usize, j: usize) -> u32 {
    ((key >> (8 * (n_vars - 1 - j))) & 0xff) as u32
}

/// Sparse truncated series; terms sorted by packed index, zeros never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiSeries<T = BigInt> {
    bx: TruncationBox,
    terms: Vec<(u128, T)>,
}

impl<T: Coeff> MultiSeries<T> {
    pub fn zero(bx: TruncationBox) -> Self {
        MultiSeries { bx, terms: Vec::new() }
    }

    pub fn one(bx: TruncationBox) -> Self {
        MultiSeries { bx, terms: vec![(0, T::one())] }
    }

    /// Builds a series from (index, coefficient) pairs, summing repeats and dropping
    /// anything that falls outside the box.
    pub fn from_terms(bx: TruncationBox, terms: impl IntoIterator<Item = (MultiIndex, T)>) -> Result<Self> {
        let mut acc: BTreeMap<u128, T> = BTreeMap::new();
        for (idx, c) in terms {
            if idx.len() != bx.n_vars() || idx.iter().any(|&k| k > MAX_EXP) {
                return Err(Error::OutOfBox { index: idx });
            }
            if !bx.admits(&idx) {
                continue;
            }
            *acc.entry(pack(&idx)).or_insert_with(T::zero) += &c;
        }
        Ok(Self::from_map(bx, acc))
    }

    fn from_map(bx: TruncationBox, acc: BTreeMap<u128, T>) -> Self {
        let terms = acc.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        MultiSeries { bx, terms }
    }

    pub(crate) fn from_sorted_unchecked(bx: TruncationBox, terms: Vec<(u128, T)>) -> Self {
        debug_assert!(terms.windows(2).all(|w| w[0].0 < w[1].0));
        MultiSeries { bx, terms }
    }

    pub fn n_vars(&self) -> usize {
        self.bx.n_vars()
    }

    pub fn truncation(&self) -> &TruncationBox {
        &self.bx
    }

    /// Number of stored (nonzero) coefficients.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, idx: &[u32]) -> Result<T> {
        if !self.bx.admits(idx) {
            return Err(Error::OutOfBox { index: idx.to_vec() });
        }
        Ok(self.get_packed(pack(idx)).cloned().unwrap_or_else(T::zero))
    }

    pub(crate) fn get_packed(&self, key: u128) -> Option<&T> {
        self.terms.binary_search_by_key(&key, |(k, _)| *k).ok().map(|i| &self.terms[i].1)
    }

    pub(crate) fn packed_terms(&self) -> &[(u128, T)] {
        &self.terms
    }

    pub fn iter(&self) -> impl Iterator<Item = (MultiIndex, &T)> + '_ {
        let nv = self.n_vars();
        self.terms.iter().map(move |(k, c)| (unpack(*k, nv), c))
    }

    /// Restriction to a sub-box over the same variables.
    pub fn restrict(&self, bx: &TruncationBox) -> Result<Self> {
        if bx.n_vars() != self.n_vars() {
            return Err(Error::invalid("restriction to a box over different variables"));
        }
        let nv = self.n_vars();
        let terms = self.terms.iter().filter(|(k, _)| bx.admits(&unpack(*k, nv))).cloned().collect();
        Ok(MultiSeries { bx: bx.clone(), terms })
    }

    pub fn map<U: Coeff>(&self, f: impl Fn(&T) -> U) -> MultiSeries<U> {
        let terms = self.terms.iter().map(|(k, c)| (*k, f(c))).filter(|(_, c)| !c.is_zero()).collect();
        MultiSeries { bx: self.bx.clone(), terms }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, false)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, true)
    }

    fn combine(&self, other: &Self, negate: bool) -> Result<Self> {
        if self.bx != other.bx {
            return Err(Error::invalid("adding series over different boxes"));
        }
        let mut acc: BTreeMap<u128, T> = self.terms.iter().cloned().collect();
        for (k, c) in &other.terms {
            let e = acc.entry(*k).or_insert_with(T::zero);
            if negate {
                *e -= c;
            } else {
                *e += c;
            }
        }
        Ok(Self::from_map(self.bx.clone(), acc))
    }

    pub fn constant_term(&self) -> T {
        self.get_packed(0).cloned().unwrap_or_else(T::zero)
    }
}

/// Truncated product of two series over the same variables.
pub fn ms_mul<T: Coeff>(a: &MultiSeries<T>, b: &MultiSeries<T>, bx: &TruncationBox) -> Result<MultiSeries<T>> {
    let nv = bx.n_vars();
    if a.n_vars() != nv || b.n_vars() != nv {
        return Err(Error::invalid("multiplying series over different variable sets"));
    }
    let b_idx: Vec<(MultiIndex, &T)> = b.terms.iter().map(|(k, c)| (unpack(*k, nv), c)).collect();
    let partial = |chunk: &[(u128, T)]| {
        let mut acc: BTreeMap<u128, T> = BTreeMap::new();
        let mut sum = vec![0u32; nv];
        for (ka, ca) in chunk {
            let ua = unpack(*ka, nv);
            for (ub, cb) in &b_idx {
                for j in 0..nv {
                    sum[j] = ua[j] + ub[j];
                }
                if bx.admits(&sum) {
                    *acc.entry(pack(&sum)).or_insert_with(T::zero) += &mul_ref(ca, cb);
                }
            }
        }
        acc
    };
    let work = a.terms.len() * b.terms.len();
    let maps: Vec<BTreeMap<u128, T>> = if work > 50_000 {
        a.terms.par_chunks(64.max(a.terms.len() / 64)).map(partial).collect()
    } else {
        vec![partial(&a.terms)]
    };
    let mut acc: BTreeMap<u128, T> = BTreeMap::new();
    for m in maps {
        for (k, c) in m {
            *acc.entry(k).or_insert_with(T::zero) += &c;
        }
    }
    Ok(MultiSeries::from_map(bx.clone(), acc))
}

/// Sum of u^j, j >= 0, truncated to the box.
pub fn geometric_inverse<T: Coeff>(u: &MultiSeries<T>, bx: &TruncationBox) -> Result<MultiSeries<T>> {
    if !u.constant_term().is_zero() {
        return Err(Error::NonZeroConstantTerm);
    }
    let u = u.restrict(bx)?;
    let mut result = MultiSeries::one(bx.clone());
    let mut power = MultiSeries::one(bx.clone());
    for _ in 0..=bx.max_degree() {
        power = ms_mul(&power, &u, bx)?;
        if power.is_empty() {
            break;
        }
        result = result.add(&power)?;
    }
    Ok(result)
}

/// Coefficients of the series restricted to w_2 = ... = w_n = x.
pub fn diagonal<T: Coeff>(s: &MultiSeries<T>) -> Result<UniSeries<T>> {
    let Some(t) = s.bx.total_cap() else {
        return Err(Error::invalid("diagonal needs a total-degree cap"));
    };
    let nv = s.n_vars();
    let mut coeffs = vec![T::zero(); t as usize + 1];
    for (k, c) in &s.terms {
        let h: u32 = (0..nv).map(|j| component(*k, nv, j)).sum();
        coeffs[h as usize] += c;
    }
    Ok(UniSeries { coeffs })
}

/// Dense truncated univariate series; `coeffs.len() == order + 1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UniSeries<T = BigInt> {
    coeffs: Vec<T>,
}

impl<T: Coeff> UniSeries<T> {
    pub fn new(coeffs: Vec<T>) -> Self {
        assert!(!coeffs.is_empty(), "a series has order >= 0");
        UniSeries { coeffs }
    }

    /// A polynomial given by its low-order coefficients, padded or cut to `order`.
    pub fn from_poly(poly: &[T], order: usize) -> Self {
        let mut coeffs: Vec<T> = poly.iter().take(order + 1).cloned().collect();
        coeffs.resize(order + 1, T::zero());
        UniSeries { coeffs }
    }

    pub fn zero(order: usize) -> Self {
        UniSeries { coeffs: vec![T::zero(); order + 1] }
    }

    pub fn one(order: usize) -> Self {
        Self::from_poly(&[T::one()], order)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeff(&self, h: usize) -> &T {
        &self.coeffs[h]
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<T> {
        self.coeffs
    }

    pub fn truncate(&self, order: usize) -> Self {
        Self::from_poly(&self.coeffs, order)
    }
}

pub fn uni_mul<T: Coeff>(a: &UniSeries<T>, b: &UniSeries<T>, order: usize) -> UniSeries<T> {
    let mut out = vec![T::zero(); order + 1];
    for (i, ai) in a.coeffs.iter().enumerate().take(order + 1) {
        if ai.is_zero() {
            continue;
        }
        for (j, bj) in b.coeffs.iter().enumerate().take(order + 1 - i) {
            if !bj.is_zero() {
                out[i + j] += &mul_ref(ai, bj);
            }
        }
    }
    UniSeries { coeffs: out }
}

pub fn uni_geometric_inverse<T: Coeff>(u: &UniSeries<T>, order: usize) -> Result<UniSeries<T>> {
    if !u.coeffs[0].is_zero() {
        return Err(Error::NonZeroConstantTerm);
    }
    // g = 1 + u g, solved coefficient by coefficient
    let mut g = vec![T::zero(); order + 1];
    g[0] = T::one();
    for h in 1..=order {
        let mut s = T::zero();
        for i in 1..=h.min(u.order()) {
            if !u.coeffs[i].is_zero() {
                s += &mul_ref(&u.coeffs[i], &g[h - i]);
            }
        }
        g[h] = s;
    }
    Ok(UniSeries { coeffs: g })
}

/// a / (1 - u) where `den = 1 - u` has constant term 1.
pub fn uni_div_unit<T: Coeff>(a: &UniSeries<T>, den: &UniSeries<T>, order: usize) -> Result<UniSeries<T>> {
    if !den.coeffs[0].is_one() {
        return Err(Error::invalid("denominator must have constant term 1"));
    }
    let mut out = vec![T::zero(); order + 1];
    for h in 0..=order {
        let mut s = a.coeffs.get(h).cloned().unwrap_or_else(T::zero);
        for i in 1..=h.min(den.order()) {
            if !den.coeffs[i].is_zero() {
                s -= &mul_ref(&den.coeffs[i], &out[h - i]);
            }
        }
        out[h] = s;
    }
    Ok(UniSeries { coeffs: out })
}

pub fn uni_pow<T: Coeff>(a: &UniSeries<T>, e: usize, order: usize) -> UniSeries<T> {
    let mut acc = UniSeries::one(order);
    for _ in 0..e {
        acc = uni_mul(&acc, a, order);
    }
    acc
}

/// Sparse polynomial with small integer coefficients, used to describe factors.
pub type SmallPoly = Vec<(MultiIndex, i64)>;

enum Layout {
    Dense { strides: Vec<usize> },
    Hashed { keys: Vec<u128>, pos: HashMap<u128, usize> },
}

struct Shift {
    support: Vec<(usize, u32)>,
    packed: u128,
    offset: usize,
    coeff: i64,
}

/// Coefficient array over every admissible index of a box, updated in place by
/// multiplication with polynomials and division by polynomials with constant term 1.
pub struct Workspace<T> {
    bx: TruncationBox,
    layout: Layout,
    vals: Vec<T>,
}

impl<T: Coeff> Workspace<T> {
    /// Starts from the constant series 1.
    pub fn one(bx: &TruncationBox) -> Self {
        let nv = bx.n_vars();
        let layout = if bx.total_cap().is_none() {
            let mut strides = vec![1usize; nv];
            for j in (0..nv.saturating_sub(1)).rev() {
                strides[j] = strides[j + 1] * (bx.caps()[j + 1] as usize + 1);
            }
            Layout::Dense { strides }
        } else {
            let keys: Vec<u128> = bx.indices().iter().map(|k| pack(k)).collect();
            let pos = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
            Layout::Hashed { keys, pos }
        };
        let size = match &layout {
            Layout::Dense { .. } => bx.rect_size() as usize,
            Layout::Hashed { keys, .. } => keys.len(),
        };
        let mut vals = vec![T::zero(); size];
        vals[0] = T::one();
        Workspace { bx: bx.clone(), layout, vals }
    }

    pub fn len(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    fn shifts(&self, poly: &SmallPoly) -> (i64, Vec<Shift>) {
        let mut c0 = 0;
        let mut out = Vec::new();
        for (idx, c) in poly {
            assert_eq!(idx.len(), self.bx.n_vars());
            if idx.iter().all(|&k| k == 0) {
                c0 += c;
                continue;
            }
            let support: Vec<(usize, u32)> =
                idx.iter().enumerate().filter(|(_, k)| **k > 0).map(|(j, k)| (j, *k)).collect();
            let offset = match &self.layout {
                Layout::Dense { strides } => support.iter().map(|(j, k)| strides[*j] * *k as usize).sum(),
                Layout::Hashed { .. } => 0,
            };
            out.push(Shift { support, packed: pack(idx), offset, coeff: *c });
        }
        (c0, out)
    }

    /// Multiplies in place by `num` and then divides by `den`; `den` must have constant term 1.
    pub fn apply(&mut self, num: &SmallPoly, den: &SmallPoly) {
        let (n0, nsh) = self.shifts(num);
        let (d0, dsh) = self.shifts(den);
        assert_eq!(d0, 1, "denominator must have constant term 1");
        let nv = self.bx.n_vars();
        let n0t = T::from_i64(n0).unwrap();
        let len = self.vals.len();
        // multiplication: descending order so that lower entries are still the old ones
        let mut idx = self.last_index();
        for p in (0..len).rev() {
            if !n0t.is_one() {
                self.vals[p] *= &n0t;
            }
            for s in &nsh {
                if let Some(q) = self.source(p, &idx, s, nv) {
                    axpy(&mut self.vals, p, q, s.coeff);
                }
            }
            if p > 0 {
                self.step_back(&mut idx);
            }
        }
        // division: ascending order so that lower entries are already the new ones
        let mut idx = vec![0u32; nv];
        for p in 0..len {
            for s in &dsh {
                if let Some(q) = self.source(p, &idx, s, nv) {
                    axpy(&mut self.vals, p, q, -s.coeff);
                }
            }
            if p + 1 < len {
                self.step_forward(&mut idx, p + 1);
            }
        }
    }

    fn last_index(&self) -> MultiIndex {
        match &self.layout {
            Layout::Dense { .. } => self.bx.caps().to_vec(),
            Layout::Hashed { keys, .. } => unpack(*keys.last().unwrap(), self.bx.n_vars()),
        }
    }

    fn step_forward(&self, idx: &mut [u32], p: usize) {
        match &self.layout {
            Layout::Dense { .. } => {
                let caps = self.bx.caps();
                let mut j = idx.len();
                while j > 0 {
                    j -= 1;
                    if idx[j] < caps[j] {
                        idx[j] += 1;
                        return;
                    }
                    idx[j] = 0;
                }
            }
            Layout::Hashed { keys, .. } => {
                let k = unpack(keys[p], idx.len());
                idx.copy_from_slice(&k);
            }
        }
    }

    fn step_back(&self, idx: &mut [u32]) {
        match &self.layout {
            Layout::Dense { .. } => {
                let caps = self.bx.caps();
                let mut j = idx.len();
                while j > 0 {
                    j -= 1;
                    if idx[j] > 0 {
                        idx[j] -= 1;
                        return;
                    }
                    idx[j] = caps[j];
                }
            }
            Layout::Hashed { keys, pos } => {
                let p = pos[&pack(idx)];
                let k = unpack(keys[p - 1], idx.len());
                idx.copy_from_slice(&k);
            }
        }
    }

    fn source(&self, p: usize, idx: &[u32], s: &Shift, _nv: usize) -> Option<usize> {
        if s.support.iter().any(|(j, k)| idx[*j] < *k) {
            return None;
        }
        match &self.layout {
            Layout::Dense { .. } => Some(p - s.offset),
            Layout::Hashed { pos, .. } => pos.get(&(pack(idx) - s.packed)).copied(),
        }
    }

    pub fn into_series(self) -> MultiSeries<T> {
        let nv = self.bx.n_vars();
        let mut terms = Vec::new();
        match &self.layout {
            Layout::Dense { .. } => {
                let mut idx = vec![0u32; nv];
                let len = self.vals.len();
                for (p, v) in self.vals.into_iter().enumerate() {
                    if !v.is_zero() {
                        terms.push((pack(&idx), v));
                    }
                    if p + 1 < len {
                        let caps = self.bx.caps();
                        let mut j = nv;
                        while j > 0 {
                            j -= 1;
                            if idx[j] < caps[j] {
                                idx[j] += 1;
                                break;
                            }
                            idx[j] = 0;
                        }
                    }
                }
            }
            Layout::Hashed { keys, .. } => {
                for (k, v) in keys.iter().zip(self.vals) {
                    if !v.is_zero() {
                        terms.push((*k, v));
                    }
                }
            }
        }
        MultiSeries::from_sorted_unchecked(self.bx, terms)
    }
}

fn axpy<T: Coeff>(vals: &mut [T], p: usize, q: usize, c: i64) {
    debug_assert!(q < p);
    let (lo, hi) = vals.split_at_mut(p);
    let src = &lo[q];
    if src.is_zero() {
        return;
    }
    let dst = &mut hi[0];
    match c {
        0 => {}
        1 => *dst += src,
        -1 => *dst -= src,
        2 => {
            *dst += src;
            *dst += src;
        }
        -2 => {
            *dst -= src;
            *dst -= src;
        }
        _ => {
            let mut t = T::from_i64(c).unwrap();
            t *= src;
            *dst += &t;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn series(bx: &TruncationBox, terms: &[(&[u32], i64)]) -> MultiSeries {
        MultiSeries::from_terms(bx.clone(), terms.iter().map(|(k, c)| (k.to_vec(), bi(*c)))).unwrap()
    }

    #[test]
    fn truncated_square() {
        let bx = TruncationBox::new(vec![1], None).unwrap();
        let a = series(&bx, &[(&[0], 1), (&[1], 1)]);
        let sq = ms_mul(&a, &a, &bx).unwrap();
        assert_eq!(sq, series(&bx, &[(&[0], 1), (&[1], 2)]));
        let one = MultiSeries::one(bx.clone());
        assert_eq!(ms_mul(&a, &one, &bx).unwrap(), a);
    }

    #[test]
    fn geometric_examples() {
        let bx = TruncationBox::new(vec![3], None).unwrap();
        let u = series(&bx, &[(&[1], 2)]);
        let g = geometric_inverse(&u, &bx).unwrap();
        assert_eq!(g, series(&bx, &[(&[0], 1), (&[1], 2), (&[2], 4), (&[3], 8)]));
        let z = MultiSeries::<BigInt>::zero(bx.clone());
        assert_eq!(geometric_inverse(&z, &bx).unwrap(), MultiSeries::one(bx.clone()));
        assert!(matches!(
            geometric_inverse(&MultiSeries::<BigInt>::one(bx.clone()), &bx),
            Err(Error::NonZeroConstantTerm)
        ));
    }

    #[test]
    fn reconstruct_numerator() {
        let bx = TruncationBox::new(vec![10], None).unwrap();
        let e = {
            let mut w = Workspace::<BigInt>::one(&bx);
            w.apply(&vec![(vec![0], 1), (vec![1], -1)], &vec![(vec![0], 1), (vec![1], -2)]);
            w.into_series()
        };
        let den = series(&bx, &[(&[0], 1), (&[1], -2)]);
        assert_eq!(ms_mul(&e, &den, &bx).unwrap(), series(&bx, &[(&[0], 1), (&[1], -1)]));
    }

    #[test]
    fn coefficient_contract() {
        let bx = TruncationBox::new(vec![2, 2], Some(3)).unwrap();
        let s = series(&bx, &[(&[1, 1], 5)]);
        assert_eq!(s.coefficient(&[1, 1]).unwrap(), bi(5));
        assert_eq!(s.coefficient(&[0, 1]).unwrap(), bi(0));
        assert!(s.coefficient(&[2, 2]).is_err());
        assert!(s.coefficient(&[3, 0]).is_err());
        assert!(s.coefficient(&[1]).is_err());
    }

    #[test]
    fn diagonal_examples() {
        let bx = TruncationBox::new(vec![3, 3], Some(3)).unwrap();
        let s = series(&bx, &[(&[0, 0], 1), (&[1, 0], 1), (&[0, 1], 1)]);
        assert_eq!(diagonal(&s).unwrap().coeffs(), &[bi(1), bi(2), bi(0), bi(0)]);
        let z = MultiSeries::<BigInt>::zero(bx.clone());
        assert!(diagonal(&z).unwrap().coeffs().iter().all(|c| c.is_zero()));
        let nb = TruncationBox::new(vec![3, 3], None).unwrap();
        assert!(diagonal(&MultiSeries::<BigInt>::one(nb)).is_err());
    }

    #[test]
    fn box_counts() {
        let bx = TruncationBox::new(vec![2, 3, 1], Some(4)).unwrap();
        assert_eq!(bx.count(), bx.indices().len() as u128);
        let rb = TruncationBox::new(vec![2, 3, 1], None).unwrap();
        assert_eq!(rb.count(), 24);
        let idx = rb.indices();
        assert!(idx.windows(2).all(|w| w[0] < w[1]));
        assert!(TruncationBox::new(vec![256], None).is_err());
        assert!(TruncationBox::new(vec![1; 17], None).is_err());
    }

    #[test]
    fn uni_ops() {
        let order = 4;
        let x = UniSeries::from_poly(&[bi(0), bi(1)], order);
        let g = uni_geometric_inverse(&x, order).unwrap();
        assert_eq!(g.coeffs(), vec![bi(1); 5].as_slice());
        let two_x = UniSeries::from_poly(&[bi(0), bi(2)], order);
        let e = uni_mul(&UniSeries::from_poly(&[bi(1), bi(-1)], order), &uni_geometric_inverse(&two_x, order).unwrap(), order);
        assert_eq!(e.coeffs(), &[bi(1), bi(1), bi(2), bi(4), bi(8)]);
        let back = uni_mul(&e, &UniSeries::from_poly(&[bi(1), bi(-2)], order), order);
        assert_eq!(back.coeffs(), &[bi(1), bi(-1), bi(0), bi(0), bi(0)]);
        let d = uni_div_unit(&UniSeries::from_poly(&[bi(1), bi(-1)], order), &UniSeries::from_poly(&[bi(1), bi(-2)], order), order).unwrap();
        assert_eq!(d, e);
        let a = UniSeries::from_poly(&[bi(1), bi(3), bi(-2)], order);
        let b = UniSeries::from_poly(&[bi(2), bi(0), bi(5), bi(1)], order);
        let c = UniSeries::from_poly(&[bi(-1), bi(7)], order);
        assert_eq!(uni_mul(&a, &b, order), uni_mul(&b, &a, order));
        assert_eq!(uni_mul(&uni_mul(&a, &b, order), &c, order), uni_mul(&a, &uni_mul(&b, &c, order), order));
        assert!(uni_geometric_inverse(&a, order).is_err());
    }

    #[test]
    fn hashed_kernel_matches_generic() {
        let bx = TruncationBox::new(vec![4, 5, 3], Some(6)).unwrap();
        let mut w = Workspace::<BigInt>::one(&bx);
        let num: SmallPoly = vec![(vec![0, 0, 0], 1), (vec![0, 1, 1], -1)];
        let den: SmallPoly = vec![(vec![0, 0, 0], 1), (vec![0, 1, 1], -2), (vec![1, 1, 1], 1)];
        w.apply(&num, &den);
        let fast = w.into_series();
        let to_series = |p: &SmallPoly| MultiSeries::from_terms(bx.clone(), p.iter().map(|(k, c)| (k.clone(), bi(*c)))).unwrap();
        let u = MultiSeries::one(bx.clone()).sub(&to_series(&den)).unwrap();
        let slow = ms_mul(&to_series(&num), &geometric_inverse(&u, &bx).unwrap(), &bx).unwrap();
        assert_eq!(fast, slow);
        let rb = TruncationBox::new(vec![4, 5, 3], None).unwrap();
        let mut w = Workspace::<BigInt>::one(&rb);
        w.apply(&num, &den);
        assert_eq!(w.into_series().restrict(&bx).unwrap(), slow);
    }

    fn arb_series(nv: usize, cap: u32) -> impl Strategy<Value = MultiSeries> {
        let bx = TruncationBox::uniform(nv, cap, None).unwrap();
        prop::collection::vec((prop::collection::vec(0..=cap, nv), -20i64..20), 0..8).prop_map(move |ts| {
            MultiSeries::from_terms(bx.clone(), ts.into_iter().map(|(k, c)| (k, BigInt::from(c)))).unwrap()
        })
    }

    fn triple() -> impl Strategy<Value = (MultiSeries, MultiSeries, MultiSeries)> {
        (1usize..=4, 1u32..=8).prop_flat_map(|(nv, cap)| (arb_series(nv, cap), arb_series(nv, cap), arb_series(nv, cap)))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn ring_axioms((a, b, c) in triple()) {
            let bx = a.truncation().clone();
            prop_assert_eq!(ms_mul(&a, &b, &bx).unwrap(), ms_mul(&b, &a, &bx).unwrap());
            let ab_c = ms_mul(&ms_mul(&a, &b, &bx).unwrap(), &c, &bx).unwrap();
            let a_bc = ms_mul(&a, &ms_mul(&b, &c, &bx).unwrap(), &bx).unwrap();
            prop_assert_eq!(ab_c, a_bc);
            let lhs = ms_mul(&a, &b.add(&c).unwrap(), &bx).unwrap();
            let rhs = ms_mul(&a, &b, &bx).unwrap().add(&ms_mul(&a, &c, &bx).unwrap()).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn truncation_coherence((a, b, _c) in triple(), shrink in 0u32..4, tot in 0u32..10) {
            let big = a.truncation().clone();
            let caps: Vec<u32> = big.caps().iter().map(|c| c.saturating_sub(shrink)).collect();
            let small = TruncationBox::new(caps, Some(tot)).unwrap();
            let direct = ms_mul(&a.restrict(&small).unwrap(), &b.restrict(&small).unwrap(), &small).unwrap();
            let via_big = ms_mul(&a, &b, &big).unwrap().restrict(&small).unwrap();
            prop_assert_eq!(direct, via_big);
        }

        #[test]
        fn geometric_inverse_identity((a, _b, _c) in triple()) {
            let bx = a.truncation().clone();
            let u = a.sub(&MultiSeries::<BigInt>::one(bx.clone()).map(|c: &BigInt| c * a.constant_term())).unwrap();
            let inv = geometric_inverse(&u, &bx).unwrap();
            let one_minus_u = MultiSeries::one(bx.clone()).sub(&u).unwrap();
            prop_assert_eq!(ms_mul(&one_minus_u, &inv, &bx).unwrap(), MultiSeries::one(bx.clone()));
        }

        #[test]
        fn diagonal_is_multiplicative((a, b, _c) in triple(), tot in 0u32..12) {
            let bx = TruncationBox::uniform(a.n_vars(), tot.max(8), Some(tot)).unwrap();
            let lift = |s: &MultiSeries| MultiSeries::from_terms(bx.clone(), s.iter().map(|(k, c)| (k, c.clone()))).unwrap();
            let (a, b) = (lift(&a), lift(&b));
            let prod = ms_mul(&a, &b, &bx).unwrap();
            let order = tot as usize;
            prop_assert_eq!(diagonal(&prod).unwrap(), uni_mul(&diagonal(&a).unwrap(), &diagonal(&b).unwrap(), order));
        }
    }
}
