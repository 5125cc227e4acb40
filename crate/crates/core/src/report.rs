//! Run configuration, check records and the suite runners behind the command-line tool.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use num_complex::Complex64;
use num_traits::Signed;
use rand::{Rng, SeedableRng, rngs::StdRng};
use serde::Serialize;
use serde_json::{Value, json};

use crate::arith::{BigRat, ln_rat, rat};
use crate::bounds;
use crate::cache::SeriesCache;
use crate::check::Finding;
use crate::circle::{self, CircleFn};
use crate::conjecture::{self, ConjectureReport, EXACT_CUTOFF, Mode, Options, RatioRow};
use crate::error::{Error, Result};
use crate::genfun;
use crate::series::TruncationBox;

pub const SCHEMA: &str = "1";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    VerifyConjecture,
    DegreeBounds,
    Estimates,
    Circle,
    All,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeChoice {
    /// exact up to the exact cutoff, certified beyond it
    #[default]
    Auto,
    Exact,
    Certified,
}

/// Everything a suite reads. Unset ranges fall back to per-suite defaults.
#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n_range: Option<(usize, usize)>,
    pub r_values: Option<Vec<u64>>,
    pub trunc: u32,
    pub precision: usize,
    pub samples: usize,
    pub rho: f64,
    pub mode: ModeChoice,
    pub budget: u64,
    #[serde(skip)]
    pub workers: usize,
    #[serde(skip)]
    pub cache_dir: Option<PathBuf>,
    #[serde(skip)]
    pub plot_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            n_range: None,
            r_values: None,
            trunc: 20,
            precision: 128,
            samples: 100_000,
            rho: 0.25,
            mode: ModeChoice::Auto,
            budget: conjecture::DEFAULT_BUDGET,
            workers: 0,
            cache_dir: None,
            plot_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((lo, hi)) = self.n_range
            && (lo < 2 || lo > hi)
        {
            return Err(Error::invalid(format!("n range {lo}..{hi} must satisfy 2 <= A <= B")));
        }
        if let Some(rs) = &self.r_values {
            if rs.is_empty() {
                return Err(Error::invalid("empty r list"));
            }
            if let Some(r) = rs.iter().find(|&&r| r < 3) {
                return Err(Error::invalid(format!("r = {r}: r must be at least 3")));
            }
            if matches!(self.command, Command::DegreeBounds | Command::All)
                && let Some(r) = rs.iter().find(|&&r| r < 9)
            {
                return Err(Error::invalid(format!("r = {r}: the degree-bound gates need r >= 9")));
            }
        }
        if !(self.rho > 0.0 && self.rho <= 0.25) {
            return Err(Error::invalid(format!("rho = {} must lie in (0, 0.25]", self.rho)));
        }
        if self.samples < 3 {
            return Err(Error::invalid("samples must be at least 3"));
        }
        if self.precision < 64 {
            return Err(Error::invalid("precision must be at least 64 bits"));
        }
        if self.trunc == 0 {
            return Err(Error::invalid("truncation order must be positive"));
        }
        if self.budget == 0 {
            return Err(Error::invalid("budget must be positive"));
        }
        Ok(())
    }

    pub fn options(&self) -> Options {
        Options {
            budget: self.budget,
            workers: 0,
            cache: self.cache_dir.as_ref().map(SeriesCache::new),
            ..Options::default()
        }
    }

    fn ns(&self, default: (usize, usize)) -> Vec<usize> {
        let (lo, hi) = self.n_range.unwrap_or(default);
        (lo..=hi).collect()
    }

    fn rs(&self, default: &[u64]) -> Vec<u64> {
        self.r_values.clone().unwrap_or_else(|| default.to_vec())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Info,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub anchor: String,
    pub name: String,
    pub status: Status,
    pub witness: Option<String>,
    pub value: Option<String>,
}

/// Wall-clock and environment data, kept apart from the deterministic body.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
    pub workers: usize,
    pub cache_hits: usize,
    pub checks: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub schema: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub checks: Vec<CheckRecord>,
    pub data: BTreeMap<String, Value>,
    pub overall: Status,
    #[serde(skip)]
    pub timing: Timing,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.overall == Status::Pass
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }

    /// The report body; `timing` is added only when asked for.
    pub fn to_json(&self, with_timing: bool) -> Value {
        let mut v = serde_json::to_value(self).expect("report serializes");
        if with_timing {
            v["timing"] = serde_json::to_value(&self.timing).expect("timing serializes");
        }
        v
    }
}

struct Runner {
    checks: Vec<CheckRecord>,
    data: BTreeMap<String, Value>,
    timing: Timing,
}

fn status(ok: bool) -> Status {
    if ok { Status::Pass } else { Status::Fail }
}

impl Runner {
    fn new() -> Self {
        Runner { checks: Vec::new(), data: BTreeMap::new(), timing: Timing::default() }
    }

    fn push(&mut self, id: String, anchor: &str, name: String, status: Status, witness: Option<String>, value: Option<String>) {
        self.checks.push(CheckRecord { id, anchor: anchor.into(), name, status, witness, value });
    }

    /// Runs `f`, timing it. Resource limits abort the run; any other error becomes a failed record.
    fn run<T>(&mut self, id: &str, anchor: &str, f: impl FnOnce() -> Result<T>) -> Result<Option<T>> {
        let start = Instant::now();
        let out = f();
        self.timing.checks.insert(id.to_string(), start.elapsed().as_secs_f64());
        match out {
            Ok(v) => Ok(Some(v)),
            Err(e @ Error::ResourceLimit { .. }) => Err(e),
            Err(e) => {
                self.push(id.into(), anchor, "evaluation error".into(), Status::Fail, Some(e.to_string()), None);
                Ok(None)
            }
        }
    }

    fn finding(&mut self, id: &str, anchor: &str, f: Finding) {
        self.push(id.into(), anchor, f.name, status(f.passed), f.witness, f.value);
    }

    fn claim(&mut self, id: &str, anchor: &str, name: impl Into<String>, f: impl FnOnce() -> Result<(bool, String)>) -> Result<()> {
        if let Some((ok, value)) = self.run(id, anchor, f)? {
            self.push(id.into(), anchor, name.into(), status(ok), None, Some(value));
        }
        Ok(())
    }

    fn check_finding(&mut self, id: &str, anchor: &str, f: impl FnOnce() -> Result<Finding>) -> Result<()> {
        if let Some(fd) = self.run(id, anchor, f)? {
            self.finding(id, anchor, fd);
        }
        Ok(())
    }

    fn check_findings(&mut self, id: &str, anchor: &str, f: impl FnOnce() -> Result<Vec<Finding>>) -> Result<()> {
        if let Some(fs) = self.run(id, anchor, f)? {
            for (j, fd) in fs.into_iter().enumerate() {
                self.finding(&format!("{id}.{j}"), anchor, fd);
            }
        }
        Ok(())
    }

    fn info(&mut self, id: &str, anchor: &str, name: impl Into<String>, value: impl Into<String>) {
        self.push(id.into(), anchor, name.into(), Status::Info, None, Some(value.into()));
    }

    fn finish(self, cfg: &RunConfig, start: Instant) -> SuiteReport {
        let overall = status(self.checks.iter().all(|c| c.status != Status::Fail));
        let mut timing = self.timing;
        timing.elapsed_seconds = start.elapsed().as_secs_f64();
        timing.workers = cfg.workers;
        SuiteReport { schema: SCHEMA, version: VERSION, config: cfg.clone(), checks: self.checks, data: self.data, overall, timing }
    }
}

fn rat_value(x: &BigRat) -> String {
    crate::arith::rat_to_string(x)
}

/// Runs the suite for `cfg.command` inside a pool of `cfg.workers` threads.
pub fn run(cfg: &RunConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let start = Instant::now();
    conjecture::with_pool(cfg.workers, || {
        let mut rn = Runner::new();
        match cfg.command {
            Command::VerifyConjecture => verify_conjecture(cfg, &mut rn)?,
            Command::DegreeBounds => degree_bounds(cfg, &mut rn)?,
            Command::Estimates => estimates(cfg, &mut rn)?,
            Command::Circle => circle_suite(cfg, &mut rn)?,
            Command::All => {
                verify_conjecture(cfg, &mut rn)?;
                degree_bounds(cfg, &mut rn)?;
                estimates(cfg, &mut rn)?;
                circle_suite(cfg, &mut rn)?;
            }
        }
        Ok(rn.finish(cfg, start))
    })
}

fn verify_conjecture(cfg: &RunConfig, rn: &mut Runner) -> Result<()> {
    let opts = cfg.options();
    let rs = cfg.rs(&[9, 12, 20]);
    let mut reports = Vec::new();
    let mut ratios: BTreeMap<String, Vec<RatioRow>> = BTreeMap::new();
    for n in cfg.ns((2, 5)) {
        for &r in &rs {
            let id = format!("ca.n{n}.r{r}");
            let exact = match cfg.mode {
                ModeChoice::Auto => n <= EXACT_CUTOFF,
                ModeChoice::Exact => true,
                ModeChoice::Certified => false,
            };
            let rep: Option<ConjectureReport> = rn.run(&id, "Problem 4.2", || {
                if exact { conjecture::compute_ca_exact(n, r, &opts) } else { conjecture::compute_ca_certified(n, r, cfg.trunc, &opts) }
            })?;
            let Some(rep) = rep else { continue };
            let name = match rep.mode {
                Mode::Exact => format!("CA >= 1, exact, n={n}, r={r}"),
                _ => format!("CA >= 1, certified lower bound at T={}, n={n}, r={r}", cfg.trunc),
            };
            let ok = rep.holds() && !matches!(rep.mode, Mode::Inconclusive { .. });
            let witness = (!ok).then(|| format!("margin {}", rat_value(&rep.margin)));
            rn.push(id, "Problem 4.2", name, status(ok), witness, Some(format!("{:.15}", rep.ca_decimal)));
            rn.timing.cache_hits += rep.cache_hit as usize;
            if rep.mode == Mode::Exact {
                ratios.entry(format!("r{r}")).or_default().push(RatioRow {
                    n,
                    r,
                    ca_decimal: rep.ca_decimal,
                    log_ca_per_n: ln_rat(&rep.ca) / n as f64,
                    ca: rep.ca.clone(),
                });
                if n == 2 {
                    let rr = BigRat::from_integer(r.into());
                    let closed = BigRat::from_integer(1.into()) + rat(2, 3) / &rr + rat(1, 3) / (&rr * &rr);
                    rn.push(
                        format!("ca.closed_form.r{r}"),
                        "Problem 4.2",
                        format!("n=2 equals 1 + 2/(3r) + 1/(3r^2), r={r}"),
                        status(closed == rep.ca),
                        None,
                        Some(rat_value(&rep.ca)),
                    );
                }
            }
            reports.push(serde_json::to_value(&rep)?);
        }
    }
    for n in [2usize, 3] {
        let id = format!("dominance.n{n}");
        if let Some(d) = rn.run(&id, "Lemma 2.1", || conjecture::verify_central_dominance(n))? {
            rn.push(
                id,
                "Lemma 2.1",
                format!("non-central multinomials are below the central one, n={n}"),
                status(d.holds),
                None,
                Some(format!("{} compositions, central {}, next {}", d.compositions, d.central, d.largest_other)),
            );
        }
        rn.check_finding(&format!("quotients.n{n}"), "Lemma 5.1", || conjecture::quotient_range_check(n))?;
    }
    rn.data.insert("conjecture".into(), Value::Array(reports));
    rn.data.insert("ratio_table".into(), serde_json::to_value(ratios)?);
    Ok(())
}

fn random_positive_vector(rng: &mut StdRng) -> Vec<BigRat> {
    let len = rng.gen_range(1..=10);
    (0..len).map(|_| rat(rng.gen_range(1..=1000), rng.gen_range(1..=1000))).collect()
}

fn degree_bounds(cfg: &RunConfig, rn: &mut Runner) -> Result<()> {
    let rs = cfg.rs(&(9..=20).collect::<Vec<_>>());
    let (n_lo, n_hi) = match cfg.command {
        Command::DegreeBounds => cfg.n_range.unwrap_or((20, 100)),
        _ => (20, 100),
    };
    let scan_max = n_hi.max(100);
    let mut table = Vec::new();
    for &r in &rs {
        let id = format!("gate_refined.r{r}");
        if let Some(g) = rn.run(&id, "Theorem 1.3", || bounds::refined_gate(r, scan_max))? {
            let bad = g.points.iter().find(|p| p.n >= n_lo && p.n <= n_hi && !p.holds);
            rn.push(
                id.clone(),
                "Theorem 1.3",
                format!("2^(5n) >= refined degree bound for n={n_lo}..{n_hi}, r={r}"),
                status(bad.is_none()),
                bad.map(|p| format!("n={} factor {:.6}", p.n, p.factor)),
                g.factor_at(n_lo).map(|f| format!("factor at n={n_lo}: {f:.6e}")),
            );
            let below: Vec<usize> = (10..20).filter(|&n| g.factor_at(n).is_some_and(|f| f > 1.0)).collect();
            rn.info(
                &format!("{id}.threshold"),
                "Theorem 1.3",
                format!("least n from which 2^(5n) >= refined bound, r={r}"),
                format!("n_min={:?}, fails on [10,20) at {below:?}", g.n_min),
            );
            table.push(json!({ "r": r, "n_min": g.n_min, "holds_from_10": g.holds_from(10), "holds_from_20": g.holds_from(20) }));
        }
        let id = format!("gate_reduced.r{r}");
        if let Some(g) = rn.run(&id, "Theorem 1.4", || bounds::reduced_gate(r, scan_max))? {
            rn.info(&id, "Theorem 1.4", format!("least n from which 4^(5n) >= refined bound at 2n, r={r}"), format!("n_min={:?}", g.n_min));
        }
    }
    rn.data.insert("gate_table".into(), Value::Array(table));

    rn.claim("mu.closed_form", "Section 3", "mu closed form equals the direct sum, n<=30, r<=20", || {
        for n in 1..=30 {
            for r in 2..=20 {
                if !bounds::mu_check(n, r)? {
                    return Ok((false, format!("n={n} r={r}")));
                }
            }
        }
        Ok((true, "570 pairs".into()))
    })?;
    rn.claim("exp_bound", "Section 3", "exp(2/(r-1)) <= 1 + 3/r, r=9..20", || {
        let bad: Vec<u64> = (9..=20).filter(|&r| !bounds::exp_bound_holds(r)).collect();
        Ok((bad.is_empty(), format!("failures {bad:?}")))
    })?;
    rn.claim("weight_gap", "Lemma 3.2", "weight gap holds for r=6..20, l=2..12", || {
        let bad: Vec<(u64, usize)> =
            (6..=20).flat_map(|r| (2..=12).map(move |l| (r, l))).filter(|&(r, l)| !bounds::weight_gap_holds(r, l)).collect();
        Ok((bad.is_empty(), format!("failures {bad:?}")))
    })?;
    rn.claim("sigma_chain", "Assertion 3.5", "Maclaurin and sigma-root chains on 1000 random positive vectors", || {
        let mut rng = StdRng::seed_from_u64(35);
        for j in 0..1000 {
            let v = random_positive_vector(&mut rng);
            if !bounds::maclaurin_check(&v)? || !bounds::sigma_root_chain_check(&v)? {
                return Ok((false, format!("vector {j}")));
            }
        }
        Ok((true, "1000 vectors".into()))
    })?;
    rn.claim("kappa", "Section 3", "1 < kappa_n < 2 and increasing, n=2..30", || {
        let mut prev = 1.0;
        for n in 2..=30 {
            let k = bounds::kappa_n(n, 1e-12)?;
            if !(k > prev && k < 2.0) {
                return Ok((false, format!("n={n} kappa={k}")));
            }
            prev = k;
        }
        Ok((true, format!("kappa_30 = {prev:.12}")))
    })?;
    rn.claim("fujiwara", "Theorem 3.3", "Fujiwara bound contains all roots of 100 random polynomials", || {
        let mut rng = StdRng::seed_from_u64(33);
        let mut worst = 0.0f64;
        for j in 0..100 {
            let deg = rng.gen_range(1..=10);
            let mut cs: Vec<Complex64> =
                (0..=deg).map(|_| Complex64::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0))).collect();
            if cs[0].norm() < 0.1 {
                cs[0] = Complex64::new(1.0, 0.0);
            }
            let bound = bounds::fujiwara_bound(&cs)?;
            for z in bounds::polynomial_roots(&cs)? {
                worst = worst.max(z.norm() / bound);
                if z.norm() > bound + 1e-9 {
                    return Ok((false, format!("polynomial {j}: |root| {} > {bound}", z.norm())));
                }
            }
        }
        Ok((true, format!("max |root|/bound {worst:.6}")))
    })?;
    for n in [2usize, 3, 5, 8] {
        for r in [9u64, 20] {
            let id = format!("inverse_weights.n{n}.r{r}");
            if let Some(rep) = rn.run(&id, "Section 3", || bounds::c_hat_inverse_weights(n, r))? {
                for (j, f) in rep.findings.into_iter().enumerate() {
                    rn.finding(&format!("{id}.{j}"), "Section 3", f);
                }
            }
        }
    }
    rn.claim("degree_chain", "Proposition 3.1", "refined bound <= 25n^2 (r+3)^n and matches its chain, n=2..12, r=9..20", || {
        for n in 2..=12 {
            for r in 9..=20 {
                let d = bounds::degree_bound(n, r)?;
                if d.refined > BigRat::from_integer(d.coarse.clone()) || bounds::degree_bound_chain(n, r) != d.refined {
                    return Ok((false, format!("n={n} r={r}")));
                }
            }
        }
        Ok((true, "132 pairs".into()))
    })?;

    for (label, anchor, search) in
        [("n_gg", "Theorem 1.1", bounds::find_n_gg as fn(usize) -> Result<bounds::GateSearch>), ("n_k", "Theorem 1.2", bounds::find_n_k)]
    {
        if let Some(s) = rn.run(label, anchor, || search(1000))? {
            let bad = s.window.iter().find(|b| !(b.gate_factor < 1.0 && b.holds));
            rn.push(
                label.into(),
                anchor,
                format!("{}: gate factor < 1 and final inequality on [N, 2N]", s.label),
                status(bad.is_none()),
                bad.map(|b| format!("n={}", b.n)),
                Some(format!("N={}", s.n_min)),
            );
            rn.info(&format!("{label}.gate_only"), anchor, "least N with the gate factor alone below 1 on [N, 2N]", format!("N={}", s.gate_only_n_min));
            rn.data.insert(label.into(), json!({ "n_min": s.n_min, "gate_only_n_min": s.gate_only_n_min }));
        }
    }
    Ok(())
}

fn estimates(cfg: &RunConfig, rn: &mut Runner) -> Result<()> {
    let opts = cfg.options();
    for n in 2..=5usize {
        rn.claim(&format!("a_tables.n{n}"), "Proposition 4.1", format!("A from the staircase equals A from i-indices, n={n}"), || {
            Ok((genfun::build_a(n, 9)? == genfun::build_a_from_i_indices(n, 9)?, "r=9".into()))
        })?;
    }
    for n in 2..=4usize {
        rn.claim(&format!("groupings.n{n}"), "Section 4", format!("two groupings of C agree to total degree 8, n={n}"), || {
            let bx = TruncationBox::uniform(n - 1, 8, Some(8))?;
            let c = genfun::build_c(n, &bx)?;
            Ok((c == genfun::build_c_alternative(n, &bx)?, format!("{} coefficients", c.len())))
        })?;
    }
    rn.claim("coordinates", "Section 4", "C(t) = C(w(t)) within 1e-12 at 100 random points, n=2..6", || {
        let mut rng = StdRng::seed_from_u64(4);
        let mut worst = 0.0f64;
        for n in 2..=6usize {
            for _ in 0..100 {
                let mut t = vec![1.0f64; n];
                for i in (0..n - 1).rev() {
                    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                    t[i] = t[i + 1] * sign * rng.gen_range(0.02..0.3);
                }
                let a = genfun::eval_c_t(&t)?;
                let b = genfun::eval_c_w(n, &genfun::w_from_t(&t))?;
                worst = worst.max((a - b).abs());
            }
        }
        Ok((worst < 1e-12, format!("max difference {worst:e}")))
    })?;
    for n in 2..=5usize {
        rn.claim(&format!("majorant.n{n}"), "Section 6", format!("|C_k| <= C-hat_k to total degree 8, n={n}"), || {
            let bx = TruncationBox::uniform(n - 1, 8, Some(8))?;
            let c = genfun::build_c(n, &bx)?;
            let ch = genfun::build_c_hat(n, &bx)?;
            for k in bx.indices() {
                let (a, b) = (c.coefficient(&k)?, ch.coefficient(&k)?);
                if b.is_negative() || a.magnitude() > b.magnitude() {
                    return Ok((false, format!("k={k:?}")));
                }
            }
            Ok((true, format!("{} indices", bx.indices().len())))
        })?;
    }
    rn.claim("majorant.diagonal", "Section 6", "diagonal C-hat_h >= |C_h| for h <= 20, n=2..12", || {
        for n in 2..=12 {
            let c = genfun::diagonal_c_formula(n, 20);
            let ch = genfun::diagonal_c_hat_formula(n, 20);
            for h in 0..=20 {
                if ch.coeff(h).is_negative() || c.coeff(h).magnitude() > ch.coeff(h).magnitude() {
                    return Ok((false, format!("n={n} h={h}")));
                }
            }
        }
        Ok((true, "231 coefficients".into()))
    })?;
    for n in [4usize, 9, 16, 25] {
        rn.check_finding(&format!("squares.n{n}"), "Lemma 7.1", || bounds::square_growth_check(n))?;
    }
    rn.claim("poles", "Lemma 8.1", "smallest pole moduli are 1/2 and sqrt2 - 1 within 1e-9, n=3..10", || {
        let target = 2f64.sqrt() - 1.0;
        for n in 3..=10 {
            let p = bounds::pole_radii(n)?;
            if (p.r - 0.5).abs() >= 1e-9 || (p.r_hat - target).abs() >= 1e-9 {
                return Ok((false, format!("n={n} R={} R-hat={}", p.r, p.r_hat)));
            }
        }
        Ok((true, format!("R=0.5, R-hat={target:.12}")))
    })?;
    for n in 2..=8usize {
        for (p, q) in [(1, 10), (1, 4), (2, 5)] {
            rn.check_finding(&format!("cauchy.n{n}.rho{p}_{q}"), "Observation 8.2", || bounds::cauchy_bound_check(n, &rat(p, q), 20))?;
        }
    }
    rn.claim("cauchy.instantiation", "Section 10", "C-hat(1/sqrt n) <= e^12 e^sqrt(n), n=16..100", || {
        for n in 16..=100 {
            let f = bounds::cauchy_instantiation(n, cfg.precision)?;
            if !f.passed {
                return Ok((false, format!("n={n} {}", f.value.unwrap_or_default())));
            }
        }
        Ok((true, "85 values".into()))
    })?;
    const ANCHORS: [&str; 4] = ["Lemma 9.1", "Lemma 9.2", "Lemma 9.2", "Lemma 9.3"];
    for n in [50usize, 100, 200] {
        let id = format!("estimates.n{n}");
        if let Some(rep) = rn.run(&id, "Lemma 9.1", || bounds::evaluation_estimates(n, 10, cfg.precision))? {
            for (j, f) in rep.findings.into_iter().enumerate() {
                rn.finding(&format!("{id}.{j}"), ANCHORS[j.min(3)], f);
            }
        }
    }
    for n in [5usize, 10, 37, 60] {
        let id = format!("minoration.n{n}");
        if let Some(rep) = rn.run(&id, "Lemma 5.3", || conjecture::minoration_suite(n, n, 2 * n))? {
            for (j, f) in rep.findings.into_iter().enumerate() {
                rn.finding(&format!("{id}.{j}"), "Lemma 5.3", f);
            }
        }
    }
    let c = 2.0;
    if let Some(d) = rn.run("cmr", "Section 10", || conjecture::cmr_decomposition(4, 9, c, &opts))? {
        rn.push("cmr.identities".into(), "Section 10", "CMR = CMR_T + CMR_R and CR splits, n=4, r=9, c=2".into(), status(d.identities_hold()), None, Some(rat_value(&d.cmr)));
        rn.push("cmr.majorant".into(), "Section 10", "|CMR_R| <= C-hat tail, n=4, r=9".into(), status(d.majorant_inequality_holds()), None, None);
        rn.push(
            "cmr.minoration".into(),
            "Proposition 5.4",
            "truncated quotients >= e^(-4/c^2)".into(),
            status(d.derived_minoration_holds()),
            None,
            Some(rat_value(&d.min_m_truncated)),
        );
        rn.info(
            "cmr.minoration_stated",
            "Proposition 5.4",
            "truncated quotients >= e^(-2/c^2)",
            format!("{} at c={c}", d.stated_minoration_holds()),
        );
    }
    let a = 3.0f64;
    if let Some(rep) = rn.run("tail", "Lemma 10.1", || conjecture::staircase_tail_check(4, a, a.ln(), &opts))? {
        rn.push(
            "tail".into(),
            "Lemma 10.1",
            format!("|CMR_R| <= staircase C-hat tail <= full C-hat tail, n=4, r={}", rep.r),
            status(rep.first_holds),
            None,
            Some(rat_value(&rep.full_majorant)),
        );
        rn.info("tail.asymptotic", "Lemma 10.1", "full tail <= 2 e^12 / a", format!("{} ({:.6e})", rep.asymptotic_holds, rep.asymptotic_bound));
    }
    Ok(())
}

const FIGURE_INDICES: [usize; 3] = [2, 5, 10];

fn circle_suite(cfg: &RunConfig, rn: &mut Runner) -> Result<()> {
    let rho = cfg.rho;
    let samples = cfg.samples;
    for func in [CircleFn::G, CircleFn::H] {
        for k in [1usize, 2, 5, 10] {
            let id = format!("max_modulus.{func}{k}");
            if let Some(m) = rn.run(&id, "Proposition 11.1", || circle::max_modulus_on_circle(func, k, rho, samples))? {
                rn.push(
                    id,
                    "Proposition 11.1",
                    format!("max of |{func}_{k}| on |z|={rho} is attained at z={rho}"),
                    status(m.passed),
                    (!m.passed).then(|| format!("theta={} ratio={}", m.argmax, m.max_ratio)),
                    Some(format!("max ratio {:.15}", m.max_ratio)),
                );
            }
        }
    }
    let sweep_samples = (samples / 10).max(1001);
    rn.claim("max_modulus.sweep", "Proposition 11.1", "maximum at the real point for rho in {0.05, 0.1, 0.2, 0.25}", || {
        for r in [0.05, 0.1, 0.2, 0.25] {
            for func in [CircleFn::G, CircleFn::H] {
                for k in [1usize, 2, 5, 10] {
                    if !circle::max_modulus_on_circle(func, k, r, sweep_samples)?.passed {
                        return Ok((false, format!("{func}_{k} at rho={r}")));
                    }
                }
            }
        }
        Ok((true, format!("{sweep_samples} samples each")))
    })?;
    let grid = samples.min(20_001);
    for k in 1..=10usize {
        rn.check_finding(&format!("g_identity.k{k}"), "Section 11", || circle::g_identity_check(k, rho, grid))?;
        rn.check_finding(&format!("f_identity.l{k}"), "Section 11", || circle::f_identity_check(k, rho, grid))?;
    }
    rn.check_findings("constants", "Section 11", || Ok(circle::certificate_constants()))?;
    let deriv_samples = (samples / 10).max(100);
    for l in 1..=20usize {
        let id = format!("derivative.l{l}");
        if let Some(rep) = rn.run(&id, "Lemma 11.2", || circle::derivative_positivity(l, rho, deriv_samples))? {
            for (j, f) in rep.findings.into_iter().enumerate() {
                rn.finding(&format!("{id}.{j}"), "Lemma 11.2", f);
            }
        }
    }
    let interval_samples = (samples / 10).max(1000);
    rn.check_findings("intervals", "Lemmas 11.3-11.6", || circle::interval_positivity_suite(rho, 20, interval_samples))?;
    rn.check_findings("sine_pairs", "Assertion 11.7", || circle::sine_pair_check(3..=20, rho, samples))?;
    rn.check_findings("sine_bounds", "Lemma 11.8", || Ok(circle::sine_bounds(samples | 1)))?;

    let mut plots = Vec::new();
    if let Some(dir) = &cfg.plot_dir {
        std::fs::create_dir_all(dir)?;
        for func in [CircleFn::G, CircleFn::H] {
            for k in FIGURE_INDICES {
                let name = format!("{func}_{k}.csv");
                let s = circle::scan(func, k, rho, samples | 1)?;
                circle::emit_plot_csv(&s, &dir.join(&name))?;
                plots.push(json!({ "file": name, "rows": s.values.len(), "max": s.max_value, "min": s.min_value }));
            }
        }
    }
    rn.data.insert("plots".into(), Value::Array(plots));
    Ok(())
}
