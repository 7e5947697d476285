//! Stochastic click simulation and the coherent-null hypothesis test.
//!
//! A detector repeatedly reset over `N` steps of duration `Δt` registers `j`
//! clicks per observation window. Coherent fields give the binomial law
//! `p(j,N) = C(N,j)(ε|α|²)ʲ(1−ε|α|²)^{N−j}` with `ε = γ₀Δt`, which becomes
//! Poisson in the continuum limit; a general field gives the Poisson mixture
//! over its P function, evaluated here by exact number-basis mixing
//! (per-quantum detection probability `γ₀T`).
//!
//! Sampling is reproducible: one master seed, one counter-derived stream per
//! window, so results are identical regardless of evaluation order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::detector::poisson_pmf;
use crate::error::{Error, Result};
use crate::states::FieldState;

/// Accounted-mass target for truncated count-law tables.
const LAW_TAIL: f64 = 1e-12;

/// A repeated click-counting experiment: `windows` independent repetitions,
/// each integrating `steps` detector resets of duration `dt`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClickExperiment {
    pub state: FieldState,
    pub gamma0: f64,
    pub dt: f64,
    pub steps: u64,
    pub windows: usize,
    pub seed: u64,
}

impl ClickExperiment {
    pub fn new(
        state: FieldState,
        gamma0: f64,
        dt: f64,
        steps: u64,
        windows: usize,
        seed: u64,
    ) -> Result<Self> {
        state.validate()?;
        if !gamma0.is_finite() || gamma0 < 0.0 {
            return Err(Error::invalid(
                "gamma0",
                format!("must be >= 0, got {gamma0}"),
            ));
        }
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::invalid("dt", format!("must be >= 0, got {dt}")));
        }
        let epsilon = gamma0 * dt;
        if epsilon > 1.0 {
            return Err(Error::invalid(
                "dt",
                format!("per-step click probability γ₀Δt = {epsilon} exceeds 1"),
            ));
        }
        if steps == 0 {
            return Err(Error::invalid("steps", "need at least one step"));
        }
        if windows == 0 {
            return Err(Error::invalid("windows", "need at least one window"));
        }
        Ok(ClickExperiment {
            state,
            gamma0,
            dt,
            steps,
            windows,
            seed,
        })
    }

    /// Total integration time `T = N Δt`.
    pub fn total_time(&self) -> f64 {
        self.steps as f64 * self.dt
    }
}

/// `p(j, N) = C(N,j) (ε|α|²)ʲ (1 − ε|α|²)^{N−j}` for a coherent field of
/// intensity `|α|²` and per-step probability `ε|α|²`.
pub fn pjn_binomial(intensity: f64, epsilon: f64, j: u64, n: u64) -> Result<f64> {
    if !intensity.is_finite() || intensity < 0.0 {
        return Err(Error::invalid(
            "intensity",
            format!("must be >= 0, got {intensity}"),
        ));
    }
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::invalid(
            "epsilon",
            format!("must be >= 0, got {epsilon}"),
        ));
    }
    let p = epsilon * intensity;
    if p > 1.0 {
        return Err(Error::ModelBreakdown(format!(
            "per-step click probability ε|α|² = {p} exceeds 1"
        )));
    }
    Ok(binomial_pmf(n, p, j))
}

pub(crate) fn binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    if p <= 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p >= 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let ln_choose =
        ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0);
    (ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

/// Count law `P(j, T)` in the continuum limit: the Poisson mixture over the
/// P function. Coherent fields give Poisson with mean `γ₀T|α|²`, thermal
/// fields `(γ₀T n_th)ʲ/(1 + γ₀T n_th)^{j+1}`, and every other state is mixed
/// exactly over its occupation probabilities with per-quantum detection
/// probability `γ₀T` (which must not exceed one).
pub fn pjt_poisson_mixture(state: &FieldState, gamma0: f64, t: f64, j: u64) -> Result<f64> {
    if !gamma0.is_finite() || gamma0 < 0.0 {
        return Err(Error::invalid(
            "gamma0",
            format!("must be >= 0, got {gamma0}"),
        ));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    let lambda = gamma0 * t;
    match state {
        FieldState::Coherent { alpha } => Ok(poisson_pmf_robust(lambda * alpha.norm_sqr(), j)),
        FieldState::Thermal { n_th } => Ok(bose_einstein_pmf(lambda * n_th, j)),
        _ => {
            if lambda > 1.0 {
                return Err(Error::ModelBreakdown(format!(
                    "per-quantum detection probability γ₀T = {lambda} exceeds 1 \
                     for number-basis mixing"
                )));
            }
            let (diag, _) = state.converged_diagonal(LAW_TAIL)?;
            Ok(diag
                .iter()
                .enumerate()
                .map(|(n, &p)| p * binomial_pmf(n as u64, lambda, j))
                .sum())
        }
    }
}

fn poisson_pmf_robust(mu: f64, j: u64) -> f64 {
    if mu == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    if j < 64 {
        poisson_pmf(mu, j as usize)
    } else {
        (-mu + j as f64 * mu.ln() - ln_gamma(j as f64 + 1.0)).exp()
    }
}

fn bose_einstein_pmf(x: f64, j: u64) -> f64 {
    if x == 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let mut p = 1.0 / (1.0 + x);
    for _ in 0..j {
        p *= x / (1.0 + x);
    }
    p
}

/// Truncated per-window count law used for sampling and bootstrap: table of
/// `P(j)` accounting for all mass up to [`LAW_TAIL`].
fn count_law(exp: &ClickExperiment) -> Result<Vec<f64>> {
    const MAX_J: usize = 1 << 20;
    if let FieldState::Coherent { alpha } = &exp.state {
        // finite-step binomial chain for coherent fields
        let p = exp.gamma0 * exp.dt * alpha.norm_sqr();
        if p > 1.0 {
            return Err(Error::ModelBreakdown(format!(
                "per-step click probability ε|α|² = {p} exceeds 1"
            )));
        }
        let n = exp.steps;
        let mut table = Vec::new();
        let mut mass = 0.0;
        let mut j = 0u64;
        let mut pj = binomial_pmf(n, p, 0);
        loop {
            table.push(pj);
            mass += pj;
            if 1.0 - mass < LAW_TAIL || j >= n || table.len() >= MAX_J {
                break;
            }
            // recurrence b_{j+1} = b_j (N−j)/(j+1) · p/(1−p)
            pj = if p >= 1.0 {
                binomial_pmf(n, p, j + 1)
            } else {
                pj * ((n - j) as f64 / (j + 1) as f64) * (p / (1.0 - p))
            };
            j += 1;
        }
        return Ok(table);
    }
    let t = exp.total_time();
    let mut table = Vec::new();
    let mut mass = 0.0;
    let mut j = 0u64;
    loop {
        let pj = pjt_poisson_mixture(&exp.state, exp.gamma0, t, j)?;
        table.push(pj);
        mass += pj;
        if 1.0 - mass < LAW_TAIL {
            break;
        }
        if table.len() >= MAX_J {
            return Err(Error::ModelBreakdown(
                "count law did not accumulate unit mass within the table bound".into(),
            ));
        }
        j += 1;
    }
    Ok(table)
}

/// Point estimate with a jackknife standard error (absent when a
/// leave-one-out replicate is undefined).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Option<f64>,
}

/// Empirical statistics of the sampled windows. Frequencies sum to one
/// exactly; `Q̂`, `R̂`, `R̂′` carry jackknife standard errors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EmpiricalStats {
    pub pn_hat: Vec<f64>,
    pub mean: f64,
    pub variance: f64,
    pub q: Option<Estimate>,
    pub q_reason: Option<String>,
    pub r: Option<Estimate>,
    pub r_reason: Option<String>,
    pub r_prime: Option<Estimate>,
    pub r_prime_reason: Option<String>,
}

/// Result of a sampling run: per-window counts plus empirical statistics.
/// Identical seeds give bit-identical records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountRecord {
    pub schema_version: u32,
    pub state: FieldState,
    pub gamma0: f64,
    pub dt: f64,
    pub steps: u64,
    pub seed: u64,
    pub counts: Vec<u64>,
    pub stats: EmpiricalStats,
}

impl CountRecord {
    /// Per-quantum detection probability over the full window, `γ₀ N Δt`.
    pub fn gamma0_t(&self) -> f64 {
        self.gamma0 * self.steps as f64 * self.dt
    }

    pub fn windows(&self) -> usize {
        self.counts.len()
    }

    /// CSV form: one row per window.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("window_index,count\n");
        for (w, j) in self.counts.iter().enumerate() {
            out.push_str(&format!("{w},{j}\n"));
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let record: CountRecord = serde_json::from_str(text)?;
        record.state.validate()?;
        Ok(record)
    }
}

/// Draws per-window counts from the experiment's count law. Window `w` uses
/// the ChaCha stream `w + 1` of the master seed, so the record is independent
/// of evaluation order and safe to parallelize.
pub fn sample_clicks(exp: &ClickExperiment) -> Result<CountRecord> {
    let law = count_law(exp)?;
    let mut cdf = law.clone();
    let mut acc = 0.0;
    for slot in cdf.iter_mut() {
        acc += *slot;
        *slot = acc;
    }
    let mut counts = Vec::with_capacity(exp.windows);
    for w in 0..exp.windows {
        let mut rng = ChaCha8Rng::seed_from_u64(exp.seed);
        rng.set_stream(w as u64 + 1);
        let u: f64 = rng.random();
        let j = cdf.partition_point(|&c| c <= u);
        counts.push(j.min(cdf.len() - 1) as u64);
    }
    let stats = empirical_stats(&counts);
    Ok(CountRecord {
        schema_version: 1,
        state: exp.state.clone(),
        gamma0: exp.gamma0,
        dt: exp.dt,
        steps: exp.steps,
        seed: exp.seed,
        counts,
        stats,
    })
}

fn histogram(counts: &[u64]) -> Vec<u64> {
    let max = counts.iter().copied().max().unwrap_or(0) as usize;
    let mut hist = vec![0u64; max + 1];
    for &j in counts {
        hist[j as usize] += 1;
    }
    hist
}

struct HistMoments {
    m: f64,
    mean: f64,
    variance: f64,
}

fn hist_moments(hist: &[u64], m: usize) -> HistMoments {
    let mf = m as f64;
    let sum: f64 = hist
        .iter()
        .enumerate()
        .map(|(j, &c)| j as f64 * c as f64)
        .sum();
    let sum_sq: f64 = hist
        .iter()
        .enumerate()
        .map(|(j, &c)| (j as f64) * (j as f64) * c as f64)
        .sum();
    let mean = sum / mf;
    let variance = if m > 1 {
        (sum_sq - mf * mean * mean) / (mf - 1.0)
    } else {
        0.0
    };
    HistMoments {
        m: mf,
        mean,
        variance,
    }
}

fn q_from_hist(hist: &[u64], m: usize) -> Option<f64> {
    let mom = hist_moments(hist, m);
    if mom.mean <= 0.0 || m < 2 {
        return None;
    }
    Some((mom.variance - mom.mean) / mom.mean)
}

fn freq(hist: &[u64], m: usize, j: usize) -> f64 {
    hist.get(j).map(|&c| c as f64).unwrap_or(0.0) / m as f64
}

fn r_from_hist(hist: &[u64], m: usize) -> Option<f64> {
    let p1 = freq(hist, m, 1);
    if p1 == 0.0 {
        return None;
    }
    Some(2.0 * freq(hist, m, 2) * freq(hist, m, 0) / (p1 * p1))
}

fn r_prime_from_hist(hist: &[u64], m: usize) -> Option<f64> {
    let p2 = freq(hist, m, 2);
    if p2 == 0.0 {
        return None;
    }
    Some(3.0 * freq(hist, m, 3) * freq(hist, m, 1) / (2.0 * p2 * p2))
}

/// Grouped leave-one-out jackknife: replicates depend only on the removed
/// observation's bin, so each occupied bin is processed once.
fn jackknife_se(
    hist: &[u64],
    m: usize,
    full: f64,
    estimator: &dyn Fn(&[u64], usize) -> Option<f64>,
) -> Option<f64> {
    if m < 2 {
        return None;
    }
    let mut work = hist.to_vec();
    let mut sum = 0.0;
    let mut sum_sq_dev = 0.0;
    for j in 0..hist.len() {
        if hist[j] == 0 {
            continue;
        }
        work[j] -= 1;
        let theta = estimator(&work, m - 1)?;
        work[j] = hist[j];
        let c = hist[j] as f64;
        sum += c * theta;
        let dev = theta - full;
        sum_sq_dev += c * dev * dev;
    }
    let mf = m as f64;
    let mean_dev = sum / mf - full;
    let var = (mf - 1.0) / mf * (sum_sq_dev - mf * mean_dev * mean_dev);
    Some(var.max(0.0).sqrt())
}

fn empirical_stats(counts: &[u64]) -> EmpiricalStats {
    let m = counts.len();
    let hist = histogram(counts);
    let mom = hist_moments(&hist, m);
    let pn_hat: Vec<f64> = hist.iter().map(|&c| c as f64 / mom.m).collect();

    let wrap =
        |estimate: Option<f64>, estimator: &dyn Fn(&[u64], usize) -> Option<f64>, reason: &str| {
            match estimate {
                Some(value) => (
                    Some(Estimate {
                        value,
                        std_error: jackknife_se(&hist, m, value, estimator),
                    }),
                    None,
                ),
                None => (None, Some(reason.to_string())),
            }
        };

    let (q, q_reason) = wrap(q_from_hist(&hist, m), &q_from_hist, "no clicks observed");
    let (r, r_reason) = wrap(r_from_hist(&hist, m), &r_from_hist, "empirical P1 = 0");
    let (r_prime, r_prime_reason) = wrap(
        r_prime_from_hist(&hist, m),
        &r_prime_from_hist,
        "empirical P2 = 0",
    );

    EmpiricalStats {
        pn_hat,
        mean: mom.mean,
        variance: mom.variance,
        q,
        q_reason,
        r,
        r_reason,
        r_prime,
        r_prime_reason,
    }
}

/// Alternative count-law families for the likelihood-ratio test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// Thermal mixture: geometric counts.
    Thermal,
    /// Squeezed vacuum thinned with per-quantum probability `γ₀T`.
    Squeezed,
}

impl std::str::FromStr for Alternative {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "thermal" => Ok(Alternative::Thermal),
            "squeezed" => Ok(Alternative::Squeezed),
            other => Err(Error::invalid(
                "alternative",
                format!("unknown alternative `{other}`"),
            )),
        }
    }
}

impl std::fmt::Display for Alternative {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Alternative::Thermal => f.write_str("thermal"),
            Alternative::Squeezed => f.write_str("squeezed"),
        }
    }
}

/// Options for [`test_coherent_null`]: alternatives to test against, the
/// number of parametric-bootstrap resamples, the level, and the bootstrap
/// seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestOptions {
    pub alternatives: Vec<Alternative>,
    pub resamples: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for TestOptions {
    fn default() -> Self {
        TestOptions {
            alternatives: vec![Alternative::Thermal, Alternative::Squeezed],
            resamples: 999,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlternativeFit {
    pub alternative: Alternative,
    /// Fitted family parameter (`n_th` scale for thermal, `r` for squeezed).
    pub parameter: f64,
    /// `2 (ℓ_alt − ℓ_null)`.
    pub lrt: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    RejectNull,
    RetainNull,
    Inconclusive,
}

/// Report of the coherent-null test: the Poisson fit, per-alternative
/// likelihood-ratio statistics, the bootstrap p-value of the combined
/// statistic, and the variance/mean dispersion diagnostic with a two-sided
/// bootstrap p-value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TestReport {
    pub schema_version: u32,
    pub windows: usize,
    pub lambda_hat: f64,
    pub fits: Vec<AlternativeFit>,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub dispersion: Option<f64>,
    pub dispersion_p_value: Option<f64>,
    pub alpha: f64,
    pub resamples: usize,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

fn ln_poisson(lambda: f64, j: usize) -> f64 {
    if lambda <= 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    -lambda + j as f64 * lambda.ln() - ln_gamma(j as f64 + 1.0)
}

fn ln_bose_einstein(x: f64, j: usize) -> f64 {
    if x <= 0.0 {
        return if j == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    j as f64 * x.ln() - (j as f64 + 1.0) * (1.0 + x).ln()
}

/// Squeezed-vacuum occupation probabilities thinned with probability
/// `lambda`: `P(j) = Σ_m p_{2m}(r) C(2m,j) λʲ(1−λ)^{2m−j}`.
fn squeezed_count_pmf(r: f64, lambda: f64, j: usize) -> f64 {
    if r <= 0.0 {
        return if j == 0 { 1.0 } else { 0.0 };
    }
    let t2 = r.tanh() * r.tanh();
    let mut weight = 1.0 / r.cosh();
    let mut total = 0.0;
    let mut m = 0u64;
    loop {
        if 2 * m >= j as u64 {
            total += weight * binomial_pmf(2 * m, lambda, j as u64);
        }
        m += 1;
        weight *= t2 * (2.0 * m as f64 - 1.0) / (2.0 * m as f64);
        if weight < 1e-18 && 2 * m > j as u64 {
            break;
        }
        if m > 200_000 {
            break;
        }
    }
    total
}

fn log_likelihood(hist: &[u64], ln_pmf: &dyn Fn(usize) -> f64) -> f64 {
    hist.iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(j, &c)| c as f64 * ln_pmf(j).max(-1e300))
        .sum()
}

/// Fits the null and alternatives to a histogram and returns the combined
/// statistic (largest LRT over the usable alternatives).
fn fit_statistic(
    hist: &[u64],
    m: usize,
    gamma0_t: f64,
    alternatives: &[Alternative],
) -> (f64, Vec<AlternativeFit>) {
    let mom = hist_moments(hist, m);
    let lambda_hat = mom.mean;
    let ll_null = log_likelihood(hist, &|j| ln_poisson(lambda_hat, j));
    let mut fits = Vec::new();
    let mut stat = f64::NEG_INFINITY;
    for &alt in alternatives {
        let fit = match alt {
            Alternative::Thermal => {
                // geometric-family MLE is the sample mean
                let q = lambda_hat;
                let ll = log_likelihood(hist, &|j| ln_bose_einstein(q, j));
                AlternativeFit {
                    alternative: alt,
                    parameter: q,
                    lrt: 2.0 * (ll - ll_null),
                    note: None,
                }
            }
            Alternative::Squeezed => {
                if !(gamma0_t > 0.0 && gamma0_t <= 1.0) {
                    fits.push(AlternativeFit {
                        alternative: alt,
                        parameter: f64::NAN,
                        lrt: f64::NAN,
                        note: Some(format!(
                            "unavailable: number-basis mixing requires 0 < γ₀T <= 1, got {gamma0_t}"
                        )),
                    });
                    continue;
                }
                // moment matching: E j = γ₀T sinh²r
                let r = (lambda_hat / gamma0_t).sqrt().asinh();
                let ll = log_likelihood(hist, &|j| {
                    squeezed_count_pmf(r, gamma0_t, j).max(1e-300).ln()
                });
                AlternativeFit {
                    alternative: alt,
                    parameter: r,
                    lrt: 2.0 * (ll - ll_null),
                    note: None,
                }
            }
        };
        if fit.lrt.is_finite() {
            stat = stat.max(fit.lrt);
        }
        fits.push(fit);
    }
    (stat, fits)
}

/// Draws a multinomial histogram over the law table by sequential binomial
/// splitting; mass past the table goes to one overflow bin.
fn sample_histogram(law: &[f64], m: usize, rng: &mut ChaCha8Rng) -> Vec<u64> {
    let mut hist = vec![0u64; law.len() + 1];
    let mut remaining = m as u64;
    let mut rem_mass = 1.0;
    for (j, &pj) in law.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        let cond = if rem_mass > 0.0 {
            (pj / rem_mass).clamp(0.0, 1.0)
        } else {
            1.0
        };
        let draw = if cond >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, cond)
                .map(|d| d.sample(rng))
                .unwrap_or(0)
        };
        hist[j] = draw;
        remaining -= draw;
        rem_mass -= pj;
    }
    if remaining > 0 {
        let last = hist.len() - 1;
        hist[last] += remaining;
    }
    hist
}

fn dispersion_from_hist(hist: &[u64], m: usize) -> f64 {
    let mom = hist_moments(hist, m);
    if mom.mean <= 0.0 {
        f64::NAN
    } else {
        mom.variance / mom.mean
    }
}

/// Tests the hypothesis that the sampled counts come from a coherent field
/// (Poisson law, mean fitted by maximum likelihood) against the requested
/// alternative families.
///
/// The combined statistic is the largest likelihood-ratio statistic over the
/// alternatives; its p-value comes from a parametric bootstrap under the
/// fitted null. The variance/mean dispersion is reported as a secondary
/// statistic with a two-sided bootstrap p-value.
pub fn test_coherent_null(record: &CountRecord, opts: &TestOptions) -> Result<TestReport> {
    if opts.alternatives.is_empty() {
        return Err(Error::invalid(
            "alternatives",
            "need at least one alternative family",
        ));
    }
    if !(0.0..1.0).contains(&opts.alpha) || opts.alpha <= 0.0 {
        return Err(Error::invalid(
            "alpha",
            format!("must be in (0, 1), got {}", opts.alpha),
        ));
    }
    if opts.resamples == 0 {
        return Err(Error::invalid(
            "resamples",
            "need at least one bootstrap resample",
        ));
    }
    let m = record.counts.len();
    let inconclusive = |reason: &str, windows: usize| TestReport {
        schema_version: 1,
        windows,
        lambda_hat: f64::NAN,
        fits: Vec::new(),
        statistic: f64::NAN,
        p_value: None,
        dispersion: None,
        dispersion_p_value: None,
        alpha: opts.alpha,
        resamples: opts.resamples,
        verdict: Verdict::Inconclusive,
        notes: vec![reason.to_string()],
    };
    if m < 2 {
        return Ok(inconclusive(
            "need at least two windows to estimate dispersion",
            m,
        ));
    }
    if record.counts.iter().all(|&j| j == 0) {
        return Ok(inconclusive("no clicks observed in any window", m));
    }

    let hist = histogram(&record.counts);
    let gamma0_t = record.gamma0_t();
    let (statistic, fits) = fit_statistic(&hist, m, gamma0_t, &opts.alternatives);
    let mom = hist_moments(&hist, m);
    let lambda_hat = mom.mean;
    let dispersion = dispersion_from_hist(&hist, m);

    // null law table for the bootstrap, extended well past the data
    let mut law = Vec::new();
    let mut mass = 0.0;
    let mut j = 0usize;
    while 1.0 - mass >= 1e-15 && j < 100_000 {
        let pj = poisson_pmf_robust(lambda_hat, j as u64);
        law.push(pj);
        mass += pj;
        j += 1;
    }

    let mut exceed = 0usize;
    let mut disp_hi = 0usize;
    let mut disp_lo = 0usize;
    for b in 0..opts.resamples {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(b as u64 + 1);
        let boot = sample_histogram(&law, m, &mut rng);
        let (s, _) = fit_statistic(&boot, m, gamma0_t, &opts.alternatives);
        if s >= statistic {
            exceed += 1;
        }
        let d = dispersion_from_hist(&boot, m);
        if !d.is_finite() || d >= dispersion {
            disp_hi += 1;
        }
        if !d.is_finite() || d <= dispersion {
            disp_lo += 1;
        }
    }
    let denom = (opts.resamples + 1) as f64;
    let p_value = (1.0 + exceed as f64) / denom;
    let p_disp = (2.0 * (1.0 + disp_hi.min(disp_lo) as f64) / denom).min(1.0);
    let verdict = if p_value <= opts.alpha {
        Verdict::RejectNull
    } else {
        Verdict::RetainNull
    };

    Ok(TestReport {
        schema_version: 1,
        windows: m,
        lambda_hat,
        fits,
        statistic,
        p_value: Some(p_value),
        dispersion: Some(dispersion),
        dispersion_p_value: Some(p_disp),
        alpha: opts.alpha,
        resamples: opts.resamples,
        verdict,
        notes: Vec::new(),
    })
}
