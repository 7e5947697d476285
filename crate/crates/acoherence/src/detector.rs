//! Analytic routes to the detector excitation probabilities.
//!
//! Three closed-form routes complement the Fock-space oracle:
//!
//! * the order-κ⁶ perturbative series in the normally ordered moments,
//! * the exact P-representation route with `sin²(√(γ₀Δt))` detection
//!   strength and finite efficiency,
//! * the Gaussian Wigner-overlap route for `P₀` with `P₁`, `P₂` generated by
//!   exact differentiation in `γ₀Δt`.
//!
//! Non-normally-ordered operator strings in the series have been reduced once
//! with `[a, a†] = 1`; the reduction table is spelled out at
//! [`pn_perturbative`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock;
use crate::states::{falling_factorial, FieldState, GaussianPhaseSpace, PFunctionDescriptor};

/// Whether the detection strength uses the exact `sin²(√(γ₀Δt))` or the
/// textbook small-angle substitution `γ₀Δt`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    Exact,
    SmallAngle,
}

/// Field-detector coupling: rate `γ₀`, interaction window `Δt`, detector
/// efficiency `η`, and the derived dimensionless `κ = √(γ₀ Δt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorCoupling {
    gamma0: f64,
    dt: f64,
    eta: f64,
}

impl DetectorCoupling {
    pub fn new(gamma0: f64, dt: f64) -> Result<Self> {
        if !gamma0.is_finite() || gamma0 < 0.0 {
            return Err(Error::invalid(
                "gamma0",
                format!("must be >= 0, got {gamma0}"),
            ));
        }
        if !dt.is_finite() || dt < 0.0 {
            return Err(Error::invalid("dt", format!("must be >= 0, got {dt}")));
        }
        Ok(DetectorCoupling {
            gamma0,
            dt,
            eta: 1.0,
        })
    }

    /// Coupling specified directly through `κ`, with `γ₀ Δt = κ²`.
    pub fn from_kappa(kappa: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa < 0.0 {
            return Err(Error::invalid(
                "kappa",
                format!("must be >= 0, got {kappa}"),
            ));
        }
        Ok(DetectorCoupling {
            gamma0: kappa * kappa,
            dt: 1.0,
            eta: 1.0,
        })
    }

    pub fn with_efficiency(mut self, eta: f64) -> Result<Self> {
        if !eta.is_finite() || !(0.0..=1.0).contains(&eta) {
            return Err(Error::invalid(
                "eta",
                format!("must be in [0, 1], got {eta}"),
            ));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn kappa(&self) -> f64 {
        (self.gamma0 * self.dt).sqrt()
    }

    pub fn tau(&self) -> f64 {
        self.gamma0 * self.dt
    }

    /// Efficiency folded into the coupling: the observed-mode statistics at
    /// `(η, κ)` equal those at `(1, κ′)` with `sin²κ′ = η sin²κ`, because the
    /// measured mode sees the field through the combined transmissivity.
    pub fn effective_kappa(&self) -> f64 {
        if self.eta == 1.0 {
            self.kappa()
        } else {
            (self.eta.sqrt() * self.kappa().sin().abs()).asin()
        }
    }

    pub fn effective_tau(&self) -> f64 {
        let k = self.effective_kappa();
        k * k
    }

    /// `η sin²κ` (exact) or `η γ₀Δt` (small angle).
    pub fn detection_strength(&self, mode: AngleMode) -> f64 {
        match mode {
            AngleMode::Exact => self.eta * self.kappa().sin().powi(2),
            AngleMode::SmallAngle => self.eta * self.tau(),
        }
    }
}

/// Probability route identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Perturbative,
    PRepresentation,
    GaussianOverlap,
    Oracle,
    Bch,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Method::Perturbative => "perturbative",
            Method::PRepresentation => "p-representation",
            Method::GaussianOverlap => "gaussian-overlap",
            Method::Oracle => "oracle",
            Method::Bch => "bch",
        };
        f.write_str(name)
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perturbative" | "pert" => Ok(Method::Perturbative),
            "exact" | "p-representation" | "p_representation" => Ok(Method::PRepresentation),
            "gaussian" | "gaussian-overlap" | "gaussian_overlap" => Ok(Method::GaussianOverlap),
            "oracle" => Ok(Method::Oracle),
            "bch" => Ok(Method::Bch),
            other => Err(Error::invalid(
                "method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

/// Diagnostic attached to a distribution whose route was used outside its
/// comfortable regime. Values are reported, never clamped.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ValidityWarning {
    /// The series/BCH expansion parameter `κ²⟨n⟩` is no longer small.
    SeriesRegime { kappa_sq_nbar: f64 },
    /// A truncated series produced a negative probability.
    NegativeProbability { n: usize, value: f64 },
}

/// Detector excitation probabilities `P₀ .. P_nmax` with the route tag and
/// truncation metadata. Exact routes satisfy `Σ Pₙ + tail = 1`; for the
/// perturbative route `tail` records the signed `O(κ⁸)` normalization defect.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CountDistribution {
    probs: Vec<f64>,
    method: Method,
    tail: f64,
    warnings: Vec<ValidityWarning>,
}

impl CountDistribution {
    pub fn new(probs: Vec<f64>, method: Method, tail: f64) -> Self {
        CountDistribution {
            probs,
            method,
            tail,
            warnings: Vec::new(),
        }
    }

    pub fn with_warnings(mut self, warnings: Vec<ValidityWarning>) -> Self {
        self.warnings = warnings;
        self
    }

    /// `Pₙ`, zero beyond the stored range.
    pub fn prob(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn n_max(&self) -> usize {
        self.probs.len().saturating_sub(1)
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    pub fn warnings(&self) -> &[ValidityWarning] {
        &self.warnings
    }
}

fn moments_123(state: &FieldState) -> Result<(f64, f64, f64)> {
    Ok((
        state.analytic_moment(1)?,
        state.analytic_moment(2)?,
        state.analytic_moment(3)?,
    ))
}

/// Order-κ⁶ excitation probability for `n = 0..=3`.
///
/// With `nⱼ = ⟨a†ʲaʲ⟩`, the operator strings reduce under `[a, a†] = 1` as
/// `(a†a)² = n₂ + n₁`, `(a†a)³ = n₃ + 3n₂ + n₁`,
/// `a†a·a†²a² = a†²a²·a†a = n₃ + 2n₂` and `a†²a a†a² = n₃ + n₂`, giving
///
/// ```text
/// P₀ = 1 − κ²n₁ + κ⁴(n₁/3 + n₂/2) − κ⁶(2n₁/45 + n₂/3 + n₃/6)
/// P₁ =     κ²n₁ − κ⁴(n₁/3 + n₂)  + κ⁶(2n₁/45 + 2n₂/3 + n₃/2)
/// P₂ =             κ⁴ n₂/2       − κ⁶(n₂/3 + n₃/2)
/// P₃ =                             κ⁶ n₃/6
/// ```
///
/// The truncated series is returned exactly as written; outside its validity
/// regime it may go slightly negative, which is reported as a diagnostic by
/// [`perturbative_distribution`] and never clamped.
pub fn pn_perturbative(state: &FieldState, coupling: &DetectorCoupling, n: usize) -> Result<f64> {
    if n > 3 {
        return Err(Error::Unsupported(format!(
            "the perturbative series provides P0..P3, got n = {n}"
        )));
    }
    let kappa = coupling.effective_kappa();
    let k2 = kappa * kappa;
    let k4 = k2 * k2;
    let k6 = k4 * k2;
    let (n1, n2, n3) = moments_123(state)?;
    Ok(match n {
        0 => {
            1.0 - k2 * n1 + k4 * (n1 / 3.0 + n2 / 2.0)
                - k6 * (2.0 * n1 / 45.0 + n2 / 3.0 + n3 / 6.0)
        }
        1 => k2 * n1 - k4 * (n1 / 3.0 + n2) + k6 * (2.0 * n1 / 45.0 + 2.0 * n2 / 3.0 + n3 / 2.0),
        2 => k4 * n2 / 2.0 - k6 * (n2 / 3.0 + n3 / 2.0),
        _ => k6 * n3 / 6.0,
    })
}

/// `P₀..P₃` from the truncated series, with regime and negativity
/// diagnostics.
pub fn perturbative_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
) -> Result<CountDistribution> {
    let probs: Vec<f64> = (0..=3)
        .map(|n| pn_perturbative(state, coupling, n))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let expansion = coupling.effective_tau() * state.analytic_moment(1)?;
    if expansion > 0.1 {
        warnings.push(ValidityWarning::SeriesRegime {
            kappa_sq_nbar: expansion,
        });
    }
    for (n, &p) in probs.iter().enumerate() {
        if p < 0.0 {
            warnings.push(ValidityWarning::NegativeProbability { n, value: p });
        }
    }
    let tail = 1.0 - probs.iter().sum::<f64>();
    Ok(CountDistribution::new(probs, Method::Perturbative, tail).with_warnings(warnings))
}

/// Lowest nonvanishing series order for each excitation level:
/// `P₀ = 1`, `P₁ = κ²n₁`, `P₂ = κ⁴n₂/2`, `P₃ = κ⁶n₃/6`.
///
/// This is the form behind the closed-form Fock-state ratios
/// `R = 1 − 1/n` and `R′ = 1 − 1/(n−1)`; the full series at finite κ
/// shifts `R′` by a relative `κ²(n−2)`.
pub fn leading_order_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
) -> Result<CountDistribution> {
    let kappa = coupling.effective_kappa();
    let k2 = kappa * kappa;
    let (n1, n2, n3) = moments_123(state)?;
    let probs = vec![1.0, k2 * n1, k2 * k2 * n2 / 2.0, k2 * k2 * k2 * n3 / 6.0];
    let tail = 1.0 - probs.iter().sum::<f64>();
    Ok(CountDistribution::new(probs, Method::Perturbative, tail))
}

/// Exact P-representation probability with the stated angle mode.
///
/// Coherent states give Poisson counts with mean `|α|² s`; thermal states
/// give the geometric form `Pₙ = (s n_th)ⁿ/(1 + s n_th)^{n+1}`, where
/// `s = η sin²κ` (or `η γ₀Δt` in small-angle mode).
pub fn pn_exact_with_mode(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n: usize,
    mode: AngleMode,
) -> Result<f64> {
    let strength = coupling.detection_strength(mode);
    match state.p_function() {
        PFunctionDescriptor::Delta { alpha } => Ok(poisson_pmf(alpha.norm_sqr() * strength, n)),
        PFunctionDescriptor::GaussianP { n_th } => {
            let x = strength * n_th;
            let mut p = 1.0 / (1.0 + x);
            for _ in 0..n {
                p *= x / (1.0 + x);
            }
            Ok(p)
        }
        PFunctionDescriptor::Unavailable => Err(Error::NoPRepresentation(state.label())),
    }
}

/// Exact P-representation probability with `s = η sin²(√(γ₀Δt))`.
pub fn pn_exact(state: &FieldState, coupling: &DetectorCoupling, n: usize) -> Result<f64> {
    pn_exact_with_mode(state, coupling, n, AngleMode::Exact)
}

pub fn exact_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n_max: usize,
) -> Result<CountDistribution> {
    let probs: Vec<f64> = (0..=n_max)
        .map(|n| pn_exact(state, coupling, n))
        .collect::<Result<_>>()?;
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(CountDistribution::new(probs, Method::PRepresentation, tail))
}

pub(crate) fn poisson_pmf(mu: f64, n: usize) -> f64 {
    let mut p = (-mu).exp();
    for i in 1..=n {
        p *= mu / i as f64;
    }
    p
}

/// Excitation probability from the factored (BCH) measurement operators:
/// `Pₙ = (γ₀Δt)ⁿ/n! ⟨e^{−γ₀Δt a†a/2} a†ⁿaⁿ e^{−γ₀Δt a†a/2}⟩`, evaluated as a
/// diagonal sum in the truncated Fock space. Valid for `γ₀Δt ⟨n⟩ ≪ 1`.
pub fn pn_bch(state: &FieldState, coupling: &DetectorCoupling, n: usize) -> Result<f64> {
    let tau = coupling.effective_tau();
    let n_u32 = u32::try_from(n)
        .map_err(|_| Error::Unsupported(format!("excitation order {n} too large")))?;
    if n_u32 > 16 {
        return Err(Error::Unsupported(format!(
            "the BCH route is provided for n <= 16, got {n}"
        )));
    }
    let expect = fock::converged_diagonal_sum(
        state,
        &|k| (-tau * k as f64).exp() * falling_factorial(k as f64, n_u32),
        1e-11,
    )?;
    let mut prefactor = 1.0;
    for i in 1..=n {
        prefactor *= tau / i as f64;
    }
    Ok(prefactor * expect)
}

pub fn bch_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n_max: usize,
) -> Result<CountDistribution> {
    let probs: Vec<f64> = (0..=n_max)
        .map(|n| pn_bch(state, coupling, n))
        .collect::<Result<_>>()?;
    let mut warnings = Vec::new();
    let expansion = coupling.effective_tau() * state.analytic_moment(1)?;
    if expansion > 0.1 {
        warnings.push(ValidityWarning::SeriesRegime {
            kappa_sq_nbar: expansion,
        });
    }
    let tail = 1.0 - probs.iter().sum::<f64>();
    Ok(CountDistribution::new(probs, Method::Bch, tail).with_warnings(warnings))
}

/// Gaussian-overlap parts shared by `P₀` and its τ-derivatives: determinant
/// and quadratic form of `W = V + v′ I` at the displaced mean.
struct OverlapParts {
    det: f64,
    trace: f64,
    q: f64,
    q_v: f64,
    q_vv: f64,
}

fn overlap_parts(gauss: &GaussianPhaseSpace, vprime: f64) -> OverlapParts {
    let [[vxx, vxp], [_, vpp]] = gauss.covariance();
    let [mx, mp] = gauss.mean();
    let wxx = vxx + vprime;
    let wpp = vpp + vprime;
    let det = wxx * wpp - vxp * vxp;
    let trace = wxx + wpp;
    // y = W⁻¹ X₀, z = W⁻¹ y
    let yx = (wpp * mx - vxp * mp) / det;
    let yp = (wxx * mp - vxp * mx) / det;
    let zx = (wpp * yx - vxp * yp) / det;
    let zp = (wxx * yp - vxp * yx) / det;
    OverlapParts {
        det,
        trace,
        q: mx * yx + mp * yp,
        q_v: -(yx * yx + yp * yp),
        q_vv: 2.0 * (yx * zx + yp * zp),
    }
}

/// No-click probability `P₀ = ⟨e^{−γ₀Δt a†a}⟩` of a Gaussian state, as the
/// phase-space overlap with the thermal reference of occupation
/// `n′ = (e^{γ₀Δt} − 1)^{−1}`:
///
/// `P₀ = (1 − e^{−τ})^{−1} exp(−½ X₀ᵀ(V + v′I)⁻¹X₀) / √det(V + v′I)`,
/// with `v′ = coth(τ/2)/2` the reference covariance scale.
pub fn gaussian_p0(gauss: &GaussianPhaseSpace, coupling: &DetectorCoupling) -> Result<f64> {
    let tau = coupling.effective_tau();
    if tau == 0.0 {
        return Ok(1.0);
    }
    let vprime = 0.5 / (0.5 * tau).tanh();
    let parts = overlap_parts(gauss, vprime);
    let a = 1.0 / (1.0 - (-tau).exp());
    Ok(a * (-0.5 * parts.q).exp() / parts.det.sqrt())
}

/// `P₁ = −τ dP₀/dτ` and `P₂ = (τ²/2)(d²P₀/dτ² + dP₀/dτ)`, with the
/// derivatives of the closed-form `P₀` taken exactly (chain rule through the
/// reference covariance scale), not by finite differences.
///
/// The second derivative cancels heavily as τ → 0; below τ ≈ 1e−5 the
/// returned `P₂` loses accuracy to double-precision roundoff.
pub fn gaussian_p1_p2(
    gauss: &GaussianPhaseSpace,
    coupling: &DetectorCoupling,
) -> Result<(f64, f64)> {
    let tau = coupling.effective_tau();
    if tau == 0.0 {
        return Ok((0.0, 0.0));
    }
    let x = (-tau).exp();
    let one_m = 1.0 - x;
    let a = 1.0 / one_m;
    let a1 = -x / (one_m * one_m);
    let a2 = x / (one_m * one_m) + 2.0 * x * x / (one_m * one_m * one_m);

    let half = 0.5 * tau;
    let sh = half.sinh();
    let csch2 = 1.0 / (sh * sh);
    let g1 = -0.25 * csch2;
    let g2 = 0.25 * csch2 * half.cosh() / sh;

    let vprime = 0.5 / half.tanh();
    let p = overlap_parts(gauss, vprime);
    let f = (-0.5 * p.q).exp() / p.det.sqrt();
    let s = -0.5 * p.q_v - 0.5 * p.trace / p.det;
    let f1 = f * s;
    let f2 = f * (s * s - 0.5 * p.q_vv - 1.0 / p.det + 0.5 * p.trace * p.trace / (p.det * p.det));

    let d1 = a1 * f + a * f1 * g1;
    let d2 = a2 * f + 2.0 * a1 * f1 * g1 + a * (f2 * g1 * g1 + f1 * g2);
    let p1 = -tau * d1;
    let p2 = 0.5 * tau * tau * (d2 + d1);
    Ok((p1, p2))
}

/// `P₀, P₁, P₂` of a Gaussian state through the overlap route.
pub fn gaussian_distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
) -> Result<CountDistribution> {
    let gauss = state.to_gaussian()?;
    let p0 = gaussian_p0(&gauss, coupling)?;
    let (p1, p2) = gaussian_p1_p2(&gauss, coupling)?;
    let probs = vec![p0, p1, p2];
    let mut warnings = Vec::new();
    let expansion = coupling.effective_tau() * gauss.mean_occupation();
    if expansion > 0.1 {
        warnings.push(ValidityWarning::SeriesRegime {
            kappa_sq_nbar: expansion,
        });
    }
    let tail = 1.0 - probs.iter().sum::<f64>();
    Ok(CountDistribution::new(probs, Method::GaussianOverlap, tail).with_warnings(warnings))
}

/// Dispatches to the requested probability route.
pub fn distribution(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n_max: usize,
    method: Method,
) -> Result<CountDistribution> {
    match method {
        Method::Perturbative => {
            if n_max > 3 {
                return Err(Error::Unsupported(format!(
                    "the perturbative series provides P0..P3, got n_max = {n_max}"
                )));
            }
            let dist = perturbative_distribution(state, coupling)?;
            let probs = dist.probs()[..=n_max].to_vec();
            let tail = 1.0 - probs.iter().sum::<f64>();
            Ok(CountDistribution::new(probs, Method::Perturbative, tail)
                .with_warnings(dist.warnings().to_vec()))
        }
        Method::PRepresentation => exact_distribution(state, coupling, n_max),
        Method::Bch => bch_distribution(state, coupling, n_max),
        Method::GaussianOverlap => {
            if n_max > 2 {
                return Err(Error::Unsupported(format!(
                    "the Gaussian overlap route provides P0..P2, got n_max = {n_max}"
                )));
            }
            let dist = gaussian_distribution(state, coupling)?;
            let probs = dist.probs()[..=n_max].to_vec();
            let tail = 1.0 - probs.iter().sum::<f64>();
            Ok(CountDistribution::new(probs, Method::GaussianOverlap, tail)
                .with_warnings(dist.warnings().to_vec()))
        }
        Method::Oracle => fock::detector_pn_oracle(state, coupling, n_max),
    }
}
