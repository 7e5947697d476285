//! Global counting statistics and the coherence ratio tests.
//!
//! The mean and variance of the measured counts follow from the detection
//! strength `s` and the field moments: `n̄ = s⟨a†a⟩` and
//! `Δn² = n̄ + s²(⟨a†²a²⟩ − ⟨a†a⟩²)`; with the small-angle strength this is
//! the familiar `Δn² = n̄ + (γ₀Δt)² Q ⟨n⟩` form. The ratios
//! `R = 2P₂P₀/P₁²` and `R′ = 3P₃P₁/(2P₂²)` equal one for coherent states and
//! discriminate thermal (2) and strongly squeezed (→3) fields.

use serde::{Deserialize, Serialize};

use crate::detector::{self, AngleMode, CountDistribution, DetectorCoupling, Method};
use crate::error::{Error, Result};
use crate::states::{FieldState, GaussianPhaseSpace};

/// Sign of the Mandel Q parameter at tolerance 1e−9.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Classification {
    SubPoissonian,
    Poissonian,
    SuperPoissonian,
}

/// Mean, variance and Mandel Q of the measured counts.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatSummary {
    pub mean: f64,
    pub variance: f64,
    pub mandel_q: f64,
    pub classification: Classification,
}

/// `n̄ = s ⟨a†a⟩` with `s` the detection strength for the chosen angle mode.
pub fn mean_counts(
    state: &FieldState,
    coupling: &DetectorCoupling,
    mode: AngleMode,
) -> Result<f64> {
    Ok(coupling.detection_strength(mode) * state.analytic_moment(1)?)
}

/// `Δn² = n̄ + s²(⟨a†²a²⟩ − ⟨a†a⟩²)`. In small-angle mode this is exactly the
/// `n̄ + (γ₀Δt)² Q ⟨n⟩` approximation.
pub fn variance_counts(
    state: &FieldState,
    coupling: &DetectorCoupling,
    mode: AngleMode,
) -> Result<f64> {
    let s = coupling.detection_strength(mode);
    let n1 = state.analytic_moment(1)?;
    let n2 = state.analytic_moment(2)?;
    Ok(s * n1 + s * s * (n2 - n1 * n1))
}

/// Mandel Q of the field state: `(⟨ΔN²⟩ − ⟨N⟩)/⟨N⟩`. Undefined for states
/// with no occupation.
pub fn mandel_q(state: &FieldState) -> Result<f64> {
    let n1 = state.analytic_moment(1)?;
    if n1 <= 0.0 {
        return Err(Error::Undefined {
            what: "Mandel Q".into(),
            reason: "mean occupation is zero".into(),
        });
    }
    let n2 = state.analytic_moment(2)?;
    Ok((n2 - n1 * n1) / n1)
}

pub fn classify_q(q: f64) -> Classification {
    if q < -1e-9 {
        Classification::SubPoissonian
    } else if q > 1e-9 {
        Classification::SuperPoissonian
    } else {
        Classification::Poissonian
    }
}

pub fn summarize(
    state: &FieldState,
    coupling: &DetectorCoupling,
    mode: AngleMode,
) -> Result<StatSummary> {
    let q = mandel_q(state)?;
    Ok(StatSummary {
        mean: mean_counts(state, coupling, mode)?,
        variance: variance_counts(state, coupling, mode)?,
        mandel_q: q,
        classification: classify_q(q),
    })
}

/// Ratio-test outcome. Undefined ratios carry an explicit reason instead of
/// a sentinel value; the component probabilities and route are recorded for
/// reproducibility.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioResult {
    /// Probabilities the ratios were computed from, indexed by count.
    pub probs: Vec<f64>,
    pub r: Option<f64>,
    pub r_reason: Option<String>,
    pub r_prime: Option<f64>,
    pub r_prime_reason: Option<String>,
    pub method: Method,
}

/// `R = 2P₂P₀/P₁²` and `R′ = 3P₃P₁/(2P₂²)` from a probability distribution.
/// A ratio whose denominator vanishes is flagged, never thrown.
pub fn ratio_from_distribution(dist: &CountDistribution) -> RatioResult {
    let p0 = dist.prob(0);
    let p1 = dist.prob(1);
    let p2 = dist.prob(2);
    let p3 = dist.prob(3);

    let (r, r_reason) = if dist.n_max() < 2 {
        (
            None,
            Some("route provides fewer than three probabilities".to_string()),
        )
    } else if p1 == 0.0 {
        (None, Some("P1 = 0 (division by zero)".to_string()))
    } else {
        (Some(2.0 * p2 * p0 / (p1 * p1)), None)
    };
    let (r_prime, r_prime_reason) = if dist.n_max() < 3 {
        (
            None,
            Some(format!("route provides P0..P{} only", dist.n_max())),
        )
    } else if p2 == 0.0 {
        (None, Some("P2 = 0 (division by zero)".to_string()))
    } else {
        (Some(3.0 * p3 * p1 / (2.0 * p2 * p2)), None)
    };
    RatioResult {
        probs: dist.probs().to_vec(),
        r,
        r_reason,
        r_prime,
        r_prime_reason,
        method: dist.method(),
    }
}

/// Computes `P₀..P₃` (or `P₀..P₂` on the Gaussian route) with the requested
/// method and forms the ratios.
pub fn ratios(
    state: &FieldState,
    coupling: &DetectorCoupling,
    method: Method,
) -> Result<RatioResult> {
    let n_max = if method == Method::GaussianOverlap {
        2
    } else {
        3
    };
    let dist = detector::distribution(state, coupling, n_max, method)?;
    Ok(ratio_from_distribution(&dist))
}

/// Leading-order `R` of a displaced squeezed thermal state (displacement
/// `x0` along x, squeezing `r` at phase `phi` relative to the displacement,
/// thermal occupation `n_th`):
///
/// ```text
///     4n² − 8n x₀² cosφ sinh2r + 8(2n+1)(x₀²−1) cosh2r
/// R ≈ ─────────────────────────────────────────────────
///            2 ((2n+1) cosh2r + x₀² − 1)²
///     3(2n+1)² cosh4r + 4n − 8x₀² cosφ sinh r cosh r + 2x₀⁴ − 8x₀² + 5
///   + ────────────────────────────────────────────────────────────────
///            2 ((2n+1) cosh2r + x₀² − 1)²
/// ```
pub fn ratio_r_gaussian(x0: f64, r: f64, phi: f64, n_th: f64) -> Result<f64> {
    // parameter domains as for the Gaussian state constructor
    FieldState::gaussian(x0, r, phi, n_th)?;
    let n = n_th;
    let ch2 = (2.0 * r).cosh();
    let sh2 = (2.0 * r).sinh();
    let ch4 = (4.0 * r).cosh();
    let x2 = x0 * x0;
    let core = (2.0 * n + 1.0) * ch2 + x2 - 1.0;
    if core.abs() < 1e-300 {
        return Err(Error::Undefined {
            what: "Gaussian ratio R".into(),
            reason: "vanishing denominator (vacuum state)".into(),
        });
    }
    let num1 =
        4.0 * n * n - 8.0 * n * x2 * phi.cos() * sh2 + 8.0 * (2.0 * n + 1.0) * (x2 - 1.0) * ch2;
    let num2 = 3.0 * (2.0 * n + 1.0).powi(2) * ch4 + 4.0 * n
        - 8.0 * x2 * phi.cos() * r.sinh() * r.cosh()
        + 2.0 * x2 * x2
        - 8.0 * x2
        + 5.0;
    Ok((num1 + num2) / (2.0 * core * core))
}

/// `R` of a Gaussian state through the overlap route (`P₀` and its exact
/// derivatives), keeping all orders of the factored-propagator
/// approximation. `R′` is not available on this route.
pub fn ratio_r_gaussian_overlap(
    gauss: &GaussianPhaseSpace,
    coupling: &DetectorCoupling,
) -> Result<RatioResult> {
    let p0 = detector::gaussian_p0(gauss, coupling)?;
    let (p1, p2) = detector::gaussian_p1_p2(gauss, coupling)?;
    let dist = CountDistribution::new(vec![p0, p1, p2], Method::GaussianOverlap, 0.0);
    Ok(ratio_from_distribution(&dist))
}

/// Leading-order relation `R ≈ 1 + Q/⟨n⟩`.
pub fn r_from_q(q: f64, n_mean: f64) -> Result<f64> {
    if n_mean.is_nan() || n_mean <= 0.0 {
        return Err(Error::Undefined {
            what: "R from Q".into(),
            reason: format!("requires mean occupation > 0, got {n_mean}"),
        });
    }
    Ok(1.0 + q / n_mean)
}

/// Closed-form reference value of `R` for the state class, where one exists:
/// 1 (coherent), 2 (thermal), `1 − 1/n` (Fock), `2 + coth²r` (squeezed
/// vacuum), and the leading-order Gaussian expression.
pub fn reference_r(state: &FieldState) -> Option<f64> {
    match state {
        FieldState::Coherent { .. } => Some(1.0),
        FieldState::Thermal { n_th } if *n_th > 0.0 => Some(2.0),
        FieldState::Fock { n } if *n > 0 => Some(1.0 - 1.0 / f64::from(*n)),
        FieldState::SqueezedVacuum { r } if *r > 0.0 => Some(2.0 + r.tanh().powi(-2)),
        FieldState::Gaussian { x0, r, phi, n_th } => ratio_r_gaussian(*x0, *r, *phi, *n_th).ok(),
        _ => None,
    }
}

/// Closed-form reference value of `R′`: 1 (coherent), 3/2 (thermal),
/// `1 − 1/(n−1)` (Fock with n ≥ 2).
pub fn reference_r_prime(state: &FieldState) -> Option<f64> {
    match state {
        FieldState::Coherent { .. } => Some(1.0),
        FieldState::Thermal { n_th } if *n_th > 0.0 => Some(1.5),
        FieldState::Fock { n } if *n >= 2 => Some(1.0 - 1.0 / f64::from(*n - 1)),
        _ => None,
    }
}

/// Coarse label for a measured `R` against the reference anchors
/// 1 (coherent), 2 (thermal), 3 (strongly squeezed).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioClass {
    SubPoissonian,
    MaximallyClassical,
    ThermalLike,
    SqueezedLike,
}

impl std::fmt::Display for RatioClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            RatioClass::SubPoissonian => "sub-poissonian",
            RatioClass::MaximallyClassical => "maximally classical",
            RatioClass::ThermalLike => "thermal-like",
            RatioClass::SqueezedLike => "squeezed-like",
        };
        f.write_str(name)
    }
}

pub fn classify_ratio(r: f64) -> RatioClass {
    if r < 0.9 {
        RatioClass::SubPoissonian
    } else if r < 1.5 {
        RatioClass::MaximallyClassical
    } else if r < 2.5 {
        RatioClass::ThermalLike
    } else {
        RatioClass::SqueezedLike
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::detector_pn_oracle;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn kappa_coupling(kappa: f64) -> DetectorCoupling {
        DetectorCoupling::from_kappa(kappa).unwrap()
    }

    #[test]
    fn mean_counts_closed_forms() {
        let coupling = DetectorCoupling::new(0.04, 1.0).unwrap();
        // thermal small-angle: γ₀Δt n_th
        let th = FieldState::thermal(1.5).unwrap();
        assert_relative_eq!(
            mean_counts(&th, &coupling, AngleMode::SmallAngle).unwrap(),
            0.04 * 1.5,
            epsilon = 1e-14
        );
        // squeezed small-angle: γ₀Δt sinh²r
        let sq = FieldState::squeezed_vacuum(0.9).unwrap();
        assert_relative_eq!(
            mean_counts(&sq, &coupling, AngleMode::SmallAngle).unwrap(),
            0.04 * 0.9f64.sinh().powi(2),
            epsilon = 1e-14
        );
        // vacuum
        let vac = FieldState::fock(0);
        assert_eq!(mean_counts(&vac, &coupling, AngleMode::Exact).unwrap(), 0.0);
        // exact mode uses sin²
        assert_relative_eq!(
            mean_counts(&th, &coupling, AngleMode::Exact).unwrap(),
            0.2f64.sin().powi(2) * 1.5,
            epsilon = 1e-14
        );
    }

    #[test]
    fn variance_closed_forms() {
        let tau = 0.04;
        let coupling = DetectorCoupling::new(tau, 1.0).unwrap();
        // coherent: Δn² = n̄
        let coh = FieldState::coherent(c(1.2, 0.0)).unwrap();
        let mean = mean_counts(&coh, &coupling, AngleMode::SmallAngle).unwrap();
        assert_relative_eq!(
            variance_counts(&coh, &coupling, AngleMode::SmallAngle).unwrap(),
            mean,
            epsilon = 1e-12
        );
        // thermal: n̄ + (γ₀Δt)² n_th²
        let n_th = 1.5;
        let th = FieldState::thermal(n_th).unwrap();
        assert_relative_eq!(
            variance_counts(&th, &coupling, AngleMode::SmallAngle).unwrap(),
            tau * n_th + tau * tau * n_th * n_th,
            epsilon = 1e-12
        );
        // squeezed: n̄ + (γ₀Δt)² cosh(2r) sinh²r
        let r = 0.8f64;
        let sq = FieldState::squeezed_vacuum(r).unwrap();
        assert_relative_eq!(
            variance_counts(&sq, &coupling, AngleMode::SmallAngle).unwrap(),
            tau * r.sinh().powi(2) + tau * tau * (2.0 * r).cosh() * r.sinh().powi(2),
            epsilon = 1e-12
        );
    }

    #[test]
    fn mandel_q_closed_forms() {
        assert_relative_eq!(
            mandel_q(&FieldState::thermal(2.5).unwrap()).unwrap(),
            2.5,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            mandel_q(&FieldState::squeezed_vacuum(0.7).unwrap()).unwrap(),
            1.4f64.cosh(),
            epsilon = 1e-12
        );
        for n in [1u32, 2, 5, 10] {
            assert_eq!(mandel_q(&FieldState::fock(n)).unwrap(), -1.0);
        }
        assert!(mandel_q(&FieldState::fock(0)).is_err());
        let q = mandel_q(&FieldState::coherent(c(1.0, 0.0)).unwrap()).unwrap();
        assert_abs_diff_eq!(q, 0.0, epsilon = 1e-12);
        assert_eq!(classify_q(q), Classification::Poissonian);
    }

    #[test]
    fn thermal_ratio_is_temperature_independent() {
        for n_th in [0.5, 5.0, 50.0] {
            let state = FieldState::thermal(n_th).unwrap();
            let result = ratios(&state, &kappa_coupling(0.3), Method::PRepresentation).unwrap();
            assert_relative_eq!(result.r.unwrap(), 2.0, epsilon = 1e-9);
            // R' = 3/2 from the geometric distribution
            assert_relative_eq!(result.r_prime.unwrap(), 1.5, epsilon = 1e-9);
        }
    }

    #[test]
    fn fock_ratios_leading_order() {
        let coupling = kappa_coupling(0.01);
        let result = ratios(&FieldState::fock(2), &coupling, Method::Perturbative).unwrap();
        assert_abs_diff_eq!(result.r.unwrap(), 0.5, epsilon = 1e-4);
        assert_abs_diff_eq!(result.r_prime.unwrap(), 0.0, epsilon = 1e-4);
    }

    #[test]
    fn fock1_has_undefined_r_prime() {
        let coupling = kappa_coupling(0.05);
        let result = ratios(&FieldState::fock(1), &coupling, Method::Perturbative).unwrap();
        assert_abs_diff_eq!(result.r.unwrap(), 0.0, epsilon = 1e-12);
        assert!(result.r_prime.is_none());
        assert!(result.r_prime_reason.unwrap().contains("P2 = 0"));
    }

    #[test]
    fn vacuum_has_undefined_r() {
        let coupling = kappa_coupling(0.05);
        let result = ratios(&FieldState::fock(0), &coupling, Method::Oracle).unwrap();
        assert!(result.r.is_none());
        assert!(result.r_reason.is_some());
    }

    #[test]
    fn squeezed_ratio_approaches_three() {
        // oracle R at weak coupling tracks 2 + coth²r, which → 3 for large r
        let state = FieldState::squeezed_vacuum(3.0).unwrap();
        let dist = detector_pn_oracle(&state, &kappa_coupling(0.01), 3).unwrap();
        let r = ratio_from_distribution(&dist).r.unwrap();
        assert!((r - 3.0).abs() < 0.05, "R = {r}");
    }

    #[test]
    fn squeezed_oracle_matches_leading_order() {
        let r_param = 1.0f64;
        let state = FieldState::squeezed_vacuum(r_param).unwrap();
        let dist = detector_pn_oracle(&state, &kappa_coupling(0.02), 3).unwrap();
        let r = ratio_from_distribution(&dist).r.unwrap();
        let expected = 2.0 + r_param.tanh().powi(-2);
        assert!((r - expected).abs() / expected < 0.02);
    }

    #[test]
    fn gaussian_ratio_reductions() {
        // thermal limit
        for n_th in [0.3, 1.0, 10.0] {
            assert_abs_diff_eq!(
                ratio_r_gaussian(0.0, 0.0, 0.0, n_th).unwrap(),
                2.0,
                epsilon = 1e-10
            );
        }
        // displaced vacuum
        for x0 in [0.5, 1.0, 4.0] {
            assert_abs_diff_eq!(
                ratio_r_gaussian(x0, 0.0, 0.0, 0.0).unwrap(),
                1.0,
                epsilon = 1e-10
            );
        }
        // squeezed vacuum: (3 cosh2r − 1)/(cosh2r − 1) = 2 + coth²r
        for r in [0.4, 1.0, 2.0] {
            let value = ratio_r_gaussian(0.0, r, 0.0, 0.0).unwrap();
            let ch2 = (2.0f64 * r).cosh();
            assert_abs_diff_eq!(value, (3.0 * ch2 - 1.0) / (ch2 - 1.0), epsilon = 1e-10);
            assert_abs_diff_eq!(value, 2.0 + r.tanh().powi(-2), epsilon = 1e-10);
        }
        // vacuum is flagged
        assert!(ratio_r_gaussian(0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn gaussian_ratio_bounds_at_high_occupation() {
        // 1 ≤ R ≤ 3 + csch²r for highly occupied Gaussian states
        for x0 in [0.0, 4.0, 10.0] {
            for r in [0.5, 1.0, 2.0] {
                for phi in [0.0, 1.0, std::f64::consts::PI] {
                    for n_th in [0.0, 5.0, 40.0] {
                        let state = FieldState::gaussian(x0, r, phi, n_th).unwrap();
                        if state.mean_occupation() < 50.0 {
                            continue;
                        }
                        let value = ratio_r_gaussian(x0, r, phi, n_th).unwrap();
                        let upper = 3.0 + r.sinh().powi(-2);
                        assert!(
                            (0.95..=upper + 0.05).contains(&value),
                            "R = {value} outside [1, {upper}] at x0={x0}, r={r}, phi={phi}, n_th={n_th}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn gaussian_overlap_ratio_matches_leading_order_at_weak_coupling() {
        // τ small enough for the leading-order formula, large enough that the
        // τ-derivative cancellations stay well above double precision
        let state = FieldState::gaussian(1.2, 0.4, 0.6, 0.8).unwrap();
        let gauss = state.to_gaussian().unwrap();
        let coupling = DetectorCoupling::new(1e-4, 1.0).unwrap();
        let overlap = ratio_r_gaussian_overlap(&gauss, &coupling)
            .unwrap()
            .r
            .unwrap();
        let leading = ratio_r_gaussian(1.2, 0.4, 0.6, 0.8).unwrap();
        assert_relative_eq!(overlap, leading, max_relative = 5e-4);
    }

    #[test]
    fn r_from_q_closed_forms() {
        assert_relative_eq!(r_from_q(2.0, 2.0).unwrap(), 2.0, epsilon = 1e-15);
        assert_relative_eq!(r_from_q(-1.0, 5.0).unwrap(), 0.8, epsilon = 1e-15);
        assert_eq!(r_from_q(0.3, 0.0).err().map(|e| e.exit_code()), Some(2));
        assert_relative_eq!(r_from_q(0.0, 7.0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn r_from_q_tracks_oracle_ratio_as_occupation_grows() {
        // displaced thermal states: the deviation of the measured R from
        // 1 + Q/⟨n⟩ shrinks with the occupation (log-log slope ≤ −0.9)
        let kappa = 0.002;
        let n_th = 0.6;
        let mut deltas = Vec::new();
        let mut means = Vec::new();
        for x0 in [4.0, 8.0, 16.0] {
            let state = FieldState::gaussian(x0, 0.0, 0.0, n_th).unwrap();
            let dist = detector_pn_oracle(&state, &kappa_coupling(kappa), 2).unwrap();
            let r = ratio_from_distribution(&dist).r.unwrap();
            let q = mandel_q(&state).unwrap();
            let nbar = state.mean_occupation();
            deltas.push((r - r_from_q(q, nbar).unwrap()).abs());
            means.push(nbar);
        }
        assert!(
            deltas[0] > deltas[1] && deltas[1] > deltas[2],
            "deltas = {deltas:?}"
        );
        let slope = (deltas[2].ln() - deltas[0].ln()) / (means[2].ln() - means[0].ln());
        assert!(slope <= -0.9, "decay slope {slope}");
    }

    #[test]
    fn ratio_classification_labels() {
        assert_eq!(classify_ratio(1.0), RatioClass::MaximallyClassical);
        assert_eq!(classify_ratio(2.0), RatioClass::ThermalLike);
        assert_eq!(classify_ratio(3.1), RatioClass::SqueezedLike);
        assert_eq!(classify_ratio(0.5), RatioClass::SubPoissonian);
        assert_eq!(classify_ratio(2.0).to_string(), "thermal-like");
    }

    #[test]
    fn reference_values() {
        assert_eq!(reference_r(&FieldState::thermal(3.0).unwrap()), Some(2.0));
        assert_eq!(reference_r(&FieldState::fock(4)), Some(0.75));
        assert_eq!(
            reference_r_prime(&FieldState::fock(4)),
            Some(1.0 - 1.0 / 3.0)
        );
        assert_eq!(reference_r_prime(&FieldState::fock(1)), None);
        let sq = FieldState::squeezed_vacuum(1.0).unwrap();
        assert_relative_eq!(
            reference_r(&sq).unwrap(),
            2.0 + 1.0f64.tanh().powi(-2),
            epsilon = 1e-12
        );
    }
}
