//! Field states of a single bosonic mode and their canonical representations.
//!
//! Every state used by the probability routes is constructed here: coherent,
//! Fock, thermal, squeezed vacuum, displaced squeezed thermal (Gaussian), and
//! custom Fock-amplitude vectors. Conversions produce truncated Fock
//! vectors/densities with an explicit tail-mass record, Gaussian phase-space
//! form (quadrature convention `x = (a + a†)/√2`, vacuum variance 1/2), and
//! closed-form normally ordered moments `⟨a†ʲaʲ⟩`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{FockDensity, FockVector, MAX_FOCK_DIM, TAIL_TOLERANCE};

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// A single-mode field state.
///
/// `Gaussian` is a thermal state of occupation `n_th`, squeezed by amplitude
/// `r` at phase `phi` (measured relative to the displacement direction) and
/// displaced along the x quadrature by `x0`. It reduces to `Thermal` when
/// `x0 = r = 0` and to a displaced vacuum when `n_th = r = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FieldState {
    Coherent {
        alpha: Complex64,
    },
    Fock {
        n: u32,
    },
    Thermal {
        n_th: f64,
    },
    SqueezedVacuum {
        r: f64,
    },
    Gaussian {
        x0: f64,
        r: f64,
        phi: f64,
        n_th: f64,
    },
    Custom {
        amplitudes: Vec<Complex64>,
    },
}

/// Closed-form diagonal P representation, where one exists.
#[derive(Debug, Clone, PartialEq)]
pub enum PFunctionDescriptor {
    /// Coherent state: `P(β) = δ²(β − α)`.
    Delta {
        alpha: Complex64,
    },
    /// Thermal state: `P(β) = e^{−|β|²/n_th}/(π n_th)`.
    GaussianP {
        n_th: f64,
    },
    Unavailable,
}

/// Pure or mixed truncated Fock representation.
#[derive(Debug, Clone)]
pub enum FockRep {
    Pure(FockVector),
    Mixed(FockDensity),
}

impl FockRep {
    pub fn dim(&self) -> usize {
        match self {
            FockRep::Pure(v) => v.dim(),
            FockRep::Mixed(d) => d.dim(),
        }
    }

    pub fn tail_mass(&self) -> f64 {
        match self {
            FockRep::Pure(v) => v.tail_mass(),
            FockRep::Mixed(d) => d.tail_mass(),
        }
    }

    /// Occupation probabilities `ρ_nn`.
    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            FockRep::Pure(v) => v.occupation_probabilities(),
            FockRep::Mixed(d) => d.diagonal(),
        }
    }
}

fn require_finite(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be finite, got {value}")))
    }
}

fn require_nonnegative(name: &'static str, value: f64) -> Result<()> {
    require_finite(name, value)?;
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(name, format!("must be >= 0, got {value}")))
    }
}

impl FieldState {
    pub fn coherent(alpha: Complex64) -> Result<Self> {
        let state = FieldState::Coherent { alpha };
        state.validate()?;
        Ok(state)
    }

    pub fn fock(n: u32) -> Self {
        FieldState::Fock { n }
    }

    pub fn thermal(n_th: f64) -> Result<Self> {
        let state = FieldState::Thermal { n_th };
        state.validate()?;
        Ok(state)
    }

    pub fn squeezed_vacuum(r: f64) -> Result<Self> {
        let state = FieldState::SqueezedVacuum { r };
        state.validate()?;
        Ok(state)
    }

    pub fn gaussian(x0: f64, r: f64, phi: f64, n_th: f64) -> Result<Self> {
        let state = FieldState::Gaussian { x0, r, phi, n_th };
        state.validate()?;
        Ok(state)
    }

    /// Builds a custom state from raw Fock amplitudes, normalizing them.
    pub fn custom(amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "empty amplitude vector"));
        }
        if amplitudes
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(Error::invalid("amplitudes", "non-finite amplitude"));
        }
        let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if norm_sq <= 0.0 {
            return Err(Error::invalid("amplitudes", "zero norm"));
        }
        let scale = norm_sq.sqrt().recip();
        let amplitudes = amplitudes.into_iter().map(|c| c * scale).collect();
        Ok(FieldState::Custom { amplitudes })
    }

    /// Checks the parameter domains. Deserialized specifications must be
    /// validated before use.
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldState::Coherent { alpha } => {
                if !alpha.re.is_finite() || !alpha.im.is_finite() {
                    return Err(Error::invalid("alpha", "must be finite"));
                }
            }
            FieldState::Fock { .. } => {}
            FieldState::Thermal { n_th } => require_nonnegative("n_th", *n_th)?,
            FieldState::SqueezedVacuum { r } => require_nonnegative("r", *r)?,
            FieldState::Gaussian { x0, r, phi, n_th } => {
                require_finite("x0", *x0)?;
                require_nonnegative("r", *r)?;
                require_finite("phi", *phi)?;
                require_nonnegative("n_th", *n_th)?;
            }
            FieldState::Custom { amplitudes } => {
                if amplitudes.is_empty() {
                    return Err(Error::invalid("amplitudes", "empty amplitude vector"));
                }
                let norm_sq: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
                if !norm_sq.is_finite() || (norm_sq - 1.0).abs() > 1e-6 {
                    return Err(Error::invalid(
                        "amplitudes",
                        format!("must be normalized, squared norm is {norm_sq}"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Short human-readable tag used in error messages and reports.
    pub fn label(&self) -> String {
        match self {
            FieldState::Coherent { alpha } => format!("coherent({alpha})"),
            FieldState::Fock { n } => format!("fock({n})"),
            FieldState::Thermal { n_th } => format!("thermal({n_th})"),
            FieldState::SqueezedVacuum { r } => format!("squeezed_vacuum({r})"),
            FieldState::Gaussian { x0, r, phi, n_th } => {
                format!("gaussian(x0={x0}, r={r}, phi={phi}, n_th={n_th})")
            }
            FieldState::Custom { amplitudes } => format!("custom(dim={})", amplitudes.len()),
        }
    }

    /// Mean occupation `⟨a†a⟩`.
    pub fn mean_occupation(&self) -> f64 {
        match self {
            FieldState::Coherent { alpha } => alpha.norm_sqr(),
            FieldState::Fock { n } => f64::from(*n),
            FieldState::Thermal { n_th } => *n_th,
            FieldState::SqueezedVacuum { r } => r.sinh().powi(2),
            FieldState::Gaussian { x0, r, n_th, .. } => {
                0.5 * x0 * x0 + 0.5 * ((2.0 * n_th + 1.0) * (2.0 * r).cosh() - 1.0)
            }
            FieldState::Custom { amplitudes } => amplitudes
                .iter()
                .enumerate()
                .map(|(n, c)| n as f64 * c.norm_sqr())
                .sum(),
        }
    }

    /// Closed-form normally ordered moment `⟨a†ʲaʲ⟩` for `j = 1..=4`.
    ///
    /// Gaussian states use the Wick expansion of `(X₀, V)`; custom states are
    /// evaluated exactly from their amplitudes.
    pub fn analytic_moment(&self, j: u32) -> Result<f64> {
        if !(1..=4).contains(&j) {
            return Err(Error::Unsupported(format!(
                "normally ordered moments are provided for j = 1..=4, got {j}"
            )));
        }
        Ok(match self {
            FieldState::Coherent { alpha } => alpha.norm_sqr().powi(j as i32),
            FieldState::Fock { n } => falling_factorial(f64::from(*n), j),
            FieldState::Thermal { n_th } => factorial(j) * n_th.powi(j as i32),
            FieldState::SqueezedVacuum { r } => {
                let n_sym = r.sinh().powi(2);
                let m_anom = Complex64::new(-r.sinh() * r.cosh(), 0.0);
                wick_normal_moment(n_sym, m_anom, Complex64::new(0.0, 0.0), j)
            }
            FieldState::Gaussian { .. } => {
                let gauss = self.to_gaussian()?;
                let (n_sym, m_anom) = gauss.second_moments();
                let [mx, mp] = gauss.mean();
                let alpha0 = Complex64::new(mx, mp) / SQRT_2;
                wick_normal_moment(n_sym, m_anom, alpha0, j)
            }
            FieldState::Custom { amplitudes } => amplitudes
                .iter()
                .enumerate()
                .map(|(n, c)| c.norm_sqr() * falling_factorial(n as f64, j))
                .sum(),
        })
    }

    /// Diagonal P representation descriptor.
    pub fn p_function(&self) -> PFunctionDescriptor {
        match self {
            FieldState::Coherent { alpha } => PFunctionDescriptor::Delta { alpha: *alpha },
            FieldState::Thermal { n_th } => PFunctionDescriptor::GaussianP { n_th: *n_th },
            _ => PFunctionDescriptor::Unavailable,
        }
    }

    /// Gaussian phase-space form. Complex coherent displacements are rotated
    /// onto the x axis; every downstream use is invariant under that rotation
    /// because the reference states are isotropic.
    pub fn to_gaussian(&self) -> Result<GaussianPhaseSpace> {
        match self {
            FieldState::Coherent { alpha } => {
                GaussianPhaseSpace::new([SQRT_2 * alpha.norm(), 0.0], [[0.5, 0.0], [0.0, 0.5]])
            }
            FieldState::Thermal { n_th } => {
                let v = 0.5 * (2.0 * n_th + 1.0);
                GaussianPhaseSpace::new([0.0, 0.0], [[v, 0.0], [0.0, v]])
            }
            FieldState::SqueezedVacuum { r } => gaussian_covariance(0.0, *r, 0.0, 0.0),
            FieldState::Gaussian { x0, r, phi, n_th } => gaussian_covariance(*x0, *r, *phi, *n_th),
            other => Err(Error::NotGaussian(other.label())),
        }
    }

    /// Truncated Fock representation at the requested dimension.
    ///
    /// The truncated probability mass is recorded on the result; if it
    /// exceeds the tolerated tail the conversion fails with a suggested
    /// larger dimension.
    pub fn to_fock(&self, dim: usize) -> Result<FockRep> {
        if dim == 0 {
            return Err(Error::invalid("dim", "must be >= 1"));
        }
        let rep = match self {
            FieldState::Coherent { alpha } => {
                let (amps, tail) = coherent_amplitudes(*alpha, dim);
                FockRep::Pure(FockVector::with_tail(amps, tail)?)
            }
            FieldState::Fock { n } => {
                let n = *n as usize;
                let mut amps = DVector::zeros(dim);
                let tail = if n < dim {
                    amps[n] = Complex64::new(1.0, 0.0);
                    0.0
                } else {
                    1.0
                };
                FockRep::Pure(FockVector::with_tail(amps, tail)?)
            }
            FieldState::SqueezedVacuum { r } => {
                let (amps, tail) = squeezed_amplitudes(*r, dim);
                FockRep::Pure(FockVector::with_tail(amps, tail)?)
            }
            FieldState::Custom { amplitudes } => {
                let mut amps = DVector::zeros(dim);
                let copy = amplitudes.len().min(dim);
                for n in 0..copy {
                    amps[n] = amplitudes[n];
                }
                let tail: f64 = amplitudes[copy..].iter().map(|c| c.norm_sqr()).sum();
                FockRep::Pure(FockVector::with_tail(amps, tail)?)
            }
            FieldState::Thermal { n_th } => {
                let (probs, tail) = thermal_probabilities(*n_th, dim);
                FockRep::Mixed(FockDensity::from_diagonal(&probs, tail)?)
            }
            FieldState::Gaussian { x0, r, phi, n_th } => {
                FockRep::Mixed(gaussian_density(*x0, *r, *phi, *n_th, dim)?)
            }
        };
        if rep.tail_mass() > TAIL_TOLERANCE {
            return Err(Error::Truncation {
                tail: rep.tail_mass(),
                dim,
                suggested: (2 * dim).max(self.initial_dim()),
            });
        }
        Ok(rep)
    }

    /// Starting truncation for the adaptive drivers.
    pub(crate) fn initial_dim(&self) -> usize {
        match self {
            FieldState::Fock { n } => *n as usize + 1,
            FieldState::Custom { amplitudes } => amplitudes.len(),
            _ => {
                let nbar = self.mean_occupation();
                (nbar + 8.0 * (nbar + 1.0).sqrt() + 12.0).ceil() as usize
            }
        }
    }

    /// Occupation probabilities at a fixed truncation; the tail may be large.
    pub(crate) fn fock_diagonal(&self, dim: usize) -> (Vec<f64>, f64) {
        match self {
            FieldState::Coherent { alpha } => {
                let (amps, tail) = coherent_amplitudes(*alpha, dim);
                (amps.iter().map(|c| c.norm_sqr()).collect(), tail)
            }
            FieldState::Fock { n } => {
                let n = *n as usize;
                let mut diag = vec![0.0; dim];
                if n < dim {
                    diag[n] = 1.0;
                    (diag, 0.0)
                } else {
                    (diag, 1.0)
                }
            }
            FieldState::Thermal { n_th } => thermal_probabilities(*n_th, dim),
            FieldState::SqueezedVacuum { r } => {
                let (amps, tail) = squeezed_amplitudes(*r, dim);
                (amps.iter().map(|c| c.norm_sqr()).collect(), tail)
            }
            FieldState::Gaussian { x0, r, phi, n_th } => {
                gaussian_diagonal(*x0, *r, *phi, *n_th, dim)
            }
            FieldState::Custom { amplitudes } => {
                let copy = amplitudes.len().min(dim);
                let mut diag = vec![0.0; dim];
                for n in 0..copy {
                    diag[n] = amplitudes[n].norm_sqr();
                }
                let tail = amplitudes[copy..].iter().map(|c| c.norm_sqr()).sum();
                (diag, tail)
            }
        }
    }

    /// Diagonal at a truncation grown adaptively until the tail is below
    /// `tol`.
    pub(crate) fn converged_diagonal(&self, tol: f64) -> Result<(Vec<f64>, f64)> {
        let mut dim = self.initial_dim().max(1);
        if dim > MAX_FOCK_DIM {
            return Err(Error::Truncation {
                tail: f64::NAN,
                dim: MAX_FOCK_DIM,
                suggested: dim,
            });
        }
        loop {
            let (diag, tail) = self.fock_diagonal(dim);
            if tail <= tol {
                return Ok((diag, tail));
            }
            if dim >= MAX_FOCK_DIM {
                return Err(Error::Truncation {
                    tail,
                    dim,
                    suggested: 2 * dim,
                });
            }
            dim = (dim * 2).min(MAX_FOCK_DIM);
        }
    }
}

/// Gaussian phase-space data: quadrature mean vector and 2x2 covariance
/// matrix, in the convention where the vacuum covariance is `I/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPhaseSpace {
    mean_x: f64,
    mean_p: f64,
    var_x: f64,
    cov_xp: f64,
    var_p: f64,
}

impl GaussianPhaseSpace {
    /// Validates symmetry, positive definiteness and the uncertainty bound
    /// `det V >= 1/4`.
    pub fn new(mean: [f64; 2], cov: [[f64; 2]; 2]) -> Result<Self> {
        for v in mean.iter().chain(cov.iter().flatten()) {
            require_finite("gaussian", *v)?;
        }
        if (cov[0][1] - cov[1][0]).abs() > 1e-9 {
            return Err(Error::invalid("cov", "covariance matrix must be symmetric"));
        }
        let cov_xp = 0.5 * (cov[0][1] + cov[1][0]);
        let det = cov[0][0] * cov[1][1] - cov_xp * cov_xp;
        if cov[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::invalid(
                "cov",
                "covariance matrix must be positive definite",
            ));
        }
        if det < 0.25 * (1.0 - 1e-9) {
            return Err(Error::invalid(
                "cov",
                format!("det V = {det} violates the uncertainty bound det V >= 1/4"),
            ));
        }
        Ok(GaussianPhaseSpace {
            mean_x: mean[0],
            mean_p: mean[1],
            var_x: cov[0][0],
            cov_xp,
            var_p: cov[1][1],
        })
    }

    pub fn mean(&self) -> [f64; 2] {
        [self.mean_x, self.mean_p]
    }

    pub fn covariance(&self) -> [[f64; 2]; 2] {
        [[self.var_x, self.cov_xp], [self.cov_xp, self.var_p]]
    }

    pub fn det(&self) -> f64 {
        self.var_x * self.var_p - self.cov_xp * self.cov_xp
    }

    /// `⟨a†a⟩` of the Gaussian state.
    pub fn mean_occupation(&self) -> f64 {
        let (n_sym, _) = self.second_moments();
        0.5 * (self.mean_x * self.mean_x + self.mean_p * self.mean_p) + n_sym
    }

    /// Central second moments in mode-operator form:
    /// `N = ⟨δa† δa⟩` and `M = ⟨δa δa⟩`.
    pub(crate) fn second_moments(&self) -> (f64, Complex64) {
        let n_sym = 0.5 * (self.var_x + self.var_p) - 0.5;
        let m_anom = Complex64::new(0.5 * (self.var_x - self.var_p), self.cov_xp);
        (n_sym, m_anom)
    }
}

fn gaussian_covariance(x0: f64, r: f64, phi: f64, n_th: f64) -> Result<GaussianPhaseSpace> {
    let scale = 0.5 * (2.0 * n_th + 1.0);
    let ch = (2.0 * r).cosh();
    let sh = (2.0 * r).sinh();
    let vxx = scale * (ch - phi.cos() * sh);
    let vpp = scale * (ch + phi.cos() * sh);
    let vxp = scale * (-phi.sin() * sh);
    GaussianPhaseSpace::new([x0, 0.0], [[vxx, vxp], [vxp, vpp]])
}

pub(crate) fn factorial(j: u32) -> f64 {
    (1..=j).map(f64::from).product()
}

/// `n (n−1) ... (n−j+1)` evaluated in floating point.
pub(crate) fn falling_factorial(n: f64, j: u32) -> f64 {
    let mut acc = 1.0;
    for i in 0..j {
        acc *= n - f64::from(i);
    }
    acc
}

fn binomial_u32(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * f64::from(n - i) / f64::from(i + 1);
    }
    acc
}

/// Number of ways to pair `m` objects: `(m−1)!!` for even `m`, zero otherwise
/// (with the empty pairing counting as one).
fn pairings(m: u32) -> f64 {
    if !m.is_multiple_of(2) {
        return 0.0;
    }
    let mut acc = 1.0;
    let mut i = m;
    while i > 1 {
        acc *= f64::from(i - 1);
        i -= 2;
    }
    acc
}

/// Normally ordered moment `⟨a†ʲaʲ⟩` of a Gaussian state via the Wick
/// expansion, parameterized by the displacement `alpha0` and the central
/// moments `N = ⟨δa†δa⟩`, `M = ⟨δaδa⟩`.
pub(crate) fn wick_normal_moment(n_sym: f64, m_anom: Complex64, alpha0: Complex64, j: u32) -> f64 {
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..=j {
        for l in 0..=j {
            let central = central_gaussian_moment(n_sym, m_anom, k, l);
            if central == Complex64::new(0.0, 0.0) {
                continue;
            }
            let weight = binomial_u32(j, k)
                * binomial_u32(j, l)
                * alpha0.conj().powu(j - k)
                * alpha0.powu(j - l);
            total += weight * central;
        }
    }
    total.re
}

/// `⟨δa†ᵏ δaˡ⟩` of a zero-mean Gaussian state (the string is normally
/// ordered, so mixed contractions always contribute `N`).
fn central_gaussian_moment(n_sym: f64, m_anom: Complex64, k: u32, l: u32) -> Complex64 {
    if !(k + l).is_multiple_of(2) {
        return Complex64::new(0.0, 0.0);
    }
    let mut total = Complex64::new(0.0, 0.0);
    for m in 0..=k.min(l) {
        if !(k - m).is_multiple_of(2) || !(l - m).is_multiple_of(2) {
            continue;
        }
        let ways = binomial_u32(k, m)
            * binomial_u32(l, m)
            * factorial(m)
            * pairings(k - m)
            * pairings(l - m);
        total += ways
            * m_anom.conj().powu((k - m) / 2)
            * m_anom.powu((l - m) / 2)
            * n_sym.powi(m as i32);
    }
    total
}

/// Coherent-state amplitudes `e^{−|α|²/2} αⁿ/√n!` with the truncated tail.
fn coherent_amplitudes(alpha: Complex64, dim: usize) -> (DVector<Complex64>, f64) {
    let mut amps = DVector::zeros(dim);
    let nbar = alpha.norm_sqr();
    if nbar < 600.0 {
        let mut c = Complex64::new((-0.5 * nbar).exp(), 0.0);
        for n in 0..dim {
            amps[n] = c;
            c *= alpha / ((n + 1) as f64).sqrt();
        }
    } else {
        // log-space to survive the e^{−|α|²/2} underflow
        let ln_mag = alpha.norm().ln();
        let phase = alpha.arg();
        let mut ln_fact = 0.0;
        for n in 0..dim {
            if n > 0 {
                ln_fact += (n as f64).ln();
            }
            let ln_abs = -0.5 * nbar + n as f64 * ln_mag - 0.5 * ln_fact;
            amps[n] = Complex64::from_polar(ln_abs.exp(), phase * n as f64);
        }
    }
    let norm_sq: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    (amps, (1.0 - norm_sq).max(0.0))
}

/// Squeezed-vacuum amplitudes: only even levels are occupied,
/// `c_{2m} = (−tanh r)^m √((2m)!)/(2^m m!) / √cosh r`.
fn squeezed_amplitudes(r: f64, dim: usize) -> (DVector<Complex64>, f64) {
    let mut amps = DVector::zeros(dim);
    let mut c = r.cosh().sqrt().recip();
    let t = r.tanh();
    let mut m = 0usize;
    while 2 * m < dim {
        amps[2 * m] = Complex64::new(c, 0.0);
        m += 1;
        c *= -t * ((2 * m - 1) as f64 / (2 * m) as f64).sqrt();
    }
    let norm_sq: f64 = amps.iter().map(|c| c.norm_sqr()).sum();
    (amps, (1.0 - norm_sq).max(0.0))
}

/// Geometric occupation probabilities of a thermal state.
fn thermal_probabilities(n_th: f64, dim: usize) -> (Vec<f64>, f64) {
    let mut probs = vec![0.0; dim];
    if n_th == 0.0 {
        probs[0] = 1.0;
        return (probs, 0.0);
    }
    let ratio = n_th / (1.0 + n_th);
    let mut p = 1.0 / (1.0 + n_th);
    let mut sum = 0.0;
    for slot in probs.iter_mut() {
        *slot = p;
        sum += p;
        p *= ratio;
    }
    (probs, (1.0 - sum).max(0.0))
}

/// Applies `exp(c a^step)` to `v` (step 1 or 2). The matrix elements
/// `⟨m| a^{st} |m+st⟩ = √((m+st)!/m!)` are accumulated recursively so the
/// running term never overflows in the convergent regime.
fn apply_exp_lowering(v: &mut DVector<Complex64>, c: Complex64, step: usize) {
    if c == Complex64::new(0.0, 0.0) {
        return;
    }
    let dim = v.len();
    let mut out = v.clone();
    for m in 0..dim {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut t = 0usize;
        loop {
            t += 1;
            let top = m + step * t;
            if top > dim - 1 {
                break;
            }
            let mut fac = 1.0f64;
            for i in (m + step * (t - 1) + 1)..=top {
                fac *= i as f64;
            }
            coeff *= c * fac.sqrt() / t as f64;
            if coeff.norm_sqr() == 0.0 {
                break;
            }
            out[m] += coeff * v[top];
        }
    }
    *v = out;
}

/// Applies `exp(c (a†)^step)` to `v`.
fn apply_exp_raising(v: &mut DVector<Complex64>, c: Complex64, step: usize) {
    if c == Complex64::new(0.0, 0.0) {
        return;
    }
    let dim = v.len();
    let mut out = v.clone();
    for m in 0..dim {
        let mut coeff = Complex64::new(1.0, 0.0);
        let mut t = 0usize;
        loop {
            t += 1;
            if m < step * t {
                break;
            }
            let src = m - step * t;
            let mut fac = 1.0f64;
            for i in (src + 1)..=(m - step * (t - 1)) {
                fac *= i as f64;
            }
            coeff *= c * fac.sqrt() / t as f64;
            if coeff.norm_sqr() == 0.0 {
                break;
            }
            out[m] += coeff * v[src];
        }
    }
    *v = out;
}

/// Column `D(α) S(ζ) |k⟩` in the truncated Fock space, built from the
/// normal-ordered factorizations
/// `S(ζ) = e^{−(e^{iφ} tanh r/2) a†²} e^{−ln(cosh r)(a†a+1/2)} e^{(e^{−iφ} tanh r/2) a²}`
/// and `D(α) = e^{−|α|²/2} e^{α a†} e^{−ᾱ a}`, with `ζ = r e^{iφ}`.
pub(crate) fn displaced_squeezed_column(
    alpha: Complex64,
    r: f64,
    phi: f64,
    k: usize,
    dim: usize,
) -> DVector<Complex64> {
    let mut v = DVector::zeros(dim);
    if k >= dim {
        return v;
    }
    v[k] = Complex64::new(1.0, 0.0);
    if r > 0.0 {
        let half_tanh = 0.5 * r.tanh();
        let phase = Complex64::from_polar(1.0, phi);
        apply_exp_lowering(&mut v, half_tanh * phase.conj(), 2);
        let ln_cosh = r.cosh().ln();
        for n in 0..dim {
            v[n] *= (-ln_cosh * (n as f64 + 0.5)).exp();
        }
        apply_exp_raising(&mut v, -half_tanh * phase, 2);
    }
    if alpha != Complex64::new(0.0, 0.0) {
        // Split large displacements: the factored form applied with a big
        // argument builds intermediate vectors of norm ~ e^{|α|√n} and loses
        // the result to cancellation. Equal displacements compose with no
        // phase, so D(α) = D(α/2ᵖ)^{2ᵖ} exactly.
        let splits = (alpha.norm() / 0.5).log2().ceil().max(0.0) as u32;
        let steps = 1u64 << splits;
        let alpha_step = alpha / steps as f64;
        let scale = Complex64::new((-0.5 * alpha_step.norm_sqr()).exp(), 0.0);
        for _ in 0..steps {
            apply_exp_lowering(&mut v, -alpha_step.conj(), 1);
            apply_exp_raising(&mut v, alpha_step, 1);
            v *= scale;
        }
    }
    v
}

/// Spectral decomposition of a displaced squeezed thermal state: the
/// eigenvectors are `D S |k⟩` with geometric weights.
fn gaussian_columns(
    x0: f64,
    r: f64,
    phi: f64,
    n_th: f64,
    dim: usize,
) -> Vec<(f64, DVector<Complex64>)> {
    let alpha = Complex64::new(x0 / SQRT_2, 0.0);
    let (weights, _) = thermal_probabilities(n_th, dim);
    let mut cols = Vec::new();
    for (k, &w) in weights.iter().enumerate() {
        if w < 1e-18 && k > 0 {
            break;
        }
        cols.push((w, displaced_squeezed_column(alpha, r, phi, k, dim)));
    }
    cols
}

fn gaussian_diagonal(x0: f64, r: f64, phi: f64, n_th: f64, dim: usize) -> (Vec<f64>, f64) {
    if x0 == 0.0 && r == 0.0 {
        return thermal_probabilities(n_th, dim);
    }
    let mut diag = vec![0.0; dim];
    for (w, col) in gaussian_columns(x0, r, phi, n_th, dim) {
        for n in 0..dim {
            diag[n] += w * col[n].norm_sqr();
        }
    }
    let sum: f64 = diag.iter().sum();
    (diag, (1.0 - sum).max(0.0))
}

fn gaussian_density(x0: f64, r: f64, phi: f64, n_th: f64, dim: usize) -> Result<FockDensity> {
    let cols = gaussian_columns(x0, r, phi, n_th, dim);
    let mut mat = DMatrix::zeros(dim, dim);
    let mut trace = 0.0;
    for (w, col) in &cols {
        trace += w * col.norm_squared();
        let scaled = col * Complex64::new(*w, 0.0);
        // mat += w * col col†
        for j in 0..dim {
            let cj = col[j].conj();
            for i in 0..dim {
                mat[(i, j)] += scaled[i] * cj;
            }
        }
    }
    FockDensity::with_tail(mat, (1.0 - trace).max(0.0))
}
