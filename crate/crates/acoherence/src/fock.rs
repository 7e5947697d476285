//! Brute-force ground truth in a truncated Fock space.
//!
//! A single field mode couples to a single detector mode through the
//! excitation-conserving interaction `κ (a†b + b†a)` with `κ = √(γ₀ Δt)`.
//! The propagator is the matrix exponential of that Hermitian generator. The
//! generator conserves total quanta, so the evolution decomposes exactly into
//! small per-sector blocks; the dense exponential is kept alongside and the
//! two are tested against each other. Detector statistics are obtained from
//! eigendecompositions of the generator, never from the closed-form
//! expressions they are meant to validate.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::detector::{CountDistribution, DetectorCoupling, Method};
use crate::error::{Error, Result};
use crate::states::FieldState;

/// Probability mass allowed past the truncation edge when preparing states.
pub const TAIL_TOLERANCE: f64 = 1e-10;
/// Absolute tolerance for Hermiticity and trace checks.
pub const MATRIX_TOLERANCE: f64 = 1e-9;
/// Hard cap on the adaptive Fock dimension.
pub const MAX_FOCK_DIM: usize = 8192;

/// Pure field state in a truncated Fock basis, with the truncated probability
/// mass recorded explicitly.
#[derive(Debug, Clone)]
pub struct FockVector {
    amplitudes: DVector<Complex64>,
    tail: f64,
}

impl FockVector {
    /// Wraps amplitudes whose squared norm plus `tail` accounts for all
    /// probability.
    pub fn with_tail(amplitudes: DVector<Complex64>, tail: f64) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::invalid("amplitudes", "dimension must be >= 1"));
        }
        if !(0.0..=1.0 + MATRIX_TOLERANCE).contains(&tail) {
            return Err(Error::invalid(
                "tail",
                format!("tail mass {tail} outside [0, 1]"),
            ));
        }
        let norm_sq = amplitudes.norm_squared();
        if (norm_sq + tail - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "amplitudes",
                format!(
                    "squared norm {norm_sq} plus tail {tail} does not account for unit probability"
                ),
            ));
        }
        Ok(FockVector { amplitudes, tail })
    }

    /// Normalizes and wraps amplitudes as an untruncated state.
    pub fn new(amplitudes: DVector<Complex64>) -> Result<Self> {
        let norm = amplitudes.norm();
        if norm <= 0.0 || !norm.is_finite() {
            return Err(Error::invalid(
                "amplitudes",
                "vector must have finite nonzero norm",
            ));
        }
        FockVector::with_tail(amplitudes / Complex64::new(norm, 0.0), 0.0)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<Complex64> {
        &self.amplitudes
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    pub fn occupation_probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }
}

/// Mixed field state in a truncated Fock basis.
#[derive(Debug, Clone)]
pub struct FockDensity {
    matrix: DMatrix<Complex64>,
    tail: f64,
}

impl FockDensity {
    /// Wraps a Hermitian matrix whose trace plus `tail` is one.
    pub fn with_tail(matrix: DMatrix<Complex64>, tail: f64) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid(
                "matrix",
                "density must be square and non-empty",
            ));
        }
        let dim = matrix.nrows();
        let mut herm_residual: f64 = 0.0;
        for i in 0..dim {
            for j in i..dim {
                herm_residual = herm_residual.max((matrix[(i, j)] - matrix[(j, i)].conj()).norm());
            }
        }
        if herm_residual > MATRIX_TOLERANCE {
            return Err(Error::invalid(
                "matrix",
                format!("density is not Hermitian (residual {herm_residual:.3e})"),
            ));
        }
        let trace: f64 = (0..dim).map(|i| matrix[(i, i)].re).sum();
        if (trace + tail - 1.0).abs() > MATRIX_TOLERANCE.max(1e-6) {
            return Err(Error::invalid(
                "matrix",
                format!("trace {trace} plus tail {tail} does not account for unit probability"),
            ));
        }
        Ok(FockDensity { matrix, tail })
    }

    pub fn new(matrix: DMatrix<Complex64>) -> Result<Self> {
        FockDensity::with_tail(matrix, 0.0)
    }

    pub fn from_pure(vector: &FockVector) -> Self {
        let dim = vector.dim();
        let mut matrix = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                matrix[(i, j)] = vector.amplitudes[i] * vector.amplitudes[j].conj();
            }
        }
        FockDensity {
            matrix,
            tail: vector.tail,
        }
    }

    pub fn from_diagonal(probs: &[f64], tail: f64) -> Result<Self> {
        let dim = probs.len();
        let mut matrix = DMatrix::zeros(dim, dim);
        for (n, &p) in probs.iter().enumerate() {
            if p < -MATRIX_TOLERANCE {
                return Err(Error::invalid(
                    "probs",
                    format!("negative occupation {p} at {n}"),
                ));
            }
            matrix[(n, n)] = Complex64::new(p, 0.0);
        }
        FockDensity::with_tail(matrix, tail)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `tr ρ²`.
    pub fn purity(&self) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                acc += (self.matrix[(i, j)] * self.matrix[(j, i)]).re;
            }
        }
        acc
    }
}

/// Joint density of field ⊗ detector. The joint index is `f * d_d + m` for
/// field level `f` and detector level `m`.
#[derive(Debug, Clone)]
pub struct JointState {
    matrix: DMatrix<Complex64>,
    field_dim: usize,
    detector_dim: usize,
}

impl JointState {
    pub fn new(matrix: DMatrix<Complex64>, field_dim: usize, detector_dim: usize) -> Result<Self> {
        if matrix.nrows() != field_dim * detector_dim || matrix.ncols() != matrix.nrows() {
            return Err(Error::invalid("matrix", "joint dimensions do not match"));
        }
        let trace: f64 = (0..matrix.nrows()).map(|i| matrix[(i, i)].re).sum();
        if (trace - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(
                "matrix",
                format!("joint trace {trace} far from 1"),
            ));
        }
        Ok(JointState {
            matrix,
            field_dim,
            detector_dim,
        })
    }

    pub fn from_pure(
        vector: &DVector<Complex64>,
        field_dim: usize,
        detector_dim: usize,
    ) -> Result<Self> {
        if vector.len() != field_dim * detector_dim {
            return Err(Error::invalid("vector", "joint dimensions do not match"));
        }
        let n = vector.len();
        let mut matrix = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                matrix[(i, j)] = vector[i] * vector[j].conj();
            }
        }
        JointState::new(matrix, field_dim, detector_dim)
    }

    pub fn field_dim(&self) -> usize {
        self.field_dim
    }

    pub fn detector_dim(&self) -> usize {
        self.detector_dim
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    /// Detector-level populations `tr_F ⟨m|ρ|m⟩`.
    pub fn detector_marginal(&self) -> Vec<f64> {
        let mut probs = vec![0.0; self.detector_dim];
        for f in 0..self.field_dim {
            for (m, slot) in probs.iter_mut().enumerate() {
                let idx = f * self.detector_dim + m;
                *slot += self.matrix[(idx, idx)].re;
            }
        }
        probs
    }

    /// Reduced field state `tr_D ρ`.
    pub fn field_marginal(&self) -> Result<FockDensity> {
        let mut reduced = DMatrix::zeros(self.field_dim, self.field_dim);
        for i in 0..self.field_dim {
            for j in 0..self.field_dim {
                let mut acc = Complex64::new(0.0, 0.0);
                for m in 0..self.detector_dim {
                    acc += self.matrix[(i * self.detector_dim + m, j * self.detector_dim + m)];
                }
                reduced[(i, j)] = acc;
            }
        }
        let trace: f64 = (0..self.field_dim).map(|i| reduced[(i, i)].re).sum();
        FockDensity::with_tail(reduced, (1.0 - trace).max(0.0))
    }
}

/// Truncated lowering and raising operators with `a|n⟩ = √n |n−1⟩`.
pub fn ladder_ops(dim: usize) -> Result<(DMatrix<Complex64>, DMatrix<Complex64>)> {
    if dim < 2 {
        return Err(Error::invalid("dim", format!("need dim >= 2, got {dim}")));
    }
    let mut lower = DMatrix::<Complex64>::zeros(dim, dim);
    for n in 1..dim {
        lower[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    let raise = lower.adjoint();
    Ok((lower, raise))
}

fn validate_kappa(kappa: f64) -> Result<()> {
    if !kappa.is_finite() {
        return Err(Error::invalid(
            "kappa",
            format!("must be finite, got {kappa}"),
        ));
    }
    if kappa < 0.0 {
        return Err(Error::invalid(
            "kappa",
            format!("must be >= 0, got {kappa}"),
        ));
    }
    Ok(())
}

/// Real symmetric generator `κ (a†⊗b + a⊗b†)` on field ⊗ detector.
fn joint_generator(kappa: f64, field_dim: usize, detector_dim: usize) -> DMatrix<f64> {
    let n = field_dim * detector_dim;
    let mut g = DMatrix::zeros(n, n);
    // a† ⊗ b: |f, m⟩ → √(f+1) √m |f+1, m−1⟩
    for f in 0..field_dim.saturating_sub(1) {
        for m in 1..detector_dim {
            let src = f * detector_dim + m;
            let dst = (f + 1) * detector_dim + (m - 1);
            let amp = kappa * ((f + 1) as f64 * m as f64).sqrt();
            g[(dst, src)] += amp;
            g[(src, dst)] += amp;
        }
    }
    g
}

/// Dense beam-splitter propagator `exp(−iκ(a†b + b†a))`, computed by
/// eigendecomposition of the Hermitian generator.
pub fn beamsplitter_unitary(
    kappa: f64,
    field_dim: usize,
    detector_dim: usize,
) -> Result<DMatrix<Complex64>> {
    validate_kappa(kappa)?;
    if field_dim < 2 || detector_dim < 2 {
        return Err(Error::invalid("dim", "both mode dimensions must be >= 2"));
    }
    let g = joint_generator(kappa, field_dim, detector_dim);
    let eig = SymmetricEigen::new(g);
    let n = field_dim * detector_dim;
    let mut u = DMatrix::<Complex64>::zeros(n, n);
    for k in 0..n {
        let phase = Complex64::from_polar(1.0, -eig.eigenvalues[k]);
        let vk = eig.eigenvectors.column(k);
        for i in 0..n {
            let left = phase * vk[i];
            if left.norm_sqr() == 0.0 {
                continue;
            }
            for j in 0..n {
                u[(i, j)] += left * vk[j];
            }
        }
    }
    Ok(u)
}

/// Detector-level weights `|u_m|²` for the sector with `n` total quanta,
/// detector levels truncated at `lmax`: the state `|n⟩_F |0⟩_D` evolved under
/// the generator block restricted to that sector (tridiagonal, real
/// symmetric).
fn sector_weights(n: usize, kappa: f64, lmax: usize) -> Vec<f64> {
    let s = n.min(lmax);
    if n == 0 || s == 0 || kappa == 0.0 {
        let mut w = vec![0.0; s + 1];
        w[0] = 1.0;
        return w;
    }
    let mut block = DMatrix::zeros(s + 1, s + 1);
    for m in 0..s {
        let amp = kappa * ((n - m) as f64 * (m + 1) as f64).sqrt();
        block[(m, m + 1)] = amp;
        block[(m + 1, m)] = amp;
    }
    let eig = SymmetricEigen::new(block);
    let mut weights = vec![0.0; s + 1];
    for (m, weight) in weights.iter_mut().enumerate() {
        let mut re = 0.0;
        let mut im = 0.0;
        for k in 0..=s {
            let w = eig.eigenvectors[(m, k)] * eig.eigenvectors[(0, k)];
            re += w * eig.eigenvalues[k].cos();
            im -= w * eig.eigenvalues[k].sin();
        }
        *weight = re * re + im * im;
    }
    weights
}

/// Detector populations for a field state given by its occupation
/// probabilities. Only the Fock diagonal enters: the excitation-conserving
/// interaction routes distinct field levels to distinct joint states, so
/// field coherences never reach the detector populations.
fn detector_marginal_from_diagonal(
    diag: &[f64],
    kappa: f64,
    n_max: usize,
    lmax: usize,
) -> Vec<f64> {
    let mut probs = vec![0.0; n_max + 1];
    for (n, &p) in diag.iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let weights = sector_weights(n, kappa, lmax);
        for (m, slot) in probs.iter_mut().enumerate() {
            if m < weights.len() {
                *slot += p * weights[m];
            }
        }
    }
    probs
}

/// Exact-evolution detector excitation probabilities `P₀ .. P_n_max`.
///
/// The field truncation grows until the prepared state's tail mass is below
/// [`TAIL_TOLERANCE`]; the detector guard band above the measured levels
/// grows until the reported probabilities settle.
pub fn detector_pn_oracle(
    state: &FieldState,
    coupling: &DetectorCoupling,
    n_max: usize,
) -> Result<CountDistribution> {
    let kappa = coupling.effective_kappa();
    validate_kappa(kappa)?;
    let (diag, _state_tail) = state.converged_diagonal(TAIL_TOLERANCE)?;
    let mut guard = 1usize;
    let mut prev: Option<Vec<f64>> = None;
    let probs = loop {
        let probs = detector_marginal_from_diagonal(&diag, kappa, n_max, n_max + guard);
        let settled = prev
            .as_ref()
            .map(|p| {
                probs
                    .iter()
                    .zip(p.iter())
                    .all(|(a, b)| (a - b).abs() <= 1e-10 * a.abs() + 1e-16)
            })
            .unwrap_or(false);
        if settled || guard >= 33 {
            break probs;
        }
        prev = Some(probs);
        guard += 2;
    };
    let tail = (1.0 - probs.iter().sum::<f64>()).max(0.0);
    Ok(CountDistribution::new(probs, Method::Oracle, tail))
}

/// Dense-route joint state after the interaction: `U (ρ ⊗ |0⟩⟨0|) U†`.
pub fn joint_after_evolution(
    state: &FieldState,
    coupling: &DetectorCoupling,
    field_dim: usize,
    detector_dim: usize,
) -> Result<JointState> {
    let kappa = coupling.effective_kappa();
    let u = beamsplitter_unitary(kappa, field_dim, detector_dim)?;
    let rep = state.to_fock(field_dim)?;
    match rep {
        crate::states::FockRep::Pure(v) => {
            let mut joint = DVector::zeros(field_dim * detector_dim);
            for f in 0..field_dim {
                joint[f * detector_dim] = v.amplitudes()[f];
            }
            let evolved = &u * joint;
            JointState::from_pure(&evolved, field_dim, detector_dim)
        }
        crate::states::FockRep::Mixed(rho) => {
            let n = field_dim * detector_dim;
            let mut embedded = DMatrix::zeros(n, n);
            for i in 0..field_dim {
                for j in 0..field_dim {
                    embedded[(i * detector_dim, j * detector_dim)] = rho.matrix()[(i, j)];
                }
            }
            let evolved = &u * embedded * u.adjoint();
            JointState::new(evolved, field_dim, detector_dim)
        }
    }
}

/// Diagonal expectation `Σ_n ρ_nn f(n)` evaluated at a truncation grown until
/// the value stops moving under dimension doubling.
pub(crate) fn converged_diagonal_sum(
    state: &FieldState,
    f: &dyn Fn(usize) -> f64,
    rel_tol: f64,
) -> Result<f64> {
    let mut dim = state.initial_dim().clamp(1, MAX_FOCK_DIM);
    let mut prev: Option<f64> = None;
    loop {
        let (diag, _) = state.fock_diagonal(dim);
        let value: f64 = diag.iter().enumerate().map(|(n, p)| p * f(n)).sum();
        if let Some(p) = prev {
            if (value - p).abs() <= rel_tol * value.abs().max(1e-300) {
                return Ok(value);
            }
            if dim >= MAX_FOCK_DIM {
                return Err(Error::Truncation {
                    tail: (value - p).abs(),
                    dim,
                    suggested: 2 * dim,
                });
            }
        } else if dim >= MAX_FOCK_DIM {
            return Err(Error::Truncation {
                tail: f64::NAN,
                dim,
                suggested: 2 * dim,
            });
        }
        prev = Some(value);
        dim = (dim * 2).min(MAX_FOCK_DIM);
    }
}

/// Normally ordered moment `⟨a†ʲaʲ⟩ = Σ_n ρ_nn n(n−1)...(n−j+1)` from the
/// truncated Fock diagonal, `j = 1..=4`.
pub fn normal_ordered_moment(state: &FieldState, j: u32) -> Result<f64> {
    if !(1..=4).contains(&j) {
        return Err(Error::Unsupported(format!(
            "normally ordered moments are provided for j = 1..=4, got {j}"
        )));
    }
    converged_diagonal_sum(
        state,
        &|n| crate::states::falling_factorial(n as f64, j),
        1e-11,
    )
}

/// `⟨e^{−λ a†a}⟩` from the truncated Fock diagonal, `λ >= 0`.
pub fn exp_number_expectation(state: &FieldState, lambda: f64) -> Result<f64> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::invalid(
            "lambda",
            format!("must be >= 0, got {lambda}"),
        ));
    }
    converged_diagonal_sum(state, &|n| (-lambda * n as f64).exp(), 1e-12)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::DetectorCoupling;
    use crate::states::FockRep;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn ladder_dim2() {
        let (a, adag) = ladder_ops(2).unwrap();
        assert_eq!(a[(0, 1)], c(1.0, 0.0));
        assert_eq!(a[(1, 0)], c(0.0, 0.0));
        assert_eq!(adag[(1, 0)], c(1.0, 0.0));
    }

    #[test]
    fn ladder_number_operator() {
        let (a, adag) = ladder_ops(4).unwrap();
        let num = adag * a;
        for n in 0..4 {
            assert_relative_eq!(num[(n, n)].re, n as f64, epsilon = 1e-14);
        }
    }

    #[test]
    fn ladder_commutator_truncation() {
        // [a, a†] = 1 except at the truncation edge, where the direct matrix
        // computation gives 1 − dim on the last diagonal entry
        let dim = 10;
        let (a, adag) = ladder_ops(dim).unwrap();
        let comm = &a * &adag - &adag * &a;
        for i in 0..dim - 1 {
            assert_abs_diff_eq!(comm[(i, i)].re, 1.0, epsilon = 1e-13);
        }
        assert_abs_diff_eq!(
            comm[(dim - 1, dim - 1)].re,
            1.0 - dim as f64,
            epsilon = 1e-12
        );
    }

    #[test]
    fn ladder_rejects_small_dim() {
        assert!(ladder_ops(1).is_err());
    }

    #[test]
    fn beamsplitter_kappa_zero_is_identity() {
        let u = beamsplitter_unitary(0.0, 4, 3).unwrap();
        for i in 0..12 {
            for j in 0..12 {
                let expected = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(u[(i, j)].re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(u[(i, j)].im, 0.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn beamsplitter_is_unitary() {
        for (kappa, df, dd) in [(0.3, 8, 4), (1.0, 16, 4), (2.0, 32, 3)] {
            let u = beamsplitter_unitary(kappa, df, dd).unwrap();
            let prod = u.adjoint() * &u;
            let mut residual: f64 = 0.0;
            for i in 0..df * dd {
                for j in 0..df * dd {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    residual = residual.max((prod[(i, j)] - c(expected, 0.0)).norm());
                }
            }
            assert!(
                residual < 1e-10,
                "kappa={kappa}: unitarity residual {residual:.3e}"
            );
        }
    }

    #[test]
    fn beamsplitter_rejects_bad_kappa() {
        assert!(beamsplitter_unitary(f64::NAN, 4, 4).is_err());
        assert!(beamsplitter_unitary(-0.1, 4, 4).is_err());
    }

    #[test]
    fn coherent_input_evolves_to_product_of_coherents() {
        // |α⟩|0⟩ → |α cos κ⟩ |−iα sin κ⟩
        let alpha = c(0.8, 0.3);
        let kappa = 0.6;
        let df = 24;
        let dd = 24;
        let state = FieldState::coherent(alpha).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        let joint = joint_after_evolution(&state, &coupling, df, dd).unwrap();

        let af = alpha * kappa.cos();
        let ad = -Complex64::i() * alpha * kappa.sin();
        let field = FieldState::coherent(af).unwrap();
        let det = FieldState::coherent(ad).unwrap();
        let (fv, dv) = match (field.to_fock(df).unwrap(), det.to_fock(dd).unwrap()) {
            (FockRep::Pure(f), FockRep::Pure(d)) => (f, d),
            _ => unreachable!(),
        };
        let mut target = DVector::zeros(df * dd);
        for f in 0..df {
            for m in 0..dd {
                target[f * dd + m] = fv.amplitudes()[f] * dv.amplitudes()[m];
            }
        }
        let mut overlap = c(0.0, 0.0);
        for i in 0..df * dd {
            let mut col = c(0.0, 0.0);
            for j in 0..df * dd {
                col += joint.matrix()[(i, j)] * target[j];
            }
            overlap += target[i].conj() * col;
        }
        assert_relative_eq!(overlap.re, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn coherent_field_marginal_stays_pure() {
        let state = FieldState::coherent(c(1.1, 0.0)).unwrap();
        let coupling = DetectorCoupling::from_kappa(0.4).unwrap();
        let joint = joint_after_evolution(&state, &coupling, 28, 28).unwrap();
        let purity = joint.field_marginal().unwrap().purity();
        assert_relative_eq!(purity, 1.0, epsilon = 1e-8);
    }

    #[test]
    fn sector_route_matches_dense_route() {
        // random superposition with complex phases: the sector decomposition
        // must reproduce the dense-exponential detector marginal exactly
        let df = 12;
        let dd = 5;
        let kappa = 0.7;
        let raw: Vec<Complex64> = (0..df)
            .map(|n| {
                let x = ((n * 37 + 11) % 17) as f64 / 17.0 - 0.5;
                let y = ((n * 53 + 5) % 13) as f64 / 13.0 - 0.5;
                c(x, y) * (-(n as f64) / 6.0).exp()
            })
            .collect();
        let state = FieldState::custom(raw).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();

        let joint = joint_after_evolution(&state, &coupling, df, dd).unwrap();
        let dense = joint.detector_marginal();

        let (diag, _) = state.fock_diagonal(df);
        let sector = detector_marginal_from_diagonal(&diag, kappa, dd - 1, dd - 1);
        for m in 0..dd {
            assert_abs_diff_eq!(dense[m], sector[m], epsilon = 1e-12);
        }
    }

    #[test]
    fn oracle_vacuum_only_p0() {
        let state = FieldState::fock(0);
        let coupling = DetectorCoupling::from_kappa(0.8).unwrap();
        let dist = detector_pn_oracle(&state, &coupling, 3).unwrap();
        assert_eq!(dist.prob(0), 1.0);
        for n in 1..=3 {
            assert_eq!(dist.prob(n), 0.0);
        }
    }

    #[test]
    fn oracle_thermal_matches_closed_form_p0() {
        // P0 = 1/(1 + n_th sin²κ)
        let n_th = 0.5;
        let kappa = 0.2;
        let state = FieldState::thermal(n_th).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        let dist = detector_pn_oracle(&state, &coupling, 3).unwrap();
        let expected = 1.0 / (1.0 + n_th * kappa.sin().powi(2));
        assert_relative_eq!(dist.prob(0), expected, epsilon = 1e-9);
    }

    #[test]
    fn oracle_coherent_matches_poisson_thinning() {
        // coherent stays coherent: detector counts are Poisson(|α sin κ|²)
        let alpha = c(2.0, 0.0);
        let kappa = 0.1;
        let state = FieldState::coherent(alpha).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        let dist = detector_pn_oracle(&state, &coupling, 3).unwrap();
        let mu = alpha.norm_sqr() * kappa.sin().powi(2);
        let mut pmf = (-mu).exp();
        for n in 0..=3 {
            assert_relative_eq!(dist.prob(n), pmf, epsilon = 1e-9);
            pmf *= mu / (n + 1) as f64;
        }
    }

    #[test]
    fn oracle_coherent_p1_matches_series_expansion() {
        // series for P1 of a coherent state through κ⁶:
        // (|α|²κ²/90)(90 − 30(3|α|²+1)κ² + (45|α|⁴+60|α|²+4)κ⁴)
        let nbar = 1.0f64;
        let kappa = 0.1f64;
        let state = FieldState::coherent(c(1.0, 0.0)).unwrap();
        let coupling = DetectorCoupling::from_kappa(kappa).unwrap();
        let dist = detector_pn_oracle(&state, &coupling, 3).unwrap();
        let k2 = kappa * kappa;
        let series = nbar * k2 / 90.0
            * (90.0 - 30.0 * (3.0 * nbar + 1.0) * k2
                + (45.0 * nbar * nbar + 60.0 * nbar + 4.0) * k2 * k2);
        assert_abs_diff_eq!(dist.prob(1), series, epsilon = 1e-7);
    }

    #[test]
    fn oracle_distribution_is_normalized() {
        for state in [
            FieldState::thermal(1.3).unwrap(),
            FieldState::squeezed_vacuum(0.9).unwrap(),
            FieldState::gaussian(1.0, 0.4, 0.7, 0.5).unwrap(),
        ] {
            let coupling = DetectorCoupling::from_kappa(0.3).unwrap();
            let dist = detector_pn_oracle(&state, &coupling, 6).unwrap();
            let total: f64 = (0..=6).map(|n| dist.prob(n)).sum();
            assert!((total + dist.tail_mass() - 1.0).abs() < 1e-9);
            for n in 0..=6 {
                assert!((0.0..=1.0).contains(&dist.prob(n)));
            }
        }
    }

    #[test]
    fn oracle_converges_under_dimension_doubling() {
        let state = FieldState::squeezed_vacuum(1.2).unwrap();
        let coupling = DetectorCoupling::from_kappa(0.15).unwrap();
        let dist = detector_pn_oracle(&state, &coupling, 3).unwrap();
        // recompute at twice the adaptive truncation
        let dim = 2 * state.initial_dim().max(1);
        let (diag, _) = state.fock_diagonal(4 * dim);
        let refined = detector_marginal_from_diagonal(&diag, 0.15, 3, 8);
        for (n, &value) in refined.iter().enumerate() {
            assert!((dist.prob(n) - value).abs() <= dist.tail_mass().max(1e-12));
        }
    }

    #[test]
    fn moments_match_closed_forms() {
        let coh = FieldState::coherent(c(1.3, -0.4)).unwrap();
        let nbar = c(1.3, -0.4).norm_sqr();
        for j in 1..=4 {
            assert_relative_eq!(
                normal_ordered_moment(&coh, j).unwrap(),
                nbar.powi(j as i32),
                epsilon = 1e-9
            );
        }
        assert_relative_eq!(
            normal_ordered_moment(&FieldState::fock(4), 2).unwrap(),
            12.0,
            epsilon = 1e-12
        );
        // thermal second factorial moment against an independent geometric sum
        let n_th = 0.8;
        let thermal = FieldState::thermal(n_th).unwrap();
        let ratio = n_th / (1.0 + n_th);
        let mut brute = 0.0;
        let mut p = 1.0 / (1.0 + n_th);
        for n in 0..4000 {
            brute += p * (n as f64) * (n as f64 - 1.0);
            p *= ratio;
        }
        assert_relative_eq!(
            normal_ordered_moment(&thermal, 2).unwrap(),
            brute,
            epsilon = 1e-10
        );
        assert_relative_eq!(brute, 2.0 * n_th * n_th, epsilon = 1e-10);
    }

    #[test]
    fn moments_converge_at_high_occupation() {
        // heavy-tailed case: thermal n_th = 20, fourth moment 4! n_th^4
        let state = FieldState::thermal(20.0).unwrap();
        let value = normal_ordered_moment(&state, 4).unwrap();
        assert_relative_eq!(value, 24.0 * 20.0f64.powi(4), max_relative = 1e-8);
        let coh = FieldState::coherent(c(20.0f64.sqrt(), 0.0)).unwrap();
        assert_relative_eq!(
            normal_ordered_moment(&coh, 4).unwrap(),
            20.0f64.powi(4),
            max_relative = 1e-8
        );
    }

    #[test]
    fn moment_rejects_bad_order() {
        let state = FieldState::fock(1);
        assert!(normal_ordered_moment(&state, 0).is_err());
        assert!(normal_ordered_moment(&state, 5).is_err());
    }

    #[test]
    fn exp_number_closed_forms() {
        let state = FieldState::thermal(0.6).unwrap();
        assert_relative_eq!(
            exp_number_expectation(&state, 0.0).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let lambda = 0.35f64;
        // coherent: exp(−|α|²(1 − e^{−λ}))
        let coh = FieldState::coherent(c(1.2, 0.5)).unwrap();
        let expected = (-c(1.2, 0.5).norm_sqr() * (1.0 - (-lambda).exp())).exp();
        assert_relative_eq!(
            exp_number_expectation(&coh, lambda).unwrap(),
            expected,
            epsilon = 1e-10
        );
        // thermal: 1/(1 + n_th (1 − e^{−λ})), checked against the geometric sum
        let mut brute = 0.0;
        let ratio: f64 = 0.6 / 1.6;
        let mut p = 1.0 / 1.6;
        for n in 0..2000 {
            brute += p * (-lambda * n as f64).exp();
            p *= ratio;
        }
        let value = exp_number_expectation(&state, lambda).unwrap();
        assert_relative_eq!(value, brute, epsilon = 1e-12);
        assert_relative_eq!(
            value,
            1.0 / (1.0 + 0.6 * (1.0 - (-lambda).exp())),
            epsilon = 1e-10
        );
    }

    #[test]
    fn exp_number_rejects_negative_lambda() {
        let state = FieldState::fock(0);
        assert!(exp_number_expectation(&state, -0.1).is_err());
    }

    #[test]
    fn truncation_error_for_huge_states() {
        let state = FieldState::coherent(c(400.0, 0.0)).unwrap();
        let coupling = DetectorCoupling::from_kappa(0.1).unwrap();
        match detector_pn_oracle(&state, &coupling, 2) {
            Err(Error::Truncation { .. }) => {}
            other => panic!("expected truncation error, got {other:?}"),
        }
    }
}
