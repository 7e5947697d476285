//! Ratio test for displaced squeezed thermal states: the leading-order
//! closed form against the overlap route (P0 from the Gaussian phase-space
//! overlap, P1 and P2 from its exact derivatives) and the oracle.
//!
//! ```bash
//! cargo run --example gaussian_ratio
//! ```

use acoherence::detector::DetectorCoupling;
use acoherence::fock::detector_pn_oracle;
use acoherence::states::FieldState;
use acoherence::stats::{ratio_from_distribution, ratio_r_gaussian, ratio_r_gaussian_overlap};

fn main() -> acoherence::Result<()> {
    let coupling = DetectorCoupling::new(2e-3, 1.0)?;
    println!("R for displaced squeezed thermal states (gamma0*dt = 2e-3)\n");
    println!(
        "{:>5} {:>5} {:>5} {:>5}  {:>12} {:>12} {:>12}",
        "x0", "r", "phi", "n_th", "leading", "overlap", "oracle"
    );
    for (x0, r, phi, n_th) in [
        (0.0, 0.0, 0.0, 1.0),                  // thermal: R = 2
        (2.0, 0.0, 0.0, 0.0),                  // displaced vacuum: R = 1
        (0.0, 1.0, 0.0, 0.0),                  // squeezed vacuum: R = 2 + coth^2 r
        (2.0, 0.6, 0.0, 0.5),                  // generic
        (2.0, 0.6, std::f64::consts::PI, 0.5), // squeezing rotated against the displacement
    ] {
        let state = FieldState::gaussian(x0, r, phi, n_th)?;
        let leading = ratio_r_gaussian(x0, r, phi, n_th)?;
        let overlap = ratio_r_gaussian_overlap(&state.to_gaussian()?, &coupling)?
            .r
            .expect("P1 > 0 away from vacuum");
        let oracle = ratio_from_distribution(&detector_pn_oracle(&state, &coupling, 2)?)
            .r
            .expect("P1 > 0 away from vacuum");
        println!(
            "{x0:>5.1} {r:>5.1} {phi:>5.2} {n_th:>5.1}  {leading:>12.6} {overlap:>12.6} {oracle:>12.6}"
        );
    }
    println!("\nhighly occupied Gaussian states satisfy 1 <= R <= 3 + csch^2(r):");
    for r in [0.5f64, 1.0, 2.0] {
        let upper = 3.0 + r.sinh().powi(-2);
        let value = ratio_r_gaussian(10.0, r, 0.0, 20.0)?;
        println!("  r = {r}: R = {value:.4} (upper bound {upper:.4})");
    }
    Ok(())
}
