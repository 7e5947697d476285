//! Resonant-bar numbers for gravitational-wave detection: spontaneous
//! emission rate of a reference bar, chirp observation windows for benchmark
//! events, and the size of the acoherence signal.
//!
//! ```bash
//! cargo run --example gw_scenarios
//! ```

use acoherence::astro::{
    acoherence_signal, bar_coupling, detector_bandwidth, dt_max, flux_from_occupation,
    gamma0_from_coupling, weber_gamma0, BarDetector, ChirpScenario,
};

fn main() -> acoherence::Result<()> {
    let bar = BarDetector::reference();
    let gamma0 = weber_gamma0(&bar);
    println!(
        "reference bar: M = {} kg, L = {} m, nu = {:.0} Hz",
        bar.mass_kg,
        bar.length_m,
        bar.frequency_hz()
    );
    println!("  spontaneous emission rate gamma0 = {gamma0:.3e} 1/s");
    let g = bar_coupling(&bar);
    println!(
        "  coupling mapping check: g = {:.3e} 1/s, g^2/(pi omega) = {:.3e} 1/s",
        g,
        gamma0_from_coupling(g, bar.omega_rad_per_s)
    );

    println!("\nchirp observation windows:");
    println!(
        "{:<26} {:>8} {:>12} {:>16}",
        "event", "nu (Hz)", "dt_max (ms)", "bandwidth (rad/s)"
    );
    let rows: Vec<(&str, ChirpScenario)> = vec![
        ("GW150914 (30 Msol)", ChirpScenario::gw150914(200.0)?),
        ("GW170817 (1.19 Msol)", ChirpScenario::gw170817(1000.0)?),
        ("GW170817 (1.19 Msol)", ChirpScenario::gw170817(200.0)?),
    ];
    for (label, scenario) in rows {
        let window = dt_max(&scenario);
        println!(
            "{:<26} {:>8.0} {:>12.2} {:>16.0}",
            label,
            scenario.frequency_hz,
            window * 1e3,
            detector_bandwidth(window)
        );
    }

    // occupation ~ 1e36 quanta in the local mode volume for a LIGO-band wave
    let nbar = 1e36;
    let window = dt_max(&ChirpScenario::gw150914(200.0)?);
    println!("\nacoherence signal (gamma0 dt)^2 Q <n> for Q = <n> = 1e36:");
    println!(
        "  dt = dt_max = {:.2} ms -> signal = {:.2}",
        window * 1e3,
        acoherence_signal(gamma0, window, nbar, nbar)
    );
    println!(
        "  energy flux of the mode at 200 Hz: {:.3e} W/m^2",
        flux_from_occupation(nbar, 2.0 * std::f64::consts::PI * 200.0)
    );
    Ok(())
}
