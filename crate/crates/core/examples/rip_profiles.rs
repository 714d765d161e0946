//! Prints the range-intensity profiles of the default gates as a table, with
//! and without fog attenuation and inverse-square falloff.
//!
//! ```text
//! cargo run --example rip_profiles -- [step_m]
//! ```

use gfk::ripsim::{default_gates, rip_value, GateConfig};

fn main() -> gfk::Result<()> {
    let step: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(5.0);
    let gates = default_gates();
    for (i, g) in gates.iter().enumerate() {
        let [a, b, c, d] = g.breakpoints();
        println!(
            "gate {}: delay {:.1} ns, gate {:.1} ns, pulse {:.1} ns, breakpoints {a:.1} / {b:.1} / {c:.1} / {d:.1} m",
            i + 1,
            g.delay * 1e9,
            g.gate_duration * 1e9,
            g.pulse_duration * 1e9
        );
    }

    let foggy: Vec<GateConfig> = gates
        .iter()
        .map(|g| GateConfig {
            inverse_square: true,
            ..g.foggy(0.01)
        })
        .collect();

    println!("\n{:>7} {:>9} {:>9} {:>9}   {:>9} {:>9} {:>9}", "r [m]", "C1", "C2", "C3", "fog C1", "fog C2", "fog C3");
    let mut r = 0.0;
    while r <= 130.0 {
        let clear: Vec<f64> = gates.iter().map(|g| rip_value(g, r)).collect::<gfk::Result<_>>()?;
        let fog: Vec<f64> = foggy.iter().map(|g| rip_value(g, r)).collect::<gfk::Result<_>>()?;
        println!(
            "{r:7.1} {:9.2} {:9.2} {:9.2}   {:9.4} {:9.4} {:9.4}",
            clear[0], clear[1], clear[2], fog[0], fog[1], fog[2]
        );
        r += step;
    }
    Ok(())
}
