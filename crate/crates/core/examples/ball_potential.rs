//! Potentials of the unit ball in R^3 and the combined potential of a
//! mass-m ball, next to the Newtonian closed form.

use flocking::radial_kernel::{ball_potential, ball_potential_derivative, combined_ball_potential};
use flocking::{KernelParams, QuadratureSpec};

fn main() -> flocking::Result<()> {
    let q = QuadratureSpec::default();
    let params = KernelParams::new(3, 2.0, 1.0)?;
    println!("{:>5} {:>12} {:>12} {:>12} {:>12}", "r", "phi_2", "phi_-1", "newton", "dphi_-1");
    for k in 0..=12 {
        let r = 0.25 * k as f64;
        let newton = if r <= 1.0 { 2.0 * std::f64::consts::PI * (1.0 - r * r / 3.0) } else { 4.0 * std::f64::consts::PI / (3.0 * r) };
        println!(
            "{r:>5.2} {:>12.6} {:>12.6} {newton:>12.6} {:>12.6}",
            ball_potential(2.0, r, 3, &q)?,
            ball_potential(-1.0, r, 3, &q)?,
            ball_potential_derivative(-1.0, r, 3, &q)?,
        );
    }
    // Φ is largest outside the ball and smallest at its centre for large R
    let radius = 10.0;
    for r in [0.0, 5.0, 9.9, 10.0, 10.1, 15.0] {
        println!("Phi({r:>4}) = {:.6e}", combined_ball_potential(&params, radius, r, &q)?);
    }
    Ok(())
}
