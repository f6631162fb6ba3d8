//! Minimize the energy at fixed mass from an annulus and watch it become a
//! ball.

use flocking::density::{asymmetry, RadialGrid};
use flocking::radial_kernel::ball_volume;
use flocking::solver::{minimize, InitKind, SolverOptions};
use flocking::verify::shell_width;
use flocking::{KernelParams, QuadratureSpec};

fn main() -> flocking::Result<()> {
    let params = KernelParams::new(3, 2.0, 1.0)?;
    let radius = 8.0;
    let grid = RadialGrid::uniform(3, 2.5 * radius, 512)?;
    let options = SolverOptions { init: InitKind::Annulus { inner: 0.8 * radius }, ..SolverOptions::default() };
    let report = minimize(&params, ball_volume(3, radius), &grid, &options, &QuadratureSpec::default())?;
    for (k, (e, r)) in report.energy_trace.iter().zip(&report.residual_trace).enumerate() {
        println!("{k:>3} energy {e:.10e} residual {r:.3e}");
    }
    let (a, shift) = asymmetry(&report.profile)?;
    println!("{} after {} iterations", report.stop_reason, report.iterations);
    println!("asymmetry {a:.3e} (shift {shift:.3}), shell width {:.3e}, cell/R {:.3e}",
        shell_width(&report.profile), grid.max_width() / radius);
    Ok(())
}
