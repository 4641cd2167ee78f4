//! The servo loop on a linear plant with a known Jacobian: probe, reach, and
//! compare the online estimate with the truth.

use nalgebra::DMatrix;
use selfservo::servo::{initial_estimate, reach, Goal, LinearPlant, ServoConfig};

fn main() -> selfservo::Result<()> {
    let j = DMatrix::from_row_slice(3, 4, &[80.0, -25.0, 10.0, 4.0, 20.0, 70.0, -35.0, 12.0, 3.0, 2.0, 1.5, -5.0]);
    let mut plant = LinearPlant::new(j.clone(), [320.0, 240.0, 50.0]);
    let config = ServoConfig::default();
    let mut est = initial_estimate(&mut plant, &config)?;
    println!("probe error |J - J_true|_F = {:.2e}", (&est.j - &j).norm());
    for goal in [[360.0, 200.0, 52.0], [280.0, 260.0, 47.0], [320.0, 240.0, 50.0]] {
        let out = reach(&mut plant, &mut est, &Goal::new(goal), &config)?;
        println!("goal {goal:?}: {:?} after {} steps, {:.3} px short", out.status, out.steps, out.error_px);
    }
    println!("estimate error after reaching: {:.2e}", (&est.j - &j).norm());
    Ok(())
}
