//! KSG mutual information on correlated Gaussians against the closed form
//! -0.5 ln(1 - rho^2).

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use selfservo::mi::{ksg_mi, MiConfig, SampleSet};

fn main() -> selfservo::Result<()> {
    let n = 2000;
    for rho in [0.0, 0.3, 0.6, 0.9] {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let a: f64 = StandardNormal.sample(&mut rng);
            let b: f64 = StandardNormal.sample(&mut rng);
            x.push(a);
            y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
        }
        let samples = SampleSet::new(1, 1, x, y)?;
        let est = ksg_mi(&samples, &MiConfig::default())?;
        let exact = -0.5 * (1.0 - rho * rho).ln();
        println!("rho {rho:.1}: estimate {est:.4} nats, exact {exact:.4}");
    }
    Ok(())
}
