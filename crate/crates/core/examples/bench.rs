//! A reduced identification benchmark run through the library: three seeds,
//! two workers, summary table on stdout and CSV in the temp directory.

use selfservo::cli::bench::{run_bench, write_csv};
use selfservo::cli::RunConfig;

fn main() -> selfservo::Result<()> {
    let mut config = RunConfig { seeds: vec![0, 1, 2], workers: 2, ..RunConfig::default() };
    config.bench.noise_variance = vec![0.0, 1.6];
    config.bench.n_actions = vec![25, 100];
    let out = run_bench(&config)?;
    for s in &out.summary {
        println!(
            "{:<20} {:.2} ± {:.2} cm  success {:.0}%  AP {:.3}",
            s.setting,
            s.mean_error_cm,
            s.std_error_cm,
            100.0 * s.success_rate,
            s.mean_ap
        );
    }
    let dir = std::env::temp_dir().join("selfservo_example");
    std::fs::create_dir_all(&dir)?;
    write_csv(&dir.join("bench_rows.csv"), &out.rows)?;
    println!("rows -> {}", dir.join("bench_rows.csv").display());
    Ok(())
}
