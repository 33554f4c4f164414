use skewid::harness::{self, ExperimentConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let reps: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let steps: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10_000);
    let cfg = ExperimentConfig {
        replications: reps,
        steps,
        master_seed: 2024,
        ..ExperimentConfig::default()
    };
    let t = std::time::Instant::now();
    let out = harness::run_benchmark_with(&cfg, |done, total| {
        if done % 8 == 0 {
            eprintln!("{done}/{total} ({:.0?})", t.elapsed());
        }
    })
    .unwrap();
    let s = &out.summary;
    println!("elapsed: {:.1?}", t.elapsed());
    println!("win_fraction={}", s.win_fraction);
    println!("improve25_fraction={}", s.improve25_fraction);
    println!("median_rho_final={}", s.median_rho_final);
    for k in [100usize, 1000, steps] {
        if let Some(pos) = s.steps_recorded.iter().position(|&x| x == k) {
            println!(
                "k={k}: p5={:.4} p25={:.4} p50={:.4} p75={:.4} p95={:.4}",
                s.rho_percentiles.p5[pos],
                s.rho_percentiles.p25[pos],
                s.rho_percentiles.p50[pos],
                s.rho_percentiles.p75[pos],
                s.rho_percentiles.p95[pos]
            );
        }
    }
    println!("violations={} failed={}", s.invariant_violations, s.failed.len());
}
