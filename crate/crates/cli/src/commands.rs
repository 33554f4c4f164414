//! Implementations of the three subcommands.

use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use skewid::baseline::GaussianRun;
use skewid::harness::{self, ExperimentConfig};
use skewid::identifier::IdentifierRun;
use skewid::mvniw;
use skewid::sim;
use skewid::snapshot;
use skewid::{Error, Result};

use crate::data::{measurements_csv, parse_measurements, TruthSidecar};
use crate::manifest::RunManifest;
use crate::CommonArgs;

pub fn simulate(common: &CommonArgs) -> Result<()> {
    let manifest = RunManifest::resolve("simulate", common)?;
    let cfg = &manifest.config;
    manifest.ensure_out_dir()?;

    let mut rng = ChaCha12Rng::seed_from_u64(cfg.master_seed);
    let coeffs = sim::generate_stable_coefficients(&mut rng, cfg.n_ar);
    let truth = cfg.truth.to_params()?;
    let zs = sim::simulate_trajectory(&mut rng, &coeffs, &truth, cfg.steps)?;

    let csv = measurements_csv(&manifest.config_comment(), &zs);
    std::fs::write(manifest.out_path("measurements.csv"), csv)?;

    let sidecar = TruthSidecar {
        n_ar: cfg.n_ar,
        n_z: cfg.n_z,
        steps: cfg.steps,
        seed: cfg.master_seed,
        config_hash: cfg.hash(),
        coefficients: coeffs.iter().copied().collect(),
        noise: cfg.truth.clone(),
    };
    sidecar.save(&manifest.out_path("truth.json"))?;

    println!(
        "simulate: wrote {} steps to {}",
        zs.len(),
        manifest.out_path("measurements.csv").display()
    );
    Ok(())
}

pub fn identify(
    common: &CommonArgs,
    data: &Path,
    method: &str,
    truth: Option<&Path>,
    dump_state: Option<&Path>,
) -> Result<()> {
    let manifest = RunManifest::resolve("identify", common)?;
    let cfg = &manifest.config;
    manifest.ensure_out_dir()?;

    let text = std::fs::read_to_string(data)?;
    let zs = parse_measurements(&text)?;
    let n_z = zs[0].len();
    if n_z != cfg.n_z {
        return Err(Error::Validation(format!(
            "data has {n_z} measurement components but config expects {}",
            cfg.n_z
        )));
    }
    let truth_coeffs: Option<DVector<f64>> = match truth {
        Some(path) => {
            let sidecar = TruthSidecar::load(path)?;
            if sidecar.coefficients.len() != cfg.n_ar {
                return Err(Error::Validation(format!(
                    "truth sidecar has {} coefficients but config expects {}",
                    sidecar.coefficients.len(),
                    cfg.n_ar
                )));
            }
            Some(DVector::from_vec(sidecar.coefficients))
        }
        None => None,
    };

    let csv = match method {
        "skew" => identify_skew(&manifest, &zs, truth_coeffs.as_ref(), dump_state)?,
        "gaussian" => identify_gaussian(&manifest, &zs, truth_coeffs.as_ref(), dump_state)?,
        other => {
            return Err(Error::Validation(format!(
                "unknown method `{other}` (expected skew or gaussian)"
            )))
        }
    };
    let out = manifest.out_path("estimates.csv");
    std::fs::write(&out, csv)?;
    println!("identify: wrote {}", out.display());
    Ok(())
}

fn estimates_header(n_ar: usize, n_z: usize, with_delta: bool, with_eps: bool) -> String {
    let mut h = String::from("k");
    for i in 1..=n_ar {
        h.push_str(&format!(",x{i}"));
    }
    for i in 1..=n_ar {
        h.push_str(&format!(",p{i}"));
    }
    if with_delta {
        for i in 1..=n_z {
            for j in 1..=n_z {
                h.push_str(&format!(",delta{i}{j}"));
            }
        }
    }
    for i in 1..=n_z {
        for j in 1..=n_z {
            h.push_str(&format!(",r{i}{j}"));
        }
    }
    if with_eps {
        h.push_str(",eps");
    }
    h.push('\n');
    h
}

fn identify_skew(
    manifest: &RunManifest,
    zs: &[DVector<f64>],
    truth: Option<&DVector<f64>>,
    dump_state: Option<&Path>,
) -> Result<String> {
    let cfg = &manifest.config;
    let mut run = IdentifierRun::new(harness::skew_prior(cfg)?, cfg.identifier_config()?)?;
    let mut out = String::new();
    out.push_str(&manifest.config_comment());
    out.push('\n');
    out.push_str(&estimates_header(cfg.n_ar, cfg.n_z, true, truth.is_some()));
    for (k, z) in zs.iter().enumerate() {
        let post = run.step(z)?;
        out.push_str(&format!("{}", k + 1));
        for v in post.x.iter() {
            out.push_str(&format!(",{v}"));
        }
        for i in 0..cfg.n_ar {
            out.push_str(&format!(",{}", post.p[(i, i)]));
        }
        for i in 0..cfg.n_z {
            for j in 0..cfg.n_z {
                out.push_str(&format!(",{}", post.noise.delta_hat[(i, j)]));
            }
        }
        let r = mvniw::expected_r(&post.noise)?;
        for i in 0..cfg.n_z {
            for j in 0..cfg.n_z {
                out.push_str(&format!(",{}", r[(i, j)]));
            }
        }
        if let Some(coeffs) = truth {
            out.push_str(&format!(",{}", sim::identification_error(&post.x, coeffs)));
        }
        out.push('\n');
    }
    if let Some(path) = dump_state {
        let state = run
            .posterior()
            .ok_or_else(|| Error::Validation("no posterior state to dump".to_string()))?;
        std::fs::write(path, snapshot::write_skew_state(state))?;
    }
    Ok(out)
}

fn identify_gaussian(
    manifest: &RunManifest,
    zs: &[DVector<f64>],
    truth: Option<&DVector<f64>>,
    dump_state: Option<&Path>,
) -> Result<String> {
    let cfg = &manifest.config;
    let mut run = GaussianRun::new(
        harness::gaussian_prior(cfg)?,
        cfg.gamma,
        cfg.vb_iterations,
        cfg.q_policy.to_policy(cfg.n_ar)?,
    )?;
    let mut out = String::new();
    out.push_str(&manifest.config_comment());
    out.push('\n');
    out.push_str(&estimates_header(cfg.n_ar, cfg.n_z, false, truth.is_some()));
    for (k, z) in zs.iter().enumerate() {
        let post = run.step(z)?;
        out.push_str(&format!("{}", k + 1));
        for v in post.x.iter() {
            out.push_str(&format!(",{v}"));
        }
        for i in 0..cfg.n_ar {
            out.push_str(&format!(",{}", post.p[(i, i)]));
        }
        let r = &post.psi / (post.nu - cfg.n_z as f64 - 1.0);
        for i in 0..cfg.n_z {
            for j in 0..cfg.n_z {
                out.push_str(&format!(",{}", r[(i, j)]));
            }
        }
        if let Some(coeffs) = truth {
            out.push_str(&format!(",{}", sim::identification_error(&post.x, coeffs)));
        }
        out.push('\n');
    }
    if let Some(path) = dump_state {
        let state = run
            .posterior()
            .ok_or_else(|| Error::Validation("no posterior state to dump".to_string()))?;
        std::fs::write(path, snapshot::write_gaussian_state(state))?;
    }
    Ok(out)
}

pub fn benchmark(
    common: &CommonArgs,
    replications: Option<usize>,
    thin: Option<usize>,
    threads: usize,
) -> Result<()> {
    let mut common = common.clone();
    let manifest = {
        // Apply benchmark-specific overrides through the same path as the
        // shared ones so validation sees the final values.
        let mut m = RunManifest::resolve("benchmark", &common)?;
        if let Some(r) = replications {
            m.config.replications = r;
        }
        if let Some(t) = thin {
            m.config.thin = t;
        }
        m.config.validate()?;
        m
    };
    common.out = manifest.out_dir.clone();
    let cfg = &manifest.config;
    manifest.ensure_out_dir()?;
    eprintln!(
        "benchmark: config {}",
        manifest
            .config_path
            .as_deref()
            .map(|p| p.display().to_string())
            .unwrap_or_else(|| "<built-in defaults>".to_string())
    );

    let started = Instant::now();
    let progress = |done: usize, total: usize| {
        let tick = (total / 20).max(1);
        if done % tick == 0 || done == total {
            eprintln!("benchmark: replication {done}/{total}");
        }
    };
    let output = run_with_threads(cfg, threads, progress)?;

    std::fs::write(
        manifest.out_path("benchmark.csv"),
        harness::records_csv(cfg, &output.records),
    )?;
    std::fs::write(
        manifest.out_path("summary.json"),
        harness::summary_json(&output.summary),
    )?;

    // Headline numbers on stdout; the wall clock stays out of the JSON so
    // reruns with one seed are byte-identical.
    println!("win_fraction={}", output.summary.win_fraction);
    println!("improve25_fraction={}", output.summary.improve25_fraction);
    println!("median_rho_final={}", output.summary.median_rho_final);
    println!("wall_clock_seconds={:.3}", started.elapsed().as_secs_f64());
    Ok(())
}

#[cfg(feature = "parallel")]
fn run_with_threads<F>(
    cfg: &ExperimentConfig,
    threads: usize,
    progress: F,
) -> Result<harness::BenchmarkOutput>
where
    F: Fn(usize, usize) + Sync + Send,
{
    if threads == 0 {
        harness::run_benchmark_with(cfg, progress)
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::Validation(format!("thread pool: {e}")))?;
        pool.install(|| harness::run_benchmark_with(cfg, progress))
    }
}

#[cfg(not(feature = "parallel"))]
fn run_with_threads<F>(
    cfg: &ExperimentConfig,
    threads: usize,
    progress: F,
) -> Result<harness::BenchmarkOutput>
where
    F: Fn(usize, usize) + Sync,
{
    if threads > 1 {
        eprintln!("benchmark: built without the `parallel` feature; running sequentially");
    }
    harness::run_benchmark_sequential_with(cfg, progress)
}
