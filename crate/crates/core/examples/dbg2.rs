// Mechanism diagnostic: same experiment, but with the characteristic roots
// drawn from unif(-b, b) for several b, to see how the skew advantage
// depends on process conditioning.
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use skewid::baseline::GaussianRun;
use skewid::harness::{self, ExperimentConfig};
use skewid::identifier::IdentifierRun;
use skewid::sim;

fn coeffs_from_roots(roots: &[f64]) -> DVector<f64> {
    let mut poly = vec![1.0f64];
    for &r in roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &p) in poly.iter().enumerate() {
            next[i] += p;
            next[i + 1] -= r * p;
        }
        poly = next;
    }
    DVector::from_iterator(roots.len(), poly[1..].iter().map(|&b| -b))
}

fn main() {
    let steps = 10_000;
    let reps = 12;
    for bound in [0.3f64, 0.6, 0.9, 1.0] {
        let mut rhos = Vec::new();
        for rep in 0..reps {
            let cfg = ExperimentConfig { master_seed: 777, ..ExperimentConfig::default() };
            let seed = harness::replication_seed(cfg.master_seed, rep);
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            let roots: Vec<f64> = (0..cfg.n_ar).map(|_| rng.gen_range(-bound..bound)).collect();
            let coeffs = coeffs_from_roots(&roots);
            let truth = cfg.truth.to_params().unwrap();
            let zs = sim::simulate_trajectory(&mut rng, &coeffs, &truth, steps).unwrap();
            let mut skew = IdentifierRun::new(
                harness::skew_prior(&cfg).unwrap(),
                cfg.identifier_config().unwrap(),
            )
            .unwrap();
            let mut gauss = GaussianRun::new(
                harness::gaussian_prior(&cfg).unwrap(),
                cfg.gamma,
                cfg.vb_iterations,
                skewid::identifier::QPolicy::Adaptive,
            )
            .unwrap();
            let mut es = 0.0;
            let mut eg = 0.0;
            for z in &zs {
                es = sim::identification_error(&skew.step(z).unwrap().x, &coeffs);
                eg = sim::identification_error(&gauss.step(z).unwrap().x, &coeffs);
            }
            rhos.push((eg - es) / eg);
        }
        rhos.sort_by(f64::total_cmp);
        let med = rhos[rhos.len() / 2];
        println!(
            "root bound {bound}: median rho_K = {med:.4}, rhos = {:?}",
            rhos.iter().map(|r| (r * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
    let _ = DMatrix::<f64>::zeros(1, 1);
}
