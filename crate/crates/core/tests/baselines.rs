mod common;

use mif_core::baselines::ekf::{ekf_step, run_ekf, EkfBelief};
use mif_core::baselines::pf::{pf_step, ParticleEnsemble};
use mif_core::scenarios::{
    simulate_truth, BearingScenario, LinearGaussianParams, LinearGaussianScenario, Scenario, TumorParams, TumorScenario,
};
use mif_core::{GaussianSpec, RandomSource, StateSpaceModel};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

fn random_linear(d: usize, q: usize, entries: &[f64], scales: &[f64]) -> LinearGaussianParams {
    let mut it = entries.iter().copied();
    let a = (0..d * d).map(|_| 0.6 * it.next().unwrap()).collect();
    let h = (0..q * d).map(|_| it.next().unwrap()).collect();
    let mut s = scales.iter().copied();
    LinearGaussianParams {
        dt: 0.5,
        steps: 15,
        a,
        h,
        sigma: (0..d).map(|_| s.next().unwrap()).collect(),
        obs_scale: (0..q).map(|_| s.next().unwrap()).collect(),
        x0: vec![0.5; d],
        prior_mean: vec![0.0; d],
        prior_std: (0..d).map(|_| s.next().unwrap()).collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn ekf_is_exact_kalman_on_linear_systems(
        d in 1usize..=6,
        q in 1usize..=6,
        entries in prop::collection::vec(-1.0f64..1.0, 72),
        scales in prop::collection::vec(0.2f64..2.0, 18),
        seed in any::<u64>(),
    ) {
        let q = q.min(d);
        let params = random_linear(d, q, &entries, &scales);
        let sc = LinearGaussianScenario::new(params.clone()).unwrap();
        let truth = simulate_truth(&sc, RandomSource::new(seed, 0)).unwrap();
        let ys = truth.observation_rows();
        let ekf = run_ekf(sc.model(), sc.prior(), &ys).unwrap();
        let kf = common::kalman_for(&params, &ys);
        for (e, k) in ekf.iter().zip(&kf.means) {
            for (a, b) in e.iter().zip(k.iter()) {
                prop_assert!((a - b).abs() <= 1e-10 * (1.0 + b.abs()), "{a} vs {b}");
            }
        }
    }
}

fn assert_symmetric_psd(p: &DMatrix<f64>) {
    let asym = (p - p.transpose()).abs().max();
    assert!(asym <= 1e-10, "asymmetry {asym}");
    let min_eig = SymmetricEigen::new(p.clone()).eigenvalues.min();
    assert!(min_eig >= -1e-10, "eigenvalue {min_eig}");
}

fn covariance_stays_psd(sc: &dyn Scenario, seed: u64) {
    let truth = simulate_truth(sc, RandomSource::new(seed, 0)).unwrap();
    let p0 = sc.prior();
    let mut belief = EkfBelief::new(p0.mean().to_vec(), p0.covariance_matrix());
    for (j, y) in truth.observation_rows().iter().enumerate().take(40) {
        belief = ekf_step(&belief, sc.model(), y, j + 1).unwrap();
        assert_symmetric_psd(&belief.covariance);
    }
}

#[test]
fn ekf_covariance_stays_symmetric_psd() {
    for seed in 0..5 {
        covariance_stays_psd(&TumorScenario::default(), seed);
        covariance_stays_psd(&BearingScenario::default(), seed);
    }
}

#[test]
fn ekf_zero_innovation_keeps_predicted_mean() {
    let sc = BearingScenario::default();
    let m = sc.model();
    let p0 = sc.prior();
    let mut pred = vec![0.0; 6];
    m.transition(p0.mean(), &[0.0; 6], 0, &mut pred);
    let mut y = vec![0.0; 4];
    m.observe(&pred, 1, &mut y);
    let belief = ekf_step(&EkfBelief::new(p0.mean().to_vec(), p0.covariance_matrix()), m, &y, 1).unwrap();
    for (a, b) in belief.mean.iter().zip(&pred) {
        assert!((a - b).abs() < 1e-12, "{a} vs {b}");
    }
}

#[test]
fn ekf_noiseless_limit_follows_dynamics() {
    let params = TumorParams { sigma: [1e-9, 1e-9], obs_scale: [1e-6, 1e-6], prior_std: [1e-9, 1e-9], prior_mean: [0.8, 0.3], ..TumorParams::default() };
    let sc = TumorScenario::new(params).unwrap();
    let m = sc.model();
    let mut x = sc.initial_state().to_vec();
    let mut ys = Vec::new();
    let mut path = vec![x.clone()];
    for k in 1..=sc.steps() {
        let mut next = vec![0.0; 2];
        m.transition(&x, &[0.0; 2], k - 1, &mut next);
        let mut y = vec![0.0; 2];
        m.observe(&next, k, &mut y);
        ys.push(y);
        path.push(next.clone());
        x = next;
    }
    let means = run_ekf(m, sc.prior(), &ys).unwrap();
    for (e, t) in means.iter().zip(&path) {
        assert!(e.iter().zip(t).all(|(a, b)| (a - b).abs() < 1e-8), "{e:?} vs {t:?}");
    }
}

/// Identity dynamics with negligible noise, observing the state itself.
struct Still {
    noise: GaussianSpec,
    obs: GaussianSpec,
    scale: Vec<f64>,
    blind: bool,
}

impl Still {
    fn new(obs_scale: f64, blind: bool) -> Self {
        Self {
            noise: GaussianSpec::isotropic(2, 1e-300).unwrap(),
            obs: GaussianSpec::isotropic(2, 1.0).unwrap(),
            scale: vec![obs_scale; 2],
            blind,
        }
    }
}

impl StateSpaceModel for Still {
    fn state_dim(&self) -> usize {
        2
    }
    fn noise_dim(&self) -> usize {
        2
    }
    fn obs_dim(&self) -> usize {
        2
    }
    fn transition(&self, x: &[f64], w: &[f64], _k: usize, out: &mut [f64]) {
        out[0] = x[0] + w[0];
        out[1] = x[1] + w[1];
    }
    fn observe(&self, x: &[f64], _k: usize, out: &mut [f64]) {
        if self.blind {
            out.fill(0.0);
        } else {
            out.copy_from_slice(x);
        }
    }
    fn state_noise(&self) -> &GaussianSpec {
        &self.noise
    }
    fn obs_noise(&self) -> &GaussianSpec {
        &self.obs
    }
    fn obs_scale(&self) -> &[f64] {
        &self.scale
    }
}

fn ensemble(n: usize) -> ParticleEnsemble {
    let pts = (0..n).flat_map(|i| [i as f64 * 0.37 - 1.0, (i as f64).sin() + 2.0]).collect();
    ParticleEnsemble::new(2, pts, vec![1.0 / n as f64; n]).unwrap()
}

fn sorted(ens: &ParticleEnsemble) -> Vec<[u64; 2]> {
    let mut v: Vec<[u64; 2]> = (0..ens.len()).map(|i| [ens.particle(i)[0].to_bits(), ens.particle(i)[1].to_bits()]).collect();
    v.sort_unstable();
    v
}

#[test]
fn pf_constant_likelihood_keeps_particles() {
    let ens = ensemble(50);
    let step = pf_step(&ens, &Still::new(1.0, true), &[0.3, 0.3], RandomSource::new(4, 0), 1).unwrap();
    assert_eq!(sorted(&step.ensemble), sorted(&ens));
    assert!(step.ensemble.weights().iter().all(|&w| w == 1.0 / 50.0));
}

#[test]
fn pf_one_hot_likelihood_collapses_to_particle() {
    let ens = ensemble(40);
    let target = ens.particle(17).to_vec();
    let step = pf_step(&ens, &Still::new(1e-4, false), &target, RandomSource::new(4, 0), 1).unwrap();
    assert_eq!(step.ensemble.len(), 40);
    for i in 0..40 {
        assert_eq!(step.ensemble.particle(i), &target[..]);
    }
}

#[test]
fn pf_weights_normalized_and_count_constant() {
    let sc = BearingScenario::default();
    let truth = simulate_truth(&sc, RandomSource::new(2, 0)).unwrap();
    let mut ens = ParticleEnsemble::from_prior(sc.model(), sc.prior(), 2000, RandomSource::new(2, 1)).unwrap();
    for (j, y) in truth.observation_rows().iter().enumerate().take(10) {
        ens = pf_step(&ens, sc.model(), y, RandomSource::new(2, 1), j + 1).unwrap().ensemble;
        assert_eq!(ens.len(), 2000);
        assert!((ens.weights().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn pf_tracks_kalman_mean() {
    let params = LinearGaussianParams::one_d();
    let sc = LinearGaussianScenario::new(params.clone()).unwrap();
    let truth = simulate_truth(&sc, RandomSource::new(5, 0)).unwrap();
    let ys = truth.observation_rows();
    let kf = common::kalman_for(&params, &ys);
    let rng = RandomSource::new(6, 0);
    let mut ens = ParticleEnsemble::from_prior(sc.model(), sc.prior(), 100_000, rng).unwrap();
    for (j, y) in ys.iter().enumerate() {
        let step = pf_step(&ens, sc.model(), y, rng, j + 1).unwrap();
        let dev = (step.mean[0] - kf.means[j + 1][0]).abs();
        assert!(dev <= 3.0 * step.std_error[0], "step {}: {dev} > 3 x {}", j + 1, step.std_error[0]);
        ens = step.ensemble;
    }
}
