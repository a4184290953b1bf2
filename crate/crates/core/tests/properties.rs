use idbm::bundle::{lift, parallel_transport, PathInNRd};
use idbm::config_space::{
    canonicalize, factorial, LabeledConfiguration, Permutation, SpeciesTable, UnorderedConfiguration,
};
use idbm::dynamics::{symmetrized_density, symmetrized_velocity, symmetrized_velocity_labeled, PsiTrack, VelocityLaw};
use idbm::ensemble::{equivariance_report, propagate_ensemble, run_ensemble, sample_initial, EnsembleSpec};
use idbm::wavefunction::{GaussianPacket, WaveFunction};
use proptest::prelude::*;

fn packets(masses: &[f64]) -> Vec<GaussianPacket> {
    masses
        .iter()
        .enumerate()
        .map(|(i, _)| GaussianPacket::new(vec![0.5 * i as f64, -0.2], 0.9 + 0.1 * i as f64, vec![0.3 - 0.2 * i as f64, 0.1]))
        .collect()
}

fn psi(masses: &[f64]) -> WaveFunction {
    WaveFunction::product(SpeciesTable::with_masses(masses).unwrap(), 2, packets(masses)).unwrap()
}

fn configuration(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.5f64..2.5, 2 * n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn canonical_form_ignores_labels(coords in configuration(4), rank in 0usize..24) {
        let c = LabeledConfiguration::new(2, coords).unwrap();
        let sigma = Permutation::from_lehmer_rank(4, rank);
        let (a, _) = canonicalize(&c).unwrap();
        let (b, _) = canonicalize(&c.apply_permutation(&sigma).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn sign_is_multiplicative(a in 0usize..120, b in 0usize..120) {
        let s = Permutation::from_lehmer_rank(5, a);
        let t = Permutation::from_lehmer_rank(5, b);
        prop_assert_eq!(s.compose(&t).unwrap().sign(), s.sign() * t.sign());
    }

    #[test]
    fn symmetrized_velocity_is_representative_independent(coords in configuration(3), rank in 0usize..6) {
        let psi = psi(&[1.0, 2.0, 0.5]);
        let c = LabeledConfiguration::new(2, coords).unwrap();
        let sigma = Permutation::from_lehmer_rank(3, rank);
        let moved = c.apply_permutation(&sigma).unwrap();
        let v = symmetrized_velocity_labeled(&psi, &c).unwrap();
        let w = symmetrized_velocity_labeled(&psi, &moved).unwrap();
        for i in 0..3 {
            for k in 0..2 {
                let (x, y) = (v[i][k], w[sigma.image(i)][k]);
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
        let (q, _) = canonicalize(&c).unwrap();
        prop_assert_eq!(symmetrized_velocity(&psi, &q).unwrap().len(), 3);
    }

    #[test]
    fn fiber_norm_is_the_symmetrized_density(coords in configuration(3)) {
        let psi = psi(&[1.0, 2.0, 0.5]);
        let c = LabeledConfiguration::new(2, coords).unwrap();
        let (q, _) = canonicalize(&c).unwrap();
        let e = lift(&psi, &q).unwrap();
        prop_assert_eq!(e.components().len(), factorial(3));
        let rho = symmetrized_density(&psi, &q).unwrap();
        prop_assert!((e.norm_sqr() - rho).abs() <= 1e-14 * rho.max(1e-300));
    }

    #[test]
    fn transport_preserves_the_norm(radius in 0.01f64..0.2, steps in 8usize..40) {
        let psi = psi(&[1.0, 2.0, 0.5]);
        let q = UnorderedConfiguration::from_points(&[vec![0.0, 0.0], vec![1.0, 0.2], vec![-0.7, 0.9]]).unwrap();
        let e = lift(&psi, &q).unwrap();
        let path = PathInNRd::wiggle_loop(&q, radius, steps).unwrap();
        let moved = parallel_transport(&e, &path).unwrap();
        prop_assert!((moved.norm() - e.norm()).abs() <= 1e-15 * e.norm());
    }
}

fn free_pair(masses: [f64; 2], centers: [f64; 2], widths: [f64; 2], momenta: [f64; 2]) -> WaveFunction {
    WaveFunction::product(
        SpeciesTable::with_masses(&masses).unwrap(),
        1,
        (0..2)
            .map(|i| GaussianPacket::new(vec![centers[i]], widths[i], vec![momenta[i]]))
            .collect(),
    )
    .unwrap()
}

#[test]
fn relabeling_the_ensemble_leaves_canonical_statistics_unchanged() {
    let psi = free_pair([1.0, 2.0], [-1.0, 1.5], [1.0, 0.8], [2.0, -0.5]);
    let swapped = free_pair([2.0, 1.0], [1.5, -1.0], [0.8, 1.0], [-0.5, 2.0]);
    let swap = Permutation::transposition(2, 0, 1);
    let a_track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
    let b_track = PsiTrack::new(&swapped, 1.0, 0.0).unwrap();
    let spec = EnsembleSpec::new(200, 3, VelocityLaw::Standard, vec![1.0]);
    let starts = sample_initial(&psi, 200, 3).unwrap();
    let relabeled: Vec<_> = starts.iter().map(|c| c.apply_permutation(&swap).unwrap()).collect();
    let a = propagate_ensemble(&spec, &a_track, &starts, 0.0).unwrap();
    let b = propagate_ensemble(&spec, &b_track, &relabeled, 0.0).unwrap();
    for (x, y) in a.iter().zip(&b) {
        let qa = canonicalize(&LabeledConfiguration::new(1, x.last_state().unwrap().to_vec()).unwrap()).unwrap().0;
        let qb = canonicalize(&LabeledConfiguration::new(1, y.last_state().unwrap().to_vec()).unwrap()).unwrap().0;
        for (u, v) in qa.coords().iter().zip(qb.coords()) {
            assert!((u - v).abs() < 1e-9, "{u} vs {v}");
        }
    }
}

#[test]
fn reports_are_bitwise_reproducible_across_worker_counts() {
    let psi = free_pair([1.0, 2.0], [-1.0, 1.5], [1.0, 0.8], [2.0, -0.5]);
    let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
    let json = |workers| {
        let spec = EnsembleSpec::new(300, 17, VelocityLaw::IdentityBased, vec![0.5, 1.0]).with_workers(Some(workers));
        let records = run_ensemble(&spec, &psi, &track).unwrap();
        equivariance_report(&spec, &records, &track, 20_000).unwrap().to_json()
    };
    assert_eq!(json(1), json(3));
}
