//! Guidance laws and trajectory integration.

mod integrator;
mod record;
mod track;
mod velocity;

pub use integrator::{
    integrate_trajectory, strong_permutation_invariance_check, trajectory_divergence, Integrator,
    IntegratorOptions, ANALYTIC_TOLERANCE, GRID_TOLERANCE,
};
pub use record::{StepFlags, TrajectoryRecord, TrajectoryStatus};
pub use track::{GridHistory, PsiTrack};
pub use velocity::{
    standard_velocity, symmetrized_density, symmetrized_velocity, symmetrized_velocity_labeled, velocity,
    FieldValue, VelocityLaw,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::{LabeledConfiguration, Permutation, SpeciesTable};
    use crate::wavefunction::{GaussianPacket, Potential, WaveFunction};
    use approx::assert_relative_eq;

    fn sigma_t(s0: f64, t: f64, m: f64) -> f64 {
        s0 * (1.0 + (t / (2.0 * m * s0 * s0)).powi(2)).sqrt()
    }

    fn free_packet(mass: f64, width: f64, k: f64) -> WaveFunction {
        WaveFunction::product(
            SpeciesTable::with_masses(&[mass]).unwrap(),
            1,
            vec![GaussianPacket::new(vec![0.0], width, vec![k])],
        )
        .unwrap()
    }

    #[test]
    fn free_gaussian_trajectory_scales_with_width() {
        let (m, s0, k) = (1.5, 0.7, 0.4);
        let psi = free_packet(m, s0, k);
        let track = PsiTrack::new(&psi, 2.0, 0.0).unwrap();
        let x0 = 0.9;
        let start = LabeledConfiguration::new(1, vec![x0]).unwrap();
        let times = [0.5, 1.0, 2.0];
        let rec = integrate_trajectory(VelocityLaw::Standard, &track, &start, 0.0, &times, &IntegratorOptions::default()).unwrap();
        assert!(rec.is_completed());
        for (row, &t) in times.iter().enumerate() {
            let exact = k / m * t + x0 * sigma_t(s0, t, m) / s0;
            assert!((rec.states[row + 1][0] - exact).abs() < 1e-7, "t={t}");
        }
    }

    #[test]
    fn fixed_step_rk4_is_fourth_order() {
        let (m, s0) = (1.0, 0.5);
        let psi = free_packet(m, s0, 0.0);
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let start = LabeledConfiguration::new(1, vec![0.8]).unwrap();
        let exact = 0.8 * sigma_t(s0, 1.0, m) / s0;
        let errors: Vec<f64> = [0.2, 0.1, 0.05]
            .iter()
            .map(|&h| {
                let rec = integrate_trajectory(VelocityLaw::Standard, &track, &start, 0.0, &[1.0], &IntegratorOptions::fixed(h)).unwrap();
                (rec.states[1][0] - exact).abs()
            })
            .collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
        }
    }

    #[test]
    fn stationary_grid_state_stays_put() {
        let species = SpeciesTable::with_masses(&[1.0]).unwrap();
        let ground = WaveFunction::product(species, 1, vec![GaussianPacket::at_rest(vec![8.0], std::f64::consts::FRAC_1_SQRT_2)])
            .unwrap()
            .to_grid(64, 16.0, Potential::harmonic(1.0, vec![8.0]))
            .unwrap();
        let track = PsiTrack::new(&ground, 1.0, 1e-2).unwrap();
        let start = LabeledConfiguration::new(1, vec![8.6]).unwrap();
        let options = IntegratorOptions::for_track(&track);
        let rec = integrate_trajectory(VelocityLaw::Standard, &track, &start, 0.0, &[0.5, 1.0], &options).unwrap();
        assert!(rec.is_completed());
        for s in &rec.states {
            assert!((s[0] - 8.6).abs() < 1e-5);
        }
    }

    #[test]
    fn leaving_the_box_aborts() {
        let psi = WaveFunction::product(
            SpeciesTable::with_masses(&[1.0]).unwrap(),
            1,
            vec![GaussianPacket::new(vec![4.0], 0.5, vec![6.0])],
        )
        .unwrap()
        .to_grid(64, 8.0, Potential::zero())
        .unwrap();
        let track = PsiTrack::new(&psi, 1.0, 1e-2).unwrap();
        let start = LabeledConfiguration::new(1, vec![4.2]).unwrap();
        let rec = integrate_trajectory(VelocityLaw::Standard, &track, &start, 0.0, &[1.0], &IntegratorOptions::for_track(&track)).unwrap();
        assert_eq!(rec.status, TrajectoryStatus::AbortedOutOfBox);
    }

    fn overlapping_pair() -> WaveFunction {
        WaveFunction::product(
            SpeciesTable::with_masses(&[1.0, 206.8]).unwrap(),
            1,
            vec![
                GaussianPacket::new(vec![0.0], 1.0, vec![1.0]),
                GaussianPacket::new(vec![0.5], 1.0, vec![0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn swapped_labels_follow_identity_law_only() {
        let psi = overlapping_pair();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let start = LabeledConfiguration::new(1, vec![0.2, 0.9]).unwrap();
        let swap = Permutation::transposition(2, 0, 1);
        let times = [0.25, 0.5, 0.75, 1.0];
        let opts = IntegratorOptions::default();
        let identity = strong_permutation_invariance_check(VelocityLaw::IdentityBased, &track, &start, &swap, 0.0, &times, &opts).unwrap();
        let standard = strong_permutation_invariance_check(VelocityLaw::Standard, &track, &start, &swap, 0.0, &times, &opts).unwrap();
        assert!(identity < 1e-7, "{identity}");
        assert!(standard > 1e-5, "{standard}");
        let trivial = strong_permutation_invariance_check(VelocityLaw::IdentityBased, &track, &start, &Permutation::identity(2), 0.0, &times, &opts).unwrap();
        assert_eq!(trivial, 0.0);
    }

    #[test]
    fn identity_records_are_canonical_and_serialize() {
        let psi = overlapping_pair();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let start = LabeledConfiguration::new(1, vec![0.9, 0.2]).unwrap();
        let rec = integrate_trajectory(VelocityLaw::IdentityBased, &track, &start, 0.0, &[0.5, 1.0], &IntegratorOptions::default()).unwrap();
        assert!(rec.states.iter().all(|s| s[0] < s[1]));
        let csv = rec.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,x1_1,x2_1,steps,halvings,node_rejections,status");
        assert_eq!(lines.count(), 3);
        assert_eq!(TrajectoryRecord::from_json(&rec.to_json()).unwrap(), rec);
    }

    #[test]
    fn start_on_a_node_is_rejected() {
        let species = SpeciesTable::uniform(2, 1.0).unwrap();
        let state = crate::wavefunction::GaussianState::symmetrized(
            &species,
            1,
            vec![GaussianPacket::at_rest(vec![-1.0], 1.0), GaussianPacket::at_rest(vec![1.0], 1.0)],
            crate::config_space::Statistics::Fermion,
        )
        .unwrap();
        let psi = WaveFunction::gaussian(species, state).unwrap();
        let track = PsiTrack::new(&psi, 1.0, 0.0).unwrap();
        let start = LabeledConfiguration::new(1, vec![0.3, 0.3]).unwrap();
        let err = integrate_trajectory(VelocityLaw::Standard, &track, &start, 0.0, &[1.0], &IntegratorOptions::default());
        assert!(matches!(err, Err(crate::Error::Node { .. })));
        assert_relative_eq!(psi.norm(), 1.0, epsilon = 1e-12);
    }
}
