//! ψ on labeled configuration space: evaluation, densities, currents and
//! Schrödinger evolution over two interchangeable backends.

mod gaussian;
mod grid;
mod potential;
mod spinor;

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

pub use gaussian::{GaussianPacket, GaussianState, ProductTerm};
pub use grid::{GridPropagator, GridState, RENORMALIZE_DRIFT, UNSTABLE_DRIFT};
pub use potential::{Potential, PotentialTerm};
pub use spinor::{LocalJet, Spinor};

use crate::config_space::{LabeledConfiguration, SpeciesTable};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub enum Backend {
    Gaussian(GaussianState),
    Grid(Arc<GridState>),
}

/// An immutable snapshot of ψ at one time.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    species: Arc<SpeciesTable>,
    dim: usize,
    backend: Backend,
}

impl WaveFunction {
    pub fn gaussian(species: SpeciesTable, state: GaussianState) -> Result<Self> {
        if state.n_particles() != species.len() {
            return Err(Error::SizeMismatch {
                expected: species.len(),
                actual: state.n_particles(),
            });
        }
        Ok(Self {
            dim: state.dim(),
            species: Arc::new(species),
            backend: Backend::Gaussian(state),
        })
    }

    pub fn grid(species: SpeciesTable, state: GridState) -> Result<Self> {
        if state.n_particles() != species.len() {
            return Err(Error::SizeMismatch {
                expected: species.len(),
                actual: state.n_particles(),
            });
        }
        if state.spin_dim() != species.spin_dim() {
            return Err(Error::SizeMismatch {
                expected: species.spin_dim(),
                actual: state.spin_dim(),
            });
        }
        Ok(Self {
            dim: state.dim(),
            species: Arc::new(species),
            backend: Backend::Grid(Arc::new(state)),
        })
    }

    /// Product of packets, one per particle slot.
    pub fn product(species: SpeciesTable, dim: usize, packets: Vec<GaussianPacket>) -> Result<Self> {
        let state = GaussianState::product(&species, dim, packets)?;
        Self::gaussian(species, state)
    }

    pub fn species(&self) -> &SpeciesTable {
        &self.species
    }

    pub fn species_arc(&self) -> Arc<SpeciesTable> {
        self.species.clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.species.len()
    }

    pub fn spin_dim(&self) -> usize {
        self.species.spin_dim()
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn as_grid(&self) -> Option<&GridState> {
        match &self.backend {
            Backend::Grid(g) => Some(g),
            Backend::Gaussian(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&GaussianState> {
        match &self.backend {
            Backend::Gaussian(g) => Some(g),
            Backend::Grid(_) => None,
        }
    }

    pub fn time(&self) -> f64 {
        match &self.backend {
            Backend::Gaussian(g) => g.time(),
            Backend::Grid(g) => g.time(),
        }
    }

    /// Box length for grid states, `None` on ℝ^{dN}.
    pub fn box_length(&self) -> Option<f64> {
        self.as_grid().map(GridState::length)
    }

    fn check(&self, coords: &[f64]) -> Result<()> {
        let expected = self.dim * self.n_particles();
        if coords.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: coords.len(),
            });
        }
        Ok(())
    }

    /// ψ at flat coordinates (slot-major, d per slot).
    pub fn evaluate_coords(&self, coords: &[f64]) -> Result<Spinor> {
        self.check(coords)?;
        match &self.backend {
            Backend::Gaussian(g) => Ok(g.evaluate(coords)),
            Backend::Grid(g) => g.evaluate(coords),
        }
    }

    pub fn evaluate(&self, c: &LabeledConfiguration) -> Result<Spinor> {
        self.check_config(c)?;
        self.evaluate_coords(c.coords())
    }

    pub fn density(&self, c: &LabeledConfiguration) -> Result<f64> {
        Ok(self.evaluate(c)?.norm_sqr())
    }

    pub fn jet_coords(&self, coords: &[f64]) -> Result<LocalJet> {
        self.check(coords)?;
        match &self.backend {
            Backend::Gaussian(g) => Ok(g.jet(coords)),
            Backend::Grid(g) => g.jet(coords),
        }
    }

    pub fn jet(&self, c: &LabeledConfiguration) -> Result<LocalJet> {
        self.check_config(c)?;
        self.jet_coords(c.coords())
    }

    /// ∇_i ψ as d spinors.
    pub fn gradient(&self, c: &LabeledConfiguration, i: usize) -> Result<Vec<Spinor>> {
        let jet = self.jet(c)?;
        self.check_slot(i)?;
        Ok(jet.gradients[i * self.dim..(i + 1) * self.dim].to_vec())
    }

    /// j_i = (ħ/m_i) Im ψ*∇_iψ.
    pub fn current(&self, c: &LabeledConfiguration, i: usize) -> Result<Vec<f64>> {
        let jet = self.jet(c)?;
        self.check_slot(i)?;
        Ok(jet.current(i, self.species.hbar() / self.species.mass(i)))
    }

    /// ∇_i·∇_i ψ at flat coordinates.
    pub fn laplacian_coords(&self, coords: &[f64], i: usize) -> Result<Spinor> {
        self.check(coords)?;
        self.check_slot(i)?;
        match &self.backend {
            Backend::Gaussian(g) => Ok(g.laplacian(coords, i)),
            Backend::Grid(g) => g.laplacian(coords, i),
        }
    }

    /// V·ψ at flat coordinates; the analytic backend is free.
    pub fn potential_term_coords(&self, coords: &[f64]) -> Result<Spinor> {
        match &self.backend {
            Backend::Gaussian(_) => Ok(Spinor::zeros(self.spin_dim())),
            Backend::Grid(g) => {
                let psi = g.evaluate(coords)?;
                Ok(g.potential().apply(coords, self.dim, &self.species, &psi))
            }
        }
    }

    fn check_slot(&self, i: usize) -> Result<()> {
        if i >= self.n_particles() {
            return Err(Error::SizeMismatch {
                expected: self.n_particles(),
                actual: i + 1,
            });
        }
        Ok(())
    }

    fn check_config(&self, c: &LabeledConfiguration) -> Result<()> {
        if c.dim() != self.dim || c.len() != self.n_particles() {
            return Err(Error::SizeMismatch {
                expected: self.n_particles() * self.dim,
                actual: c.len() * c.dim(),
            });
        }
        Ok(())
    }

    /// Advances by Δt ≥ 0; Δt = 0 returns the same state.
    pub fn evolve(&self, dt: f64) -> Result<Self> {
        if dt < 0.0 || !dt.is_finite() {
            return Err(Error::NegativeStep(dt));
        }
        let backend = match &self.backend {
            Backend::Gaussian(g) => Backend::Gaussian(g.at_time(g.time() + dt)),
            Backend::Grid(g) => Backend::Grid(Arc::new(g.evolve(&self.species, dt)?)),
        };
        Ok(Self {
            backend,
            ..self.clone()
        })
    }

    /// Snapshot at absolute time t ≥ current time.
    pub fn at(&self, t: f64) -> Result<Self> {
        match &self.backend {
            Backend::Gaussian(g) => Ok(Self {
                backend: Backend::Gaussian(g.at_time(t)),
                ..self.clone()
            }),
            Backend::Grid(_) => self.evolve(t - self.time()),
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.backend {
            Backend::Gaussian(g) => g.norm(),
            Backend::Grid(g) => g.norm(),
        }
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        let backend = match &self.backend {
            Backend::Gaussian(g) => Backend::Gaussian(g.scaled(z)),
            Backend::Grid(g) => Backend::Grid(Arc::new(g.scaled(z))),
        };
        Self {
            backend,
            ..self.clone()
        }
    }

    /// Same ψ with the slot masses replaced; used for wrong-mass controls.
    pub fn with_masses(&self, masses: &[f64]) -> Result<Self> {
        let species = self.species.with_replaced_masses(masses)?;
        let backend = match &self.backend {
            Backend::Gaussian(_) => {
                return Err(Error::GridRequired);
            }
            Backend::Grid(g) => Backend::Grid(g.clone()),
        };
        Ok(Self {
            species: Arc::new(species),
            dim: self.dim,
            backend,
        })
    }

    /// Samples ψ onto the nodes of a periodic grid and renormalizes.
    pub fn to_grid(&self, n: usize, length: f64, potential: Potential) -> Result<Self> {
        let state = GridState::sample(
            self.dim,
            self.n_particles(),
            n,
            length,
            self.spin_dim(),
            potential,
            |x| self.evaluate_coords(x),
        )?
        .with_time(self.time());
        Self::grid((*self.species).clone(), state)
    }

    /// Marginal density of coordinate `axis` of slot `particle`: exact for the
    /// analytic backend, linearly interpolated node sums on the grid.
    pub fn marginal_density(&self, particle: usize, axis: usize, x: f64) -> Result<f64> {
        self.check_slot(particle)?;
        match &self.backend {
            Backend::Gaussian(g) => Ok(g.marginal_density(particle, axis, x)),
            Backend::Grid(g) => {
                let table = g.marginal_table(particle, axis);
                let h = g.spacing();
                let u = x.rem_euclid(g.length()) / h;
                let j = (u.floor() as usize).min(table.len() - 1);
                let f = u - j as f64;
                Ok(table[j] * (1.0 - f) + table[(j + 1) % table.len()] * f)
            }
        }
    }

    /// A reusable |ψ|² sampler.
    pub fn sampler(&self) -> Sampler<'_> {
        match &self.backend {
            Backend::Gaussian(g) => Sampler::Gaussian(g),
            Backend::Grid(g) => Sampler::Grid {
                grid: g,
                cdf: g.cumulative_density(),
            },
        }
    }
}

pub enum Sampler<'a> {
    Gaussian(&'a GaussianState),
    Grid { grid: &'a GridState, cdf: Vec<f64> },
}

impl Sampler<'_> {
    /// One draw as flat coordinates.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match self {
            Sampler::Gaussian(g) => g.sample(rng),
            Sampler::Grid { grid, cdf } => grid.sample_with(cdf, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config_space::LabeledConfiguration;
    use approx::assert_relative_eq;

    fn two_particle_gaussian() -> WaveFunction {
        let species = SpeciesTable::with_masses(&[1.0, 2.0]).unwrap();
        WaveFunction::product(
            species,
            1,
            vec![
                GaussianPacket::new(vec![16.0], 1.0, vec![0.7]),
                GaussianPacket::new(vec![23.0], 1.3, vec![-0.4]),
            ],
        )
        .unwrap()
    }

    fn l2_difference(grid: &WaveFunction, exact: &WaveFunction) -> f64 {
        let g = grid.as_grid().unwrap();
        let mut acc = 0.0;
        for node in 0..g.nodes() {
            let x = g.node_coords(node);
            acc += g.node_value(node).sub(&exact.evaluate_coords(&x).unwrap()).norm_sqr();
        }
        (acc * g.cell_volume()).sqrt()
    }

    #[test]
    fn phase_scales_values_not_density() {
        let psi = two_particle_gaussian();
        let z = Complex64::from_polar(1.0, 0.9);
        let c = LabeledConfiguration::new(1, vec![16.3, 22.1]).unwrap();
        let a = psi.evaluate(&c).unwrap();
        let b = psi.scaled(z).evaluate(&c).unwrap();
        assert!(a.scale(z).max_abs_diff(&b) < 1e-15);
        assert_relative_eq!(psi.density(&c).unwrap(), psi.scaled(z).density(&c).unwrap(), max_relative = 1e-14);
        assert_relative_eq!(psi.scaled(Complex64::new(2.0, 0.0)).norm(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn packet_center_current_is_momentum_times_density() {
        let species = SpeciesTable::with_masses(&[3.0]).unwrap();
        let psi = WaveFunction::product(species, 2, vec![GaussianPacket::new(vec![0.5, -1.0], 0.8, vec![1.5, -2.0])]).unwrap();
        let c = LabeledConfiguration::new(2, vec![0.5, -1.0]).unwrap();
        let rho = psi.density(&c).unwrap();
        let j = psi.current(&c, 0).unwrap();
        assert_relative_eq!(j[0], 1.5 / 3.0 * rho, max_relative = 1e-13);
        assert_relative_eq!(j[1], -2.0 / 3.0 * rho, max_relative = 1e-13);
        let rest = WaveFunction::product(SpeciesTable::uniform(1, 1.0).unwrap(), 1, vec![GaussianPacket::at_rest(vec![0.0], 1.0)]).unwrap();
        let c0 = LabeledConfiguration::new(1, vec![0.0]).unwrap();
        assert_eq!(rest.gradient(&c0, 0).unwrap()[0].norm_sqr(), 0.0);
        assert_eq!(rest.current(&LabeledConfiguration::new(1, vec![0.4]).unwrap(), 0).unwrap()[0], 0.0);
    }

    #[test]
    fn grid_plane_wave_current_is_exact() {
        let species = SpeciesTable::with_masses(&[2.0]).unwrap();
        let length = 8.0;
        let k = 2.0 * std::f64::consts::PI * 3.0 / length;
        let g = GridState::sample(1, 1, 32, length, 1, Potential::zero(), |x| {
            Ok(Spinor::scalar(Complex64::from_polar(1.0, k * x[0])))
        })
        .unwrap();
        let psi = WaveFunction::grid(species, g).unwrap();
        for x in [0.0, 1.25, 4.5] {
            let c = LabeledConfiguration::new(1, vec![x]).unwrap();
            let rho = psi.density(&c).unwrap();
            assert_relative_eq!(psi.current(&c, 0).unwrap()[0], k / 2.0 * rho, max_relative = 1e-12);
        }
    }

    #[test]
    fn grid_nodes_reproduce_stored_amplitudes() {
        let psi = two_particle_gaussian().to_grid(64, 40.0, Potential::zero()).unwrap();
        let g = psi.as_grid().unwrap();
        for node in [0, 17, 2080, 4095] {
            let x = g.node_coords(node);
            assert_eq!(psi.evaluate_coords(&x).unwrap(), g.node_value(node));
        }
        assert!(psi.evaluate_coords(&[40.0, 1.0]).is_err());
        assert!(psi.evaluate_coords(&[-0.1, 1.0]).is_err());
    }

    #[test]
    fn spectral_derivatives_match_analytic_and_finite_differences() {
        let exact = two_particle_gaussian();
        let psi = exact.to_grid(128, 40.0, Potential::zero()).unwrap();
        let g = psi.as_grid().unwrap();
        let step = 1e-4;
        for node in [128 * 50 + 72, 128 * 52 + 75, 128 * 49 + 70] {
            let x = g.node_coords(node);
            let jet = psi.jet_coords(&x).unwrap();
            let reference = exact.jet_coords(&x).unwrap();
            let scale = reference.gradients.iter().map(|s| s.norm_sqr().sqrt()).fold(0.0, f64::max);
            for a in 0..2 {
                assert!(jet.gradients[a].max_abs_diff(&reference.gradients[a]) < 1e-6 * scale);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[a] += step;
                xm[a] -= step;
                let fd = exact
                    .evaluate_coords(&xp)
                    .unwrap()
                    .sub(&exact.evaluate_coords(&xm).unwrap())
                    .scale(Complex64::new(0.5 / step, 0.0));
                assert!(jet.gradients[a].max_abs_diff(&fd) < 1e-6 * scale);
            }
            for i in 0..2 {
                let lap = psi.laplacian_coords(&x, i).unwrap();
                let want = exact.laplacian_coords(&x, i).unwrap();
                assert!(lap.max_abs_diff(&want) < 1e-6 * scale);
            }
        }
    }

    #[test]
    fn grid_free_evolution_matches_analytic() {
        let exact = two_particle_gaussian();
        let psi = exact.to_grid(128, 40.0, Potential::zero()).unwrap();
        let t = 1.5;
        let evolved = psi.evolve(t).unwrap();
        assert_relative_eq!(evolved.time(), t);
        assert!(l2_difference(&evolved, &exact.at(t).unwrap()) < 1e-6);
        let zero = psi.evolve(0.0).unwrap();
        assert_eq!(zero.as_grid().unwrap().data(), psi.as_grid().unwrap().data());
        assert!(psi.evolve(-1e-3).is_err());
    }

    #[test]
    fn split_step_conserves_norm_over_many_steps() {
        let species = SpeciesTable::new(
            vec![
                crate::config_space::Species::new(1.0, 2, "a"),
                crate::config_space::Species::new(1.5, 1, "b"),
            ],
            1.0,
        )
        .unwrap();
        let potential = Potential::harmonic(0.5, vec![8.0])
            .with_term(PotentialTerm::PairGaussian { strength: 1.0, range: 0.7 })
            .with_term(PotentialTerm::SpinField { field: [0.3, -0.2, 0.5], gradient: 0.1 });
        let up = vec![Complex64::new(0.6, 0.0), Complex64::new(0.0, 0.8)];
        let state = GaussianState::product(
            &species,
            1,
            vec![
                GaussianPacket::new(vec![7.0], 0.8, vec![0.5]).with_spinor(up),
                GaussianPacket::at_rest(vec![9.0], 0.9),
            ],
        )
        .unwrap();
        let psi = WaveFunction::gaussian(species.clone(), state)
            .unwrap()
            .to_grid(32, 16.0, potential)
            .unwrap();
        let g = psi.as_grid().unwrap();
        let prop = g.propagator(&species, 1e-3);
        let mut cur = g.clone();
        for _ in 0..1000 {
            cur = cur.step(&prop).unwrap();
        }
        assert!((cur.norm() - 1.0).abs() < 1e-8);
        assert_relative_eq!(cur.time(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn checkpoint_round_trip_is_bitwise() {
        let psi = two_particle_gaussian().to_grid(16, 40.0, Potential::zero()).unwrap();
        let g = psi.as_grid().unwrap().clone().with_time(0.25);
        let mut bytes = Vec::new();
        g.write_checkpoint(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 48 + 16 * 16 * 16);
        let back = GridState::read_checkpoint(bytes.as_slice(), Potential::zero()).unwrap();
        assert_eq!(back.data(), g.data());
        assert_eq!(back.time(), 0.25);
        assert!(GridState::read_checkpoint(&bytes[..100], Potential::zero()).is_err());
    }

    #[test]
    fn grid_marginal_integrates_to_one() {
        let psi = two_particle_gaussian().to_grid(64, 40.0, Potential::zero()).unwrap();
        let g = psi.as_grid().unwrap();
        for p in 0..2 {
            let total: f64 = g.marginal_table(p, 0).iter().sum::<f64>() * g.spacing();
            assert_relative_eq!(total, 1.0, epsilon = 1e-12);
        }
    }
}
