use std::sync::Arc;

use crate::config_space::SpeciesTable;
use crate::error::{Error, Result};
use crate::wavefunction::{GaussianState, GridState, LocalJet, WaveFunction};

/// ψ_t over a time interval, as seen by the trajectory integrator.
///
/// The analytic backend is evaluated exactly at every stage time. The grid
/// backend precomputes snapshots at a fixed spacing and interpolates jets
/// linearly in time between neighbouring snapshots.
#[derive(Debug, Clone)]
pub struct PsiTrack {
    species: Arc<SpeciesTable>,
    guidance_masses: Vec<f64>,
    dim: usize,
    kind: TrackKind,
}

#[derive(Debug, Clone)]
enum TrackKind {
    Analytic(GaussianState),
    Grid(GridHistory),
}

/// Grid snapshots ψ(t₀ + kδ), k = 0..K.
#[derive(Debug, Clone)]
pub struct GridHistory {
    start: f64,
    spacing: f64,
    snapshots: Vec<Arc<GridState>>,
}

impl GridHistory {
    pub fn build(psi: &WaveFunction, t_end: f64, spacing: f64) -> Result<Self> {
        let grid = psi.as_grid().ok_or(Error::GridRequired)?;
        if !(spacing > 0.0) {
            return Err(Error::NegativeStep(spacing));
        }
        let start = grid.time();
        let count = ((t_end - start) / spacing).ceil().max(0.0) as usize;
        let prop = grid.propagator(psi.species(), spacing);
        let mut snapshots = Vec::with_capacity(count + 1);
        let mut cur = grid.clone();
        snapshots.push(Arc::new(cur.clone()));
        for _ in 0..count {
            cur = cur.step(&prop)?;
            snapshots.push(Arc::new(cur.clone()));
        }
        Ok(Self {
            start,
            spacing,
            snapshots,
        })
    }

    pub fn snapshots(&self) -> &[Arc<GridState>] {
        &self.snapshots
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn end(&self) -> f64 {
        self.start + self.spacing * (self.snapshots.len() - 1) as f64
    }

    /// Index of the bracketing snapshot pair and the interpolation weight.
    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let u = (t - self.start) / self.spacing;
        let last = self.snapshots.len() - 1;
        if u < -1e-9 || u > last as f64 + 1e-9 {
            return Err(Error::InvalidState(format!(
                "time {t} outside the precomputed interval [{}, {}]",
                self.start,
                self.end()
            )));
        }
        if last == 0 {
            return Ok((0, 0.0));
        }
        let k = (u.floor().max(0.0) as usize).min(last - 1);
        Ok((k, (u - k as f64).clamp(0.0, 1.0)))
    }

    fn jet(&self, t: f64, x: &[f64]) -> Result<LocalJet> {
        let (k, w) = self.locate(t)?;
        let a = self.snapshots[k].jet(x)?;
        if w == 0.0 {
            return Ok(a);
        }
        let b = self.snapshots[k + 1].jet(x)?;
        let mix = |p: &crate::wavefunction::Spinor, q: &crate::wavefunction::Spinor| {
            let mut out = p.scale((1.0 - w).into());
            out.add_scaled(w.into(), q);
            out
        };
        Ok(LocalJet {
            value: mix(&a.value, &b.value),
            gradients: a.gradients.iter().zip(&b.gradients).map(|(p, q)| mix(p, q)).collect(),
            dim: a.dim,
        })
    }

    /// Snapshot nearest to t, as a full wave function.
    pub fn nearest(&self, species: &SpeciesTable, t: f64) -> Result<WaveFunction> {
        let (k, w) = self.locate(t)?;
        let idx = if w > 0.5 { k + 1 } else { k };
        WaveFunction::grid(species.clone(), (*self.snapshots[idx]).clone())
    }
}

impl PsiTrack {
    /// Track for ψ₀ over [t(ψ₀), t_end]; `grid_spacing` is the snapshot spacing
    /// used by the grid backend.
    pub fn new(psi: &WaveFunction, t_end: f64, grid_spacing: f64) -> Result<Self> {
        let kind = match (psi.as_gaussian(), psi.as_grid()) {
            (Some(g), _) => TrackKind::Analytic(g.clone()),
            (_, Some(_)) => TrackKind::Grid(GridHistory::build(psi, t_end, grid_spacing)?),
            _ => unreachable!(),
        };
        Ok(Self {
            species: psi.species_arc(),
            guidance_masses: psi.species().masses(),
            dim: psi.dim(),
            kind,
        })
    }

    /// Same ψ_t, but velocities divide currents by these masses instead.
    pub fn with_guidance_masses(mut self, masses: &[f64]) -> Result<Self> {
        if masses.len() != self.species.len() || masses.iter().any(|&m| !(m > 0.0)) {
            return Err(Error::InvalidSpecies("guidance masses must be positive, one per slot".into()));
        }
        self.guidance_masses = masses.to_vec();
        Ok(self)
    }

    pub fn species(&self) -> &SpeciesTable {
        &self.species
    }

    pub fn guidance_masses(&self) -> &[f64] {
        &self.guidance_masses
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.species.len()
    }

    pub fn box_length(&self) -> Option<f64> {
        match &self.kind {
            TrackKind::Analytic(_) => None,
            TrackKind::Grid(h) => Some(h.snapshots[0].length()),
        }
    }

    pub fn grid_history(&self) -> Option<&GridHistory> {
        match &self.kind {
            TrackKind::Grid(h) => Some(h),
            TrackKind::Analytic(_) => None,
        }
    }

    /// Value and gradients of ψ_t at flat coordinates.
    pub fn jet(&self, t: f64, x: &[f64]) -> Result<LocalJet> {
        match &self.kind {
            TrackKind::Analytic(g) => Ok(g.at_time(t).jet(x)),
            TrackKind::Grid(h) => h.jet(t, x),
        }
    }

    /// Wave function at time t (nearest snapshot on the grid).
    pub fn wavefunction_at(&self, t: f64) -> Result<WaveFunction> {
        match &self.kind {
            TrackKind::Analytic(g) => WaveFunction::gaussian((*self.species).clone(), g.at_time(t)),
            TrackKind::Grid(h) => h.nearest(&self.species, t),
        }
    }

    /// An analytic evaluator frozen at time t, for the stage-wise N!-term sums.
    pub(crate) fn frozen(&self, t: f64) -> Frozen<'_> {
        match &self.kind {
            TrackKind::Analytic(g) => Frozen::Analytic(g.at_time(t)),
            TrackKind::Grid(h) => Frozen::Grid(h, t),
        }
    }
}

pub(crate) enum Frozen<'a> {
    Analytic(GaussianState),
    Grid(&'a GridHistory, f64),
}

impl Frozen<'_> {
    pub(crate) fn jet(&self, x: &[f64]) -> Result<LocalJet> {
        match self {
            Frozen::Analytic(g) => Ok(g.jet(x)),
            Frozen::Grid(h, t) => h.jet(*t, x),
        }
    }
}
