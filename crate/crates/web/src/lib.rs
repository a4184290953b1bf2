//! WebAssembly bindings for a one-dimensional electron–muon pair.
//!
//! The page plots the configuration plane (x₁, x₂): |ψ_t|² as a heatmap and
//! one trajectory per guidance law on top of it. Identity-based
//! trajectories live on the half-plane x₁ ≤ x₂ because they move unordered
//! point pairs.

use idbm::bundle::{holonomy_sign, lift, project_boson, project_fermion, PathInNRd};
use idbm::config_space::{LabeledConfiguration, Species, SpeciesTable, Statistics, UnorderedConfiguration};
use idbm::dynamics::{integrate_trajectory, IntegratorOptions, PsiTrack, VelocityLaw};
use idbm::wavefunction::{GaussianPacket, WaveFunction};
use wasm_bindgen::prelude::*;

fn message(e: idbm::Error) -> String {
    e.to_string()
}

#[wasm_bindgen]
pub struct PairDemo {
    psi: WaveFunction,
    track: PsiTrack,
    t_end: f64,
}

#[wasm_bindgen]
impl PairDemo {
    /// Light particle at the origin moving with `momentum`, heavy one at
    /// rest at `separation`; both packets have unit width.
    #[wasm_bindgen(constructor)]
    pub fn new(mass_ratio: f64, separation: f64, momentum: f64, t_end: f64) -> Result<PairDemo, String> {
        let species = SpeciesTable::new(
            vec![Species::scalar(1.0, "light"), Species::scalar(mass_ratio, "heavy")],
            1.0,
        )
        .map_err(message)?;
        let psi = WaveFunction::product(
            species,
            1,
            vec![
                GaussianPacket::new(vec![0.0], 1.0, vec![momentum]),
                GaussianPacket::new(vec![separation], 1.0, vec![0.0]),
            ],
        )
        .map_err(message)?;
        let track = PsiTrack::new(&psi, t_end, 0.0).map_err(message)?;
        Ok(PairDemo { psi, track, t_end })
    }

    /// `frames` rows of (t, x₁, x₂), flattened. `law` is "standard" or
    /// "identity_based". Stops early if the trajectory aborts.
    pub fn trajectory(&self, law: &str, x1: f64, x2: f64, frames: usize) -> Result<Vec<f64>, String> {
        let law: VelocityLaw = law.parse()?;
        let frames = frames.max(2);
        let times: Vec<f64> = (1..frames).map(|i| self.t_end * i as f64 / (frames - 1) as f64).collect();
        let start = LabeledConfiguration::new(1, vec![x1, x2]).map_err(message)?;
        let record = integrate_trajectory(law, &self.track, &start, 0.0, &times, &IntegratorOptions::default())
            .map_err(message)?;
        Ok(record
            .times
            .iter()
            .zip(&record.states)
            .flat_map(|(t, x)| [*t, x[0], x[1]])
            .collect())
    }

    /// |ψ_t|² on a `bins` × `bins` grid over [lo, hi]², row-major in x₂,
    /// normalized so the maximum is 1.
    pub fn density_map(&self, t: f64, bins: usize, lo: f64, hi: f64) -> Result<Vec<f64>, String> {
        let psi = self.psi.at(t).map_err(message)?;
        let h = (hi - lo) / bins.max(1) as f64;
        let mut out = Vec::with_capacity(bins * bins);
        for j in 0..bins {
            for i in 0..bins {
                let x = [lo + (i as f64 + 0.5) * h, lo + (j as f64 + 0.5) * h];
                out.push(psi.evaluate_coords(&x).map_err(message)?.norm_sqr());
            }
        }
        let max = out.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            out.iter_mut().for_each(|v| *v /= max);
        }
        Ok(out)
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }
}

/// Sign acquired by a fiber element on the boson ("boson") or fermion
/// ("fermion") subbundle when two of three planar points swap places along
/// a loop discretized into `steps` segments.
#[wasm_bindgen]
pub fn exchange_holonomy(statistics: &str, steps: usize) -> Result<i32, String> {
    let stats = match statistics {
        "boson" => Statistics::Boson,
        "fermion" => Statistics::Fermion,
        other => return Err(format!("unknown statistics {other:?}")),
    };
    let points: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            let a = 2.0 * std::f64::consts::PI * i as f64 / 3.0 + 0.1;
            vec![a.cos(), a.sin()]
        })
        .collect();
    let base = UnorderedConfiguration::from_points(&points).map_err(message)?;
    let species = SpeciesTable::with_masses(&[1.0, 2.0, 3.0]).map_err(message)?;
    let packets = (0..3)
        .map(|i| GaussianPacket::new(vec![0.4 * i as f64, -0.3], 1.0, vec![0.2, 0.1 * i as f64]))
        .collect();
    let psi = WaveFunction::product(species, 2, packets).map_err(message)?;
    let e = lift(&psi, &base).map_err(message)?;
    let e = match stats {
        Statistics::Boson => project_boson(&e),
        Statistics::Fermion => project_fermion(&e),
    }
    .map_err(message)?;
    let path = PathInNRd::exchange_loop(&base, 0, 1, steps).map_err(message)?;
    holonomy_sign(&path, &e, stats).map_err(message)
}
