use serde::{Deserialize, Serialize};

use crate::config_space::permutations;
use crate::dynamics::VelocityLaw;
use crate::error::{Error, Result};
use crate::wavefunction::{GridState, WaveFunction};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuityResidual {
    /// ‖∂ρ/∂t + Σ_i ∇_i·j_i‖ over the grid.
    pub residual: f64,
    /// ‖ρ‖ over the grid.
    pub density_norm: f64,
    pub relative: f64,
}

/// Node-wise ρ and currents j_{i,k} (index i·d + k).
fn density_and_currents(g: &GridState, hbar: f64, masses: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let s = g.spin_dim();
    let d = g.dim();
    let derivs = g.derivative_arrays();
    let data = g.data();
    let rho = g.density_field();
    let currents = (0..g.axes())
        .map(|a| {
            let f = hbar / masses[a / d];
            (0..g.nodes())
                .map(|node| {
                    let mut im = 0.0;
                    for c in node * s..(node + 1) * s {
                        im += (data[c].conj() * derivs[a][c]).im;
                    }
                    f * im
                })
                .collect()
        })
        .collect();
    (rho, currents)
}

/// Grid fields entering the continuity equation, optionally summed over
/// relabelings: ρ_s(Q) = Σ_σ ρ(σQ) and J_{i}(Q) = Σ_σ j_{σ(i)}(σQ).
struct Fields {
    rho_early: Vec<f64>,
    rho_late: Vec<f64>,
    currents: Vec<Vec<f64>>,
}

fn fields(psi: &WaveFunction, dt: f64) -> Result<(GridState, Fields)> {
    let early = psi.as_grid().ok_or(Error::GridRequired)?;
    let mid_wf = psi.evolve(dt)?;
    let late_wf = mid_wf.evolve(dt)?;
    let mid = mid_wf.as_grid().unwrap().clone();
    let hbar = psi.species().hbar();
    let masses = psi.species().masses();
    let (_, currents) = density_and_currents(&mid, hbar, &masses);
    Ok((
        mid,
        Fields {
            rho_early: early.density_field(),
            rho_late: late_wf.as_grid().unwrap().density_field(),
            currents,
        },
    ))
}

fn symmetrize(g: &GridState, f: Fields) -> Result<Fields> {
    let n = g.n_particles();
    let d = g.dim();
    let mut out = Fields {
        rho_early: vec![0.0; f.rho_early.len()],
        rho_late: vec![0.0; f.rho_late.len()],
        currents: vec![vec![0.0; f.rho_early.len()]; n * d],
    };
    for sigma in permutations(n)? {
        for (acc, v) in out.rho_early.iter_mut().zip(g.permute_field(&f.rho_early, &sigma)) {
            *acc += v;
        }
        for (acc, v) in out.rho_late.iter_mut().zip(g.permute_field(&f.rho_late, &sigma)) {
            *acc += v;
        }
        for i in 0..n {
            for k in 0..d {
                let moved = g.permute_field(&f.currents[sigma.image(i) * d + k], &sigma);
                for (acc, v) in out.currents[i * d + k].iter_mut().zip(moved) {
                    *acc += v;
                }
            }
        }
    }
    Ok(out)
}

/// Pointwise residual field of the continuity equation at t + Δt.
pub fn continuity_residual_field(psi: &WaveFunction, law: VelocityLaw, dt: f64) -> Result<(GridState, Vec<f64>, Vec<f64>)> {
    if !(dt > 0.0) {
        return Err(Error::NegativeStep(dt));
    }
    let (mid, mut f) = fields(psi, dt)?;
    if law == VelocityLaw::IdentityBased {
        f = symmetrize(&mid, f)?;
    }
    let mut residual: Vec<f64> = f
        .rho_late
        .iter()
        .zip(&f.rho_early)
        .map(|(b, a)| (b - a) / (2.0 * dt))
        .collect();
    for (a, j) in f.currents.iter().enumerate() {
        for (r, v) in residual.iter_mut().zip(mid.real_derivative(j, a)) {
            *r += v;
        }
    }
    let rho_mid: Vec<f64> = match law {
        VelocityLaw::Standard => mid.density_field(),
        VelocityLaw::IdentityBased => {
            let base = mid.density_field();
            let mut acc = vec![0.0; base.len()];
            for sigma in permutations(mid.n_particles())? {
                for (x, v) in acc.iter_mut().zip(mid.permute_field(&base, &sigma)) {
                    *x += v;
                }
            }
            acc
        }
    };
    Ok((mid, residual, rho_mid))
}

/// L² residual of ∂ρ/∂t + div j (symmetrized for the identity-based law),
/// with a centered difference over t, t + Δt, t + 2Δt and spectral divergence.
pub fn continuity_residual_scan(psi: &WaveFunction, law: VelocityLaw, dt: f64) -> Result<ContinuityResidual> {
    let (mid, residual, rho) = continuity_residual_field(psi, law, dt)?;
    let vol = mid.cell_volume();
    let l2 = |f: &[f64]| (f.iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
    let residual = l2(&residual);
    let density_norm = l2(&rho);
    Ok(ContinuityResidual {
        residual,
        density_norm,
        relative: residual / density_norm,
    })
}
