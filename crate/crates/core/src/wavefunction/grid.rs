//! Spectral grid backend: amplitudes on a periodic uniform grid over
//! [0, L)^{dN}, Strang-split evolution and Fourier-multiplier derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use super::potential::{hermitian_exp, Potential};
use super::spinor::{LocalJet, Spinor};
use crate::config_space::{Permutation, SpeciesTable};
use crate::error::{Error, Result};

/// Norm drift above which a step is renormalized.
pub const RENORMALIZE_DRIFT: f64 = 1e-12;
/// Norm drift above which a step is reported as unstable.
pub const UNSTABLE_DRIFT: f64 = 1e-6;

#[derive(Clone)]
pub struct GridState {
    dim: usize,
    n_particles: usize,
    n: usize,
    length: f64,
    spin_dim: usize,
    time: f64,
    data: Vec<Complex64>,
    potential: Arc<Potential>,
    max_step: f64,
    derivatives: OnceLock<Arc<Vec<Vec<Complex64>>>>,
    laplacians: OnceLock<Arc<Vec<Vec<Complex64>>>>,
}

impl fmt::Debug for GridState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridState")
            .field("dim", &self.dim)
            .field("n_particles", &self.n_particles)
            .field("n", &self.n)
            .field("length", &self.length)
            .field("spin_dim", &self.spin_dim)
            .field("time", &self.time)
            .finish_non_exhaustive()
    }
}

struct Spectral {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Spectral {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

impl GridState {
    /// Builds a grid state from node amplitudes (row-major over the dN axes,
    /// particle-major, spin index fastest).
    pub fn from_amplitudes(
        dim: usize,
        n_particles: usize,
        n: usize,
        length: f64,
        spin_dim: usize,
        data: Vec<Complex64>,
        potential: Potential,
    ) -> Result<Self> {
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidState(format!(
                "grid size {n} must be a power of two"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidState("box length must be positive".into()));
        }
        let expected = n.pow((dim * n_particles) as u32) * spin_dim;
        if data.len() != expected {
            return Err(Error::SizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            dim,
            n_particles,
            n,
            length,
            spin_dim,
            time: 0.0,
            data,
            potential: Arc::new(potential),
            max_step: f64::INFINITY,
            derivatives: OnceLock::new(),
            laplacians: OnceLock::new(),
        })
    }

    /// Samples `f` at every node and normalizes to unit L² norm by quadrature.
    pub fn sample(
        dim: usize,
        n_particles: usize,
        n: usize,
        length: f64,
        spin_dim: usize,
        potential: Potential,
        f: impl Fn(&[f64]) -> Result<Spinor>,
    ) -> Result<Self> {
        let mut g = Self::from_amplitudes(
            dim,
            n_particles,
            n,
            length,
            spin_dim,
            vec![Complex64::new(0.0, 0.0); n.pow((dim * n_particles) as u32) * spin_dim],
            potential,
        )?;
        for node in 0..g.nodes() {
            let x = g.node_coords(node);
            let v = f(&x)?;
            g.data[node * spin_dim..(node + 1) * spin_dim].copy_from_slice(&v.0);
        }
        let norm = g.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("sampled state vanishes on the grid".into()));
        }
        for z in &mut g.data {
            *z /= norm;
        }
        Ok(g)
    }

    pub fn with_max_step(mut self, max_step: f64) -> Self {
        self.max_step = max_step;
        self
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn points_per_axis(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spin_dim(&self) -> usize {
        self.spin_dim
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn axes(&self) -> usize {
        self.dim * self.n_particles
    }

    pub fn nodes(&self) -> usize {
        self.n.pow(self.axes() as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.axes() as i32)
    }

    /// Grid index along each axis of a node.
    pub fn node_index(&self, mut node: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes()];
        for a in (0..self.axes()).rev() {
            idx[a] = node % self.n;
            node /= self.n;
        }
        idx
    }

    pub fn node_from_index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &j| acc * self.n + j)
    }

    pub fn node_coords(&self, node: usize) -> Vec<f64> {
        let h = self.spacing();
        self.node_index(node).iter().map(|&j| j as f64 * h).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n as isize;
        (0..n)
            .map(|j| {
                let m = if j < n / 2 { j } else { j - n };
                2.0 * PI * m as f64 / self.length
            })
            .collect()
    }

    pub fn node_value(&self, node: usize) -> Spinor {
        Spinor(self.data[node * self.spin_dim..(node + 1) * self.spin_dim].to_vec())
    }

    pub fn norm(&self) -> f64 {
        (self.data.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.cell_volume()).sqrt()
    }

    pub fn scaled(&self, z: Complex64) -> Self {
        let mut out = self.fresh(self.data.iter().map(|v| v * z).collect());
        out.time = self.time;
        out
    }

    fn fresh(&self, data: Vec<Complex64>) -> Self {
        self.with_data(self.spin_dim, data)
    }

    fn with_data(&self, spin_dim: usize, data: Vec<Complex64>) -> Self {
        Self {
            dim: self.dim,
            n_particles: self.n_particles,
            n: self.n,
            length: self.length,
            spin_dim,
            time: self.time,
            data,
            potential: self.potential.clone(),
            max_step: self.max_step,
            derivatives: OnceLock::new(),
            laplacians: OnceLock::new(),
        }
    }

    /// Applies the 1D transform along `axis` to every line of `data`.
    fn transform_axis(&self, data: &mut [Complex64], axis: usize, fft: &Arc<dyn Fft<f64>>) {
        let n = self.n;
        let stride = self.n.pow((self.axes() - 1 - axis) as u32) * self.spin_dim;
        let block = stride * n;
        let mut line = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        for outer in (0..data.len()).step_by(block) {
            for inner in 0..stride {
                let base = outer + inner;
                for (j, v) in line.iter_mut().enumerate() {
                    *v = data[base + j * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (j, v) in line.iter().enumerate() {
                    data[base + j * stride] = *v;
                }
            }
        }
    }

    /// Applies a per-wavenumber multiplier along one axis.
    fn axis_multiplier(&self, axis: usize, mult: &[Complex64], spectral: &Spectral) -> Vec<Complex64> {
        let mut out = self.data.clone();
        self.transform_axis(&mut out, axis, &spectral.forward);
        let stride = self.n.pow((self.axes() - 1 - axis) as u32) * self.spin_dim;
        let scale = 1.0 / self.n as f64;
        for (i, v) in out.iter_mut().enumerate() {
            *v *= mult[(i / stride) % self.n] * scale;
        }
        self.transform_axis(&mut out, axis, &spectral.inverse);
        out
    }

    /// ∂ψ/∂x_a for every axis a, computed spectrally and cached.
    pub fn derivative_arrays(&self) -> Arc<Vec<Vec<Complex64>>> {
        self.derivatives
            .get_or_init(|| {
                let spectral = Spectral::new(self.n);
                let nyquist = self.n / 2;
                let mult: Vec<Complex64> = self
                    .wavenumbers()
                    .iter()
                    .enumerate()
                    .map(|(j, &k)| {
                        if j == nyquist {
                            Complex64::new(0.0, 0.0)
                        } else {
                            Complex64::new(0.0, k)
                        }
                    })
                    .collect();
                Arc::new(
                    (0..self.axes())
                        .map(|a| self.axis_multiplier(a, &mult, &spectral))
                        .collect(),
                )
            })
            .clone()
    }

    /// ∇_i·∇_i ψ for every particle i, computed spectrally and cached.
    pub fn laplacian_arrays(&self) -> Arc<Vec<Vec<Complex64>>> {
        self.laplacians
            .get_or_init(|| {
                let spectral = Spectral::new(self.n);
                let mult: Vec<Complex64> = self
                    .wavenumbers()
                    .iter()
                    .map(|&k| Complex64::new(-k * k, 0.0))
                    .collect();
                Arc::new(
                    (0..self.n_particles)
                        .map(|i| {
                            let mut acc = vec![Complex64::new(0.0, 0.0); self.data.len()];
                            for k in 0..self.dim {
                                let second = self.axis_multiplier(i * self.dim + k, &mult, &spectral);
                                for (a, b) in acc.iter_mut().zip(second) {
                                    *a += b;
                                }
                            }
                            acc
                        })
                        .collect(),
                )
            })
            .clone()
    }

    /// Multilinear interpolation stencil: (node, weight) for the 2^{dN} cell
    /// corners around `coords`.
    fn stencil(&self, coords: &[f64]) -> Result<Vec<(usize, f64)>> {
        let axes = self.axes();
        if coords.len() != axes {
            return Err(Error::SizeMismatch {
                expected: axes,
                actual: coords.len(),
            });
        }
        let h = self.spacing();
        let mut lo = Vec::with_capacity(axes);
        let mut frac = Vec::with_capacity(axes);
        for (a, &x) in coords.iter().enumerate() {
            if !(0.0..self.length).contains(&x) {
                return Err(Error::OutOfBox {
                    coordinate: a,
                    value: x,
                    length: self.length,
                });
            }
            let u = x / h;
            let j = (u.floor() as usize).min(self.n - 1);
            lo.push(j);
            frac.push(u - j as f64);
        }
        let mut out = Vec::with_capacity(1 << axes);
        let mut idx = vec![0; axes];
        for corner in 0..(1usize << axes) {
            let mut w = 1.0;
            for a in 0..axes {
                let up = (corner >> (axes - 1 - a)) & 1 == 1;
                idx[a] = if up { (lo[a] + 1) % self.n } else { lo[a] };
                w *= if up { frac[a] } else { 1.0 - frac[a] };
            }
            out.push((self.node_from_index(&idx), w));
        }
        Ok(out)
    }

    fn interpolate(&self, field: &[Complex64], stencil: &[(usize, f64)]) -> Spinor {
        let s = self.spin_dim;
        let mut out = Spinor::zeros(s);
        for &(node, w) in stencil {
            for (o, v) in out.0.iter_mut().zip(&field[node * s..(node + 1) * s]) {
                *o += v * w;
            }
        }
        out
    }

    pub fn evaluate(&self, coords: &[f64]) -> Result<Spinor> {
        let st = self.stencil(coords)?;
        Ok(self.interpolate(&self.data, &st))
    }

    pub fn jet(&self, coords: &[f64]) -> Result<LocalJet> {
        let st = self.stencil(coords)?;
        let ders = self.derivative_arrays();
        Ok(LocalJet {
            value: self.interpolate(&self.data, &st),
            gradients: ders.iter().map(|f| self.interpolate(f, &st)).collect(),
            dim: self.dim,
        })
    }

    pub fn laplacian(&self, coords: &[f64], particle: usize) -> Result<Spinor> {
        let st = self.stencil(coords)?;
        Ok(self.interpolate(&self.laplacian_arrays()[particle], &st))
    }

    /// Builds the reusable Strang-step operators for step `dt`.
    pub fn propagator(&self, species: &SpeciesTable, dt: f64) -> GridPropagator {
        let hbar = species.hbar();
        let s = self.spin_dim;
        let nodes = self.nodes();
        let half = 0.5 * dt;
        let potential = if self.potential.is_zero() {
            HalfPotential::None
        } else if self.potential.is_scalar() {
            HalfPotential::Phases(
                (0..nodes)
                    .map(|node| {
                        let v = self.potential.scalar_at(&self.node_coords(node), self.dim);
                        Complex64::from_polar(1.0, -v * half / hbar)
                    })
                    .collect(),
            )
        } else {
            HalfPotential::Matrices(
                (0..nodes)
                    .map(|node| {
                        let m = self.potential.matrix_at(&self.node_coords(node), self.dim, species);
                        hermitian_exp(&m, half, hbar)
                    })
                    .collect(),
            )
        };
        let k = self.wavenumbers();
        let kinetic = (0..nodes)
            .map(|node| {
                let idx = self.node_index(node);
                let mut e = 0.0;
                for (a, &j) in idx.iter().enumerate() {
                    e += k[j] * k[j] / species.mass(a / self.dim);
                }
                Complex64::from_polar(1.0, -hbar * e * dt / 2.0)
            })
            .collect();
        debug_assert_eq!(s, species.spin_dim());
        GridPropagator {
            dt,
            potential,
            kinetic,
            spectral: Arc::new(Spectral::new(self.n)),
        }
    }

    /// One Strang step with precomputed operators, with norm monitoring.
    pub fn step(&self, prop: &GridPropagator) -> Result<Self> {
        let before = self.norm();
        let mut data = self.data.clone();
        prop.apply_potential(&mut data, self.spin_dim);
        for a in 0..self.axes() {
            self.transform_axis(&mut data, a, &prop.spectral.forward);
        }
        let scale = 1.0 / self.nodes() as f64;
        for (node, chunk) in data.chunks_exact_mut(self.spin_dim).enumerate() {
            let ph = prop.kinetic[node] * scale;
            for v in chunk {
                *v *= ph;
            }
        }
        for a in 0..self.axes() {
            self.transform_axis(&mut data, a, &prop.spectral.inverse);
        }
        prop.apply_potential(&mut data, self.spin_dim);
        let mut out = self.fresh(data);
        out.time = self.time + prop.dt;
        let after = out.norm();
        let drift = if before > 0.0 {
            (after - before).abs() / before
        } else {
            0.0
        };
        if drift > UNSTABLE_DRIFT || !after.is_finite() {
            return Err(Error::UnstableStep { drift });
        }
        if drift > RENORMALIZE_DRIFT {
            let r = before / after;
            for z in &mut out.data {
                *z *= r;
            }
        }
        Ok(out)
    }

    /// Advances by `dt` in ⌈dt / max_step⌉ equal Strang steps.
    pub fn evolve(&self, species: &SpeciesTable, dt: f64) -> Result<Self> {
        if dt < 0.0 || !dt.is_finite() {
            return Err(Error::NegativeStep(dt));
        }
        if dt == 0.0 {
            return Ok(self.clone());
        }
        let steps = if self.max_step.is_finite() {
            (dt / self.max_step).ceil().max(1.0) as usize
        } else {
            1
        };
        let prop = self.propagator(species, dt / steps as f64);
        let mut state = self.step(&prop)?;
        for _ in 1..steps {
            state = state.step(&prop)?;
        }
        state.time = self.time + dt;
        Ok(state)
    }

    /// Node-wise density Σ_s |ψ_s|².
    pub fn density_field(&self) -> Vec<f64> {
        self.data
            .chunks_exact(self.spin_dim)
            .map(|c| c.iter().map(|z| z.norm_sqr()).sum())
            .collect()
    }

    /// Marginal density of one coordinate, tabulated at the n nodes of that axis.
    pub fn marginal_table(&self, particle: usize, axis: usize) -> Vec<f64> {
        let a = particle * self.dim + axis;
        let stride = self.n.pow((self.axes() - 1 - a) as u32);
        let mut out = vec![0.0; self.n];
        for (node, rho) in self.density_field().into_iter().enumerate() {
            out[(node / stride) % self.n] += rho;
        }
        let w = self.cell_volume() / self.spacing();
        out.iter().map(|v| v * w).collect()
    }

    /// Draw from the node density by inverse CDF, jittered uniformly within
    /// the node's cell.
    pub fn sample_with<R: Rng + ?Sized>(&self, cdf: &[f64], rng: &mut R) -> Vec<f64> {
        let total = *cdf.last().unwrap();
        let u = rng.random::<f64>() * total;
        let node = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        let h = self.spacing();
        self.node_coords(node)
            .into_iter()
            .map(|x| {
                let y = x + (rng.random::<f64>() - 0.5) * h;
                y.rem_euclid(self.length)
            })
            .collect()
    }

    pub fn cumulative_density(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.density_field()
            .into_iter()
            .map(|r| {
                acc += r;
                acc
            })
            .collect()
    }

    /// f(σQ) as a function of Q, for a node-wise real field f.
    pub fn permute_field(&self, field: &[f64], sigma: &Permutation) -> Vec<f64> {
        let d = self.dim;
        let inv = sigma.inverse();
        let mut src = vec![0; self.axes()];
        (0..self.nodes())
            .map(|node| {
                let idx = self.node_index(node);
                for j in 0..self.n_particles {
                    let from = inv.image(j);
                    src[j * d..(j + 1) * d].copy_from_slice(&idx[from * d..(from + 1) * d]);
                }
                field[self.node_from_index(&src)]
            })
            .collect()
    }

    /// Spectral derivative along `axis` of a real node-wise field.
    pub fn real_derivative(&self, field: &[f64], axis: usize) -> Vec<f64> {
        let spectral = Spectral::new(self.n);
        let nyquist = self.n / 2;
        let mult: Vec<Complex64> = self
            .wavenumbers()
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                if j == nyquist {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new(0.0, k)
                }
            })
            .collect();
        let scalar = self.with_data(1, field.iter().map(|&x| Complex64::new(x, 0.0)).collect());
        scalar
            .axis_multiplier(axis, &mult, &spectral)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }

    /// Checkpoint layout, all little-endian: u64 d, u64 N, u64 n, f64 L,
    /// u64 dim 𝕎, f64 time, then n^{dN}·dim 𝕎 complex values as (re, im)
    /// f64 pairs in row-major node order with the spin index fastest.
    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> Result<()> {
        for v in [self.dim as u64, self.n_particles as u64, self.n as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&self.length.to_le_bytes())?;
        w.write_all(&(self.spin_dim as u64).to_le_bytes())?;
        w.write_all(&self.time.to_le_bytes())?;
        for z in &self.data {
            w.write_all(&z.re.to_le_bytes())?;
            w.write_all(&z.im.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R, potential: Potential) -> Result<Self> {
        let mut buf = [0u8; 8];
        let mut next = |r: &mut R| -> Result<[u8; 8]> {
            r.read_exact(&mut buf)
                .map_err(|e| Error::Checkpoint(e.to_string()))?;
            Ok(buf)
        };
        let dim = u64::from_le_bytes(next(&mut r)?) as usize;
        let n_particles = u64::from_le_bytes(next(&mut r)?) as usize;
        let n = u64::from_le_bytes(next(&mut r)?) as usize;
        let length = f64::from_le_bytes(next(&mut r)?);
        let spin_dim = u64::from_le_bytes(next(&mut r)?) as usize;
        let time = f64::from_le_bytes(next(&mut r)?);
        if dim == 0 || n_particles == 0 || spin_dim == 0 || dim * n_particles > 16 {
            return Err(Error::Checkpoint("implausible header".into()));
        }
        let count = n
            .checked_pow((dim * n_particles) as u32)
            .and_then(|v| v.checked_mul(spin_dim))
            .ok_or_else(|| Error::Checkpoint("grid size overflows".into()))?;
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            let re = f64::from_le_bytes(next(&mut r)?);
            let im = f64::from_le_bytes(next(&mut r)?);
            data.push(Complex64::new(re, im));
        }
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(Error::Checkpoint(format!("{} trailing bytes", rest.len())));
        }
        Ok(Self::from_amplitudes(dim, n_particles, n, length, spin_dim, data, potential)
            .map_err(|e| Error::Checkpoint(e.to_string()))?
            .with_time(time))
    }
}

enum HalfPotential {
    None,
    Phases(Vec<Complex64>),
    Matrices(Vec<DMatrix<Complex64>>),
}

/// Precomputed operators for repeated Strang steps of one size.
pub struct GridPropagator {
    dt: f64,
    potential: HalfPotential,
    kinetic: Vec<Complex64>,
    spectral: Arc<Spectral>,
}

impl GridPropagator {
    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn apply_potential(&self, data: &mut [Complex64], s: usize) {
        match &self.potential {
            HalfPotential::None => {}
            HalfPotential::Phases(ph) => {
                for (chunk, p) in data.chunks_exact_mut(s).zip(ph) {
                    for v in chunk {
                        *v *= p;
                    }
                }
            }
            HalfPotential::Matrices(ms) => {
                for (chunk, m) in data.chunks_exact_mut(s).zip(ms) {
                    let old = chunk.to_vec();
                    for (r, out) in chunk.iter_mut().enumerate() {
                        *out = (0..s).map(|c| m[(r, c)] * old[c]).sum();
                    }
                }
            }
        }
    }
}
