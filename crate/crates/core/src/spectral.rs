//! Periodic pseudo-spectral machinery on the square `[0, L)²`.
//!
//! Coefficients are stored row-major as `c[a * n + b]`, where `a` indexes the
//! `x₁` frequency and `b` the `x₂` frequency in FFT order (`0, 1, …, n/2−1,
//! −n/2, …, −1`). They are normalized so that the physical field is
//! `f(x) = Σ_k c_k e^{i k·x}`; the whole-space transform of a field
//! concentrated inside the box is therefore `f̂(k) ≈ L² c_k`, and every norm
//! carries the box measure `L²`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::symbols::SymbolSpec;

/// Spectral coefficients of a real scalar field.
#[derive(Clone, PartialEq)]
pub struct ScalarField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField").field("n", &self.n).finish_non_exhaustive()
    }
}

impl ScalarField {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            coeffs: vec![Complex64::new(0.0, 0.0); n * n],
        }
    }

    pub fn from_coeffs(n: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != n * n {
            return Err(Error::GridMismatch(format!(
                "expected {} coefficients for n = {n}, got {}",
                n * n,
                coeffs.len()
            )));
        }
        Ok(Self { n, coeffs })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &ScalarField, s: f64) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += b * s;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.re == 0.0 && c.im == 0.0)
    }
}

/// Two-component vector field `(f₁, f₂)` in spectral representation.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField(pub ScalarField, pub ScalarField);

impl VectorField {
    pub fn zeros(n: usize) -> Self {
        Self(ScalarField::zeros(n), ScalarField::zeros(n))
    }

    pub fn n(&self) -> usize {
        self.0.n
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self(self.0.scaled(s), self.1.scaled(s))
    }

    pub fn add_scaled(&mut self, other: &VectorField, s: f64) {
        self.0.add_scaled(&other.0, s);
        self.1.add_scaled(&other.1, s);
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero() && self.1.is_zero()
    }
}

/// Collocation grid with its FFT plans and dealiasing mask.
#[derive(Clone)]
pub struct Grid {
    n: usize,
    box_length: f64,
    dealias_max: usize,
    freqs: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("box_length", &self.box_length)
            .field("dealias_max", &self.dealias_max)
            .finish()
    }
}

fn fft_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

impl Grid {
    /// `n` must be even and at least 16.
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 16 || !n.is_multiple_of(2) {
            return Err(Error::Domain(format!("grid size must be even and >= 16, got {n}")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(Error::Domain(format!("box length must be positive, got {box_length}")));
        }
        let mut planner = FftPlanner::new();
        let kappa = 2.0 * std::f64::consts::PI / box_length;
        Ok(Self {
            n,
            box_length,
            // Largest |i| with 3|i| < n: quadratic products stay alias-free.
            dealias_max: (n - 1) / 3,
            freqs: (0..n).map(|i| kappa * fft_index(i, n) as f64).collect(),
            fft: planner.plan_fft_forward(n),
            ifft: planner.plan_fft_inverse(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    /// Box measure `L²`.
    pub fn measure(&self) -> f64 {
        self.box_length * self.box_length
    }

    /// Largest retained integer index under the 2/3 rule.
    pub fn dealias_max(&self) -> usize {
        self.dealias_max
    }

    /// Integer mode indices `(i, j)` of storage slot `idx`.
    pub fn mode_index(&self, idx: usize) -> (i64, i64) {
        (fft_index(idx / self.n, self.n), fft_index(idx % self.n, self.n))
    }

    /// Storage slot of integer mode `(i, j)`.
    pub fn slot(&self, i: i64, j: i64) -> usize {
        let n = self.n as i64;
        (i.rem_euclid(n) * n + j.rem_euclid(n)) as usize
    }

    /// Physical wavenumber `(k₁, k₂)` of storage slot `idx`.
    pub fn wavevector(&self, idx: usize) -> (f64, f64) {
        (self.freqs[idx / self.n], self.freqs[idx % self.n])
    }

    pub fn in_mask(&self, idx: usize) -> bool {
        let (i, j) = self.mode_index(idx);
        i.unsigned_abs() as usize <= self.dealias_max && j.unsigned_abs() as usize <= self.dealias_max
    }

    /// Physical coordinates of node `(j1, j2)`.
    pub fn node(&self, j1: usize, j2: usize) -> (f64, f64) {
        (j1 as f64 * self.spacing(), j2 as f64 * self.spacing())
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.n != self.n {
            return Err(Error::GridMismatch(format!("field has n = {}, grid has n = {}", f.n, self.n)));
        }
        Ok(())
    }

    fn fft2(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        plan.process(buf);
        transpose(buf, self.n);
        plan.process(buf);
        transpose(buf, self.n);
    }

    /// Forward transform of physical values sampled at the nodes.
    pub fn forward(&self, phys: &[f64]) -> ScalarField {
        assert_eq!(phys.len(), self.n * self.n, "physical array size");
        let mut buf: Vec<Complex64> = phys.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft2(&mut buf, &self.fft);
        let scale = 1.0 / (self.n * self.n) as f64;
        for c in &mut buf {
            *c *= scale;
        }
        ScalarField { n: self.n, coeffs: buf }
    }

    /// Inverse transform; returns the real part at the nodes.
    pub fn inverse(&self, f: &ScalarField) -> Vec<f64> {
        assert_eq!(f.n, self.n, "field size");
        let mut buf = f.coeffs.clone();
        self.fft2(&mut buf, &self.ifft);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Samples `f(x₁, x₂)` at the nodes and transforms.
    pub fn sample<F: Fn(f64, f64) -> f64>(&self, f: F) -> ScalarField {
        let n = self.n;
        let mut phys = vec![0.0; n * n];
        for j1 in 0..n {
            for j2 in 0..n {
                let (x1, x2) = self.node(j1, j2);
                phys[j1 * n + j2] = f(x1, x2);
            }
        }
        self.forward(&phys)
    }

    pub fn sample_vector<F: Fn(f64, f64) -> (f64, f64)>(&self, f: F) -> VectorField {
        VectorField(self.sample(|x, y| f(x, y).0), self.sample(|x, y| f(x, y).1))
    }

    /// `∂f/∂x_axis` with `axis ∈ {0, 1}`.
    pub fn derivative(&self, f: &ScalarField, axis: usize) -> ScalarField {
        assert_eq!(f.n, self.n, "field size");
        let coeffs = f
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k1, k2) = self.wavevector(idx);
                let k = if axis == 0 { k1 } else { k2 };
                Complex64::new(0.0, k) * c
            })
            .collect();
        ScalarField { n: self.n, coeffs }
    }

    /// Applies a real per-mode multiplier `m(k₁, k₂)`.
    pub fn apply_multiplier<M: Fn(f64, f64) -> f64>(&self, f: &ScalarField, m: M) -> ScalarField {
        let coeffs = f
            .coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k1, k2) = self.wavevector(idx);
                c * m(k1, k2)
            })
            .collect();
        ScalarField { n: self.n, coeffs }
    }

    /// Scalar curl `∂₁v₂ − ∂₂v₁`.
    pub fn curl2d(&self, v: &VectorField) -> Result<ScalarField> {
        self.check(&v.0)?;
        self.check(&v.1)?;
        Ok(self.curl_unchecked(v))
    }

    pub(crate) fn curl_unchecked(&self, v: &VectorField) -> ScalarField {
        let coeffs = (0..self.n * self.n)
            .map(|idx| {
                let (k1, k2) = self.wavevector(idx);
                Complex64::new(0.0, 1.0) * (v.1.coeffs[idx] * k1 - v.0.coeffs[idx] * k2)
            })
            .collect();
        ScalarField { n: self.n, coeffs }
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let coeffs = (0..self.n * self.n)
            .map(|idx| {
                let (k1, k2) = self.wavevector(idx);
                Complex64::new(0.0, 1.0) * (v.0.coeffs[idx] * k1 + v.1.coeffs[idx] * k2)
            })
            .collect();
        ScalarField { n: self.n, coeffs }
    }

    /// Velocity from a stream function: `(∂₂ψ, −∂₁ψ)`.
    pub fn perp_gradient(&self, psi: &ScalarField) -> VectorField {
        let d2 = self.derivative(psi, 1);
        let d1 = self.derivative(psi, 0);
        VectorField(d2, d1.scaled(-1.0))
    }

    pub fn gradient(&self, phi: &ScalarField) -> VectorField {
        VectorField(self.derivative(phi, 0), self.derivative(phi, 1))
    }

    /// Projection onto divergence-free fields; the mean mode is untouched.
    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        let mut out = v.clone();
        self.leray_in_place(&mut out);
        out
    }

    pub fn leray_in_place(&self, v: &mut VectorField) {
        assert!(v.0.n == self.n && v.1.n == self.n, "field size");
        for idx in 0..self.n * self.n {
            let (k1, k2) = self.wavevector(idx);
            let k2sum = k1 * k1 + k2 * k2;
            if k2sum == 0.0 {
                continue;
            }
            let a = v.0.coeffs[idx];
            let b = v.1.coeffs[idx];
            let kv = (a * k1 + b * k2) / k2sum;
            v.0.coeffs[idx] = a - kv * k1;
            v.1.coeffs[idx] = b - kv * k2;
        }
    }

    /// Zeroes every mode outside the 2/3 mask.
    pub fn apply_mask(&self, f: &mut ScalarField) {
        let kmax = self.dealias_max as i64;
        for (idx, c) in f.coeffs.iter_mut().enumerate() {
            let (i, j) = self.mode_index(idx);
            if i.abs() > kmax || j.abs() > kmax {
                *c = Complex64::new(0.0, 0.0);
            }
        }
    }

    /// Forward transform of a pointwise product followed by the mask.
    pub(crate) fn masked_product_phys(&self, a: &[f64], b: &[f64]) -> ScalarField {
        let prod: Vec<f64> = a.iter().zip(b).map(|(x, y)| x * y).collect();
        let mut f = self.forward(&prod);
        self.apply_mask(&mut f);
        f
    }

    /// Pseudo-spectral product with 2/3-rule truncation; exact for inputs
    /// supported inside the mask.
    pub fn dealiased_product(&self, a: &ScalarField, b: &ScalarField) -> Result<ScalarField> {
        self.check(a)?;
        self.check(b)?;
        Ok(self.masked_product_phys(&self.inverse(a), &self.inverse(b)))
    }

    /// `∫ f g dx` over the box for real fields.
    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        self.measure() * f.coeffs.iter().zip(&g.coeffs).map(|(a, b)| (a * b.conj()).re).sum::<f64>()
    }

    fn weighted_sum<W: Fn(f64) -> f64>(&self, f: &ScalarField, w: W) -> f64 {
        f.coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (k1, k2) = self.wavevector(idx);
                w(k1 * k1 + k2 * k2) * c.norm_sqr()
            })
            .sum::<f64>()
            * self.measure()
    }

    pub fn l2_norm(&self, f: &ScalarField) -> f64 {
        self.weighted_sum(f, |_| 1.0).sqrt()
    }

    /// Inhomogeneous `Hˢ` norm with weight `(1+|k|²)^s`.
    pub fn hs_norm(&self, f: &ScalarField, s: f64) -> f64 {
        self.weighted_sum(f, |k2| (1.0 + k2).powf(s)).sqrt()
    }

    /// Homogeneous `Ḣˢ` norm with weight `|k|^{2s}`.
    pub fn hdot_norm(&self, f: &ScalarField, s: f64) -> f64 {
        self.weighted_sum(f, |k2| k2.powf(s)).sqrt()
    }

    pub fn linf_norm(&self, f: &ScalarField) -> f64 {
        self.inverse(f).iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `‖L^{1/2} f‖_{L²}` with weight `m(|k|) = |k|² g(|k|)`.
    pub fn lhalf_diss_norm(&self, f: &ScalarField, spec: &SymbolSpec) -> f64 {
        self.weighted_sum(f, |k2| spec.multiplier_unchecked(k2.sqrt())).sqrt()
    }

    pub fn norms(&self, f: &ScalarField, s: f64, spec: &SymbolSpec) -> Norms {
        Norms {
            l2: self.l2_norm(f),
            hs: self.hs_norm(f, s),
            hdots: self.hdot_norm(f, s),
            linf: self.linf_norm(f),
            lhalf_diss: self.lhalf_diss_norm(f, spec),
        }
    }

    pub fn vector_l2_sq(&self, v: &VectorField) -> f64 {
        self.weighted_sum(&v.0, |_| 1.0) + self.weighted_sum(&v.1, |_| 1.0)
    }

    pub fn vector_hs_norm(&self, v: &VectorField, s: f64) -> f64 {
        (self.hs_norm(&v.0, s).powi(2) + self.hs_norm(&v.1, s).powi(2)).sqrt()
    }

    /// Max over nodes of the Euclidean magnitude.
    pub fn vector_linf(&self, v: &VectorField) -> f64 {
        let a = self.inverse(&v.0);
        let b = self.inverse(&v.1);
        a.iter().zip(&b).fold(0.0, |m, (x, y)| m.max(x.hypot(*y)))
    }

    pub fn vector_lhalf_sq(&self, v: &VectorField, spec: &SymbolSpec) -> f64 {
        self.lhalf_diss_norm(&v.0, spec).powi(2) + self.lhalf_diss_norm(&v.1, spec).powi(2)
    }

    /// `max_k |c(−k) − conj c(k)| / max_k |c(k)|` over modes with a partner.
    pub fn hermitian_defect(&self, f: &ScalarField) -> f64 {
        let scale = f.coeffs.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let half = self.n as i64 / 2;
        let mut worst: f64 = 0.0;
        for idx in 0..self.n * self.n {
            let (i, j) = self.mode_index(idx);
            if i == -half || j == -half {
                continue;
            }
            let partner = f.coeffs[self.slot(-i, -j)];
            worst = worst.max((partner - f.coeffs[idx].conj()).norm());
        }
        worst / scale
    }

    /// `max_k |k·v̂(k)| / (|k| |v̂(k)|)` over nonzero modes.
    pub fn divergence_defect(&self, v: &VectorField) -> f64 {
        let mut worst: f64 = 0.0;
        for idx in 0..self.n * self.n {
            let (k1, k2) = self.wavevector(idx);
            let kk = k1.hypot(k2);
            let mag = v.0.coeffs[idx].norm().hypot(v.1.coeffs[idx].norm());
            if kk == 0.0 || mag == 0.0 {
                continue;
            }
            let kv = (v.0.coeffs[idx] * k1 + v.1.coeffs[idx] * k2).norm();
            worst = worst.max(kv / (kk * mag));
        }
        worst
    }

    /// Seeded real field with independent random coefficients on the integer
    /// modes `0 < max(|i|, |j|) ≤ band`, amplitudes decaying like
    /// `(1 + i² + j²)^{−decay/2}`.
    pub fn random_band_scalar(&self, band: usize, decay: f64, seed: u64) -> ScalarField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = ScalarField::zeros(self.n);
        let b = band.min(self.n / 2 - 1) as i64;
        for i in 0..=b {
            for j in -b..=b {
                if i == 0 && j <= 0 {
                    continue;
                }
                let amp = (1.0 + (i * i + j * j) as f64).powf(-0.5 * decay);
                let c = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * amp;
                f.coeffs[self.slot(i, j)] = c;
                f.coeffs[self.slot(-i, -j)] = c.conj();
            }
        }
        f
    }

    /// Divergence-free field `∇^⊥ψ` from a random stream function.
    pub fn random_band_divfree(&self, band: usize, decay: f64, seed: u64) -> VectorField {
        let psi = self.random_band_scalar(band, decay + 1.0, seed);
        self.perp_gradient(&psi)
    }
}

/// Norm bundle of one scalar field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub l2: f64,
    pub hs: f64,
    pub hdots: f64,
    pub linf: f64,
    pub lhalf_diss: f64,
}

const SNAPSHOT_MAGIC: &[u8; 4] = b"GMHD";
pub const SNAPSHOT_VERSION: u32 = 1;

/// Writes the binary snapshot: magic, version (u32), n (u32), box length
/// (f64), then one row-major block of little-endian `(re, im)` pairs per
/// component.
pub fn write_snapshot(path: impl AsRef<Path>, grid: &Grid, components: &[&ScalarField]) -> Result<()> {
    let bytes = encode_snapshot(grid, components)?;
    std::fs::File::create(path.as_ref())?.write_all(&bytes)?;
    Ok(())
}

pub fn encode_snapshot(grid: &Grid, components: &[&ScalarField]) -> Result<Vec<u8>> {
    let n = grid.n();
    let mut out = Vec::with_capacity(20 + components.len() * n * n * 16);
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
    for f in components {
        grid.check(f)?;
        for c in f.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    Ok(out)
}

/// Decoded snapshot contents.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub n: usize,
    pub box_length: f64,
    pub components: Vec<ScalarField>,
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let mut bytes = Vec::new();
    std::fs::File::open(path.as_ref())?.read_to_end(&mut bytes)?;
    decode_snapshot(&bytes)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    if bytes.len() < 20 || &bytes[..4] != SNAPSHOT_MAGIC {
        return Err(Error::Format("not a GMHD snapshot".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported snapshot version {version}")));
    }
    let n = u32_at(8) as usize;
    let box_length = f64_at(12);
    let block = n * n * 16;
    let body = bytes.len() - 20;
    if n == 0 || !body.is_multiple_of(block) {
        return Err(Error::Format(format!("snapshot body of {body} bytes is not a whole number of {n}x{n} blocks")));
    }
    let components = (0..body / block)
        .map(|c| {
            let base = 20 + c * block;
            let coeffs = (0..n * n)
                .map(|i| Complex64::new(f64_at(base + 16 * i), f64_at(base + 16 * i + 8)))
                .collect();
            ScalarField { n, coeffs }
        })
        .collect();
    Ok(Snapshot { n, box_length, components })
}
