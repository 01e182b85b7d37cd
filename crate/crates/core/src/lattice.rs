//! Self-similar nested lattice chains `Λ ⊆ Λc ⊆ Λq` built from scaled
//! integer lattices `a·Zⁿ`.
//!
//! Every lattice here has the half-open cube `[−a/2, a/2)ⁿ` as its
//! fundamental region. Quantization rounds exact half points up, which is
//! what keeps `x mod Λ` inside that cube.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Default upper bound on the number of points [`NestedChain::enumerate_codebook`]
/// will materialize.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1 << 20;

/// The lattice `a·Zⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaledLattice {
    dim: usize,
    scale: f64,
}

impl ScaledLattice {
    pub fn new(dim: usize, scale: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("lattice dimension must be positive".into()));
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Config(format!("lattice scale must be positive, got {scale}")));
        }
        Ok(Self { dim, scale })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Volume of the fundamental region, `aⁿ`.
    pub fn volume(&self) -> f64 {
        self.scale.powi(self.dim as i32)
    }

    /// Second moment per dimension of the uniform distribution on the
    /// fundamental cube, `a²/12`.
    pub fn second_moment(&self) -> f64 {
        self.scale * self.scale / 12.0
    }

    /// Integer coordinate of the nearest lattice point to the scalar `x`.
    #[inline]
    pub(crate) fn coord(&self, x: f64) -> f64 {
        (x / self.scale + 0.5).floor()
    }

    /// `x mod a` folded into `[−a/2, a/2)`.
    #[inline]
    pub fn reduce(&self, x: f64) -> f64 {
        let half = 0.5 * self.scale;
        let mut r = x - self.scale * self.coord(x);
        // floating point can leave r a hair outside the cube
        if r >= half {
            r -= self.scale;
        } else if r < -half {
            r += self.scale;
        }
        r
    }

    pub fn nearest_point(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(x.iter().map(|&v| self.scale * self.coord(v)).collect())
    }

    pub fn mod_lattice(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim, x.len())?;
        Ok(x.iter().map(|&v| self.reduce(v)).collect())
    }

    /// Draws a dither uniform over the fundamental cube.
    pub fn sample_dither<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let half = 0.5 * self.scale;
        (0..self.dim).map(|_| rng.random_range(-half..half)).collect()
    }

    /// Membership test with an absolute tolerance measured in units of the scale.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim
            && x.iter().all(|&v| {
                let q = v / self.scale;
                (q - q.round()).abs() <= tol
            })
    }
}

/// Which codebook of the chain: message points `Λc ∩ V(Λ)` or
/// quantization points `Λq ∩ V(Λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CodebookKind {
    Message,
    Quant,
}

/// Mixed-radix address of a codebook point: one digit per dimension.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodewordIndex {
    digits: Vec<u32>,
    radix: u32,
}

impl CodewordIndex {
    pub fn new(digits: Vec<u32>, radix: u32) -> Result<Self> {
        if radix == 0 {
            return Err(Error::Input("radix must be positive".into()));
        }
        if let Some(d) = digits.iter().find(|&&d| d >= radix) {
            return Err(Error::Input(format!("digit {d} out of range for radix {radix}")));
        }
        Ok(Self { digits, radix })
    }

    /// Decodes a little-endian ordinal `w ∈ [0, radixⁿ)`.
    pub fn from_ordinal(mut w: u128, radix: u32, dim: usize) -> Result<Self> {
        let r = radix as u128;
        let mut digits = Vec::with_capacity(dim);
        for _ in 0..dim {
            digits.push((w % r) as u32);
            w /= r;
        }
        if w != 0 {
            return Err(Error::Input(format!("ordinal out of range for {radix}^{dim}")));
        }
        Self::new(digits, radix)
    }

    pub fn ordinal(&self) -> u128 {
        self.digits
            .iter()
            .rev()
            .fold(0u128, |acc, &d| acc * self.radix as u128 + d as u128)
    }

    pub fn random<R: Rng + ?Sized>(radix: u32, dim: usize, rng: &mut R) -> Self {
        let digits = (0..dim).map(|_| rng.random_range(0..radix)).collect();
        Self { digits, radix }
    }

    pub fn digits(&self) -> &[u32] {
        &self.digits
    }

    pub fn radix(&self) -> u32 {
        self.radix
    }
}

/// Lowest integer coordinate of the centred coset representatives for radix `k`.
#[inline]
fn first_digit_offset(k: u32) -> i64 {
    -((k / 2) as i64)
}

/// Centred residue of `m` modulo `k`, in `[−⌊k/2⌋, k − ⌊k/2⌋)`.
#[inline]
pub(crate) fn centered_mod(m: i64, k: i64) -> i64 {
    let lo = -(k / 2);
    (m - lo).rem_euclid(k) + lo
}

/// The chain `Λ = a·Zⁿ ⊆ Λc = (a/k1)·Zⁿ ⊆ Λq = (a/(k1·k2))·Zⁿ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NestedChain {
    coarse: ScaledLattice,
    fine: ScaledLattice,
    quant: ScaledLattice,
    k1: u32,
    k2: u32,
}

impl NestedChain {
    /// Builds the chain whose coarse lattice has second moment `power`.
    pub fn build(dim: usize, k1: u32, k2: u32, power: f64) -> Result<Self> {
        if !(power.is_finite() && power > 0.0) {
            return Err(Error::Config(format!("power must be positive, got {power}")));
        }
        if k1 < 2 {
            return Err(Error::Config(format!("k1 must be at least 2, got {k1}")));
        }
        if k2 < 1 {
            return Err(Error::Config("k2 must be at least 1".into()));
        }
        let a = (12.0 * power).sqrt();
        let coarse = ScaledLattice::new(dim, a)?;
        let fine = ScaledLattice::new(dim, a / k1 as f64)?;
        let quant = ScaledLattice::new(dim, a / (k1 as f64 * k2 as f64))?;
        Ok(Self { coarse, fine, quant, k1, k2 })
    }

    pub fn dim(&self) -> usize {
        self.coarse.dim
    }
    pub fn coarse(&self) -> &ScaledLattice {
        &self.coarse
    }
    pub fn fine(&self) -> &ScaledLattice {
        &self.fine
    }
    pub fn quant(&self) -> &ScaledLattice {
        &self.quant
    }
    pub fn k1(&self) -> u32 {
        self.k1
    }
    pub fn k2(&self) -> u32 {
        self.k2
    }

    /// Message rate `(1/n)·log2(V(Λ)/V(Λc))` in bits per dimension.
    pub fn message_rate(&self) -> f64 {
        (self.coarse.volume() / self.fine.volume()).log2() / self.dim() as f64
    }

    /// Rate of the quantization codebook `(1/n)·log2(V(Λ)/V(Λq))`.
    pub fn quant_rate(&self) -> f64 {
        (self.coarse.volume() / self.quant.volume()).log2() / self.dim() as f64
    }

    pub fn nesting_ratio(&self) -> f64 {
        (self.coarse.volume() / self.fine.volume()).powf(1.0 / self.dim() as f64)
    }

    pub fn radix(&self, kind: CodebookKind) -> u32 {
        match kind {
            CodebookKind::Message => self.k1,
            CodebookKind::Quant => self.k1 * self.k2,
        }
    }

    fn lattice(&self, kind: CodebookKind) -> &ScaledLattice {
        match kind {
            CodebookKind::Message => &self.fine,
            CodebookKind::Quant => &self.quant,
        }
    }

    pub fn codebook_size(&self, kind: CodebookKind) -> u128 {
        (self.radix(kind) as u128).saturating_pow(self.dim() as u32)
    }

    /// The codebook point addressed by `index`.
    pub fn codeword(&self, kind: CodebookKind, index: &CodewordIndex) -> Result<Vec<f64>> {
        let k = self.radix(kind);
        if index.radix != k {
            return Err(Error::Input(format!("index radix {} does not match codebook radix {k}", index.radix)));
        }
        check_dim(self.dim(), index.digits.len())?;
        let step = self.lattice(kind).scale;
        let off = first_digit_offset(k);
        Ok(index.digits.iter().map(|&d| (off + d as i64) as f64 * step).collect())
    }

    /// Address of the codebook coset containing `x`: quantize to the
    /// codebook lattice, then reduce mod Λ.
    pub fn index_of(&self, kind: CodebookKind, x: &[f64]) -> Result<CodewordIndex> {
        check_dim(self.dim(), x.len())?;
        let k = self.radix(kind);
        let lat = self.lattice(kind);
        let off = first_digit_offset(k);
        let digits = x
            .iter()
            .map(|&v| {
                let m = centered_mod(lat.coord(v) as i64, k as i64);
                (m - off) as u32
            })
            .collect();
        Ok(CodewordIndex { digits, radix: k })
    }

    /// All coset representatives of the chosen codebook, ordered by ordinal.
    pub fn enumerate_codebook(&self, kind: CodebookKind, cap: u64) -> Result<Vec<Vec<f64>>> {
        let size = self.codebook_size(kind);
        if size > cap as u128 {
            return Err(Error::Capacity { size, cap });
        }
        let k = self.radix(kind);
        (0..size)
            .map(|w| {
                let idx = CodewordIndex::from_ordinal(w, k, self.dim())?;
                self.codeword(kind, &idx)
            })
            .collect()
    }

    /// Integer coordinates, in units of the Λq spacing, of the corner of the
    /// list region `center + V(Λc)`: the smallest `m` with `m·δ ≥ c − k2·δ/2`.
    fn region_corner(&self, center: &[f64]) -> Vec<i64> {
        let delta = self.quant.scale;
        let half = 0.5 * self.k2 as f64;
        center.iter().map(|&c| (c / delta - half).ceil() as i64).collect()
    }

    /// Corner Λq point of the list region around `center`, reduced mod Λ.
    /// This point alone determines the whole list.
    pub fn list_anchor(&self, center: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), center.len())?;
        let kq = (self.k1 * self.k2) as i64;
        let delta = self.quant.scale;
        Ok(self
            .region_corner(center)
            .into_iter()
            .map(|m| centered_mod(m, kq) as f64 * delta)
            .collect())
    }

    /// The `k2ⁿ` Λq points `anchor + j·δ`, `j ∈ {0..k2}ⁿ`, reduced mod Λ.
    pub fn list_from_anchor(&self, anchor: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.dim(), anchor.len())?;
        let kq = (self.k1 * self.k2) as i64;
        let k2 = self.k2 as usize;
        let delta = self.quant.scale;
        let base: Vec<i64> = anchor.iter().map(|&v| self.quant.coord(v) as i64).collect();
        let n = self.dim();
        let count = k2.pow(n as u32);
        let mut out = Vec::with_capacity(count);
        let mut offs = vec![0usize; n];
        for _ in 0..count {
            out.push(
                base.iter()
                    .zip(&offs)
                    .map(|(&b, &j)| centered_mod(b + j as i64, kq) as f64 * delta)
                    .collect(),
            );
            for o in offs.iter_mut() {
                *o += 1;
                if *o < k2 {
                    break;
                }
                *o = 0;
            }
        }
        Ok(out)
    }

    /// All Λq points in `center + V(Λc)`, reduced mod Λ.
    pub fn enumerate_fine_in_region(&self, center: &[f64]) -> Result<Vec<Vec<f64>>> {
        let anchor = self.list_anchor(center)?;
        self.list_from_anchor(&anchor)
    }

    /// Integer Λq coordinates of a point that lies on Λq.
    pub(crate) fn quant_coords(&self, p: &[f64]) -> Vec<i64> {
        p.iter().map(|&v| (v / self.quant.scale).round() as i64).collect()
    }
}
