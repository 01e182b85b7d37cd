//! Decode-and-forward with list decoding at the relay (interference at the
//! relay, known at the destination).
//!
//! The relay cannot remove `S`, so it MMSE-scales, adds the quantization
//! dither and decodes a *list*: the Λq points inside a Λc cell around the
//! processed signal. That list contains `v = (t + Qq(α1·S + Uq)) mod Λ`
//! whenever the effective noise is small. The relay forwards an index for
//! the list at rate `Rq`; the destination, which knows `S`, strips the
//! integer part `Qq(α1·S + Uq)` from each list entry and keeps the unique
//! entry that lands on Λc.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{centered_mod, CodebookKind, CodewordIndex, NestedChain};

/// MMSE scaling coefficient `S/(S+1)` for a link of SNR `S`.
pub fn mmse_coefficient(snr: f64) -> f64 {
    snr / (snr + 1.0)
}

/// Common randomness and message for one Model 1 block.
#[derive(Debug, Clone)]
pub struct Model1State {
    pub chain: NestedChain,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Channel dither, uniform on V(Λ); shared source↔relay.
    pub u1: Vec<f64>,
    /// Quantization dither, uniform on V(Λq); shared relay↔destination.
    pub uq: Vec<f64>,
    /// Second-hop dither, uniform on V(Λ); shared relay↔destination.
    pub u2: Vec<f64>,
    pub message: CodewordIndex,
    pub codeword: Vec<f64>,
}

/// The relay's list decision.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayList {
    /// Quant-codebook index of the list anchor; this is what hop 2 carries.
    pub index: CodewordIndex,
    pub points: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResolveFailure {
    NoSurvivor,
    Ambiguous(usize),
}

impl Model1State {
    pub fn new(
        chain: NestedChain,
        message: CodewordIndex,
        alpha1: f64,
        alpha2: f64,
        u1: Vec<f64>,
        uq: Vec<f64>,
        u2: Vec<f64>,
    ) -> Result<Self> {
        let n = chain.dim();
        for v in [&u1, &uq, &u2] {
            check_dim(n, v.len())?;
        }
        for a in [alpha1, alpha2] {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::Config(format!("MMSE coefficient must lie in (0, 1], got {a}")));
            }
        }
        let codeword = chain.codeword(CodebookKind::Message, &message)?;
        Ok(Self { chain, alpha1, alpha2, u1, uq, u2, message, codeword })
    }

    /// Fresh uniform message and dithers.
    pub fn sample<R: Rng + ?Sized>(chain: NestedChain, alpha1: f64, alpha2: f64, rng: &mut R) -> Result<Self> {
        let message = CodewordIndex::random(chain.k1(), chain.dim(), rng);
        let u1 = chain.coarse().sample_dither(rng);
        let uq = chain.quant().sample_dither(rng);
        let u2 = chain.coarse().sample_dither(rng);
        Self::new(chain, message, alpha1, alpha2, u1, uq, u2)
    }

    /// `X1 = (t + U1) mod Λ`.
    pub fn encode_source(&self) -> Vec<f64> {
        let lat = self.chain.coarse();
        self.codeword.iter().zip(&self.u1).map(|(t, u)| lat.reduce(t + u)).collect()
    }

    /// `Y2' = (α1·Y2 + Uq − U1) mod Λ`.
    pub fn relay_scale(&self, y2: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), y2.len())?;
        let lat = self.chain.coarse();
        Ok(y2
            .iter()
            .zip(&self.uq)
            .zip(&self.u1)
            .map(|((y, uq), u1)| lat.reduce(self.alpha1 * y + uq - u1))
            .collect())
    }

    /// Λq points inside `Y2' + V(Λc)`, reduced mod Λ, plus the list index.
    pub fn relay_list(&self, y2p: &[f64]) -> Result<RelayList> {
        let anchor = self.chain.list_anchor(y2p)?;
        let index = self.chain.index_of(CodebookKind::Quant, &anchor)?;
        let points = self.chain.list_from_anchor(&anchor)?;
        Ok(RelayList { index, points })
    }

    /// The list the destination rebuilds from a decoded index.
    pub fn list_for_index(&self, index: &CodewordIndex) -> Result<Vec<Vec<f64>>> {
        let anchor = self.chain.codeword(CodebookKind::Quant, index)?;
        self.chain.list_from_anchor(&anchor)
    }

    /// `X2 = (q[u] + U2) mod Λ`, a nested (Λ, Λq) codeword at rate `Rq`.
    pub fn hop2_encode(&self, index: &CodewordIndex) -> Result<Vec<f64>> {
        let point = self.chain.codeword(CodebookKind::Quant, index)?;
        let lat = self.chain.coarse();
        Ok(point.iter().zip(&self.u2).map(|(p, u)| lat.reduce(p + u)).collect())
    }

    /// Index of `Qq((α2·Y3 − U2) mod Λ) mod Λ`.
    pub fn hop2_decode(&self, y3: &[f64]) -> Result<CodewordIndex> {
        check_dim(self.chain.dim(), y3.len())?;
        let lat = self.chain.coarse();
        let scaled: Vec<f64> = y3
            .iter()
            .zip(&self.u2)
            .map(|(y, u)| lat.reduce(self.alpha2 * y - u))
            .collect();
        self.chain.index_of(CodebookKind::Quant, &scaled)
    }

    /// `Qq(α1·S + Uq)` as integer Λq coordinates.
    fn interference_coords(&self, s: &[f64]) -> Vec<i64> {
        let q = self.chain.quant();
        s.iter()
            .zip(&self.uq)
            .map(|(s, uq)| q.coord(self.alpha1 * s + uq) as i64)
            .collect()
    }

    /// `v = (t + Qq(α1·S + Uq)) mod Λ`, the point the list must contain.
    pub fn list_target(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), s.len())?;
        let kq = (self.chain.k1() * self.chain.k2()) as i64;
        let delta = self.chain.quant().scale();
        let t = self.chain.quant_coords(&self.codeword);
        Ok(t.iter()
            .zip(self.interference_coords(s))
            .map(|(&t, q)| centered_mod(t + q, kq) as f64 * delta)
            .collect())
    }

    /// Strips `Qq(α1·S + Uq)` from every list entry and keeps the entries
    /// that land on Λc. Exactly one survivor decodes; anything else fails.
    pub fn resolve(&self, list: &[Vec<f64>], s: &[f64]) -> Result<Result<Vec<f64>, ResolveFailure>> {
        check_dim(self.chain.dim(), s.len())?;
        let k2 = self.chain.k2() as i64;
        let kq = self.chain.k1() as i64 * k2;
        let delta = self.chain.quant().scale();
        let shift = self.interference_coords(s);
        let mut survivors: Vec<Vec<i64>> = Vec::new();
        for entry in list {
            check_dim(self.chain.dim(), entry.len())?;
            let c: Vec<i64> = self
                .chain
                .quant_coords(entry)
                .iter()
                .zip(&shift)
                .map(|(&m, &q)| centered_mod(m - q, kq))
                .collect();
            if c.iter().all(|&ci| ci.rem_euclid(k2) == 0) && !survivors.contains(&c) {
                survivors.push(c);
            }
        }
        Ok(match survivors.len() {
            0 => Err(ResolveFailure::NoSurvivor),
            1 => Ok(survivors[0].iter().map(|&m| m as f64 * delta).collect()),
            k => Err(ResolveFailure::Ambiguous(k)),
        })
    }
}
