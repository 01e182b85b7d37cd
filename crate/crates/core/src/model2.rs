//! Decode-and-forward with interference pre-cancellation at the source
//! (interference at the destination, known at the source).
//!
//! The source subtracts the Λq-quantized, MMSE-scaled interference from its
//! codeword before dithering. The relay decodes that shifted Λq point and
//! re-encodes it; at the destination the channel adds `S` back, which
//! cancels the integer part and leaves the residual `(α2·S + Uq) mod Λq`
//! as extra noise.

use rand::Rng;

use crate::error::{check_dim, Error, Result};
use crate::lattice::{centered_mod, CodebookKind, CodewordIndex, NestedChain};

#[derive(Debug, Clone)]
pub struct Model2State {
    pub chain: NestedChain,
    pub alpha1: f64,
    pub alpha2: f64,
    /// Uniform on V(Λ); shared source↔relay.
    pub u1: Vec<f64>,
    /// Uniform on V(Λq); shared source↔destination.
    pub uq: Vec<f64>,
    /// Uniform on V(Λ); shared relay↔destination.
    pub u2: Vec<f64>,
    pub message: CodewordIndex,
    pub codeword: Vec<f64>,
}

impl Model2State {
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

    pub fn sample<R: Rng + ?Sized>(chain: NestedChain, alpha1: f64, alpha2: f64, rng: &mut R) -> Result<Self> {
        let message = CodewordIndex::random(chain.k1(), chain.dim(), rng);
        let u1 = chain.coarse().sample_dither(rng);
        let uq = chain.quant().sample_dither(rng);
        let u2 = chain.coarse().sample_dither(rng);
        Self::new(chain, message, alpha1, alpha2, u1, uq, u2)
    }

    /// `T = (t − Qq(α2·S + Uq)) mod Λ`, computed on integer Λq coordinates.
    pub fn shifted_codeword(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), s.len())?;
        let q = self.chain.quant();
        let kq = (self.chain.k1() * self.chain.k2()) as i64;
        let t = self.chain.quant_coords(&self.codeword);
        Ok(t.iter()
            .zip(s.iter().zip(&self.uq))
            .map(|(&t, (s, uq))| {
                let shift = q.coord(self.alpha2 * s + uq) as i64;
                centered_mod(t - shift, kq) as f64 * q.scale()
            })
            .collect())
    }

    /// `X1 = (T + U1) mod Λ`.
    pub fn encode_source(&self, s: &[f64]) -> Result<Vec<f64>> {
        let lat = self.chain.coarse();
        Ok(self
            .shifted_codeword(s)?
            .iter()
            .zip(&self.u1)
            .map(|(t, u)| lat.reduce(t + u))
            .collect())
    }

    /// `Y2' = (α1·Y2 − U1) mod Λ`.
    pub fn relay_scale(&self, y2: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), y2.len())?;
        let lat = self.chain.coarse();
        Ok(y2
            .iter()
            .zip(&self.u1)
            .map(|(y, u)| lat.reduce(self.alpha1 * y - u))
            .collect())
    }

    /// `T̂ = Qq(Y2') mod Λ`, as a quant-codebook point.
    pub fn relay_decode(&self, y2: &[f64]) -> Result<Vec<f64>> {
        let y2p = self.relay_scale(y2)?;
        let idx = self.chain.index_of(CodebookKind::Quant, &y2p)?;
        self.chain.codeword(CodebookKind::Quant, &idx)
    }

    /// `X2 = (T̂ + U2) mod Λ`.
    pub fn relay_reencode(&self, t_hat: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), t_hat.len())?;
        let lat = self.chain.coarse();
        Ok(t_hat.iter().zip(&self.u2).map(|(t, u)| lat.reduce(t + u)).collect())
    }

    /// `Y3' = (α2·Y3 + Uq − U2) mod Λ`.
    pub fn destination_scale(&self, y3: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), y3.len())?;
        let lat = self.chain.coarse();
        Ok(y3
            .iter()
            .zip(&self.uq)
            .zip(&self.u2)
            .map(|((y, uq), u2)| lat.reduce(self.alpha2 * y + uq - u2))
            .collect())
    }

    /// Message index of `Qc(Y3') mod Λ`.
    pub fn destination_decode(&self, y3: &[f64]) -> Result<CodewordIndex> {
        let y3p = self.destination_scale(y3)?;
        self.chain.index_of(CodebookKind::Message, &y3p)
    }

    /// `(α2·S + Uq) mod Λq`, the quantization residual left at the destination.
    pub fn residual(&self, s: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.chain.dim(), s.len())?;
        let q = self.chain.quant();
        Ok(s.iter().zip(&self.uq).map(|(s, uq)| q.reduce(self.alpha2 * s + uq)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{hop1, hop2, ChannelParams, Model};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn mod_dist(chain: &NestedChain, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| chain.coarse().reduce(x - y).abs())
            .fold(0.0, f64::max)
    }

    fn no_dither(chain: NestedChain, u1: Vec<f64>, digits: Vec<u32>) -> Model2State {
        let n = chain.dim();
        let idx = CodewordIndex::new(digits, chain.k1()).unwrap();
        Model2State::new(chain, idx, 1.0, 1.0, u1, vec![0.0; n], vec![0.0; n]).unwrap()
    }

    #[test]
    fn no_interference_means_no_shift() {
        let chain = NestedChain::build(2, 2, 2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u1 = chain.coarse().sample_dither(&mut rng);
        let st = no_dither(chain, u1.clone(), vec![1, 0]);
        let s = [0.0, 0.0];
        assert_eq!(st.shifted_codeword(&s).unwrap(), st.codeword);
        let x1 = st.encode_source(&s).unwrap();
        let direct: Vec<f64> = st.codeword.iter().zip(&u1).map(|(t, u)| chain.coarse().reduce(t + u)).collect();
        assert_eq!(x1, direct);
    }

    #[test]
    fn undithered_output_is_a_quant_point() {
        let chain = NestedChain::build(3, 2, 2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let mut st = Model2State::sample(chain, 0.9, 0.8, &mut rng).unwrap();
            st.u1 = vec![0.0; 3];
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1e4..1e4)).collect();
            let x1 = st.encode_source(&s).unwrap();
            let snapped = chain.quant().nearest_point(&x1).unwrap();
            assert!(mod_dist(&chain, &x1, &snapped) < 1e-12);
            let a = chain.coarse().scale();
            assert!(x1.iter().all(|&v| v >= -a / 2.0 && v < a / 2.0));
            assert_eq!(x1, st.shifted_codeword(&s).unwrap());
        }
    }

    #[test]
    fn relay_decodes_noiselessly() {
        let chain = NestedChain::build(4, 3, 2, 1.0).unwrap();
        let params = ChannelParams::new(1.0, 1.0).unwrap().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let st = Model2State::sample(chain, 1.0, 1.0, &mut rng).unwrap();
            let s: Vec<f64> = (0..4).map(|_| rng.random_range(-1e3..1e3)).collect();
            let x1 = st.encode_source(&s).unwrap();
            let y2 = hop1(Model::Two, &x1, &s, &params, &mut rng).unwrap();
            let t_hat = st.relay_decode(&y2).unwrap();
            assert!(mod_dist(&chain, &t_hat, &st.shifted_codeword(&s).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn relay_scaling_identity() {
        let chain = NestedChain::build(3, 2, 2, 1.0).unwrap();
        let params = ChannelParams::new(10.0, 10.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let st = Model2State::sample(chain, 10.0 / 11.0, 0.5, &mut rng).unwrap();
            let s: Vec<f64> = (0..3).map(|_| rng.random_range(-1e9..1e9)).collect();
            let x1 = st.encode_source(&s).unwrap();
            let y2 = hop1(Model::Two, &x1, &s, &params, &mut rng).unwrap();
            let z2: Vec<f64> = y2.iter().zip(&x1).map(|(y, x)| y - x).collect();
            let t = st.shifted_codeword(&s).unwrap();
            let rhs: Vec<f64> = (0..3)
                .map(|i| t[i] - (1.0 - st.alpha1) * x1[i] + st.alpha1 * z2[i])
                .collect();
            assert!(mod_dist(&chain, &st.relay_scale(&y2).unwrap(), &rhs) < 1e-9);
        }
    }

    #[test]
    fn reencode_without_dither() {
        let chain = NestedChain::build(2, 2, 2, 1.0).unwrap();
        let st = no_dither(chain, vec![0.0; 2], vec![0, 1]);
        let t_hat = chain.codeword(CodebookKind::Quant, &CodewordIndex::new(vec![3, 1], 4).unwrap()).unwrap();
        assert_eq!(st.relay_reencode(&t_hat).unwrap(), t_hat);
    }

    #[test]
    fn destination_identity_noiseless() {
        let chain = NestedChain::build(4, 2, 2, 1.0).unwrap();
        let params = ChannelParams::new(1.0, 1.0).unwrap().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let st = Model2State::sample(chain, 1.0, 1.0, &mut rng).unwrap();
            let s: Vec<f64> = (0..4).map(|_| rng.random_range(-1e6..1e6)).collect();
            let x2 = st.relay_reencode(&st.shifted_codeword(&s).unwrap()).unwrap();
            let y3 = hop2(Model::Two, &x2, &s, &params, &mut rng).unwrap();
            let y3p = st.destination_scale(&y3).unwrap();
            let res = st.residual(&s).unwrap();
            let rhs: Vec<f64> = st.codeword.iter().zip(&res).map(|(t, r)| t + r).collect();
            assert!(mod_dist(&chain, &y3p, &rhs) < 1e-9 * 1e6);
            assert_eq!(st.destination_decode(&y3).unwrap(), st.message);
        }
    }

    #[test]
    fn end_to_end_plain() {
        let chain = NestedChain::build(2, 2, 2, 1.0).unwrap();
        let params = ChannelParams::new(1.0, 1.0).unwrap().noiseless();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let st = no_dither(chain, vec![0.0; 2], vec![1, 1]);
        let s = [0.0, 0.0];
        let y2 = hop1(Model::Two, &st.encode_source(&s).unwrap(), &s, &params, &mut rng).unwrap();
        let x2 = st.relay_reencode(&st.relay_decode(&y2).unwrap()).unwrap();
        let y3 = hop2(Model::Two, &x2, &s, &params, &mut rng).unwrap();
        assert_eq!(st.destination_decode(&y3).unwrap(), st.message);
    }

    #[test]
    fn residual_variance_matches_quant_moment() {
        let chain = NestedChain::build(1, 2, 2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = [123_456.789];
        let n = 100_000;
        let mut acc = 0.0;
        for _ in 0..n {
            let mut st = Model2State::sample(chain, 1.0, 0.99, &mut rng).unwrap();
            st.uq = chain.quant().sample_dither(&mut rng);
            acc += st.residual(&s).unwrap()[0].powi(2);
        }
        let var = acc / n as f64;
        assert!((var / chain.quant().second_moment() - 1.0).abs() < 0.05, "{var}");
    }
}
