use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::features::{FeatureContext, FeatureVector, FEATURE_LEN, SCALAR_BORDER};
use crate::error::{Error, Result};
use crate::generators::ActionCandidate;
use crate::grid::{ActionKind, BitMask, Heightmap};
use crate::seed::mix;

pub const GEEV_MAGIC: &[u8; 4] = b"GEEV";
pub const GEEV_VERSION: u16 = 1;
pub const DEFAULT_HIDDEN: usize = 64;

/// Maps a feature vector to a predicted value.
pub trait Scorer: Send + Sync + fmt::Debug {
    fn score(&self, f: &FeatureVector) -> f64;

    fn name(&self) -> String;
}

/// Fixed rules: grasps on the target score above 1, grasps elsewhere at most
/// 1, pushes lower still unless they sweep through the target, and any
/// placement failing its height test scores −1.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeuristicScorer;

fn overlap(action: &[f64], other: &[f64]) -> f64 {
    let total: f64 = action.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    action.iter().zip(other).map(|(a, b)| a * b).sum::<f64>() / total
}

impl Scorer for HeuristicScorer {
    fn score(&self, f: &FeatureVector) -> f64 {
        let margin = f.margin_mm();
        if margin < 0.0 {
            return -1.0;
        }
        let on_target = overlap(f.action_channel(), f.target_channel());
        let near = (1.0 - f.distance_px() / 50.0).max(0.0);
        match f.kind() {
            ActionKind::Grasp if f.on_target() => 1.2 + 0.5 * margin.min(50.0) / 50.0,
            ActionKind::Grasp => 0.5 + 0.3 * near + 0.2 * (4.0 * on_target).min(1.0),
            ActionKind::Push => {
                0.3 + 0.45 * (3.0 * on_target).min(1.0) + 0.15 * near + 0.1 * f.values()[SCALAR_BORDER]
            }
        }
    }

    fn name(&self) -> String {
        "heuristic".into()
    }
}

/// Ablation scorer: a uniform draw in `[0, 1)` hashed from the features and a seed.
///
/// Scores never reach the grasp threshold, so the greedy policy picks a
/// uniformly random candidate among all pushes and grasps.
#[derive(Debug, Clone, Copy)]
pub struct RandomScorer {
    pub seed: u64,
}

impl Scorer for RandomScorer {
    fn score(&self, f: &FeatureVector) -> f64 {
        let h = f
            .values()
            .iter()
            .fold(mix(self.seed), |h, v| mix(h ^ v.to_bits()));
        (h >> 11) as f64 / (1u64 << 53) as f64
    }

    fn name(&self) -> String {
        format!("random({})", self.seed)
    }
}

/// Fully connected ReLU network over the feature vector, `774 → hidden → 1`,
/// or a single affine map when `hidden == 0`.
///
/// Parameters live in one flat vector, layer by layer: weights stored
/// input-major (`w[i * n_out + o]`) followed by biases.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainableScorer {
    dims: Vec<usize>,
    pub params: Vec<f64>,
    pub label: String,
}

/// Forward-pass intermediates needed for backpropagation.
pub struct Trace {
    pub hidden_pre: Vec<f64>,
    pub output: f64,
}

impl TrainableScorer {
    pub fn new(hidden: usize, seed: u64) -> Self {
        let dims = if hidden == 0 {
            vec![FEATURE_LEN, 1]
        } else {
            vec![FEATURE_LEN, hidden, 1]
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = Vec::new();
        for w in dims.windows(2) {
            let bound = (6.0 / w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| rng.gen_range(-bound..bound)));
            params.extend(std::iter::repeat(0.0).take(w[1]));
        }
        Self {
            dims,
            params,
            label: "trained".into(),
        }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hidden(&self) -> usize {
        if self.dims.len() == 3 {
            self.dims[1]
        } else {
            0
        }
    }

    /// Offsets of (weights, biases) of layer `l`.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut off = 0;
        for w in self.dims.windows(2).take(l) {
            off += w[0] * w[1] + w[1];
        }
        (off, off + self.dims[l] * self.dims[l + 1])
    }

    pub fn forward(&self, x: &[f64]) -> Trace {
        let n_out = self.dims[1];
        let (w, b) = self.layer_offsets(0);
        let mut z = self.params[b..b + n_out].to_vec();
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &self.params[w + i * n_out..w + (i + 1) * n_out];
                for (zj, wij) in z.iter_mut().zip(row) {
                    *zj += xi * wij;
                }
            }
        }
        if self.dims.len() == 2 {
            return Trace {
                output: z[0],
                hidden_pre: Vec::new(),
            };
        }
        let (w2, b2) = self.layer_offsets(1);
        let output = self.params[b2]
            + z.iter()
                .zip(&self.params[w2..w2 + n_out])
                .map(|(zj, wj)| zj.max(0.0) * wj)
                .sum::<f64>();
        Trace {
            hidden_pre: z,
            output,
        }
    }

    /// Accumulate `scale · ∂output/∂θ` into `grad`.
    pub fn backward(&self, x: &[f64], trace: &Trace, scale: f64, grad: &mut [f64]) {
        let (w, b) = self.layer_offsets(0);
        let n1 = self.dims[1];
        if self.dims.len() == 2 {
            grad[b] += scale;
            for (i, &xi) in x.iter().enumerate() {
                if xi != 0.0 {
                    grad[w + i] += scale * xi;
                }
            }
            return;
        }
        let (w2, b2) = self.layer_offsets(1);
        grad[b2] += scale;
        let mut dz = vec![0.0; n1];
        for j in 0..n1 {
            let z = trace.hidden_pre[j];
            if z > 0.0 {
                grad[w2 + j] += scale * z;
                dz[j] = scale * self.params[w2 + j];
            }
        }
        for (gj, dj) in grad[b..b + n1].iter_mut().zip(&dz) {
            *gj += dj;
        }
        for (i, &xi) in x.iter().enumerate() {
            if xi != 0.0 {
                let row = &mut grad[w + i * n1..w + (i + 1) * n1];
                for (g, dj) in row.iter_mut().zip(&dz) {
                    *g += xi * dj;
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.forward(x).output
    }

    /// GEEV layout: magic, version u16, layer count u16, `count + 1` dims as
    /// u32, then per layer its weights as `[out][in]` f32 followed by its
    /// biases, all little-endian.
    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(GEEV_MAGIC)?;
        w.write_all(&GEEV_VERSION.to_le_bytes())?;
        w.write_all(&((self.dims.len() - 1) as u16).to_le_bytes())?;
        for &d in &self.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for l in 0..self.dims.len() - 1 {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (wo, bo) = self.layer_offsets(l);
            for o in 0..n_out {
                for i in 0..n_in {
                    w.write_all(&(self.params[wo + i * n_out + o] as f32).to_le_bytes())?;
                }
            }
            for o in 0..n_out {
                w.write_all(&(self.params[bo + o] as f32).to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != GEEV_MAGIC {
            return Err(Error::Format("not a GEEV model file".into()));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        if u16::from_le_bytes(b2) != GEEV_VERSION {
            return Err(Error::Format("unsupported GEEV version".into()));
        }
        r.read_exact(&mut b2)?;
        let layers = u16::from_le_bytes(b2) as usize;
        if !(1..=2).contains(&layers) {
            return Err(Error::Format(format!("unsupported layer count {layers}")));
        }
        let mut dims = Vec::with_capacity(layers + 1);
        let mut b4 = [0u8; 4];
        for _ in 0..=layers {
            r.read_exact(&mut b4)?;
            dims.push(u32::from_le_bytes(b4) as usize);
        }
        if dims[0] != FEATURE_LEN || dims[layers] != 1 || dims.iter().any(|&d| d == 0 || d > 4096) {
            return Err(Error::Format(format!("unexpected layer dims {dims:?}")));
        }
        let mut model = Self {
            params: vec![0.0; dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()],
            dims,
            label: "trained".into(),
        };
        let mut next = || -> Result<f64> {
            r.read_exact(&mut b4)?;
            let v = f32::from_le_bytes(b4);
            if !v.is_finite() {
                return Err(Error::Format("non-finite parameter".into()));
            }
            Ok(v as f64)
        };
        for l in 0..layers {
            let (n_in, n_out) = (model.dims[l], model.dims[l + 1]);
            let (wo, bo) = model.layer_offsets(l);
            for o in 0..n_out {
                for i in 0..n_in {
                    model.params[wo + i * n_out + o] = next()?;
                }
            }
            for o in 0..n_out {
                model.params[bo + o] = next()?;
            }
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut model = Self::read(&mut BufReader::new(File::open(path)?))?;
        model.label = format!("trained({})", path.display());
        Ok(model)
    }

    /// Parameters rounded through f32, as they would be after a save/load.
    pub fn quantized(&self) -> Self {
        let mut m = self.clone();
        for p in &mut m.params {
            *p = *p as f32 as f64;
        }
        m
    }
}

impl Scorer for TrainableScorer {
    fn score(&self, f: &FeatureVector) -> f64 {
        self.predict(f.values())
    }

    fn name(&self) -> String {
        self.label.clone()
    }
}

/// One scorer per action kind.
#[derive(Debug, Clone)]
pub struct Evaluators {
    pub push: Arc<dyn Scorer>,
    pub grasp: Arc<dyn Scorer>,
}

impl Evaluators {
    pub fn new(push: impl Scorer + 'static, grasp: impl Scorer + 'static) -> Self {
        Self {
            push: Arc::new(push),
            grasp: Arc::new(grasp),
        }
    }

    pub fn heuristic() -> Self {
        Self::new(HeuristicScorer, HeuristicScorer)
    }

    pub fn random(seed: u64) -> Self {
        Self::new(RandomScorer { seed }, RandomScorer { seed: mix(seed) })
    }

    pub fn for_kind(&self, kind: ActionKind) -> &dyn Scorer {
        match kind {
            ActionKind::Push => self.push.as_ref(),
            ActionKind::Grasp => self.grasp.as_ref(),
        }
    }

    /// Score each candidate with the scorer of its kind, in order.
    pub fn score(&self, hm: &Heightmap, tmask: &BitMask, candidates: &[ActionCandidate]) -> Result<Vec<f64>> {
        let ctx = FeatureContext::new(hm, tmask)?;
        Ok(candidates
            .iter()
            .map(|c| self.for_kind(c.kind()).score(&ctx.encode(hm, tmask, c.mask())))
            .collect())
    }
}

/// Score candidates with one scorer, preserving order.
pub fn score_candidates<'a>(
    scorer: &dyn Scorer,
    hm: &Heightmap,
    tmask: &BitMask,
    candidates: &'a [ActionCandidate],
) -> Result<Vec<(&'a ActionCandidate, f64)>> {
    if candidates.is_empty() {
        return Err(Error::NoCandidates);
    }
    let ctx = FeatureContext::new(hm, tmask)?;
    Ok(candidates
        .iter()
        .map(|c| (c, scorer.score(&ctx.encode(hm, tmask, c.mask()))))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Pixel;

    fn sample(seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..FEATURE_LEN)
            .map(|_| if rng.gen_bool(0.3) { rng.gen_range(-1.0..2.0) } else { 0.0 })
            .collect()
    }

    #[test]
    fn zero_input_gives_bias_path() {
        let m = TrainableScorer::new(8, 1);
        let x = vec![0.0; FEATURE_LEN];
        assert_eq!(m.predict(&x), 0.0);
        let lin = TrainableScorer::new(0, 1);
        assert_eq!(lin.params.len(), FEATURE_LEN + 1);
        assert_eq!(lin.predict(&x), 0.0);
    }

    #[test]
    fn dense_forward_matches() {
        let m = TrainableScorer::new(16, 3);
        let x = sample(4);
        let (w, b) = m.layer_offsets(0);
        let (w2, b2) = m.layer_offsets(1);
        let mut out = m.params[b2];
        for j in 0..16 {
            let mut z = m.params[b + j];
            for i in 0..FEATURE_LEN {
                z += x[i] * m.params[w + i * 16 + j];
            }
            out += z.max(0.0) * m.params[w2 + j];
        }
        assert!((m.predict(&x) - out).abs() < 1e-12);
    }

    #[test]
    fn geev_round_trip() {
        for hidden in [0, 64] {
            let m = TrainableScorer::new(hidden, 7);
            let mut buf = Vec::new();
            m.write(&mut buf).unwrap();
            assert_eq!(&buf[..4], b"GEEV");
            let back = TrainableScorer::read(&mut buf.as_slice()).unwrap();
            assert_eq!(back.params, m.quantized().params);
            assert_eq!(back.dims(), m.dims());
        }
        let mut bad = Vec::new();
        TrainableScorer::new(4, 0).write(&mut bad).unwrap();
        bad[0] = b'X';
        assert!(TrainableScorer::read(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn random_scores_in_range_and_deterministic() {
        let s = RandomScorer { seed: 11 };
        let mut seen = Vec::new();
        for k in 0..200 {
            let f = FeatureVector(sample(k));
            let v = s.score(&f);
            assert!((0.0..1.0).contains(&v));
            assert_eq!(v, s.score(&f));
            seen.push(v);
        }
        let mean = seen.iter().sum::<f64>() / seen.len() as f64;
        assert!((mean - 0.5).abs() < 0.08);
    }

    #[test]
    fn heuristic_prefers_direct_target_grasp() {
        let mut hm = Heightmap::zeros();
        let mut t = BitMask::empty();
        for y in 105..119 {
            for x in 105..119 {
                hm.set(Pixel::new(x, y), 400);
                t.set(Pixel::new(x, y), true);
            }
        }
        for y in 105..119 {
            for x in 140..154 {
                hm.set(Pixel::new(x, y), 400);
            }
        }
        let cands = vec![
            ActionCandidate::grasp(Pixel::new(112, 112), 4, true),
            ActionCandidate::grasp(Pixel::new(147, 112), 4, false),
            ActionCandidate::grasp(Pixel::new(112, 112), 4, true),
            ActionCandidate::grasp(Pixel::new(60, 60), 0, false),
        ];
        let s = score_candidates(&HeuristicScorer, &hm, &t, &cands).unwrap();
        assert!(s[0].1 > 1.0 && s[0].1 > s[1].1);
        assert_eq!(s[0].1, s[2].1);
        assert!(s[1].1 <= 1.0 && s[1].1 > 0.0);
        // empty table under the grasp: fails its height test
        assert_eq!(s[3].1, -1.0);
        assert!(s[3].1 < s[1].1);
    }
}
