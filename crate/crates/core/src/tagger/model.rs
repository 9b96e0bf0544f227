//! The slim tagger network: Bloom embeddings, a residual windowed encoder,
//! per-token feature projection, state feature summation and a masked
//! action scorer. Forward and backward passes are written out by hand.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bilou::{valid_actions, Action, TagInventory};
use crate::error::{Error, Result};
use crate::hash::{fnv1a_seeded, splitmix64};

/// Seeds for the Bloom embedding hashes. At most this many hashes per token.
pub const HASH_SEEDS: [u64; 8] = [
    0x9e37_79b9_7f4a_7c15,
    0xc2b2_ae3d_27d4_eb4f,
    0x1656_67b1_9e37_79f9,
    0x85eb_ca77_c2b2_ae63,
    0x27d4_eb2f_1656_67c5,
    0x94d0_49bb_1331_11eb,
    0xbf58_476d_1ce4_e5b9,
    0xff51_afd7_ed55_8ccd,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam,
}

impl std::str::FromStr for Optimizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(Optimizer::Sgd),
            "adam" => Ok(Optimizer::Adam),
            other => Err(Error::Config(format!("unknown optimizer {other:?}"))),
        }
    }
}

/// Every dimension, seed and training setting of a tagger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hyperparams {
    /// Embedding and encoder width.
    pub dim: usize,
    /// Rows of the Bloom embedding table.
    pub rows: usize,
    /// Hashed rows summed per token.
    pub hashes: usize,
    /// Encoder window radius; each layer sees `2 * window + 1` tokens.
    pub window: usize,
    /// Number of encoder layers.
    pub depth: usize,
    /// Width of the per-token state feature vectors.
    pub hidden: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            dim: 64,
            rows: 4096,
            hashes: 3,
            window: 1,
            depth: 2,
            hidden: 64,
            learning_rate: 0.01,
            batch_size: 32,
            epochs: 30,
            optimizer: Optimizer::Adam,
            seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("rows", self.rows),
            ("hashes", self.hashes),
            ("hidden", self.hidden),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("tagger.{name} must be positive")));
        }
        if self.hashes > HASH_SEEDS.len() {
            return Err(Error::Config(format!(
                "tagger.hashes must be at most {}",
                HASH_SEEDS.len()
            )));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(
                "tagger.learning_rate must be finite and non-negative".into(),
            ));
        }
        Ok(())
    }

    fn window_width(&self) -> usize {
        2 * self.window + 1
    }
}

/// All trainable weights, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// `rows x dim`
    pub embeddings: Vec<f64>,
    /// Per layer, `dim x (2 * window + 1) * dim`.
    pub conv_weights: Vec<Vec<f64>>,
    /// Per layer, `dim`.
    pub conv_biases: Vec<Vec<f64>>,
    /// `hidden x dim`
    pub proj_weights: Vec<f64>,
    pub proj_bias: Vec<f64>,
    /// `actions x hidden`
    pub out_weights: Vec<f64>,
    pub out_bias: Vec<f64>,
}

impl Params {
    fn zeros(h: &Hyperparams, actions: usize) -> Self {
        let d = h.dim;
        Params {
            embeddings: vec![0.0; h.rows * d],
            conv_weights: vec![vec![0.0; d * h.window_width() * d]; h.depth],
            conv_biases: vec![vec![0.0; d]; h.depth],
            proj_weights: vec![0.0; h.hidden * d],
            proj_bias: vec![0.0; h.hidden],
            out_weights: vec![0.0; actions * h.hidden],
            out_bias: vec![0.0; actions],
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.tensors_mut().into_iter().for_each(|t| t.fill(0.0));
        z
    }

    pub fn tensors(&self) -> Vec<&Vec<f64>> {
        let mut v = vec![&self.embeddings];
        v.extend(self.conv_weights.iter());
        v.extend(self.conv_biases.iter());
        v.extend([
            &self.proj_weights,
            &self.proj_bias,
            &self.out_weights,
            &self.out_bias,
        ]);
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut v = vec![&mut self.embeddings];
        v.extend(self.conv_weights.iter_mut());
        v.extend(self.conv_biases.iter_mut());
        v.extend([
            &mut self.proj_weights,
            &mut self.proj_bias,
            &mut self.out_weights,
            &mut self.out_bias,
        ]);
        v
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    fn shapes_match(&self, h: &Hyperparams, actions: usize) -> bool {
        let expect = Params::zeros(h, actions);
        let a: Vec<usize> = self.tensors().iter().map(|t| t.len()).collect();
        let b: Vec<usize> = expect.tensors().iter().map(|t| t.len()).collect();
        a == b
    }
}

/// Parser state before choosing the action for `current`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TransitionState {
    pub current: usize,
    pub previous: Option<usize>,
    pub last_entity_start: Option<usize>,
}

impl TransitionState {
    pub fn start() -> Self {
        TransitionState {
            current: 0,
            previous: None,
            last_entity_start: None,
        }
    }

    /// State for the next token after taking `action` here.
    pub fn advance(self, action: Action) -> Self {
        TransitionState {
            current: self.current + 1,
            previous: Some(self.current),
            last_entity_start: if action.starts_entity() {
                Some(self.current)
            } else {
                self.last_entity_start
            },
        }
    }

    fn slots(&self) -> impl Iterator<Item = usize> {
        [Some(self.current), self.previous, self.last_entity_start]
            .into_iter()
            .flatten()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub hyperparams: Hyperparams,
    pub inventory: TagInventory,
    pub params: Params,
}

/// Activations kept from a forward pass for backpropagation.
struct Trace {
    n: usize,
    rows: Vec<Vec<usize>>,
    /// Encoder layer inputs; `layers[depth]` is the contextual output.
    layers: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    token_features: Vec<f64>,
}

fn matvec_add(w: &[f64], cols: usize, x: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// Softmax over the entries where `mask` is true; masked entries are exactly 0.
pub fn masked_softmax(scores: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
    let max = scores
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m)
        .map(|(&s, _)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Precondition("every action is masked".into()));
    }
    let mut probs: Vec<f64> = scores
        .iter()
        .zip(mask)
        .map(|(&s, &m)| if m { (s - max).exp() } else { 0.0 })
        .collect();
    let z: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= z);
    Ok(probs)
}

impl TaggerModel {
    /// Seeded random initialization.
    pub fn new(inventory: TagInventory, hyperparams: Hyperparams) -> Result<Self> {
        hyperparams.validate()?;
        let h = &hyperparams;
        let mut params = Params::zeros(h, inventory.action_count());
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(h.seed));
        let mut fill = |t: &mut [f64], scale: f64| {
            t.iter_mut().for_each(|x| *x = rng.gen_range(-scale..scale));
        };
        let d = h.dim as f64;
        fill(&mut params.embeddings, 0.1);
        let conv_scale = (6.0 / (d * h.window_width() as f64 + d)).sqrt() * 0.5;
        for w in &mut params.conv_weights {
            fill(w, conv_scale);
        }
        fill(
            &mut params.proj_weights,
            (6.0 / (d + h.hidden as f64)).sqrt(),
        );
        let out_scale = (6.0 / (h.hidden as f64 + inventory.action_count() as f64)).sqrt();
        fill(&mut params.out_weights, out_scale);
        Ok(TaggerModel {
            hyperparams,
            inventory,
            params,
        })
    }

    /// Embedding table rows selected for `surface`, one per hash seed.
    pub fn hash_rows(&self, surface: &str) -> Vec<usize> {
        let rows = self.hyperparams.rows as u64;
        HASH_SEEDS[..self.hyperparams.hashes]
            .iter()
            .map(|&seed| (fnv1a_seeded(seed, surface.as_bytes()) % rows) as usize)
            .collect()
    }

    /// Sum of the hashed embedding rows of `surface`.
    pub fn bloom_embed(&self, surface: &str) -> Vec<f64> {
        let d = self.hyperparams.dim;
        let mut v = vec![0.0; d];
        for r in self.hash_rows(surface) {
            for (a, b) in v
                .iter_mut()
                .zip(&self.params.embeddings[r * d..(r + 1) * d])
            {
                *a += b;
            }
        }
        v
    }

    fn window(&self, x: &[f64], n: usize, i: usize, out: &mut [f64]) {
        let d = self.hyperparams.dim;
        let w = self.hyperparams.window;
        out.fill(0.0);
        for o in 0..self.hyperparams.window_width() {
            let pos = i as isize + o as isize - w as isize;
            if pos >= 0 && (pos as usize) < n {
                let p = pos as usize;
                out[o * d..(o + 1) * d].copy_from_slice(&x[p * d..(p + 1) * d]);
            }
        }
    }

    fn encode_layers(&self, input: Vec<f64>, n: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let d = self.hyperparams.dim;
        let ww = self.hyperparams.window_width() * d;
        let mut layers = vec![input];
        let mut pre = Vec::with_capacity(self.hyperparams.depth);
        let mut u = vec![0.0; ww];
        for l in 0..self.hyperparams.depth {
            let x = &layers[l];
            let mut z = vec![0.0; n * d];
            let mut next = x.clone();
            for i in 0..n {
                self.window(x, n, i, &mut u);
                let zi = &mut z[i * d..(i + 1) * d];
                zi.copy_from_slice(&self.params.conv_biases[l]);
                matvec_add(&self.params.conv_weights[l], ww, &u, zi);
                for (y, &zv) in next[i * d..(i + 1) * d].iter_mut().zip(zi.iter()) {
                    *y += relu(zv);
                }
            }
            pre.push(z);
            layers.push(next);
        }
        (layers, pre)
    }

    /// Runs the encoder over row-major `n x dim` token vectors. Each layer
    /// adds `relu(W * window + b)` to its input; the output has the same
    /// shape as the input.
    pub fn encode_context(&self, token_vectors: &[f64]) -> Vec<f64> {
        let n = token_vectors.len() / self.hyperparams.dim;
        let (mut layers, _) = self.encode_layers(token_vectors.to_vec(), n);
        layers.pop().expect("at least the input layer")
    }

    /// Per-token feature vectors (`n x hidden`) from contextual vectors.
    pub fn token_features(&self, contextual: &[f64]) -> Vec<f64> {
        let (d, h) = (self.hyperparams.dim, self.hyperparams.hidden);
        let n = contextual.len() / d;
        let mut v = Vec::with_capacity(n * h);
        for i in 0..n {
            let mut row = self.params.proj_bias.clone();
            matvec_add(
                &self.params.proj_weights,
                d,
                &contextual[i * d..(i + 1) * d],
                &mut row,
            );
            v.extend(row);
        }
        v
    }

    /// Sum of the token feature vectors at the state's current, previous and
    /// last-entity-start slots. Absent slots add nothing; a token filling two
    /// slots is added twice.
    pub fn state_features(&self, token_features: &[f64], state: &TransitionState) -> Vec<f64> {
        let h = self.hyperparams.hidden;
        let mut f = vec![0.0; h];
        for s in state.slots() {
            for (a, b) in f.iter_mut().zip(&token_features[s * h..(s + 1) * h]) {
                *a += b;
            }
        }
        f
    }

    /// Raw action scores `A * relu(f) + b` for a state feature vector.
    pub fn action_scores(&self, feature: &[f64]) -> Vec<f64> {
        let g: Vec<f64> = feature.iter().map(|&x| relu(x)).collect();
        let mut s = self.params.out_bias.clone();
        matvec_add(
            &self.params.out_weights,
            self.hyperparams.hidden,
            &g,
            &mut s,
        );
        s
    }

    /// Action distribution under `mask`.
    pub fn score_actions(&self, feature: &[f64], mask: &[bool]) -> Result<Vec<f64>> {
        masked_softmax(&self.action_scores(feature), mask)
    }

    fn forward(&self, tokens: &[&str]) -> Trace {
        let d = self.hyperparams.dim;
        let n = tokens.len();
        let rows: Vec<Vec<usize>> = tokens.iter().map(|t| self.hash_rows(t)).collect();
        let mut x0 = vec![0.0; n * d];
        for (i, rs) in rows.iter().enumerate() {
            for &r in rs {
                for (a, b) in x0[i * d..(i + 1) * d]
                    .iter_mut()
                    .zip(&self.params.embeddings[r * d..(r + 1) * d])
                {
                    *a += b;
                }
            }
        }
        let (layers, pre) = self.encode_layers(x0, n);
        let token_features = self.token_features(&layers[self.hyperparams.depth]);
        Trace {
            n,
            rows,
            layers,
            pre,
            token_features,
        }
    }

    /// Contextual vectors (`n x dim`) for a token sequence.
    pub fn contextual_vectors(&self, tokens: &[&str]) -> Vec<f64> {
        let mut t = self.forward(tokens);
        t.layers.pop().expect("encoder output")
    }

    /// Left-to-right greedy decoding. Ties go to the earlier action in
    /// inventory order; the mask keeps the output grammatical.
    pub fn greedy_parse<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<Action> {
        let tokens: Vec<&str> = tokens.iter().map(AsRef::as_ref).collect();
        if tokens.is_empty() {
            return Vec::new();
        }
        let ctx = self.contextual_vectors(&tokens);
        self.greedy_parse_vectors(&ctx)
    }

    /// Greedy decoding over externally supplied contextual vectors
    /// (`n x dim`, row-major), so another encoder can stand in for the
    /// Bloom embedding and convolution stack.
    pub fn greedy_parse_vectors(&self, contextual: &[f64]) -> Vec<Action> {
        let n = contextual.len() / self.hyperparams.dim;
        let tf = self.token_features(contextual);
        let mut state = TransitionState::start();
        let mut prev = None;
        let mut out = Vec::with_capacity(n);
        for t in 0..n {
            let mask = valid_actions(prev, t + 1 == n, &self.inventory);
            let feature = self.state_features(&tf, &state);
            let probs = self
                .score_actions(&feature, &mask)
                .expect("valid_actions never masks everything");
            let mut best = usize::MAX;
            for (k, &p) in probs.iter().enumerate() {
                if mask[k] && (best == usize::MAX || p > probs[best]) {
                    best = k;
                }
            }
            let action = self.inventory.action(best);
            out.push(action);
            state = state.advance(action);
            prev = Some(action);
        }
        out
    }

    /// Summed cross-entropy of the gold actions under teacher forcing. When
    /// `grad` is given, adds `scale * d(loss)/d(params)` into it.
    pub fn loss_and_grad(
        &self,
        tokens: &[&str],
        gold: &[Action],
        grad: Option<(&mut Params, f64)>,
    ) -> Result<f64> {
        if tokens.len() != gold.len() {
            return Err(Error::Shape {
                sentence: 0,
                message: format!("{} tokens but {} gold actions", tokens.len(), gold.len()),
            });
        }
        if tokens.is_empty() {
            return Ok(0.0);
        }
        let trace = self.forward(tokens);
        let (d, h) = (self.hyperparams.dim, self.hyperparams.hidden);
        let n = trace.n;
        let na = self.inventory.action_count();
        let mut loss = 0.0;
        let mut d_tf = vec![0.0; n * h];
        let mut grad = grad;

        let mut state = TransitionState::start();
        let mut prev = None;
        for (t, &g_action) in gold.iter().enumerate() {
            let mask = valid_actions(prev, t + 1 == n, &self.inventory);
            let gi = self.inventory.action_index(g_action);
            if !mask[gi] {
                return Err(Error::Integrity(format!(
                    "gold action {} is invalid at token {t}",
                    self.inventory.name(g_action)
                )));
            }
            let f = self.state_features(&trace.token_features, &state);
            let hidden: Vec<f64> = f.iter().map(|&x| relu(x)).collect();
            let mut scores = self.params.out_bias.clone();
            matvec_add(&self.params.out_weights, h, &hidden, &mut scores);
            let probs = masked_softmax(&scores, &mask)?;
            loss -= probs[gi].ln();

            if let Some((g, scale)) = grad.as_mut() {
                let mut ds = probs;
                ds[gi] -= 1.0;
                ds.iter_mut().for_each(|x| *x *= *scale);
                let mut dh = vec![0.0; h];
                for a in 0..na {
                    if ds[a] == 0.0 {
                        continue;
                    }
                    g.out_bias[a] += ds[a];
                    let row = &self.params.out_weights[a * h..(a + 1) * h];
                    let grow = &mut g.out_weights[a * h..(a + 1) * h];
                    for k in 0..h {
                        grow[k] += ds[a] * hidden[k];
                        dh[k] += ds[a] * row[k];
                    }
                }
                for k in 0..h {
                    if f[k] <= 0.0 {
                        dh[k] = 0.0;
                    }
                }
                for s in state.slots() {
                    for (a, b) in d_tf[s * h..(s + 1) * h].iter_mut().zip(&dh) {
                        *a += b;
                    }
                }
            }
            state = state.advance(g_action);
            prev = Some(g_action);
        }

        let Some((g, _)) = grad else {
            return Ok(loss);
        };

        // projection
        let ctx = &trace.layers[self.hyperparams.depth];
        let mut dx = vec![0.0; n * d];
        for i in 0..n {
            let dv = &d_tf[i * h..(i + 1) * h];
            let xi = &ctx[i * d..(i + 1) * d];
            let dxi = &mut dx[i * d..(i + 1) * d];
            for k in 0..h {
                if dv[k] == 0.0 {
                    continue;
                }
                g.proj_bias[k] += dv[k];
                let row = &self.params.proj_weights[k * d..(k + 1) * d];
                let grow = &mut g.proj_weights[k * d..(k + 1) * d];
                for c in 0..d {
                    grow[c] += dv[k] * xi[c];
                    dxi[c] += dv[k] * row[c];
                }
            }
        }

        // encoder layers, last to first
        let width = self.hyperparams.window_width();
        let ww = width * d;
        let w = self.hyperparams.window;
        let mut u = vec![0.0; ww];
        for l in (0..self.hyperparams.depth).rev() {
            let x = &trace.layers[l];
            let z = &trace.pre[l];
            let mut dx_in = dx.clone();
            for i in 0..n {
                let dz: Vec<f64> = (0..d)
                    .map(|c| {
                        if z[i * d + c] > 0.0 {
                            dx[i * d + c]
                        } else {
                            0.0
                        }
                    })
                    .collect();
                if dz.iter().all(|&v| v == 0.0) {
                    continue;
                }
                self.window(x, n, i, &mut u);
                let mut du = vec![0.0; ww];
                for (c, &dzc) in dz.iter().enumerate() {
                    if dzc == 0.0 {
                        continue;
                    }
                    g.conv_biases[l][c] += dzc;
                    let row = &self.params.conv_weights[l][c * ww..(c + 1) * ww];
                    let grow = &mut g.conv_weights[l][c * ww..(c + 1) * ww];
                    for k in 0..ww {
                        grow[k] += dzc * u[k];
                        du[k] += dzc * row[k];
                    }
                }
                for o in 0..width {
                    let pos = i as isize + o as isize - w as isize;
                    if pos >= 0 && (pos as usize) < n {
                        let p = pos as usize;
                        for c in 0..d {
                            dx_in[p * d + c] += du[o * d + c];
                        }
                    }
                }
            }
            dx = dx_in;
        }

        for (i, rs) in trace.rows.iter().enumerate() {
            for &r in rs {
                for c in 0..d {
                    g.embeddings[r * d + c] += dx[i * d + c];
                }
            }
        }
        Ok(loss)
    }

    /// Writes the model as versioned JSON.
    pub fn to_json(&self) -> Result<String> {
        let file = ModelFile {
            format: TAGGER_FORMAT.into(),
            version: TAGGER_VERSION,
            hyperparams: self.hyperparams.clone(),
            labels: self.inventory.labels().to_vec(),
            params: self.params.clone(),
        };
        serde_json::to_string(&file).map_err(|e| Error::json("encoding tagger", e))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(s).map_err(|e| Error::json("decoding tagger", e))?;
        if file.format != TAGGER_FORMAT || file.version != TAGGER_VERSION {
            return Err(Error::Integrity(format!(
                "unsupported tagger model {} v{}",
                file.format, file.version
            )));
        }
        file.hyperparams.validate()?;
        let inventory = TagInventory::new(file.labels.clone());
        if inventory.labels() != file.labels.as_slice() {
            return Err(Error::Integrity(
                "tagger labels must be sorted and unique".into(),
            ));
        }
        if !file
            .params
            .shapes_match(&file.hyperparams, inventory.action_count())
        {
            return Err(Error::Integrity(
                "tagger weight shapes do not match hyperparameters".into(),
            ));
        }
        Ok(TaggerModel {
            hyperparams: file.hyperparams,
            inventory,
            params: file.params,
        })
    }
}

pub const TAGGER_FORMAT: &str = "projner-tagger";
pub const TAGGER_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hyperparams: Hyperparams,
    labels: Vec<String>,
    params: Params,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tagger::bilou::decode_bilou;

    fn small() -> TaggerModel {
        let h = Hyperparams {
            dim: 4,
            rows: 16,
            hashes: 2,
            hidden: 5,
            seed: 3,
            ..Hyperparams::default()
        };
        TaggerModel::new(TagInventory::new(["Drug", "Dosage"]), h).unwrap()
    }

    #[test]
    fn single_row_table_maps_everything_together() {
        let h = Hyperparams {
            dim: 3,
            rows: 1,
            hashes: 1,
            ..Hyperparams::default()
        };
        let m = TaggerModel::new(TagInventory::new(["A"]), h).unwrap();
        assert_eq!(m.hash_rows("aspirin"), vec![0]);
        assert_eq!(m.bloom_embed("aspirin"), m.bloom_embed("Ibuprofen"));
        assert_eq!(m.bloom_embed("aspirin"), m.params.embeddings);
    }

    #[test]
    fn embedding_is_deterministic_and_row_defined() {
        let m = small();
        assert_eq!(m.bloom_embed("x"), m.bloom_embed("x"));
        // Fixed rows pin the hash function across platforms.
        assert_eq!(m.hash_rows("aspirin"), m.hash_rows("aspirin"));
        let rows = m.hash_rows("aspirin");
        let mut expect = vec![0.0; 4];
        for r in rows {
            for c in 0..4 {
                expect[c] += m.params.embeddings[r * 4 + c];
            }
        }
        assert_eq!(m.bloom_embed("aspirin"), expect);
    }

    #[test]
    fn zero_encoder_is_identity() {
        let mut m = small();
        m.hyperparams.window = 0;
        m.params.conv_weights = vec![vec![0.0; 16]; 2];
        let x: Vec<f64> = (0..12).map(|i| i as f64 * 0.1 - 0.5).collect();
        assert_eq!(m.encode_context(&x), x);
    }

    #[test]
    fn single_token_context_is_finite() {
        let m = small();
        let out = m.encode_context(&m.bloom_embed("aspirin"));
        assert_eq!(out.len(), 4);
        assert!(out.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn state_feature_sums() {
        let m = small();
        let tf: Vec<f64> = (0..15).map(|i| i as f64).collect();
        let v = |i: usize| tf[i * 5..(i + 1) * 5].to_vec();
        let add =
            |a: Vec<f64>, b: Vec<f64>| a.iter().zip(&b).map(|(x, y)| x + y).collect::<Vec<_>>();
        assert_eq!(m.state_features(&tf, &TransitionState::start()), v(0));
        let s = TransitionState {
            current: 2,
            previous: Some(1),
            last_entity_start: None,
        };
        assert_eq!(m.state_features(&tf, &s), add(v(2), v(1)));
        let s = TransitionState {
            last_entity_start: Some(0),
            ..s
        };
        assert_eq!(m.state_features(&tf, &s), add(add(v(2), v(1)), v(0)));
    }

    #[test]
    fn softmax_properties() {
        let scores = [0.3, -1.2, 2.0, 0.5];
        let p = masked_softmax(&scores, &[false, true, false, false]).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0, 0.0]);
        let p = masked_softmax(&[0.0; 4], &[true, false, true, true]).unwrap();
        for k in [0, 2, 3] {
            assert!((p[k] - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(p[1], 0.0);
        let mask = [true, true, false, true];
        let a = masked_softmax(&scores, &mask).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + 17.25).collect();
        let b = masked_softmax(&shifted, &mask).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(masked_softmax(&scores, &[false; 4]).is_err());
    }

    #[test]
    fn greedy_is_grammatical() {
        let m = small();
        let a = m.greedy_parse(&["take", "aspirin", "100", "mg", "daily", "."]);
        assert_eq!(a.len(), 6);
        decode_bilou(&a, &m.inventory).unwrap();
        let one = m.greedy_parse(&["aspirin"]);
        assert!(matches!(one[0], Action::Out | Action::Unit(_)));
        assert!(m.greedy_parse::<&str>(&[]).is_empty());
    }

    #[test]
    fn json_round_trip() {
        let m = small();
        let back = TaggerModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let mut broken = m.clone();
        broken.params.out_bias.pop();
        assert!(TaggerModel::from_json(&broken.to_json().unwrap()).is_err());
    }

    #[test]
    fn reloaded_model_scores_identically() {
        let mut m = small();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for t in m.params.tensors_mut() {
            for w in t.iter_mut() {
                *w = rng.gen_range(-1.0..1.0) / 3.0;
            }
        }
        let back = TaggerModel::from_json(&m.to_json().unwrap()).unwrap();
        for _ in 0..100 {
            let n = rng.gen_range(1..12);
            let tokens: Vec<String> = (0..n)
                .map(|_| format!("t{}", rng.gen_range(0..40)))
                .collect();
            let refs: Vec<&str> = tokens.iter().map(String::as_str).collect();
            let bits = |v: Vec<f64>| -> Vec<u64> { v.into_iter().map(f64::to_bits).collect() };
            assert_eq!(
                bits(m.contextual_vectors(&refs)),
                bits(back.contextual_vectors(&refs))
            );
            let gold = m.greedy_parse(&tokens);
            let loss = |x: &TaggerModel| x.loss_and_grad(&refs, &gold, None).unwrap().to_bits();
            assert_eq!(loss(&m), loss(&back));
            assert_eq!(m.greedy_parse(&tokens), back.greedy_parse(&tokens));
        }
    }

    fn flat(p: &Params) -> Vec<f64> {
        p.tensors().into_iter().flatten().copied().collect()
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let mut m = small();
        m.hyperparams.depth = 2;
        // Nonzero biases so every relu sees both signs.
        for (i, b) in m.params.proj_bias.iter_mut().enumerate() {
            *b = 0.05 * i as f64 - 0.1;
        }
        let inv = m.inventory.clone();
        let d = inv.label_index("Drug").unwrap();
        let tokens = ["take", "acetyl", "salicylic", "acid", "now"];
        let gold = [
            Action::Out,
            Action::Begin(d),
            Action::Inside(d),
            Action::Last(d),
            Action::Out,
        ];
        let mut grad = m.params.zeros_like();
        m.loss_and_grad(&tokens, &gold, Some((&mut grad, 1.0)))
            .unwrap();
        let analytic = flat(&grad);

        let step = 1e-3;
        let mut numeric = Vec::with_capacity(analytic.len());
        let n_tensors = m.params.tensors().len();
        for t in 0..n_tensors {
            let len = m.params.tensors()[t].len();
            for i in 0..len {
                let mut plus = m.clone();
                plus.params.tensors_mut()[t][i] += step;
                let mut minus = m.clone();
                minus.params.tensors_mut()[t][i] -= step;
                let lp = plus.loss_and_grad(&tokens, &gold, None).unwrap();
                let lm = minus.loss_and_grad(&tokens, &gold, None).unwrap();
                numeric.push((lp - lm) / (2.0 * step));
            }
        }
        let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let diff: Vec<f64> = analytic.iter().zip(&numeric).map(|(a, b)| a - b).collect();
        let rel = norm(&diff) / (norm(&analytic) + norm(&numeric));
        assert!(norm(&analytic) > 0.0);
        assert!(rel < 1e-4, "relative error {rel}");
    }

    #[test]
    fn gold_must_be_grammatical() {
        let m = small();
        let err = m
            .loss_and_grad(&["a", "b"], &[Action::Inside(0), Action::Last(0)], None)
            .unwrap_err();
        assert!(matches!(err, Error::Integrity(_)));
    }
}
