//! Named parameter storage, initialization rules, staging onto tapes, and
//! self-describing checkpoints (RTNS tensors + JSON config sidecar).
//!
//! Initialization contract: the backbone (target patch embedding, blocks,
//! conditioning MLP, instruction table) draws small random values, while
//! every conditioning route (source/mask/reference embeddings, stream
//! tags) and all adaptive-norm modulations and the output head start at
//! exactly zero.

use std::collections::{HashMap, HashSet};
use std::path::Path;

use v2vforge_tensor::{
    read_checkpoint, write_checkpoint, NodeId, Scalar, SplitRng, Tape, Tensor,
};

use crate::surrogate::mask_latent_channels;
use crate::{ModelConfig, ModelError, Result, Tuning};

const INIT_STD: f64 = 0.02;

#[derive(Debug, Clone)]
pub struct ModelParams {
    pub config: ModelConfig,
    tensors: Vec<(String, Tensor<f32>)>,
}

impl ModelParams {
    /// Fresh initialization under the config's zero-init discipline.
    /// LoRA adapters are not created here; see [`crate::lora_attach`].
    pub fn init(config: &ModelConfig, seed: u64) -> Result<ModelParams> {
        config.validate()?;
        let mut rng = SplitRng::new(seed);
        let d = config.model_dim;
        let mlp = config.mlp_ratio * d;
        let video_pd = config.patch_dim(3);
        let mask_pd = config.patch_dim(mask_latent_channels(config.mask_injection));
        let vocab = config.vocab.len();

        let mut tensors: Vec<(String, Tensor<f32>)> = Vec::new();
        let randn = |name: &str, shape: &[usize], rng: &mut SplitRng| {
            let t = Tensor::randn(shape, INIT_STD, &mut rng.split_str(name));
            (name.to_string(), t)
        };
        let zeros = |name: &str, shape: &[usize]| (name.to_string(), Tensor::zeros(shape));

        tensors.push(randn("embed.tgt.w", &[video_pd, d], &mut rng));
        tensors.push(zeros("embed.tgt.b", &[1, d]));
        // Conditioning routes: exactly zero so a fresh editor ignores them.
        tensors.push(zeros("embed.src.w", &[video_pd, d]));
        tensors.push(zeros("embed.src.b", &[1, d]));
        tensors.push(zeros("embed.msk.w", &[mask_pd, d]));
        tensors.push(zeros("embed.msk.b", &[1, d]));
        tensors.push(zeros("embed.ref.w", &[video_pd, d]));
        tensors.push(zeros("embed.ref.b", &[1, d]));
        tensors.push(zeros("tags", &[4, d]));

        tensors.push(randn("instr.table", &[vocab, d], &mut rng));
        tensors.push(randn("tmlp.w1", &[d, d], &mut rng));
        tensors.push(zeros("tmlp.b1", &[1, d]));
        tensors.push(randn("tmlp.w2", &[d, d], &mut rng));
        tensors.push(zeros("tmlp.b2", &[1, d]));

        for i in 0..config.depth {
            let p = |suffix: &str| format!("blocks.{i}.{suffix}");
            // AdaLN-Zero: zero modulation makes every block start as identity.
            tensors.push(zeros(&p("mod.w"), &[d, 6 * d]));
            tensors.push(zeros(&p("mod.b"), &[1, 6 * d]));
            for proj in ["q", "k", "v", "o"] {
                tensors.push(randn(&p(&format!("attn.{proj}.w")), &[d, d], &mut rng));
                // No key bias: softmax shifts per row cancel it exactly,
                // so it would be an unlearnable null parameter.
                if proj != "k" {
                    tensors.push(zeros(&p(&format!("attn.{proj}.b")), &[1, d]));
                }
            }
            tensors.push(randn(&p("mlp.w1"), &[d, mlp], &mut rng));
            tensors.push(zeros(&p("mlp.b1"), &[1, mlp]));
            tensors.push(randn(&p("mlp.w2"), &[mlp, d], &mut rng));
            tensors.push(zeros(&p("mlp.b2"), &[1, d]));
        }

        tensors.push(zeros("head.mod.w", &[d, 2 * d]));
        tensors.push(zeros("head.mod.b", &[1, 2 * d]));
        tensors.push(zeros("head.w", &[d, video_pd]));
        tensors.push(zeros("head.b", &[1, video_pd]));

        Ok(ModelParams {
            config: config.clone(),
            tensors,
        })
    }

    pub fn get(&self, name: &str) -> Result<&Tensor<f32>> {
        self.tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor<f32>> {
        self.tensors
            .iter_mut()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.iter().any(|(n, _)| n == name)
    }

    pub fn insert(&mut self, name: String, tensor: Tensor<f32>) {
        debug_assert!(!self.contains(&name), "duplicate parameter {name}");
        self.tensors.push((name, tensor));
    }

    pub fn remove(&mut self, name: &str) -> Option<Tensor<f32>> {
        let idx = self.tensors.iter().position(|(n, _)| n == name)?;
        Some(self.tensors.remove(idx).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<f32>)> {
        self.tensors.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn names(&self) -> Vec<String> {
        self.tensors.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn tensors(&self) -> &[(String, Tensor<f32>)] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut Vec<(String, Tensor<f32>)> {
        &mut self.tensors
    }

    pub fn total_param_count(&self) -> usize {
        self.tensors.iter().map(|(_, t)| t.numel()).sum()
    }

    fn is_conditioning(name: &str) -> bool {
        name.starts_with("embed.src")
            || name.starts_with("embed.msk")
            || name.starts_with("embed.ref")
            || name == "tags"
    }

    fn is_lora(name: &str) -> bool {
        name.ends_with(".lora_a") || name.ends_with(".lora_b")
    }

    /// Backbone = everything that is neither a conditioning route nor an
    /// adapter; frozen under LoRA tuning.
    pub fn backbone_names(&self) -> Vec<String> {
        self.tensors
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| !Self::is_conditioning(n) && !Self::is_lora(n))
            .collect()
    }

    pub fn conditioning_names(&self) -> Vec<String> {
        self.tensors
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| Self::is_conditioning(n))
            .collect()
    }

    pub fn lora_names(&self) -> Vec<String> {
        self.tensors
            .iter()
            .map(|(n, _)| n.clone())
            .filter(|n| Self::is_lora(n))
            .collect()
    }

    /// Trainable set for editor fine-tuning under the configured tuning
    /// mode. Backbone-only pretraining instead trains `backbone_names`.
    pub fn trainable_names(&self) -> HashSet<String> {
        match self.config.tuning {
            Tuning::Full => self
                .tensors
                .iter()
                .map(|(n, _)| n.clone())
                .filter(|n| !Self::is_lora(n))
                .collect(),
            Tuning::Lora { .. } => {
                let mut set: HashSet<String> = self.conditioning_names().into_iter().collect();
                set.extend(self.lora_names());
                set
            }
        }
    }

    pub fn trainable_param_count(&self) -> usize {
        let trainable = self.trainable_names();
        self.tensors
            .iter()
            .filter(|(n, _)| trainable.contains(n))
            .map(|(_, t)| t.numel())
            .sum()
    }

    /// FNV-1a over the little-endian bytes of the named tensors, in order.
    pub fn checksum_of(&self, names: &[String]) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |b: u8| {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01B3);
        };
        for name in names {
            for b in name.as_bytes() {
                eat(*b);
            }
            if let Ok(t) = self.get(name) {
                for v in t.data() {
                    for b in v.to_le_bytes() {
                        eat(b);
                    }
                }
            }
        }
        h
    }

    pub fn backbone_checksum(&self) -> u64 {
        self.checksum_of(&self.backbone_names())
    }

    /// Write the RTNS tensor dictionary plus a `<path>.json` config sidecar
    /// so checkpoints are self-describing.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        write_checkpoint(&self.tensors, path)?;
        let sidecar = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.config)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        std::fs::write(&sidecar, json)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", sidecar.display())))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ModelParams> {
        let path = path.as_ref();
        let tensors = read_checkpoint(path)?;
        let sidecar = sidecar_path(path);
        let json = std::fs::read_to_string(&sidecar)
            .map_err(|e| ModelError::Checkpoint(format!("{}: {e}", sidecar.display())))?;
        let config: ModelConfig =
            serde_json::from_str(&json).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        config.validate()?;
        Ok(ModelParams { config, tensors })
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".json");
    std::path::PathBuf::from(s)
}

/// Model tensors staged onto a tape: trainable ones as registered params,
/// the rest as constant leaves.
pub struct TapeParams {
    nodes: HashMap<String, NodeId>,
}

impl TapeParams {
    /// Assemble from externally registered nodes (gradient checkers own
    /// the registration in that case).
    pub fn from_nodes(pairs: impl IntoIterator<Item = (String, NodeId)>) -> Self {
        TapeParams {
            nodes: pairs.into_iter().collect(),
        }
    }

    pub fn node(&self, name: &str) -> Result<NodeId> {
        self.nodes
            .get(name)
            .copied()
            .ok_or_else(|| ModelError::MissingParam(name.to_string()))
    }

    pub fn has(&self, name: &str) -> bool {
        self.nodes.contains_key(name)
    }
}

pub fn stage_params<T: Scalar>(
    tape: &mut Tape<T>,
    params: &ModelParams,
    trainable: &HashSet<String>,
) -> TapeParams {
    let mut nodes = HashMap::new();
    for (name, tensor) in params.iter() {
        let value: Tensor<T> = tensor.cast();
        let id = if trainable.contains(name) {
            tape.param(name.to_string(), value)
        } else {
            tape.leaf(value)
        };
        nodes.insert(name.to_string(), id);
    }
    TapeParams { nodes }
}
