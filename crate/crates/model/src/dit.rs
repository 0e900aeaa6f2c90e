//! Stream assembly and the transformer forward pass.
//!
//! Pre-norm blocks with adaptive-norm modulation (zero-init, so blocks
//! start as identity), full bidirectional attention over the assembled
//! sequence, and an output head that reads only target-tagged positions.

use v2vforge_tensor::{sinusoidal_embedding, Axis, NodeId, Scalar, Tape, Tensor};

use crate::surrogate::mask_latent_channels;
use crate::tokens::{patchify, positional_codes, StreamCounts, StreamTag, TokenSequence};
use crate::{Conditioning, LatentGrid, MaskInjection, ModelConfig, ModelError, Result, TapeParams};

/// Reserved vocabulary index substituted for the instruction in the
/// unconditional guidance branch.
pub const NULL_TOKEN: usize = 0;

/// Closed-vocabulary instruction tokenizer. Unknown words map to the null
/// token so shapes stay static across prompts.
#[derive(Debug, Clone)]
pub struct InstructionEncoder {
    vocab: Vec<String>,
}

impl InstructionEncoder {
    pub fn new(vocab: &[String]) -> Self {
        InstructionEncoder { vocab: vocab.to_vec() }
    }

    /// Build a vocabulary from instruction templates; index 0 is `<null>`.
    pub fn build_vocab(instructions: &[String]) -> Vec<String> {
        let mut vocab = vec!["<null>".to_string()];
        for text in instructions {
            for word in text.split_whitespace() {
                let w = word.to_lowercase();
                if !vocab.contains(&w) {
                    vocab.push(w);
                }
            }
        }
        vocab
    }

    pub fn encode(&self, instruction: &str) -> Vec<usize> {
        let ids: Vec<usize> = instruction
            .split_whitespace()
            .map(|w| {
                let w = w.to_lowercase();
                self.vocab.iter().position(|v| *v == w).unwrap_or(NULL_TOKEN)
            })
            .collect();
        if ids.is_empty() {
            vec![NULL_TOKEN]
        } else {
            ids
        }
    }

    pub fn null_sequence(&self) -> Vec<usize> {
        vec![NULL_TOKEN]
    }
}

/// Per-forward inputs. The mask latent must already be encoded along the
/// route the config's mask injection demands; `None` substitutes an
/// all-zero latent (the blank-mask default).
pub struct EditorInputs<'a> {
    pub z_tgt_noisy: &'a LatentGrid,
    pub z_src: &'a LatentGrid,
    pub z_msk: Option<&'a LatentGrid>,
    pub z_ref: Option<&'a LatentGrid>,
    pub timestep: f64,
    pub instruction_ids: &'a [usize],
}

fn linear<T: Scalar>(
    tape: &mut Tape<T>,
    x: NodeId,
    w: NodeId,
    b: NodeId,
) -> NodeId {
    let y = tape.matmul(x, w);
    tape.add_row(y, b)
}

/// Effective projection weight: the raw matrix, or `W + (alpha/r) * B * A`
/// when a LoRA adapter is attached to this projection.
fn effective_weight<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    base: &str,
) -> Result<NodeId> {
    let w = params.node(&format!("{base}.w"))?;
    let a_name = format!("{base}.lora_a");
    if !params.has(&a_name) {
        return Ok(w);
    }
    let crate::Tuning::Lora { rank, alpha } = cfg.tuning else {
        return Err(ModelError::Lora(format!(
            "adapter tensors present on {base} but tuning mode is not LoRA"
        )));
    };
    let a = params.node(&a_name)?;
    let b = params.node(&format!("{base}.lora_b"))?;
    let delta = tape.matmul(b, a);
    let scaled = tape.mul_scalar(delta, alpha / rank as f64);
    Ok(tape.add(w, scaled))
}

/// Embed one latent stream: patchify, apply the stream's own patch
/// embedding, add shared positional codes and the stream tag embedding.
fn embed_stream<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    lat: &LatentGrid,
    embed: &str,
    tag: StreamTag,
) -> Result<(NodeId, Vec<(usize, usize, usize)>)> {
    let (tokens, positions) = patchify::<T>(lat, cfg.patch)?;
    let tok = tape.leaf(tokens);
    let w = params.node(&format!("{embed}.w"))?;
    let b = params.node(&format!("{embed}.b"))?;
    let embedded = linear(tape, tok, w, b);
    let pos = tape.leaf(positional_codes::<T>(&positions, cfg.model_dim));
    let with_pos = tape.add(embedded, pos);
    let tags = params.node("tags")?;
    let tag_row = tape.slice(tags, Axis::Rows, tag.embedding_row(), 1);
    Ok((tape.add_row(with_pos, tag_row), positions))
}

/// Assemble the conditioning streams into one token sequence.
///
/// SeqCat order is `[src, tgt, (mask), (ref)]`; EmbedAdd folds the source
/// tokens into the target tokens and emits `[tgt, (ref)]`. Reference
/// tokens always come last.
pub fn assemble_tokens<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    inputs: &EditorInputs,
) -> Result<TokenSequence> {
    cfg.validate()?;
    if inputs.z_src.shape() != inputs.z_tgt_noisy.shape() {
        return Err(ModelError::Shape(format!(
            "source latent {:?} vs target {:?}",
            inputs.z_src.shape(),
            inputs.z_tgt_noisy.shape()
        )));
    }

    // Blank-mask default: an all-zero latent on the configured route.
    let (n, _, h, w) = inputs.z_src.shape();
    let mask_channels = mask_latent_channels(cfg.mask_injection);
    let blank; // keeps the zero latent alive when no mask is given
    let z_msk: &LatentGrid = match inputs.z_msk {
        Some(m) => {
            if (m.frames, m.height, m.width) != (n, h, w) || m.channels != mask_channels {
                return Err(ModelError::Shape(format!(
                    "mask latent {:?} incompatible with source {:?} on this route",
                    m.shape(),
                    inputs.z_src.shape()
                )));
            }
            m
        }
        None => {
            blank = LatentGrid::zeros(n, mask_channels, h, w);
            &blank
        }
    };

    let (mut src_tok, src_pos) =
        embed_stream(tape, params, cfg, inputs.z_src, "embed.src", StreamTag::Src)?;
    let (mut tgt_tok, tgt_pos) = embed_stream(
        tape,
        params,
        cfg,
        inputs.z_tgt_noisy,
        "embed.tgt",
        StreamTag::Tgt,
    )?;
    let (msk_tok, msk_pos) =
        embed_stream(tape, params, cfg, z_msk, "embed.msk", StreamTag::Mask)?;

    let mut mask_stream: Option<(NodeId, Vec<(usize, usize, usize)>)> = None;
    match cfg.mask_injection {
        MaskInjection::AddToSrc | MaskInjection::DownsampleAddToSrc => {
            src_tok = tape.add(src_tok, msk_tok);
        }
        MaskInjection::AddToTgt => {
            tgt_tok = tape.add(tgt_tok, msk_tok);
        }
        MaskInjection::SeqCatMask => {
            mask_stream = Some((msk_tok, msk_pos));
        }
    }

    let ref_stream = match inputs.z_ref {
        Some(z_ref) => Some(embed_stream(tape, params, cfg, z_ref, "embed.ref", StreamTag::Ref)?),
        None => None,
    };

    let t_src = src_pos.len();
    let t_tgt = tgt_pos.len();
    let mut parts: Vec<NodeId> = Vec::new();
    let mut tags: Vec<StreamTag> = Vec::new();
    let mut positions: Vec<(usize, usize, usize)> = Vec::new();
    let mut counts = StreamCounts::default();
    let tgt_rows;

    match cfg.conditioning {
        Conditioning::SeqCat => {
            parts.push(src_tok);
            tags.extend(std::iter::repeat(StreamTag::Src).take(t_src));
            positions.extend_from_slice(&src_pos);
            counts.src = t_src;

            tgt_rows = (t_src, t_src + t_tgt);
            parts.push(tgt_tok);
            tags.extend(std::iter::repeat(StreamTag::Tgt).take(t_tgt));
            positions.extend_from_slice(&tgt_pos);
            counts.tgt = t_tgt;

            if let Some((msk, pos)) = mask_stream {
                parts.push(msk);
                tags.extend(std::iter::repeat(StreamTag::Mask).take(pos.len()));
                counts.mask = pos.len();
                positions.extend_from_slice(&pos);
            }
        }
        Conditioning::EmbedAdd => {
            let fused = tape.add(tgt_tok, src_tok);
            tgt_rows = (0, t_tgt);
            parts.push(fused);
            tags.extend(std::iter::repeat(StreamTag::Tgt).take(t_tgt));
            positions.extend_from_slice(&tgt_pos);
            counts.tgt = t_tgt;
        }
    }

    if let Some((ref_tok, ref_pos)) = ref_stream {
        parts.push(ref_tok);
        tags.extend(std::iter::repeat(StreamTag::Ref).take(ref_pos.len()));
        counts.reference = ref_pos.len();
        positions.extend_from_slice(&ref_pos);
    }

    let node = if parts.len() == 1 {
        parts[0]
    } else {
        tape.concat(&parts, Axis::Rows)
    };
    Ok(TokenSequence {
        node,
        tags,
        positions,
        counts,
        tgt_rows,
    })
}

/// Conditioning vector: timestep MLP over a sinusoidal code plus the mean
/// of the instruction-word embeddings.
pub fn cond_vector<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    timestep: f64,
    instruction_ids: &[usize],
) -> Result<NodeId> {
    let d = cfg.model_dim;
    let t_code = tape.leaf(sinusoidal_embedding::<T>(timestep * 1000.0, d));
    let w1 = params.node("tmlp.w1")?;
    let b1 = params.node("tmlp.b1")?;
    let w2 = params.node("tmlp.w2")?;
    let b2 = params.node("tmlp.b2")?;
    let h = linear(tape, t_code, w1, b1);
    let h = tape.gelu(h);
    let t_emb = linear(tape, h, w2, b2);

    // Mean-pooled word embeddings via a constant one-hot-mean row.
    let vocab = cfg.vocab.len();
    let mut weights = vec![T::ZERO; vocab];
    let share = T::from_f64(1.0 / instruction_ids.len() as f64);
    for &id in instruction_ids {
        if id >= vocab {
            return Err(ModelError::Shape(format!(
                "instruction id {id} outside vocabulary of {vocab}"
            )));
        }
        weights[id] = weights[id] + share;
    }
    let pooling = tape.leaf(Tensor::new(vec![1, vocab], weights));
    let table = params.node("instr.table")?;
    let instr_emb = tape.matmul(pooling, table);

    Ok(tape.add(t_emb, instr_emb))
}

struct Modulation {
    shift: NodeId,
    scale: NodeId,
    gate: NodeId,
}

fn modulations<T: Scalar>(
    tape: &mut Tape<T>,
    cond: NodeId,
    w: NodeId,
    b: NodeId,
    d: usize,
    groups: usize,
) -> Vec<Modulation> {
    let m = linear(tape, cond, w, b);
    (0..groups)
        .map(|g| Modulation {
            shift: tape.slice(m, Axis::Cols, (3 * g) * d, d),
            scale: tape.slice(m, Axis::Cols, (3 * g + 1) * d, d),
            gate: tape.slice(m, Axis::Cols, (3 * g + 2) * d, d),
        })
        .collect()
}

fn modulated_norm<T: Scalar>(tape: &mut Tape<T>, x: NodeId, m: &Modulation) -> NodeId {
    let normed = tape.layer_norm(x, 1e-5);
    let scale1 = tape.add_scalar(m.scale, 1.0);
    let scaled = tape.mul_row(normed, scale1);
    tape.add_row(scaled, m.shift)
}

fn attention<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    block: usize,
    x: NodeId,
) -> Result<NodeId> {
    let d = cfg.model_dim;
    let head_dim = d / cfg.heads;
    let base = |proj: &str| format!("blocks.{block}.attn.{proj}");

    let proj = |tape: &mut Tape<T>, name: &str| -> Result<NodeId> {
        let w = effective_weight(tape, params, cfg, &base(name))?;
        let b = params.node(&format!("{}.b", base(name)))?;
        let y = tape.matmul(x, w);
        Ok(tape.add_row(y, b))
    };
    let q = proj(tape, "q")?;
    let k = proj(tape, "k")?;
    let v = proj(tape, "v")?;

    let mut heads = Vec::with_capacity(cfg.heads);
    let scale = 1.0 / (head_dim as f64).sqrt();
    for hi in 0..cfg.heads {
        let qh = tape.slice(q, Axis::Cols, hi * head_dim, head_dim);
        let kh = tape.slice(k, Axis::Cols, hi * head_dim, head_dim);
        let vh = tape.slice(v, Axis::Cols, hi * head_dim, head_dim);
        let kt = tape.transpose(kh);
        let scores = tape.matmul(qh, kt);
        let scores = tape.mul_scalar(scores, scale);
        let attn = tape.softmax(scores);
        heads.push(tape.matmul(attn, vh));
    }
    let merged = tape.concat(&heads, Axis::Cols);
    let wo = effective_weight(tape, params, cfg, &base("o"))?;
    let bo = params.node(&format!("{}.b", base("o")))?;
    let y = tape.matmul(merged, wo);
    Ok(tape.add_row(y, bo))
}

/// Full forward pass: assemble streams, run the blocks, and read the
/// velocity prediction off the target positions as a `[T_tgt, patch_dim]`
/// token matrix (unpatchify to recover the latent grid).
pub fn model_forward<T: Scalar>(
    tape: &mut Tape<T>,
    params: &TapeParams,
    cfg: &ModelConfig,
    inputs: &EditorInputs,
) -> Result<(NodeId, TokenSequence)> {
    if !(0.0..=1.0).contains(&inputs.timestep) {
        return Err(ModelError::Shape(format!(
            "timestep {} outside [0,1]",
            inputs.timestep
        )));
    }
    let seq = assemble_tokens(tape, params, cfg, inputs)?;
    let cond = cond_vector(tape, params, cfg, inputs.timestep, inputs.instruction_ids)?;

    let d = cfg.model_dim;
    let mut x = seq.node;
    for block in 0..cfg.depth {
        let mod_w = params.node(&format!("blocks.{block}.mod.w"))?;
        let mod_b = params.node(&format!("blocks.{block}.mod.b"))?;
        let mods = modulations(tape, cond, mod_w, mod_b, d, 2);

        let h = modulated_norm(tape, x, &mods[0]);
        let attn = attention(tape, params, cfg, block, h)?;
        let gated = tape.mul_row(attn, mods[0].gate);
        x = tape.add(x, gated);

        let h = modulated_norm(tape, x, &mods[1]);
        let w1 = params.node(&format!("blocks.{block}.mlp.w1"))?;
        let b1 = params.node(&format!("blocks.{block}.mlp.b1"))?;
        let w2 = params.node(&format!("blocks.{block}.mlp.w2"))?;
        let b2 = params.node(&format!("blocks.{block}.mlp.b2"))?;
        let m = linear(tape, h, w1, b1);
        let m = tape.gelu(m);
        let m = linear(tape, m, w2, b2);
        let gated = tape.mul_row(m, mods[1].gate);
        x = tape.add(x, gated);
    }

    let (t0, t1) = seq.tgt_rows;
    let x_tgt = tape.slice(x, Axis::Rows, t0, t1 - t0);
    let head_mod_w = params.node("head.mod.w")?;
    let head_mod_b = params.node("head.mod.b")?;
    let m = linear(tape, cond, head_mod_w, head_mod_b);
    let shift = tape.slice(m, Axis::Cols, 0, d);
    let scale = tape.slice(m, Axis::Cols, d, d);
    let normed = tape.layer_norm(x_tgt, 1e-5);
    let scale1 = tape.add_scalar(scale, 1.0);
    let scaled = tape.mul_row(normed, scale1);
    let shifted = tape.add_row(scaled, shift);
    let head_w = params.node("head.w")?;
    let head_b = params.node("head.b")?;
    let out = linear(tape, shifted, head_w, head_b);

    Ok((out, seq))
}
