//! Gradient-verification fixture: a small editor with randomized
//! parameters whose full backward pass is compared against central finite
//! differences in 64-bit mode.

use v2vforge_tensor::{check_gradients, GradCheckReport, SplitRng, Tape, Tensor};

use crate::{
    model_forward, Conditioning, EditorInputs, LatentGrid, MaskInjection, ModelConfig,
    ModelParams, TapeParams, Tuning,
};

/// Build the fixture and return the finite-difference report.
///
/// Every parameter is drawn from a seeded normal so no gradient is
/// structurally zero (relative error against a zero central difference is
/// meaningless). The loss is the flow-matching MSE against a fixed random
/// velocity target, with mask and reference streams both active.
pub fn check_model_gradients_fixture(width: usize, depth: usize, step: f64) -> GradCheckReport {
    let mut cfg = ModelConfig::desk_default(vec![
        "<null>".into(),
        "make".into(),
        "it".into(),
        "red".into(),
    ]);
    cfg.model_dim = width;
    cfg.depth = depth;
    cfg.heads = 2;
    cfg.vae_factors = (2, 2, 2);
    cfg.conditioning = Conditioning::SeqCat;
    cfg.mask_injection = MaskInjection::AddToSrc;
    cfg.tuning = Tuning::Full;

    let skeleton = ModelParams::init(&cfg, 0).expect("valid fixture config");
    let mut rng = SplitRng::new(4242);
    let params: Vec<(String, Tensor<f64>)> = skeleton
        .iter()
        .map(|(name, tensor)| {
            let mut stream = rng.split_str(name);
            (
                name.to_string(),
                Tensor::<f64>::randn(tensor.shape(), 0.3, &mut stream),
            )
        })
        .collect();

    let latent = |tag: u64, shape: (usize, usize, usize, usize)| {
        let mut stream = rng.split(tag);
        let (n, c, h, w) = shape;
        let data = (0..n * c * h * w).map(|_| stream.uniform() as f32).collect();
        LatentGrid::new(n, c, h, w, data)
    };
    let z_tgt = latent(1, (2, 3, 4, 4));
    let z_src = latent(2, (2, 3, 4, 4));
    let z_msk = latent(3, (2, 3, 4, 4));
    let z_ref = latent(4, (1, 3, 4, 4));
    let target_tokens = {
        let mut stream = rng.split(5);
        Tensor::<f64>::randn(&[2 * 2 * 2, cfg.patch_dim(3)], 1.0, &mut stream)
    };

    let names: Vec<String> = params.iter().map(|(n, _)| n.clone()).collect();
    let cfg_for_f = cfg.clone();
    let f = move |tape: &mut Tape<f64>, ids: &[v2vforge_tensor::NodeId]| {
        let staged = TapeParams::from_nodes(
            names.iter().cloned().zip(ids.iter().copied()),
        );
        let inputs = EditorInputs {
            z_tgt_noisy: &z_tgt,
            z_src: &z_src,
            z_msk: Some(&z_msk),
            z_ref: Some(&z_ref),
            timestep: 0.4,
            instruction_ids: &[1, 2, 3],
        };
        let (out, _) = model_forward(tape, &staged, &cfg_for_f, &inputs)
            .expect("fixture forward cannot fail");
        let target = tape.leaf(target_tokens.clone());
        tape.mse(out, target)
    };

    check_gradients(f, &params, step).expect("fixture function is deterministic")
}
