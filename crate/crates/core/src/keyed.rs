//! Keyed compilation of a plain model and inference on shuffled inputs.
//!
//! Compilation walks the layers with a current key. Every conv or pool layer
//! gets a fresh output key and offsets derived from (input key, output key).
//! Pointwise layers and residual adds leave the key alone. A main branch that
//! feeds a residual add ends in a spatial layer forced to reuse the key of
//! the skip source, so both addends share one ordering. Right before GAP or
//! flatten (or after the last layer, for models without either) the feature
//! map is put back into plain order.

use crate::deform::{deform_conv2d, deform_maxpool2d, derive_conv_offsets, derive_pool_offsets, OffsetVolume};
use crate::error::{Error, Result};
use crate::key::{invert_key, KeyChain, LayerKeySource, PermKey, SeededKeys};
use crate::model::{apply_pointwise_layer, check_input, plain_forward, Forward, Layer, ModelSpec};
use crate::ops::gather_spatial;
use crate::tensor::{max_abs_diff, relative_l2, Tensor};
use crate::transform::shuffle;

/// Offsets attached to one spatial layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerOffsets {
    pub layer: usize,
    pub volume: OffsetVolume,
}

/// A plain model plus everything needed to run it on shuffled inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct KeyedModel {
    spec: ModelSpec,
    chain: KeyChain,
    offsets: Vec<LayerOffsets>,
    /// Chain index of the key ordering each layer's output; `None` once the
    /// activation is back in plain order.
    layer_keys: Vec<Option<usize>>,
    final_unshuffle: Option<PermKey>,
    /// Layer before which the final unshuffle runs; `layers.len()` means
    /// after the last layer.
    unshuffle_at: usize,
    final_inverse: Option<PermKey>,
}

impl KeyedModel {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn chain(&self) -> &KeyChain {
        &self.chain
    }

    pub fn acquisition_key(&self) -> &PermKey {
        &self.chain.entries[0]
    }

    pub fn offsets(&self) -> &[LayerOffsets] {
        &self.offsets
    }

    /// Mutable access to the stored offsets, for fault injection.
    pub fn offsets_mut(&mut self) -> &mut [LayerOffsets] {
        &mut self.offsets
    }

    pub fn final_unshuffle(&self) -> Option<&PermKey> {
        self.final_unshuffle.as_ref()
    }

    /// Key that orders the keyed output of layer `i`, or `None` when that
    /// output is already in plain order.
    pub fn layer_key(&self, i: usize) -> Option<&PermKey> {
        self.layer_keys[i].map(|k| &self.chain.entries[k])
    }

    /// Rebuilds a keyed model from stored parts, re-deriving every offset
    /// volume from the chain and rejecting any that disagree.
    pub fn from_parts(
        spec: ModelSpec,
        chain: KeyChain,
        offsets: Vec<LayerOffsets>,
        final_unshuffle: Option<PermKey>,
    ) -> Result<Self> {
        let acquisition = chain
            .entries
            .first()
            .ok_or_else(|| Error::Integrity("key chain is empty".into()))?
            .clone();
        let mut replay = chain.entries[1..].iter();
        let rebuilt = compile_walk(spec, &acquisition, chain.session_seed, |layer, h, w, _forced| {
            let key = replay
                .next()
                .ok_or_else(|| Error::Integrity(format!("key chain has no entry for layer {}", layer)))?;
            key.check_grid(h, w)?;
            Ok(key.clone())
        })?;
        if replay.next().is_some() {
            return Err(Error::Integrity(
                "key chain has more entries than spatial layers".into(),
            ));
        }
        if rebuilt.offsets.len() != offsets.len() {
            return Err(Error::Integrity(format!(
                "expected {} offset volumes, found {}",
                rebuilt.offsets.len(),
                offsets.len()
            )));
        }
        for (want, got) in rebuilt.offsets.iter().zip(&offsets) {
            if want.layer != got.layer || want.volume != got.volume {
                return Err(Error::Integrity(format!(
                    "offsets for layer {} do not match the key chain",
                    got.layer
                )));
            }
        }
        if rebuilt.final_unshuffle != final_unshuffle {
            return Err(Error::Integrity(
                "final unshuffle key does not match the key chain".into(),
            ));
        }
        Ok(rebuilt)
    }
}

/// Compiles `model` for inputs shuffled by `acquisition_key`, drawing each
/// layer key as `generate_key(h, w, session_seed ^ layer)`.
pub fn keyed_compile(model: &ModelSpec, acquisition_key: &PermKey, session_seed: u64) -> Result<KeyedModel> {
    keyed_compile_with(model, acquisition_key, session_seed, &SeededKeys(session_seed))
}

/// [`keyed_compile`] with a custom source for the per-layer keys.
pub fn keyed_compile_with(
    model: &ModelSpec,
    acquisition_key: &PermKey,
    session_seed: u64,
    keys: &dyn LayerKeySource,
) -> Result<KeyedModel> {
    compile_walk(
        model.clone(),
        acquisition_key,
        session_seed,
        |layer, h, w, forced| match forced {
            Some(k) => Ok(k.clone()),
            None => keys.key_for_layer(layer, h, w),
        },
    )
}

/// For each layer, the skip sources whose key it must adopt: the last spatial
/// layer strictly between a residual source and its add.
fn forced_sources(model: &ModelSpec) -> Vec<Vec<usize>> {
    let layers = model.layers();
    let mut forced = vec![Vec::new(); layers.len()];
    for (r, layer) in layers.iter().enumerate() {
        if let Layer::ResidualAdd { from } = *layer {
            if let Some(s) = (from + 1..r).rev().find(|&s| layers[s].is_spatial()) {
                forced[s].push(from);
            }
        }
    }
    forced
}

fn compile_walk(
    spec: ModelSpec,
    acquisition_key: &PermKey,
    session_seed: u64,
    mut next_key: impl FnMut(usize, usize, usize, Option<&PermKey>) -> Result<PermKey>,
) -> Result<KeyedModel> {
    let [_, h, w] = spec.input_dims();
    acquisition_key.check_grid(h, w)?;
    let forced = forced_sources(&spec);
    let mut chain = vec![acquisition_key.clone()];
    let mut current: Option<usize> = Some(0);
    let mut layer_keys: Vec<Option<usize>> = Vec::with_capacity(spec.layers().len());
    let mut offsets = Vec::new();
    let mut final_unshuffle = None;
    let mut unshuffle_at = spec.layers().len();

    for (i, layer) in spec.layers().iter().enumerate() {
        match layer {
            Layer::Conv2d { .. } | Layer::MaxPool2d(_) => {
                let input_idx = current.ok_or_else(|| Error::model(i, "spatial layer after head"))?;
                let (oh, ow) = match spec.layer_dims(i) {
                    [_, oh, ow] => (*oh, *ow),
                    _ => unreachable!("validated spatial output"),
                };
                let mut target: Option<usize> = None;
                for &src in &forced[i] {
                    let idx = layer_keys[src].ok_or_else(|| Error::model(i, "residual source has no spatial key"))?;
                    match target {
                        Some(t) if chain[t] != chain[idx] => {
                            let sources: Vec<String> = forced[i].iter().map(|s| s.to_string()).collect();
                            let msg = format!(
                                "residual key reconciliation impossible: skip sources need different keys (layers {})",
                                sources.join(", ")
                            );
                            return Err(Error::model(i, msg));
                        }
                        _ => target = Some(idx),
                    }
                }
                let forced_key = target.map(|t| chain[t].clone());
                let out_key = next_key(i, oh, ow, forced_key.as_ref())?;
                let key_in = &chain[input_idx];
                let volume = match layer {
                    Layer::Conv2d { params, .. } => derive_conv_offsets(key_in, &out_key, params)?,
                    Layer::MaxPool2d(p) => derive_pool_offsets(key_in, &out_key, p)?,
                    _ => unreachable!(),
                };
                offsets.push(LayerOffsets { layer: i, volume });
                chain.push(out_key);
                current = Some(chain.len() - 1);
            }
            Layer::ResidualAdd { from } => {
                let same = match (current, layer_keys[*from]) {
                    (Some(a), Some(b)) => chain[a] == chain[b],
                    (None, None) => true,
                    _ => false,
                };
                if !same {
                    return Err(Error::model(
                        i,
                        format!(
                            "residual key reconciliation impossible: layer {} is ordered by a different key",
                            from
                        ),
                    ));
                }
            }
            Layer::GlobalAvgPool | Layer::Flatten => {
                if let Some(k) = current {
                    final_unshuffle = Some(chain[k].clone());
                    unshuffle_at = i;
                }
                current = None;
            }
            Layer::Relu | Layer::Affine { .. } | Layer::Dense { .. } => {}
        }
        layer_keys.push(current);
    }
    if let (Some(k), None) = (current, &final_unshuffle) {
        final_unshuffle = Some(chain[k].clone());
        unshuffle_at = spec.layers().len();
    }
    let final_inverse = final_unshuffle.as_ref().map(invert_key).transpose()?;
    Ok(KeyedModel {
        spec,
        chain: KeyChain {
            entries: chain,
            session_seed,
        },
        offsets,
        layer_keys,
        final_unshuffle,
        unshuffle_at,
        final_inverse,
    })
}

/// Runs a keyed model on an already shuffled input. Intermediates are the raw
/// keyed activations, still ordered by [`KeyedModel::layer_key`].
pub fn keyed_forward(keyed: &KeyedModel, shuffled_input: &Tensor) -> Result<Forward> {
    let spec = &keyed.spec;
    check_input(spec, shuffled_input)?;
    let mut intermediates: Vec<Tensor> = Vec::with_capacity(spec.layers().len());
    let mut offsets = keyed.offsets.iter();
    for (i, layer) in spec.layers().iter().enumerate() {
        let x = intermediates.last().unwrap_or(shuffled_input);
        let y = match layer {
            Layer::Conv2d { params, weight, bias } => {
                let off = next_offsets(&mut offsets, i)?;
                deform_conv2d(x, weight, bias, off, params)?
            }
            Layer::MaxPool2d(p) => {
                let off = next_offsets(&mut offsets, i)?;
                deform_maxpool2d(x, off, p)?
            }
            other if i == keyed.unshuffle_at => {
                let inverse = keyed.final_inverse.as_ref().expect("unshuffle key present");
                let plain = gather_spatial(x, inverse)?;
                apply_pointwise_layer(other, i, &plain, &intermediates)?
            }
            other => apply_pointwise_layer(other, i, x, &intermediates)?,
        };
        intermediates.push(y);
    }
    let last = intermediates.last().unwrap_or(shuffled_input);
    let output = match (&keyed.final_inverse, keyed.unshuffle_at == spec.layers().len()) {
        (Some(inverse), true) => gather_spatial(last, inverse)?,
        _ => last.clone(),
    };
    Ok(Forward { output, intermediates })
}

fn next_offsets<'a>(it: &mut std::slice::Iter<'a, LayerOffsets>, layer: usize) -> Result<&'a OffsetVolume> {
    match it.next() {
        Some(o) if o.layer == layer => Ok(&o.volume),
        _ => Err(Error::model(layer, "no offset volume stored for this layer")),
    }
}

/// Plain versus keyed comparison for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub bitwise_equal: bool,
    pub max_abs_diff: f32,
    pub relative_l2: f64,
    /// `(layer, max |plain − unshuffled keyed|)` for every layer.
    pub per_layer_diffs: Vec<(usize, f32)>,
    /// Whether the predicted class agrees; `None` unless the output is a
    /// vector of at least two scores.
    pub argmax_equal: Option<bool>,
}

impl EquivalenceReport {
    /// First layer whose unshuffled keyed activation differs from plain.
    pub fn first_divergent_layer(&self) -> Option<usize> {
        self.per_layer_diffs.iter().find(|(_, d)| *d != 0.0).map(|(i, _)| *i)
    }
}

/// Compiles `model` with the key, runs both engines and compares.
pub fn verify_equivalence(
    model: &ModelSpec,
    acquisition_key: &PermKey,
    session_seed: u64,
    input: &Tensor,
) -> Result<EquivalenceReport> {
    let keyed = keyed_compile(model, acquisition_key, session_seed)?;
    verify_compiled(&keyed, input)
}

/// Compares an already compiled model against its plain spec on the plain
/// `input`, shuffling it with the model's own acquisition key.
pub fn verify_compiled(keyed: &KeyedModel, input: &Tensor) -> Result<EquivalenceReport> {
    let shuffled = shuffle(input, keyed.acquisition_key())?;
    compare_paths(keyed, input, &shuffled)
}

/// Compares plain inference on `plain_input` with keyed inference on
/// `shuffled_input`, which may have been shuffled with any key.
pub fn compare_paths(keyed: &KeyedModel, plain_input: &Tensor, shuffled_input: &Tensor) -> Result<EquivalenceReport> {
    let plain = plain_forward(&keyed.spec, plain_input)?;
    let keyed_fwd = keyed_forward(keyed, shuffled_input)?;
    let mut per_layer_diffs = Vec::with_capacity(plain.intermediates.len());
    for (i, (p, k)) in plain.intermediates.iter().zip(&keyed_fwd.intermediates).enumerate() {
        let diff = match keyed.layer_key(i) {
            Some(key) => max_abs_diff(p, &gather_spatial(k, &invert_key(key)?)?),
            None => max_abs_diff(p, k),
        };
        per_layer_diffs.push((i, diff));
    }
    let (a, b) = (&keyed_fwd.output, &plain.output);
    let argmax_equal = (b.rank() == 1 && b.len() >= 2).then(|| a.argmax() == b.argmax());
    Ok(EquivalenceReport {
        bitwise_equal: a.bit_eq(b),
        max_abs_diff: max_abs_diff(a, b),
        relative_l2: relative_l2(a, b),
        per_layer_diffs,
        argmax_equal,
    })
}

/// Aggregate plain-versus-wrong-key divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Divergence {
    pub mean_relative_l2: f64,
    pub argmax_agreement: f64,
}

/// Runs the model compiled for `true_key` on inputs shuffled by `wrong_key`
/// and measures how far the outputs drift from plain inference.
pub fn divergence_score(
    model: &ModelSpec,
    true_key: &PermKey,
    wrong_key: &PermKey,
    session_seed: u64,
    inputs: &[Tensor],
) -> Result<Divergence> {
    if inputs.is_empty() {
        return Err(Error::Param("divergence_score needs at least one input".into()));
    }
    wrong_key.check_grid(true_key.height(), true_key.width())?;
    let keyed = keyed_compile(model, true_key, session_seed)?;
    let mut rel = 0.0;
    let mut agree = 0usize;
    for x in inputs {
        let report = compare_paths(&keyed, x, &shuffle(x, wrong_key)?)?;
        rel += report.relative_l2;
        if report.argmax_equal.unwrap_or(report.bitwise_equal) {
            agree += 1;
        }
    }
    let n = inputs.len() as f64;
    Ok(Divergence {
        mean_relative_l2: rel / n,
        argmax_agreement: agree as f64 / n,
    })
}
