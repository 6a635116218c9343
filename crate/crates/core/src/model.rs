//! Sequential CNN description with optional residual skips, and the plain
//! reference engine that evaluates it.

use std::sync::Arc;

use crate::deform::{ConvParams, PoolParams};
use crate::error::{Error, Result};
use crate::ops;
use crate::tensor::Tensor;

/// One layer of a [`ModelSpec`]. Weight tensors are reference counted so a
/// compiled keyed model shares the exact buffers of the plain model.
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Conv2d {
        params: ConvParams,
        weight: Arc<Tensor>,
        bias: Arc<Tensor>,
    },
    MaxPool2d(PoolParams),
    Relu,
    Affine {
        scale: Arc<Tensor>,
        shift: Arc<Tensor>,
    },
    /// Adds the output of layer `from` to the current activation.
    ResidualAdd {
        from: usize,
    },
    GlobalAvgPool,
    Flatten,
    Dense {
        weight: Arc<Tensor>,
        bias: Arc<Tensor>,
    },
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv2d { .. } => "conv2d",
            Layer::MaxPool2d(_) => "maxpool2d",
            Layer::Relu => "relu",
            Layer::Affine { .. } => "affine",
            Layer::ResidualAdd { .. } => "residual_add",
            Layer::GlobalAvgPool => "global_avg_pool",
            Layer::Flatten => "flatten",
            Layer::Dense { .. } => "dense",
        }
    }

    /// Conv and pool: the layers that resample the spatial grid.
    pub fn is_spatial(&self) -> bool {
        matches!(self, Layer::Conv2d { .. } | Layer::MaxPool2d(_))
    }

    /// GAP or flatten: the boundary after which activations are vectors.
    pub fn is_head(&self) -> bool {
        matches!(self, Layer::GlobalAvgPool | Layer::Flatten)
    }

    /// Every weight-bearing tensor of the layer, in declaration order.
    pub fn tensors(&self) -> Vec<&Arc<Tensor>> {
        match self {
            Layer::Conv2d { weight, bias, .. } | Layer::Dense { weight, bias } => vec![weight, bias],
            Layer::Affine { scale, shift } => vec![scale, shift],
            _ => Vec::new(),
        }
    }
}

/// A validated model: shapes chain from `input_dims` through every layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSpec {
    input_dims: [usize; 3],
    layers: Vec<Layer>,
    output_dims: Vec<Vec<usize>>,
}

impl ModelSpec {
    pub fn new(input_dims: [usize; 3], layers: Vec<Layer>) -> Result<Self> {
        let output_dims = infer_shapes(input_dims, &layers)?;
        Ok(ModelSpec {
            input_dims,
            layers,
            output_dims,
        })
    }

    pub fn input_dims(&self) -> [usize; 3] {
        self.input_dims
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Output dims of layer `i`.
    pub fn layer_dims(&self, i: usize) -> &[usize] {
        &self.output_dims[i]
    }

    /// Dims flowing into layer `i`.
    pub fn layer_input_dims(&self, i: usize) -> &[usize] {
        if i == 0 {
            &self.input_dims
        } else {
            &self.output_dims[i - 1]
        }
    }

    pub fn output_dims(&self) -> &[usize] {
        self.output_dims.last().map_or(&self.input_dims[..], |d| &d[..])
    }

    pub fn head_index(&self) -> Option<usize> {
        self.layers.iter().position(Layer::is_head)
    }

    pub fn spatial_layers(&self) -> impl Iterator<Item = usize> + '_ {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_spatial())
            .map(|(i, _)| i)
    }
}

fn infer_shapes(input_dims: [usize; 3], layers: &[Layer]) -> Result<Vec<Vec<usize>>> {
    if input_dims.contains(&0) {
        return Err(Error::Shape(format!("zero extent in input dims {:?}", input_dims)));
    }
    let mut dims: Vec<Vec<usize>> = Vec::with_capacity(layers.len());
    let mut cur = input_dims.to_vec();
    let mut head_seen = false;
    for (i, layer) in layers.iter().enumerate() {
        let chw = |cur: &[usize]| -> Result<(usize, usize, usize)> {
            match cur {
                [c, h, w] => Ok((*c, *h, *w)),
                _ => Err(Error::model(
                    i,
                    format!("{} needs a C×H×W input, got {:?}", layer.name(), cur),
                )),
            }
        };
        let next = match layer {
            Layer::Conv2d { params, weight, bias } => {
                let (c, h, w) = chw(&cur)?;
                params.validate().map_err(|e| Error::model(i, e.to_string()))?;
                if params.in_channels != c {
                    return Err(Error::model(
                        i,
                        format!("conv expects {} input channels, got {}", params.in_channels, c),
                    ));
                }
                let n = params.kernel;
                if weight.dims() != [params.out_channels, params.in_channels, n, n] {
                    return Err(Error::model(
                        i,
                        format!(
                            "conv weight dims {:?}, expected {:?}",
                            weight.dims(),
                            [params.out_channels, params.in_channels, n, n]
                        ),
                    ));
                }
                if bias.dims() != [params.out_channels] {
                    return Err(Error::model(
                        i,
                        format!("conv bias dims {:?}, expected [{}]", bias.dims(), params.out_channels),
                    ));
                }
                let (oh, ow) = params.output_dims(h, w).map_err(|e| Error::model(i, e.to_string()))?;
                vec![params.out_channels, oh, ow]
            }
            Layer::MaxPool2d(params) => {
                let (c, h, w) = chw(&cur)?;
                let (oh, ow) = params.output_dims(h, w).map_err(|e| Error::model(i, e.to_string()))?;
                vec![c, oh, ow]
            }
            Layer::Relu => cur.clone(),
            Layer::Affine { scale, shift } => {
                let (c, _, _) = chw(&cur)?;
                if scale.dims() != [c] || shift.dims() != [c] {
                    return Err(Error::model(
                        i,
                        format!(
                            "affine scale/shift dims {:?}/{:?}, expected [{}]",
                            scale.dims(),
                            shift.dims(),
                            c
                        ),
                    ));
                }
                cur.clone()
            }
            Layer::ResidualAdd { from } => {
                if *from >= i {
                    return Err(Error::model(
                        i,
                        format!("residual source {} is not an earlier layer", from),
                    ));
                }
                if dims[*from] != cur {
                    return Err(Error::model(
                        i,
                        format!(
                            "residual source {} has dims {:?}, current dims {:?}",
                            from, dims[*from], cur
                        ),
                    ));
                }
                cur.clone()
            }
            Layer::GlobalAvgPool | Layer::Flatten => {
                if head_seen {
                    return Err(Error::model(i, "only one global_avg_pool or flatten is allowed"));
                }
                head_seen = true;
                let (c, h, w) = chw(&cur)?;
                if matches!(layer, Layer::GlobalAvgPool) {
                    vec![c]
                } else {
                    vec![c * h * w]
                }
            }
            Layer::Dense { weight, bias } => {
                let d = match cur[..] {
                    [d] => d,
                    _ => return Err(Error::model(i, format!("dense needs a vector input, got {:?}", cur))),
                };
                match weight.dims() {
                    [k, wd] if *wd == d && bias.dims() == [*k] => vec![*k],
                    _ => {
                        return Err(Error::model(
                            i,
                            format!(
                                "dense weight {:?} / bias {:?} do not accept input of length {}",
                                weight.dims(),
                                bias.dims(),
                                d
                            ),
                        ))
                    }
                }
            }
        };
        if head_seen && layer.is_spatial() {
            return Err(Error::model(i, "spatial layer after global_avg_pool/flatten"));
        }
        cur = next;
        dims.push(cur.clone());
    }
    Ok(dims)
}

/// Output of a forward pass plus the activation after every layer.
#[derive(Debug, Clone)]
pub struct Forward {
    pub output: Tensor,
    pub intermediates: Vec<Tensor>,
}

/// Evaluates one non-spatial layer. Shared by the plain and keyed engines.
pub(crate) fn apply_pointwise_layer(
    layer: &Layer,
    index: usize,
    x: &Tensor,
    intermediates: &[Tensor],
) -> Result<Tensor> {
    match layer {
        Layer::Relu => Ok(ops::relu(x)),
        Layer::Affine { scale, shift } => ops::affine(x, scale, shift),
        Layer::ResidualAdd { from } => {
            let skip = &intermediates[*from];
            if skip.dims() != x.dims() {
                return Err(Error::model(index, "residual dims changed at run time"));
            }
            let data = x.data().iter().zip(skip.data()).map(|(a, b)| a + b).collect();
            Tensor::new(x.dims(), data)
        }
        Layer::GlobalAvgPool => ops::gap_ref(x),
        Layer::Flatten => x.clone().reshape(&[x.len()]),
        Layer::Dense { weight, bias } => ops::dense_ref(x, weight, bias),
        Layer::Conv2d { .. } | Layer::MaxPool2d(_) => {
            unreachable!("spatial layers are evaluated by the engine")
        }
    }
}

pub fn check_input(model: &ModelSpec, input: &Tensor) -> Result<()> {
    if input.dims() != model.input_dims() {
        return Err(Error::Shape(format!(
            "model expects input {:?}, got {:?}",
            model.input_dims(),
            input.dims()
        )));
    }
    Ok(())
}

/// Runs the model with the reference operators.
pub fn plain_forward(model: &ModelSpec, input: &Tensor) -> Result<Forward> {
    check_input(model, input)?;
    let mut intermediates: Vec<Tensor> = Vec::with_capacity(model.layers().len());
    for (i, layer) in model.layers().iter().enumerate() {
        let x = intermediates.last().unwrap_or(input);
        let y = match layer {
            Layer::Conv2d { params, weight, bias } => ops::conv2d_ref(x, weight, bias, params.stride, params.padding)?,
            Layer::MaxPool2d(p) => ops::maxpool2d_ref(x, p.window, p.stride, p.padding)?,
            other => apply_pointwise_layer(other, i, x, &intermediates)?,
        };
        intermediates.push(y);
    }
    let output = intermediates.last().cloned().unwrap_or_else(|| input.clone());
    Ok(Forward { output, intermediates })
}
