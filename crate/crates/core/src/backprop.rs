//! One backpropagation step over a whole network, and a plain SGD loop built
//! from it.
//!
//! Given a network `l_1, ..., l_m`, an input state `a_0` and an output loss `L`,
//! the step computes the forward states `a_i = l_i >> a_{i-1}`, then walks back
//! from `e_m = L'(a_m)`: for layer `i` the erosion vector is
//! `s_i = e_i (.) a_i'(T_i* (a_{i-1}, 1))`, the gradient is `s_i (a_{i-1}, 1)^T`
//! and the erosion passed down is `e_{i-1} = s_i . [T_i]`. All erosions use the
//! original weights; masked updates are applied only once every gradient
//! exists.

use crate::algebra::{outer, vec_mat, weights_part, Vector};
use crate::backward::{layer_erosion_vector, layer_gradient, masked_update, Gradient};
use crate::error::{Error, Result};
use crate::loss::{transform_loss, LossPredicate};
use crate::network::Network;

/// Everything a backprop step computed on its way.
#[derive(Debug, Clone, PartialEq)]
pub struct BackpropTrace {
    /// `a_0, ..., a_m`.
    pub states: Vec<Vector>,
    /// `e_0, ..., e_m`, the erosion of the transformed loss at each state.
    pub erosions: Vec<Vector>,
    /// `s_1, ..., s_m` (index `i - 1` for layer `i`).
    pub deltas: Vec<Vector>,
    /// One gradient per layer, in layer order.
    pub gradients: Vec<Gradient>,
}

/// Applies the backprop functor to `(network, a, loss)`: the updated network
/// together with the trace of states, erosions and gradients.
pub fn backprop_step(
    network: &Network,
    a: &[f64],
    loss: &LossPredicate,
) -> Result<(Network, BackpropTrace)> {
    if loss.dim() != network.out_dim() {
        return Err(Error::shape(
            "backprop_step",
            format!("loss on R^{}", network.out_dim()),
            format!("loss on R^{}", loss.dim()),
        ));
    }
    let states = network.forward_states(a)?;
    let m = network.len();

    let mut erosions = vec![Vector::default(); m + 1];
    let mut deltas = vec![Vector::default(); m];
    let mut gradients = Vec::with_capacity(m);
    erosions[m] = loss.erosion(&states[m])?;

    for (i, layer) in network.layers().iter().enumerate().rev() {
        let s = layer_erosion_vector(layer, &states[i], &erosions[i + 1])?;
        gradients.push(Gradient::new(outer(&s, &states[i].augmented())));
        erosions[i] = vec_mat(&s, &weights_part(layer.transition())?)?;
        deltas[i] = s;
    }
    gradients.reverse();

    let layers = network
        .layers()
        .iter()
        .zip(&gradients)
        .map(|(layer, g)| masked_update(layer, g))
        .collect::<Result<Vec<_>>>()?;

    Ok((
        network.with_layers(layers),
        BackpropTrace {
            states,
            erosions,
            deltas,
            gradients,
        },
    ))
}

/// The per-layer gradients computed the long way: layer `i` against the loss
/// transformed along every layer after it.
pub fn definitional_gradients(
    network: &Network,
    a: &[f64],
    loss: &LossPredicate,
) -> Result<Vec<Gradient>> {
    let states = network.forward_states(a)?;
    (0..network.len())
        .map(|i| {
            let (_, suffix) = network.split_at(i + 1);
            let k = transform_loss(&suffix, loss)?;
            layer_gradient(&network.layers()[i], &states[i], &k)
        })
        .collect()
}

/// Checks that backprop respects composition: updating `first ; second` at
/// once gives the same layers as updating `first` against the loss transformed
/// along `second` and `second` at the state `first` produces, to `1e-12`.
pub fn functoriality_check(
    first: &Network,
    second: &Network,
    a: &[f64],
    loss: &LossPredicate,
) -> Result<bool> {
    let whole = backprop_step(&first.compose(second)?, a, loss)?.0;
    let head = backprop_step(first, a, &transform_loss(second, loss)?)?.0;
    let tail = backprop_step(second, &first.forward(a)?, loss)?.0;
    let pieced = head.compose(&tail)?;
    Ok(networks_agree(&whole, &pieced, 1e-12))
}

/// Same shapes, masks and activations, transitions equal to `tol` per entry.
pub fn networks_agree(a: &Network, b: &Network, tol: f64) -> bool {
    a.in_dim() == b.in_dim()
        && a.out_dim() == b.out_dim()
        && a.len() == b.len()
        && a.layers().iter().zip(b.layers()).all(|(x, y)| {
            x.mask() == y.mask()
                && x.bias_mutable() == y.bias_mutable()
                && x.activation() == y.activation()
                && x.transition().shape() == y.transition().shape()
                && x.transition()
                    .as_slice()
                    .iter()
                    .zip(y.transition().as_slice())
                    .all(|(p, q)| (p - q).abs() <= tol)
        })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SgdConfig {
    pub epochs: usize,
}

/// One row of the training trace, recorded before the step is applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainRecord {
    /// 1-based step counter across all epochs.
    pub step: usize,
    /// `output |= L`, with the learning rate folded into `L`.
    pub validity: f64,
    /// `1/2 * |output - target|^2`, without the learning rate.
    pub squared_error: f64,
}

/// Per-example SGD in file order: for every epoch and every `(input, target)`
/// row, one [`backprop_step`] against `squared_error(target, eta)`.
pub fn train(
    network: &Network,
    dataset: &[(Vector, Vector)],
    eta: f64,
    cfg: SgdConfig,
) -> Result<(Network, Vec<TrainRecord>)> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "eta must be positive, got {eta}"
        )));
    }
    for (row, (x, t)) in dataset.iter().enumerate() {
        if x.len() != network.in_dim() || t.len() != network.out_dim() {
            return Err(Error::shape(
                "train",
                format!(
                    "row {} with {} inputs and {} targets",
                    row + 1,
                    network.in_dim(),
                    network.out_dim()
                ),
                format!("{} inputs and {} targets", x.len(), t.len()),
            ));
        }
    }
    let losses = dataset
        .iter()
        .map(|(_, t)| LossPredicate::squared_error(t.clone(), eta))
        .collect::<Result<Vec<_>>>()?;

    let mut net = network.clone();
    let mut records = Vec::with_capacity(cfg.epochs * dataset.len());
    for _ in 0..cfg.epochs {
        for ((x, t), loss) in dataset.iter().zip(&losses) {
            let (next, trace) = backprop_step(&net, x, loss)?;
            let out = trace.states.last().expect("input state");
            records.push(TrainRecord {
                step: records.len() + 1,
                validity: loss.eval(out)?,
                squared_error: half_squared_distance(out, t),
            });
            net = next;
        }
    }
    Ok((net, records))
}

fn half_squared_distance(y: &[f64], t: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (a, b) in y.iter().zip(t) {
        let d = a - b;
        sum += d * d;
    }
    0.5 * sum
}
