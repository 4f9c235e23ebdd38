//! Backward-pass primitives: erosion vectors, erosion transformation along
//! layers and networks, rank-1 layer gradients and masked updates.
//!
//! For a layer `(T, a)` at input state `x` with output erosion `e`, the
//! erosion vector is `s = e (.) a'(T_*(x, 1))`. The layer gradient is the outer
//! product `s (x, 1)^T`, and the erosion handed to the previous layer is
//! `s . [T]`, where `[T]` is `T` without its bias column.

use crate::activation::Activation;
use crate::algebra::{hadamard, outer, vec_mat, weights_part, Matrix, Vector};
use crate::error::{Error, Result};
use crate::loss::{ErosionFn, LossPredicate};
use crate::network::{Layer, Network};

/// How the activation derivative enters an erosion vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErosionPath {
    /// `e (.) a'(z)` with `z` the pre-activations.
    Generic,
    /// `e (.) y (.) (1 - y)` with `y` the sigmoid output; sigmoid layers only.
    SigmoidShortcut,
}

impl ErosionPath {
    /// The shortcut for sigmoid layers, the generic path otherwise.
    pub fn preferred(act: Activation) -> Self {
        match act {
            Activation::Sigmoid => ErosionPath::SigmoidShortcut,
            _ => ErosionPath::Generic,
        }
    }
}

/// A gradient for a single layer's transition, shaped like `T`
/// (`k x (n+1)`, bias gradient in the last column).
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient(Matrix);

impl Gradient {
    pub fn new(matrix: Matrix) -> Self {
        Gradient(matrix)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.0.get(row, col)
    }

    /// Whether every column is a scalar multiple of the bias column, to
    /// relative tolerance `tol`.
    pub fn is_rank_one(&self, tol: f64) -> bool {
        let (k, cols) = self.0.shape();
        if cols == 0 {
            return true;
        }
        let s = self.0.column(cols - 1);
        let ss: f64 = s.iter().map(|v| v * v).sum();
        (0..cols).all(|i| {
            let col = self.0.column(i);
            if ss == 0.0 {
                return col.iter().all(|&v| v == 0.0);
            }
            let c = col.iter().zip(s.iter()).map(|(a, b)| a * b).sum::<f64>() / ss;
            let scale = (0..k)
                .map(|j| col[j].abs().max((c * s[j]).abs()))
                .fold(f64::MIN_POSITIVE, f64::max);
            (0..k).all(|j| (col[j] - c * s[j]).abs() <= tol * scale)
        })
    }
}

/// The erosion vector `s` of a layer at input `a`, given the output-loss
/// erosion `e_out` already evaluated at `layer >> a`.
pub fn layer_erosion_vector(layer: &Layer, a: &[f64], e_out: &[f64]) -> Result<Vector> {
    layer_erosion_vector_via(layer, a, e_out, ErosionPath::preferred(layer.activation()))
}

pub fn layer_erosion_vector_via(
    layer: &Layer,
    a: &[f64],
    e_out: &[f64],
    path: ErosionPath,
) -> Result<Vector> {
    if e_out.len() != layer.out_dim() {
        return Err(Error::shape(
            "layer_erosion_vector",
            format!("output erosion of length {}", layer.out_dim()),
            format!("length {}", e_out.len()),
        ));
    }
    match path {
        ErosionPath::Generic => {
            let z = layer.preactivation(a)?;
            hadamard(e_out, &layer.activation().deriv_map(&z)?)
        }
        ErosionPath::SigmoidShortcut => {
            if layer.activation() != Activation::Sigmoid {
                return Err(Error::InvalidConfig(format!(
                    "sigmoid shortcut on a {} layer",
                    layer.activation()
                )));
            }
            let y = layer.forward(a)?;
            Ok(Vector::from_raw(
                e_out
                    .iter()
                    .zip(y.iter())
                    .map(|(e, y)| e * y * (1.0 - y))
                    .collect(),
            ))
        }
    }
}

/// The gradient of `X |-> ((X, a) >> a_in |= loss)` at the layer's own `T`,
/// in outer-product form.
pub fn layer_gradient(layer: &Layer, a: &[f64], loss: &LossPredicate) -> Result<Gradient> {
    if loss.dim() != layer.out_dim() {
        return Err(Error::shape(
            "layer_gradient",
            format!("loss on R^{}", layer.out_dim()),
            format!("loss on R^{}", loss.dim()),
        ));
    }
    let y = layer.forward(a)?;
    let e_out = loss.erosion(&y)?;
    let s = layer_erosion_vector(layer, a, &e_out)?;
    let aug = Vector::from_raw(a.to_vec()).augmented();
    Ok(Gradient(outer(&s, &aug)))
}

/// `(layer <<< E)(x) = (E(layer >> x) (.) a'(T_*(x, 1))) . [T]`.
pub fn erosion_transform_layer(layer: &Layer, erosion: &ErosionFn, x: &[f64]) -> Result<Vector> {
    erosion_transform_layer_via(
        layer,
        erosion,
        x,
        ErosionPath::preferred(layer.activation()),
    )
}

pub fn erosion_transform_layer_via(
    layer: &Layer,
    erosion: &ErosionFn,
    x: &[f64],
    path: ErosionPath,
) -> Result<Vector> {
    let y = layer.forward(x)?;
    let e_out = erosion(&y)?;
    let s = layer_erosion_vector_via(layer, x, &e_out, path)?;
    vec_mat(&s, &weights_part(layer.transition())?)
}

/// Erosion transformation along a whole network: forward states are computed
/// from `x`, then the erosion is pulled back through the layers right to left.
/// For the empty network this is `E(x)`.
pub fn erosion_transform_net(network: &Network, erosion: &ErosionFn, x: &[f64]) -> Result<Vector> {
    let states = network.forward_states(x)?;
    let mut e = erosion(states.last().expect("at least the input state"))?;
    if e.len() != network.out_dim() {
        return Err(Error::shape(
            "erosion_transform_net",
            network.out_dim(),
            e.len(),
        ));
    }
    for (layer, a) in network.layers().iter().zip(&states).rev() {
        let s = layer_erosion_vector(layer, a, &e)?;
        e = vec_mat(&s, &weights_part(layer.transition())?)?;
    }
    Ok(e)
}

/// `T - M (.) grad`: subtracts the gradient from mutable entries only. Frozen
/// entries are copied bitwise; mask and activation are kept.
pub fn masked_update(layer: &Layer, gradient: &Gradient) -> Result<Layer> {
    let t = layer.transition();
    if gradient.0.shape() != t.shape() {
        return Err(Error::shape(
            "masked_update",
            format!("{}x{} gradient", t.rows(), t.cols()),
            format!("{}x{} gradient", gradient.0.rows(), gradient.0.cols()),
        ));
    }
    let mut updated = t.clone();
    for j in 0..t.rows() {
        for i in 0..t.cols() {
            if layer.is_mutable(j, i) {
                updated.set(j, i, t.get(j, i) - gradient.get(j, i));
            }
        }
    }
    layer.with_transition(updated)
}
