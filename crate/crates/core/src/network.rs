//! Layers, networks, sequential composition and forward state transformation.
//!
//! A [`Layer`] `n => k` is a transition matrix `T` of shape `k x (n+1)` (weights
//! in the first `n` columns, biases in the last), a mutability mask, and an
//! activation. A [`Network`] `n => k` is a dimension-compatible sequence of
//! layers; the empty sequence is the identity on `n`. Both are immutable once
//! built, and construction rejects anything ill-typed.

use crate::activation::Activation;
use crate::algebra::{kleisli_apply, Matrix, Vector};
use crate::error::{Error, Result};

/// Boolean `k x n` matrix marking which connections `i -> j` may be updated.
///
/// A `false` entry whose weight is zero means there is no connection; a
/// `false` entry with a nonzero weight is a frozen connection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    rows: usize,
    cols: usize,
    data: Vec<bool>,
}

impl Mask {
    pub fn filled(rows: usize, cols: usize, value: bool) -> Self {
        Mask {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn new(rows: usize, cols: usize, data: Vec<bool>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Mask::new",
                format!("{} entries ({rows}x{cols})", rows * cols),
                format!("{} entries", data.len()),
            ));
        }
        Ok(Mask { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        assert!(row < self.rows && col < self.cols, "index out of bounds");
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[bool] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_vecs(&self) -> Vec<Vec<bool>> {
        (0..self.rows).map(|j| self.row(j).to_vec()).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    transition: Matrix,
    mask: Mask,
    bias_mutable: Vec<bool>,
    activation: Activation,
}

impl Layer {
    /// `transition` must be `k x (n+1)` for some `n`, `mask` must be `k x n`
    /// and `bias_mutable` must have length `k`.
    pub fn new(
        transition: Matrix,
        mask: Mask,
        bias_mutable: Vec<bool>,
        activation: Activation,
    ) -> Result<Self> {
        let (k, cols) = transition.shape();
        if cols == 0 {
            return Err(Error::shape(
                "Layer::new",
                "transition with a bias column",
                format!("{k}x0 transition"),
            ));
        }
        let n = cols - 1;
        if (mask.rows, mask.cols) != (k, n) {
            return Err(Error::shape(
                "Layer::new",
                format!("{k}x{n} mask"),
                format!("{}x{} mask", mask.rows, mask.cols),
            ));
        }
        if bias_mutable.len() != k {
            return Err(Error::shape(
                "Layer::new",
                format!("bias_mutable of length {k}"),
                format!("length {}", bias_mutable.len()),
            ));
        }
        Ok(Layer {
            transition,
            mask,
            bias_mutable,
            activation,
        })
    }

    /// A layer in which every connection and every bias is mutable.
    pub fn dense(transition: Matrix, activation: Activation) -> Result<Self> {
        let (k, cols) = transition.shape();
        let n = cols.saturating_sub(1);
        Self::new(
            transition,
            Mask::filled(k, n, true),
            vec![true; k],
            activation,
        )
    }

    /// Same mask and activation, different transition matrix of the same shape.
    pub fn with_transition(&self, transition: Matrix) -> Result<Self> {
        if transition.shape() != self.transition.shape() {
            return Err(Error::shape(
                "Layer::with_transition",
                format!("{}x{}", self.transition.rows(), self.transition.cols()),
                format!("{}x{}", transition.rows(), transition.cols()),
            ));
        }
        Ok(Layer {
            transition,
            ..self.clone()
        })
    }

    pub fn in_dim(&self) -> usize {
        self.transition.cols() - 1
    }

    pub fn out_dim(&self) -> usize {
        self.transition.rows()
    }

    pub fn transition(&self) -> &Matrix {
        &self.transition
    }

    pub fn mask(&self) -> &Mask {
        &self.mask
    }

    pub fn bias_mutable(&self) -> &[bool] {
        &self.bias_mutable
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    /// Whether entry `(j, i)` of the transition may change; column `n` is the bias.
    pub fn is_mutable(&self, j: usize, i: usize) -> bool {
        if i == self.in_dim() {
            self.bias_mutable[j]
        } else {
            self.mask.get(j, i)
        }
    }

    /// Pre-activations `T_*(x, 1)`.
    pub fn preactivation(&self, x: &[f64]) -> Result<Vector> {
        self.check_input(x)?;
        kleisli_apply(&self.transition, x)
    }

    /// `(T, a) >> x`: the activation applied to `T_*(x, 1)`.
    pub fn forward(&self, x: &[f64]) -> Result<Vector> {
        let z = self.preactivation(x)?;
        self.activation.map(&z)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim() {
            return Err(Error::shape(
                "layer_forward",
                format!("state of length {}", self.in_dim()),
                format!("length {}", x.len()),
            ));
        }
        Ok(())
    }
}

/// A morphism `n => k`: a sequence of layers whose dimensions chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    in_dim: usize,
    out_dim: usize,
    layers: Vec<Layer>,
}

impl Network {
    /// The identity on `n`: no layers at all.
    pub fn identity(n: usize) -> Self {
        Network {
            in_dim: n,
            out_dim: n,
            layers: Vec::new(),
        }
    }

    /// Builds a network from a non-empty list of chain-compatible layers.
    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let first = layers.first().ok_or_else(|| {
            Error::InvalidConfig("a network without layers needs an explicit dimension".into())
        })?;
        Self::with_dim(first.in_dim(), layers)
    }

    /// Builds a network `in_dim => ...`; an empty list yields the identity.
    pub fn with_dim(in_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        let mut dim = in_dim;
        for (idx, layer) in layers.iter().enumerate() {
            if layer.in_dim() != dim {
                return Err(Error::shape(
                    "Network",
                    format!("layer {idx} with input dimension {dim}"),
                    format!("input dimension {}", layer.in_dim()),
                ));
            }
            dim = layer.out_dim();
        }
        Ok(Network {
            in_dim,
            out_dim: dim,
            layers,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }

    /// Sequential composition: `self` first, then `next`.
    pub fn compose(&self, next: &Network) -> Result<Network> {
        if self.out_dim != next.in_dim {
            return Err(Error::shape(
                "compose",
                format!("second network with input dimension {}", self.out_dim),
                format!("input dimension {}", next.in_dim),
            ));
        }
        let mut layers = self.layers.clone();
        layers.extend(next.layers.iter().cloned());
        Ok(Network {
            in_dim: self.in_dim,
            out_dim: next.out_dim,
            layers,
        })
    }

    /// Splits into the first `at` layers and the rest, so that
    /// `prefix.compose(&suffix)` gives back `self`.
    pub fn split_at(&self, at: usize) -> (Network, Network) {
        let (head, tail) = self.layers.split_at(at);
        let mid = head.last().map_or(self.in_dim, Layer::out_dim);
        (
            Network {
                in_dim: self.in_dim,
                out_dim: mid,
                layers: head.to_vec(),
            },
            Network {
                in_dim: mid,
                out_dim: self.out_dim,
                layers: tail.to_vec(),
            },
        )
    }

    /// Forward state transformation: a left fold of [`Layer::forward`].
    pub fn forward(&self, x: &[f64]) -> Result<Vector> {
        if x.len() != self.in_dim {
            return Err(Error::shape(
                "net_forward",
                format!("state of length {}", self.in_dim),
                format!("length {}", x.len()),
            ));
        }
        let mut state = Vector::from_raw(x.to_vec());
        for layer in &self.layers {
            state = layer.forward(&state)?;
        }
        Ok(state)
    }

    /// Every intermediate state `a_0 = x, a_1, ..., a_m`.
    pub fn forward_states(&self, x: &[f64]) -> Result<Vec<Vector>> {
        if x.len() != self.in_dim {
            return Err(Error::shape(
                "net_forward",
                format!("state of length {}", self.in_dim),
                format!("length {}", x.len()),
            ));
        }
        let mut states = Vec::with_capacity(self.layers.len() + 1);
        states.push(Vector::from_raw(x.to_vec()));
        for layer in &self.layers {
            let next = layer.forward(states.last().expect("non-empty"))?;
            states.push(next);
        }
        Ok(states)
    }

    /// Replaces the layers, keeping the dimensions. Used by updates, which
    /// never change shapes.
    pub(crate) fn with_layers(&self, layers: Vec<Layer>) -> Network {
        debug_assert_eq!(layers.len(), self.layers.len());
        Network {
            in_dim: self.in_dim,
            out_dim: self.out_dim,
            layers,
        }
    }
}

/// The two-layer 2 => 2 => 2 sigmoid network used throughout the tests and the demo.
pub fn mazur_network() -> Network {
    let t = Matrix::from_rows(&[[0.15, 0.2, 0.35], [0.25, 0.3, 0.35]]).expect("finite");
    let s = Matrix::from_rows(&[[0.4, 0.45, 0.6], [0.5, 0.55, 0.6]]).expect("finite");
    Network::from_layers(vec![
        Layer::dense(t, Activation::Sigmoid).expect("2x3"),
        Layer::dense(s, Activation::Sigmoid).expect("2x3"),
    ])
    .expect("2 => 2 => 2")
}
