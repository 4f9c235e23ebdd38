//! Loss predicates: real-valued predicates on states, their validity at a state,
//! and backward loss transformation along a network.
//!
//! A [`LossPredicate`] on `R^k` carries both its value `L` and its derivative
//! `L'` (the *erosion*). Transforming a loss `L` along a network `N` gives the
//! loss `N << L = L . [[N]]` on the network's inputs, whose erosion is computed
//! by erosion transformation rather than by differentiating numerically.
//!
//! The learning rate lives inside the loss: the squared-error family is
//! `L(y) = 1/2 * eta * sum_i (y_i - t_i)^2` with erosion `eta * (y - t)`, so a
//! plain gradient step is `T - M (.) grad` with no separate rate parameter.

use std::fmt;
use std::sync::Arc;

use crate::algebra::Vector;
use crate::backward::erosion_transform_net;
use crate::error::{Error, Result};
use crate::network::Network;

pub type EvalFn = dyn Fn(&[f64]) -> Result<f64> + Send + Sync;
pub type ErosionFn = dyn Fn(&[f64]) -> Result<Vector> + Send + Sync;

/// What a loss predicate was built from.
#[derive(Debug, Clone)]
pub enum LossKind {
    SquaredError {
        target: Vector,
        rate: f64,
    },
    Transformed {
        network: Arc<Network>,
        base: Arc<LossPredicate>,
    },
    Opaque,
}

#[derive(Clone)]
pub struct LossPredicate {
    dim: usize,
    eval: Arc<EvalFn>,
    erosion: Arc<ErosionFn>,
    kind: LossKind,
}

impl fmt::Debug for LossPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LossPredicate")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .finish_non_exhaustive()
    }
}

impl LossPredicate {
    /// `1/2 * rate * |y - target|^2`. The rate must be finite and non-negative.
    pub fn squared_error(target: Vector, rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "learning rate must be finite and non-negative, got {rate}"
            )));
        }
        let dim = target.len();
        let t_eval = target.clone();
        let t_erosion = target.clone();
        Ok(LossPredicate {
            dim,
            eval: Arc::new(move |y: &[f64]| {
                let mut sum = 0.0;
                for (yi, ti) in y.iter().zip(t_eval.iter()) {
                    let d = yi - ti;
                    sum += d * d;
                }
                Ok(0.5 * rate * sum)
            }),
            erosion: Arc::new(move |y: &[f64]| {
                Ok(Vector::from_raw(
                    y.iter()
                        .zip(t_erosion.iter())
                        .map(|(yi, ti)| rate * (yi - ti))
                        .collect(),
                ))
            }),
            kind: LossKind::SquaredError { target, rate },
        })
    }

    /// A loss given directly by its value and erosion functions. The caller is
    /// responsible for `erosion` being the gradient of `eval`.
    pub fn opaque<F, G>(dim: usize, eval: F, erosion: G) -> Self
    where
        F: Fn(&[f64]) -> Result<f64> + Send + Sync + 'static,
        G: Fn(&[f64]) -> Result<Vector> + Send + Sync + 'static,
    {
        LossPredicate {
            dim,
            eval: Arc::new(eval),
            erosion: Arc::new(erosion),
            kind: LossKind::Opaque,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &LossKind {
        &self.kind
    }

    /// `L(y)`.
    pub fn eval(&self, y: &[f64]) -> Result<f64> {
        self.check(y, "validity")?;
        (self.eval)(y)
    }

    /// `L'(y)`.
    pub fn erosion(&self, y: &[f64]) -> Result<Vector> {
        self.check(y, "erosion")?;
        let e = (self.erosion)(y)?;
        if e.len() != self.dim {
            return Err(Error::shape("erosion", self.dim, e.len()));
        }
        Ok(e)
    }

    /// The erosion as a bare function, for erosion transformation.
    pub fn erosion_fn(&self) -> &ErosionFn {
        &*self.erosion
    }

    fn check(&self, y: &[f64], context: &'static str) -> Result<()> {
        if y.len() != self.dim {
            return Err(Error::shape(
                context,
                format!("state of length {}", self.dim),
                format!("length {}", y.len()),
            ));
        }
        Ok(())
    }
}

/// `x |= L`, the value of the loss at a state.
pub fn validity(x: &[f64], loss: &LossPredicate) -> Result<f64> {
    loss.eval(x)
}

/// `N << L`: the loss on the network's inputs obtained by running the network
/// forward and then evaluating `L`. Its erosion is the erosion transformation
/// of `L'` along `N`.
pub fn transform_loss(network: &Network, loss: &LossPredicate) -> Result<LossPredicate> {
    if network.out_dim() != loss.dim() {
        return Err(Error::shape(
            "transform_loss",
            format!("loss on R^{}", network.out_dim()),
            format!("loss on R^{}", loss.dim()),
        ));
    }
    let network = Arc::new(network.clone());
    let base = Arc::new(loss.clone());

    let (net_e, base_e) = (Arc::clone(&network), Arc::clone(&base));
    let eval = move |x: &[f64]| base_e.eval(&net_e.forward(x)?);

    let (net_r, base_r) = (Arc::clone(&network), Arc::clone(&base));
    let erosion = move |x: &[f64]| erosion_transform_net(&net_r, base_r.erosion_fn(), x);

    Ok(LossPredicate {
        dim: network.in_dim(),
        eval: Arc::new(eval),
        erosion: Arc::new(erosion),
        kind: LossKind::Transformed { network, base },
    })
}

/// Both sides of `N >> x |= L  =  x |= N << L`.
pub fn validity_equation_check(
    network: &Network,
    x: &[f64],
    loss: &LossPredicate,
) -> Result<(f64, f64)> {
    let lhs = validity(&network.forward(x)?, loss)?;
    let rhs = validity(x, &transform_loss(network, loss)?)?;
    Ok((lhs, rhs))
}
