//! Central finite differences, used as an independent check on every
//! analytically computed gradient and erosion.

use crate::algebra::{Matrix, Vector};
use crate::backward::Gradient;
use crate::error::{Error, Result};
use crate::loss::{transform_loss, LossPredicate};
use crate::network::{Layer, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    eps: f64,
    tol: f64,
}

impl Default for FdConfig {
    fn default() -> Self {
        FdConfig {
            eps: 1e-6,
            tol: 1e-5,
        }
    }
}

impl FdConfig {
    pub fn new(eps: f64, tol: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "eps must be positive, got {eps}"
            )));
        }
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tolerance must be non-negative, got {tol}"
            )));
        }
        Ok(FdConfig { eps, tol })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    /// Mixed absolute/relative comparison: `|x - y| <= tol * max(1, |x|, |y|)`.
    pub fn agrees(&self, x: f64, y: f64) -> bool {
        within(x, y, self.tol)
    }
}

pub fn within(x: f64, y: f64, tol: f64) -> bool {
    (x - y).abs() <= tol * 1f64.max(x.abs()).max(y.abs())
}

/// `(f(x + eps e_i) - f(x - eps e_i)) / 2 eps` for every coordinate `i`.
pub fn central_difference<F>(f: F, x: &[f64], eps: f64) -> Result<Vector>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    let mut probe = x.to_vec();
    let mut out = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + eps;
        let plus = f(&probe)?;
        probe[i] = orig - eps;
        let minus = f(&probe)?;
        probe[i] = orig;
        out.push((plus - minus) / (2.0 * eps));
    }
    Vector::new(out)
}

/// Finite-difference gradient of `X |-> ((X, a) >> a_in |= loss)` around the
/// layer's transition, one entry per perturbation.
pub fn fd_layer_gradient(
    layer: &Layer,
    a: &[f64],
    loss: &LossPredicate,
    cfg: &FdConfig,
) -> Result<Gradient> {
    if a.len() != layer.in_dim() || loss.dim() != layer.out_dim() {
        return Err(Error::shape(
            "fd_layer_gradient",
            format!(
                "state of length {} and loss on R^{}",
                layer.in_dim(),
                layer.out_dim()
            ),
            format!("state of length {} and loss on R^{}", a.len(), loss.dim()),
        ));
    }
    let (k, cols) = layer.transition().shape();
    let flat = layer.transition().as_slice().to_vec();
    let f = |entries: &[f64]| -> Result<f64> {
        let probe = layer.with_transition(Matrix::new(k, cols, entries.to_vec())?)?;
        loss.eval(&probe.forward(a)?)
    };
    let g = central_difference(f, &flat, cfg.eps)?;
    Ok(Gradient::new(Matrix::new(k, cols, g.into_inner())?))
}

/// Finite-difference gradients for every layer of a network: layer `i` is
/// perturbed in place and the whole network is rerun, which amounts to
/// [`fd_layer_gradient`] against the loss transformed along the later layers.
/// Only loss values are used, never erosions.
pub fn fd_network_gradients(
    network: &Network,
    a: &[f64],
    loss: &LossPredicate,
    cfg: &FdConfig,
) -> Result<Vec<Gradient>> {
    let states = network.forward_states(a)?;
    (0..network.len())
        .map(|i| {
            let (_, suffix) = network.split_at(i + 1);
            let k = transform_loss(&suffix, loss)?;
            fd_layer_gradient(&network.layers()[i], &states[i], &k, cfg)
        })
        .collect()
}

/// Finite-difference derivative of a loss predicate at `y`.
pub fn fd_erosion(loss: &LossPredicate, y: &[f64], cfg: &FdConfig) -> Result<Vector> {
    if y.len() != loss.dim() {
        return Err(Error::shape("fd_erosion", loss.dim(), y.len()));
    }
    central_difference(|p| loss.eval(p), y, cfg.eps)
}

/// Largest absolute entrywise difference of two equally shaped matrices.
pub fn max_abs_deviation(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::shape(
            "max_abs_deviation",
            format!("{}x{}", a.rows(), a.cols()),
            format!("{}x{}", b.rows(), b.cols()),
        ));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}
