//! Seeded generators for random networks, states and losses.
//!
//! Used by the property tests and by `gradcheck --seed`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::activation::Activation;
use crate::algebra::{Matrix, Vector};
use crate::loss::LossPredicate;
use crate::network::{Layer, Mask, Network};

pub fn random_state<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vector {
    Vector::from_raw((0..len).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// A dense layer `n => k` with weights and biases uniform in `[-1, 1)`.
pub fn random_layer<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, act: Activation) -> Layer {
    let data = (0..k * (n + 1)).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Layer::dense(Matrix::from_raw(k, n + 1, data), act).expect("well-shaped")
}

/// Like [`random_layer`] but with a random mask and random bias mutability.
/// Roughly a third of the masked-out connections get a zero weight (absent),
/// the rest keep their weight (frozen).
pub fn random_masked_layer<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    k: usize,
    act: Activation,
) -> Layer {
    let mut t = random_layer(rng, n, k, act).transition().clone();
    let mask: Vec<bool> = (0..k * n).map(|_| rng.gen_bool(0.5)).collect();
    for j in 0..k {
        for i in 0..n {
            if !mask[j * n + i] && rng.gen_bool(1.0 / 3.0) {
                t.set(j, i, 0.0);
            }
        }
    }
    let bias_mutable = (0..k).map(|_| rng.gen_bool(0.5)).collect();
    Layer::new(t, Mask::new(k, n, mask).expect("k x n"), bias_mutable, act).expect("well-shaped")
}

/// A network with `0..=max_layers` layers starting at `in_dim`, hidden and
/// output widths in `1..=max_width`, activations drawn from `acts`.
pub fn random_network_from<R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    max_layers: usize,
    max_width: usize,
    acts: &[Activation],
) -> Network {
    let depth = rng.gen_range(0..=max_layers);
    random_network_with_depth(rng, in_dim, depth, max_width, acts)
}

pub fn random_network_with_depth<R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    depth: usize,
    max_width: usize,
    acts: &[Activation],
) -> Network {
    let mut dim = in_dim;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let k = rng.gen_range(1..=max_width);
        let act = *acts.choose(rng).expect("at least one activation");
        layers.push(random_layer(rng, dim, k, act));
        dim = k;
    }
    Network::with_dim(in_dim, layers).expect("chained by construction")
}

/// A network with `1..=max_layers` layers and all widths in `1..=max_width`.
pub fn random_network<R: Rng + ?Sized>(
    rng: &mut R,
    max_layers: usize,
    max_width: usize,
    acts: &[Activation],
) -> Network {
    let in_dim = rng.gen_range(1..=max_width);
    let depth = rng.gen_range(1..=max_layers);
    random_network_with_depth(rng, in_dim, depth, max_width, acts)
}

/// Squared error with a target in `(0, 1)` and a rate in `[0.1, 1)`.
pub fn random_squared_error<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> LossPredicate {
    let target = Vector::from_raw((0..dim).map(|_| rng.gen_range(0.01..0.99)).collect());
    let rate = rng.gen_range(0.1..1.0);
    LossPredicate::squared_error(target, rate).expect("positive rate")
}

/// Like [`random_network_with_depth`] but every layer has a random mask.
pub fn random_masked_network<R: Rng + ?Sized>(
    rng: &mut R,
    in_dim: usize,
    depth: usize,
    max_width: usize,
    acts: &[Activation],
) -> Network {
    let mut dim = in_dim;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let k = rng.gen_range(1..=max_width);
        let act = *acts.choose(rng).expect("at least one activation");
        layers.push(random_masked_layer(rng, dim, k, act));
        dim = k;
    }
    Network::with_dim(in_dim, layers).expect("chained by construction")
}
