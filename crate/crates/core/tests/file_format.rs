use nncat::cli_io::{parse_network, serialize_network};
use nncat::random::random_masked_layer;
use nncat::{Activation, Layer, Matrix, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bitwise_equal(a: &Network, b: &Network) -> bool {
    a.in_dim() == b.in_dim()
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
                    .all(|(p, q)| p.to_bits() == q.to_bits())
        })
}

/// Masked layers whose entries are rescaled across many magnitudes, so the
/// shortest round-trip literal is exercised beyond numbers near 1.
fn wide_network(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let in_dim = rng.gen_range(0..=5);
    let depth = rng.gen_range(0..=4);
    let mut dim = in_dim;
    let mut layers = Vec::new();
    for _ in 0..depth {
        let k = rng.gen_range(0..=5);
        let act = Activation::ALL[rng.gen_range(0..4)];
        let base = random_masked_layer(&mut rng, dim, k, act);
        let mut t = base.transition().clone();
        for j in 0..k {
            for i in 0..=dim {
                let scale = 10f64.powi(rng.gen_range(-300..300));
                let v = t.get(j, i) * scale;
                t.set(j, i, if v.is_finite() { v } else { 1.0 });
            }
        }
        layers.push(base.with_transition(t).unwrap());
        dim = k;
    }
    Network::with_dim(in_dim, layers).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn serialize_then_parse_is_bitwise_identity(seed in any::<u64>()) {
        let net = wide_network(seed);
        let back = parse_network(&serialize_network(&net), "roundtrip").unwrap();
        prop_assert!(bitwise_equal(&net, &back));
    }
}

#[test]
fn awkward_values_round_trip() {
    let values = [
        -0.0,
        f64::MIN_POSITIVE,
        f64::MAX,
        -f64::MAX,
        5e-324,
        0.1 + 0.2,
        1.0 / 3.0,
    ];
    let t = Matrix::new(values.len(), 1, values.to_vec()).unwrap();
    let net = Network::from_layers(vec![Layer::dense(t, Activation::Identity).unwrap()]).unwrap();
    let back = parse_network(&serialize_network(&net), "awkward").unwrap();
    assert!(bitwise_equal(&net, &back));
}
