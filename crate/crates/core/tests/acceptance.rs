//! Exit criteria. Each criterion prints one PASS/FAIL line with its timing;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p nncat --test acceptance -- --nocapture` to see the
//! report.

use std::time::{Duration, Instant};

use nncat::backward::{erosion_transform_layer_via, ErosionPath};
use nncat::cli_io::{demo_mazur, parse_network, serialize_network, MAZUR};
use nncat::network::mazur_network;
use nncat::oracle::{fd_network_gradients, max_abs_deviation};
use nncat::random::{
    random_layer, random_masked_network, random_network, random_network_from,
    random_network_with_depth, random_squared_error, random_state,
};
use nncat::{
    backprop_step, fd_layer_gradient, functoriality_check, layer_gradient, train,
    validity_equation_check, Activation, FdConfig, LossPredicate, Network, SgdConfig, Vector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn mazur_loss() -> LossPredicate {
    LossPredicate::squared_error(Vector::new(MAZUR.target.to_vec()).unwrap(), MAZUR.eta).unwrap()
}

fn max_dev(got: &[f64], want: &[f64]) -> f64 {
    assert_eq!(got.len(), want.len());
    got.iter()
        .zip(want)
        .map(|(g, w)| (g - w).abs())
        .fold(0.0, f64::max)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn golden_forward() -> Outcome {
    let mut report = Vec::new();
    let demo_ok = demo_mazur(&MAZUR, &mut report).map_err(|e| e.to_string())?;
    ensure(demo_ok, || String::from_utf8_lossy(&report).into_owned())?;
    let states = mazur_network()
        .forward_states(&MAZUR.input)
        .map_err(|e| e.to_string())?;
    let db = max_dev(&states[1], &MAZUR.hidden);
    let dc = max_dev(&states[2], &MAZUR.output);
    ensure(db <= 1e-8 && dc <= 1e-8, || {
        format!("b off by {db:e}, c off by {dc:e}")
    })?;
    Ok(format!("max deviation b {db:.1e}, c {dc:.1e}"))
}

fn golden_backprop() -> Outcome {
    let (net, _) =
        backprop_step(&mazur_network(), &MAZUR.input, &mazur_loss()).map_err(|e| e.to_string())?;
    let ds = max_dev(
        net.layers()[1].transition().as_slice(),
        &MAZUR.updated_second.concat(),
    );
    let dt = max_dev(
        net.layers()[0].transition().as_slice(),
        &MAZUR.updated_first.concat(),
    );
    ensure(ds <= 1e-8 && dt <= 1e-8, || {
        format!("S off by {ds:e}, T off by {dt:e}")
    })?;
    Ok(format!("max deviation S {ds:.1e}, T {dt:.1e}"))
}

fn gradient_matrices() -> Outcome {
    let net = mazur_network();
    let loss = mazur_loss();
    let (_, trace) = backprop_step(&net, &MAZUR.input, &loss).map_err(|e| e.to_string())?;
    let printed = [MAZUR.grad_first.concat(), MAZUR.grad_second.concat()];
    let cfg = FdConfig::new(1e-6, 1e-5).unwrap();
    let fd = fd_network_gradients(&net, &MAZUR.input, &loss, &cfg).map_err(|e| e.to_string())?;
    let mut worst_scaled: f64 = 0.0;
    let mut worst_fd: f64 = 0.0;
    let mut closest_printed = f64::INFINITY;
    for i in 0..2 {
        let engine = trace.gradients[i].matrix().as_slice();
        let scaled: Vec<f64> = printed[i].iter().map(|v| MAZUR.eta * v).collect();
        worst_scaled = worst_scaled.max(max_dev(engine, &scaled));
        worst_fd = worst_fd.max(max_dev(engine, fd[i].matrix().as_slice()));
        // the unscaled printed matrices must be rejected by the oracle
        let dist = fd[i]
            .matrix()
            .as_slice()
            .iter()
            .zip(&printed[i])
            .map(|(f, p)| (f - p).abs())
            .fold(f64::INFINITY, f64::min);
        closest_printed = closest_printed.min(dist);
    }
    ensure(worst_scaled <= 1e-8, || {
        format!("engine vs eta x printed: {worst_scaled:e}")
    })?;
    ensure(worst_fd <= cfg.tol(), || {
        format!("engine vs fd: {worst_fd:e}")
    })?;
    ensure(closest_printed > cfg.tol(), || {
        format!("an unscaled printed entry is within {closest_printed:e} of fd")
    })?;
    Ok(format!(
        "engine = eta x printed to {worst_scaled:.1e}; fd agrees to {worst_fd:.1e}; \
         unscaled printed entries miss fd by >= {closest_printed:.1e}"
    ))
}

fn validity_equation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    for case in 0..100 {
        let n = random_network(&mut rng, 5, 6, &Activation::ALL);
        let l = random_squared_error(&mut rng, n.out_dim());
        let x = random_state(&mut rng, n.in_dim());
        let (lhs, rhs) = validity_equation_check(&n, &x, &l).map_err(|e| e.to_string())?;
        ensure(lhs.to_bits() == rhs.to_bits(), || {
            format!("case {case}: {lhs} != {rhs}")
        })?;
    }
    Ok("100/100 bitwise equal".into())
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let cfg = FdConfig::new(1e-6, 1e-5).unwrap();
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let act = Activation::ALL[case % 4];
        let (n, k) = (rng.gen_range(0..=6), rng.gen_range(1..=6));
        let layer = random_layer(&mut rng, n, k, act);
        let a = random_state(&mut rng, n);
        let loss = random_squared_error(&mut rng, k);
        let g = layer_gradient(&layer, &a, &loss).map_err(|e| e.to_string())?;
        let fd = fd_layer_gradient(&layer, &a, &loss, &cfg).map_err(|e| e.to_string())?;
        for (x, y) in g.matrix().as_slice().iter().zip(fd.matrix().as_slice()) {
            ensure(cfg.agrees(*x, *y), || {
                format!("case {case} ({act}): {x} vs {y}")
            })?;
            worst = worst.max((x - y).abs());
        }
    }
    Ok(format!(
        "200/200 layers agree; worst absolute gap {worst:.1e}"
    ))
}

fn functoriality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1006);
    for case in 0..100 {
        let n = random_network(&mut rng, 3, 5, &Activation::ALL);
        let p = random_network_from(&mut rng, n.out_dim(), 3, 5, &Activation::ALL);
        let f = random_squared_error(&mut rng, p.out_dim());
        let a = random_state(&mut rng, n.in_dim());
        let ok = functoriality_check(&n, &p, &a, &f).map_err(|e| e.to_string())?;
        ensure(ok, || format!("pair {case}"))?;
    }
    let mut splits = 0;
    for case in 0..20 {
        let depth = rng.gen_range(1..=5);
        let in_dim = rng.gen_range(1..=5);
        let net = random_network_with_depth(&mut rng, in_dim, depth, 5, &Activation::ALL);
        let f = random_squared_error(&mut rng, net.out_dim());
        let a = random_state(&mut rng, in_dim);
        for at in 0..=net.len() {
            let (head, tail) = net.split_at(at);
            let ok = functoriality_check(&head, &tail, &a, &f).map_err(|e| e.to_string())?;
            ensure(ok, || format!("deep net {case}, split at {at}"))?;
            splits += 1;
        }
    }
    Ok(format!("100 pairs and {splits} split points pass at 1e-12"))
}

fn sigmoid_shortcut() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1007);
    let mut worst: f64 = 0.0;
    for case in 0..200 {
        let (n, k) = (rng.gen_range(1..=6), rng.gen_range(1..=6));
        let layer = random_layer(&mut rng, n, k, Activation::Sigmoid);
        let loss = random_squared_error(&mut rng, k);
        let x = random_state(&mut rng, n);
        let fast = erosion_transform_layer_via(
            &layer,
            loss.erosion_fn(),
            &x,
            ErosionPath::SigmoidShortcut,
        )
        .map_err(|e| e.to_string())?;
        let generic =
            erosion_transform_layer_via(&layer, loss.erosion_fn(), &x, ErosionPath::Generic)
                .map_err(|e| e.to_string())?;
        let d = max_dev(&fast, &generic);
        ensure(d <= 1e-12, || format!("case {case}: {d:e}"))?;
        worst = worst.max(d);
    }
    Ok(format!("200/200 agree; worst gap {worst:.1e}"))
}

fn mask_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1008);
    let (mut frozen_checked, mut mutable_changed) = (0usize, 0usize);
    for case in 0..10 {
        let in_dim = rng.gen_range(1..=4);
        let depth = rng.gen_range(1..=3);
        let mut net = random_masked_network(&mut rng, in_dim, depth, 4, &Activation::ALL);
        let rows: Vec<(Vector, LossPredicate)> = (0..5)
            .map(|_| {
                let x = random_state(&mut rng, in_dim);
                (x, random_squared_error(&mut rng, net.out_dim()))
            })
            .collect();
        for step in 0..100 {
            let (x, loss) = &rows[step % rows.len()];
            let (next, trace) = backprop_step(&net, x, loss).map_err(|e| e.to_string())?;
            for (idx, ((old, new), g)) in net
                .layers()
                .iter()
                .zip(next.layers())
                .zip(&trace.gradients)
                .enumerate()
            {
                let (k, cols) = old.transition().shape();
                for j in 0..k {
                    for i in 0..cols {
                        let (before, after) =
                            (old.transition().get(j, i), new.transition().get(j, i));
                        if old.is_mutable(j, i) {
                            if g.get(j, i) != 0.0 {
                                ensure(after != before, || {
                                    format!("case {case} step {step} layer {idx} ({j},{i}): nonzero gradient {} left entry unchanged", g.get(j, i))
                                })?;
                                mutable_changed += 1;
                            }
                        } else {
                            ensure(after.to_bits() == before.to_bits(), || {
                                format!("case {case} step {step} layer {idx} ({j},{i}): frozen entry moved")
                            })?;
                            frozen_checked += 1;
                        }
                    }
                }
            }
            net = next;
        }
    }
    Ok(format!(
        "{frozen_checked} frozen entries unchanged, {mutable_changed} mutable entries moved"
    ))
}

fn convergence() -> Outcome {
    let data = vec![(
        Vector::new(MAZUR.input.to_vec()).unwrap(),
        Vector::new(MAZUR.target.to_vec()).unwrap(),
    )];
    let (_, records) = train(
        &mazur_network(),
        &data,
        MAZUR.eta,
        SgdConfig { epochs: 10_000 },
    )
    .map_err(|e| e.to_string())?;
    let last = records.last().ok_or("empty trace")?.squared_error;
    ensure(last < 1e-4, || format!("final squared error {last:e}"))?;
    let decreasing = records[..100]
        .windows(2)
        .all(|w| w[1].squared_error < w[0].squared_error);
    ensure(decreasing, || {
        "trace not strictly decreasing over the first 100 steps".into()
    })?;
    Ok(format!("squared error after 10000 steps {last:.3e}"))
}

fn round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for case in 0..100 {
        let in_dim = rng.gen_range(1..=6);
        let depth = rng.gen_range(0..=5);
        let net: Network = random_masked_network(&mut rng, in_dim, depth, 6, &Activation::ALL);
        let back =
            parse_network(&serialize_network(&net), "roundtrip").map_err(|e| e.to_string())?;
        let same = net.layers().len() == back.layers().len()
            && net.in_dim() == back.in_dim()
            && net.layers().iter().zip(back.layers()).all(|(a, b)| {
                a.mask() == b.mask()
                    && a.bias_mutable() == b.bias_mutable()
                    && a.activation() == b.activation()
                    && a.transition().shape() == b.transition().shape()
                    && a.transition()
                        .as_slice()
                        .iter()
                        .zip(b.transition().as_slice())
                        .all(|(p, q)| p.to_bits() == q.to_bits())
            });
        ensure(same, || format!("network {case} changed"))?;
        let dev = net
            .layers()
            .iter()
            .zip(back.layers())
            .map(|(a, b)| max_abs_deviation(a.transition(), b.transition()).unwrap())
            .fold(0.0, f64::max);
        ensure(dev == 0.0, || format!("network {case}: deviation {dev:e}"))?;
    }
    Ok("100/100 bitwise identical".into())
}

#[test]
fn acceptance_criteria() {
    let criteria = [
        Criterion {
            id: 1,
            name: "golden forward pass",
            budget: Some(Duration::from_secs(1)),
            run: golden_forward,
        },
        Criterion {
            id: 2,
            name: "golden backprop step",
            budget: Some(Duration::from_secs(1)),
            run: golden_backprop,
        },
        Criterion {
            id: 3,
            name: "gradient matrices (eta-folded)",
            budget: None,
            run: gradient_matrices,
        },
        Criterion {
            id: 4,
            name: "validity equation",
            budget: Some(Duration::from_secs(1)),
            run: validity_equation,
        },
        Criterion {
            id: 5,
            name: "oracle equivalence",
            budget: Some(Duration::from_secs(10)),
            run: oracle_equivalence,
        },
        Criterion {
            id: 6,
            name: "functoriality of backprop",
            budget: Some(Duration::from_secs(10)),
            run: functoriality,
        },
        Criterion {
            id: 7,
            name: "sigmoid shortcut",
            budget: None,
            run: sigmoid_shortcut,
        },
        Criterion {
            id: 8,
            name: "mask semantics",
            budget: None,
            run: mask_semantics,
        },
        Criterion {
            id: 9,
            name: "training convergence",
            budget: Some(Duration::from_secs(5)),
            run: convergence,
        },
        Criterion {
            id: 10,
            name: "file-format round trip",
            budget: None,
            run: round_trip,
        },
    ];

    let mut failures = Vec::new();
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.budget) {
            (Ok(_), Some(budget)) if elapsed > budget => {
                Err(format!("took {elapsed:?}, budget {budget:?}"))
            }
            (o, _) => o,
        };
        match &outcome {
            Ok(detail) => println!(
                "[PASS] AC{:<2} {:<32} {:>9.1?}  {detail}",
                c.id, c.name, elapsed
            ),
            Err(why) => {
                println!(
                    "[FAIL] AC{:<2} {:<32} {:>9.1?}  {why}",
                    c.id, c.name, elapsed
                );
                failures.push(c.id);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
