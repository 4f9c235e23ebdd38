//! File formats and the `nncat` command line.
//!
//! * Network files are JSON: `{"in_dim": n, "layers": [{"weights": [[..]],
//!   "bias": [..], "mask": [[..]], "bias_mutable": [..], "activation": "sigmoid"}]}`.
//!   `mask` and `bias_mutable` default to all-true; `in_dim` may be omitted
//!   when the first layer has at least one row. Reals are written as shortest
//!   round-trip literals, so parse after serialize is bitwise exact.
//! * Dataset files are headerless CSV: `n` input columns then `k` target columns.
//! * Trace files are `step,loss` rows, loss with 8 decimals.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or parse error.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::activation::Activation;
use crate::algebra::{Matrix, Vector};
use crate::backprop::{backprop_step, train, SgdConfig, TrainRecord};
use crate::error::{Error, Result};
use crate::loss::LossPredicate;
use crate::network::{mazur_network, Layer, Mask, Network};
use crate::oracle::{fd_network_gradients, max_abs_deviation, FdConfig};
use crate::random::random_network_with_depth;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable that overrides `gradcheck --seed`.
pub const SEED_ENV: &str = "NNCAT_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub in_dim: Option<usize>,
    pub layers: Vec<LayerFile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<Vec<Vec<bool>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bias_mutable: Option<Vec<bool>>,
    pub activation: Activation,
}

impl NetworkFile {
    pub fn from_network(net: &Network) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|l| {
                let t = l.transition();
                let n = l.in_dim();
                LayerFile {
                    weights: (0..t.rows()).map(|j| t.row(j)[..n].to_vec()).collect(),
                    bias: t.column(n).into_inner(),
                    mask: Some(l.mask().row_vecs()),
                    bias_mutable: Some(l.bias_mutable().to_vec()),
                    activation: l.activation(),
                }
            })
            .collect();
        NetworkFile {
            in_dim: Some(net.in_dim()),
            layers,
        }
    }

    pub fn to_network(&self, source: &str) -> Result<Network> {
        let shape_err = |msg: String| Error::parse(source, msg);
        let mut dim = match (self.in_dim, self.layers.first()) {
            (Some(n), _) => n,
            (None, Some(first)) if !first.weights.is_empty() => first.weights[0].len(),
            (None, _) => {
                return Err(shape_err(
                    "in_dim is required when the first layer has no rows".into(),
                ))
            }
        };
        let in_dim = dim;
        let mut layers = Vec::with_capacity(self.layers.len());
        for (idx, lf) in self.layers.iter().enumerate() {
            let k = lf.bias.len();
            if lf.weights.len() != k {
                return Err(shape_err(format!(
                    "layer {idx}: {} weight rows but {k} biases",
                    lf.weights.len()
                )));
            }
            let mut data = Vec::with_capacity(k * (dim + 1));
            for (j, row) in lf.weights.iter().enumerate() {
                if row.len() != dim {
                    return Err(shape_err(format!(
                        "layer {idx}: weight row {j} has {} entries, expected input dimension {dim}",
                        row.len()
                    )));
                }
                data.extend_from_slice(row);
                data.push(lf.bias[j]);
            }
            let transition = Matrix::new(k, dim + 1, data)
                .map_err(|e| shape_err(format!("layer {idx}: {e}")))?;
            let mask = match &lf.mask {
                None => Mask::filled(k, dim, true),
                Some(rows) => {
                    if rows.len() != k || rows.iter().any(|r| r.len() != dim) {
                        return Err(shape_err(format!("layer {idx}: mask must be {k}x{dim}")));
                    }
                    Mask::new(k, dim, rows.concat()).expect("checked shape")
                }
            };
            let bias_mutable = match &lf.bias_mutable {
                None => vec![true; k],
                Some(b) if b.len() == k => b.clone(),
                Some(b) => {
                    return Err(shape_err(format!(
                        "layer {idx}: bias_mutable has length {}, expected {k}",
                        b.len()
                    )))
                }
            };
            let layer = Layer::new(transition, mask, bias_mutable, lf.activation)
                .map_err(|e| shape_err(format!("layer {idx}: {e}")))?;
            layers.push(layer);
            dim = k;
        }
        Network::with_dim(in_dim, layers).map_err(|e| shape_err(e.to_string()))
    }
}

pub fn parse_network(text: &str, source: &str) -> Result<Network> {
    let file: NetworkFile =
        serde_json::from_str(text).map_err(|e| Error::parse(source, e.to_string()))?;
    file.to_network(source)
}

pub fn serialize_network(net: &Network) -> String {
    let mut s = serde_json::to_string_pretty(&NetworkFile::from_network(net))
        .expect("network files always serialize");
    s.push('\n');
    s
}

pub fn read_network(path: &Path) -> Result<Network> {
    let source = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|e| Error::parse(&source, e.to_string()))?;
    parse_network(&text, &source)
}

/// Parses headerless CSV rows of `in_dim + out_dim` reals. Blank lines are skipped.
pub fn parse_dataset(
    text: &str,
    source: &str,
    in_dim: usize,
    out_dim: usize,
) -> Result<Vec<(Vector, Vector)>> {
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values = parse_reals(line)
            .map_err(|msg| Error::parse(source, format!("line {}: {msg}", lineno + 1)))?;
        if values.len() != in_dim + out_dim {
            return Err(Error::parse(
                source,
                format!(
                    "line {}: expected {} values ({in_dim} inputs, {out_dim} targets), found {}",
                    lineno + 1,
                    in_dim + out_dim,
                    values.len()
                ),
            ));
        }
        let target = values[in_dim..].to_vec();
        let mut input = values;
        input.truncate(in_dim);
        rows.push((Vector::from_raw(input), Vector::from_raw(target)));
    }
    Ok(rows)
}

/// A comma-separated list of finite reals. The empty string is the empty vector.
pub fn parse_vector_literal(text: &str) -> Result<Vector> {
    let values = parse_reals(text).map_err(|msg| Error::parse("vector literal", msg))?;
    Ok(Vector::from_raw(values))
}

fn parse_reals(text: &str) -> std::result::Result<Vec<f64>, String> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',')
        .map(|field| {
            let field = field.trim();
            match field.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                Ok(_) => Err(format!("{field:?} is not finite")),
                Err(_) => Err(format!("{field:?} is not a number")),
            }
        })
        .collect()
}

/// Fixed 8-decimal formatting. Ties in the exact binary value round to even;
/// a negative value that rounds to zero prints without its sign.
pub fn fmt8(x: f64) -> String {
    let s = format!("{x:.8}");
    if s == "-0.00000000" {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|&x| fmt8(x)).collect::<Vec<_>>().join(",")
}

/// `step,loss` rows; the loss is the squared error without the learning rate.
pub fn format_trace(records: &[TrainRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&format!("{},{}\n", r.step, fmt8(r.squared_error)));
    }
    s
}

/// Values printed in the worked two-layer example, against which `demo mazur`
/// checks itself. The printed gradients leave out the learning rate.
#[derive(Debug, Clone, PartialEq)]
pub struct MazurConstants {
    pub input: [f64; 2],
    pub target: [f64; 2],
    pub eta: f64,
    pub hidden: [f64; 2],
    pub output: [f64; 2],
    pub grad_second: [[f64; 3]; 2],
    pub grad_first: [[f64; 3]; 2],
    pub updated_second: [[f64; 3]; 2],
    pub updated_first: [[f64; 3]; 2],
}

pub const MAZUR: MazurConstants = MazurConstants {
    input: [0.05, 0.1],
    target: [0.01, 0.99],
    eta: 0.5,
    hidden: [0.59326999, 0.59688438],
    output: [0.75136507, 0.77292847],
    grad_second: [
        [0.08216704, 0.08266763, 0.13849856],
        [-0.02260254, -0.02274024, -0.03809824],
    ],
    grad_first: [
        [0.00043857, 0.00087714, 0.00877135],
        [0.00049771, 0.00099543, 0.00995425],
    ],
    updated_second: [
        [0.35891648, 0.40866619, 0.53075072],
        [0.51130127, 0.56137012, 0.61904912],
    ],
    updated_first: [
        [0.14978072, 0.19956143, 0.34561432],
        [0.24975114, 0.29950229, 0.34502287],
    ],
};

/// Tolerance for matching the 8-decimal constants.
pub const DEMO_TOL: f64 = 1e-8;

/// Runs the worked example and prints every value next to the expected one.
/// Returns whether everything matched.
pub fn demo_mazur(expected: &MazurConstants, out: &mut dyn Write) -> Result<bool> {
    let net = mazur_network();
    let loss = LossPredicate::squared_error(Vector::from_slice(&expected.target)?, expected.eta)?;
    let (updated, trace) = backprop_step(&net, &expected.input, &loss)?;

    let mut all_ok = true;
    let mut line = |out: &mut dyn Write, label: &str, got: &[f64], want: &[f64]| {
        let ok =
            got.len() == want.len() && got.iter().zip(want).all(|(g, w)| (g - w).abs() <= DEMO_TOL);
        all_ok &= ok;
        let _ = writeln!(
            out,
            "{label:<28} {:<40} expected {:<40} {}",
            fmt_vec(got),
            fmt_vec(want),
            if ok { "match" } else { "MISMATCH" }
        );
    };

    let _ = writeln!(out, "network 2 => 2 => 2, sigmoid, eta = {}", expected.eta);
    let _ = writeln!(out, "input a: {}", fmt_vec(&expected.input));
    line(out, "forward state b", &trace.states[1], &expected.hidden);
    line(out, "forward state c", &trace.states[2], &expected.output);

    let _ = writeln!(
        out,
        "gradients include eta; expected = eta x printed gradient"
    );
    let scaled = |m: &[[f64; 3]; 2], j: usize| -> Vec<f64> {
        m[j].iter().map(|v| expected.eta * v).collect()
    };
    for j in 0..2 {
        line(
            out,
            &format!("gradient S row {j}"),
            trace.gradients[1].matrix().row(j),
            &scaled(&expected.grad_second, j),
        );
    }
    for j in 0..2 {
        line(
            out,
            &format!("gradient T row {j}"),
            trace.gradients[0].matrix().row(j),
            &scaled(&expected.grad_first, j),
        );
    }
    for j in 0..2 {
        line(
            out,
            &format!("updated S row {j}"),
            updated.layers()[1].transition().row(j),
            &expected.updated_second[j],
        );
    }
    for j in 0..2 {
        line(
            out,
            &format!("updated T row {j}"),
            updated.layers()[0].transition().row(j),
            &expected.updated_first[j],
        );
    }
    let _ = writeln!(
        out,
        "{}",
        if all_ok {
            "all values match"
        } else {
            "some values do not match"
        }
    );
    Ok(all_ok)
}

#[derive(Debug, Parser)]
#[command(
    name = "nncat",
    version,
    about = "Forward state and backward loss transformation for multilayer perceptrons"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a network forward on one input state.
    Forward {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        input: String,
    },
    /// Per-example gradient descent over a CSV dataset.
    Train {
        #[arg(long)]
        net: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        eta: f64,
        #[arg(long)]
        epochs: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: PathBuf,
    },
    /// Compare analytic gradients against finite differences. Without --net a
    /// random 3-layer network is generated from --seed (or NNCAT_SEED).
    Gradcheck {
        #[arg(long)]
        net: Option<PathBuf>,
        #[arg(long, allow_hyphen_values = true)]
        input: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        target: Option<String>,
        #[arg(long)]
        eta: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Built-in worked examples.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Demo {
    /// The two-layer sigmoid network with one backprop step.
    Mazur,
}

/// Parses `args` (including the program name) and runs the command, reading
/// the seed override from the process environment.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let env_seed = std::env::var(SEED_ENV).ok();
    run_with_env(args, env_seed.as_deref(), out, err)
}

pub fn run_with_env<I, T>(
    args: I,
    env_seed: Option<&str>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(cli.command, env_seed, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            EXIT_USAGE
        }
    }
}

fn dispatch(command: Command, env_seed: Option<&str>, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Forward { net, input } => cmd_forward(&net, &input, out),
        Command::Train {
            net,
            data,
            eta,
            epochs,
            out: out_net,
            trace,
        } => cmd_train(&net, &data, eta, epochs, &out_net, &trace),
        Command::Gradcheck {
            net,
            input,
            target,
            eta,
            eps,
            tol,
            seed,
        } => {
            let seed = match env_seed {
                Some(s) => Some(s.trim().parse::<u64>().map_err(|_| {
                    Error::InvalidConfig(format!("{SEED_ENV}={s:?} is not an unsigned integer"))
                })?),
                None => seed,
            };
            let req = GradcheckRequest {
                net,
                input,
                target,
                eta,
                eps,
                tol,
                seed,
            };
            cmd_gradcheck(&req, out)
        }
        Command::Demo { which: Demo::Mazur } => {
            let ok = demo_mazur(&MAZUR, out)?;
            Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

pub fn cmd_forward(net_path: &Path, input: &str, out: &mut dyn Write) -> Result<i32> {
    let net = read_network(net_path)?;
    let x = parse_vector_literal(input)?;
    let y = net
        .forward(&x)
        .map_err(|e| Error::parse(net_path.display().to_string(), e.to_string()))?;
    let _ = writeln!(out, "{}", fmt_vec(&y));
    Ok(EXIT_OK)
}

pub fn cmd_train(
    net_path: &Path,
    data_path: &Path,
    eta: f64,
    epochs: usize,
    out_path: &Path,
    trace_path: &Path,
) -> Result<i32> {
    let net = read_network(net_path)?;
    let source = data_path.display().to_string();
    let text = fs::read_to_string(data_path).map_err(|e| Error::parse(&source, e.to_string()))?;
    let data = parse_dataset(&text, &source, net.in_dim(), net.out_dim())?;
    let (trained, records) = train(&net, &data, eta, SgdConfig { epochs })?;
    fs::write(out_path, serialize_network(&trained))
        .map_err(|e| Error::parse(out_path.display().to_string(), e.to_string()))?;
    fs::write(trace_path, format_trace(&records))
        .map_err(|e| Error::parse(trace_path.display().to_string(), e.to_string()))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradcheckRequest {
    pub net: Option<PathBuf>,
    pub input: Option<String>,
    pub target: Option<String>,
    pub eta: f64,
    pub eps: f64,
    pub tol: f64,
    pub seed: Option<u64>,
}

pub fn cmd_gradcheck(req: &GradcheckRequest, out: &mut dyn Write) -> Result<i32> {
    let cfg = FdConfig::new(req.eps, req.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed.unwrap_or(0));
    let net = match &req.net {
        Some(path) => read_network(path)?,
        None => {
            let in_dim = rng.gen_range(1..=4);
            random_network_with_depth(&mut rng, in_dim, 3, 4, &Activation::ALL)
        }
    };
    let input = match (&req.input, &req.net) {
        (Some(s), _) => parse_vector_literal(s)?,
        (None, None) => crate::random::random_state(&mut rng, net.in_dim()),
        (None, Some(_)) => {
            return Err(Error::InvalidConfig(
                "--input is required with --net".into(),
            ))
        }
    };
    let target = match (&req.target, &req.net) {
        (Some(s), _) => parse_vector_literal(s)?,
        (None, None) => Vector::from_raw(
            (0..net.out_dim())
                .map(|_| rng.gen_range(0.01..0.99))
                .collect(),
        ),
        (None, Some(_)) => {
            return Err(Error::InvalidConfig(
                "--target is required with --net".into(),
            ))
        }
    };
    if target.len() != net.out_dim() {
        return Err(Error::shape(
            "gradcheck",
            format!("target of length {}", net.out_dim()),
            format!("length {}", target.len()),
        ));
    }
    let loss = LossPredicate::squared_error(target, req.eta)?;
    let (_, trace) = backprop_step(&net, &input, &loss)?;
    let numeric = fd_network_gradients(&net, &input, &loss, &cfg)?;

    let mut all_ok = true;
    for (i, (g, fd)) in trace.gradients.iter().zip(&numeric).enumerate() {
        let dev = max_abs_deviation(g.matrix(), fd.matrix())?;
        let ok = dev <= cfg.tol();
        all_ok &= ok;
        let _ = writeln!(
            out,
            "layer {i} ({} => {}, {}): max |analytic - fd| = {dev:.3e} (tol {:.1e}) {}",
            net.layers()[i].in_dim(),
            net.layers()[i].out_dim(),
            net.layers()[i].activation(),
            cfg.tol(),
            if ok { "ok" } else { "FAIL" }
        );
    }
    Ok(if all_ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}
