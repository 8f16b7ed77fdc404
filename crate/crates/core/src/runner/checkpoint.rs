//! Versioned plain-text checkpoints.
//!
//! ```text
//! stein-pareto checkpoint v1
//! problem zdt1
//! n_variables 30
//! scalarization stch
//! mu 100
//! ideal running 0.1          (or: ideal fixed 0 0)
//! layer_sizes 2 128 128 30
//! activation relu
//! squash sigmoid_box
//! optimizer adam 0.9 0.999 0.00000001   (or: optimizer plain)
//! seed 1
//! steps 20000
//! params 21150
//! <one value per line>
//! first_moment 21150
//! ...
//! second_moment 21150
//! ...
//! end
//! ```
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nnet::{Activation, Hypernet, Optimizer, OutputSquash};
use crate::problems::{ProblemKind, ProblemSpec};
use crate::scalarize::{IdealPolicy, ScalarizationKind, ScalarizationSpec};

const MAGIC: &str = "stein-pareto checkpoint v1";

/// A trained network together with what it was trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub problem: ProblemSpec,
    pub scalarization: ScalarizationSpec,
    pub net: Hypernet,
}

struct Reader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Reader<'a> {
    fn line(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l.trim()))
            .ok_or_else(|| Error::Parse(format!("truncated before '{what}'")))
    }

    fn keyed(&mut self, key: &str) -> Result<(usize, Vec<String>)> {
        let (no, line) = self.line(key)?;
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some(k) if k == key => Ok((no, parts.map(str::to_string).collect())),
            other => Err(Error::Parse(format!("line {no}: expected '{key}', found {other:?}"))),
        }
    }

    fn block(&mut self, key: &str) -> Result<Vec<f64>> {
        let (no, v) = self.keyed(key)?;
        let len = match v.as_slice() {
            [n] => int(no, n)? as usize,
            _ => return Err(Error::Parse(format!("line {no}: expected a length"))),
        };
        let mut out = Vec::with_capacity(len);
        for _ in 0..len {
            let (no, line) = self.line(key)?;
            out.push(num(no, line)?);
        }
        Ok(out)
    }
}

fn num(no: usize, s: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Parse(format!("line {no}: bad number '{s}'")))
}

fn int(no: usize, s: &str) -> Result<u64> {
    s.parse::<u64>()
        .map_err(|_| Error::Parse(format!("line {no}: bad integer '{s}'")))
}

fn single(no: usize, v: &[String]) -> Result<String> {
    match v {
        [x] => Ok(x.clone()),
        _ => Err(Error::Parse(format!("line {no}: expected one value"))),
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|v| format!("{v:?}")).collect::<Vec<_>>().join(" ")
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let net = &self.net;
        let scal = &self.scalarization;
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "problem {}", self.problem.name()).unwrap();
        writeln!(s, "n_variables {}", self.problem.n).unwrap();
        writeln!(s, "scalarization {}", scal.kind).unwrap();
        writeln!(s, "mu {:?}", scal.mu).unwrap();
        match &scal.ideal {
            IdealPolicy::Fixed(z) => writeln!(s, "ideal fixed {}", join(z)).unwrap(),
            IdealPolicy::RunningMin { slack } => writeln!(s, "ideal running {slack:?}").unwrap(),
        }
        let sizes: Vec<String> = net.layer_sizes().iter().map(|n| n.to_string()).collect();
        writeln!(s, "layer_sizes {}", sizes.join(" ")).unwrap();
        writeln!(s, "activation {}", net.activation().name()).unwrap();
        writeln!(s, "squash {}", net.squash().name()).unwrap();
        match net.optimizer() {
            Optimizer::Plain => writeln!(s, "optimizer plain").unwrap(),
            Optimizer::Adam { beta1, beta2, eps } => {
                writeln!(s, "optimizer adam {beta1:?} {beta2:?} {eps:?}").unwrap()
            }
        }
        writeln!(s, "seed {}", net.seed()).unwrap();
        writeln!(s, "steps {}", net.steps()).unwrap();
        for (name, values) in [
            ("params", net.params()),
            ("first_moment", net.first_moment()),
            ("second_moment", net.second_moment()),
        ] {
            writeln!(s, "{name} {}", values.len()).unwrap();
            for v in values {
                writeln!(s, "{v:?}").unwrap();
            }
        }
        s.push_str("end\n");
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut r = Reader {
            lines: text.lines().enumerate(),
        };
        let (_, first) = r.line("header")?;
        if first != MAGIC {
            return Err(Error::Parse(format!("not a v1 checkpoint (header '{first}')")));
        }
        let mut header = |key: &str| r.keyed(key);

        let (no, v) = header("problem")?;
        let kind: ProblemKind = single(no, &v)?.parse()?;
        let (no, v) = header("n_variables")?;
        let n = int(no, &single(no, &v)?)? as usize;
        let problem = match kind {
            ProblemKind::Zdt1 | ProblemKind::Zdt2 => ProblemSpec::zdt(kind, n)?,
            _ => ProblemSpec::new(kind),
        };
        if problem.n != n {
            return Err(Error::Parse(format!("line {no}: {kind} has {} variables, not {n}", problem.n)));
        }

        let (no, v) = header("scalarization")?;
        let skind: ScalarizationKind = single(no, &v)?.parse()?;
        let (no, v) = header("mu")?;
        let mu = num(no, &single(no, &v)?)?;
        let (no, v) = header("ideal")?;
        let ideal = match v.split_first() {
            Some((mode, rest)) if mode == "fixed" => {
                IdealPolicy::Fixed(rest.iter().map(|s| num(no, s)).collect::<Result<_>>()?)
            }
            Some((mode, [slack])) if mode == "running" => IdealPolicy::RunningMin {
                slack: num(no, slack)?,
            },
            _ => return Err(Error::Parse(format!("line {no}: bad ideal policy"))),
        };
        let scalarization = ScalarizationSpec::new(skind, mu, ideal)?;

        let (no, v) = header("layer_sizes")?;
        let sizes: Vec<usize> = v
            .iter()
            .map(|s| int(no, s).map(|x| x as usize))
            .collect::<Result<_>>()?;
        let (no, v) = header("activation")?;
        let activation = Activation::from_name(&single(no, &v)?)?;
        let (no, v) = header("squash")?;
        let squash = OutputSquash::from_name(&single(no, &v)?)?;
        let (no, v) = header("optimizer")?;
        let optimizer = match v.as_slice() {
            [p] if p == "plain" => Optimizer::Plain,
            [a, b1, b2, e] if a == "adam" => Optimizer::Adam {
                beta1: num(no, b1)?,
                beta2: num(no, b2)?,
                eps: num(no, e)?,
            },
            _ => return Err(Error::Parse(format!("line {no}: bad optimizer"))),
        };
        let (no, v) = header("seed")?;
        let seed = int(no, &single(no, &v)?)?;
        let (no, v) = header("steps")?;
        let steps = int(no, &single(no, &v)?)?;

        let params = r.block("params")?;
        let m1 = r.block("first_moment")?;
        let m2 = r.block("second_moment")?;
        match r.line("end") {
            Ok((_, "end")) => {}
            _ => return Err(Error::Parse("missing 'end' marker".into())),
        }

        let net = Hypernet::from_parts(&sizes, activation, squash, optimizer, seed, params)?
            .with_optimizer_state(m1, m2, steps)?;
        if net.input_dim() != problem.m || net.output_dim() != problem.n {
            return Err(Error::Parse(format!(
                "network shape {:?} does not fit {}",
                sizes,
                problem.name()
            )));
        }
        Ok(Checkpoint {
            problem,
            scalarization,
            net,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        super::write_atomic(path, self.to_text().as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }
}
