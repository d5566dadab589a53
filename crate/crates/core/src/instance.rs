//! Binary IP instances `max c^T x, Ax <= b, x in {0,1}^n` and their text format.
//!
//! File layout (UTF-8, whitespace separated, numbers in shortest round-trip
//! decimal so reading back is bit exact):
//!
//! ```text
//! GIPLAB v1
//! <m> <n>
//! <b_spec descriptor>
//! <seed>
//! <b_1> ... one per line (m lines)
//! <c_1> ... one per line (n lines)
//! <A row 1>          (m lines of n entries)
//! ```

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numerics::{neg_part_norm, DenseMatrix};
use crate::random::{gaussian_matrix, gaussian_vector, RngHandle};

pub const MAGIC: &str = "GIPLAB v1";

/// How the right-hand side `b` is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum BSpec {
    Zeros,
    /// `b_i = beta_i * n`; a single `beta` is broadcast to every row.
    ScaledOnes(Vec<f64>),
    /// i.i.d. standard normal entries.
    Gaussian,
    Explicit(Vec<f64>),
}

impl BSpec {
    /// Whether this spec promises `‖b⁻‖₂ <= n/10`. Gaussian and explicit
    /// right-hand sides make no such promise.
    pub fn declares_norm_bound(&self) -> bool {
        matches!(self, BSpec::Zeros | BSpec::ScaledOnes(_))
    }

    pub fn descriptor(&self) -> String {
        match self {
            BSpec::Zeros => "zeros".into(),
            BSpec::Gaussian => "gaussian".into(),
            BSpec::Explicit(_) => "explicit".into(),
            BSpec::ScaledOnes(beta) => {
                let mut s = String::from("scaled_ones");
                for v in beta {
                    write!(s, " {v:?}").unwrap();
                }
                s
            }
        }
    }

    /// Short label for CSV columns: no spaces or commas.
    pub fn label(&self) -> String {
        match self {
            BSpec::ScaledOnes(beta) => {
                let parts: Vec<String> = beta.iter().map(|v| format!("{v:?}")).collect();
                format!("scaled:{}", parts.join(";"))
            }
            other => other.descriptor(),
        }
    }

    /// Parses a file descriptor line. `explicit` carries no values here; the
    /// caller fills them from the `b` block.
    pub fn parse_descriptor(line: &str) -> Result<BSpec> {
        let mut tokens = line.split_whitespace();
        let kind = tokens
            .next()
            .ok_or_else(|| Error::parse("b_spec", "empty descriptor"))?;
        let spec = match kind {
            "zeros" => BSpec::Zeros,
            "gaussian" => BSpec::Gaussian,
            "explicit" => BSpec::Explicit(Vec::new()),
            "scaled_ones" => {
                let beta = tokens
                    .by_ref()
                    .map(|t| parse_f64("b_spec", t))
                    .collect::<Result<Vec<_>>>()?;
                if beta.is_empty() {
                    return Err(Error::parse("b_spec", "scaled_ones needs at least one beta"));
                }
                return Ok(BSpec::ScaledOnes(beta));
            }
            other => return Err(Error::parse("b_spec", format!("unknown kind `{other}`"))),
        };
        if let Some(extra) = tokens.next() {
            return Err(Error::parse("b_spec", format!("unexpected token `{extra}`")));
        }
        Ok(spec)
    }

    /// Parses the CLI form: `zeros`, `gaussian`, `scaled:0.3[,0.2...]` or
    /// `explicit:1,-2,...`.
    pub fn parse_cli(s: &str) -> Result<BSpec> {
        let list = |body: &str, field: &str| -> Result<Vec<f64>> {
            body.split(',').map(|t| parse_f64(field, t.trim())).collect()
        };
        match s {
            "zeros" => Ok(BSpec::Zeros),
            "gaussian" => Ok(BSpec::Gaussian),
            _ => {
                if let Some(body) = s.strip_prefix("scaled:") {
                    Ok(BSpec::ScaledOnes(list(body, "b_spec")?))
                } else if let Some(body) = s.strip_prefix("explicit:") {
                    Ok(BSpec::Explicit(list(body, "b_spec")?))
                } else {
                    Err(Error::parse("b_spec", format!("unknown b spec `{s}`")))
                }
            }
        }
    }

    fn realize(&self, m: usize, n: usize, rng: &mut RngHandle) -> Result<Vec<f64>> {
        match self {
            BSpec::Zeros => Ok(vec![0.0; m]),
            BSpec::Gaussian => Ok(gaussian_vector(m, rng)),
            BSpec::ScaledOnes(beta) => {
                if beta.iter().any(|v| !v.is_finite()) {
                    return Err(Error::domain("scaled_ones beta must be finite"));
                }
                match beta.len() {
                    1 => Ok(vec![beta[0] * n as f64; m]),
                    len if len == m => Ok(beta.iter().map(|v| v * n as f64).collect()),
                    len => Err(Error::Dimension(format!(
                        "scaled_ones has {len} betas for {m} rows"
                    ))),
                }
            }
            BSpec::Explicit(values) => {
                if values.len() != m {
                    return Err(Error::Dimension(format!(
                        "explicit b has {} entries for {} rows",
                        values.len(),
                        m
                    )));
                }
                Ok(values.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub seed: u64,
    pub b_spec: BSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub m: usize,
    pub n: usize,
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub meta: InstanceMeta,
}

impl Instance {
    pub fn new(a: DenseMatrix, b: Vec<f64>, c: Vec<f64>, meta: InstanceMeta) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m == 0 || n == 0 {
            return Err(Error::Dimension("instance needs m >= 1 and n >= 1".into()));
        }
        if b.len() != m {
            return Err(Error::Dimension(format!("b has length {}, expected {m}", b.len())));
        }
        if c.len() != n {
            return Err(Error::Dimension(format!("c has length {}, expected {n}", c.len())));
        }
        if b.iter().chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::domain("b and c must be finite"));
        }
        let inst = Instance {
            m,
            n,
            a,
            b,
            c,
            meta,
        };
        if inst.meta.b_spec.declares_norm_bound() && !inst.validate_b() {
            return Err(Error::domain(format!(
                "b spec `{}` promises ‖b⁻‖₂ <= n/10 but ‖b⁻‖₂ = {}",
                inst.meta.b_spec.descriptor(),
                neg_part_norm(&inst.b)
            )));
        }
        Ok(inst)
    }

    /// Convenience constructor for hand-built instances (seed 0, explicit b).
    pub fn from_parts(a: DenseMatrix, b: Vec<f64>, c: Vec<f64>) -> Result<Self> {
        let meta = InstanceMeta {
            seed: 0,
            b_spec: BSpec::Explicit(b.clone()),
        };
        Self::new(a, b, c, meta)
    }

    /// Draws `A` and then `c` with i.i.d. standard normal entries, then `b`.
    pub fn generate(m: usize, n: usize, b_spec: BSpec, rng: &mut RngHandle) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension("generate needs m >= 1 and n >= 1".into()));
        }
        let a = gaussian_matrix(m, n, rng);
        let c = gaussian_vector(n, rng);
        let b = b_spec.realize(m, n, rng)?;
        let meta = InstanceMeta {
            seed: rng.seed(),
            b_spec,
        };
        Self::new(a, b, c, meta)
    }

    /// `‖b⁻‖₂ <= n/10`.
    pub fn validate_b(&self) -> bool {
        neg_part_norm(&self.b) <= self.n as f64 / 10.0
    }

    /// Column `i` of `A`.
    pub fn column(&self, i: usize) -> Vec<f64> {
        self.a.column(i)
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        crate::numerics::dot(&self.c, x)
    }

    /// `max_j ((Ax)_j - b_j)`, positive when `x` violates a constraint.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        self.a
            .mul_vec(x)
            .iter()
            .zip(&self.b)
            .map(|(ax, b)| ax - b)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_feasible(&self, x: &[f64], tol: f64) -> bool {
        self.max_violation(x) <= tol
    }

    pub fn to_text(&self) -> String {
        let mut s = String::with_capacity(32 * (self.m * self.n + self.n + self.m) + 64);
        writeln!(s, "{MAGIC}").unwrap();
        writeln!(s, "{} {}", self.m, self.n).unwrap();
        writeln!(s, "{}", self.meta.b_spec.descriptor()).unwrap();
        writeln!(s, "{}", self.meta.seed).unwrap();
        for v in &self.b {
            writeln!(s, "{v:?}").unwrap();
        }
        for v in &self.c {
            writeln!(s, "{v:?}").unwrap();
        }
        for i in 0..self.m {
            let row: Vec<String> = self.a.row(i).iter().map(|v| format!("{v:?}")).collect();
            writeln!(s, "{}", row.join(" ")).unwrap();
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let mut next_line = |field: &str| {
            lines
                .next()
                .ok_or_else(|| Error::parse(field, "unexpected end of input"))
        };
        let header = next_line("header")?;
        if header.trim() != MAGIC {
            return Err(Error::parse("header", format!("expected `{MAGIC}`, got `{header}`")));
        }
        let dims: Vec<&str> = next_line("dimensions")?.split_whitespace().collect();
        if dims.len() != 2 {
            return Err(Error::parse("dimensions", "expected `m n`"));
        }
        let m = parse_usize("m", dims[0])?;
        let n = parse_usize("n", dims[1])?;
        let mut b_spec = BSpec::parse_descriptor(next_line("b_spec")?)?;
        let seed_line = next_line("seed")?;
        let seed = seed_line
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::parse("seed", format!("`{}`: {e}", seed_line.trim())))?;

        let rest: Vec<&str> = lines.flat_map(str::split_whitespace).collect();
        let expected = m + n + m * n;
        if rest.len() < expected {
            let field = if rest.len() < m {
                format!("b[{}]", rest.len())
            } else if rest.len() < m + n {
                format!("c[{}]", rest.len() - m)
            } else {
                let k = rest.len() - m - n;
                format!("A[{},{}]", k / n, k % n)
            };
            return Err(Error::parse(field, "unexpected end of input"));
        }
        if rest.len() > expected {
            return Err(Error::parse("trailer", format!("{} extra tokens", rest.len() - expected)));
        }
        let b = (0..m)
            .map(|i| parse_f64(&format!("b[{i}]"), rest[i]))
            .collect::<Result<Vec<_>>>()?;
        let c = (0..n)
            .map(|j| parse_f64(&format!("c[{j}]"), rest[m + j]))
            .collect::<Result<Vec<_>>>()?;
        let entries = (0..m * n)
            .map(|k| parse_f64(&format!("A[{},{}]", k / n, k % n), rest[m + n + k]))
            .collect::<Result<Vec<_>>>()?;
        if let BSpec::Explicit(values) = &mut b_spec {
            *values = b.clone();
        }
        let a = DenseMatrix::new(m, n, entries)?;
        Instance::new(a, b, c, InstanceMeta { seed, b_spec })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }
}

fn parse_f64(field: &str, token: &str) -> Result<f64> {
    let v = token
        .parse::<f64>()
        .map_err(|e| Error::parse(field, format!("`{token}`: {e}")))?;
    if !v.is_finite() {
        return Err(Error::parse(field, format!("`{token}` is not finite")));
    }
    Ok(v)
}

fn parse_usize(field: &str, token: &str) -> Result<usize> {
    token
        .parse::<usize>()
        .map_err(|e| Error::parse(field, format!("`{token}`: {e}")))
}
