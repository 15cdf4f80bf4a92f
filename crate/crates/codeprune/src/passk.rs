//! Functional-correctness estimation: pass@k.
//!
//! Given n generated samples per problem of which c pass the unit tests,
//! pass@k is the probability that a uniformly drawn size-k subset contains
//! at least one passing sample. The closed form multiplies factors
//! (1 - k/j) for j in (n-c, n], all inside (0, 1), so the float product has
//! no cancellation hazard. A subset-enumeration oracle returns the exact
//! rational for small n.

use std::fmt;
use std::io::{BufRead, BufReader, Read};

use itertools::Itertools;
use num_rational::Ratio;

/// Largest n the enumeration oracle accepts; C(20, 10) subsets still
/// enumerate in microseconds and fit u64 arithmetic.
pub const ORACLE_MAX_N: usize = 20;

/// A validated (n, c, k) triple: n samples, c of them correct, k drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PassAtKInput {
    n: usize,
    c: usize,
    k: usize,
}

impl PassAtKInput {
    pub fn new(n: usize, c: usize, k: usize) -> Result<Self, PasskError> {
        if c > n || k == 0 || k > n {
            return Err(PasskError::InvalidInput { n, c, k });
        }
        Ok(PassAtKInput { n, c, k })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn c(&self) -> usize {
        self.c
    }

    pub fn k(&self) -> usize {
        self.k
    }
}

/// Per-problem sample tally as read from a tally file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProblemTally {
    pub problem_id: String,
    pub n: usize,
    pub c: usize,
}

#[derive(Debug)]
pub enum PasskError {
    /// Violates 0 <= c <= n, 1 <= k <= n.
    InvalidInput { n: usize, c: usize, k: usize },
    /// Oracle bound n <= ORACLE_MAX_N exceeded.
    OracleTooLarge { n: usize },
    EmptyTallies,
    MalformedTally { line: usize, detail: String },
    Io(std::io::Error),
}

impl fmt::Display for PasskError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PasskError::InvalidInput { n, c, k } => {
                write!(f, "invalid-input: n={n} c={c} k={k}")
            }
            PasskError::OracleTooLarge { n } => {
                write!(f, "oracle-too-large: n={n} exceeds {ORACLE_MAX_N}")
            }
            PasskError::EmptyTallies => write!(f, "empty-tallies"),
            PasskError::MalformedTally { line, detail } => {
                write!(f, "malformed-tally: line {line}: {detail}")
            }
            PasskError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl std::error::Error for PasskError {}

impl From<std::io::Error> for PasskError {
    fn from(e: std::io::Error) -> Self {
        PasskError::Io(e)
    }
}

/// Unbiased pass@k estimate.
///
/// Returns 1.0 when n - c < k (every subset must contain a correct sample),
/// otherwise 1 - prod_{j=n-c+1}^{n} (1 - k/j). For k = 1 the product
/// telescopes to 1 - (n-c)/n; computing c/n directly keeps that identity
/// exact in floating point.
pub fn pass_at_k(input: PassAtKInput) -> f64 {
    let (n, c, k) = (input.n, input.c, input.k);
    if n - c < k {
        return 1.0;
    }
    if k == 1 {
        return c as f64 / n as f64;
    }
    let mut product = 1.0f64;
    for j in (n - c + 1)..=n {
        product *= 1.0 - k as f64 / j as f64;
    }
    1.0 - product
}

/// Exact pass@k by enumerating every C(n, k) index subset.
///
/// The correct samples are taken as indices 0..c; a subset counts when it
/// contains at least one of them. Independent of the closed form by
/// construction.
pub fn pass_at_k_oracle(input: PassAtKInput) -> Result<Ratio<u64>, PasskError> {
    let (n, c, k) = (input.n, input.c, input.k);
    if n > ORACLE_MAX_N {
        return Err(PasskError::OracleTooLarge { n });
    }
    let mut total = 0u64;
    let mut hits = 0u64;
    for subset in (0..n).combinations(k) {
        total += 1;
        if subset.iter().any(|&i| i < c) {
            hits += 1;
        }
    }
    Ok(Ratio::new(hits, total))
}

/// Mean pass@k over problems.
pub fn aggregate(tallies: &[ProblemTally], k: usize) -> Result<f64, PasskError> {
    if tallies.is_empty() {
        return Err(PasskError::EmptyTallies);
    }
    let mut sum = 0.0;
    for t in tallies {
        sum += pass_at_k(PassAtKInput::new(t.n, t.c, k)?);
    }
    Ok(sum / tallies.len() as f64)
}

/// Parse whitespace-separated tally lines: problem_id n c.
pub fn read_tallies<R: Read>(reader: R) -> Result<Vec<ProblemTally>, PasskError> {
    let mut tallies = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(PasskError::MalformedTally {
                line: i + 1,
                detail: format!("expected `problem_id n c`, got {} fields", fields.len()),
            });
        }
        let parse = |s: &str, what: &str| -> Result<usize, PasskError> {
            s.parse().map_err(|_| PasskError::MalformedTally {
                line: i + 1,
                detail: format!("{what} `{s}` is not a non-negative integer"),
            })
        };
        let n = parse(fields[1], "n")?;
        let c = parse(fields[2], "c")?;
        if c > n {
            return Err(PasskError::MalformedTally {
                line: i + 1,
                detail: format!("c={c} exceeds n={n}"),
            });
        }
        tallies.push(ProblemTally {
            problem_id: fields[0].to_string(),
            n,
            c,
        });
    }
    Ok(tallies)
}
