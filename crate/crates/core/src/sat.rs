//! 3-CNF formulas: representation, evaluation, random generation and exact
//! solution counting.
//!
//! Assignments are integers in `[0, 2^n)` with bit `i` holding variable
//! `b_{i+1}`, so the string `b_n ... b_1` is the binary expansion of the
//! assignment. Variables are 0-based in this module and 1-based in DIMACS.

use std::collections::HashSet;
use std::fmt;

use rand::seq::index::sample;
use rand::Rng as _;
use rayon::prelude::*;
use thiserror::Error;

use crate::rng::{rng_from_seed, Rng};

/// Largest `n` accepted by the exhaustive enumerators.
pub const MAX_ENUMERATION_VARS: usize = 30;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SatError {
    #[error("formula needs at least 3 variables, got {0}")]
    TooFewVariables(usize),
    #[error("variable index {var} out of range for n = {n}")]
    VariableOutOfRange { var: usize, n: usize },
    #[error("clause {0} repeats a variable")]
    RepeatedVariable(usize),
    #[error("clause {0} duplicates an earlier clause")]
    DuplicateClause(usize),
    #[error("cannot draw {m} distinct clauses over {n} variables (at most {max})")]
    TooManyClauses { n: usize, m: usize, max: u64 },
    #[error("n = {n} exceeds the enumeration capacity of {cap} variables")]
    Capacity { n: usize, cap: usize },
    #[error("no unique-solution instance after {trials} trials")]
    GaveUp { trials: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub negated: bool,
}

impl Literal {
    pub fn pos(var: usize) -> Self {
        Literal { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Literal { var, negated: true }
    }

    /// Truth value of the literal under assignment `a`.
    #[inline]
    pub fn eval(&self, a: Assignment) -> bool {
        a.get(self.var) != self.negated
    }

    /// DIMACS form: 1-based, negative when negated.
    pub fn to_dimacs(&self) -> i64 {
        let v = self.var as i64 + 1;
        if self.negated {
            -v
        } else {
            v
        }
    }
}

/// A disjunction of exactly three literals over distinct variables.
///
/// Literal order is kept as given; equality between clauses in the
/// distinctness sense is tested on [`Clause::key`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Clause(pub [Literal; 3]);

impl Clause {
    pub fn new(literals: [Literal; 3]) -> Self {
        Clause(literals)
    }

    pub fn literals(&self) -> &[Literal; 3] {
        &self.0
    }

    /// Literals sorted by variable; identifies the clause as a literal set.
    pub fn key(&self) -> [Literal; 3] {
        let mut k = self.0;
        k.sort();
        k
    }

    pub fn is_satisfied(&self, a: Assignment) -> bool {
        self.0.iter().any(|l| l.eval(a))
    }

    /// `(mask, pattern)` such that the clause is violated by `a` exactly
    /// when `a & mask == pattern`.
    pub fn violation_mask(&self) -> (u64, u64) {
        let mut mask = 0u64;
        let mut pattern = 0u64;
        for l in &self.0 {
            mask |= 1 << l.var;
            if l.negated {
                pattern |= 1 << l.var;
            }
        }
        (mask, pattern)
    }

    fn has_distinct_vars(&self) -> bool {
        let [a, b, c] = self.0;
        a.var != b.var && a.var != c.var && b.var != c.var
    }
}

impl fmt::Display for Clause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, " v ")?;
            }
            if l.negated {
                write!(f, "!")?;
            }
            write!(f, "b{}", l.var + 1)?;
        }
        write!(f, ")")
    }
}

/// Assignment of all `n` variables packed into an integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment(pub u64);

impl Assignment {
    #[inline]
    pub fn get(self, var: usize) -> bool {
        (self.0 >> var) & 1 == 1
    }

    #[inline]
    pub fn flip(self, var: usize) -> Self {
        Assignment(self.0 ^ (1 << var))
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// `b_n ... b_1` as a string of `n` characters.
    pub fn to_bitstring(self, n: usize) -> String {
        (0..n)
            .rev()
            .map(|i| if self.get(i) { '1' } else { '0' })
            .collect()
    }

    pub fn from_bitstring(s: &str) -> Option<Self> {
        if s.is_empty() || s.len() > 64 {
            return None;
        }
        u64::from_str_radix(s, 2).ok().map(Assignment)
    }
}

/// A 3-CNF formula over `n` variables. Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Formula {
    n: usize,
    clauses: Vec<Clause>,
}

impl Formula {
    pub fn new(n: usize, clauses: Vec<Clause>) -> Result<Self, SatError> {
        if n < 3 {
            return Err(SatError::TooFewVariables(n));
        }
        if n > 64 {
            return Err(SatError::Capacity { n, cap: 64 });
        }
        let mut seen = HashSet::with_capacity(clauses.len());
        for (i, c) in clauses.iter().enumerate() {
            for l in &c.0 {
                if l.var >= n {
                    return Err(SatError::VariableOutOfRange { var: l.var, n });
                }
            }
            if !c.has_distinct_vars() {
                return Err(SatError::RepeatedVariable(i));
            }
            if !seen.insert(c.key()) {
                return Err(SatError::DuplicateClause(i));
            }
        }
        let max = max_distinct_clauses(n);
        if clauses.len() as u64 > max {
            // unreachable given distinctness, kept for the explicit bound
            return Err(SatError::TooManyClauses { n, m: clauses.len(), max });
        }
        Ok(Formula { n, clauses })
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Clause] {
        &self.clauses
    }

    pub fn num_assignments(&self) -> u64 {
        1u64 << self.n
    }

    pub fn violation_masks(&self) -> Vec<(u64, u64)> {
        self.clauses.iter().map(Clause::violation_mask).collect()
    }
}

/// `8 * C(n, 3)`: the number of distinct 3-literal clauses over `n` variables.
pub fn max_distinct_clauses(n: usize) -> u64 {
    let n = n as u64;
    if n < 3 {
        return 0;
    }
    8 * (n * (n - 1) * (n - 2) / 6)
}

/// Number of clauses of `formula` left unsatisfied by `a`.
pub fn violated_clauses(formula: &Formula, a: Assignment) -> usize {
    formula
        .clauses
        .iter()
        .filter(|c| {
            let (mask, pattern) = c.violation_mask();
            a.0 & mask == pattern
        })
        .count()
}

fn check_capacity(n: usize) -> Result<(), SatError> {
    if n > MAX_ENUMERATION_VARS {
        Err(SatError::Capacity { n, cap: MAX_ENUMERATION_VARS })
    } else {
        Ok(())
    }
}

/// Bit-sliced clause data for 64-assignment blocks.
///
/// Block `w` covers assignments `64w .. 64w + 63`; the low six variables vary
/// inside the word and the remaining ones are fixed by `w`.
struct BlockMasks {
    n: usize,
    /// Per clause: (high-bit mask, high-bit pattern, in-word violation word).
    clauses: Vec<(u64, u64, u64)>,
}

const LOW_VAR_WORDS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

impl BlockMasks {
    fn new(formula: &Formula) -> Self {
        let clauses = formula
            .clauses
            .iter()
            .map(|c| {
                let mut hm = 0u64;
                let mut hp = 0u64;
                let mut word = u64::MAX;
                for l in &c.0 {
                    if l.var < 6 {
                        // literal is false where the variable equals `negated`
                        word &= if l.negated {
                            LOW_VAR_WORDS[l.var]
                        } else {
                            !LOW_VAR_WORDS[l.var]
                        };
                    } else {
                        let b = l.var - 6;
                        hm |= 1 << b;
                        if l.negated {
                            hp |= 1 << b;
                        }
                    }
                }
                (hm, hp, word)
            })
            .collect();
        BlockMasks { n: formula.n, clauses }
    }

    fn num_blocks(&self) -> u64 {
        if self.n <= 6 {
            1
        } else {
            1u64 << (self.n - 6)
        }
    }

    fn valid_word(&self) -> u64 {
        if self.n >= 6 {
            u64::MAX
        } else {
            (1u64 << (1u64 << self.n)) - 1
        }
    }

    /// Word with bit `j` set when assignment `64w + j` satisfies everything.
    #[inline]
    fn solutions_in_block(&self, w: u64) -> u64 {
        let mut violated = 0u64;
        for &(hm, hp, word) in &self.clauses {
            if w & hm == hp {
                violated |= word;
            }
        }
        !violated & self.valid_word()
    }
}

/// Exact number of satisfying assignments, by bit-parallel enumeration.
pub fn count_solutions(formula: &Formula) -> Result<u64, SatError> {
    check_capacity(formula.n)?;
    let masks = BlockMasks::new(formula);
    let blocks = masks.num_blocks();
    let count = if blocks >= 1 << 12 {
        (0..blocks as usize)
            .into_par_iter()
            .with_min_len(1 << 10)
            .map(|w| u64::from(masks.solutions_in_block(w as u64).count_ones()))
            .sum()
    } else {
        (0..blocks)
            .map(|w| u64::from(masks.solutions_in_block(w).count_ones()))
            .sum()
    };
    Ok(count)
}

/// `min(count_solutions(formula), limit)`, stopping the scan early.
pub fn count_solutions_up_to(formula: &Formula, limit: u64) -> Result<u64, SatError> {
    check_capacity(formula.n)?;
    let masks = BlockMasks::new(formula);
    let mut count = 0u64;
    for w in 0..masks.num_blocks() {
        count += u64::from(masks.solutions_in_block(w).count_ones());
        if count >= limit {
            return Ok(limit);
        }
    }
    Ok(count)
}

/// Up to `limit` satisfying assignments in increasing order.
pub fn find_solutions(formula: &Formula, limit: usize) -> Result<Vec<Assignment>, SatError> {
    check_capacity(formula.n)?;
    let masks = BlockMasks::new(formula);
    let mut out = Vec::new();
    for w in 0..masks.num_blocks() {
        let mut word = masks.solutions_in_block(w);
        while word != 0 {
            if out.len() >= limit {
                return Ok(out);
            }
            let j = word.trailing_zeros() as u64;
            out.push(Assignment(w * 64 + j));
            word &= word - 1;
        }
    }
    out.truncate(limit);
    Ok(out)
}

/// Draw one clause: an unordered triple of distinct variables, each
/// negated with probability 1/2. Literals come out sorted by variable.
fn random_clause(n: usize, rng: &mut Rng) -> Clause {
    let mut vars = sample(rng, n, 3).into_vec();
    vars.sort_unstable();
    let lit = |v: usize, rng: &mut Rng| Literal { var: v, negated: rng.random_bool(0.5) };
    Clause([lit(vars[0], rng), lit(vars[1], rng), lit(vars[2], rng)])
}

fn random_formula_with(n: usize, m: usize, rng: &mut Rng) -> Result<Formula, SatError> {
    if n < 3 {
        return Err(SatError::TooFewVariables(n));
    }
    let max = max_distinct_clauses(n);
    if m as u64 > max {
        return Err(SatError::TooManyClauses { n, m, max });
    }
    let mut seen = HashSet::with_capacity(m);
    let mut clauses = Vec::with_capacity(m);
    while clauses.len() < m {
        let c = random_clause(n, rng);
        // duplicates are redrawn, not the whole formula
        if seen.insert(c.key()) {
            clauses.push(c);
        }
    }
    Ok(Formula { n, clauses })
}

/// Random 3-SAT formula with `m` distinct clauses, reproducible from `seed`.
pub fn generate_random_3sat(n: usize, m: usize, seed: u64) -> Result<Formula, SatError> {
    let mut rng = rng_from_seed(seed);
    random_formula_with(n, m, &mut rng)
}

/// A formula together with what is known about its solutions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceRecord {
    pub formula: Formula,
    pub solution_count: u64,
    /// Present exactly when `solution_count == 1`.
    pub solution: Option<Assignment>,
    pub seed: u64,
    /// Formulas drawn until this one was accepted, including it.
    pub trials: u64,
}

/// Rejection-sample random formulas until one has exactly one solution.
///
/// All trials draw from a single stream seeded with `seed`.
pub fn generate_unique_solution_instance(
    n: usize,
    m: usize,
    seed: u64,
    max_trials: u64,
) -> Result<InstanceRecord, SatError> {
    check_capacity(n)?;
    let mut rng = rng_from_seed(seed);
    for trial in 1..=max_trials {
        let formula = random_formula_with(n, m, &mut rng)?;
        let sols = find_solutions(&formula, 2)?;
        if sols.len() == 1 {
            return Ok(InstanceRecord {
                formula,
                solution_count: 1,
                solution: Some(sols[0]),
                seed,
                trials: trial,
            });
        }
    }
    Err(SatError::GaveUp { trials: max_trials })
}

/// Rejection-sample random formulas until one is satisfiable (`r >= 1`).
/// The exact solution count is recorded.
pub fn generate_satisfiable_instance(
    n: usize,
    m: usize,
    seed: u64,
    max_trials: u64,
) -> Result<InstanceRecord, SatError> {
    check_capacity(n)?;
    let mut rng = rng_from_seed(seed);
    for trial in 1..=max_trials {
        let formula = random_formula_with(n, m, &mut rng)?;
        if count_solutions_up_to(&formula, 1)? == 1 {
            let r = count_solutions(&formula)?;
            let solution = if r == 1 { find_solutions(&formula, 1)?.first().copied() } else { None };
            return Ok(InstanceRecord { formula, solution_count: r, solution, seed, trials: trial });
        }
    }
    Err(SatError::GaveUp { trials: max_trials })
}
