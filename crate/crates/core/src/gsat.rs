//! GSAT local search with the random-walk extension.
//!
//! The state keeps, per clause, the number of true literals and, per
//! variable, the change in satisfied clauses its flip would cause, so each
//! flip costs time proportional to the occurrences of the flipped variable
//! (plus a scan over `n` scores for the greedy choice).

use std::fmt;

use rand::seq::IndexedRandom;
use rand::Rng as _;
use rayon::prelude::*;

use crate::rng::{derive_seed, rng_from_seed, Rng};
use crate::sat::{violated_clauses, Assignment, Formula};

#[derive(Debug, Clone, PartialEq)]
pub struct GsatParams {
    pub max_flips: u64,
    pub max_restarts: u64,
    pub p_walk: f64,
    pub seed: u64,
}

impl GsatParams {
    /// `10 n^2` flips per try, 100 restarts, walk probability 1/2.
    pub fn for_vars(n: usize, seed: u64) -> Self {
        GsatParams { max_flips: 10 * (n as u64).pow(2), max_restarts: 100, p_walk: 0.5, seed }
    }

    fn check(&self) {
        assert!(self.max_flips >= 1, "max_flips must be at least 1");
        assert!((0.0..=1.0).contains(&self.p_walk), "p_walk must lie in [0, 1]");
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GsatResult {
    pub solved: bool,
    /// Total flips over all tries.
    pub flips: u64,
    pub restarts: u64,
    pub assignment: Assignment,
}

/// Incremental search state for one formula.
#[derive(Debug, Clone)]
pub struct GsatState<'a> {
    formula: &'a Formula,
    assignment: Assignment,
    true_count: Vec<u8>,
    /// Satisfied-clause gain from flipping each variable.
    score: Vec<i32>,
    unsat: Vec<usize>,
    /// Position of each clause in `unsat`, or `usize::MAX`.
    unsat_pos: Vec<usize>,
    occurrences: Vec<Vec<usize>>,
    flips: u64,
}

impl<'a> GsatState<'a> {
    pub fn new(formula: &'a Formula, assignment: Assignment) -> Self {
        let n = formula.num_vars();
        let mut occurrences = vec![Vec::new(); n];
        for (ci, c) in formula.clauses().iter().enumerate() {
            for l in c.literals() {
                occurrences[l.var].push(ci);
            }
        }
        let mut state = GsatState {
            formula,
            assignment,
            true_count: vec![0; formula.num_clauses()],
            score: vec![0; n],
            unsat: Vec::new(),
            unsat_pos: vec![usize::MAX; formula.num_clauses()],
            occurrences,
            flips: 0,
        };
        state.reset(assignment);
        state
    }

    /// Recompute all bookkeeping for a new assignment.
    pub fn reset(&mut self, assignment: Assignment) {
        self.assignment = assignment;
        self.score.iter_mut().for_each(|s| *s = 0);
        self.unsat.clear();
        for (ci, c) in self.formula.clauses().iter().enumerate() {
            let t = c.literals().iter().filter(|l| l.eval(assignment)).count() as u8;
            self.true_count[ci] = t;
            self.unsat_pos[ci] = usize::MAX;
            match t {
                0 => {
                    self.unsat_pos[ci] = self.unsat.len();
                    self.unsat.push(ci);
                    for l in c.literals() {
                        self.score[l.var] += 1;
                    }
                }
                1 => {
                    let l = c.literals().iter().find(|l| l.eval(assignment)).expect("one true literal");
                    self.score[l.var] -= 1;
                }
                _ => {}
            }
        }
    }

    pub fn assignment(&self) -> Assignment {
        self.assignment
    }

    pub fn num_unsatisfied(&self) -> usize {
        self.unsat.len()
    }

    pub fn satisfied_clauses(&self) -> usize {
        self.formula.num_clauses() - self.unsat.len()
    }

    /// Clauses satisfied after flipping each variable.
    pub fn satisfied_after_flip(&self) -> Vec<usize> {
        self.score.iter().map(|&g| (self.satisfied_clauses() as i64 + i64::from(g)) as usize).collect()
    }

    pub fn flips(&self) -> u64 {
        self.flips
    }

    fn mark_unsat(&mut self, ci: usize) {
        self.unsat_pos[ci] = self.unsat.len();
        self.unsat.push(ci);
    }

    fn mark_sat(&mut self, ci: usize) {
        let pos = self.unsat_pos[ci];
        let last = *self.unsat.last().expect("clause is listed");
        self.unsat.swap_remove(pos);
        if last != ci {
            self.unsat_pos[last] = pos;
        }
        self.unsat_pos[ci] = usize::MAX;
    }

    pub fn flip(&mut self, var: usize) {
        let before = self.assignment;
        let after = before.flip(var);
        self.assignment = after;
        self.flips += 1;
        for k in 0..self.occurrences[var].len() {
            let ci = self.occurrences[var][k];
            let lits = *self.formula.clauses()[ci].literals();
            let lit = lits.iter().find(|l| l.var == var).expect("variable occurs");
            let old = self.true_count[ci];
            if lit.eval(after) {
                // literal became true
                self.true_count[ci] = old + 1;
                match old {
                    0 => {
                        self.mark_sat(ci);
                        for l in &lits {
                            self.score[l.var] -= 1;
                        }
                        self.score[var] -= 1;
                    }
                    1 => {
                        let other = lits.iter().find(|l| l.var != var && l.eval(before)).expect("one true literal");
                        self.score[other.var] += 1;
                    }
                    _ => {}
                }
            } else {
                self.true_count[ci] = old - 1;
                match old {
                    1 => {
                        self.mark_unsat(ci);
                        for l in &lits {
                            self.score[l.var] += 1;
                        }
                        self.score[var] += 1;
                    }
                    2 => {
                        let other = lits.iter().find(|l| l.var != var && l.eval(after)).expect("one true literal");
                        self.score[other.var] -= 1;
                    }
                    _ => {}
                }
            }
        }
    }

    /// Flip a variable maximizing the satisfied-clause count, ties broken
    /// uniformly. Returns the variable.
    pub fn greedy_flip(&mut self, rng: &mut Rng) -> usize {
        let best = *self.score.iter().max().expect("n >= 1");
        let mut chosen = 0;
        let mut ties = 0u32;
        for (v, &g) in self.score.iter().enumerate() {
            if g == best {
                ties += 1;
                if rng.random_range(0..ties) == 0 {
                    chosen = v;
                }
            }
        }
        self.flip(chosen);
        chosen
    }

    /// Flip a random variable of a random unsatisfied clause.
    pub fn walk_flip(&mut self, rng: &mut Rng) -> Option<usize> {
        let &ci = self.unsat.choose(rng)?;
        let var = self.formula.clauses()[ci].literals()[rng.random_range(0..3)].var;
        self.flip(var);
        Some(var)
    }
}

fn random_assignment(rng: &mut Rng, n: usize) -> Assignment {
    let mask = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    Assignment(rng.random::<u64>() & mask)
}

pub fn gsat_solve(formula: &Formula, params: &GsatParams) -> GsatResult {
    params.check();
    let mut rng = rng_from_seed(params.seed);
    let mut state = GsatState::new(formula, random_assignment(&mut rng, formula.num_vars()));
    let mut restarts = 0;
    loop {
        let mut tried = 0;
        while state.num_unsatisfied() > 0 && tried < params.max_flips {
            if params.p_walk > 0.0 && rng.random_bool(params.p_walk) {
                state.walk_flip(&mut rng);
            } else {
                state.greedy_flip(&mut rng);
            }
            tried += 1;
        }
        if state.num_unsatisfied() == 0 || restarts == params.max_restarts {
            break;
        }
        restarts += 1;
        state.reset(random_assignment(&mut rng, formula.num_vars()));
    }
    let solved = state.num_unsatisfied() == 0;
    debug_assert!(!solved || violated_clauses(formula, state.assignment()) == 0);
    GsatResult { solved, flips: state.flips(), restarts, assignment: state.assignment() }
}

/// Whether a statistics row is for unique-solution or merely satisfiable
/// instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InstanceClass {
    Unique,
    Satisfiable,
}

impl fmt::Display for InstanceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceClass::Unique => "r=1",
            InstanceClass::Satisfiable => "r>=1",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsatStats {
    pub instances: usize,
    pub mean_flips: f64,
    /// Population standard deviation.
    pub std_flips: f64,
    /// Instances that exhausted the budget; counted at their flip total.
    pub unsolved: usize,
}

/// Mean and spread of flips over `formulas`. Instance `i` runs with seed
/// `derive_seed(params.seed, "gsat", i)`.
pub fn gsat_statistics(formulas: &[Formula], params: &GsatParams) -> GsatStats {
    let results: Vec<GsatResult> = formulas
        .par_iter()
        .enumerate()
        .map(|(i, f)| gsat_solve(f, &GsatParams { seed: derive_seed(params.seed, "gsat", i as u64), ..params.clone() }))
        .collect();
    let count = results.len();
    let mean = results.iter().map(|r| r.flips as f64).sum::<f64>() / count.max(1) as f64;
    let var = results.iter().map(|r| (r.flips as f64 - mean).powi(2)).sum::<f64>() / count.max(1) as f64;
    GsatStats {
        instances: count,
        mean_flips: mean,
        std_flips: var.sqrt(),
        unsolved: results.iter().filter(|r| !r.solved).count(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GsatRow {
    pub m_over_n: f64,
    pub n: usize,
    pub class: InstanceClass,
    pub stats: GsatStats,
}

pub fn gsat_rows_to_csv(rows: &[GsatRow]) -> String {
    let mut out = String::from("m_over_n,n,instance_class,mean_flips,std_flips,unsolved_count\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{:.6},{:.6},{}\n",
            r.m_over_n, r.n, r.class, r.stats.mean_flips, r.stats.std_flips, r.stats.unsolved
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{generate_random_3sat, generate_satisfiable_instance, Clause, Literal};

    fn params(seed: u64) -> GsatParams {
        GsatParams { max_flips: 1000, max_restarts: 20, p_walk: 0.5, seed }
    }

    #[test]
    fn bookkeeping_matches_recount() {
        let f = generate_random_3sat(12, 50, 3).unwrap();
        let mut rng = rng_from_seed(1);
        let mut state = GsatState::new(&f, Assignment(0));
        for step in 0..500 {
            if step % 3 == 0 {
                state.walk_flip(&mut rng);
            } else {
                state.greedy_flip(&mut rng);
            }
            let a = state.assignment();
            assert_eq!(state.num_unsatisfied(), violated_clauses(&f, a));
            let expect: Vec<usize> =
                (0..12).map(|v| f.num_clauses() - violated_clauses(&f, a.flip(v))).collect();
            assert_eq!(state.satisfied_after_flip(), expect);
            if state.num_unsatisfied() == 0 {
                break;
            }
        }
    }

    #[test]
    fn greedy_step_is_optimal() {
        for seed in 0..5 {
            let f = generate_random_3sat(10, 42, seed).unwrap();
            let mut rng = rng_from_seed(seed);
            let mut state = GsatState::new(&f, Assignment(seed * 77 % 1024));
            for _ in 0..200 {
                if state.num_unsatisfied() == 0 {
                    break;
                }
                let a = state.assignment();
                let after: Vec<usize> =
                    (0..10).map(|v| f.num_clauses() - violated_clauses(&f, a.flip(v))).collect();
                let v = state.greedy_flip(&mut rng);
                assert_eq!(after[v], *after.iter().max().unwrap());
                assert_eq!(state.satisfied_clauses(), after[v]);
            }
        }
    }

    #[test]
    fn immediate_success_uses_no_flips() {
        let f = Formula::new(4, vec![]).unwrap();
        let r = gsat_solve(&f, &params(0));
        assert!(r.solved);
        assert_eq!((r.flips, r.restarts), (0, 0));
    }

    #[test]
    fn single_greedy_flip() {
        // every assignment except those with b1 = b2 = b3 = 0 already satisfies
        // clause 1; clause 2 forces b4.
        let f = Formula::new(
            4,
            vec![
                Clause::new([Literal::pos(0), Literal::pos(1), Literal::pos(2)]),
                Clause::new([Literal::pos(0), Literal::pos(1), Literal::pos(3)]),
            ],
        )
        .unwrap();
        let mut state = GsatState::new(&f, Assignment(0b0100));
        assert_eq!(state.num_unsatisfied(), 1);
        let mut rng = rng_from_seed(9);
        state.greedy_flip(&mut rng);
        assert_eq!(state.num_unsatisfied(), 0);
        assert_eq!(state.flips(), 1);
    }

    #[test]
    fn solutions_are_valid_and_deterministic() {
        for seed in 0..20 {
            let rec = generate_satisfiable_instance(16, 64, seed, 10_000).unwrap();
            let p = params(seed);
            let r = gsat_solve(&rec.formula, &p);
            assert!(r.solved);
            assert_eq!(violated_clauses(&rec.formula, r.assignment), 0);
            assert!(r.flips <= p.max_flips * (p.max_restarts + 1));
            assert_eq!(gsat_solve(&rec.formula, &p), r);
        }
    }

    #[test]
    fn budget_exhaustion_on_unsatisfiable() {
        // all eight sign patterns over the first three variables
        let clauses = (0..8u8)
            .map(|mask| {
                Clause::new([0, 1, 2].map(|v| if mask >> v & 1 == 1 { Literal::neg(v) } else { Literal::pos(v) }))
            })
            .collect();
        let f = Formula::new(5, clauses).unwrap();
        let p = GsatParams { max_flips: 7, max_restarts: 3, p_walk: 0.3, seed: 4 };
        let r = gsat_solve(&f, &p);
        assert!(!r.solved);
        assert_eq!((r.flips, r.restarts), (28, 3));
        let stats = gsat_statistics(&[f], &p);
        assert_eq!((stats.unsolved, stats.mean_flips, stats.std_flips), (1, 28.0, 0.0));
    }

    #[test]
    fn statistics_and_csv() {
        let formulas: Vec<Formula> =
            (0..6).map(|s| generate_satisfiable_instance(12, 40, s, 10_000).unwrap().formula).collect();
        let stats = gsat_statistics(&formulas, &params(2));
        assert_eq!(stats.instances, 6);
        assert_eq!(stats.unsolved, 0);
        assert_eq!(gsat_statistics(&formulas, &params(2)), stats);
        let csv = gsat_rows_to_csv(&[GsatRow { m_over_n: 40.0 / 12.0, n: 12, class: InstanceClass::Satisfiable, stats }]);
        assert!(csv.starts_with("m_over_n,n,instance_class,mean_flips,std_flips,unsolved_count\n"));
        assert!(csv.lines().nth(1).unwrap().contains(",12,r>=1,"));
    }
}
