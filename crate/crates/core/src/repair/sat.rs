//! A small DPLL refutation engine over clauses in DIMACS-style literals.

/// Variables are numbered from 1; literal `v` is the variable, `-v` its negation.
pub type Lit = i32;

#[derive(Clone, Debug, Default)]
pub struct Cnf {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new_var(&mut self) -> Lit {
        self.num_vars += 1;
        self.num_vars as Lit
    }

    pub fn add(&mut self, clause: Vec<Lit>) {
        self.clauses.push(clause);
    }
}

struct Solver<'a> {
    clauses: &'a [Vec<Lit>],
    value: Vec<i8>,
    trail: Vec<usize>,
    occurs: Vec<Vec<usize>>,
}

impl<'a> Solver<'a> {
    fn lit_value(&self, l: Lit) -> i8 {
        let v = self.value[l.unsigned_abs() as usize];
        if l > 0 { v } else { -v }
    }

    fn assign(&mut self, l: Lit) {
        let var = l.unsigned_abs() as usize;
        self.value[var] = if l > 0 { 1 } else { -1 };
        self.trail.push(var);
    }

    fn undo(&mut self, mark: usize) {
        while self.trail.len() > mark {
            let v = self.trail.pop().unwrap();
            self.value[v] = 0;
        }
    }

    /// Unit propagation from the clauses touching `queue`; false on conflict.
    fn propagate(&mut self, mut queue: Vec<usize>) -> bool {
        while let Some(var) = queue.pop() {
            for k in 0..self.occurs[var].len() {
                let ci = self.occurs[var][k];
                let mut unassigned = None;
                let mut count = 0;
                let mut sat = false;
                for &l in &self.clauses[ci] {
                    match self.lit_value(l) {
                        1 => {
                            sat = true;
                            break;
                        }
                        0 => {
                            count += 1;
                            unassigned = Some(l);
                        }
                        _ => {}
                    }
                }
                if sat {
                    continue;
                }
                match (count, unassigned) {
                    (0, _) => return false,
                    (1, Some(l)) => {
                        self.assign(l);
                        queue.push(l.unsigned_abs() as usize);
                    }
                    _ => {}
                }
            }
        }
        true
    }

    fn pick(&self) -> Option<Lit> {
        for c in self.clauses {
            if c.iter().any(|&l| self.lit_value(l) == 1) {
                continue;
            }
            if let Some(&l) = c.iter().find(|&&l| self.lit_value(l) == 0) {
                return Some(l);
            }
        }
        None
    }

    fn dpll(&mut self) -> bool {
        let Some(l) = self.pick() else { return true };
        for choice in [l, -l] {
            let mark = self.trail.len();
            self.assign(choice);
            if self.propagate(vec![choice.unsigned_abs() as usize]) && self.dpll() {
                return true;
            }
            self.undo(mark);
        }
        false
    }
}

/// A satisfying assignment (indexed by variable) if one exists.
pub fn solve(cnf: &Cnf, assumptions: &[Lit]) -> Option<Vec<bool>> {
    let mut occurs = vec![Vec::new(); cnf.num_vars + 1];
    for (i, c) in cnf.clauses.iter().enumerate() {
        if c.is_empty() {
            return None;
        }
        for &l in c {
            occurs[l.unsigned_abs() as usize].push(i);
        }
    }
    let mut s = Solver { clauses: &cnf.clauses, value: vec![0; cnf.num_vars + 1], trail: Vec::new(), occurs };
    let mut queue = Vec::new();
    for &a in assumptions {
        match s.lit_value(a) {
            -1 => return None,
            1 => {}
            _ => {
                s.assign(a);
                queue.push(a.unsigned_abs() as usize);
            }
        }
    }
    // unit clauses are not reachable through occurrence lists of assigned vars
    for c in cnf.clauses.iter() {
        if c.len() == 1 {
            match s.lit_value(c[0]) {
                -1 => return None,
                0 => {
                    s.assign(c[0]);
                    queue.push(c[0].unsigned_abs() as usize);
                }
                _ => {}
            }
        }
    }
    if !s.propagate(queue) || !s.dpll() {
        return None;
    }
    Some(s.value.iter().map(|&v| v > 0).collect())
}

pub fn satisfiable(cnf: &Cnf, assumptions: &[Lit]) -> bool {
    solve(cnf, assumptions).is_some()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(cnf: &Cnf) -> bool {
        (0..1u32 << cnf.num_vars).any(|m| {
            cnf.clauses.iter().all(|c| {
                c.iter().any(|&l| {
                    let bit = m >> (l.unsigned_abs() - 1) & 1 == 1;
                    if l > 0 { bit } else { !bit }
                })
            })
        })
    }

    #[test]
    fn agrees_with_truth_tables() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..500 {
            let n = rng.random_range(1..=6);
            let mut cnf = Cnf { num_vars: n, clauses: Vec::new() };
            for _ in 0..rng.random_range(1..=12) {
                let len = rng.random_range(1..=3);
                let c = (0..len)
                    .map(|_| {
                        let v = rng.random_range(1..=n as i32);
                        if rng.random_bool(0.5) { v } else { -v }
                    })
                    .collect();
                cnf.add(c);
            }
            let got = solve(&cnf, &[]);
            assert_eq!(got.is_some(), brute(&cnf), "{:?}", cnf.clauses);
            if let Some(m) = got {
                assert!(cnf.clauses.iter().all(|c| c.iter().any(|&l| m[l.unsigned_abs() as usize] == (l > 0))));
            }
        }
    }

    #[test]
    fn assumptions_restrict() {
        let mut cnf = Cnf::default();
        let a = cnf.new_var();
        let b = cnf.new_var();
        cnf.add(vec![a, b]);
        assert!(satisfiable(&cnf, &[-a]));
        assert!(!satisfiable(&cnf, &[-a, -b]));
    }
}
