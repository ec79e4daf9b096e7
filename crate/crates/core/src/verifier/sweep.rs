//! SAT sweeping over a single-output miter.
//!
//! Nets are visited in topological order and each one is either merged into
//! an earlier representative literal (structurally, after substituting the
//! representatives of its inputs, or by a SAT proof) or becomes a
//! representative itself. Candidates come from random-simulation
//! signatures taken modulo complement; every counterexample is simulated
//! and refines the signatures.

use std::collections::HashMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnf::{encode_gate, Lit};
use super::sat::{SatResult, SolveLimits, Solver};
use crate::netlist::{GateKind, Netlist, WordSim};

pub(crate) enum SweepOutcome {
    /// The output is constant 0.
    Proven,
    /// An input vector (PI order) driving the output to 1.
    Counterexample(Vec<bool>),
    Unknown,
}

pub(crate) struct SweepLimits {
    pub deadline: Instant,
    pub query_conflicts: u64,
    pub final_conflicts: Option<u64>,
    pub sim_words: usize,
    pub seed: u64,
}

struct Sweeper<'a> {
    n: &'a Netlist,
    /// Variable standing for constant 0.
    konst: u32,
    repr: Vec<Lit>,
    sigs: Vec<Vec<u64>>,
    /// Counterexamples not yet folded into a full signature word.
    pending: Vec<Vec<bool>>,
    strash: HashMap<(GateKind, [Lit; 3]), Lit>,
    seed: u64,
    queries: u64,
}

fn lit0(konst: u32) -> Lit {
    Lit::pos(konst)
}

pub(crate) fn sweep(n: &Netlist, limits: &SweepLimits) -> SweepOutcome {
    assert_eq!(n.num_outputs(), 1, "sweeping expects a miter");
    let nn = n.num_nets();
    let konst = nn as u32;
    let mut rng = ChaCha8Rng::seed_from_u64(limits.seed);
    let mut sigs: Vec<Vec<u64>> = vec![Vec::with_capacity(limits.sim_words + 1); nn];
    let mut sim = WordSim::new(n);
    for _ in 0..limits.sim_words {
        let words: Vec<u64> = (0..n.num_inputs()).map(|_| rng.gen()).collect();
        let vals = sim.run(&words);
        for (s, &v) in sigs.iter_mut().zip(vals) {
            s.push(v);
        }
    }
    let mut sw = Sweeper {
        n,
        konst,
        repr: (0..nn as u32).map(Lit::pos).collect(),
        sigs,
        pending: Vec::new(),
        strash: HashMap::new(),
        seed: limits.seed,
        queries: 0,
    };
    let po = n.outputs()[0].net;
    if let Some(v) = sw.any_one(po) {
        return SweepOutcome::Counterexample(v);
    }

    let mut classes: HashMap<Vec<u64>, Lit> = HashMap::new();
    sw.rebuild_classes(&mut classes, n.num_inputs());
    let mut timed_out = false;
    for gi in 0..n.gates().len() {
        let net = n.gate_net(gi);
        if let Some(l) = sw.structural(gi) {
            sw.repr[net] = l;
            continue;
        }
        if timed_out || Instant::now() >= limits.deadline {
            timed_out = true;
            continue;
        }
        // A few refinement rounds per net; then give up on merging it.
        for _ in 0..4 {
            let (key, phase) = sw.key(net);
            let Some(&cand) = classes.get(&key) else {
                classes.insert(key, Lit::new(net as u32, phase));
                break;
            };
            let target = cand.xor(phase);
            match sw.prove_equal(net, target, SolveLimits {
                max_conflicts: Some(limits.query_conflicts),
                deadline: Some(limits.deadline),
            }) {
                SatResult::Unsat => {
                    sw.repr[net] = target;
                    break;
                }
                SatResult::Sat(model) => {
                    let cex = sw.inputs_of(&model);
                    sw.add_counterexample(cex);
                    sw.rebuild_classes(&mut classes, net);
                }
                SatResult::BudgetExceeded => break,
            }
        }
        if sw.repr[net] == Lit::pos(net as u32) {
            sw.register(gi);
        }
    }

    let out = sw.repr[po];
    if out == lit0(konst) {
        return SweepOutcome::Proven;
    }
    if out == !lit0(konst) {
        return SweepOutcome::Counterexample(vec![false; n.num_inputs()]);
    }
    let limits = SolveLimits {
        max_conflicts: limits.final_conflicts,
        deadline: Some(limits.deadline),
    };
    match sw.solve_lit(out, limits) {
        SatResult::Unsat => SweepOutcome::Proven,
        SatResult::Sat(model) => SweepOutcome::Counterexample(sw.inputs_of(&model)),
        SatResult::BudgetExceeded => SweepOutcome::Unknown,
    }
}

impl Sweeper<'_> {
    fn any_one(&self, net: usize) -> Option<Vec<bool>> {
        for (w, &word) in self.sigs[net].iter().enumerate() {
            if word != 0 {
                let bit = word.trailing_zeros();
                return Some(self.replay(w, bit));
            }
        }
        None
    }

    /// Input vector that produced bit `bit` of signature word `w`.
    fn replay(&self, w: usize, bit: u32) -> Vec<bool> {
        (0..self.n.num_inputs())
            .map(|i| self.sigs[i][w] >> bit & 1 == 1)
            .collect()
    }

    fn key(&self, net: usize) -> (Vec<u64>, bool) {
        let s = &self.sigs[net];
        let phase = s.first().is_some_and(|w| w & 1 == 1);
        let key = if phase {
            s.iter().map(|w| !w).collect()
        } else {
            s.clone()
        };
        (key, phase)
    }

    /// Representatives seen so far keyed by normalized signature; nets
    /// `>= upto` are not yet visited.
    fn rebuild_classes(&self, classes: &mut HashMap<Vec<u64>, Lit>, upto: usize) {
        classes.clear();
        let width = self.sigs.first().map_or(0, Vec::len);
        classes.insert(vec![0; width], lit0(self.konst));
        for net in 0..upto {
            if self.repr[net] != Lit::pos(net as u32) {
                continue;
            }
            let (key, phase) = self.key(net);
            classes.entry(key).or_insert(Lit::new(net as u32, phase));
        }
    }

    fn add_counterexample(&mut self, cex: Vec<bool>) {
        self.pending.push(cex);
        // Fold pending vectors into the last signature word.
        let mut words = vec![0u64; self.n.num_inputs()];
        for (b, v) in self.pending.iter().enumerate() {
            for (w, &x) in words.iter_mut().zip(v) {
                *w |= u64::from(x) << b;
            }
        }
        // Unused bit positions simulate the all-zero vector, which is as
        // valid a pattern as any.
        let full = self.pending.len() == 64;
        let mut sim = WordSim::new(self.n);
        let vals = sim.run(&words);
        let fresh_word = self.pending.len() == 1;
        for (s, &v) in self.sigs.iter_mut().zip(vals) {
            if fresh_word {
                s.push(v);
            } else {
                *s.last_mut().expect("pending word") = v;
            }
        }
        if full {
            self.pending.clear();
        }
    }

    fn resolved(&self, net: usize) -> Lit {
        self.repr[net]
    }

    /// Trivial simplification and hashing with representative inputs.
    fn structural(&self, gi: usize) -> Option<Lit> {
        use GateKind::*;
        let g = self.n.gate(gi);
        let zero = lit0(self.konst);
        let one = !zero;
        let ins: Vec<Lit> = g.inputs.iter().map(|&i| self.resolved(i)).collect();
        let is_const = |l: Lit| l.var() == self.konst;
        let val = |l: Lit| l.is_neg();
        match g.kind {
            Const0 => Some(zero),
            Const1 => Some(one),
            Buf => Some(ins[0]),
            Not => Some(!ins[0]),
            And | Nand | Or | Nor => {
                // Rewrite as an AND of possibly complemented inputs.
                let (a, b, out_neg) = match g.kind {
                    And => (ins[0], ins[1], false),
                    Nand => (ins[0], ins[1], true),
                    Or => (!ins[0], !ins[1], true),
                    _ => (!ins[0], !ins[1], false),
                };
                let r = if is_const(a) {
                    Some(if val(a) { b } else { zero })
                } else if is_const(b) {
                    Some(if val(b) { a } else { zero })
                } else if a == b {
                    Some(a)
                } else if a == !b {
                    Some(zero)
                } else {
                    None
                };
                if let Some(r) = r {
                    return Some(r.xor(out_neg));
                }
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                let key = (And, [lo, hi, zero]);
                self.strash.get(&key).map(|&l| l.xor(out_neg))
            }
            Xor | Xnor => {
                let neg = (g.kind == Xnor) ^ ins[0].is_neg() ^ ins[1].is_neg();
                let (a, b) = (ins[0].xor(ins[0].is_neg()), ins[1].xor(ins[1].is_neg()));
                if a == b {
                    return Some(zero.xor(neg));
                }
                if is_const(a) {
                    return Some(b.xor(neg));
                }
                if is_const(b) {
                    return Some(a.xor(neg));
                }
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                self.strash.get(&(Xor, [lo, hi, zero])).map(|&l| l.xor(neg))
            }
            Mux2 => {
                let (mut s, mut d0, mut d1) = (ins[0], ins[1], ins[2]);
                if s.is_neg() {
                    s = !s;
                    std::mem::swap(&mut d0, &mut d1);
                }
                if is_const(s) {
                    return Some(d0);
                }
                if d0 == d1 {
                    return Some(d0);
                }
                self.strash.get(&(Mux2, [s, d0, d1])).copied()
            }
        }
    }

    /// Records a gate that became a representative in the hash table.
    fn register(&mut self, gi: usize) {
        use GateKind::*;
        let g = self.n.gate(gi);
        let me = Lit::pos(self.n.gate_net(gi) as u32);
        let zero = lit0(self.konst);
        let ins: Vec<Lit> = g.inputs.iter().map(|&i| self.resolved(i)).collect();
        let entry = match g.kind {
            And | Nand | Or | Nor => {
                let (a, b, out_neg) = match g.kind {
                    And => (ins[0], ins[1], false),
                    Nand => (ins[0], ins[1], true),
                    Or => (!ins[0], !ins[1], true),
                    _ => (!ins[0], !ins[1], false),
                };
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                Some(((And, [lo, hi, zero]), me.xor(out_neg)))
            }
            Xor | Xnor => {
                let neg = (g.kind == Xnor) ^ ins[0].is_neg() ^ ins[1].is_neg();
                let (a, b) = (ins[0].xor(ins[0].is_neg()), ins[1].xor(ins[1].is_neg()));
                let (lo, hi) = if a < b { (a, b) } else { (b, a) };
                Some(((Xor, [lo, hi, zero]), me.xor(neg)))
            }
            Mux2 => {
                let (mut s, mut d0, mut d1) = (ins[0], ins[1], ins[2]);
                if s.is_neg() {
                    s = !s;
                    std::mem::swap(&mut d0, &mut d1);
                }
                Some(((Mux2, [s, d0, d1]), me))
            }
            _ => None,
        };
        if let Some((k, v)) = entry {
            self.strash.entry(k).or_insert(v);
        }
    }

    /// Builds the CNF of the reduced cones of `roots` into a fresh solver.
    /// Solver variable `i` is net `i`; `konst` is constant 0.
    fn cone_solver(&mut self, roots: &[Lit]) -> Solver {
        self.queries += 1;
        let mut s = Solver::new(self.seed ^ self.queries);
        for _ in 0..=self.konst {
            s.new_var();
        }
        s.add_clause(&[!lit0(self.konst)]);
        let mut visited = vec![false; self.konst as usize];
        let mut stack: Vec<u32> = roots
            .iter()
            .map(|l| l.var())
            .filter(|&v| v != self.konst)
            .collect();
        let ni = self.n.num_inputs();
        let mut ins = Vec::with_capacity(3);
        while let Some(v) = stack.pop() {
            let v = v as usize;
            if visited[v] {
                continue;
            }
            visited[v] = true;
            if v < ni {
                continue;
            }
            let g = self.n.gate(v - ni);
            ins.clear();
            ins.extend(g.inputs.iter().map(|&i| self.resolved(i)));
            for l in &ins {
                if l.var() != self.konst && !visited[l.var() as usize] {
                    stack.push(l.var());
                }
            }
            encode_gate(g.kind, Lit::pos(v as u32), &ins, &mut |c| {
                s.add_clause(c);
            });
        }
        s
    }

    fn prove_equal(&mut self, net: usize, target: Lit, limits: SolveLimits) -> SatResult {
        let a = Lit::pos(net as u32);
        let mut s = self.cone_solver(&[a, target]);
        // a != target
        s.add_clause(&[a, target]);
        s.add_clause(&[!a, !target]);
        s.solve(limits)
    }

    fn solve_lit(&mut self, l: Lit, limits: SolveLimits) -> SatResult {
        let mut s = self.cone_solver(&[l]);
        s.add_clause(&[l]);
        s.solve(limits)
    }

    fn inputs_of(&self, model: &[bool]) -> Vec<bool> {
        model[..self.n.num_inputs()].to_vec()
    }
}
