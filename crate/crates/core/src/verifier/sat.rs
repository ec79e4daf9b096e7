//! A small CDCL SAT solver: two watched literals, first-UIP learning with
//! local minimization, VSIDS with a binary heap, phase saving, geometric
//! restarts and activity-based learnt-clause deletion.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::cnf::{Cnf, Lit};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SatResult {
    /// One value per variable.
    Sat(Vec<bool>),
    Unsat,
    BudgetExceeded,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveLimits {
    pub max_conflicts: Option<u64>,
    pub deadline: Option<Instant>,
}

impl SolveLimits {
    pub const NONE: SolveLimits = SolveLimits {
        max_conflicts: None,
        deadline: None,
    };

    pub fn conflicts(n: u64) -> Self {
        SolveLimits {
            max_conflicts: Some(n),
            deadline: None,
        }
    }
}

pub fn sat_solve(cnf: &Cnf, limits: SolveLimits, seed: u64) -> SatResult {
    let mut s = Solver::new(seed);
    for _ in 0..cnf.num_vars {
        s.new_var();
    }
    for c in &cnf.clauses {
        if !s.add_clause(c) {
            return SatResult::Unsat;
        }
    }
    s.solve(limits)
}

const UNDEF: i8 = -1;

#[derive(Clone, Copy)]
struct Watcher {
    cref: u32,
    blocker: Lit,
}

struct Clause {
    lits: Vec<Lit>,
    learnt: bool,
    deleted: bool,
    activity: f64,
}

pub struct Solver {
    clauses: Vec<Clause>,
    learnts: Vec<u32>,
    watches: Vec<Vec<Watcher>>,
    assigns: Vec<i8>,
    level: Vec<u32>,
    reason: Vec<Option<u32>>,
    polarity: Vec<bool>,
    activity: Vec<f64>,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    var_inc: f64,
    cla_inc: f64,
    max_learnts: f64,
    ok: bool,
    conflicts: u64,
    rng: ChaCha8Rng,
}

impl Solver {
    pub fn new(seed: u64) -> Self {
        Solver {
            clauses: Vec::new(),
            learnts: Vec::new(),
            watches: Vec::new(),
            assigns: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            polarity: Vec::new(),
            activity: Vec::new(),
            heap: VarHeap::default(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            var_inc: 1.0,
            cla_inc: 1.0,
            max_learnts: 0.0,
            ok: true,
            conflicts: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn num_vars(&self) -> u32 {
        self.assigns.len() as u32
    }

    pub fn conflicts(&self) -> u64 {
        self.conflicts
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.assigns.len() as u32;
        self.assigns.push(UNDEF);
        self.level.push(0);
        self.reason.push(None);
        self.polarity.push(true);
        // Tiny random activities break ties deterministically per seed.
        self.activity.push(self.rng.gen::<f64>() * 1e-5);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    fn value(&self, l: Lit) -> i8 {
        let a = self.assigns[l.var() as usize];
        if a == UNDEF {
            UNDEF
        } else {
            a ^ i8::from(l.is_neg())
        }
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a clause at decision level 0. Returns false once the formula
    /// is known to be unsatisfiable.
    pub fn add_clause(&mut self, lits: &[Lit]) -> bool {
        if !self.ok {
            return false;
        }
        debug_assert_eq!(self.decision_level(), 0);
        let mut c: Vec<Lit> = lits.to_vec();
        c.sort_unstable();
        c.dedup();
        if c.windows(2).any(|w| w[0] == !w[1]) {
            return true;
        }
        if c.iter().any(|&l| self.value(l) == 1) {
            return true;
        }
        c.retain(|&l| self.value(l) != 0);
        match c.len() {
            0 => {
                self.ok = false;
                false
            }
            1 => {
                self.enqueue(c[0], None);
                if self.propagate().is_some() {
                    self.ok = false;
                }
                self.ok
            }
            _ => {
                self.attach(c, false);
                true
            }
        }
    }

    fn attach(&mut self, lits: Vec<Lit>, learnt: bool) -> u32 {
        let cref = self.clauses.len() as u32;
        self.watches[(!lits[0]).index()].push(Watcher {
            cref,
            blocker: lits[1],
        });
        self.watches[(!lits[1]).index()].push(Watcher {
            cref,
            blocker: lits[0],
        });
        self.clauses.push(Clause {
            lits,
            learnt,
            deleted: false,
            activity: 0.0,
        });
        if learnt {
            self.learnts.push(cref);
        }
        cref
    }

    fn enqueue(&mut self, l: Lit, reason: Option<u32>) {
        let v = l.var() as usize;
        self.assigns[v] = i8::from(!l.is_neg());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Option<u32> {
        let mut conflict = None;
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            self.qhead += 1;
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[p.index()]);
            let (mut i, mut j) = (0, 0);
            while i < ws.len() {
                let w = ws[i];
                i += 1;
                if self.value(w.blocker) == 1 {
                    ws[j] = w;
                    j += 1;
                    continue;
                }
                let cref = w.cref as usize;
                if self.clauses[cref].deleted {
                    continue;
                }
                {
                    let lits = &mut self.clauses[cref].lits;
                    if lits[0] == false_lit {
                        lits.swap(0, 1);
                    }
                }
                let first = self.clauses[cref].lits[0];
                let nw = Watcher {
                    cref: w.cref,
                    blocker: first,
                };
                if first != w.blocker && self.value(first) == 1 {
                    ws[j] = nw;
                    j += 1;
                    continue;
                }
                let len = self.clauses[cref].lits.len();
                let mut moved = false;
                for k in 2..len {
                    let lk = self.clauses[cref].lits[k];
                    if self.value(lk) != 0 {
                        self.clauses[cref].lits.swap(1, k);
                        self.watches[(!lk).index()].push(nw);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = nw;
                j += 1;
                if self.value(first) == 0 {
                    conflict = Some(w.cref);
                    self.qhead = self.trail.len();
                    while i < ws.len() {
                        ws[j] = ws[i];
                        i += 1;
                        j += 1;
                    }
                } else {
                    self.enqueue(first, Some(w.cref));
                }
            }
            ws.truncate(j);
            self.watches[p.index()] = ws;
            if conflict.is_some() {
                break;
            }
        }
        conflict
    }

    fn bump_var(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in &mut self.activity {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.increased(v, &self.activity);
    }

    fn bump_clause(&mut self, cref: u32) {
        let c = &mut self.clauses[cref as usize];
        c.activity += self.cla_inc;
        if c.activity > 1e20 {
            for &l in &self.learnts {
                self.clauses[l as usize].activity *= 1e-20;
            }
            self.cla_inc *= 1e-20;
        }
    }

    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit::pos(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut index = self.trail.len();
        let dl = self.decision_level();
        loop {
            if self.clauses[confl as usize].learnt {
                self.bump_clause(confl);
            }
            let start = usize::from(p.is_some());
            let len = self.clauses[confl as usize].lits.len();
            for k in start..len {
                let q = self.clauses[confl as usize].lits[k];
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump_var(q.var());
                    if self.level[v] >= dl {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                index -= 1;
                if self.seen[self.trail[index].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[index];
            p = Some(pl);
            self.seen[pl.var() as usize] = false;
            path -= 1;
            if path == 0 {
                break;
            }
            confl = self.reason[pl.var() as usize].expect("implied literal has a reason");
        }
        learnt[0] = !p.expect("conflict analysis visits at least one literal");

        // Drop literals implied by other literals of the clause.
        let keep: Vec<bool> = learnt
            .iter()
            .enumerate()
            .map(|(k, &l)| {
                if k == 0 {
                    return true;
                }
                match self.reason[l.var() as usize] {
                    None => true,
                    Some(r) => self.clauses[r as usize].lits[1..].iter().any(|q| {
                        let v = q.var() as usize;
                        !self.seen[v] && self.level[v] > 0
                    }),
                }
            })
            .collect();
        for &l in &learnt {
            self.seen[l.var() as usize] = false;
        }
        let mut learnt: Vec<Lit> = learnt
            .into_iter()
            .zip(keep)
            .filter_map(|(l, k)| k.then_some(l))
            .collect();

        let bt = if learnt.len() == 1 {
            0
        } else {
            let (mut best, mut lvl) = (1, self.level[learnt[1].var() as usize]);
            for (k, l) in learnt.iter().enumerate().skip(2) {
                let lv = self.level[l.var() as usize];
                if lv > lvl {
                    best = k;
                    lvl = lv;
                }
            }
            learnt.swap(1, best);
            lvl
        };
        (learnt, bt)
    }

    fn cancel_until(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for k in (lim..self.trail.len()).rev() {
            let l = self.trail[k];
            let v = l.var() as usize;
            self.assigns[v] = UNDEF;
            self.reason[v] = None;
            self.polarity[v] = l.is_neg();
            if !self.heap.contains(l.var()) {
                self.heap.insert(l.var(), &self.activity);
            }
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = lim;
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.assigns[v as usize] == UNDEF {
                return Some(Lit::new(v, self.polarity[v as usize]));
            }
        }
        None
    }

    fn locked(&self, cref: u32) -> bool {
        let l = self.clauses[cref as usize].lits[0];
        self.value(l) == 1 && self.reason[l.var() as usize] == Some(cref)
    }

    fn reduce_db(&mut self) {
        let mut ls = std::mem::take(&mut self.learnts);
        ls.sort_by(|&a, &b| {
            self.clauses[a as usize]
                .activity
                .total_cmp(&self.clauses[b as usize].activity)
        });
        let half = ls.len() / 2;
        let mut kept = Vec::with_capacity(ls.len());
        for (k, cref) in ls.into_iter().enumerate() {
            let c = &self.clauses[cref as usize];
            if k < half && c.lits.len() > 2 && !self.locked(cref) {
                let c = &mut self.clauses[cref as usize];
                c.deleted = true;
                c.lits = Vec::new();
            } else {
                kept.push(cref);
            }
        }
        self.learnts = kept;
    }

    fn search(&mut self, budget: u64, limits: &SolveLimits) -> Option<bool> {
        let mut local = 0u64;
        loop {
            if let Some(confl) = self.propagate() {
                self.conflicts += 1;
                local += 1;
                if self.decision_level() == 0 {
                    self.ok = false;
                    return Some(false);
                }
                let (learnt, bt) = self.analyze(confl);
                self.cancel_until(bt);
                if learnt.len() == 1 {
                    self.enqueue(learnt[0], None);
                } else {
                    let first = learnt[0];
                    let cref = self.attach(learnt, true);
                    self.bump_clause(cref);
                    self.enqueue(first, Some(cref));
                }
                self.var_inc /= 0.95;
                self.cla_inc /= 0.999;
                if limits.max_conflicts.is_some_and(|m| self.conflicts >= m) {
                    return None;
                }
                if self.conflicts.is_multiple_of(256) && limits.deadline.is_some_and(|d| Instant::now() >= d) {
                    return None;
                }
            } else {
                if local >= budget {
                    self.cancel_until(0);
                    return None;
                }
                if self.learnts.len() as f64 - self.trail.len() as f64 >= self.max_learnts {
                    self.reduce_db();
                }
                match self.pick_branch() {
                    None => return Some(true),
                    Some(l) => {
                        self.trail_lim.push(self.trail.len());
                        self.enqueue(l, None);
                    }
                }
            }
        }
    }

    pub fn solve(&mut self, limits: SolveLimits) -> SatResult {
        if !self.ok {
            return SatResult::Unsat;
        }
        if self.propagate().is_some() {
            self.ok = false;
            return SatResult::Unsat;
        }
        self.max_learnts = (self.clauses.len() as f64 / 3.0).max(1000.0);
        let mut restart = 100.0f64;
        loop {
            match self.search(restart as u64, &limits) {
                Some(true) => {
                    let model = self.assigns.iter().map(|&a| a == 1).collect();
                    self.cancel_until(0);
                    return SatResult::Sat(model);
                }
                Some(false) => return SatResult::Unsat,
                None => {
                    let over_conflicts = limits.max_conflicts.is_some_and(|m| self.conflicts >= m);
                    let over_time = limits.deadline.is_some_and(|d| Instant::now() >= d);
                    if over_conflicts || over_time {
                        self.cancel_until(0);
                        return SatResult::BudgetExceeded;
                    }
                    self.cancel_until(0);
                    restart *= 1.5;
                    self.max_learnts *= 1.1;
                }
            }
        }
    }
}

/// Max-heap of variables ordered by activity.
#[derive(Default)]
struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<usize>,
}

const ABSENT: usize = usize::MAX;

impl VarHeap {
    fn contains(&self, v: u32) -> bool {
        self.pos.get(v as usize).is_some_and(|&p| p != ABSENT)
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        if self.pos.len() <= v as usize {
            self.pos.resize(v as usize + 1, ABSENT);
        }
        if self.contains(v) {
            return;
        }
        self.pos[v as usize] = self.heap.len();
        self.heap.push(v);
        self.up(self.heap.len() - 1, act);
    }

    fn increased(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            self.up(self.pos[v as usize], act);
        }
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        let top = *self.heap.first()?;
        let last = self.heap.pop().expect("non-empty");
        self.pos[top as usize] = ABSENT;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let parent = (i - 1) / 2;
            let pv = self.heap[parent];
            if act[pv as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = pv;
            self.pos[pv as usize] = i;
            i = parent;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        let n = self.heap.len();
        loop {
            let l = 2 * i + 1;
            if l >= n {
                break;
            }
            let r = l + 1;
            let c = if r < n && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i;
    }
}
