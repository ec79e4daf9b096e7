//! Literals, clause sets, Tseitin encoding and DIMACS text.

use std::fmt::Write as _;
use std::ops::Not;

use crate::error::{Error, Result};
use crate::netlist::{GateKind, NetId, Netlist};

/// Variable `v` is encoded as `2v` (positive) and `2v + 1` (negative).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | u32::from(negated))
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Applies an optional negation.
    pub fn xor(self, neg: bool) -> Lit {
        Lit(self.0 ^ u32::from(neg))
    }

    pub fn to_dimacs(self) -> i64 {
        let v = i64::from(self.var()) + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(x: i64) -> Option<Lit> {
        if x == 0 {
            return None;
        }
        let var = u32::try_from(x.unsigned_abs() - 1).ok()?;
        Some(Lit::new(var, x < 0))
    }
}

impl Not for Lit {
    type Output = Lit;

    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Cnf {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
}

impl Cnf {
    pub fn new_var(&mut self) -> u32 {
        self.num_vars += 1;
        self.num_vars - 1
    }

    pub fn add(&mut self, clause: &[Lit]) {
        self.clauses.push(clause.to_vec());
    }

    /// True if `model` (one value per variable) satisfies every clause.
    pub fn satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| model[l.var() as usize] != l.is_neg()))
    }
}

/// Emits the clauses of `z <-> kind(ins)`.
pub fn encode_gate(kind: GateKind, z: Lit, ins: &[Lit], emit: &mut impl FnMut(&[Lit])) {
    use GateKind::*;
    match kind {
        And | Nand => {
            let z = z.xor(kind == Nand);
            let (a, b) = (ins[0], ins[1]);
            emit(&[!z, a]);
            emit(&[!z, b]);
            emit(&[z, !a, !b]);
        }
        Or | Nor => {
            let z = z.xor(kind == Nor);
            let (a, b) = (ins[0], ins[1]);
            emit(&[z, !a]);
            emit(&[z, !b]);
            emit(&[!z, a, b]);
        }
        Xor | Xnor => {
            let z = z.xor(kind == Xnor);
            let (a, b) = (ins[0], ins[1]);
            emit(&[!z, a, b]);
            emit(&[!z, !a, !b]);
            emit(&[z, !a, b]);
            emit(&[z, a, !b]);
        }
        Not | Buf => {
            let z = z.xor(kind == Not);
            emit(&[!z, ins[0]]);
            emit(&[z, !ins[0]]);
        }
        Mux2 => {
            let (s, d0, d1) = (ins[0], ins[1], ins[2]);
            emit(&[s, !d0, z]);
            emit(&[s, d0, !z]);
            emit(&[!s, !d1, z]);
            emit(&[!s, d1, !z]);
            emit(&[!d0, !d1, z]);
            emit(&[d0, d1, !z]);
        }
        Const0 => emit(&[!z]),
        Const1 => emit(&[z]),
    }
}

/// Tseitin encoding of a single-output netlist plus the unit clause
/// asserting that output. Variable `i` stands for net `i`.
pub fn to_cnf(n: &Netlist) -> Result<Cnf> {
    if n.num_outputs() != 1 {
        return Err(Error::InvalidArgument(format!(
            "CNF export needs exactly one output, `{}` has {}",
            n.name(),
            n.num_outputs()
        )));
    }
    let mut cnf = Cnf {
        num_vars: n.num_nets() as u32,
        clauses: Vec::new(),
    };
    encode_netlist(n, &mut cnf);
    cnf.add(&[Lit::pos(n.outputs()[0].net as u32)]);
    Ok(cnf)
}

/// Gate clauses only, variable `i` = net `i`.
pub(crate) fn encode_netlist(n: &Netlist, cnf: &mut Cnf) {
    let mut ins = Vec::with_capacity(3);
    for (gi, g) in n.gates().iter().enumerate() {
        ins.clear();
        ins.extend(g.inputs.iter().map(|&i: &NetId| Lit::pos(i as u32)));
        let z = Lit::pos(n.gate_net(gi) as u32);
        encode_gate(g.kind, z, &ins, &mut |c| cnf.clauses.push(c.to_vec()));
    }
}

pub fn write_dimacs(cnf: &Cnf) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "p cnf {} {}", cnf.num_vars, cnf.clauses.len());
    for c in &cnf.clauses {
        for l in c {
            let _ = write!(s, "{} ", l.to_dimacs());
        }
        s.push_str("0\n");
    }
    s
}

pub fn parse_dimacs(text: &str) -> Result<Cnf> {
    let mut cnf = Cnf::default();
    let mut cur = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("p cnf") {
            let nv = rest.split_whitespace().next().and_then(|t| t.parse().ok());
            cnf.num_vars = nv.ok_or_else(|| Error::Syntax {
                line: idx + 1,
                msg: "malformed problem line".into(),
            })?;
            continue;
        }
        for tok in line.split_whitespace() {
            let x: i64 = tok.parse().map_err(|_| Error::Syntax {
                line: idx + 1,
                msg: format!("bad literal `{tok}`"),
            })?;
            match Lit::from_dimacs(x) {
                None => cnf.clauses.push(std::mem::take(&mut cur)),
                Some(l) => {
                    cnf.num_vars = cnf.num_vars.max(l.var() + 1);
                    cur.push(l);
                }
            }
        }
    }
    if !cur.is_empty() {
        cnf.clauses.push(cur);
    }
    Ok(cnf)
}
