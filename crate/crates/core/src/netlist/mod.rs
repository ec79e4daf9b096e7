//! Combinational gate-level netlists.
//!
//! A [`Netlist`] is immutable once built. Nets are numbered densely: primary
//! inputs first, then one net per gate in topological order, so every gate
//! only reads nets with a smaller id. Primary outputs are named ports that
//! point at a driving net; a port name usually equals the name of its driver
//! (the BENCH convention) but may differ after optimization aliases a net.

mod bench;
mod sim;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bench::{parse_bench, write_bench};
pub use sim::{exhaustive_mask, exhaustive_words, simulate, simulate_bits, WordSim};

pub type NetId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum GateKind {
    And,
    Nand,
    Or,
    Nor,
    Xor,
    Xnor,
    Not,
    Buf,
    /// 2:1 multiplexer with inputs `(select, data0, data1)`.
    Mux2,
    Const0,
    Const1,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::And,
        GateKind::Nand,
        GateKind::Or,
        GateKind::Nor,
        GateKind::Xor,
        GateKind::Xnor,
        GateKind::Not,
        GateKind::Buf,
        GateKind::Mux2,
        GateKind::Const0,
        GateKind::Const1,
    ];

    pub fn arity(self) -> usize {
        match self {
            GateKind::Const0 | GateKind::Const1 => 0,
            GateKind::Not | GateKind::Buf => 1,
            GateKind::Mux2 => 3,
            _ => 2,
        }
    }

    pub fn is_commutative(self) -> bool {
        matches!(
            self,
            GateKind::And
                | GateKind::Nand
                | GateKind::Or
                | GateKind::Nor
                | GateKind::Xor
                | GateKind::Xnor
        )
    }

    /// Name used when writing BENCH files.
    pub fn bench_name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::Nand => "NAND",
            GateKind::Or => "OR",
            GateKind::Nor => "NOR",
            GateKind::Xor => "XOR",
            GateKind::Xnor => "XNOR",
            GateKind::Not => "NOT",
            GateKind::Buf => "BUFF",
            GateKind::Mux2 => "MUX",
            GateKind::Const0 => "CONST0",
            GateKind::Const1 => "CONST1",
        }
    }

    pub fn from_bench_name(s: &str) -> Option<GateKind> {
        let kind = match s.to_ascii_uppercase().as_str() {
            "AND" => GateKind::And,
            "NAND" => GateKind::Nand,
            "OR" => GateKind::Or,
            "NOR" => GateKind::Nor,
            "XOR" => GateKind::Xor,
            "XNOR" => GateKind::Xnor,
            "NOT" | "INV" => GateKind::Not,
            "BUF" | "BUFF" => GateKind::Buf,
            "MUX" | "MUX2" => GateKind::Mux2,
            "CONST0" | "GND" => GateKind::Const0,
            "CONST1" | "VDD" => GateKind::Const1,
            _ => return None,
        };
        Some(kind)
    }

    pub fn eval(self, ins: &[bool]) -> bool {
        match self {
            GateKind::And => ins[0] & ins[1],
            GateKind::Nand => !(ins[0] & ins[1]),
            GateKind::Or => ins[0] | ins[1],
            GateKind::Nor => !(ins[0] | ins[1]),
            GateKind::Xor => ins[0] ^ ins[1],
            GateKind::Xnor => !(ins[0] ^ ins[1]),
            GateKind::Not => !ins[0],
            GateKind::Buf => ins[0],
            GateKind::Mux2 => {
                if ins[0] {
                    ins[2]
                } else {
                    ins[1]
                }
            }
            GateKind::Const0 => false,
            GateKind::Const1 => true,
        }
    }

    /// Bit-parallel evaluation over 64 input patterns.
    #[inline]
    pub fn eval_words(self, a: u64, b: u64, c: u64) -> u64 {
        match self {
            GateKind::And => a & b,
            GateKind::Nand => !(a & b),
            GateKind::Or => a | b,
            GateKind::Nor => !(a | b),
            GateKind::Xor => a ^ b,
            GateKind::Xnor => !(a ^ b),
            GateKind::Not => !a,
            GateKind::Buf => a,
            GateKind::Mux2 => (!a & b) | (a & c),
            GateKind::Const0 => 0,
            GateKind::Const1 => !0,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GateKind::Buf => "BUF",
            GateKind::Mux2 => "MUX2",
            k => k.bench_name(),
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<NetId>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Output {
    pub name: String,
    pub net: NetId,
}

/// Where a net gets its value from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Driver {
    Input(usize),
    Gate(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    name: String,
    net_names: Vec<String>,
    num_inputs: usize,
    gates: Vec<Gate>,
    outputs: Vec<Output>,
    lookup: HashMap<String, NetId>,
}

impl Netlist {
    pub fn builder(name: impl Into<String>) -> NetlistBuilder {
        NetlistBuilder::new(name)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_inputs(&self) -> usize {
        self.num_inputs
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn num_nets(&self) -> usize {
        self.net_names.len()
    }

    pub fn input_names(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.net_names[..self.num_inputs].iter().map(String::as_str)
    }

    pub fn output_names(&self) -> impl ExactSizeIterator<Item = &str> + '_ {
        self.outputs.iter().map(|o| o.name.as_str())
    }

    pub fn outputs(&self) -> &[Output] {
        &self.outputs
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, i: usize) -> &Gate {
        &self.gates[i]
    }

    /// Net driven by gate `i`.
    pub fn gate_net(&self, i: usize) -> NetId {
        self.num_inputs + i
    }

    pub fn driver(&self, net: NetId) -> Driver {
        if net < self.num_inputs {
            Driver::Input(net)
        } else {
            Driver::Gate(net - self.num_inputs)
        }
    }

    /// The gate driving `net`, if it is not a primary input.
    pub fn driving_gate(&self, net: NetId) -> Option<&Gate> {
        match self.driver(net) {
            Driver::Gate(g) => Some(&self.gates[g]),
            Driver::Input(_) => None,
        }
    }

    pub fn net_name(&self, net: NetId) -> &str {
        &self.net_names[net]
    }

    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.lookup.get(name).copied()
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.net_id(name).filter(|&n| n < self.num_inputs)
    }

    pub fn output_index(&self, name: &str) -> Option<usize> {
        self.outputs.iter().position(|o| o.name == name)
    }

    pub fn has_kind(&self, kind: GateKind) -> bool {
        self.gates.iter().any(|g| g.kind == kind)
    }

    /// Number of readers of every net (gate pins plus primary outputs).
    pub fn fanout_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_nets()];
        for g in &self.gates {
            for &i in &g.inputs {
                counts[i] += 1;
            }
        }
        for o in &self.outputs {
            counts[o.net] += 1;
        }
        counts
    }

    /// Marks every net in the transitive fan-in of `roots` (roots included).
    pub fn cone_mask(&self, roots: impl IntoIterator<Item = NetId>) -> Vec<bool> {
        let mut mark = vec![false; self.num_nets()];
        let mut stack: Vec<NetId> = roots.into_iter().collect();
        while let Some(n) = stack.pop() {
            if mark[n] {
                continue;
            }
            mark[n] = true;
            if let Some(g) = self.driving_gate(n) {
                stack.extend(g.inputs.iter().copied().filter(|&i| !mark[i]));
            }
        }
        mark
    }

    pub fn stats(&self) -> CircuitStats {
        let mut level = vec![0usize; self.num_nets()];
        let mut histogram = BTreeMap::new();
        let mut literals = 0;
        for (i, g) in self.gates.iter().enumerate() {
            let l = match g.kind {
                GateKind::Const0 | GateKind::Const1 => 0,
                _ => 1 + g.inputs.iter().map(|&n| level[n]).max().unwrap_or(0),
            };
            level[self.num_inputs + i] = l;
            *histogram.entry(g.kind).or_insert(0) += 1;
            literals += g.inputs.len();
        }
        let depth = self.outputs.iter().map(|o| level[o.net]).max().unwrap_or(0);
        CircuitStats {
            gate_count: self.gates.len(),
            depth,
            literal_count: literals,
            type_histogram: histogram,
        }
    }

    /// Converts into the name-based representation used for JSON exchange.
    pub fn to_parts(&self) -> NetlistParts {
        NetlistParts {
            name: self.name.clone(),
            inputs: self.input_names().map(str::to_owned).collect(),
            outputs: self
                .outputs
                .iter()
                .map(|o| PortSpec {
                    name: o.name.clone(),
                    net: self.net_names[o.net].clone(),
                })
                .collect(),
            gates: self
                .gates
                .iter()
                .enumerate()
                .map(|(i, g)| GateSpec {
                    output: self.net_names[self.gate_net(i)].clone(),
                    kind: g.kind,
                    inputs: g.inputs.iter().map(|&n| self.net_names[n].clone()).collect(),
                })
                .collect(),
        }
    }

    /// Builds a netlist from loosely ordered parts, checking every invariant
    /// and sorting gates topologically (file order is kept where possible).
    pub fn from_parts(parts: NetlistParts) -> Result<Netlist> {
        let diags = validate(&parts);
        if !diags.is_empty() {
            return Err(Error::Invalid(diags));
        }
        let defined: HashMap<&str, usize> = parts
            .gates
            .iter()
            .enumerate()
            .map(|(i, g)| (g.output.as_str(), i))
            .collect();
        let order = topo_order(&parts, &defined).expect("validated netlist is acyclic");

        let mut b = NetlistBuilder::new(parts.name.clone());
        for i in &parts.inputs {
            b.add_input(i.clone())?;
        }
        for gi in order {
            let g = &parts.gates[gi];
            let ins: Vec<NetId> = g.inputs.iter().map(|n| b.lookup[n.as_str()]).collect();
            b.add_gate(g.output.clone(), g.kind, &ins)?;
        }
        for o in &parts.outputs {
            let net = b.lookup[o.net.as_str()];
            b.add_output(o.name.clone(), net)?;
        }
        b.build()
    }

    /// Rebuilds the netlist with a new name.
    pub fn renamed(&self, name: impl Into<String>) -> Netlist {
        let mut n = self.clone();
        n.name = name.into();
        n
    }

    /// Same connectivity, different gate kinds. Each new kind must have the
    /// arity of the gate it replaces.
    pub fn with_gate_kinds(&self, kinds: &[GateKind]) -> Result<Netlist> {
        if kinds.len() != self.gates.len() {
            return Err(Error::LengthMismatch {
                what: "gate kinds",
                expected: self.gates.len(),
                actual: kinds.len(),
            });
        }
        let mut n = self.clone();
        for (gi, (g, &kind)) in n.gates.iter_mut().zip(kinds).enumerate() {
            if kind.arity() != g.inputs.len() {
                return Err(Error::Invalid(vec![Diagnostic::Arity {
                    net: self.net_name(self.gate_net(gi)).to_owned(),
                    kind,
                    expected: kind.arity(),
                    actual: g.inputs.len(),
                }]));
            }
            g.kind = kind;
        }
        Ok(n)
    }
}

/// Gate count and depth summary, the stand-in for area and timing.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitStats {
    pub gate_count: usize,
    pub depth: usize,
    pub literal_count: usize,
    pub type_histogram: BTreeMap<GateKind, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortSpec {
    pub name: String,
    pub net: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub output: String,
    pub kind: GateKind,
    pub inputs: Vec<String>,
}

/// Name-based, unchecked netlist description; the JSON IR format.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetlistParts {
    pub name: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<PortSpec>,
    pub gates: Vec<GateSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "issue", rename_all = "snake_case")]
pub enum Diagnostic {
    BadName { net: String },
    DuplicateNet { net: String },
    DuplicateOutput { name: String },
    Arity { net: String, kind: GateKind, expected: usize, actual: usize },
    Undriven { net: String },
    UndrivenOutput { name: String },
    OutputNameClash { name: String },
    Cycle { net: String },
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::BadName { net } => write!(f, "invalid net name `{net}`"),
            Diagnostic::DuplicateNet { net } => write!(f, "net `{net}` defined more than once"),
            Diagnostic::DuplicateOutput { name } => write!(f, "output `{name}` declared twice"),
            Diagnostic::Arity {
                net,
                kind,
                expected,
                actual,
            } => write!(
                f,
                "gate `{net}`: {kind} takes {expected} inputs, got {actual}"
            ),
            Diagnostic::Undriven { net } => write!(f, "net `{net}` has no driver"),
            Diagnostic::UndrivenOutput { name } => write!(f, "output `{name}` has no driver"),
            Diagnostic::OutputNameClash { name } => {
                write!(f, "output `{name}` names a different net")
            }
            Diagnostic::Cycle { net } => write!(f, "combinational cycle through `{net}`"),
        }
    }
}

pub fn is_valid_name(s: &str) -> bool {
    !s.is_empty()
        && s
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'_')
}

/// Checks every structural invariant; an empty result means the parts form
/// a valid netlist.
pub fn validate(parts: &NetlistParts) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut defined: HashMap<&str, Option<usize>> = HashMap::new();
    for i in &parts.inputs {
        if !is_valid_name(i) {
            diags.push(Diagnostic::BadName { net: i.clone() });
        }
        if defined.insert(i, None).is_some() {
            diags.push(Diagnostic::DuplicateNet { net: i.clone() });
        }
    }
    for (gi, g) in parts.gates.iter().enumerate() {
        if !is_valid_name(&g.output) {
            diags.push(Diagnostic::BadName {
                net: g.output.clone(),
            });
        }
        if defined.insert(&g.output, Some(gi)).is_some() {
            diags.push(Diagnostic::DuplicateNet {
                net: g.output.clone(),
            });
        }
        if g.inputs.len() != g.kind.arity() {
            diags.push(Diagnostic::Arity {
                net: g.output.clone(),
                kind: g.kind,
                expected: g.kind.arity(),
                actual: g.inputs.len(),
            });
        }
    }
    let mut undriven = HashSet::new();
    for g in &parts.gates {
        for i in &g.inputs {
            if !defined.contains_key(i.as_str()) && undriven.insert(i.as_str()) {
                diags.push(Diagnostic::Undriven { net: i.clone() });
            }
        }
    }
    let mut seen_outputs = HashSet::new();
    for o in &parts.outputs {
        if !seen_outputs.insert(o.name.as_str()) {
            diags.push(Diagnostic::DuplicateOutput {
                name: o.name.clone(),
            });
        }
        if !defined.contains_key(o.net.as_str()) {
            diags.push(Diagnostic::UndrivenOutput {
                name: o.name.clone(),
            });
        } else if o.name != o.net && defined.contains_key(o.name.as_str()) {
            diags.push(Diagnostic::OutputNameClash {
                name: o.name.clone(),
            });
        }
    }
    if diags.is_empty() {
        let gate_of: HashMap<&str, usize> = defined
            .iter()
            .filter_map(|(k, v)| v.map(|g| (*k, g)))
            .collect();
        if let Err(net) = topo_order(parts, &gate_of) {
            diags.push(Diagnostic::Cycle { net });
        }
    }
    diags
}

/// Depth-first topological order over gate indices. Already sorted input
/// keeps its order. Returns the name of a net on a cycle on failure.
fn topo_order(
    parts: &NetlistParts,
    gate_of: &HashMap<&str, usize>,
) -> std::result::Result<Vec<usize>, String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let n = parts.gates.len();
    let mut mark = vec![Mark::New; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::New {
            continue;
        }
        // (gate, next input position)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(&mut (g, ref mut pos)) = stack.last_mut() {
            let ins = &parts.gates[g].inputs;
            if *pos < ins.len() {
                let name = ins[*pos].as_str();
                *pos += 1;
                if let Some(&child) = gate_of.get(name) {
                    match mark[child] {
                        Mark::New => {
                            mark[child] = Mark::Active;
                            stack.push((child, 0));
                        }
                        Mark::Active => return Err(name.to_owned()),
                        Mark::Done => {}
                    }
                }
            } else {
                mark[g] = Mark::Done;
                order.push(g);
                stack.pop();
            }
        }
    }
    Ok(order)
}

/// Incremental construction in topological order. Gates may only reference
/// nets that already exist, so a built netlist is acyclic by construction.
#[derive(Clone, Debug)]
pub struct NetlistBuilder {
    name: String,
    net_names: Vec<String>,
    inputs: Vec<String>,
    pending_gates: Vec<(String, Gate)>,
    outputs: Vec<Output>,
    lookup: HashMap<String, NetId>,
    // Nets are renumbered at build time once the input count is final;
    // builder ids are provisional handles.
    handle_kind: Vec<Handle>,
    fresh_counter: usize,
}

#[derive(Clone, Copy, Debug)]
enum Handle {
    Input(usize),
    Gate(usize),
}

impl NetlistBuilder {
    pub fn new(name: impl Into<String>) -> Self {
        NetlistBuilder {
            name: name.into(),
            net_names: Vec::new(),
            inputs: Vec::new(),
            pending_gates: Vec::new(),
            outputs: Vec::new(),
            lookup: HashMap::new(),
            handle_kind: Vec::new(),
            fresh_counter: 0,
        }
    }

    fn claim(&mut self, name: String, h: Handle) -> Result<NetId> {
        if !is_valid_name(&name) {
            return Err(Error::Invalid(vec![Diagnostic::BadName { net: name }]));
        }
        if self.lookup.contains_key(&name) || self.outputs.iter().any(|o| o.name == name) {
            return Err(Error::Invalid(vec![Diagnostic::DuplicateNet { net: name }]));
        }
        let id = self.net_names.len();
        self.net_names.push(name.clone());
        self.lookup.insert(name, id);
        self.handle_kind.push(h);
        Ok(id)
    }

    pub fn add_input(&mut self, name: impl Into<String>) -> Result<NetId> {
        let name = name.into();
        let idx = self.inputs.len();
        let id = self.claim(name.clone(), Handle::Input(idx))?;
        self.inputs.push(name);
        Ok(id)
    }

    pub fn add_gate(
        &mut self,
        name: impl Into<String>,
        kind: GateKind,
        inputs: &[NetId],
    ) -> Result<NetId> {
        let name = name.into();
        if inputs.len() != kind.arity() {
            return Err(Error::Invalid(vec![Diagnostic::Arity {
                net: name,
                kind,
                expected: kind.arity(),
                actual: inputs.len(),
            }]));
        }
        if let Some(&bad) = inputs.iter().find(|&&i| i >= self.net_names.len()) {
            return Err(Error::InvalidArgument(format!(
                "gate `{name}` reads unknown net handle {bad}"
            )));
        }
        let idx = self.pending_gates.len();
        let id = self.claim(name.clone(), Handle::Gate(idx))?;
        self.pending_gates.push((
            name,
            Gate {
                kind,
                inputs: inputs.to_vec(),
            },
        ));
        Ok(id)
    }

    /// Adds a gate under a fresh name derived from `hint`.
    pub fn add_fresh_gate(&mut self, hint: &str, kind: GateKind, inputs: &[NetId]) -> Result<NetId> {
        let name = self.fresh_name(hint);
        self.add_gate(name, kind, inputs)
    }

    pub fn add_output(&mut self, name: impl Into<String>, net: NetId) -> Result<()> {
        let name = name.into();
        if net >= self.net_names.len() {
            return Err(Error::Invalid(vec![Diagnostic::UndrivenOutput { name }]));
        }
        if self.outputs.iter().any(|o| o.name == name) {
            return Err(Error::Invalid(vec![Diagnostic::DuplicateOutput { name }]));
        }
        if self.net_names[net] != name && self.lookup.contains_key(&name) {
            return Err(Error::Invalid(vec![Diagnostic::OutputNameClash { name }]));
        }
        self.outputs.push(Output { name, net });
        Ok(())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.lookup.contains_key(name) || self.outputs.iter().any(|o| o.name == name)
    }

    pub fn handle_name(&self, h: NetId) -> &str {
        &self.net_names[h]
    }

    pub fn net(&self, name: &str) -> Option<NetId> {
        self.lookup.get(name).copied()
    }

    /// Returns `hint` if unused, else `hint_<k>` for the first unused `k`.
    pub fn fresh_name(&mut self, hint: &str) -> String {
        if !self.contains(hint) {
            return hint.to_owned();
        }
        loop {
            self.fresh_counter += 1;
            let cand = format!("{hint}_{}", self.fresh_counter);
            if !self.contains(&cand) {
                return cand;
            }
        }
    }

    /// Copies every gate of `src` into this builder under `prefix`, wiring
    /// the source's primary inputs to `input_map` (one net per source PI).
    /// Returns the builder net for every source net.
    pub fn instantiate(&mut self, src: &Netlist, prefix: &str, input_map: &[NetId]) -> Result<Vec<NetId>> {
        if input_map.len() != src.num_inputs() {
            return Err(Error::LengthMismatch {
                what: "instance input map",
                expected: src.num_inputs(),
                actual: input_map.len(),
            });
        }
        let mut map = Vec::with_capacity(src.num_nets());
        map.extend_from_slice(input_map);
        for (i, g) in src.gates().iter().enumerate() {
            let ins: Vec<NetId> = g.inputs.iter().map(|&n| map[n]).collect();
            let name = self.fresh_name(&format!("{prefix}{}", src.net_name(src.gate_net(i))));
            map.push(self.add_gate(name, g.kind, &ins)?);
        }
        Ok(map)
    }

    pub fn build(self) -> Result<Netlist> {
        let num_inputs = self.inputs.len();
        // Renumber: inputs first, then gates in insertion order.
        let remap: Vec<NetId> = self
            .handle_kind
            .iter()
            .map(|h| match *h {
                Handle::Input(i) => i,
                Handle::Gate(g) => num_inputs + g,
            })
            .collect();
        let mut net_names = vec![String::new(); self.net_names.len()];
        for (h, name) in self.net_names.into_iter().enumerate() {
            net_names[remap[h]] = name;
        }
        let gates: Vec<Gate> = self
            .pending_gates
            .into_iter()
            .map(|(_, g)| Gate {
                kind: g.kind,
                inputs: g.inputs.iter().map(|&i| remap[i]).collect(),
            })
            .collect();
        let outputs = self
            .outputs
            .into_iter()
            .map(|o| Output {
                name: o.name,
                net: remap[o.net],
            })
            .collect();
        let lookup = net_names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Ok(Netlist {
            name: self.name,
            net_names,
            num_inputs,
            gates,
            outputs,
            lookup,
        })
    }
}

/// Removes pass-through ports: a primary output that is a plain copy of a
/// primary input (directly or through BUF gates) whose only reader is that
/// output. Both the output and the input disappear. Returns the reduced
/// netlist and the number of pairs removed.
pub fn strip_feedthroughs(n: &Netlist) -> Result<(Netlist, usize)> {
    let fanout = n.fanout_counts();
    let mut drop_inputs = HashSet::new();
    let mut drop_outputs = HashSet::new();
    let mut drop_gates = HashSet::new();
    for (oi, o) in n.outputs().iter().enumerate() {
        let mut net = o.net;
        let mut chain = Vec::new();
        let mut ok = true;
        loop {
            match n.driver(net) {
                Driver::Input(pi) => {
                    if fanout[net] != 1 {
                        ok = false;
                    }
                    if ok {
                        drop_inputs.insert(pi);
                    }
                    break;
                }
                Driver::Gate(g) if n.gate(g).kind == GateKind::Buf => {
                    if fanout[net] != 1 {
                        ok = false;
                        break;
                    }
                    chain.push(g);
                    net = n.gate(g).inputs[0];
                }
                Driver::Gate(_) => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            drop_outputs.insert(oi);
            drop_gates.extend(chain);
        }
    }
    let mut parts = n.to_parts();
    let inputs = std::mem::take(&mut parts.inputs);
    parts.inputs = inputs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !drop_inputs.contains(i))
        .map(|(_, s)| s)
        .collect();
    let outputs = std::mem::take(&mut parts.outputs);
    parts.outputs = outputs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !drop_outputs.contains(i))
        .map(|(_, s)| s)
        .collect();
    let gates = std::mem::take(&mut parts.gates);
    parts.gates = gates
        .into_iter()
        .enumerate()
        .filter(|(i, _)| !drop_gates.contains(i))
        .map(|(_, s)| s)
        .collect();
    Ok((Netlist::from_parts(parts)?, drop_outputs.len()))
}
