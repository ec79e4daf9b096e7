//! Equivalence-preserving netlist cleanup.
//!
//! Every pass is a single topological rebuild of the netlist with a subset
//! of local rewrite rules enabled, followed by dead-gate removal. Efforts
//! iterate passes to a fixpoint. `heavy` shuffles the pass order per round
//! with the recipe seed, which yields structurally different (but
//! equivalent) netlists for the resynthesis attack.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{GateKind, NetId, Netlist, NetlistBuilder};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pass {
    ConstProp,
    DeadCode,
    DoubleInverter,
    DupInput,
    Strash,
    BufCollapse,
}

impl Pass {
    pub const ALL: [Pass; 6] = [
        Pass::BufCollapse,
        Pass::ConstProp,
        Pass::DupInput,
        Pass::DoubleInverter,
        Pass::Strash,
        Pass::DeadCode,
    ];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EffortLevel {
    None,
    Light,
    Standard,
    Heavy,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OptEffort {
    pub level: EffortLevel,
    pub passes: Vec<Pass>,
    /// Only used by `heavy`.
    pub seed: u64,
}

impl OptEffort {
    pub fn new(level: EffortLevel) -> Self {
        let passes = match level {
            EffortLevel::None => vec![],
            EffortLevel::Light => vec![Pass::BufCollapse, Pass::ConstProp, Pass::DeadCode],
            EffortLevel::Standard | EffortLevel::Heavy => Pass::ALL.to_vec(),
        };
        OptEffort {
            level,
            passes,
            seed: 0,
        }
    }

    pub fn none() -> Self {
        Self::new(EffortLevel::None)
    }

    pub fn light() -> Self {
        Self::new(EffortLevel::Light)
    }

    pub fn standard() -> Self {
        Self::new(EffortLevel::Standard)
    }

    pub fn heavy(seed: u64) -> Self {
        OptEffort {
            seed,
            ..Self::new(EffortLevel::Heavy)
        }
    }

    /// A custom pass list; runs like `standard` (all passes per sweep).
    pub fn with_passes(passes: Vec<Pass>) -> Self {
        OptEffort {
            level: EffortLevel::Standard,
            passes,
            seed: 0,
        }
    }
}

impl Default for OptEffort {
    fn default() -> Self {
        Self::standard()
    }
}

impl fmt::Display for OptEffort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.level {
            EffortLevel::None => f.write_str("none"),
            EffortLevel::Light => f.write_str("light"),
            EffortLevel::Standard => f.write_str("standard"),
            EffortLevel::Heavy => write!(f, "heavy:seed={}", self.seed),
        }
    }
}

/// Recipe strings: `none`, `light`, `standard`, `heavy`, `heavy:seed=<n>`.
impl FromStr for OptEffort {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (head, opts) = match s.split_once(':') {
            Some((h, o)) => (h, Some(o)),
            None => (s, None),
        };
        let mut effort = match head {
            "none" => OptEffort::none(),
            "light" => OptEffort::light(),
            "standard" => OptEffort::standard(),
            "heavy" => OptEffort::heavy(0),
            _ => return Err(Error::InvalidArgument(format!("unknown effort `{head}`"))),
        };
        if let Some(opts) = opts {
            for opt in opts.split(',') {
                match opt.split_once('=') {
                    Some(("seed", v)) if effort.level == EffortLevel::Heavy => {
                        effort.seed = v.parse().map_err(|_| {
                            Error::InvalidArgument(format!("bad seed `{v}` in recipe `{s}`"))
                        })?;
                    }
                    _ => {
                        return Err(Error::InvalidArgument(format!(
                            "unsupported option `{opt}` in recipe `{s}`"
                        )))
                    }
                }
            }
        }
        Ok(effort)
    }
}

/// Where an original net ended up after optimization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Target {
    Net(String),
    Const(bool),
}

pub type NetMap = HashMap<String, Target>;

#[derive(Clone, Copy, Default)]
struct Rules {
    const_prop: bool,
    dup_input: bool,
    double_inverter: bool,
    strash: bool,
    buf_collapse: bool,
}

impl Rules {
    fn from_passes(passes: &[Pass]) -> Self {
        let mut r = Rules::default();
        for p in passes {
            match p {
                Pass::ConstProp => r.const_prop = true,
                Pass::DupInput => r.dup_input = true,
                Pass::DoubleInverter => r.double_inverter = true,
                Pass::Strash => r.strash = true,
                Pass::BufCollapse => r.buf_collapse = true,
                Pass::DeadCode => {}
            }
        }
        r
    }

    fn any(&self) -> bool {
        self.const_prop || self.dup_input || self.double_inverter || self.strash || self.buf_collapse
    }
}

pub fn optimize(n: &Netlist, effort: &OptEffort, frozen: &HashSet<String>) -> Result<Netlist> {
    optimize_traced(n, effort, frozen).map(|(n, _)| n)
}

/// Like [`optimize`], also returning where every original net went.
pub fn optimize_traced(
    n: &Netlist,
    effort: &OptEffort,
    frozen: &HashSet<String>,
) -> Result<(Netlist, NetMap)> {
    let mut map: NetMap = (0..n.num_nets())
        .map(|i| (n.net_name(i).to_owned(), Target::Net(n.net_name(i).to_owned())))
        .collect();
    let mut cur = n.clone();
    let dce = effort.passes.contains(&Pass::DeadCode);
    let mut rng = ChaCha8Rng::seed_from_u64(effort.seed);

    const MAX_ROUNDS: usize = 32;
    for _ in 0..MAX_ROUNDS {
        let before = cur.clone();
        let schedule: Vec<Vec<Pass>> = match effort.level {
            EffortLevel::None => vec![],
            EffortLevel::Heavy => {
                let mut order = effort.passes.clone();
                order.shuffle(&mut rng);
                order.into_iter().map(|p| vec![p]).collect()
            }
            _ => vec![effort.passes.clone()],
        };
        for passes in schedule {
            let rules = Rules::from_passes(&passes);
            if rules.any() {
                let (next, step) = sweep(&cur, rules, frozen)?;
                compose(&mut map, &step);
                cur = next;
            }
            if passes.contains(&Pass::DeadCode) || (dce && effort.level != EffortLevel::Heavy) {
                cur = remove_dead(&cur, frozen)?;
            }
        }
        if cur == before {
            break;
        }
    }
    for f in frozen {
        if n.net_id(f).is_some() && cur.net_id(f).is_none() {
            return Err(Error::FrozenNetLost(f.clone()));
        }
    }
    // Nets removed as dead no longer map anywhere.
    map.retain(|_, t| match t {
        Target::Net(name) => cur.net_id(name).is_some(),
        Target::Const(_) => true,
    });
    Ok((cur.renamed(n.name()), map))
}

fn compose(map: &mut NetMap, step: &NetMap) {
    for t in map.values_mut() {
        if let Target::Net(name) = t {
            if let Some(next) = step.get(name) {
                *t = next.clone();
            }
        }
    }
}

/// Binds primary inputs to constants, removes them from the interface and
/// simplifies (`light` effort).
pub fn propagate_constants(n: &Netlist, bindings: &HashMap<String, bool>) -> Result<Netlist> {
    for k in bindings.keys() {
        if n.input_index(k).is_none() {
            return Err(Error::InvalidArgument(format!(
                "`{k}` is not a primary input of `{}`",
                n.name()
            )));
        }
    }
    let mut b = Netlist::builder(n.name());
    let mut map: Vec<Sig> = Vec::with_capacity(n.num_nets());
    for name in n.input_names() {
        match bindings.get(name) {
            Some(&v) => map.push(Sig::Const(v)),
            None => map.push(Sig::Net(b.add_input(name)?)),
        }
    }
    let rules = Rules {
        const_prop: true,
        buf_collapse: true,
        ..Rules::default()
    };
    let mut ctx = Rebuild::new(b, rules, n);
    ctx.run(n, &mut map, &HashSet::new())?;
    let bound = ctx.finish(n, &map)?;
    let (out, _) = optimize_traced(&bound, &OptEffort::light(), &HashSet::new())?;
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
enum Sig {
    Const(bool),
    Net(NetId),
}

enum Simplified {
    Alias(Sig),
    Node(GateKind, Vec<Sig>),
}

struct Rebuild<'a> {
    b: NetlistBuilder,
    rules: Rules,
    /// Inverter gate handle -> the handle it inverts.
    inverts: HashMap<NetId, NetId>,
    hash: HashMap<(GateKind, Vec<NetId>), NetId>,
    consts: [Option<NetId>; 2],
    /// Every name in the source netlist, so fresh gates never collide.
    reserved: HashSet<&'a str>,
}

impl<'a> Rebuild<'a> {
    fn new(b: NetlistBuilder, rules: Rules, src: &'a Netlist) -> Self {
        Rebuild {
            b,
            rules,
            inverts: HashMap::new(),
            hash: HashMap::new(),
            consts: [None, None],
            reserved: (0..src.num_nets())
                .map(|i| src.net_name(i))
                .chain(src.output_names())
                .collect(),
        }
    }

    fn fresh(&mut self, hint: &str) -> String {
        let mut name = self.b.fresh_name(hint);
        let mut k = 0;
        while self.reserved.contains(name.as_str()) {
            k += 1;
            name = self.b.fresh_name(&format!("{hint}_c{k}"));
        }
        name
    }

    fn constant(&mut self, v: bool) -> Result<NetId> {
        if let Some(h) = self.consts[v as usize] {
            return Ok(h);
        }
        let (hint, kind) = if v {
            ("const1", GateKind::Const1)
        } else {
            ("const0", GateKind::Const0)
        };
        let name = self.fresh(hint);
        let h = self.b.add_gate(name, kind, &[])?;
        self.consts[v as usize] = Some(h);
        Ok(h)
    }

    fn materialize(&mut self, s: Sig) -> Result<NetId> {
        match s {
            Sig::Net(h) => Ok(h),
            Sig::Const(v) => self.constant(v),
        }
    }

    fn inverted_of(&self, h: NetId) -> Option<NetId> {
        self.inverts.get(&h).copied()
    }

    fn complementary(&self, a: NetId, b: NetId) -> bool {
        self.inverted_of(a) == Some(b) || self.inverted_of(b) == Some(a)
    }

    fn simplify(&self, kind: GateKind, ins: &[Sig]) -> Simplified {
        use GateKind::*;
        use Simplified::*;
        let r = &self.rules;
        let not = |s: Sig| -> Simplified {
            match s {
                Sig::Const(v) => Alias(Sig::Const(!v)),
                s => Node(Not, vec![s]),
            }
        };

        if r.const_prop {
            match kind {
                Const0 => return Alias(Sig::Const(false)),
                Const1 => return Alias(Sig::Const(true)),
                Buf | Not => {
                    if let Sig::Const(v) = ins[0] {
                        return Alias(Sig::Const(if kind == Not { !v } else { v }));
                    }
                }
                Mux2 => {
                    if let Sig::Const(s) = ins[0] {
                        return Alias(if s { ins[2] } else { ins[1] });
                    }
                    match (ins[1], ins[2]) {
                        (Sig::Const(a), Sig::Const(b)) if a == b => return Alias(Sig::Const(a)),
                        (Sig::Const(false), Sig::Const(true)) => return Alias(ins[0]),
                        (Sig::Const(true), Sig::Const(false)) => return not(ins[0]),
                        _ => {}
                    }
                }
                And | Nand | Or | Nor | Xor | Xnor => {
                    let (c, other) = match (ins[0], ins[1]) {
                        (Sig::Const(a), Sig::Const(b)) => {
                            return Alias(Sig::Const(kind.eval(&[a, b])));
                        }
                        (Sig::Const(c), o) | (o, Sig::Const(c)) => (c, o),
                        _ => (false, Sig::Const(false)),
                    };
                    if let Sig::Net(_) = other {
                        return match (kind, c) {
                            (And, false) | (Nor, true) => Alias(Sig::Const(false)),
                            (Or, true) | (Nand, false) => Alias(Sig::Const(true)),
                            (And, true) | (Or, false) | (Xor, false) | (Xnor, true) => {
                                Alias(other)
                            }
                            (Nand, true) | (Nor, false) | (Xor, true) | (Xnor, false) => not(other),
                            _ => unreachable!(),
                        };
                    }
                }
            }
        }

        if r.buf_collapse && kind == Buf {
            return Alias(ins[0]);
        }

        if r.dup_input {
            match kind {
                And | Or | Nand | Nor | Xor | Xnor => {
                    if let (Sig::Net(a), Sig::Net(b)) = (ins[0], ins[1]) {
                        if a == b {
                            return match kind {
                                And | Or => Alias(ins[0]),
                                Nand | Nor => Node(Not, vec![ins[0]]),
                                Xor => Alias(Sig::Const(false)),
                                _ => Alias(Sig::Const(true)),
                            };
                        }
                        if self.complementary(a, b) {
                            return Alias(Sig::Const(matches!(kind, Or | Nand | Xor)));
                        }
                    }
                }
                Mux2 if ins[1] == ins[2] => return Alias(ins[1]),
                _ => {}
            }
        }

        Node(kind, ins.to_vec())
    }

    /// Emits (or reuses) a gate for `kind(ins)`; returns its signal.
    fn emit(&mut self, name: &str, kind: GateKind, raw_ins: &[Sig]) -> Result<Sig> {
        let (kind, sigs) = match self.simplify(kind, raw_ins) {
            Simplified::Alias(s) => return Ok(s),
            Simplified::Node(k, sigs) => (k, sigs),
        };
        let ins = sigs
            .into_iter()
            .map(|s| self.materialize(s))
            .collect::<Result<Vec<_>>>()?;
        let is_inverter = kind == GateKind::Not
            || (matches!(kind, GateKind::Nand | GateKind::Nor) && ins[0] == ins[1]);
        if self.rules.double_inverter && is_inverter {
            if let Some(orig) = self.inverted_of(ins[0]) {
                return Ok(Sig::Net(orig));
            }
        }
        let mut key_ins = ins.clone();
        if kind.is_commutative() {
            key_ins.sort_unstable();
        }
        let key = (kind, key_ins);
        if self.rules.strash {
            if let Some(&h) = self.hash.get(&key) {
                return Ok(Sig::Net(h));
            }
        }
        let h = self.b.add_gate(name, kind, &ins)?;
        if is_inverter {
            self.inverts.insert(h, ins[0]);
        }
        if self.rules.strash {
            self.hash.insert(key, h);
        }
        Ok(Sig::Net(h))
    }

    fn run(&mut self, n: &Netlist, map: &mut Vec<Sig>, frozen: &HashSet<String>) -> Result<()> {
        for (gi, g) in n.gates().iter().enumerate() {
            let name = n.net_name(n.gate_net(gi));
            let ins: Vec<Sig> = g.inputs.iter().map(|&i| map[i]).collect();
            let sig = if frozen.contains(name) {
                let hs = ins
                    .iter()
                    .map(|&s| self.materialize(s))
                    .collect::<Result<Vec<_>>>()?;
                let h = self.b.add_gate(name, g.kind, &hs)?;
                if g.kind == GateKind::Not {
                    self.inverts.insert(h, hs[0]);
                }
                Sig::Net(h)
            } else {
                self.emit(name, g.kind, &ins)?
            };
            map.push(sig);
        }
        Ok(())
    }

    fn finish(mut self, n: &Netlist, map: &[Sig]) -> Result<Netlist> {
        let mut outs = Vec::with_capacity(n.num_outputs());
        for o in n.outputs() {
            outs.push((o.name.clone(), self.materialize(map[o.net])?));
        }
        for (name, h) in outs {
            self.b.add_output(name, h)?;
        }
        self.b.build()
    }
}

/// One rebuild sweep; returns the new netlist and a map from old net names.
fn sweep(n: &Netlist, rules: Rules, frozen: &HashSet<String>) -> Result<(Netlist, NetMap)> {
    let mut b = Netlist::builder(n.name());
    let mut map: Vec<Sig> = Vec::with_capacity(n.num_nets());
    for name in n.input_names() {
        map.push(Sig::Net(b.add_input(name)?));
    }
    let mut ctx = Rebuild::new(b, rules, n);
    ctx.run(n, &mut map, frozen)?;
    // Builder handles must be translated to names before the builder is consumed.
    let handle_names: Vec<Option<Target>> = map
        .iter()
        .map(|s| match *s {
            Sig::Const(v) => Some(Target::Const(v)),
            Sig::Net(_) => None,
        })
        .collect();
    let names_by_handle: Vec<(usize, NetId)> = map
        .iter()
        .enumerate()
        .filter_map(|(i, s)| match *s {
            Sig::Net(h) => Some((i, h)),
            Sig::Const(_) => None,
        })
        .collect();
    let resolved: Vec<(usize, String)> = names_by_handle
        .into_iter()
        .map(|(i, h)| (i, ctx.b_name(h)))
        .collect();
    let out = ctx.finish(n, &map)?;
    let mut step = NetMap::with_capacity(n.num_nets());
    for (i, t) in handle_names.into_iter().enumerate() {
        if let Some(t) = t {
            step.insert(n.net_name(i).to_owned(), t);
        }
    }
    for (i, name) in resolved {
        step.insert(n.net_name(i).to_owned(), Target::Net(name));
    }
    Ok((out, step))
}

impl Rebuild<'_> {
    fn b_name(&self, h: NetId) -> String {
        self.b.handle_name(h).to_owned()
    }
}

/// Drops gates that reach neither a primary output nor a frozen net.
pub fn remove_dead(n: &Netlist, frozen: &HashSet<String>) -> Result<Netlist> {
    let roots = n
        .outputs()
        .iter()
        .map(|o| o.net)
        .chain(frozen.iter().filter_map(|f| n.net_id(f)));
    let live = n.cone_mask(roots);
    if (n.num_inputs()..n.num_nets()).all(|i| live[i]) {
        return Ok(n.clone());
    }
    let mut b = Netlist::builder(n.name());
    let mut map = vec![usize::MAX; n.num_nets()];
    for (i, name) in n.input_names().enumerate() {
        map[i] = b.add_input(name)?;
    }
    for (gi, g) in n.gates().iter().enumerate() {
        let net = n.gate_net(gi);
        if !live[net] {
            continue;
        }
        let ins: Vec<NetId> = g.inputs.iter().map(|&i| map[i]).collect();
        map[net] = b.add_gate(n.net_name(net), g.kind, &ins)?;
    }
    for o in n.outputs() {
        b.add_output(o.name.clone(), map[o.net])?;
    }
    b.build()
}

/// Number of gates whose output is an inverter of another net expressed as
/// a duplicated-input NAND/NOR.
pub fn count_duplicated_input_gates(n: &Netlist) -> usize {
    n.gates()
        .iter()
        .filter(|g| g.inputs.len() == 2 && g.inputs[0] == g.inputs[1])
        .count()
}
