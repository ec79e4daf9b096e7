//! Rewriting into 2-input NAND/NOR gates only.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netlist::{GateKind, NetId, Netlist};
use crate::optimizer::{optimize, OptEffort, Pass};

/// Operand of a template gate: one of the source gate's inputs or an
/// earlier gate of the same template.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Operand {
    In(usize),
    Tmp(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TemplateGate {
    pub kind: GateKind,
    pub a: Operand,
    pub b: Operand,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Template {
    pub gates: Vec<TemplateGate>,
    pub result: Operand,
}

/// For constants, `In(0)` is an arbitrary primary input used as an anchor.
pub fn rewrite_table() -> BTreeMap<GateKind, Template> {
    use GateKind::*;
    use Operand::*;
    let g = |kind, a, b| TemplateGate { kind, a, b };
    let t = |gates: Vec<TemplateGate>, result| Template { gates, result };
    BTreeMap::from([
        (Not, t(vec![g(Nand, In(0), In(0))], Tmp(0))),
        (Buf, t(vec![], In(0))),
        (Nand, t(vec![g(Nand, In(0), In(1))], Tmp(0))),
        (Nor, t(vec![g(Nor, In(0), In(1))], Tmp(0))),
        (
            And,
            t(vec![g(Nand, In(0), In(1)), g(Nand, Tmp(0), Tmp(0))], Tmp(1)),
        ),
        (
            Or,
            t(
                vec![
                    g(Nand, In(0), In(0)),
                    g(Nand, In(1), In(1)),
                    g(Nand, Tmp(0), Tmp(1)),
                ],
                Tmp(2),
            ),
        ),
        (Xor, t(xor_gates(), Tmp(3))),
        (
            Xnor,
            t(
                xor_gates()
                    .into_iter()
                    .chain([g(Nand, Tmp(3), Tmp(3))])
                    .collect(),
                Tmp(4),
            ),
        ),
        (
            Mux2,
            t(
                vec![
                    g(Nand, In(0), In(0)),
                    g(Nand, Tmp(0), In(1)),
                    g(Nand, In(0), In(2)),
                    g(Nand, Tmp(1), Tmp(2)),
                ],
                Tmp(3),
            ),
        ),
        (
            Const0,
            t(vec![g(Nor, In(0), In(0)), g(Nor, In(0), Tmp(0))], Tmp(1)),
        ),
        (
            Const1,
            t(vec![g(Nand, In(0), In(0)), g(Nand, In(0), Tmp(0))], Tmp(1)),
        ),
    ])
}

fn xor_gates() -> Vec<TemplateGate> {
    use GateKind::Nand;
    use Operand::*;
    let g = |a, b| TemplateGate { kind: Nand, a, b };
    vec![
        g(In(0), In(1)),
        g(In(0), Tmp(0)),
        g(In(1), Tmp(0)),
        g(Tmp(1), Tmp(2)),
    ]
}

#[derive(Clone, Debug, PartialEq)]
pub struct MappedNetlist {
    netlist: Netlist,
}

impl MappedNetlist {
    /// Wraps `n` after checking that it only contains 2-input NAND/NOR.
    pub fn new(n: Netlist) -> Result<Self> {
        if let Some(g) = n
            .gates()
            .iter()
            .find(|g| !matches!(g.kind, GateKind::Nand | GateKind::Nor))
        {
            return Err(Error::InvalidArgument(format!(
                "{} gate in a NAND/NOR-only netlist",
                g.kind
            )));
        }
        Ok(MappedNetlist { netlist: n })
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn into_netlist(self) -> Netlist {
        self.netlist
    }

    pub fn gate_count(&self) -> usize {
        self.netlist.gates().len()
    }

    /// Gates whose two inputs are the same net. Their kind does not affect
    /// the function, since NAND(a,a) = NOR(a,a) = NOT a.
    pub fn degenerate_count(&self) -> usize {
        self.netlist
            .gates()
            .iter()
            .filter(|g| g.inputs[0] == g.inputs[1])
            .count()
    }
}

/// Maps every gate through [`rewrite_table`], then merges identical gates
/// and cancels inverter pairs without changing any gate kind.
pub fn map_to_nand_nor(n: &Netlist) -> Result<MappedNetlist> {
    let table = rewrite_table();
    let needs_anchor = n.has_kind(GateKind::Const0) || n.has_kind(GateKind::Const1);
    if needs_anchor && n.num_inputs() == 0 {
        return Err(Error::Unsupported(
            "constant gates cannot be mapped in a netlist without primary inputs".into(),
        ));
    }

    let taken: HashSet<&str> = (0..n.num_nets())
        .map(|i| n.net_name(i))
        .chain(n.output_names())
        .collect();
    let mut b = Netlist::builder(n.name());
    let mut map: Vec<NetId> = Vec::with_capacity(n.num_nets());
    for name in n.input_names() {
        map.push(b.add_input(name)?);
    }
    let mut counter = 0usize;
    for (gi, g) in n.gates().iter().enumerate() {
        let name = n.net_name(n.gate_net(gi));
        let tpl = &table[&g.kind];
        let ins: Vec<NetId> = if g.inputs.is_empty() {
            vec![map[0]]
        } else {
            g.inputs.iter().map(|&i| map[i]).collect()
        };
        let mut tmps: Vec<NetId> = Vec::with_capacity(tpl.gates.len());
        let resolve = |o: Operand, tmps: &[NetId]| match o {
            Operand::In(i) => ins[i],
            Operand::Tmp(t) => tmps[t],
        };
        for (k, tg) in tpl.gates.iter().enumerate() {
            let is_root = tpl.result == Operand::Tmp(k);
            let gname = if is_root {
                name.to_owned()
            } else {
                loop {
                    counter += 1;
                    let cand = format!("{name}_m{counter}");
                    if !taken.contains(cand.as_str()) && !b.contains(&cand) {
                        break cand;
                    }
                }
            };
            let h = b.add_gate(gname, tg.kind, &[resolve(tg.a, &tmps), resolve(tg.b, &tmps)])?;
            tmps.push(h);
        }
        map.push(resolve(tpl.result, &tmps));
    }
    for o in n.outputs() {
        b.add_output(o.name.clone(), map[o.net])?;
    }
    let raw = b.build()?;
    let cleanup =
        OptEffort::with_passes(vec![Pass::DoubleInverter, Pass::Strash, Pass::DeadCode]);
    let cleaned = optimize(&raw, &cleanup, &HashSet::new())?;
    MappedNetlist::new(cleaned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{parse_bench, simulate_bits};

    fn eval_template(t: &Template, ins: &[bool]) -> bool {
        let mut tmps = Vec::new();
        let get = |o: Operand, tmps: &[bool]| match o {
            Operand::In(i) => ins[i],
            Operand::Tmp(k) => tmps[k],
        };
        for g in &t.gates {
            let v = g.kind.eval(&[get(g.a, &tmps), get(g.b, &tmps)]);
            tmps.push(v);
        }
        get(t.result, &tmps)
    }

    #[test]
    fn every_template_matches_its_kind() {
        for (kind, t) in rewrite_table() {
            let arity = kind.arity().max(1);
            for v in 0..1u32 << arity {
                let ins: Vec<bool> = (0..arity).map(|i| v >> i & 1 == 1).collect();
                let want = if kind.arity() == 0 {
                    kind.eval(&[])
                } else {
                    kind.eval(&ins)
                };
                assert_eq!(eval_template(&t, &ins), want, "{kind} on {ins:?}");
            }
            assert!(t
                .gates
                .iter()
                .all(|g| matches!(g.kind, GateKind::Nand | GateKind::Nor)));
        }
    }

    #[test]
    fn template_sizes() {
        let t = rewrite_table();
        assert_eq!(t[&GateKind::Not].gates.len(), 1);
        assert_eq!(t[&GateKind::Buf].gates.len(), 0);
        assert_eq!(t[&GateKind::And].gates.len(), 2);
        assert_eq!(t[&GateKind::Xor].gates.len(), 4);
    }

    #[test]
    fn and_maps_to_two_nands() {
        let n = parse_bench("t", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
        let m = map_to_nand_nor(&n).unwrap();
        assert_eq!(m.gate_count(), 2);
        for v in 0..4u32 {
            let bits = [v & 1 == 1, v & 2 == 2];
            assert_eq!(simulate_bits(m.netlist(), &bits), [bits[0] && bits[1]]);
        }
    }

    #[test]
    fn and_or_example_has_three_gates() {
        let n = parse_bench(
            "oc",
            "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(po)\nt = AND(a, b)\npo = OR(t, c)\n",
        )
        .unwrap();
        let m = map_to_nand_nor(&n).unwrap();
        assert_eq!(m.gate_count(), 3);
        assert_eq!(m.degenerate_count(), 1);
        for v in 0..8u32 {
            let bits: Vec<bool> = (0..3).map(|i| v >> i & 1 == 1).collect();
            assert_eq!(
                simulate_bits(m.netlist(), &bits)[0],
                (bits[0] && bits[1]) || bits[2]
            );
        }
        assert_eq!(m.netlist().output_names().collect::<Vec<_>>(), ["po"]);
    }

    #[test]
    fn constants_need_an_input() {
        let n = parse_bench("t", "OUTPUT(y)\ny = CONST1()\n").unwrap();
        assert!(map_to_nand_nor(&n).is_err());
        let n = parse_bench("t", "INPUT(a)\nOUTPUT(y)\nOUTPUT(z)\ny = CONST1()\nz = CONST0()\n")
            .unwrap();
        let m = map_to_nand_nor(&n).unwrap();
        for a in [false, true] {
            assert_eq!(simulate_bits(m.netlist(), &[a]), [true, false]);
        }
    }
}
