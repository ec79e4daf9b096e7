//! ISCAS BENCH format.
//!
//! Accepted dialect: `# comment`, `INPUT(n)`, `OUTPUT(n)` and
//! `n = KIND(a, b, ...)`. `NOT`/`INV` and `BUF`/`BUFF` are synonyms.
//! AND/OR/NAND/NOR/XOR/XNOR with more than two inputs are decomposed into
//! left-deep trees of 2-input gates; the intermediate nets are named
//! `<net>_d<k>`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use super::{is_valid_name, GateKind, GateSpec, Netlist, NetlistParts, PortSpec};
use crate::error::{Error, Result};

struct RawGate {
    output: String,
    kind: GateKind,
    inputs: Vec<String>,
    line: usize,
}

fn parse_name(s: &str, line: usize) -> Result<String> {
    let s = s.trim();
    if !is_valid_name(s) {
        return Err(Error::Syntax {
            line,
            msg: format!("invalid net name `{s}`"),
        });
    }
    Ok(s.to_owned())
}

/// Splits `KIND(args)` into its head and the comma separated argument list.
fn split_call(s: &str, line: usize) -> Result<(&str, Vec<&str>)> {
    let s = s.trim();
    let open = s.find('(').ok_or_else(|| Error::Syntax {
        line,
        msg: format!("expected `(` in `{s}`"),
    })?;
    if !s.ends_with(')') {
        return Err(Error::Syntax {
            line,
            msg: format!("expected `)` at end of `{s}`"),
        });
    }
    let head = s[..open].trim();
    let body = s[open + 1..s.len() - 1].trim();
    let args = if body.is_empty() {
        Vec::new()
    } else {
        body.split(',').map(str::trim).collect()
    };
    Ok((head, args))
}

pub fn parse_bench(name: &str, text: &str) -> Result<Netlist> {
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    let mut gates: Vec<RawGate> = Vec::new();
    let mut def_line: HashMap<String, usize> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(eq) = content.find('=') {
            let out = parse_name(&content[..eq], line)?;
            let (head, args) = split_call(&content[eq + 1..], line)?;
            let kind = GateKind::from_bench_name(head).ok_or_else(|| Error::Syntax {
                line,
                msg: format!("unknown gate type `{head}`"),
            })?;
            let args = args
                .into_iter()
                .map(|a| parse_name(a, line))
                .collect::<Result<Vec<_>>>()?;
            let ok = match kind {
                GateKind::And
                | GateKind::Nand
                | GateKind::Or
                | GateKind::Nor
                | GateKind::Xor
                | GateKind::Xnor => args.len() >= 2,
                k => args.len() == k.arity(),
            };
            if !ok {
                return Err(Error::Syntax {
                    line,
                    msg: format!("{kind} cannot take {} input(s)", args.len()),
                });
            }
            if def_line.insert(out.clone(), line).is_some() {
                return Err(Error::DuplicateDefinition { line, net: out });
            }
            gates.push(RawGate {
                output: out,
                kind,
                inputs: args,
                line,
            });
        } else {
            let (head, args) = split_call(content, line)?;
            if args.len() != 1 {
                return Err(Error::Syntax {
                    line,
                    msg: format!("{head} takes exactly one net"),
                });
            }
            let net = parse_name(args[0], line)?;
            match head.to_ascii_uppercase().as_str() {
                "INPUT" => {
                    if def_line.insert(net.clone(), line).is_some() {
                        return Err(Error::DuplicateDefinition { line, net });
                    }
                    inputs.push(net);
                }
                "OUTPUT" => outputs.push((net, line)),
                _ => {
                    return Err(Error::Syntax {
                        line,
                        msg: format!("unknown declaration `{head}`"),
                    })
                }
            }
        }
    }

    for g in &gates {
        if let Some(missing) = g.inputs.iter().find(|i| !def_line.contains_key(*i)) {
            return Err(Error::UndefinedNet {
                line: g.line,
                net: missing.clone(),
            });
        }
    }
    let mut seen = HashSet::new();
    for (o, line) in &outputs {
        if !def_line.contains_key(o) {
            return Err(Error::UndefinedNet {
                line: *line,
                net: o.clone(),
            });
        }
        if !seen.insert(o.as_str()) {
            return Err(Error::DuplicateDefinition {
                line: *line,
                net: o.clone(),
            });
        }
    }

    let mut taken: HashSet<String> = def_line.keys().cloned().collect();
    let mut specs = Vec::with_capacity(gates.len());
    for g in gates {
        decompose(g, &mut taken, &mut specs);
    }

    let parts = NetlistParts {
        name: name.to_owned(),
        inputs,
        outputs: outputs
            .into_iter()
            .map(|(o, _)| PortSpec {
                name: o.clone(),
                net: o,
            })
            .collect(),
        gates: specs,
    };
    Netlist::from_parts(parts)
}

fn decompose(g: RawGate, taken: &mut HashSet<String>, out: &mut Vec<GateSpec>) {
    if g.inputs.len() <= 2 || g.kind.arity() != 2 {
        out.push(GateSpec {
            output: g.output,
            kind: g.kind,
            inputs: g.inputs,
        });
        return;
    }
    // Inner nodes use the non-inverting form; only the root inverts.
    let inner = match g.kind {
        GateKind::And | GateKind::Nand => GateKind::And,
        GateKind::Or | GateKind::Nor => GateKind::Or,
        _ => GateKind::Xor,
    };
    let n = g.inputs.len();
    let mut acc = g.inputs[0].clone();
    for (k, next) in g.inputs[1..n - 1].iter().enumerate() {
        let mut name = format!("{}_d{}", g.output, k + 1);
        while taken.contains(&name) {
            name.push('_');
        }
        taken.insert(name.clone());
        out.push(GateSpec {
            output: name.clone(),
            kind: inner,
            inputs: vec![acc, next.clone()],
        });
        acc = name;
    }
    out.push(GateSpec {
        output: g.output,
        kind: g.kind,
        inputs: vec![acc, g.inputs[n - 1].clone()],
    });
}

/// Serializes to BENCH. Ports whose name differs from their driving net are
/// emitted as an extra `BUFF`. MUX2 gates must be lowered first.
pub fn write_bench(n: &Netlist) -> Result<String> {
    if n.has_kind(GateKind::Mux2) {
        return Err(Error::Unsupported(
            "BENCH export requires MUX2 gates to be lowered first".into(),
        ));
    }
    let mut s = String::new();
    let _ = writeln!(s, "# {}", n.name());
    let _ = writeln!(
        s,
        "# {} inputs, {} outputs, {} gates\n",
        n.num_inputs(),
        n.num_outputs(),
        n.gates().len()
    );
    for i in n.input_names() {
        let _ = writeln!(s, "INPUT({i})");
    }
    s.push('\n');
    for o in n.output_names() {
        let _ = writeln!(s, "OUTPUT({o})");
    }
    s.push('\n');
    for (i, g) in n.gates().iter().enumerate() {
        let ins: Vec<&str> = g.inputs.iter().map(|&x| n.net_name(x)).collect();
        let _ = writeln!(
            s,
            "{} = {}({})",
            n.net_name(n.gate_net(i)),
            g.kind.bench_name(),
            ins.join(", ")
        );
    }
    for o in n.outputs() {
        if n.net_name(o.net) != o.name {
            let _ = writeln!(s, "{} = BUFF({})", o.name, n.net_name(o.net));
        }
    }
    Ok(s)
}
