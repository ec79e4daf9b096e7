//! Correction circuit and EC output randomization.

use std::collections::HashSet;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encryptor::format_bits;
use crate::error::{Error, Result};
use crate::netlist::{GateKind, GateSpec, NetId, Netlist};
use crate::optimizer::{optimize, optimize_traced, OptEffort, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KeyRole {
    #[serde(rename = "K_EC")]
    Ec,
    #[serde(rename = "K_CC")]
    Cc,
    #[serde(rename = "K_MUX")]
    Mux,
    #[serde(rename = "K_FC")]
    Fc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyVector {
    pub role: KeyRole,
    pub bits: Vec<bool>,
}

impl KeyVector {
    pub fn new(role: KeyRole, bits: Vec<bool>) -> Self {
        KeyVector { role, bits }
    }

    pub fn random<R: Rng + ?Sized>(role: KeyRole, len: usize, rng: &mut R) -> Self {
        KeyVector {
            role,
            bits: (0..len).map(|_| rng.gen()).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    fn expect_len(&self, len: usize, what: &'static str) -> Result<()> {
        if self.bits.len() != len {
            return Err(Error::LengthMismatch {
                what,
                expected: len,
                actual: self.bits.len(),
            });
        }
        Ok(())
    }
}

impl fmt::Display for KeyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_bits(&self.bits))
    }
}

/// Gate counts of the OC-derived and EC-derived cones inside an optimized
/// CC, and how many gates both cones share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entanglement {
    pub oc_cone_gates: usize,
    pub ec_cone_gates: usize,
    pub shared_gates: usize,
}

#[derive(Clone, Debug)]
pub struct CorrectionCircuit {
    pub cc: Netlist,
    pub k_cc: KeyVector,
    pub entanglement: Entanglement,
}

/// Checks that both netlists have the same PI list and the same PO names,
/// and returns the index of each of `a`'s POs in `b`.
pub fn pair_outputs(a: &Netlist, b: &Netlist) -> Result<Vec<usize>> {
    if !a.input_names().eq(b.input_names()) {
        return Err(Error::InterfaceMismatch(format!(
            "`{}` and `{}` have different primary inputs",
            a.name(),
            b.name()
        )));
    }
    if a.num_outputs() != b.num_outputs() {
        return Err(Error::InterfaceMismatch(format!(
            "`{}` has {} outputs, `{}` has {}",
            a.name(),
            a.num_outputs(),
            b.name(),
            b.num_outputs()
        )));
    }
    a.output_names()
        .map(|name| {
            b.output_index(name).ok_or_else(|| {
                Error::InterfaceMismatch(format!("output `{name}` missing from `{}`", b.name()))
            })
        })
        .collect()
}

pub fn build_cc<R: Rng + ?Sized>(
    oc: &Netlist,
    ec: &Netlist,
    effort: &OptEffort,
    rng: &mut R,
) -> Result<CorrectionCircuit> {
    let k_cc = KeyVector::random(KeyRole::Cc, oc.num_outputs(), rng);
    build_cc_with_key(oc, ec, &k_cc, effort)
}

/// Flat, unoptimized CC: per PO, `oc ^ ec` or `oc ^ !ec` when the key bit
/// is set. OC nets are prefixed `oc_`, EC nets `ec_`.
pub fn assemble_cc(oc: &Netlist, ec: &Netlist, k_cc: &KeyVector) -> Result<Netlist> {
    let pairing = pair_outputs(oc, ec)?;
    k_cc.expect_len(oc.num_outputs(), "K_CC bits")?;
    let mut b = Netlist::builder(format!("{}_cc", oc.name()));
    let pis = oc
        .input_names()
        .map(|n| b.add_input(n))
        .collect::<Result<Vec<NetId>>>()?;
    let oc_map = b.instantiate(oc, "oc_", &pis)?;
    let ec_map = b.instantiate(ec, "ec_", &pis)?;
    let mut pos = Vec::with_capacity(oc.num_outputs());
    for (i, o) in oc.outputs().iter().enumerate() {
        let mut e = ec_map[ec.outputs()[pairing[i]].net];
        if k_cc.bits[i] {
            e = b.add_fresh_gate(&format!("cc_inv_{}", o.name), GateKind::Not, &[e])?;
        }
        let x = b.add_fresh_gate(&format!("cc_xor_{}", o.name), GateKind::Xor, &[oc_map[o.net], e])?;
        pos.push(x);
    }
    for (o, x) in oc.outputs().iter().zip(pos) {
        b.add_output(o.name.clone(), x)?;
    }
    b.build()
}

/// CC with a given K_CC, optimized as one flat netlist.
pub fn build_cc_with_key(
    oc: &Netlist,
    ec: &Netlist,
    k_cc: &KeyVector,
    effort: &OptEffort,
) -> Result<CorrectionCircuit> {
    let flat = assemble_cc(oc, ec, k_cc)?;
    let (cc, map) = optimize_traced(&flat, effort, &HashSet::new())?;
    let roots = |prefix: &str, n: &Netlist| -> Vec<NetId> {
        n.outputs()
            .iter()
            .filter_map(|o| match map.get(&format!("{prefix}{}", n.net_name(o.net))) {
                Some(Target::Net(name)) => cc.net_id(name),
                _ => None,
            })
            .collect()
    };
    let oc_mask = cc.cone_mask(roots("oc_", oc));
    let ec_mask = cc.cone_mask(roots("ec_", ec));
    let gate_nets = cc.num_inputs()..cc.num_nets();
    let entanglement = Entanglement {
        oc_cone_gates: gate_nets.clone().filter(|&i| oc_mask[i]).count(),
        ec_cone_gates: gate_nets.clone().filter(|&i| ec_mask[i]).count(),
        shared_gates: gate_nets.filter(|&i| oc_mask[i] && ec_mask[i]).count(),
    };
    Ok(CorrectionCircuit {
        cc,
        k_cc: k_cc.clone(),
        entanglement,
    })
}

pub fn randomize_ec<R: Rng + ?Sized>(
    ec: &Netlist,
    effort: &OptEffort,
    rng: &mut R,
) -> Result<(Netlist, KeyVector)> {
    let k_ec = KeyVector::random(KeyRole::Ec, ec.num_outputs(), rng);
    let out = randomize_ec_with_key(ec, &k_ec, effort)?;
    Ok((out, k_ec))
}

pub fn randomize_ec_with_key(ec: &Netlist, k_ec: &KeyVector, effort: &OptEffort) -> Result<Netlist> {
    let raw = invert_outputs(ec, &k_ec.bits)?;
    optimize(&raw, effort, &HashSet::new())
}

/// Inserts a NOT in front of every PO whose flag is set. The NOT takes over
/// the port's name; a driver of the same name is renamed.
pub fn invert_outputs(n: &Netlist, flags: &[bool]) -> Result<Netlist> {
    if flags.len() != n.num_outputs() {
        return Err(Error::LengthMismatch {
            what: "output inversion flags",
            expected: n.num_outputs(),
            actual: flags.len(),
        });
    }
    let mut parts = n.to_parts();
    let mut taken: HashSet<String> = parts
        .inputs
        .iter()
        .cloned()
        .chain(parts.gates.iter().map(|g| g.output.clone()))
        .chain(parts.outputs.iter().map(|p| p.name.clone()))
        .collect();
    let fresh = |taken: &mut HashSet<String>, hint: &str| -> String {
        let mut k = 0usize;
        loop {
            let cand = format!("{hint}_b{k}");
            if taken.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    };
    for (i, &flag) in flags.iter().enumerate() {
        if !flag {
            continue;
        }
        let port = parts.outputs[i].name.clone();
        let mut driver = parts.outputs[i].net.clone();
        if driver == port {
            if n.input_index(&driver).is_some() {
                return Err(Error::Unsupported(format!(
                    "output `{port}` is a primary input and cannot be re-driven"
                )));
            }
            let renamed = fresh(&mut taken, &driver);
            for g in &mut parts.gates {
                if g.output == driver {
                    g.output = renamed.clone();
                }
                for inp in &mut g.inputs {
                    if *inp == driver {
                        *inp = renamed.clone();
                    }
                }
            }
            for p in &mut parts.outputs {
                if p.net == driver {
                    p.net = renamed.clone();
                }
            }
            driver = renamed;
        }
        parts.gates.push(GateSpec {
            output: port.clone(),
            kind: GateKind::Not,
            inputs: vec![driver],
        });
        parts.outputs[i].net = port;
    }
    Netlist::from_parts(parts)
}
