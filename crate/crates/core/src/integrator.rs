//! Final-circuit assembly from the randomized EC and the CC, with one MUX
//! key gate per PO and side.
//!
//! A key gate selects between the buffered signal and its inverse:
//! `MUX2(k, s, !s)` when its K_MUX bit is 0, `MUX2(k, !s, s)` when it is 1.
//! Its output is therefore `s ^ k ^ K_MUX`, so the FC restores the OC
//! exactly when every key port carries `K_MUX ^ K_EC` (EC side) or
//! `K_MUX ^ K_CC` (CC side).

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corrector::{pair_outputs, KeyRole, KeyVector};
use crate::encryptor::{format_bits, parse_bits};
use crate::error::{Error, Result};
use crate::netlist::{GateKind, GateSpec, NetId, Netlist};
use crate::optimizer::{optimize, propagate_constants, OptEffort};

pub const KEY_PREFIX: &str = "keyinput";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Side {
    Ec,
    Cc,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyPort {
    pub key_port: String,
    pub po_name: String,
    pub side: Side,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MuxKeyGate {
    pub po_name: String,
    pub side: Side,
    pub key_port: String,
    /// Net name of the MUX2 output.
    pub mux_net: String,
    pub data0_inverted: bool,
}

#[derive(Clone, Debug)]
pub struct FinalCircuit {
    pub netlist: Netlist,
    pub key_map: Vec<KeyPort>,
    pub key_gates: Vec<MuxKeyGate>,
    pub k_fc: KeyVector,
}

impl FinalCircuit {
    pub fn key_ports(&self) -> Vec<String> {
        self.key_map.iter().map(|k| k.key_port.clone()).collect()
    }

    pub fn po_order(&self) -> Vec<String> {
        self.key_map
            .iter()
            .step_by(2)
            .map(|k| k.po_name.clone())
            .collect()
    }
}

pub fn key_port_name(i: usize) -> String {
    format!("{KEY_PREFIX}{i}")
}

/// `K_FC(EC) = K_MUX(EC) ^ K_EC` and `K_FC(CC) = K_MUX(CC) ^ K_CC`, per PO,
/// interleaved EC then CC.
pub fn derive_final_key(k_mux: &KeyVector, k_ec: &KeyVector, k_cc: &KeyVector) -> Result<KeyVector> {
    if k_ec.len() != k_cc.len() {
        return Err(Error::LengthMismatch {
            what: "K_CC bits",
            expected: k_ec.len(),
            actual: k_cc.len(),
        });
    }
    if k_mux.len() != 2 * k_ec.len() {
        return Err(Error::LengthMismatch {
            what: "K_MUX bits",
            expected: 2 * k_ec.len(),
            actual: k_mux.len(),
        });
    }
    let bits = (0..k_ec.len())
        .flat_map(|i| {
            [
                k_mux.bits[2 * i] ^ k_ec.bits[i],
                k_mux.bits[2 * i + 1] ^ k_cc.bits[i],
            ]
        })
        .collect();
    Ok(KeyVector::new(KeyRole::Fc, bits))
}

pub fn build_fc<R: Rng + ?Sized>(
    ec_final: &Netlist,
    cc: &Netlist,
    k_ec: &KeyVector,
    k_cc: &KeyVector,
    effort: &OptEffort,
    rng: &mut R,
) -> Result<(FinalCircuit, KeyVector)> {
    let k_mux = KeyVector::random(KeyRole::Mux, 2 * cc.num_outputs(), rng);
    let fc = build_fc_with_key(ec_final, cc, k_ec, k_cc, &k_mux, effort)?;
    Ok((fc, k_mux))
}

/// Unoptimized FC. PO order and names follow `cc`.
pub fn assemble_fc(
    ec_final: &Netlist,
    cc: &Netlist,
    k_mux: &KeyVector,
) -> Result<(Netlist, Vec<KeyPort>, Vec<MuxKeyGate>)> {
    let pairing = pair_outputs(cc, ec_final)?;
    let npo = cc.num_outputs();
    if k_mux.len() != 2 * npo {
        return Err(Error::LengthMismatch {
            what: "K_MUX bits",
            expected: 2 * npo,
            actual: k_mux.len(),
        });
    }
    let name = cc.name().strip_suffix("_cc").unwrap_or(cc.name());
    let mut b = Netlist::builder(format!("{name}_fc"));
    let mut pis = Vec::with_capacity(cc.num_inputs());
    for n in cc.input_names() {
        if n.starts_with(KEY_PREFIX) {
            return Err(Error::InterfaceMismatch(format!(
                "primary input `{n}` collides with the key port naming scheme"
            )));
        }
        pis.push(b.add_input(n)?);
    }
    let keys = (0..2 * npo)
        .map(|i| b.add_input(key_port_name(i)))
        .collect::<Result<Vec<NetId>>>()?;
    let ec_map = b.instantiate(ec_final, "ec_", &pis)?;
    let cc_map = b.instantiate(cc, "cc_", &pis)?;

    let mut key_map = Vec::with_capacity(2 * npo);
    let mut gates = Vec::with_capacity(2 * npo);
    let mut pos = Vec::with_capacity(npo);
    for (i, o) in cc.outputs().iter().enumerate() {
        let sources = [
            (Side::Ec, ec_map[ec_final.outputs()[pairing[i]].net]),
            (Side::Cc, cc_map[o.net]),
        ];
        let mut muxes = [0; 2];
        for (j, (side, sig)) in sources.into_iter().enumerate() {
            let k = 2 * i + j;
            let tag = match side {
                Side::Ec => "ec",
                Side::Cc => "cc",
            };
            let inv = b.add_fresh_gate(&format!("kg_inv_{tag}_{}", o.name), GateKind::Not, &[sig])?;
            let swapped = k_mux.bits[k];
            let data = if swapped { [inv, sig] } else { [sig, inv] };
            let mux_name = b.fresh_name(&format!("kg_mux_{tag}_{}", o.name));
            muxes[j] = b.add_gate(mux_name.clone(), GateKind::Mux2, &[keys[k], data[0], data[1]])?;
            key_map.push(KeyPort {
                key_port: key_port_name(k),
                po_name: o.name.clone(),
                side,
            });
            gates.push(MuxKeyGate {
                po_name: o.name.clone(),
                side,
                key_port: key_port_name(k),
                mux_net: mux_name,
                data0_inverted: swapped,
            });
        }
        pos.push(b.add_fresh_gate(&format!("fc_xor_{}", o.name), GateKind::Xor, &muxes)?);
    }
    for (o, x) in cc.outputs().iter().zip(pos) {
        b.add_output(o.name.clone(), x)?;
    }
    Ok((b.build()?, key_map, gates))
}

/// FC optimized with key ports and MUX key gates frozen.
pub fn build_fc_with_key(
    ec_final: &Netlist,
    cc: &Netlist,
    k_ec: &KeyVector,
    k_cc: &KeyVector,
    k_mux: &KeyVector,
    effort: &OptEffort,
) -> Result<FinalCircuit> {
    let k_fc = derive_final_key(k_mux, k_ec, k_cc)?;
    let (raw, key_map, key_gates) = assemble_fc(ec_final, cc, k_mux)?;
    let frozen: HashSet<String> = key_map
        .iter()
        .map(|k| k.key_port.clone())
        .chain(key_gates.iter().map(|g| g.mux_net.clone()))
        .collect();
    let netlist = optimize(&raw, effort, &frozen)?;
    Ok(FinalCircuit {
        netlist,
        key_map,
        key_gates,
        k_fc,
    })
}

/// Binds the key ports to `key` and simplifies; the result has the
/// circuit's own primary inputs only.
pub fn apply_key(fc: &Netlist, key_ports: &[String], key: &[bool]) -> Result<Netlist> {
    if key.len() != key_ports.len() {
        return Err(Error::LengthMismatch {
            what: "key bits",
            expected: key_ports.len(),
            actual: key.len(),
        });
    }
    let bindings: HashMap<String, bool> = key_ports.iter().cloned().zip(key.iter().copied()).collect();
    propagate_constants(fc, &bindings)
}

/// Replaces every `MUX2(s, d0, d1)` by `OR(AND(NOT s, d0), AND(s, d1))`.
pub fn lower_mux(n: &Netlist) -> Result<Netlist> {
    if !n.has_kind(GateKind::Mux2) {
        return Ok(n.clone());
    }
    let parts = n.to_parts();
    let mut taken: HashSet<String> = parts
        .inputs
        .iter()
        .cloned()
        .chain(parts.gates.iter().map(|g| g.output.clone()))
        .chain(parts.outputs.iter().map(|p| p.name.clone()))
        .collect();
    let mut fresh = |hint: String| -> String {
        let mut cand = hint.clone();
        let mut k = 0;
        while !taken.insert(cand.clone()) {
            k += 1;
            cand = format!("{hint}_{k}");
        }
        cand
    };
    let mut gates = Vec::with_capacity(parts.gates.len());
    for g in parts.gates.iter() {
        if g.kind != GateKind::Mux2 {
            gates.push(g.clone());
            continue;
        }
        let (s, d0, d1) = (&g.inputs[0], &g.inputs[1], &g.inputs[2]);
        let ns = fresh(format!("{}_ns", g.output));
        let a0 = fresh(format!("{}_a0", g.output));
        let a1 = fresh(format!("{}_a1", g.output));
        let spec = |output: &str, kind, inputs: &[&String]| GateSpec {
            output: output.to_owned(),
            kind,
            inputs: inputs.iter().map(|s| (*s).clone()).collect(),
        };
        gates.push(spec(&ns, GateKind::Not, &[s]));
        gates.push(spec(&a0, GateKind::And, &[&ns, d0]));
        gates.push(spec(&a1, GateKind::And, &[s, d1]));
        gates.push(spec(&g.output, GateKind::Or, &[&a0, &a1]));
    }
    Netlist::from_parts(crate::netlist::NetlistParts { gates, ..parts })
}

/// Key file contents. Key vectors are `0`/`1` strings, most significant
/// (first) bit leftmost.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyFile {
    pub benchmark: String,
    pub po_order: Vec<String>,
    pub k_ec: String,
    pub k_cc: String,
    pub k_mux: String,
    pub k_fc: String,
    pub key_port_map: Vec<KeyPort>,
}

impl KeyFile {
    pub fn new(
        benchmark: &str,
        fc: &FinalCircuit,
        k_ec: &KeyVector,
        k_cc: &KeyVector,
        k_mux: &KeyVector,
    ) -> Self {
        KeyFile {
            benchmark: benchmark.to_owned(),
            po_order: fc.po_order(),
            k_ec: format_bits(&k_ec.bits),
            k_cc: format_bits(&k_cc.bits),
            k_mux: format_bits(&k_mux.bits),
            k_fc: format_bits(&fc.k_fc.bits),
            key_port_map: fc.key_map.clone(),
        }
    }

    /// Parsed K_FC, checked against the port map.
    pub fn final_key(&self) -> Result<Vec<bool>> {
        let bits = parse_bits(&self.k_fc)?;
        if bits.len() != self.key_port_map.len() {
            return Err(Error::LengthMismatch {
                what: "k_fc bits in key file",
                expected: self.key_port_map.len(),
                actual: bits.len(),
            });
        }
        Ok(bits)
    }

    pub fn key_ports(&self) -> Vec<String> {
        self.key_port_map.iter().map(|k| k.key_port.clone()).collect()
    }
}
