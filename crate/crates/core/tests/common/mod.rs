#![allow(dead_code)]

use std::collections::HashSet;
use std::path::PathBuf;

use logenc::integrator::{apply_key, FinalCircuit};
use logenc::netlist::{parse_bench, simulate_bits};
use logenc::{GateKind, NetId, Netlist};

pub const ISCAS85: [&str; 11] = [
    "c17", "c432", "c499", "c880", "c1355", "c1908", "c2670", "c3540", "c5315", "c6288", "c7552",
];

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data")
}

pub fn iscas(name: &str) -> Netlist {
    let path = data_dir().join("iscas85").join(format!("{name}.bench"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_bench(name, &text).unwrap()
}

pub fn small(name: &str) -> Netlist {
    let path = data_dir().join("small").join(format!("{name}.bench"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_bench(name, &text).unwrap()
}

pub const SMALL: [&str; 5] = ["and_or", "maj3", "mul2", "adder4", "mux4"];

/// Builds a netlist from raw draws: `n_in` inputs, one gate per draw
/// `(kind, a, b, c)` whose inputs pick earlier nets modulo their count,
/// and up to `n_out` outputs taken from the last gates.
pub fn random_netlist(n_in: usize, specs: &[(u8, u16, u16, u16)], n_out: usize) -> Netlist {
    let mut b = Netlist::builder("rand");
    let mut nets: Vec<NetId> = (0..n_in).map(|i| b.add_input(format!("i{i}")).unwrap()).collect();
    for (j, &(k, x, y, z)) in specs.iter().enumerate() {
        let kind = GateKind::ALL[k as usize % GateKind::ALL.len()];
        let ins: Vec<NetId> = [x, y, z][..kind.arity()]
            .iter()
            .map(|&v| nets[v as usize % nets.len()])
            .collect();
        nets.push(b.add_gate(format!("g{j}"), kind, &ins).unwrap());
    }
    let gates = &nets[n_in..];
    let n_out = n_out.clamp(1, gates.len());
    for (j, &net) in gates[gates.len() - n_out..].iter().enumerate() {
        b.add_output(format!("o{j}"), net).unwrap();
    }
    b.build().unwrap()
}

/// All input vectors of `n`, in counting order with input 0 as the LSB.
pub fn all_vectors(n: &Netlist) -> impl Iterator<Item = Vec<bool>> + '_ {
    let k = n.num_inputs();
    (0..1u64 << k).map(move |v| (0..k).map(|i| v >> i & 1 == 1).collect())
}

/// Brute-force functional equality, matching inputs and outputs by name.
pub fn same_function(a: &Netlist, b: &Netlist) -> bool {
    let names: Vec<&str> = a.input_names().collect();
    let perm: Vec<usize> = b.input_names().map(|n| names.iter().position(|m| *m == n).unwrap()).collect();
    let out_perm: Vec<usize> = a.output_names().map(|n| b.output_index(n).unwrap()).collect();
    all_vectors(a).all(|v| {
        let vb: Vec<bool> = perm.iter().map(|&i| v[i]).collect();
        let ya = simulate_bits(a, &v);
        let yb = simulate_bits(b, &vb);
        out_perm.iter().enumerate().all(|(i, &j)| ya[i] == yb[j])
    })
}

/// Flips each key bit of a locked run alone, then each PO's pair, and
/// checks the restored circuit against the OC on every input vector.
pub fn check_sensitivity(oc: &Netlist, fc: &FinalCircuit) -> Result<(), String> {
    let ports = fc.key_ports();
    let truth = &fc.k_fc.bits;
    let restore = |key: &[bool]| apply_key(&fc.netlist, &ports, key).map_err(|e| e.to_string());
    let oc_rows: Vec<Vec<bool>> = all_vectors(oc).map(|v| simulate_bits(oc, &v)).collect();
    let differing = |n: &Netlist| -> Vec<HashSet<String>> {
        let perm: Vec<usize> = oc.input_names().map(|p| n.input_index(p).unwrap()).collect();
        all_vectors(oc)
            .zip(&oc_rows)
            .map(|(v, want)| {
                let mut vb = vec![false; n.num_inputs()];
                for (i, &j) in perm.iter().enumerate() {
                    vb[j] = v[i];
                }
                let got = simulate_bits(n, &vb);
                oc.output_names()
                    .enumerate()
                    .filter(|(i, name)| got[n.output_index(name).unwrap()] != want[*i])
                    .map(|(_, name)| name.to_owned())
                    .collect()
            })
            .collect()
    };
    for (j, port) in fc.key_map.iter().enumerate() {
        let mut key = truth.clone();
        key[j] = !key[j];
        let diff = differing(&restore(&key)?);
        let expect = HashSet::from([port.po_name.clone()]);
        if let Some(row) = diff.iter().position(|d| *d != expect) {
            return Err(format!("bit {j} ({}) on vector {row}: differing {:?}", port.key_port, diff[row]));
        }
    }
    for po in oc.output_names() {
        let mut key = truth.clone();
        for (j, port) in fc.key_map.iter().enumerate() {
            if port.po_name == po {
                key[j] = !key[j];
            }
        }
        if differing(&restore(&key)?).iter().any(|d| !d.is_empty()) {
            return Err(format!("flipping both bits of `{po}` does not cancel"));
        }
    }
    Ok(())
}
