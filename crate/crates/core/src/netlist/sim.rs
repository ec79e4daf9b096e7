//! Logic simulation, single-vector and 64-way bit-parallel.

use std::collections::HashMap;

use super::Netlist;
use crate::error::{Error, Result};

/// Evaluates every primary output under a named input assignment.
pub fn simulate(n: &Netlist, assignment: &HashMap<String, bool>) -> Result<Vec<(String, bool)>> {
    let mut bits = Vec::with_capacity(n.num_inputs());
    for name in n.input_names() {
        let v = assignment
            .get(name)
            .copied()
            .ok_or_else(|| Error::MissingAssignment(name.to_owned()))?;
        bits.push(v);
    }
    let out = simulate_bits(n, &bits);
    Ok(n.output_names().map(str::to_owned).zip(out).collect())
}

/// Evaluates with inputs given positionally, in primary-input order.
pub fn simulate_bits(n: &Netlist, inputs: &[bool]) -> Vec<bool> {
    assert_eq!(inputs.len(), n.num_inputs(), "one value per primary input");
    let mut vals = Vec::with_capacity(n.num_nets());
    vals.extend_from_slice(inputs);
    let mut buf = [false; 3];
    for g in n.gates() {
        for (slot, &i) in buf.iter_mut().zip(&g.inputs) {
            *slot = vals[i];
        }
        vals.push(g.kind.eval(&buf[..g.inputs.len()]));
    }
    n.outputs().iter().map(|o| vals[o.net]).collect()
}

/// Reusable 64-pattern simulator. `run` evaluates all nets for one word of
/// patterns per input.
pub struct WordSim<'a> {
    n: &'a Netlist,
    vals: Vec<u64>,
}

impl<'a> WordSim<'a> {
    pub fn new(n: &'a Netlist) -> Self {
        WordSim {
            n,
            vals: vec![0; n.num_nets()],
        }
    }

    pub fn run(&mut self, inputs: &[u64]) -> &[u64] {
        let ni = self.n.num_inputs();
        assert_eq!(inputs.len(), ni);
        self.vals[..ni].copy_from_slice(inputs);
        for (gi, g) in self.n.gates().iter().enumerate() {
            let a = g.inputs.first().map_or(0, |&i| self.vals[i]);
            let b = g.inputs.get(1).map_or(0, |&i| self.vals[i]);
            let c = g.inputs.get(2).map_or(0, |&i| self.vals[i]);
            self.vals[ni + gi] = g.kind.eval_words(a, b, c);
        }
        &self.vals
    }

    pub fn outputs(&self) -> Vec<u64> {
        self.n.outputs().iter().map(|o| self.vals[o.net]).collect()
    }
}

/// Input words for block `block` of an exhaustive enumeration over
/// `num_inputs` variables. Pattern `p` (bit `p % 64` of block `p / 64`)
/// assigns bit `j` of `p` to input `j`. Blocks needed: `max(1, 2^n / 64)`.
pub fn exhaustive_words(num_inputs: usize, block: u64) -> Vec<u64> {
    const LOW: [u64; 6] = [
        0xAAAA_AAAA_AAAA_AAAA,
        0xCCCC_CCCC_CCCC_CCCC,
        0xF0F0_F0F0_F0F0_F0F0,
        0xFF00_FF00_FF00_FF00,
        0xFFFF_0000_FFFF_0000,
        0xFFFF_FFFF_0000_0000,
    ];
    (0..num_inputs)
        .map(|j| {
            if j < 6 {
                LOW[j]
            } else if (block >> (j - 6)) & 1 == 1 {
                !0
            } else {
                0
            }
        })
        .collect()
}

/// Mask of the patterns that are meaningful in one exhaustive block.
pub fn exhaustive_mask(num_inputs: usize) -> u64 {
    if num_inputs >= 6 {
        !0
    } else {
        (1u64 << (1 << num_inputs)) - 1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    #[test]
    fn nand_truth() {
        let n = parse_bench("t", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = NAND(a, b)\n").unwrap();
        let asg: HashMap<String, bool> = [("a".to_string(), true), ("b".to_string(), true)].into();
        assert_eq!(simulate(&n, &asg).unwrap(), vec![("y".to_string(), false)]);
    }

    #[test]
    fn xor_truth_table() {
        let n = parse_bench("t", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = XOR(a, b)\n").unwrap();
        let table: Vec<bool> = [(false, false), (false, true), (true, false), (true, true)]
            .iter()
            .map(|&(a, b)| simulate_bits(&n, &[a, b])[0])
            .collect();
        assert_eq!(table, [false, true, true, false]);
    }

    #[test]
    fn and_or_circuit() {
        let text = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(po)\nt = AND(a, b)\npo = OR(t, c)\n";
        let n = parse_bench("oc", text).unwrap();
        let asg: HashMap<String, bool> =
            [("a", true), ("b", false), ("c", true)].map(|(k, v)| (k.to_string(), v)).into();
        assert!(simulate(&n, &asg).unwrap()[0].1);
    }

    #[test]
    fn missing_assignment_is_an_error() {
        let n = parse_bench("t", "INPUT(a)\nINPUT(b)\nOUTPUT(y)\ny = AND(a, b)\n").unwrap();
        let asg: HashMap<String, bool> = [("a".to_string(), true)].into();
        assert!(matches!(simulate(&n, &asg), Err(Error::MissingAssignment(ref s)) if s == "b"));
    }

    #[test]
    fn word_sim_matches_scalar_sim() {
        let text = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(y)\nt = XOR(a, b)\ny = MUX(c, t, a)\n";
        let n = parse_bench("t", text).unwrap();
        let mut sim = WordSim::new(&n);
        sim.run(&exhaustive_words(3, 0));
        let word = sim.outputs()[0];
        for p in 0..8u64 {
            let bits: Vec<bool> = (0..3).map(|j| p >> j & 1 == 1).collect();
            assert_eq!(word >> p & 1 == 1, simulate_bits(&n, &bits)[0]);
        }
    }
}
