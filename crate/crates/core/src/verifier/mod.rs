//! Combinational equivalence checking.
//!
//! Small interfaces are enumerated exhaustively with 64-way bit-parallel
//! simulation. Otherwise the two circuits are joined into a miter, which is
//! first hit with random vectors, then SAT-swept and finally handed to the
//! CDCL solver. If the time budget runs out, a random-simulation fallback
//! can only ever report "inconclusive".

pub mod cnf;
pub mod sat;
mod sweep;

use std::collections::HashMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netlist::{exhaustive_mask, exhaustive_words, simulate_bits, GateKind, NetId, Netlist, WordSim};

pub use cnf::{parse_dimacs, to_cnf, write_dimacs, Cnf, Lit};
pub use sat::{sat_solve, SatResult, SolveLimits, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Equivalence {
    Equivalent,
    Inequivalent,
    /// No difference found, but no proof either.
    Inconclusive,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exhaustive,
    Sat,
    RandomSim,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivVerdict {
    pub result: Equivalence,
    pub method: Method,
    /// Input vector in the first circuit's PI order.
    pub witness: Option<Vec<bool>>,
    /// Outputs that differ under the witness.
    pub differing_outputs: Vec<String>,
    pub vectors_checked: u64,
}

impl EquivVerdict {
    pub fn is_equivalent(&self) -> bool {
        self.result == Equivalence::Equivalent
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub exhaustive_threshold: usize,
    pub time_limit: Duration,
    /// Conflict limit for each internal equivalence query while sweeping.
    pub query_conflicts: u64,
    pub random_vectors: u64,
    pub seed: u64,
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            exhaustive_threshold: 20,
            time_limit: Duration::from_secs(60),
            query_conflicts: 2_000,
            random_vectors: 100_000,
            seed: 0x5eed,
        }
    }
}

/// PI permutation from `a` to `b` and PO pairing, by name.
struct Interface {
    b_input_of_a: Vec<usize>,
    b_output_of_a: Vec<usize>,
}

fn match_interfaces(a: &Netlist, b: &Netlist) -> Result<Interface> {
    if a.num_inputs() != b.num_inputs() || a.num_outputs() != b.num_outputs() {
        return Err(Error::InterfaceMismatch(format!(
            "`{}` has {}/{} inputs/outputs, `{}` has {}/{}",
            a.name(),
            a.num_inputs(),
            a.num_outputs(),
            b.name(),
            b.num_inputs(),
            b.num_outputs()
        )));
    }
    let b_input_of_a = a
        .input_names()
        .map(|n| {
            b.input_index(n).ok_or_else(|| {
                Error::InterfaceMismatch(format!("input `{n}` missing from `{}`", b.name()))
            })
        })
        .collect::<Result<_>>()?;
    let b_output_of_a = a
        .output_names()
        .map(|n| {
            b.output_index(n).ok_or_else(|| {
                Error::InterfaceMismatch(format!("output `{n}` missing from `{}`", b.name()))
            })
        })
        .collect::<Result<_>>()?;
    Ok(Interface {
        b_input_of_a,
        b_output_of_a,
    })
}

/// Single-output netlist that is 1 exactly when some paired output of `a`
/// and `b` differs. Inputs follow `a`'s order.
pub fn build_miter(a: &Netlist, b: &Netlist) -> Result<Netlist> {
    let iface = match_interfaces(a, b)?;
    let mut m = Netlist::builder(format!("miter_{}_{}", a.name(), b.name()));
    let pis = a
        .input_names()
        .map(|n| m.add_input(n))
        .collect::<Result<Vec<NetId>>>()?;
    let mut b_pis = vec![0; pis.len()];
    for (ai, &bi) in iface.b_input_of_a.iter().enumerate() {
        b_pis[bi] = pis[ai];
    }
    let am = m.instantiate(a, "a_", &pis)?;
    let bm = m.instantiate(b, "b_", &b_pis)?;
    let mut acc: Option<NetId> = None;
    for (i, o) in a.outputs().iter().enumerate() {
        let ob = &b.outputs()[iface.b_output_of_a[i]];
        let x = m.add_fresh_gate(&format!("miter_x_{}", o.name), GateKind::Xor, &[am[o.net], bm[ob.net]])?;
        acc = Some(match acc {
            None => x,
            Some(prev) => m.add_fresh_gate("miter_or", GateKind::Or, &[prev, x])?,
        });
    }
    let out = match acc {
        Some(x) => x,
        None => m.add_fresh_gate("miter_zero", GateKind::Const0, &[])?,
    };
    let name = m.fresh_name("miter");
    m.add_output(name, out)?;
    m.build()
}

pub fn check_equiv(a: &Netlist, b: &Netlist, budget: &Budget) -> Result<EquivVerdict> {
    let iface = match_interfaces(a, b)?;
    if a.num_inputs() <= budget.exhaustive_threshold {
        return Ok(exhaustive(a, b, &iface));
    }
    let deadline = Instant::now() + budget.time_limit;
    let miter = build_miter(a, b)?;
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed);

    const QUICK_WORDS: u64 = 64;
    if let Some(w) = random_hit(&miter, QUICK_WORDS, &mut rng) {
        return confirm(a, b, &iface, w, Method::RandomSim, QUICK_WORDS * 64);
    }
    let limits = sweep::SweepLimits {
        deadline,
        query_conflicts: budget.query_conflicts,
        final_conflicts: None,
        sim_words: 16,
        seed: budget.seed,
    };
    match sweep::sweep(&miter, &limits) {
        sweep::SweepOutcome::Proven => Ok(EquivVerdict {
            result: Equivalence::Equivalent,
            method: Method::Sat,
            witness: None,
            differing_outputs: vec![],
            vectors_checked: QUICK_WORDS * 64,
        }),
        sweep::SweepOutcome::Counterexample(w) => confirm(a, b, &iface, w, Method::Sat, QUICK_WORDS * 64),
        sweep::SweepOutcome::Unknown => {
            log::warn!(
                "SAT budget exhausted on `{}` vs `{}`; falling back to random simulation",
                a.name(),
                b.name()
            );
            let words = budget.random_vectors.div_ceil(64).max(1);
            match random_hit(&miter, words, &mut rng) {
                Some(w) => confirm(a, b, &iface, w, Method::RandomSim, words * 64),
                None => Ok(EquivVerdict {
                    result: Equivalence::Inconclusive,
                    method: Method::RandomSim,
                    witness: None,
                    differing_outputs: vec![],
                    vectors_checked: words * 64,
                }),
            }
        }
    }
}

fn exhaustive(a: &Netlist, b: &Netlist, iface: &Interface) -> EquivVerdict {
    let n = a.num_inputs();
    let blocks = if n <= 6 { 1u64 } else { 1u64 << (n - 6) };
    let mask = exhaustive_mask(n);
    let mut sa = WordSim::new(a);
    let mut sb = WordSim::new(b);
    let mut b_words = vec![0u64; n];
    for block in 0..blocks {
        let words = exhaustive_words(n, block);
        for (ai, &bi) in iface.b_input_of_a.iter().enumerate() {
            b_words[bi] = words[ai];
        }
        sa.run(&words);
        sb.run(&b_words);
        let (oa, ob) = (sa.outputs(), sb.outputs());
        let diff = (0..oa.len())
            .map(|i| (oa[i] ^ ob[iface.b_output_of_a[i]]) & mask)
            .fold(0, |acc, d| acc | d);
        if diff != 0 {
            let p = block * 64 + u64::from(diff.trailing_zeros());
            let witness: Vec<bool> = (0..n).map(|j| p >> j & 1 == 1).collect();
            let differing = differing_outputs(a, b, iface, &witness);
            return EquivVerdict {
                result: Equivalence::Inequivalent,
                method: Method::Exhaustive,
                witness: Some(witness),
                differing_outputs: differing,
                vectors_checked: p + 1,
            };
        }
    }
    EquivVerdict {
        result: Equivalence::Equivalent,
        method: Method::Exhaustive,
        witness: None,
        differing_outputs: vec![],
        vectors_checked: 1u64 << n,
    }
}

/// First random vector that sets the miter output, if any.
fn random_hit(miter: &Netlist, words: u64, rng: &mut ChaCha8Rng) -> Option<Vec<bool>> {
    let mut sim = WordSim::new(miter);
    let po = miter.outputs()[0].net;
    for _ in 0..words {
        let ins: Vec<u64> = (0..miter.num_inputs()).map(|_| rng.gen()).collect();
        let hit = sim.run(&ins)[po];
        if hit != 0 {
            let bit = hit.trailing_zeros();
            return Some(ins.iter().map(|w| w >> bit & 1 == 1).collect());
        }
    }
    None
}

fn differing_outputs(a: &Netlist, b: &Netlist, iface: &Interface, witness: &[bool]) -> Vec<String> {
    let mut bw = vec![false; witness.len()];
    for (ai, &bi) in iface.b_input_of_a.iter().enumerate() {
        bw[bi] = witness[ai];
    }
    let (oa, ob) = (simulate_bits(a, witness), simulate_bits(b, &bw));
    a.output_names()
        .enumerate()
        .filter(|&(i, _)| oa[i] != ob[iface.b_output_of_a[i]])
        .map(|(_, n)| n.to_owned())
        .collect()
}

fn confirm(
    a: &Netlist,
    b: &Netlist,
    iface: &Interface,
    witness: Vec<bool>,
    method: Method,
    vectors: u64,
) -> Result<EquivVerdict> {
    let differing = differing_outputs(a, b, iface, &witness);
    if differing.is_empty() {
        return Err(Error::VerificationFailed(format!(
            "counterexample for `{}` vs `{}` does not replay",
            a.name(),
            b.name()
        )));
    }
    Ok(EquivVerdict {
        result: Equivalence::Inequivalent,
        method,
        witness: Some(witness),
        differing_outputs: differing,
        vectors_checked: vectors,
    })
}

/// Named view of a witness.
pub fn witness_assignment(n: &Netlist, witness: &[bool]) -> HashMap<String, bool> {
    n.input_names()
        .map(str::to_owned)
        .zip(witness.iter().copied())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    const OC: &str = "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(po)\nt = AND(a, b)\npo = OR(t, c)\n";
    const MAPPED: &str =
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nOUTPUT(po)\ng1 = NAND(a, b)\ng3 = NAND(c, c)\npo = NAND(g1, g3)\n";

    fn forced_sat() -> Budget {
        Budget {
            exhaustive_threshold: 0,
            ..Budget::default()
        }
    }

    #[test]
    fn self_equivalence() {
        let n = parse_bench("oc", OC).unwrap();
        assert!(check_equiv(&n, &n, &Budget::default()).unwrap().is_equivalent());
        let v = check_equiv(&n, &n, &forced_sat()).unwrap();
        assert_eq!((v.result, v.method), (Equivalence::Equivalent, Method::Sat));
    }

    #[test]
    fn mapped_form_is_equivalent_both_ways() {
        let a = parse_bench("oc", OC).unwrap();
        let b = parse_bench("m", MAPPED).unwrap();
        for budget in [Budget::default(), forced_sat()] {
            assert!(check_equiv(&a, &b, &budget).unwrap().is_equivalent());
            assert!(check_equiv(&b, &a, &budget).unwrap().is_equivalent());
        }
    }

    #[test]
    fn inequivalence_has_a_replayable_witness() {
        let a = parse_bench("oc", OC).unwrap();
        let b = parse_bench("x", &OC.replace("OR(t, c)", "XOR(t, c)")).unwrap();
        for budget in [Budget::default(), forced_sat()] {
            let v = check_equiv(&a, &b, &budget).unwrap();
            assert_eq!(v.result, Equivalence::Inequivalent);
            let w = v.witness.unwrap();
            assert_ne!(simulate_bits(&a, &w), simulate_bits(&b, &w));
            assert_eq!(v.differing_outputs, ["po"]);
        }
    }

    #[test]
    fn miter_of_complements_is_constant_one() {
        let a = parse_bench("a", "INPUT(x)\nOUTPUT(y)\ny = BUFF(x)\n").unwrap();
        let b = parse_bench("b", "INPUT(x)\nOUTPUT(y)\ny = NOT(x)\n").unwrap();
        let m = build_miter(&a, &b).unwrap();
        assert_eq!(m.num_outputs(), 1);
        for x in [false, true] {
            assert_eq!(simulate_bits(&m, &[x]), [true]);
        }
        let same = build_miter(&a, &a).unwrap();
        for x in [false, true] {
            assert_eq!(simulate_bits(&same, &[x]), [false]);
        }
    }

    #[test]
    fn miter_of_mapping_is_unsat() {
        let m = build_miter(
            &parse_bench("oc", OC).unwrap(),
            &parse_bench("m", MAPPED).unwrap(),
        )
        .unwrap();
        let cnf = to_cnf(&m).unwrap();
        assert_eq!(sat_solve(&cnf, SolveLimits::NONE, 0), SatResult::Unsat);
    }

    #[test]
    fn input_order_is_matched_by_name() {
        let a = parse_bench("a", "INPUT(x)\nINPUT(y)\nOUTPUT(z)\nz = AND(x, y)\n").unwrap();
        let b = parse_bench("b", "INPUT(y)\nINPUT(x)\nOUTPUT(z)\nnx = NOT(x)\nz = AND(nx, y)\n").unwrap();
        let v = check_equiv(&a, &b, &Budget::default()).unwrap();
        assert_eq!(v.result, Equivalence::Inequivalent);
        let v2 = check_equiv(&a, &b, &forced_sat()).unwrap();
        assert_eq!(v2.result, Equivalence::Inequivalent);
    }

    #[test]
    fn interface_mismatch_is_an_error() {
        let a = parse_bench("a", "INPUT(x)\nOUTPUT(y)\ny = NOT(x)\n").unwrap();
        let b = parse_bench("b", "INPUT(q)\nOUTPUT(y)\ny = NOT(q)\n").unwrap();
        assert!(matches!(check_equiv(&a, &b, &Budget::default()), Err(Error::InterfaceMismatch(_))));
    }
}
