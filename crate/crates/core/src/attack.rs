//! Oracle-less key guessing against locked netlists, and AC/KPA scoring.
//!
//! The attacks only ever see netlists and port names. Ground truth enters
//! through [`Guesses::score`] once guessing is done.

use std::cmp::Ordering;
use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrector::{assemble_cc, invert_outputs, pair_outputs, KeyRole, KeyVector};
use crate::error::{Error, Result};
use crate::integrator::KEY_PREFIX;
use crate::netlist::{GateKind, Netlist};
use crate::optimizer::{optimize, propagate_constants, OptEffort};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackMode {
    Baseline,
    Resynthesis,
    WorstCaseEc,
    WorstCaseCc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Guess {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "unresolved")]
    Unresolved,
}

impl Guess {
    pub fn value(self) -> Option<bool> {
        match self {
            Guess::Zero => Some(false),
            Guess::One => Some(true),
            Guess::Unresolved => None,
        }
    }

    pub fn complement(self) -> Guess {
        match self {
            Guess::Zero => Guess::One,
            Guess::One => Guess::Zero,
            Guess::Unresolved => Guess::Unresolved,
        }
    }
}

impl From<bool> for Guess {
    fn from(b: bool) -> Guess {
        if b {
            Guess::One
        } else {
            Guess::Zero
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BitGuess {
    pub guess: Guess,
    /// First nonzero component of `features(1) - features(0)`.
    pub feature_delta: i64,
}

/// Structural observables of a simplified netlist, compared
/// lexicographically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Features {
    pub gate_count: usize,
    pub literal_count: usize,
    pub depth: usize,
}

impl Features {
    pub fn of(n: &Netlist) -> Features {
        let s = n.stats();
        Features {
            gate_count: s.gate_count,
            literal_count: s.literal_count,
            depth: s.depth,
        }
    }
}

/// The decision rule shared by every attack: a wrong key value lets more
/// logic collapse, so the value whose hardcoding keeps the larger netlist
/// is guessed. Equal features leave the bit unresolved.
pub fn decide(f0: Features, f1: Features) -> BitGuess {
    let d = |a: usize, b: usize| b as i64 - a as i64;
    let delta = [
        d(f0.gate_count, f1.gate_count),
        d(f0.literal_count, f1.literal_count),
        d(f0.depth, f1.depth),
    ]
    .into_iter()
    .find(|&x| x != 0)
    .unwrap_or(0);
    let guess = match f1.cmp(&f0) {
        Ordering::Greater => Guess::One,
        Ordering::Less => Guess::Zero,
        Ordering::Equal => Guess::Unresolved,
    };
    BitGuess {
        guess,
        feature_delta: delta,
    }
}

/// Key guesses before scoring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Guesses {
    pub mode: AttackMode,
    pub per_bit: Vec<BitGuess>,
    pub recipes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    Direct,
    Complement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub mode: AttackMode,
    pub per_bit: Vec<BitGuess>,
    /// Percent of all key bits guessed correctly.
    pub ac: f64,
    /// Percent of resolved key bits guessed correctly; absent when none
    /// was resolved.
    pub kpa: Option<f64>,
    /// Which of the two complementary guess sets the metrics refer to.
    pub polarity: Polarity,
    pub recipes: Vec<String>,
}

impl Guesses {
    pub fn guesses(&self) -> Vec<Guess> {
        self.per_bit.iter().map(|b| b.guess).collect()
    }

    /// Scores the guesses and their complement against `truth`, keeping
    /// whichever set scores higher.
    pub fn score(self, truth: &[bool]) -> Result<AttackReport> {
        let direct = self.guesses();
        let flipped: Vec<Guess> = direct.iter().map(|g| g.complement()).collect();
        let (ac, kpa) = compute_metrics(&direct, truth)?;
        let (ac_c, kpa_c) = compute_metrics(&flipped, truth)?;
        let better = ac_c > ac || (ac_c == ac && kpa_c.unwrap_or(0.0) > kpa.unwrap_or(0.0));
        let (ac, kpa, polarity) = if better {
            (ac_c, kpa_c, Polarity::Complement)
        } else {
            (ac, kpa, Polarity::Direct)
        };
        Ok(AttackReport {
            mode: self.mode,
            per_bit: self.per_bit,
            ac,
            kpa,
            polarity,
            recipes: self.recipes,
        })
    }
}

/// Accuracy over all bits and over resolved bits, both in percent.
pub fn compute_metrics(guesses: &[Guess], truth: &[bool]) -> Result<(f64, Option<f64>)> {
    if guesses.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "key guesses",
            expected: truth.len(),
            actual: guesses.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidArgument("no key bits to score".into()));
    }
    let mut resolved = 0usize;
    let mut correct = 0usize;
    for (g, &t) in guesses.iter().zip(truth) {
        if let Some(v) = g.value() {
            resolved += 1;
            correct += usize::from(v == t);
        }
    }
    let ac = correct as f64 / truth.len() as f64 * 100.0;
    let kpa = (resolved > 0).then(|| correct as f64 / resolved as f64 * 100.0);
    Ok((ac, kpa))
}

/// Key ports of a netlist, `keyinput<i>` ordered by `i`.
pub fn key_ports_by_prefix(n: &Netlist) -> Vec<String> {
    let mut ports: Vec<(usize, &str)> = n
        .input_names()
        .filter_map(|name| {
            let idx = name.strip_prefix(KEY_PREFIX)?.parse().ok()?;
            Some((idx, name))
        })
        .collect();
    ports.sort_unstable();
    ports.into_iter().map(|(_, n)| n.to_owned()).collect()
}

fn check_ports(fc: &Netlist, key_ports: &[String]) -> Result<()> {
    if key_ports.is_empty() {
        return Err(Error::InvalidArgument(format!("`{}` has no key ports", fc.name())));
    }
    let mut seen = HashSet::new();
    for p in key_ports {
        if fc.input_index(p).is_none() {
            return Err(Error::InvalidArgument(format!(
                "key port `{p}` is not a primary input of `{}`",
                fc.name()
            )));
        }
        if !seen.insert(p) {
            return Err(Error::InvalidArgument(format!("key port `{p}` listed twice")));
        }
    }
    Ok(())
}

fn hardcoded(fc: &Netlist, port: &str, value: bool) -> Result<Features> {
    let bound = propagate_constants(fc, &HashMap::from([(port.to_owned(), value)]))?;
    let simplified = optimize(&bound, &OptEffort::standard(), &HashSet::new())?;
    Ok(Features::of(&simplified))
}

/// Hardcodes each key bit to 0 and to 1 in turn, simplifies, and compares
/// the resulting features.
pub fn scope_baseline(fc: &Netlist, key_ports: &[String]) -> Result<Guesses> {
    check_ports(fc, key_ports)?;
    let per_bit = key_ports
        .par_iter()
        .map(|p| Ok(decide(hardcoded(fc, p, false)?, hardcoded(fc, p, true)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Guesses {
        mode: AttackMode::Baseline,
        per_bit,
        recipes: Vec::new(),
    })
}

/// Runs the baseline attack on one resynthesized variant per recipe and
/// takes a per-bit majority vote. Split votes stay unresolved.
pub fn scope_resynth(fc: &Netlist, key_ports: &[String], recipes: &[OptEffort]) -> Result<Guesses> {
    if recipes.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "resynthesis voting needs at least 2 recipes, got {}",
            recipes.len()
        )));
    }
    check_ports(fc, key_ports)?;
    let frozen: HashSet<String> = key_ports.iter().cloned().collect();
    let runs = recipes
        .iter()
        .map(|r| scope_baseline(&optimize(fc, r, &frozen)?, key_ports))
        .collect::<Result<Vec<_>>>()?;
    let per_bit = (0..key_ports.len())
        .map(|i| {
            let (mut ones, mut zeros, mut delta) = (0usize, 0usize, 0i64);
            for run in &runs {
                let b = run.per_bit[i];
                delta += b.feature_delta;
                match b.guess {
                    Guess::One => ones += 1,
                    Guess::Zero => zeros += 1,
                    Guess::Unresolved => {}
                }
            }
            let guess = match ones.cmp(&zeros) {
                Ordering::Greater => Guess::One,
                Ordering::Less => Guess::Zero,
                Ordering::Equal => Guess::Unresolved,
            };
            BitGuess {
                guess,
                feature_delta: delta,
            }
        })
        .collect();
    Ok(Guesses {
        mode: AttackMode::Resynthesis,
        per_bit,
        recipes: recipes.iter().map(ToString::to_string).collect(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitTarget {
    Ec,
    Cc,
}

fn one_hot(len: usize, i: usize, b: bool) -> Vec<bool> {
    (0..len).map(|j| j == i && b).collect()
}

/// Attacks the randomized EC or the CC on its own, before integration.
///
/// For PO `i` and hypothesis `b`, the EC candidate is `ec_final` with PO
/// `i` complemented when `b` is set; the CC candidate is
/// `cc ^ ec_final`, with PO `i` complemented when `b` is set. Each
/// candidate is simplified and the features compared as in the baseline
/// attack. Score against [`split_truth`].
pub fn worst_case_split(ec_final: &Netlist, cc: &Netlist, target: SplitTarget) -> Result<Guesses> {
    let npo = ec_final.num_outputs();
    if npo == 0 {
        return Err(Error::InvalidArgument(format!(
            "`{}` has no primary outputs",
            ec_final.name()
        )));
    }
    pair_outputs(ec_final, cc)?;
    let effort = OptEffort::standard();
    let candidate = |i: usize, b: bool| -> Result<Features> {
        let raw = match target {
            SplitTarget::Ec => invert_outputs(ec_final, &one_hot(npo, i, b))?,
            SplitTarget::Cc => {
                let flags = KeyVector::new(KeyRole::Cc, one_hot(npo, i, b));
                assemble_cc(cc, ec_final, &flags)?
            }
        };
        Ok(Features::of(&optimize(&raw, &effort, &HashSet::new())?))
    };
    let per_bit = (0..npo)
        .into_par_iter()
        .map(|i| Ok(decide(candidate(i, false)?, candidate(i, true)?)))
        .collect::<Result<Vec<_>>>()?;
    let mode = match target {
        SplitTarget::Ec => AttackMode::WorstCaseEc,
        SplitTarget::Cc => AttackMode::WorstCaseCc,
    };
    Ok(Guesses {
        mode,
        per_bit,
        recipes: Vec::new(),
    })
}

/// What [`worst_case_split`] guesses: K_EC for the EC, K_CC ^ K_EC for
/// the CC.
pub fn split_truth(target: SplitTarget, k_ec: &KeyVector, k_cc: &KeyVector) -> Result<Vec<bool>> {
    if k_ec.len() != k_cc.len() {
        return Err(Error::LengthMismatch {
            what: "K_CC bits",
            expected: k_ec.len(),
            actual: k_cc.len(),
        });
    }
    Ok(match target {
        SplitTarget::Ec => k_ec.bits.clone(),
        SplitTarget::Cc => k_cc.bits.iter().zip(&k_ec.bits).map(|(a, b)| a ^ b).collect(),
    })
}

/// A deliberately weak locking scheme: PO `i` is `XOR(d_i, k_i)` where
/// `d_i` is `x_i` when the correct key bit is 1 and `NOT x_i` otherwise.
/// The correct value always leaves an inverter behind, a wrong one lets it
/// collapse. Returns the locked netlist and its key ports.
pub fn leaky_scheme(name: &str, truth: &[bool]) -> Result<(Netlist, Vec<String>)> {
    let mut b = Netlist::builder(name);
    let xs = (0..truth.len())
        .map(|i| b.add_input(format!("x{i}")))
        .collect::<Result<Vec<_>>>()?;
    let ports: Vec<String> = (0..truth.len()).map(|i| format!("{KEY_PREFIX}{i}")).collect();
    let ks = ports
        .iter()
        .map(|p| b.add_input(p.clone()))
        .collect::<Result<Vec<_>>>()?;
    for (i, &t) in truth.iter().enumerate() {
        let d = if t {
            xs[i]
        } else {
            b.add_gate(format!("n{i}"), GateKind::Not, &[xs[i]])?
        };
        let y = b.add_gate(format!("y{i}"), GateKind::Xor, &[d, ks[i]])?;
        b.add_output(format!("y{i}"), y)?;
    }
    Ok((b.build()?, ports))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::parse_bench;

    fn recipe(s: &str) -> OptEffort {
        s.parse().unwrap()
    }

    #[test]
    fn metrics_examples() {
        use Guess::*;
        let (ac, kpa) = compute_metrics(&[One, Zero, Unresolved], &[true, true, true]).unwrap();
        assert!((ac - 100.0 / 3.0).abs() < 1e-9);
        assert_eq!(kpa, Some(50.0));
        assert_eq!(compute_metrics(&[Unresolved; 2], &[true, false]).unwrap(), (0.0, None));
        assert_eq!(compute_metrics(&[One, Zero], &[true, false]).unwrap(), (100.0, Some(100.0)));
        assert!(compute_metrics(&[One], &[true, false]).is_err());
    }

    #[test]
    fn decide_is_lexicographic() {
        let f = |g, l, d| Features {
            gate_count: g,
            literal_count: l,
            depth: d,
        };
        assert_eq!(decide(f(3, 5, 2), f(4, 0, 0)).guess, Guess::One);
        assert_eq!(decide(f(3, 5, 2), f(3, 4, 9)).guess, Guess::Zero);
        assert_eq!(decide(f(3, 5, 2), f(3, 4, 9)).feature_delta, -1);
        assert_eq!(decide(f(1, 1, 1), f(1, 1, 1)).guess, Guess::Unresolved);
    }

    #[test]
    fn leaky_scheme_is_fully_recovered() {
        let truth = [true, false, false, true, true, false];
        let (n, ports) = leaky_scheme("leaky", &truth).unwrap();
        let report = scope_baseline(&n, &ports).unwrap().score(&truth).unwrap();
        assert_eq!(report.ac, 100.0);
        assert_eq!(report.polarity, Polarity::Direct);
        let recipes = ["none", "light", "standard", "heavy:seed=1", "heavy:seed=2"].map(recipe);
        let voted = scope_resynth(&n, &ports, &recipes).unwrap().score(&truth).unwrap();
        assert_eq!(voted.ac, 100.0);
        assert_eq!(voted.recipes.len(), 5);
    }

    #[test]
    fn symmetric_key_gates_stay_unresolved() {
        let n = parse_bench(
            "sym",
            "INPUT(a)\nINPUT(keyinput0)\nOUTPUT(y)\nOUTPUT(z)\ny = XOR(a, keyinput0)\nz = XNOR(a, keyinput0)\n",
        )
        .unwrap();
        let ports = key_ports_by_prefix(&n);
        let report = scope_baseline(&n, &ports).unwrap().score(&[true]).unwrap();
        assert_eq!(report.per_bit[0].guess, Guess::Unresolved);
        assert_eq!((report.ac, report.kpa), (0.0, None));
    }

    #[test]
    fn resynthesis_needs_two_recipes() {
        let (n, ports) = leaky_scheme("leaky", &[true]).unwrap();
        assert!(scope_resynth(&n, &ports, &[]).is_err());
        assert!(scope_resynth(&n, &ports, &[OptEffort::standard()]).is_err());
    }

    #[test]
    fn missing_key_ports_are_an_error() {
        let n = parse_bench("t", "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        assert!(key_ports_by_prefix(&n).is_empty());
        assert!(scope_baseline(&n, &[]).is_err());
        assert!(scope_baseline(&n, &["keyinput0".into()]).is_err());
    }

    #[test]
    fn key_ports_sort_numerically() {
        let n = parse_bench(
            "t",
            "INPUT(keyinput10)\nINPUT(keyinput2)\nINPUT(keyinputx)\nOUTPUT(y)\ny = AND(keyinput10, keyinput2)\n",
        )
        .unwrap();
        assert_eq!(key_ports_by_prefix(&n), ["keyinput2", "keyinput10"]);
    }

    #[test]
    fn complement_polarity_is_reported() {
        let g = Guesses {
            mode: AttackMode::Baseline,
            per_bit: vec![
                BitGuess {
                    guess: Guess::Zero,
                    feature_delta: -1
                };
                3
            ],
            recipes: vec![],
        };
        let r = g.score(&[true, true, false]).unwrap();
        assert_eq!(r.polarity, Polarity::Complement);
        assert!((r.ac - 200.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn report_json_shape() {
        let (n, ports) = leaky_scheme("leaky", &[true, false]).unwrap();
        let r = scope_baseline(&n, &ports).unwrap().score(&[true, false]).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["mode"], "baseline");
        assert_eq!(v["per_bit"][0]["guess"], "1");
        assert_eq!(v["per_bit"][1]["guess"], "0");
        assert_eq!(v["ac"], 100.0);
    }

    #[test]
    fn split_rejects_bad_shapes() {
        let ec = parse_bench("ec", "INPUT(a)\nOUTPUT(y)\ny = NOT(a)\n").unwrap();
        let k1 = KeyVector::new(KeyRole::Ec, vec![true]);
        let k2 = KeyVector::new(KeyRole::Cc, vec![true, false]);
        assert!(split_truth(SplitTarget::Ec, &k1, &k2).is_err());
        let guesses = worst_case_split(&ec, &ec, SplitTarget::Ec).unwrap();
        assert!(guesses.score(&k2.bits).is_err());
        let empty = parse_bench("e", "INPUT(a)\n").unwrap();
        assert!(worst_case_split(&empty, &empty, SplitTarget::Cc).is_err());
        let other = parse_bench("o", "INPUT(b)\nOUTPUT(y)\ny = NOT(b)\n").unwrap();
        assert!(worst_case_split(&ec, &other, SplitTarget::Cc).is_err());
    }
}
