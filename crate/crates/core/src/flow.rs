//! The end-to-end locking pipeline and its multi-run driver.
//!
//! An encryption run maps the OC to NAND/NOR, draws a coding scheme,
//! encrypts the plaintext with a throwaway AES key and decodes the basic
//! EC. Each end-to-end run on top of it builds the CC, randomizes the EC,
//! integrates the FC and derives K_FC. Every stage has an equivalence
//! obligation; a failed or inconclusive check aborts the run.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corrector::{
    assemble_cc, build_cc_with_key, invert_outputs, randomize_ec_with_key, Entanglement, KeyRole,
    KeyVector,
};
use crate::encryptor::{
    decode, encode, encrypt, encrypt_with, make_coding_scheme, BlockCipher, CodingScheme,
    EncryptionTrace,
};
use crate::error::{Error, Result};
use crate::integrator::{apply_key, build_fc_with_key, lower_mux, FinalCircuit, KeyFile};
use crate::nandnor::{map_to_nand_nor, MappedNetlist};
use crate::netlist::{strip_feedthroughs, write_bench, CircuitStats, Netlist};
use crate::optimizer::{optimize, OptEffort};
use crate::verifier::{check_equiv, Budget, EquivVerdict, Equivalence};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// Root seed; drawn from the OS and logged when absent.
    pub seed: Option<u64>,
    pub effort: OptEffort,
    pub exhaustive_threshold: usize,
    pub runs_encrypt: usize,
    pub runs_e2e_per_encrypt: usize,
    pub output_dir: PathBuf,
    /// Time budget for each SAT-based equivalence check.
    pub verify_time_limit: Duration,
    /// Drop primary outputs that merely copy a primary input (together
    /// with that input) before locking.
    pub strip_feedthroughs: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            effort: OptEffort::standard(),
            exhaustive_threshold: 20,
            runs_encrypt: 10,
            runs_e2e_per_encrypt: 4,
            output_dir: PathBuf::from("out"),
            verify_time_limit: Duration::from_secs(60),
            strip_feedthroughs: true,
        }
    }
}

impl RunConfig {
    pub const MAX_EXHAUSTIVE_THRESHOLD: usize = 24;

    pub fn validate(&self) -> Result<()> {
        if self.runs_encrypt == 0 || self.runs_e2e_per_encrypt == 0 {
            return Err(Error::InvalidArgument("run counts must be at least 1".into()));
        }
        if self.exhaustive_threshold > Self::MAX_EXHAUSTIVE_THRESHOLD {
            return Err(Error::InvalidArgument(format!(
                "exhaustive threshold {} exceeds {}",
                self.exhaustive_threshold,
                Self::MAX_EXHAUSTIVE_THRESHOLD
            )));
        }
        Ok(())
    }

    pub fn budget(&self, seed: u64) -> Budget {
        Budget {
            exhaustive_threshold: self.exhaustive_threshold,
            time_limit: self.verify_time_limit,
            seed,
            ..Budget::default()
        }
    }

    /// The root seed, drawing and logging one if none was configured.
    pub fn resolve_seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            let s = rand::rngs::OsRng.next_u64();
            log::info!("no seed given, using {s}");
            s
        })
    }
}

/// Fixed choices that replace random draws, for worked examples.
#[derive(Default)]
pub struct Overrides {
    pub coding_scheme: Option<CodingScheme>,
    pub cipher: Option<Box<dyn BlockCipher + Send + Sync>>,
    pub k_cc: Option<KeyVector>,
    pub k_ec: Option<KeyVector>,
    pub k_mux: Option<KeyVector>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.coding_scheme.is_none()
            && self.cipher.is_none()
            && self.k_cc.is_none()
            && self.k_ec.is_none()
            && self.k_mux.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Obligation {
    pub name: String,
    pub verdict: EquivVerdict,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlipStats {
    pub gates: usize,
    pub flipped: usize,
}

impl FlipStats {
    pub fn rate(&self) -> f64 {
        if self.gates == 0 {
            0.0
        } else {
            self.flipped as f64 / self.gates as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overhead {
    pub gate_count_pct: Option<f64>,
    pub depth_pct: Option<f64>,
}

pub fn overhead(before: &CircuitStats, after: &CircuitStats) -> Overhead {
    let pct = |a: usize, b: usize| {
        (a > 0).then(|| (b as f64 - a as f64) / a as f64 * 100.0)
    };
    Overhead {
        gate_count_pct: pct(before.gate_count, after.gate_count),
        depth_pct: pct(before.depth, after.depth),
    }
}

/// Result of one encryption run, shared by its end-to-end runs.
#[derive(Clone, Debug)]
pub struct EncryptionStage {
    pub oc: Netlist,
    pub stripped_feedthroughs: usize,
    pub mapped: MappedNetlist,
    pub coding: CodingScheme,
    pub trace: EncryptionTrace,
    pub basic_ec: Netlist,
    pub ec: Netlist,
    pub flips: FlipStats,
    pub obligations: Vec<Obligation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub benchmark: String,
    pub encrypt_run: usize,
    pub e2e_run: usize,
    pub effort: String,
    pub stripped_feedthroughs: usize,
    pub stats: BTreeMap<String, CircuitStats>,
    pub degenerate_gates: usize,
    pub gate_flips: FlipStats,
    pub entanglement: Entanglement,
    pub key_bits: usize,
    pub overhead: Overhead,
    pub verification: Vec<Obligation>,
}

#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub report: RunReport,
    pub stage: EncryptionStage,
    pub cc: Netlist,
    pub ec_final: Netlist,
    pub fc: FinalCircuit,
    pub k_ec: KeyVector,
    pub k_cc: KeyVector,
    pub k_mux: KeyVector,
    pub key_file: KeyFile,
}

fn obligation(name: &str, a: &Netlist, b: &Netlist, budget: &Budget) -> Result<Obligation> {
    let verdict = check_equiv(a, b, budget)?;
    match verdict.result {
        Equivalence::Equivalent => {
            log::debug!("{name}: equivalent ({:?})", verdict.method);
            Ok(Obligation {
                name: name.to_owned(),
                verdict,
            })
        }
        Equivalence::Inequivalent => Err(Error::VerificationFailed(format!(
            "{name}: `{}` and `{}` differ on {:?}",
            a.name(),
            b.name(),
            verdict.differing_outputs
        ))),
        Equivalence::Inconclusive => Err(Error::VerificationFailed(format!(
            "{name}: no proof within the time budget"
        ))),
    }
}

pub fn run_encryption_stage<R: RngCore>(
    input: &Netlist,
    cfg: &RunConfig,
    rng: &mut R,
    ov: &mut Overrides,
) -> Result<EncryptionStage> {
    let (oc, stripped) = if cfg.strip_feedthroughs {
        strip_feedthroughs(input)?
    } else {
        (input.clone(), 0)
    };
    if oc.num_outputs() == 0 {
        return Err(Error::InvalidArgument(format!(
            "`{}` has no outputs left to lock",
            oc.name()
        )));
    }
    let budget = cfg.budget(rng.next_u64());
    let mut obligations = Vec::new();

    let mapped = map_to_nand_nor(&oc)?;
    obligations.push(obligation("nand-nor mapping", &oc, mapped.netlist(), &budget)?);

    let g = mapped.gate_count();
    let coding = match ov.coding_scheme.take() {
        Some(cs) if cs.gate_order.len() == g => cs,
        Some(cs) => {
            return Err(Error::LengthMismatch {
                what: "overridden gate order",
                expected: g,
                actual: cs.gate_order.len(),
            })
        }
        None => make_coding_scheme(g, rng)?,
    };
    let plaintext = encode(&mapped, &coding)?;
    let trace = match ov.cipher.as_mut() {
        Some(c) => encrypt_with(&plaintext, c.as_mut(), rng)?,
        None => encrypt(&plaintext, rng)?,
    };
    let basic_ec = decode(&trace, &coding, &mapped)?.renamed(format!("{}_ec", oc.name()));
    let flips = FlipStats {
        gates: g,
        flipped: mapped
            .netlist()
            .gates()
            .iter()
            .zip(basic_ec.gates())
            .filter(|(a, b)| a.kind != b.kind)
            .count(),
    };
    let ec = optimize(&basic_ec, &cfg.effort, &Default::default())?;
    obligations.push(obligation("ec resynthesis", &basic_ec, &ec, &budget)?);
    Ok(EncryptionStage {
        oc,
        stripped_feedthroughs: stripped,
        mapped,
        coding,
        trace,
        basic_ec,
        ec,
        flips,
        obligations,
    })
}

pub fn run_e2e<R: RngCore>(
    stage: &EncryptionStage,
    cfg: &RunConfig,
    rng: &mut R,
    ov: &mut Overrides,
    (encrypt_run, e2e_run): (usize, usize),
) -> Result<RunArtifacts> {
    let oc = &stage.oc;
    let npo = oc.num_outputs();
    let budget = cfg.budget(rng.next_u64());
    let mut obligations = stage.obligations.clone();
    let draw = |o: Option<KeyVector>, role, len, rng: &mut R| -> Result<KeyVector> {
        match o {
            Some(k) if k.len() == len => Ok(KeyVector::new(role, k.bits)),
            Some(k) => Err(Error::LengthMismatch {
                what: "overridden key vector",
                expected: len,
                actual: k.len(),
            }),
            None => Ok(KeyVector::new(role, (0..len).map(|_| rng.gen()).collect())),
        }
    };
    let k_cc = draw(ov.k_cc.take(), KeyRole::Cc, npo, rng)?;
    let k_ec = draw(ov.k_ec.take(), KeyRole::Ec, npo, rng)?;
    let k_mux = draw(ov.k_mux.take(), KeyRole::Mux, 2 * npo, rng)?;

    let cc = build_cc_with_key(oc, &stage.ec, &k_cc, &cfg.effort)?;
    let cc_ref = assemble_cc(oc, &stage.ec, &k_cc)?;
    obligations.push(obligation("cc = oc ^ ec ^ k_cc", &cc_ref, &cc.cc, &budget)?);

    let ec_final = randomize_ec_with_key(&stage.ec, &k_ec, &cfg.effort)?;
    let ec_ref = invert_outputs(&stage.ec, &k_ec.bits)?;
    obligations.push(obligation("ec_final = ec ^ k_ec", &ec_ref, &ec_final, &budget)?);

    let fc = build_fc_with_key(&ec_final, &cc.cc, &k_ec, &k_cc, &k_mux, &cfg.effort)?;
    let restored = apply_key(&fc.netlist, &fc.key_ports(), &fc.k_fc.bits)?;
    obligations.push(obligation("fc under k_fc = oc", oc, &restored, &budget)?);

    let key_file = KeyFile::new(oc.name(), &fc, &k_ec, &k_cc, &k_mux);
    let oc_stats = oc.stats();
    let fc_stats = fc.netlist.stats();
    let stats = BTreeMap::from([
        ("oc".to_owned(), oc_stats.clone()),
        ("mapped".to_owned(), stage.mapped.netlist().stats()),
        ("basic_ec".to_owned(), stage.basic_ec.stats()),
        ("ec".to_owned(), stage.ec.stats()),
        ("cc".to_owned(), cc.cc.stats()),
        ("ec_final".to_owned(), ec_final.stats()),
        ("fc".to_owned(), fc_stats.clone()),
    ]);
    let report = RunReport {
        benchmark: oc.name().to_owned(),
        encrypt_run,
        e2e_run,
        effort: cfg.effort.to_string(),
        stripped_feedthroughs: stage.stripped_feedthroughs,
        stats,
        degenerate_gates: stage.mapped.degenerate_count(),
        gate_flips: stage.flips,
        entanglement: cc.entanglement,
        key_bits: fc.k_fc.len(),
        overhead: overhead(&oc_stats, &fc_stats),
        verification: obligations,
    };
    Ok(RunArtifacts {
        report,
        stage: stage.clone(),
        cc: cc.cc,
        ec_final,
        fc,
        k_ec,
        k_cc,
        k_mux,
        key_file,
    })
}

/// Per-run seeds derived from the root: one for each encryption run and
/// one for each end-to-end run.
pub fn derive_seeds(root: u64, cfg: &RunConfig) -> Vec<(u64, Vec<u64>)> {
    let mut rng = ChaCha20Rng::seed_from_u64(root);
    (0..cfg.runs_encrypt)
        .map(|_| {
            let a = rng.next_u64();
            let e = (0..cfg.runs_e2e_per_encrypt).map(|_| rng.next_u64()).collect();
            (a, e)
        })
        .collect()
}

/// A single 1x1 run with optional overrides.
pub fn lock(oc: &Netlist, cfg: &RunConfig, root: u64, mut ov: Overrides) -> Result<RunArtifacts> {
    cfg.validate()?;
    let seeds = derive_seeds(root, &RunConfig {
        runs_encrypt: 1,
        runs_e2e_per_encrypt: 1,
        ..cfg.clone()
    });
    let (a, e) = &seeds[0];
    let stage = run_encryption_stage(oc, cfg, &mut ChaCha20Rng::seed_from_u64(*a), &mut ov)?;
    run_e2e(&stage, cfg, &mut ChaCha20Rng::seed_from_u64(e[0]), &mut ov, (0, 0))
}

/// The full `runs_encrypt x runs_e2e_per_encrypt` matrix, in parallel.
/// Results are ordered by (encryption run, end-to-end run).
pub fn run_matrix(oc: &Netlist, cfg: &RunConfig, root: u64) -> Result<Vec<RunArtifacts>> {
    cfg.validate()?;
    let seeds = derive_seeds(root, cfg);
    let nested: Vec<Vec<RunArtifacts>> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, (a, es))| {
            let mut ov = Overrides::default();
            let stage = run_encryption_stage(oc, cfg, &mut ChaCha20Rng::seed_from_u64(*a), &mut ov)?;
            es.par_iter()
                .enumerate()
                .map(|(j, e)| {
                    run_e2e(&stage, cfg, &mut ChaCha20Rng::seed_from_u64(*e), &mut Overrides::default(), (i, j))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub const ARTIFACT_FILES: [&str; 5] = ["fc.bench", "fc.json", "key.json", "trace.json", "report.json"];

/// Writes the five run artifacts into `dir`.
pub fn write_artifacts(dir: &Path, art: &RunArtifacts) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let lowered = lower_mux(&art.fc.netlist)?;
    std::fs::write(dir.join("fc.bench"), write_bench(&lowered)?)?;
    let json = |v: &dyn erased::Json| v.to_pretty();
    std::fs::write(dir.join("fc.json"), json(&art.fc.netlist.to_parts())?)?;
    std::fs::write(dir.join("key.json"), json(&art.key_file)?)?;
    std::fs::write(dir.join("trace.json"), json(&art.stage.trace)?)?;
    std::fs::write(dir.join("report.json"), json(&art.report)?)?;
    Ok(())
}

mod erased {
    use crate::error::Result;

    pub trait Json {
        fn to_pretty(&self) -> Result<String>;
    }

    impl<T: serde::Serialize> Json for T {
        fn to_pretty(&self) -> Result<String> {
            let mut s = serde_json::to_string_pretty(self)?;
            s.push('\n');
            Ok(s)
        }
    }
}
