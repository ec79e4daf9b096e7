use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{Context, Result};
use clap::ValueEnum;
use log::info;
use serde::Serialize;

use logenc::attack::{
    key_ports_by_prefix, scope_baseline, scope_resynth, split_truth, worst_case_split, Guesses,
    SplitTarget,
};
use logenc::corrector::{KeyRole, KeyVector};
use logenc::encryptor::testing::FixedCipher;
use logenc::encryptor::{parse_bits, CodingScheme};
use logenc::flow::{lock, overhead, run_matrix, write_artifacts, Overhead, Overrides, RunArtifacts, RunConfig};
use logenc::integrator::{apply_key, KeyFile};
use logenc::nandnor::map_to_nand_nor;
use logenc::netlist::{parse_bench, write_bench};
use logenc::verifier::{check_equiv, Budget, EquivVerdict};
use logenc::{CircuitStats, Netlist, NetlistParts};

use crate::args::{AttackArgs, Cli, EncryptArgs, FixedChoices, MapArgs, Mode, StatsArgs, VerifyArgs};
use crate::ConfigError;

/// Reads a `.json` exchange file or BENCH text, named after the file stem.
pub fn read_netlist(path: &Path) -> Result<Netlist> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let n = if path.extension().is_some_and(|e| e == "json") {
        let parts: NetlistParts = serde_json::from_str(&text).map_err(logenc::Error::from)?;
        Netlist::from_parts(parts)?
    } else {
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("netlist");
        parse_bench(name, &text)?
    };
    Ok(n)
}

fn read_key_file(path: &Path) -> Result<KeyFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text).map_err(logenc::Error::from)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    std::fs::write(path, s).with_context(|| format!("writing {}", path.display()))
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn key_vector(role: KeyRole, bits: &Option<String>) -> Result<Option<KeyVector>> {
    bits.as_deref()
        .map(|s| Ok(KeyVector::new(role, parse_bits(s).map_err(|e| ConfigError(e.to_string()))?)))
        .transpose()
}

fn overrides(f: &FixedChoices) -> Result<Overrides> {
    let coding_scheme = match (&f.gate_order, f.nand_bit) {
        (Some(order), Some(bit)) => {
            Some(CodingScheme::new(bit == 1, order.clone()).map_err(|e| ConfigError(e.to_string()))?)
        }
        _ => None,
    };
    let cipher = match &f.test_cipher {
        Some(bits) => Some(Box::new(FixedCipher::from_bits(bits).map_err(|e| ConfigError(e.to_string()))?)
            as Box<dyn logenc::encryptor::BlockCipher + Send + Sync>),
        None => None,
    };
    Ok(Overrides {
        coding_scheme,
        cipher,
        k_cc: key_vector(KeyRole::Cc, &f.k_cc)?,
        k_ec: key_vector(KeyRole::Ec, &f.k_ec)?,
        k_mux: key_vector(KeyRole::Mux, &f.k_mux)?,
    })
}

fn write_intermediates(dir: &Path, art: &RunArtifacts) -> Result<()> {
    std::fs::write(dir.join("cc.bench"), write_bench(&art.cc)?)?;
    std::fs::write(dir.join("ec_final.bench"), write_bench(&art.ec_final)?)?;
    Ok(())
}

pub fn encrypt(cli: &Cli, args: &EncryptArgs) -> Result<()> {
    let cfg = RunConfig {
        seed: cli.seed,
        effort: cli.effort.clone(),
        exhaustive_threshold: cli.exhaustive_threshold,
        runs_encrypt: args.runs.encrypt,
        runs_e2e_per_encrypt: args.runs.e2e,
        output_dir: cli.out.clone(),
        verify_time_limit: Duration::from_secs(args.verify_time_limit),
        strip_feedthroughs: !args.keep_feedthroughs,
    };
    cfg.validate().map_err(|e| ConfigError(e.to_string()))?;
    let single = args.runs.encrypt == 1 && args.runs.e2e == 1;
    if args.fixed.any() && !single {
        return Err(ConfigError("fixed choices need --runs 1x1".into()).into());
    }
    let oc = read_netlist(&args.input)?;
    let root = cfg.resolve_seed();
    let runs = if single {
        vec![lock(&oc, &cfg, root, overrides(&args.fixed)?)?]
    } else {
        run_matrix(&oc, &cfg, root)?
    };
    for art in &runs {
        let dir: PathBuf = if single {
            cfg.output_dir.clone()
        } else {
            let (i, j) = (art.report.encrypt_run, art.report.e2e_run);
            cfg.output_dir.join(format!("run_{i}_{j}"))
        };
        write_artifacts(&dir, art)?;
        if args.intermediates {
            write_intermediates(&dir, art)?;
        }
        info!(
            "{}: {} key bits, {} -> {} gates, written to {}",
            art.report.benchmark,
            art.fc.k_fc.len(),
            art.report.stats["oc"].gate_count,
            art.report.stats["fc"].gate_count,
            dir.display()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct VerifyReport {
    fc: String,
    oc: String,
    key_bits: usize,
    #[serde(flatten)]
    verdict: EquivVerdict,
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> Result<()> {
    let fc = read_netlist(&args.fc)?;
    let oc = read_netlist(&args.oc)?;
    let key = read_key_file(&args.key)?;
    let bits = key.final_key()?;
    let restored = apply_key(&fc, &key.key_ports(), &bits)?;
    let budget = Budget {
        exhaustive_threshold: cli.exhaustive_threshold,
        time_limit: Duration::from_secs(args.time_limit),
        seed: cli.seed.unwrap_or(Budget::default().seed),
        ..Budget::default()
    };
    let verdict = check_equiv(&oc, &restored, &budget)?;
    let equivalent = verdict.is_equivalent();
    print_json(&VerifyReport {
        fc: args.fc.display().to_string(),
        oc: args.oc.display().to_string(),
        key_bits: bits.len(),
        verdict,
    })?;
    if !equivalent {
        return Err(logenc::Error::VerificationFailed("the keyed netlist differs from the original".into()).into());
    }
    Ok(())
}

pub fn attack(cli: &Cli, args: &AttackArgs) -> Result<()> {
    let target = read_netlist(&args.fc)?;
    let split = match args.mode {
        Mode::WorstCaseEc => Some(SplitTarget::Ec),
        Mode::WorstCaseCc => Some(SplitTarget::Cc),
        _ => None,
    };
    let guesses: Guesses = match (args.mode, split) {
        (_, Some(t)) => {
            let Some(path) = &args.ec_final else {
                return Err(ConfigError("worst-case modes need --ec-final".into()).into());
            };
            worst_case_split(&read_netlist(path)?, &target, t)?
        }
        (Mode::Resynthesis, _) => {
            if args.recipes.len() < 2 {
                return Err(ConfigError(format!(
                    "resynthesis needs at least 2 recipes, got {}",
                    args.recipes.len()
                ))
                .into());
            }
            scope_resynth(&target, &key_ports_by_prefix(&target), &args.recipes)?
        }
        _ => scope_baseline(&target, &key_ports_by_prefix(&target))?,
    };
    let mode = args.mode.to_possible_value().expect("no skipped modes");
    let name = format!("attack_{}.json", mode.get_name());
    std::fs::create_dir_all(&cli.out)?;
    let path = cli.out.join(name);
    match &args.key {
        None => {
            write_json(&path, &guesses)?;
            print_json(&guesses)?;
        }
        Some(key_path) => {
            info!("guessing done, scoring against {}", key_path.display());
            let key = read_key_file(key_path)?;
            let truth = match split {
                Some(t) => split_truth(
                    t,
                    &KeyVector::new(KeyRole::Ec, parse_bits(&key.k_ec)?),
                    &KeyVector::new(KeyRole::Cc, parse_bits(&key.k_cc)?),
                )?,
                None => key.final_key()?,
            };
            let report = guesses.score(&truth)?;
            info!("AC {:.1}%, KPA {:?}", report.ac, report.kpa);
            write_json(&path, &report)?;
            print_json(&report)?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsReport {
    before: CircuitStats,
    after: CircuitStats,
    #[serde(flatten)]
    overhead: Overhead,
}

pub fn stats(_cli: &Cli, args: &StatsArgs) -> Result<()> {
    let before = read_netlist(&args.before)?.stats();
    let after = read_netlist(&args.after)?.stats();
    let overhead = overhead(&before, &after);
    print_json(&StatsReport {
        before,
        after,
        overhead,
    })
}

pub fn map(cli: &Cli, args: &MapArgs) -> Result<()> {
    let n = read_netlist(&args.input)?;
    let m = map_to_nand_nor(&n)?;
    std::fs::create_dir_all(&cli.out)?;
    let path = cli.out.join(format!("{}_nandnor.bench", n.name()));
    std::fs::write(&path, write_bench(m.netlist())?)?;
    info!(
        "{}: {} gates mapped to {} ({} degenerate), written to {}",
        n.name(),
        n.gates().len(),
        m.gate_count(),
        m.degenerate_count(),
        path.display()
    );
    Ok(())
}
