use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logenc::optimizer::OptEffort;

#[derive(Debug, Parser)]
#[command(name = "logenc", version, about = "Logic encryption for combinational gate-level netlists")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Root seed; drawn from the OS and logged when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Optimization recipe: none, light, standard, heavy or heavy:seed=N.
    #[arg(long, global = true, default_value = "standard")]
    pub effort: OptEffort,

    /// Largest PI count checked exhaustively instead of with SAT.
    #[arg(long, global = true, default_value_t = 20)]
    pub exhaustive_threshold: usize,

    /// Output directory.
    #[arg(long, global = true, env = "LOGENC_OUT", default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lock a netlist and write fc.bench, fc.json, key.json, trace.json and report.json.
    Encrypt(EncryptArgs),
    /// Check a locked netlist under a key file against the original.
    Verify(VerifyArgs),
    /// Guess key bits without an oracle and score the guesses.
    Attack(AttackArgs),
    /// Gate-count and depth overhead of one netlist over another.
    Stats(StatsArgs),
    /// Map a netlist to NAND/NOR gates only.
    Map(MapArgs),
}

/// `N x M` run matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Runs {
    pub encrypt: usize,
    pub e2e: usize,
}

impl FromStr for Runs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (n, m) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected NxM, got `{s}`"))?;
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
        Ok(Runs {
            encrypt: parse(n)?,
            e2e: parse(m)?,
        })
    }
}

#[derive(Debug, Args)]
pub struct EncryptArgs {
    /// Input netlist (.bench, or .json in the exchange format).
    pub input: PathBuf,

    /// Encryption runs x end-to-end runs per encryption run.
    #[arg(long, default_value = "1x1")]
    pub runs: Runs,

    /// Time budget in seconds for each SAT-based equivalence check.
    #[arg(long, default_value_t = 60)]
    pub verify_time_limit: u64,

    /// Keep primary outputs that merely copy a primary input.
    #[arg(long)]
    pub keep_feedthroughs: bool,

    /// Also write the CC and the randomized EC as cc.bench and ec_final.bench.
    #[arg(long)]
    pub intermediates: bool,

    #[command(flatten)]
    pub fixed: FixedChoices,
}

/// Replacements for random draws, for reproducing worked examples.
#[derive(Debug, Args)]
#[command(next_help_heading = "Fixed choices (single run only)")]
pub struct FixedChoices {
    /// Emit this bit string, zero padded, as the first cipher block instead of AES.
    #[arg(long, value_name = "BITS")]
    pub test_cipher: Option<String>,

    #[arg(long, value_name = "BITS")]
    pub k_cc: Option<String>,

    #[arg(long, value_name = "BITS")]
    pub k_ec: Option<String>,

    #[arg(long, value_name = "BITS")]
    pub k_mux: Option<String>,

    /// Mapped gate index at each plaintext position, comma separated.
    #[arg(long, value_name = "LIST", value_delimiter = ',', requires = "nand_bit")]
    pub gate_order: Option<Vec<usize>>,

    /// Bit that encodes NAND in the coding scheme.
    #[arg(long, value_name = "BIT", value_parser = clap::value_parser!(u8).range(0..=1), requires = "gate_order")]
    pub nand_bit: Option<u8>,
}

impl FixedChoices {
    pub fn any(&self) -> bool {
        self.test_cipher.is_some()
            || self.k_cc.is_some()
            || self.k_ec.is_some()
            || self.k_mux.is_some()
            || self.gate_order.is_some()
    }
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Locked netlist.
    pub fc: PathBuf,
    /// Key file written by `encrypt`.
    pub key: PathBuf,
    /// Original netlist.
    pub oc: PathBuf,

    /// Time budget in seconds for the SAT check.
    #[arg(long, default_value_t = 60)]
    pub time_limit: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Baseline,
    Resynthesis,
    WorstCaseEc,
    WorstCaseCc,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Locked netlist; for the worst-case modes, the CC.
    pub fc: PathBuf,

    #[arg(long, value_enum, default_value = "baseline")]
    pub mode: Mode,

    /// Recipes for resynthesis voting, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "light,standard,heavy:seed=1,heavy:seed=2,heavy:seed=3")]
    pub recipes: Vec<OptEffort>,

    /// Randomized EC, required by the worst-case modes.
    #[arg(long)]
    pub ec_final: Option<PathBuf>,

    /// Key file, read only after guessing to score the guesses.
    #[arg(long)]
    pub key: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    pub before: PathBuf,
    pub after: PathBuf,
}

#[derive(Debug, Args)]
pub struct MapArgs {
    pub input: PathBuf,
}
