//! Command-line harness: dataset generation, single and batched runs,
//! parameter sweeps and the optimization ablation.

pub mod args;
pub mod bench;
pub mod commands;
pub mod report;
pub mod value;

use anyhow::Result;

use crate::args::{Cli, Command};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => commands::cmd_gen(a),
        Command::Topk(a) => commands::cmd_topk(a),
        Command::Bench(a) => bench::cmd_bench(a),
        Command::Ablate(a) => bench::cmd_ablate(a),
    }
}
