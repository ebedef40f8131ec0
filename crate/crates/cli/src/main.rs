//! `lattn`: vocabulary building, training, evaluation, one-shot experiments,
//! argument prediction, gradient checks, synthetic corpora and attention
//! dumps.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data
//! validation error, 3 numeric failure.

mod cli;
mod data;
mod evaluate;
mod manifest;
mod settings;
mod train;

use std::process::ExitCode;

use clap::Parser;

use cli::{Cli, Command};

/// Errors raised by the CLI itself rather than by the library.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Numeric(String),
    /// A child run exited with this code.
    Child(u8, String),
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Numeric(m) | Failure::Child(_, m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(f) = cause.downcast_ref::<Failure>() {
            return match f {
                Failure::Usage(_) => 1,
                Failure::Numeric(_) => 3,
                Failure::Child(code, _) => *code,
            };
        }
        if let Some(e) = cause.downcast_ref::<lattn_core::Error>() {
            return match e {
                lattn_core::Error::Config(_) => 1,
                lattn_core::Error::Numeric(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

/// A closed stdout (e.g. piping into `head`) is not a failure.
fn broken_pipe(err: &anyhow::Error) -> bool {
    err.chain().any(|c| {
        c.downcast_ref::<std::io::Error>()
            .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
    })
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::BuildVocab(a) => data::build_vocab(a),
        Command::EncodeCorpus(a) => data::encode_corpus(a),
        Command::GenSynth(a) => data::gen_synth(a),
        Command::Train(a) => train::train(a),
        Command::Oneshot(a) => train::oneshot(a),
        Command::Eval(a) => evaluate::eval(a),
        Command::EnsembleEval(a) => evaluate::ensemble_eval(a),
        Command::PredictArgs(a) => evaluate::predict_args(a),
        Command::Gradcheck(a) => evaluate::gradcheck(a),
        Command::DumpAttention(a) => evaluate::dump_attention(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if broken_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
