use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use siac_core::codec::{load, read_wav_resampled, save, write_wav};
use siac_core::dsp::SAMPLE_RATE;
use siac_core::encoder::{log_grid, EncoderConfig};
use siac_core::report::inspect;
use siac_core::stream::{decode_stream, encode_stream_with_progress};
use siac_core::synth::RirBank;

use crate::{BankArgs, Cli, Command, EncoderArgs};

pub fn run(cli: Cli) -> Result<()> {
    let verbose = cli.verbose;
    match cli.command {
        Command::Encode {
            input,
            output,
            encoder,
            bank,
        } => encode(&input, &output, &encoder, &load_bank(&bank)?, verbose),
        Command::Decode {
            input,
            output,
            bank,
            allow_bank_mismatch,
        } => {
            let enc = load(&input).with_context(|| format!("reading {}", input.display()))?;
            let pcm = decode_stream(&enc, &load_bank(&bank)?, allow_bank_mismatch)?;
            write_wav(&output, &pcm).with_context(|| format!("writing {}", output.display()))?;
            if verbose > 0 {
                eprintln!("rendered {} events, {} samples", enc.events.len(), pcm.len());
            }
            Ok(())
        }
        Command::Inspect { input, bank, json } => {
            let enc = load(&input).with_context(|| format!("reading {}", input.display()))?;
            let report = inspect(&enc, &load_bank(&bank)?)?;
            let text = if json {
                serde_json::to_string_pretty(&report)? + "\n"
            } else {
                report.to_text()
            };
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
        Command::Filter {
            input,
            output,
            predicate,
        } => {
            let mut enc = load(&input).with_context(|| format!("reading {}", input.display()))?;
            let before = enc.events.len();
            predicate.apply(&mut enc)?;
            save(&output, &enc).with_context(|| format!("writing {}", output.display()))?;
            if verbose > 0 {
                eprintln!("kept {} of {before} events", enc.events.len());
            }
            Ok(())
        }
    }
}

fn load_bank(args: &BankArgs) -> Result<RirBank> {
    RirBank::load_or_synthetic(args.bank.as_deref(), SAMPLE_RATE)
        .with_context(|| format!("loading bank {:?}", args.bank))
}

pub fn encoder_config(args: &EncoderArgs) -> EncoderConfig {
    let mut cfg = EncoderConfig::with_seed(args.seed);
    cfg.max_steps = args.steps;
    cfg.stop_threshold = args.stop_threshold;
    if let Some(n) = args.f0_count {
        let d = &cfg.dictionary.f0_grid;
        cfg.dictionary.f0_grid = log_grid(d[0], d[d.len() - 1], n);
    }
    if let Some(n) = args.refine_iters {
        cfg.refine_iters = n;
    }
    cfg
}

fn encode(input: &Path, output: &Path, args: &EncoderArgs, bank: &RirBank, verbose: u8) -> Result<()> {
    let cfg = encoder_config(args);
    let pcm = read_wav_resampled(input, bank.sample_rate()).with_context(|| format!("reading {}", input.display()))?;
    let enc = encode_stream_with_progress(&pcm, &cfg, bank, |done, total| {
        if verbose > 0 {
            eprintln!("segment {done}/{total}");
        }
    })?;
    save(output, &enc).with_context(|| format!("writing {}", output.display()))?;
    if verbose > 0 {
        eprintln!("{} events from {:.2} s of audio", enc.events.len(), pcm.duration_seconds());
    }
    Ok(())
}
