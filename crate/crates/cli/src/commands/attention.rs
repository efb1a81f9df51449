use std::io::Write;
use std::path::Path;

use metores_core::eval::{attention_report, write_attention_csv, AttentionGroup};
use metores_core::model::{forward, Mode};
use metores_core::trainer::prepare_inputs;

use super::data::{load_samples, parse_format};
use super::load_model;
use crate::error::{invalid, CliError};
use crate::output::{log, resolve_out, write_file};
use crate::{Format, OutputArgs};

pub(crate) fn run(
    checkpoint: &Path,
    data: &Path,
    source_format: Option<&str>,
    vocab: Option<&Path>,
    merge_below: usize,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let model = load_model(checkpoint, vocab)?;
    let samples = load_samples(data, parse_format(source_format)?, false)?;
    if samples.is_empty() {
        return Err(invalid(format!("{} has no samples", data.display())));
    }
    let len = model.max_seq_len.min(model.params.config.max_positions);
    let inputs = prepare_inputs(&samples, &model.vocab, model.variant, len)?;
    let traces = inputs
        .iter()
        .map(|(x, _)| forward(&model.params, x, Mode::Eval).map(|o| o.trace))
        .collect::<Result<Vec<_>, _>>()?;
    let groups = attention_report(&traces, merge_below)?;

    let out = resolve_out(output.out.as_deref(), None, "attention");
    log(&out, &format!("attention {} samples", samples.len()))?;
    let mut report = Vec::new();
    match output.format {
        Format::Csv => write_attention_csv(&mut report, &groups)?,
        Format::Txt => write_table(&mut report, &groups)?,
    }
    write_file(&out.join(format!("attention.{}", output.format.extension())), &report)
}

fn write_table<W: Write>(mut w: W, groups: &[AttentionGroup]) -> std::io::Result<()> {
    writeln!(w, "Attention mass on the target, per layer")?;
    writeln!(w, "{:<8}{:>6}{:>9}{:>9}{:>9}{:>9}{:>9}{:>9}", "layers", "n", "min", "q1", "median", "q3", "max", "mean")?;
    for g in groups {
        writeln!(
            w,
            "{:<8}{:>6}{:>9.4}{:>9.4}{:>9.4}{:>9.4}{:>9.4}{:>9.4}",
            g.label(),
            g.n,
            g.min,
            g.q1,
            g.median,
            g.q3,
            g.max,
            g.mean
        )?;
    }
    Ok(())
}
