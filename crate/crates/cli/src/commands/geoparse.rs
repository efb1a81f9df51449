use std::path::PathBuf;

use metores_core::eval::{prf_over_folds, prf_toponyms, write_geoparse_csv, write_geoparse_table, SpanRef};
use metores_core::pipeline::{literal_locations, read_documents, resolve, write_mentions_csv, Gazetteer, GazetteerDetector};
use metores_core::Variant;

use super::load_model;
use crate::error::{invalid, CliError};
use crate::manifest::GeoparseManifest;
use crate::output::{log, resolve_out, write_file};
use crate::{Format, OutputArgs};

pub(crate) fn run(
    manifest: Option<PathBuf>,
    docs: Option<PathBuf>,
    gazetteer: Option<PathBuf>,
    checkpoint: Option<PathBuf>,
    vocab: Option<PathBuf>,
    folds: Option<usize>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let m = match manifest {
        Some(path) => GeoparseManifest::load(&path)?,
        None => {
            let need = |p: Option<PathBuf>, flag: &str| p.ok_or_else(|| invalid(format!("--{flag} is required without --manifest")));
            GeoparseManifest {
                name: "geoparse".into(),
                docs: need(docs, "docs")?,
                gazetteer: need(gazetteer, "gazetteer")?,
                checkpoint: need(checkpoint, "checkpoint")?,
                vocab: None,
                folds: 1,
                out: None,
            }
        }
    };
    let folds = folds.unwrap_or(m.folds);
    if folds == 0 {
        return Err(invalid("--folds must be at least 1"));
    }
    for (what, p) in [("documents", &m.docs), ("gazetteer", &m.gazetteer)] {
        if !p.exists() {
            return Err(invalid(format!("{what} {} does not exist", p.display())));
        }
    }
    let model = load_model(&m.checkpoint, vocab.as_deref().or(m.vocab.as_deref()))?;
    if model.variant != Variant::Masked {
        eprintln!("warning: checkpoint was trained with variant {}, mentions are classified masked", model.variant);
    }
    let detector = GazetteerDetector::new(Gazetteer::load(&m.gazetteer)?);
    let documents = read_documents(&m.docs)?;
    if documents.len() < folds {
        return Err(invalid(format!("{folds} folds requested for {} documents", documents.len())));
    }

    let out = resolve_out(output.out.as_deref(), m.out.as_deref(), &m.name);
    std::fs::create_dir_all(&out)?;
    log(&out, &format!("geoparse {} documents", documents.len()))?;
    let mut mentions = Vec::new();
    let mut per_doc = Vec::new();
    for d in &documents {
        let resolved = resolve(&d.id, &d.text, &detector, &model.params, &model.vocab)?;
        per_doc.push(literal_locations(&resolved));
        mentions.extend(resolved);
    }
    let mut buf = Vec::new();
    write_mentions_csv(&mut buf, &mentions)?;
    write_file(&out.join("mentions.csv"), &buf)?;

    if documents.iter().any(|d| d.toponyms.is_some()) {
        let n = documents.len();
        let mut fold_prf = Vec::with_capacity(folds);
        for f in 0..folds {
            // Contiguous blocks of documents in input order.
            let members: Vec<usize> = (0..n).filter(|i| i * folds / n == f).collect();
            let predicted: Vec<SpanRef> = members
                .iter()
                .flat_map(|&i| per_doc[i].iter().map(|s| SpanRef::new(s.doc_id.clone(), s.start, s.end)))
                .collect();
            let gold: Vec<SpanRef> = members.iter().flat_map(|&i| documents[i].gold_literal()).collect();
            fold_prf.push(prf_toponyms(&predicted, &gold)?);
        }
        let summary = prf_over_folds(&fold_prf)?;
        let mut report = Vec::new();
        match output.format {
            Format::Csv => write_geoparse_csv(&mut report, &fold_prf, &summary)?,
            Format::Txt => write_geoparse_table(&mut report, &summary)?,
        }
        write_file(&out.join(format!("geoparse.{}", output.format.extension())), &report)?;
        let p = &summary.pooled;
        println!("precision {:.4}  recall {:.4}  f1 {:.4}", p.precision, p.recall, p.f1);
    }
    Ok(())
}
