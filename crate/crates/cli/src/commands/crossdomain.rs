use std::collections::BTreeMap;
use std::path::PathBuf;

use metores_core::eval::{accuracy, cross_domain, write_cross_domain_csv, write_cross_domain_table, DomainPair};
use metores_core::tokenizer::build_vocab;
use metores_core::trainer::{predict, train};
use metores_core::{ModelConfig, Variant};

use super::data::{load_splits, Splits};
use crate::error::{invalid, CliError};
use crate::manifest::{parse_seeds, ExperimentManifest, RawManifest};
use crate::output::{log, resolve_out, write_file};
use crate::{Format, OutputArgs};

/// Per-run accuracies keyed by (variant, source label, target label).
type Cells = BTreeMap<(Variant, String, String), Result<Vec<f64>, String>>;

/// Experiment manifests and requested pairs, expanding a crossdomain
/// manifest (`experiments = a.txt, b.txt` and `pairs = a:b, b:a`).
fn expand(manifests: &[PathBuf], pairs: &[String]) -> Result<(Vec<PathBuf>, Vec<String>, Option<PathBuf>), CliError> {
    if let [only] = manifests {
        let raw = RawManifest::load(only)?;
        if let Some(list) = raw.get("experiments") {
            raw.reject_unknown(&["experiments", "pairs", "out"])?;
            let experiments = list.split(',').map(|p| raw.dir.join(p.trim())).collect();
            let mut all: Vec<String> = raw
                .get("pairs")
                .map(|p| p.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect())
                .unwrap_or_default();
            all.extend(pairs.iter().cloned());
            return Ok((experiments, all, raw.output_path("out")));
        }
    }
    Ok((manifests.to_vec(), pairs.to_vec(), None))
}

pub(crate) fn run(
    manifests: &[PathBuf],
    pair_args: &[String],
    variants: &[Variant],
    seeds: Option<&str>,
    include_diagonal: bool,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let (manifests, pair_specs, manifest_out) = expand(manifests, pair_args)?;
    let mut experiments = Vec::new();
    for path in &manifests {
        let mut m = ExperimentManifest::load(path)?;
        if let Some(s) = seeds {
            m.seeds = parse_seeds(s).map_err(invalid)?;
        }
        experiments.push(m);
    }
    let labels: Vec<&str> = experiments.iter().map(|m| m.dataset_label()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(invalid(format!("two manifests share the dataset label {l:?}")));
        }
    }
    let index = |l: &str| {
        labels
            .iter()
            .position(|x| *x == l)
            .ok_or_else(|| invalid(format!("pair names unknown dataset {l:?} (known: {})", labels.join(", "))))
    };
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    if pair_specs.is_empty() {
        for s in 0..labels.len() {
            for t in 0..labels.len() {
                if include_diagonal || s != t {
                    pairs.push((s, t));
                }
            }
        }
    } else {
        for spec in &pair_specs {
            let (s, t) = spec
                .split_once(':')
                .ok_or_else(|| invalid(format!("pair {spec:?} is not source:target")))?;
            let p = (index(s.trim())?, index(t.trim())?);
            if pairs.contains(&p) {
                return Err(invalid(format!("pair {spec:?} listed twice")));
            }
            pairs.push(p);
        }
    }
    if pairs.is_empty() {
        return Err(invalid("no domain pairs to evaluate"));
    }
    let variants = if variants.is_empty() { Variant::ALL.to_vec() } else { variants.to_vec() };
    let used: Vec<usize> = (0..experiments.len()).filter(|i| pairs.iter().any(|&(s, t)| s == *i || t == *i)).collect();
    let mut data: BTreeMap<usize, Splits> = BTreeMap::new();
    for &i in &used {
        data.insert(i, load_splits(&experiments[i])?);
    }

    let out = resolve_out(output.out.as_deref(), manifest_out.as_deref(), "crossdomain");
    std::fs::create_dir_all(&out)?;
    log(&out, &format!("crossdomain pairs={pair_specs:?} variants={variants:?}"))?;

    // Each source model is trained once per variant and seed, then scored on
    // each of its targets.
    let mut cells: Cells = BTreeMap::new();
    for &si in &used {
        let targets: Vec<usize> = pairs.iter().filter(|p| p.0 == si).map(|p| p.1).collect();
        if targets.is_empty() {
            continue;
        }
        let source = &experiments[si];
        let vocab = build_vocab(&data[&si].train, source.vocab_size)?;
        let model = ModelConfig {
            vocab_size: vocab.len(),
            ..source.model.clone()
        };
        for &variant in &variants {
            for &seed in &source.seeds {
                let config = source.train.clone().with_variant(variant).with_seed(seed);
                let trained = train(&config, &data[&si].train, &data[&si].dev, &vocab, &model);
                for &ti in &targets {
                    let eval_set = data[&ti].eval_set();
                    let acc = match &trained {
                        Ok((params, _)) => predict(params, &vocab, eval_set, variant, config.max_seq_len)
                            .map_err(|e| e.to_string())
                            .and_then(|p| accuracy(&p, eval_set).map_err(|e| e.to_string())),
                        Err(e) => Err(format!("seed {seed}: {e}")),
                    };
                    let key = (variant, labels[si].to_string(), labels[ti].to_string());
                    let cell = cells.entry(key).or_insert_with(|| Ok(Vec::new()));
                    match (cell.as_mut(), acc) {
                        (Ok(v), Ok(a)) => v.push(a),
                        (Ok(_), Err(e)) => *cell = Err(e),
                        (Err(_), _) => {}
                    }
                }
            }
        }
    }

    let domain_pairs: Vec<DomainPair> = pairs.iter().map(|&(s, t)| DomainPair::new(labels[s], labels[t])).collect();
    let matrix = cross_domain(&domain_pairs, &variants, |pair, variant| {
        cells[&(variant, pair.source.clone(), pair.target.clone())].clone()
    });
    let mut report = Vec::new();
    match output.format {
        Format::Csv => write_cross_domain_csv(&mut report, &matrix)?,
        Format::Txt => write_cross_domain_table(&mut report, &matrix)?,
    }
    write_file(&out.join(format!("crossdomain.{}", output.format.extension())), &report)?;
    let failed = matrix.cells.iter().filter(|c| c.outcome.is_err()).count();
    log(&out, &format!("done, {failed} failed cells"))?;
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: matrix.cells.len(),
        });
    }
    Ok(())
}
