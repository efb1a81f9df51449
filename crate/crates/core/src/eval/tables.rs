use std::io::Write;

use super::reference::{published_accuracy, published_ensemble, published_transfer, PUBLISHED_GEOPARSE};
use super::{summarize, EvalError, FoldPrf, MetricSummary, Prf};
use crate::trainer::Variant;

fn pct(x: f64) -> String {
    format!("{:.1}", 100.0 * x)
}

fn pct_pm(s: &MetricSummary) -> String {
    format!("{:.1} ± {:.2}", 100.0 * s.mean, 100.0 * s.std)
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| x.to_string())
}

/// Writes rows of cells as left-aligned columns separated by two spaces.
fn write_aligned<W: Write>(w: &mut W, rows: &[Vec<String>]) -> Result<(), EvalError> {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    for row in rows {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            if c + 1 < row.len() {
                line.extend(std::iter::repeat_n(' ', widths[c] - cell.chars().count()));
            }
        }
        writeln!(w, "{}", line.trim_end())?;
    }
    Ok(())
}

/// Accuracy of one (dataset, variant) configuration over several runs.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub dataset: String,
    pub variant: Variant,
    pub summary: MetricSummary,
    /// Accuracy of the majority ensemble of the runs, when computed.
    pub ensemble: Option<f64>,
}

pub fn write_accuracy_csv<W: Write>(w: W, rows: &[AccuracyRow]) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "dataset",
        "variant",
        "n_runs",
        "mean",
        "std_population",
        "ensemble",
        "published_mean_pct",
        "published_std_pct",
        "published_ensemble_pct",
    ])?;
    for r in rows {
        let published = published_accuracy(&r.dataset, r.variant);
        out.write_record([
            r.dataset.clone(),
            r.variant.to_string(),
            r.summary.n.to_string(),
            r.summary.mean.to_string(),
            r.summary.std.to_string(),
            opt(r.ensemble),
            opt(published.map(|p| p.mean)),
            opt(published.map(|p| p.std)),
            opt(if r.variant == Variant::Masked { published_ensemble(&r.dataset) } else { None }),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Accuracy table: one row per variant (plus ensembles), one column per
/// dataset, followed by the published reference figures for the same cells.
pub fn write_accuracy_table<W: Write>(mut w: W, rows: &[AccuracyRow]) -> Result<(), EvalError> {
    let mut datasets: Vec<&str> = Vec::new();
    for r in rows {
        if !datasets.contains(&r.dataset.as_str()) {
            datasets.push(&r.dataset);
        }
    }
    let find = |d: &str, v: Variant| rows.iter().find(|r| r.dataset == d && r.variant == v);
    let mut header = vec!["method".to_string()];
    header.extend(datasets.iter().map(|d| d.to_string()));
    let mut local = vec![header.clone()];
    let mut published = vec![header];
    for v in Variant::ALL {
        if !rows.iter().any(|r| r.variant == v) {
            continue;
        }
        let mut line = vec![v.to_string()];
        let mut pline = vec![v.to_string()];
        for d in &datasets {
            line.push(find(d, v).map_or("-".into(), |r| pct_pm(&r.summary)));
            pline.push(published_accuracy(d, v).map_or("-".into(), |p| format!("{:.1} ± {:.2}", p.mean, p.std)));
        }
        local.push(line);
        published.push(pline);
        if rows.iter().any(|r| r.variant == v && r.ensemble.is_some()) {
            let mut line = vec![format!("ensemble {v}")];
            let mut pline = vec![format!("ensemble {v}")];
            for d in &datasets {
                line.push(find(d, v).and_then(|r| r.ensemble).map_or("-".into(), pct));
                let p = if v == Variant::Masked { published_ensemble(d) } else { None };
                pline.push(p.map_or("-".into(), |x| format!("{x:.1}")));
            }
            local.push(line);
            published.push(pline);
        }
    }
    writeln!(w, "Accuracy (%), mean ± population std over runs")?;
    write_aligned(&mut w, &local)?;
    writeln!(w)?;
    writeln!(w, "Published reference, pretrained large encoder (not comparable at this scale)")?;
    write_aligned(&mut w, &published)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomainPair {
    pub source: String,
    pub target: String,
}

impl DomainPair {
    pub fn new(source: impl Into<String>, target: impl Into<String>) -> DomainPair {
        DomainPair {
            source: source.into(),
            target: target.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossDomainCell {
    pub pair: DomainPair,
    pub variant: Variant,
    /// Summary of run accuracies, or the error that stopped the cell.
    pub outcome: Result<MetricSummary, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossDomainMatrix {
    pub pairs: Vec<DomainPair>,
    pub variants: Vec<Variant>,
    /// Pair-major order.
    pub cells: Vec<CrossDomainCell>,
}

impl CrossDomainMatrix {
    pub fn cell(&self, pair: usize, variant: usize) -> &CrossDomainCell {
        &self.cells[pair * self.variants.len() + variant]
    }
}

/// Fills a (pair × variant) matrix. `run` returns the per-run accuracies of
/// a cell; a failing cell records its error and the rest still run.
pub fn cross_domain<F>(pairs: &[DomainPair], variants: &[Variant], mut run: F) -> CrossDomainMatrix
where
    F: FnMut(&DomainPair, Variant) -> Result<Vec<f64>, String>,
{
    let mut cells = Vec::with_capacity(pairs.len() * variants.len());
    for pair in pairs {
        for &variant in variants {
            let outcome = run(pair, variant).and_then(|v| summarize(&v).map_err(|e| e.to_string()));
            cells.push(CrossDomainCell {
                pair: pair.clone(),
                variant,
                outcome,
            });
        }
    }
    CrossDomainMatrix {
        pairs: pairs.to_vec(),
        variants: variants.to_vec(),
        cells,
    }
}

pub fn write_cross_domain_csv<W: Write>(w: W, m: &CrossDomainMatrix) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "source",
        "target",
        "variant",
        "n_runs",
        "mean",
        "std_population",
        "error",
        "published_mean_pct",
        "published_std_pct",
    ])?;
    for c in &m.cells {
        let published = published_transfer(&c.pair.source, &c.pair.target, c.variant);
        let (n, mean, std, err) = match &c.outcome {
            Ok(s) => (s.n.to_string(), s.mean.to_string(), s.std.to_string(), String::new()),
            Err(e) => (String::new(), String::new(), String::new(), e.clone()),
        };
        out.write_record([
            c.pair.source.clone(),
            c.pair.target.clone(),
            c.variant.to_string(),
            n,
            mean,
            std,
            err,
            opt(published.map(|p| p.mean)),
            opt(published.map(|p| p.std)),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Cross-domain table: one row per `source → target` pair, one column per
/// variant, each local cell followed by its published reference.
pub fn write_cross_domain_table<W: Write>(mut w: W, m: &CrossDomainMatrix) -> Result<(), EvalError> {
    let mut header = vec!["source → target".to_string()];
    for v in &m.variants {
        header.push(v.to_string());
        header.push(format!("{v} (published)"));
    }
    let mut rows = vec![header];
    for (pi, pair) in m.pairs.iter().enumerate() {
        let mut line = vec![format!("{} → {}", pair.source, pair.target)];
        for (vi, &v) in m.variants.iter().enumerate() {
            line.push(match &m.cell(pi, vi).outcome {
                Ok(s) => pct_pm(s),
                Err(_) => "failed".into(),
            });
            line.push(
                published_transfer(&pair.source, &pair.target, v)
                    .map_or("-".into(), |p| format!("{:.1} ± {:.2}", p.mean, p.std)),
            );
        }
        rows.push(line);
    }
    writeln!(w, "Cross-domain accuracy (%), mean ± population std over runs; published figures are from a pretrained large encoder")?;
    write_aligned(&mut w, &rows)?;
    for c in &m.cells {
        if let Err(e) = &c.outcome {
            writeln!(w, "failed: {} → {} {}: {e}", c.pair.source, c.pair.target, c.variant)?;
        }
    }
    Ok(())
}

pub fn write_geoparse_csv<W: Write>(w: W, folds: &[Prf], summary: &FoldPrf) -> Result<(), EvalError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["fold", "precision", "recall", "f1", "tp", "fp", "fn"])?;
    for (i, f) in folds.iter().enumerate() {
        out.write_record([
            (i + 1).to_string(),
            f.precision.to_string(),
            f.recall.to_string(),
            f.f1.to_string(),
            f.tp.to_string(),
            f.fp.to_string(),
            f.fn_.to_string(),
        ])?;
    }
    let blank = String::new;
    out.write_record([
        "mean".into(),
        summary.precision.mean.to_string(),
        summary.recall.mean.to_string(),
        summary.f1.mean.to_string(),
        blank(),
        blank(),
        blank(),
    ])?;
    out.write_record([
        "std_population".into(),
        summary.precision.std.to_string(),
        summary.recall.std.to_string(),
        summary.f1.std.to_string(),
        blank(),
        blank(),
        blank(),
    ])?;
    let p = &summary.pooled;
    out.write_record([
        "pooled".into(),
        p.precision.to_string(),
        p.recall.to_string(),
        p.f1.to_string(),
        p.tp.to_string(),
        p.fp.to_string(),
        p.fn_.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn write_geoparse_table<W: Write>(mut w: W, summary: &FoldPrf) -> Result<(), EvalError> {
    let [pp, pr, pf] = PUBLISHED_GEOPARSE;
    let fmt = |(m, s): (f64, f64)| format!("{m:.1} ± {s:.2}");
    let rows = vec![
        vec!["model".to_string(), "precision".into(), "recall".into(), "f1".into()],
        vec![
            format!("mean over {} folds", summary.f1.n),
            pct_pm(&summary.precision),
            pct_pm(&summary.recall),
            pct_pm(&summary.f1),
        ],
        vec![
            "pooled counts".into(),
            pct(summary.pooled.precision),
            pct(summary.pooled.recall),
            pct(summary.pooled.f1),
        ],
        vec!["published reference".into(), fmt(pp), fmt(pr), fmt(pf)],
    ];
    writeln!(w, "Geoparsing (%), exact span match, population std over folds")?;
    write_aligned(&mut w, &rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::prf_over_folds;

    #[test]
    fn failing_cells_do_not_stop_the_matrix() {
        let pairs = vec![DomainPair::new("a", "b"), DomainPair::new("conll", "relocar")];
        let m = cross_domain(&pairs, &[Variant::Plain, Variant::Masked], |p, v| {
            if p.source == "a" && v == Variant::Plain {
                Err("boom".into())
            } else {
                Ok(vec![0.5, 0.7])
            }
        });
        assert_eq!(m.cells.len(), 4);
        assert!(m.cell(0, 0).outcome.is_err());
        assert!((m.cell(1, 1).outcome.as_ref().unwrap().mean - 0.6).abs() < 1e-15);
        let mut text = Vec::new();
        write_cross_domain_table(&mut text, &m).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.contains("conll → relocar"));
        assert!(text.contains("93.5 ± 0.40"));
        assert!(text.contains("failed: a → b plain: boom"));
        let mut csv_out = Vec::new();
        write_cross_domain_csv(&mut csv_out, &m).unwrap();
        assert!(String::from_utf8(csv_out).unwrap().contains("conll,relocar,mask,2,0.6,"));
    }

    #[test]
    fn accuracy_table_lists_reference() {
        let rows = vec![AccuracyRow {
            dataset: "relocar".into(),
            variant: Variant::Masked,
            summary: MetricSummary { mean: 0.9, std: 0.01, n: 3 },
            ensemble: Some(0.92),
        }];
        let mut text = Vec::new();
        write_accuracy_table(&mut text, &rows).unwrap();
        let text = String::from_utf8(text).unwrap();
        assert!(text.contains("90.0 ± 1.00"));
        assert!(text.contains("94.4 ± 0.31"));
        assert!(text.contains("ensemble mask"));
        assert!(text.contains("94.8"));
    }

    #[test]
    fn geoparse_outputs() {
        let folds = vec![Prf::from_counts(1, 1, 1), Prf::from_counts(2, 0, 0)];
        let s = prf_over_folds(&folds).unwrap();
        let mut csv_out = Vec::new();
        write_geoparse_csv(&mut csv_out, &folds, &s).unwrap();
        let csv_out = String::from_utf8(csv_out).unwrap();
        assert!(csv_out.contains("pooled,0.75,0.75,0.75,3,1,1"));
        let mut text = Vec::new();
        write_geoparse_table(&mut text, &s).unwrap();
        assert!(String::from_utf8(text).unwrap().contains("81.1 ± 0.93"));
    }
}
