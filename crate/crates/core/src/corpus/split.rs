use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{CorpusError, Sample};

#[derive(Debug, Clone, PartialEq)]
pub enum SplitKind {
    /// Random partition with the given part fractions.
    Fixed { fractions: Vec<f64> },
    /// Partition in which no `pmw_key` appears in more than one part.
    Lexical { fractions: Vec<f64> },
    /// `k` folds whose sizes differ by at most one.
    KFold { k: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    pub kind: SplitKind,
    pub seed: u64,
}

/// Allowed deviation of a lexical part from its requested size, as a
/// fraction of the corpus. At least one sample of slack is always allowed
/// since part sizes are integers.
pub const LEXICAL_TOLERANCE: f64 = 0.02;

impl SplitSpec {
    pub fn fixed(fractions: Vec<f64>, seed: u64) -> Self {
        SplitSpec { kind: SplitKind::Fixed { fractions }, seed }
    }

    pub fn lexical(fractions: Vec<f64>, seed: u64) -> Self {
        SplitSpec { kind: SplitKind::Lexical { fractions }, seed }
    }

    pub fn kfold(k: usize, seed: u64) -> Self {
        SplitSpec { kind: SplitKind::KFold { k }, seed }
    }

    /// Parses `fixed:0.8,0.1,0.1`, `lexical:0.8,0.2` or `kfold:5`.
    pub fn parse(s: &str, seed: u64) -> Result<SplitSpec, CorpusError> {
        let (kind, args) = s
            .split_once(':')
            .ok_or_else(|| CorpusError::InvalidSplit(format!("expected kind:args, got {s:?}")))?;
        let fractions = || -> Result<Vec<f64>, CorpusError> {
            args.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| CorpusError::InvalidSplit(format!("bad fraction {f:?}")))
                })
                .collect()
        };
        let spec = match kind {
            "fixed" => SplitSpec::fixed(fractions()?, seed),
            "lexical" => SplitSpec::lexical(fractions()?, seed),
            "kfold" => SplitSpec::kfold(
                args.trim()
                    .parse()
                    .map_err(|_| CorpusError::InvalidSplit(format!("bad fold count {args:?}")))?,
                seed,
            ),
            other => return Err(CorpusError::InvalidSplit(format!("unknown split kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        match &self.kind {
            SplitKind::Fixed { fractions } | SplitKind::Lexical { fractions } => {
                if fractions.len() < 2 {
                    return Err(CorpusError::InvalidSplit("need at least two parts".into()));
                }
                if fractions.iter().any(|f| !(*f > 0.0 && *f < 1.0)) {
                    return Err(CorpusError::InvalidSplit(format!("fractions must lie in (0,1): {fractions:?}")));
                }
                let sum: f64 = fractions.iter().sum();
                if (sum - 1.0).abs() > 1e-9 {
                    return Err(CorpusError::InvalidSplit(format!("fractions sum to {sum}, not 1")));
                }
            }
            SplitKind::KFold { k } => {
                if *k < 2 {
                    return Err(CorpusError::InvalidSplit(format!("k must be at least 2, got {k}")));
                }
            }
        }
        Ok(())
    }

    pub fn parts(&self) -> usize {
        match &self.kind {
            SplitKind::Fixed { fractions } | SplitKind::Lexical { fractions } => fractions.len(),
            SplitKind::KFold { k } => *k,
        }
    }
}

/// Partitions `samples` according to `spec`.
///
/// Every sample lands in exactly one part, and samples keep their input order
/// within a part. The result depends only on the inputs and the seed.
pub fn split(samples: &[Sample], spec: &SplitSpec) -> Result<Vec<Vec<Sample>>, CorpusError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let assignment: Vec<usize> = match &spec.kind {
        SplitKind::Fixed { fractions } => {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.shuffle(&mut rng);
            let mut part_of = vec![0; samples.len()];
            let mut cum = 0.0;
            let mut begin = 0;
            for (p, f) in fractions.iter().enumerate() {
                cum += f;
                let end = if p + 1 == fractions.len() {
                    samples.len()
                } else {
                    ((cum * samples.len() as f64).round() as usize).min(samples.len())
                };
                for &idx in &order[begin..end.max(begin)] {
                    part_of[idx] = p;
                }
                begin = end.max(begin);
            }
            part_of
        }
        SplitKind::KFold { k } => {
            let mut order: Vec<usize> = (0..samples.len()).collect();
            order.shuffle(&mut rng);
            let mut part_of = vec![0; samples.len()];
            for (pos, &idx) in order.iter().enumerate() {
                part_of[idx] = pos % k;
            }
            part_of
        }
        SplitKind::Lexical { fractions } => lexical_assignment(samples, fractions, &mut rng)?,
    };
    let mut parts = vec![Vec::new(); spec.parts()];
    for (s, p) in samples.iter().zip(assignment) {
        parts[p].push(s.clone());
    }
    Ok(parts)
}

/// Keys sorted by descending frequency are handed one by one to the part
/// currently furthest below its requested size.
fn lexical_assignment(
    samples: &[Sample],
    fractions: &[f64],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>, CorpusError> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for s in samples {
        *counts.entry(s.pmw_key.as_str()).or_default() += 1;
    }
    let mut keys: Vec<(&str, usize)> = counts.into_iter().collect();
    if keys.len() < fractions.len() {
        let (key, count) = keys.iter().max_by_key(|(_, c)| *c).copied().unwrap_or(("", 0));
        return Err(CorpusError::Infeasible { key: key.to_string(), count });
    }
    // Seeded shuffle breaks frequency ties; the sort is stable.
    keys.shuffle(rng);
    keys.sort_by(|a, b| b.1.cmp(&a.1));

    let n = samples.len() as f64;
    let targets: Vec<f64> = fractions.iter().map(|f| f * n).collect();
    let mut sizes = vec![0usize; fractions.len()];
    let mut part_of_key: BTreeMap<&str, usize> = BTreeMap::new();
    let mut largest_in: Vec<Option<(&str, usize)>> = vec![None; fractions.len()];
    for &(key, count) in &keys {
        let p = (0..fractions.len())
            .max_by(|&a, &b| {
                let da = targets[a] - sizes[a] as f64;
                let db = targets[b] - sizes[b] as f64;
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        sizes[p] += count;
        part_of_key.insert(key, p);
        if largest_in[p].is_none() {
            largest_in[p] = Some((key, count));
        }
    }

    let tolerance = (LEXICAL_TOLERANCE * n).max(1.0);
    let worst = (0..fractions.len())
        .map(|p| (p, (sizes[p] as f64 - targets[p]).abs()))
        .max_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if worst.1 > tolerance || sizes.iter().any(|&s| s == 0) {
        let over = (0..fractions.len())
            .max_by(|&a, &b| {
                (sizes[a] as f64 - targets[a])
                    .partial_cmp(&(sizes[b] as f64 - targets[b]))
                    .unwrap()
            })
            .unwrap();
        let (key, count) = largest_in[over].unwrap_or(keys[0]);
        return Err(CorpusError::Infeasible { key: key.to_string(), count });
    }
    Ok(samples.iter().map(|s| part_of_key[s.pmw_key.as_str()]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use std::collections::HashSet;

    fn corpus(keys: &[&str]) -> Vec<Sample> {
        keys.iter()
            .enumerate()
            .map(|(i, k)| Sample::new(format!("s{i}"), format!("{k} is here"), 0, k.chars().count(), Label::Literal, "t").unwrap())
            .collect()
    }

    fn key_set(part: &[Sample]) -> HashSet<String> {
        part.iter().map(|s| s.pmw_key.clone()).collect()
    }

    #[test]
    fn lexical_two_thirds_has_no_shared_key() {
        let samples = corpus(&["a", "a", "b", "b", "c", "c"]);
        for seed in 0..50 {
            let parts = split(&samples, &SplitSpec::lexical(vec![2.0 / 3.0, 1.0 / 3.0], seed)).unwrap();
            assert_eq!(parts[0].len(), 4);
            assert_eq!(parts[1].len(), 2);
            assert!(key_set(&parts[0]).is_disjoint(&key_set(&parts[1])));
        }
    }

    #[test]
    fn lexical_single_key_is_infeasible() {
        let samples = corpus(&["paris"; 4]);
        match split(&samples, &SplitSpec::lexical(vec![0.5, 0.5], 1)) {
            Err(CorpusError::Infeasible { key, count }) => {
                assert_eq!(key, "paris");
                assert_eq!(count, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn lexical_dominating_key_is_named() {
        let mut keys = vec!["big"; 8];
        keys.extend(["a", "b"]);
        let err = split(&corpus(&keys), &SplitSpec::lexical(vec![0.5, 0.5], 3)).unwrap_err();
        assert!(matches!(err, CorpusError::Infeasible { ref key, .. } if key == "big"), "{err:?}");
    }

    #[test]
    fn kfold_sizes() {
        let samples = corpus(&["a"; 10]);
        let parts = split(&samples, &SplitSpec::kfold(5, 9)).unwrap();
        assert!(parts.iter().all(|p| p.len() == 2));
        let parts = split(&corpus(&["a"; 11]), &SplitSpec::kfold(3, 9)).unwrap();
        let mut sizes: Vec<usize> = parts.iter().map(Vec::len).collect();
        sizes.sort();
        assert_eq!(sizes, [3, 4, 4]);
    }

    #[test]
    fn fixed_is_exhaustive_and_seeded() {
        let samples = corpus(&["a", "b", "c", "d", "e", "f", "g", "h", "i", "j"]);
        let spec = SplitSpec::fixed(vec![0.8, 0.1, 0.1], 4);
        let a = split(&samples, &spec).unwrap();
        assert_eq!(a, split(&samples, &spec).unwrap());
        assert_eq!(a.iter().map(Vec::len).collect::<Vec<_>>(), [8, 1, 1]);
        let mut ids: Vec<String> = a.iter().flatten().map(|s| s.id.clone()).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), 10);
    }

    #[test]
    fn spec_validation() {
        assert!(SplitSpec::parse("fixed:0.5,0.4", 0).is_err());
        assert!(SplitSpec::parse("kfold:1", 0).is_err());
        assert!(SplitSpec::parse("lexical:1.0", 0).is_err());
        assert!(SplitSpec::parse("bogus:2", 0).is_err());
        assert_eq!(SplitSpec::parse("kfold:5", 7).unwrap(), SplitSpec::kfold(5, 7));
        assert!(SplitSpec::parse("lexical:0.8,0.2", 7).is_ok());
    }
}
