//! Template corpora with known ground truth.
//!
//! Sentences are built from templates whose context alone decides the
//! reading (literal or metonymic), plus neutral templates that carry no
//! signal. Target names are invented from syllables, so they share subword
//! pieces the way real place names do.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Label, Sample};

/// Placeholder for the target inside a template.
pub const SLOT: &str = "{}";

pub const LITERAL_TEMPLATES: &[&str] = &[
    "We drove to {} last summer .",
    "The hotel in {} was cheap and quiet .",
    "She was born in {} in a small house .",
    "Heavy rain fell on {} all night .",
    "The road to {} was closed by snow .",
    "He moved to {} after college .",
    "The museum in {} opens at nine .",
    "Tourists walked through {} at dawn .",
    "The river flows north of {} .",
    "They built a bridge near {} .",
    "Our train arrived in {} two hours late .",
    "Farmers around {} grow wheat .",
];

pub const METONYMIC_TEMPLATES: &[&str] = &[
    "{} signed the trade agreement .",
    "{} won the match in extra time .",
    "{} announced new tariffs on steel .",
    "{} voted against the proposal .",
    "The coach said {} played well .",
    "{} refused to negotiate with the rebels .",
    "{} scored twice in the final .",
    "Talks between {} and the union failed .",
    "{} condemned the attack in a statement .",
    "{} raised interest rates again .",
    "The minister said {} will send troops .",
    "{} beat the champions on Sunday .",
];

pub const NEUTRAL_TEMPLATES: &[&str] = &[
    "They talked about {} for a while .",
    "I read something about {} today .",
    "This note mentions {} once .",
    "Everyone had an opinion about {} .",
    "The report was about {} .",
    "Nobody expected {} in the news .",
];

const ONSETS: &[&str] = &["b", "d", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st", "gr", "tr"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u", "ia", "ou"];
const CODAS: &[&str] = &["", "", "n", "r", "s", "l", "m"];

/// `n` distinct capitalized names of two or three syllables.
pub fn place_names(n: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut names: Vec<String> = Vec::with_capacity(n);
    while names.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut name = String::new();
        for _ in 0..syllables {
            name.push_str(ONSETS.choose(&mut rng).unwrap());
            name.push_str(VOWELS.choose(&mut rng).unwrap());
        }
        name.push_str(CODAS.choose(&mut rng).unwrap());
        let mut chars = name.chars();
        let first = chars.next().unwrap().to_ascii_uppercase();
        let name: String = std::iter::once(first).chain(chars).collect();
        if !names.contains(&name) {
            names.push(name);
        }
    }
    names
}

/// Fills `template` with `name` at its single slot.
pub fn fill(template: &str, name: &str, id: impl Into<String>, label: Label, dataset: &str) -> Sample {
    let (before, after) = template.split_once(SLOT).expect("template has a slot");
    let start = before.chars().count();
    let text = format!("{before}{name}{after}");
    Sample::new(id, text, start, start + name.chars().count(), label, dataset).expect("template sample is valid")
}

fn templates_for(label: Label) -> &'static [&'static str] {
    match label {
        Label::Literal => LITERAL_TEMPLATES,
        Label::Metonymic => METONYMIC_TEMPLATES,
    }
}

fn random_label(rng: &mut ChaCha8Rng) -> Label {
    if rng.random_bool(0.5) {
        Label::Literal
    } else {
        Label::Metonymic
    }
}

/// Samples whose label is decided by the template alone, with names drawn
/// from `names`.
pub fn context_corpus(n: usize, names: &[String], prefix: &str, seed: u64) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = random_label(&mut rng);
            let template = templates_for(label).choose(&mut rng).unwrap();
            let name = names.choose(&mut rng).unwrap();
            fill(template, name, format!("{prefix}{i}"), label, "synthetic")
        })
        .collect()
}

/// Linearly separable corpus: context alone determines the label.
pub fn separable_corpus(n: usize, seed: u64) -> Vec<Sample> {
    let names = place_names(30, seed ^ 0x5EED);
    context_corpus(n, &names, "s", seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSplits {
    pub train: Vec<Sample>,
    pub dev: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Shape of the lexical-bias corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct LexicalBiasConfig {
    /// Names per label group.
    pub names_per_label: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// Share of training (and dev) samples in a neutral context, where only
    /// the name reveals the label.
    pub neutral_fraction: f64,
}

impl Default for LexicalBiasConfig {
    fn default() -> Self {
        LexicalBiasConfig {
            names_per_label: 6,
            train: 240,
            dev: 80,
            test: 200,
            neutral_fraction: 0.4,
        }
    }
}

/// Corpus where the name predicts the label in training but not in test.
///
/// Names come in two groups. In train and dev every name of the first group
/// is literal and every name of the second metonymic; a share of those
/// samples sit in neutral contexts, so the name is the only complete cue.
/// Test samples put first-group names in metonymic contexts and second-group
/// names in literal ones, so a model that learned the names is wrong exactly
/// where a model that learned the contexts is right.
pub fn lexical_bias_corpus(config: &LexicalBiasConfig, seed: u64) -> SyntheticSplits {
    let names = place_names(2 * config.names_per_label, seed ^ 0x1E71);
    let (lit_names, met_names) = names.split_at(config.names_per_label);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let biased = |n: usize, prefix: &str, rng: &mut ChaCha8Rng| -> Vec<Sample> {
        (0..n)
            .map(|i| {
                let label = random_label(rng);
                let group = if label == Label::Literal { lit_names } else { met_names };
                let name = group.choose(rng).unwrap();
                let template = if rng.random_bool(config.neutral_fraction) {
                    NEUTRAL_TEMPLATES.choose(rng).unwrap()
                } else {
                    templates_for(label).choose(rng).unwrap()
                };
                fill(template, name, format!("{prefix}{i}"), label, "lexical_bias")
            })
            .collect()
    };
    let train = biased(config.train, "train", &mut rng);
    let dev = biased(config.dev, "dev", &mut rng);
    let test = (0..config.test)
        .map(|i| {
            let label = random_label(&mut rng);
            let group = if label == Label::Literal { met_names } else { lit_names };
            let name = group.choose(&mut rng).unwrap();
            let template = templates_for(label).choose(&mut rng).unwrap();
            fill(template, name, format!("test{i}"), label, "lexical_bias")
        })
        .collect();
    SyntheticSplits { train, dev, test }
}

/// Shape of the skewed-names corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewedNamesConfig {
    pub train_names: usize,
    pub eval_names: usize,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
    /// Probability that a training sample takes its name's majority label.
    pub skew: f64,
    /// Share of training samples whose label is flipped at random.
    pub label_noise: f64,
}

impl Default for SkewedNamesConfig {
    fn default() -> Self {
        SkewedNamesConfig {
            train_names: 24,
            eval_names: 24,
            train: 240,
            dev: 120,
            test: 120,
            skew: 0.85,
            label_noise: 0.05,
        }
    }
}

/// Corpus in the style of a Wikipedia-derived location set: each training
/// name leans towards one reading, and dev/test use unseen names with
/// balanced readings.
pub fn skewed_names_corpus(config: &SkewedNamesConfig, seed: u64) -> SyntheticSplits {
    let names = place_names(config.train_names + config.eval_names, seed ^ 0x5CE3);
    let (train_names, eval_names) = names.split_at(config.train_names);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let leaning: Vec<Label> = (0..train_names.len())
        .map(|i| if i % 2 == 0 { Label::Literal } else { Label::Metonymic })
        .collect();
    let mut train = Vec::with_capacity(config.train);
    for i in 0..config.train {
        let k = rng.random_range(0..train_names.len());
        let mut context = if rng.random_bool(config.skew) { leaning[k] } else { leaning[k].flip() };
        let template = templates_for(context).choose(&mut rng).unwrap();
        if rng.random_bool(config.label_noise) {
            context = context.flip();
        }
        train.push(fill(template, &train_names[k], format!("train{i}"), context, "skewed"));
    }
    let dev = context_corpus(config.dev, eval_names, "dev", seed ^ 0xDE7);
    let test = context_corpus(config.test, eval_names, "test", seed ^ 0x7E57);
    SyntheticSplits { train, dev, test }
}

/// Copies of `samples` with every label flipped and `:flip` appended to the
/// ids; a twin domain that follows the opposite labelling convention.
pub fn label_flipped(samples: &[Sample], dataset: &str) -> Vec<Sample> {
    samples
        .iter()
        .map(|s| {
            let mut t = s.clone();
            t.id = format!("{}:flip", s.id);
            t.label = s.label.flip();
            t.dataset = dataset.to_string();
            t
        })
        .collect()
}

/// Shuffles a copy of `samples` deterministically.
pub fn shuffled(samples: &[Sample], seed: u64) -> Vec<Sample> {
    let mut out = samples.to_vec();
    out.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    out
}
