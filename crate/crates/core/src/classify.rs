//! Nearest-neighbor gesture classification over the signature distance and
//! the subject-aware evaluation protocols.
//!
//! Folds are independent and run in parallel; per-fold confusion counts are
//! summed, so the aggregate never depends on scheduling order. All random
//! choices (half-half shuffles, image-per-subject picks) derive from one
//! seed, making every protocol run reproducible.

use std::fmt::Write as _;
use std::str::FromStr;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::features::Signature;
use crate::iemd::iemd;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("signature {0} is missing a label or subject tag")]
    MissingTags(usize),
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("k must be at least 1 and at most the training size {0}")]
    BadK(usize),
    #[error("unknown protocol {0:?}")]
    BadProtocol(String),
    #[error("protocol needs more subjects: have {have}, need at least {need}")]
    NotEnoughSubjects { have: usize, need: usize },
}

/// Signatures with mandatory label and subject tags.
#[derive(Debug, Clone)]
pub struct LabeledSet {
    signatures: Vec<Signature>,
}

impl LabeledSet {
    pub fn new(signatures: Vec<Signature>) -> Result<Self, ClassifyError> {
        for (i, s) in signatures.iter().enumerate() {
            if s.label.is_none() || s.subject.is_none() {
                return Err(ClassifyError::MissingTags(i));
            }
        }
        Ok(LabeledSet { signatures })
    }

    pub fn signatures(&self) -> &[Signature] {
        &self.signatures
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    /// Distinct labels, ascending.
    pub fn labels(&self) -> Vec<i64> {
        self.signatures.iter().filter_map(|s| s.label).sorted().dedup().collect()
    }

    /// Distinct subjects, ascending.
    pub fn subjects(&self) -> Vec<i64> {
        self.signatures.iter().filter_map(|s| s.subject).sorted().dedup().collect()
    }
}

/// Predicted label for one signature: majority vote among the `k` nearest
/// training signatures by distance, distance ties favoring earlier training
/// entries and vote ties falling back to the single nearest neighbor.
pub fn knn_classify(test: &Signature, train: &[Signature], k: usize) -> Result<i64, ClassifyError> {
    if train.is_empty() {
        return Err(ClassifyError::EmptyTrainingSet);
    }
    if k == 0 || k > train.len() {
        return Err(ClassifyError::BadK(train.len()));
    }
    let mut ranked: Vec<(f64, usize)> = train
        .iter()
        .enumerate()
        .map(|(i, s)| (iemd(test, s), i))
        .collect();
    ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let neighbor_label = |i: usize| train[ranked[i].1].label.expect("labeled training set");
    let mut votes: Vec<(i64, usize)> = Vec::new();
    for i in 0..k {
        let label = neighbor_label(i);
        match votes.iter_mut().find(|(l, _)| *l == label) {
            Some((_, n)) => *n += 1,
            None => votes.push((label, 1)),
        }
    }
    let best = votes.iter().map(|&(_, n)| n).max().expect("k >= 1");
    let mut leaders = votes.iter().filter(|&&(_, n)| n == best);
    let leader = leaders.next().expect("at least one leader").0;
    Ok(if leaders.next().is_some() { neighbor_label(0) } else { leader })
}

/// Subject-aware evaluation protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    /// Half the samples of every (subject, label) group train, the rest test.
    HalfHalf,
    /// Every combination of this many subjects held out in turn.
    LeaveSubjectsOut(usize),
    /// One random sample per subject trains, everything else tests.
    ImagePerSubject,
}

impl FromStr for Protocol {
    type Err = ClassifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "h-h" => Ok(Protocol::HalfHalf),
            "l-o-o" => Ok(Protocol::LeaveSubjectsOut(1)),
            "i2i" => Ok(Protocol::ImagePerSubject),
            other => {
                let p = other
                    .strip_prefix("l-")
                    .and_then(|t| t.strip_suffix("-o"))
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&p| p >= 1);
                p.map(Protocol::LeaveSubjectsOut)
                    .ok_or_else(|| ClassifyError::BadProtocol(other.to_string()))
            }
        }
    }
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Protocol::HalfHalf => f.write_str("h-h"),
            Protocol::LeaveSubjectsOut(1) => f.write_str("l-o-o"),
            Protocol::LeaveSubjectsOut(p) => write!(f, "l-{p}-o"),
            Protocol::ImagePerSubject => f.write_str("i2i"),
        }
    }
}

/// Aggregated true-by-predicted counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<i64>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn new(labels: Vec<i64>) -> Self {
        let k = labels.len();
        ConfusionMatrix { labels, counts: vec![vec![0; k]; k] }
    }

    fn add(&mut self, truth: i64, predicted: i64) {
        let t = self.labels.binary_search(&truth).expect("known true label");
        let p = self.labels.binary_search(&predicted).expect("known predicted label");
        self.counts[t][p] += 1;
    }

    fn absorb(&mut self, other: &ConfusionMatrix) {
        for (mine, theirs) in self.counts.iter_mut().zip(&other.counts) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                *m += t;
            }
        }
    }

    /// Class labels indexing the rows and columns, ascending.
    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    /// Count of true-label `t` samples predicted as `p`.
    pub fn count(&self, t: i64, p: i64) -> u64 {
        let ti = self.labels.binary_search(&t).expect("known label");
        let pi = self.labels.binary_search(&p).expect("known label");
        self.counts[ti][pi]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn mean_accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.trace() as f64 / total as f64
        }
    }

    /// CSV form: a predicted-label header, one row per true label, then the
    /// summary line `mean_accuracy <value>`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in &self.labels {
            write!(out, ",{l}").unwrap();
        }
        out.push('\n');
        for (t, row) in self.labels.iter().zip(&self.counts) {
            write!(out, "{t}").unwrap();
            for c in row {
                write!(out, ",{c}").unwrap();
            }
            out.push('\n');
        }
        writeln!(out, "mean_accuracy {}", self.mean_accuracy()).unwrap();
        out
    }
}

/// A protocol run: the pooled confusion matrix and how many train/test
/// folds it aggregates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolReport {
    pub matrix: ConfusionMatrix,
    pub folds: usize,
}

// One fold: indices into the set. Test indices keep dataset order.
struct Fold {
    train: Vec<usize>,
    test: Vec<usize>,
}

fn make_folds(
    data: &LabeledSet,
    protocol: Protocol,
    seed: u64,
) -> Result<Vec<Fold>, ClassifyError> {
    let sigs = data.signatures();
    match protocol {
        Protocol::HalfHalf => {
            let mut train = Vec::new();
            let mut test = Vec::new();
            let groups: Vec<(i64, i64)> = sigs
                .iter()
                .map(|s| (s.subject.unwrap(), s.label.unwrap()))
                .sorted()
                .dedup()
                .collect();
            for (gi, &(subject, label)) in groups.iter().enumerate() {
                let mut members: Vec<usize> = (0..sigs.len())
                    .filter(|&i| {
                        sigs[i].subject.unwrap() == subject && sigs[i].label.unwrap() == label
                    })
                    .collect();
                // Independent stream per group so group order cannot leak
                // between shuffles.
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (gi as u64).wrapping_mul(0x9e37));
                members.shuffle(&mut rng);
                let half = members.len() / 2;
                train.extend_from_slice(&members[..half]);
                test.extend_from_slice(&members[half..]);
            }
            if train.is_empty() {
                return Err(ClassifyError::EmptyTrainingSet);
            }
            train.sort_unstable();
            test.sort_unstable();
            Ok(vec![Fold { train, test }])
        }
        Protocol::LeaveSubjectsOut(p) => {
            let subjects = data.subjects();
            if p >= subjects.len() {
                return Err(ClassifyError::NotEnoughSubjects { have: subjects.len(), need: p + 1 });
            }
            let folds = subjects
                .iter()
                .copied()
                .combinations(p)
                .map(|held| {
                    let out = |i: &usize| held.contains(&sigs[*i].subject.unwrap());
                    let test: Vec<usize> = (0..sigs.len()).filter(|i| out(i)).collect();
                    let train: Vec<usize> = (0..sigs.len()).filter(|i| !out(i)).collect();
                    Fold { train, test }
                })
                .collect();
            Ok(folds)
        }
        Protocol::ImagePerSubject => {
            // One random sample per (subject, label) group: coarser picks
            // would leave whole classes untrained and no classifier could
            // score on them.
            let groups: Vec<(i64, i64)> = sigs
                .iter()
                .map(|s| (s.subject.unwrap(), s.label.unwrap()))
                .sorted()
                .dedup()
                .collect();
            if groups.is_empty() {
                return Err(ClassifyError::EmptyTrainingSet);
            }
            let mut train = Vec::new();
            for (gi, &(subject, label)) in groups.iter().enumerate() {
                let members: Vec<usize> = (0..sigs.len())
                    .filter(|&i| {
                        sigs[i].subject.unwrap() == subject && sigs[i].label.unwrap() == label
                    })
                    .collect();
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (gi as u64).wrapping_mul(0x9e37));
                let pick = members[rand::Rng::random_range(&mut rng, 0..members.len())];
                train.push(pick);
            }
            train.sort_unstable();
            let test: Vec<usize> = (0..sigs.len()).filter(|i| !train.contains(i)).collect();
            Ok(vec![Fold { train, test }])
        }
    }
}

/// Runs an evaluation protocol: builds its folds, classifies every test
/// signature against its fold's training set with `k`-nearest-neighbor
/// voting, and pools the confusion counts over all folds.
pub fn run_protocol(
    data: &LabeledSet,
    protocol: Protocol,
    k: usize,
    seed: u64,
) -> Result<ProtocolReport, ClassifyError> {
    let folds = make_folds(data, protocol, seed)?;
    let labels = data.labels();
    let sigs = data.signatures();

    let partials: Vec<Result<ConfusionMatrix, ClassifyError>> = folds
        .par_iter()
        .map(|fold| {
            let train: Vec<Signature> =
                fold.train.iter().map(|&i| sigs[i].clone()).collect();
            let mut matrix = ConfusionMatrix::new(labels.clone());
            for &t in &fold.test {
                let predicted = knn_classify(&sigs[t], &train, k)?;
                matrix.add(sigs[t].label.unwrap(), predicted);
            }
            Ok(matrix)
        })
        .collect();

    let mut matrix = ConfusionMatrix::new(labels);
    for partial in partials {
        matrix.absorb(&partial?);
    }
    Ok(ProtocolReport { matrix, folds: folds.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    // A signature whose first cluster encodes `value`; distance between two
    // such signatures is |a - b| / 6.
    fn sig(value: f64, label: i64, subject: i64) -> Signature {
        let mut s = Signature::empty();
        s.clusters[0][0] = value;
        s.real_count = 1;
        s.label = Some(label);
        s.subject = Some(subject);
        s
    }

    // Three separated classes, `per_subject` samples per subject each.
    fn separated(subjects: i64, per_subject: usize) -> LabeledSet {
        let mut sigs = Vec::new();
        for label in 0..3 {
            for subject in 0..subjects {
                for _ in 0..per_subject {
                    sigs.push(sig(label as f64, label, subject));
                }
            }
        }
        LabeledSet::new(sigs).unwrap()
    }

    #[test]
    fn nearest_neighbor_returns_own_label() {
        let train = vec![sig(0.0, 1, 0), sig(1.0, 2, 0), sig(2.0, 3, 0)];
        assert_eq!(knn_classify(&sig(1.0, 9, 9), &train, 1).unwrap(), 2);
    }

    #[test]
    fn majority_wins_and_ties_fall_to_nearest() {
        // Neighbors at distances 1, 2, 3 labeled {a, a, b}.
        let train = vec![sig(1.0, 7, 0), sig(2.0, 7, 0), sig(3.0, 8, 0)];
        assert_eq!(knn_classify(&sig(0.0, 0, 0), &train, 3).unwrap(), 7);
        // Labels {a, b, c}: three-way tie, nearest wins.
        let train = vec![sig(1.0, 7, 0), sig(2.0, 8, 0), sig(3.0, 9, 0)];
        assert_eq!(knn_classify(&sig(0.0, 0, 0), &train, 3).unwrap(), 7);
        // Two-way tie {a, a, b, b} with b nearest.
        let train =
            vec![sig(1.0, 5, 0), sig(2.0, 4, 0), sig(3.0, 4, 0), sig(4.0, 5, 0)];
        assert_eq!(knn_classify(&sig(0.0, 0, 0), &train, 4).unwrap(), 5);
    }

    #[test]
    fn distance_ties_prefer_earlier_training_entries() {
        let train = vec![sig(1.0, 3, 0), sig(1.0, 4, 0)];
        assert_eq!(knn_classify(&sig(1.0, 0, 0), &train, 1).unwrap(), 3);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(matches!(
            knn_classify(&sig(0.0, 0, 0), &[], 1),
            Err(ClassifyError::EmptyTrainingSet)
        ));
        let train = vec![sig(0.0, 1, 0)];
        assert!(matches!(knn_classify(&sig(0.0, 0, 0), &train, 2), Err(ClassifyError::BadK(1))));
        assert!(matches!(knn_classify(&sig(0.0, 0, 0), &train, 0), Err(ClassifyError::BadK(1))));

        let untagged = Signature::empty();
        assert!(matches!(LabeledSet::new(vec![untagged]), Err(ClassifyError::MissingTags(0))));
    }

    #[test]
    fn protocol_strings_roundtrip() {
        for (text, p) in [
            ("h-h", Protocol::HalfHalf),
            ("l-o-o", Protocol::LeaveSubjectsOut(1)),
            ("l-4-o", Protocol::LeaveSubjectsOut(4)),
            ("i2i", Protocol::ImagePerSubject),
        ] {
            assert_eq!(text.parse::<Protocol>().unwrap(), p);
            assert_eq!(p.to_string(), text);
        }
        assert!("l-0-o".parse::<Protocol>().is_err());
        assert!("loo".parse::<Protocol>().is_err());
    }

    #[test]
    fn separated_classes_score_perfectly_under_every_protocol() {
        let data = separated(4, 4);
        for protocol in [
            Protocol::HalfHalf,
            Protocol::LeaveSubjectsOut(1),
            Protocol::LeaveSubjectsOut(2),
            Protocol::ImagePerSubject,
        ] {
            let report = run_protocol(&data, protocol, 3, 7).unwrap();
            assert_eq!(report.matrix.mean_accuracy(), 1.0, "{protocol}");
            assert_eq!(report.matrix.trace(), report.matrix.total());
        }
    }

    #[test]
    fn fold_counts_and_sizes_match_the_combinatorics() {
        let data = separated(5, 2); // 3 labels x 5 subjects x 2 samples
        let hh = run_protocol(&data, Protocol::HalfHalf, 1, 1).unwrap();
        assert_eq!(hh.folds, 1);
        // Each (subject,label) group of 2 splits 1 train / 1 test.
        assert_eq!(hh.matrix.total(), 15);

        let lpo = run_protocol(&data, Protocol::LeaveSubjectsOut(2), 1, 1).unwrap();
        assert_eq!(lpo.folds, 10); // C(5,2)
        // Every fold tests 2 subjects x 3 labels x 2 samples.
        assert_eq!(lpo.matrix.total(), 10 * 12);

        let i2i = run_protocol(&data, Protocol::ImagePerSubject, 1, 1).unwrap();
        assert_eq!(i2i.folds, 1);
        // One image per (subject, label) group trains, the rest test.
        assert_eq!(i2i.matrix.total(), 30 - 15);

        assert!(matches!(
            run_protocol(&data, Protocol::LeaveSubjectsOut(5), 1, 1),
            Err(ClassifyError::NotEnoughSubjects { have: 5, need: 6 })
        ));
    }

    #[test]
    fn protocol_runs_are_deterministic() {
        let data = separated(4, 3);
        for protocol in
            [Protocol::HalfHalf, Protocol::LeaveSubjectsOut(1), Protocol::ImagePerSubject]
        {
            let a = run_protocol(&data, protocol, 3, 42).unwrap();
            let b = run_protocol(&data, protocol, 3, 42).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn training_on_the_test_signature_keeps_it_correct() {
        let mut train = vec![sig(0.0, 1, 0), sig(0.4, 2, 0)];
        let test = sig(0.21, 2, 0);
        assert_eq!(knn_classify(&test, &train, 1).unwrap(), 2);
        train.push(test.clone());
        assert_eq!(knn_classify(&test, &train, 1).unwrap(), 2);
    }

    #[test]
    fn csv_layout_lists_predictions_per_true_label() {
        let data = separated(2, 2);
        let report = run_protocol(&data, Protocol::HalfHalf, 1, 3).unwrap();
        let csv = report.matrix.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "true\\predicted,0,1,2");
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[1], "0,2,0,0");
        assert!(lines[4].starts_with("mean_accuracy "));
        assert_eq!(lines[4], "mean_accuracy 1");
    }
}
