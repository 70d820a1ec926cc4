//! Opponent utility matrices, structured opponent families, and incentive
//! uncertainty sets.
//!
//! A utility matrix is a `K×K` payoff over (true label, predicted label)
//! pairs with zero diagonal and entries in `[0,1]`. The adversarial utility
//! (all ones off-diagonal) dominates every other utility, which is what
//! makes adversarial training the maximally conservative special case.

use rand::seq::index::sample;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `K×K` opponent payoff over (true label, predicted label) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityMatrix {
    num_classes: usize,
    values: Vec<f64>,
}

impl UtilityMatrix {
    /// Validates the zero diagonal and `[0,1]` range.
    pub fn new(num_classes: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_classes * num_classes {
            return Err(Error::Dimension {
                expected: num_classes * num_classes,
                got: values.len(),
            });
        }
        for y in 0..num_classes {
            if values[y * num_classes + y] != 0.0 {
                return Err(Error::InvalidInput(format!(
                    "utility diagonal must be exactly zero (row {y})"
                )));
            }
        }
        if values.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
            return Err(Error::InvalidInput("utility entries must lie in [0,1]".into()));
        }
        Ok(UtilityMatrix {
            num_classes,
            values,
        })
    }

    pub fn zeros(num_classes: usize) -> Self {
        UtilityMatrix {
            num_classes,
            values: vec![0.0; num_classes * num_classes],
        }
    }

    /// Builds a 0-1 matrix from one target set per row.
    pub fn from_target_sets(num_classes: usize, rows: &[Vec<usize>]) -> Result<Self> {
        if rows.len() != num_classes {
            return Err(Error::Dimension {
                expected: num_classes,
                got: rows.len(),
            });
        }
        let mut values = vec![0.0; num_classes * num_classes];
        for (y, targets) in rows.iter().enumerate() {
            for &t in targets {
                if t >= num_classes {
                    return Err(Error::InvalidInput(format!("target {t} out of range")));
                }
                if t == y {
                    return Err(Error::InvalidInput(format!(
                        "row {y} may not target its own class"
                    )));
                }
                values[y * num_classes + t] = 1.0;
            }
        }
        UtilityMatrix::new(num_classes, values)
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, y: usize, y_pred: usize) -> f64 {
        self.values[y * self.num_classes + y_pred]
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.values[y * self.num_classes..(y + 1) * self.num_classes]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// True iff every entry is 0 or 1.
    pub fn is_zero_one(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0 || v == 1.0)
    }

    /// True iff every row has exactly one unit entry.
    pub fn is_one_hot(&self) -> bool {
        self.is_zero_one()
            && (0..self.num_classes).all(|y| {
                self.row(y).iter().filter(|&&v| v == 1.0).count() == 1
            })
    }

    /// The 0-1 support matrix: entry 1 iff the utility is strictly positive.
    pub fn support(&self) -> UtilityMatrix {
        UtilityMatrix {
            num_classes: self.num_classes,
            values: self
                .values
                .iter()
                .map(|&v| if v > 0.0 { 1.0 } else { 0.0 })
                .collect(),
        }
    }

    /// Writes the text form: `K=<int>` then K whitespace-separated rows.
    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("K={}\n", self.num_classes);
        for y in 0..self.num_classes {
            let row: Vec<String> = self.row(y).iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", row.join(" "));
        }
        out
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::Data {
            line: 1,
            msg: "empty utility file".into(),
        })?;
        let k: usize = header
            .trim()
            .strip_prefix("K=")
            .and_then(|s| s.parse().ok())
            .ok_or(Error::Data {
                line: 1,
                msg: format!("expected 'K=<int>' header, got '{header}'"),
            })?;
        let mut values = Vec::with_capacity(k * k);
        let mut rows = 0;
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<f64>().map_err(|_| Error::Data {
                        line: idx + 1,
                        msg: format!("non-numeric entry '{tok}'"),
                    })
                })
                .collect::<Result<_>>()?;
            if row.len() != k {
                return Err(Error::Data {
                    line: idx + 1,
                    msg: format!("expected {k} entries, got {}", row.len()),
                });
            }
            values.extend(row);
            rows += 1;
        }
        if rows != k {
            return Err(Error::Data {
                line: rows + 1,
                msg: format!("expected {k} rows, got {rows}"),
            });
        }
        UtilityMatrix::new(k, values)
    }
}

/// Assignment of every class to a semantic group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SemanticPartition {
    group_of: Vec<usize>,
}

impl SemanticPartition {
    pub fn new(group_of: Vec<usize>) -> Result<Self> {
        if group_of.is_empty() {
            return Err(Error::InvalidInput("partition must cover at least one class".into()));
        }
        Ok(SemanticPartition { group_of })
    }

    pub fn num_classes(&self) -> usize {
        self.group_of.len()
    }

    pub fn group_of(&self, class: usize) -> usize {
        self.group_of[class]
    }

    pub fn same_group(&self, a: usize, b: usize) -> bool {
        self.group_of[a] == self.group_of[b]
    }

    pub fn num_groups(&self) -> usize {
        self.group_of.iter().collect::<BTreeSet<_>>().len()
    }

    /// Class indices grouped by group id, ordered by group id.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let ids: BTreeSet<usize> = self.group_of.iter().copied().collect();
        ids.into_iter()
            .map(|g| {
                (0..self.group_of.len())
                    .filter(|&c| self.group_of[c] == g)
                    .collect()
            })
            .collect()
    }

    /// File format: one `class_index,group_id` line per class.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (c, g) in self.group_of.iter().enumerate() {
            let _ = writeln!(out, "{c},{g}");
        }
        std::fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (c, g) = line.split_once(',').ok_or(Error::Data {
                line: idx + 1,
                msg: format!("expected 'class,group', got '{line}'"),
            })?;
            let c: usize = c.trim().parse().map_err(|_| Error::Data {
                line: idx + 1,
                msg: format!("bad class index '{c}'"),
            })?;
            let g: usize = g.trim().parse().map_err(|_| Error::Data {
                line: idx + 1,
                msg: format!("bad group id '{g}'"),
            })?;
            pairs.push((c, g));
        }
        if pairs.is_empty() {
            return Err(Error::Data {
                line: 1,
                msg: "empty partition file".into(),
            });
        }
        pairs.sort_unstable();
        let expected: Vec<usize> = (0..pairs.len()).collect();
        let classes: Vec<usize> = pairs.iter().map(|&(c, _)| c).collect();
        if classes != expected {
            return Err(Error::Data {
                line: 1,
                msg: "partition must assign every class exactly once".into(),
            });
        }
        SemanticPartition::new(pairs.into_iter().map(|(_, g)| g).collect())
    }
}

/// The adversarial utility: ones everywhere off-diagonal.
pub fn adversarial_utility(num_classes: usize) -> Result<UtilityMatrix> {
    if num_classes < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    let mut values = vec![1.0; num_classes * num_classes];
    for y in 0..num_classes {
        values[y * num_classes + y] = 0.0;
    }
    UtilityMatrix::new(num_classes, values)
}

/// A random k-hot utility: each row has exactly `k` unit targets drawn
/// uniformly without replacement from the other classes.
pub fn k_hot_random(num_classes: usize, k: usize, seed: u64) -> Result<UtilityMatrix> {
    if k == 0 || k > num_classes.saturating_sub(1) {
        return Err(Error::InvalidInput(format!(
            "k must lie in [1, {}], got {k}",
            num_classes.saturating_sub(1)
        )));
    }
    let mut rng = stream_rng(seed, &[0x6b68_6f74]);
    let mut rows = Vec::with_capacity(num_classes);
    for y in 0..num_classes {
        let picks = sample(&mut rng, num_classes - 1, k);
        let targets: Vec<usize> = picks
            .into_iter()
            .map(|i| if i >= y { i + 1 } else { i })
            .collect();
        rows.push(targets);
    }
    UtilityMatrix::from_target_sets(num_classes, &rows)
}

/// Worst-case semantic utility: entry `(y, y')` is 1 iff `y' ≠ y` and both
/// share a semantic group.
pub fn semantic_representative(partition: &SemanticPartition) -> UtilityMatrix {
    let k = partition.num_classes();
    let mut values = vec![0.0; k * k];
    for y in 0..k {
        for t in 0..k {
            if t != y && partition.same_group(y, t) {
                values[y * k + t] = 1.0;
            }
        }
    }
    UtilityMatrix {
        num_classes: k,
        values,
    }
}

/// Worst-case anti-semantic utility: entry `(y, y')` is 1 iff the classes
/// belong to different semantic groups.
pub fn anti_semantic_representative(partition: &SemanticPartition) -> UtilityMatrix {
    let k = partition.num_classes();
    let mut values = vec![0.0; k * k];
    for y in 0..k {
        for t in 0..k {
            if t != y && !partition.same_group(y, t) {
                values[y * k + t] = 1.0;
            }
        }
    }
    UtilityMatrix {
        num_classes: k,
        values,
    }
}

/// Preference-order utility for one total ordering (listed from least to
/// most preferred class): entry `(y, y')` is 1 iff `y'` ranks strictly
/// above `y`.
pub fn preference_utility(ordering: &[usize]) -> Result<UtilityMatrix> {
    let k = ordering.len();
    let mut seen = vec![false; k];
    for &c in ordering {
        if c >= k || seen[c] {
            return Err(Error::InvalidInput("ordering must be a permutation of the classes".into()));
        }
        seen[c] = true;
    }
    let mut rank = vec![0usize; k];
    for (pos, &c) in ordering.iter().enumerate() {
        rank[c] = pos;
    }
    let mut values = vec![0.0; k * k];
    for y in 0..k {
        for t in 0..k {
            if rank[t] > rank[y] {
                values[y * k + t] = 1.0;
            }
        }
    }
    UtilityMatrix::new(k, values)
}

/// Elementwise `a ≤ b`.
pub fn dominates(a: &UtilityMatrix, b: &UtilityMatrix) -> Result<bool> {
    if a.num_classes != b.num_classes {
        return Err(Error::Dimension {
            expected: a.num_classes,
            got: b.num_classes,
        });
    }
    Ok(a.values.iter().zip(b.values.iter()).all(|(x, y)| x <= y))
}

/// Strictly positive targets of row `y`, in decreasing utility order with
/// exact value ties broken by lower class index.
pub fn targets_of(u: &UtilityMatrix, y: usize) -> Vec<usize> {
    let row = u.row(y);
    let mut targets: Vec<usize> = (0..u.num_classes).filter(|&t| row[t] > 0.0).collect();
    targets.sort_by(|&a, &b| {
        row[b]
            .partial_cmp(&row[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    targets
}

/// Enumerable or structured family of utility matrices.
#[derive(Debug, Clone, PartialEq)]
pub enum UncertaintySet {
    Singleton(UtilityMatrix),
    Explicit(Vec<UtilityMatrix>),
    AllKHot { num_classes: usize, k: usize },
    Semantic(SemanticPartition),
    AntiSemantic(SemanticPartition),
    /// Explicit, seedable list of total orderings (least preferred first).
    Preference {
        num_classes: usize,
        orderings: Vec<Vec<usize>>,
    },
}

/// Guards for enumerating all k-subsets of a row.
const K_HOT_CLASS_GUARD: usize = 12;
const K_HOT_CANDIDATE_GUARD: usize = 10_000;

impl UncertaintySet {
    pub fn validate(&self) -> Result<()> {
        match self {
            UncertaintySet::Singleton(_) => Ok(()),
            UncertaintySet::Explicit(members) => {
                if members.is_empty() {
                    return Err(Error::InvalidInput("explicit set must be non-empty".into()));
                }
                let k = members[0].num_classes;
                if members.iter().any(|m| m.num_classes != k) {
                    return Err(Error::InvalidInput("explicit members must share K".into()));
                }
                Ok(())
            }
            UncertaintySet::AllKHot { num_classes, k } => {
                if *k == 0 || *k >= *num_classes {
                    return Err(Error::InvalidInput(format!(
                        "k must lie in [1, {}], got {k}",
                        num_classes - 1
                    )));
                }
                Ok(())
            }
            UncertaintySet::Semantic(_) | UncertaintySet::AntiSemantic(_) => Ok(()),
            UncertaintySet::Preference {
                num_classes,
                orderings,
            } => {
                if orderings.is_empty() {
                    return Err(Error::InvalidInput("preference set needs at least one ordering".into()));
                }
                for ord in orderings {
                    if ord.len() != *num_classes {
                        return Err(Error::InvalidInput("ordering length must equal K".into()));
                    }
                    preference_utility(ord)?;
                }
                Ok(())
            }
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            UncertaintySet::Singleton(u) => u.num_classes,
            UncertaintySet::Explicit(members) => members[0].num_classes,
            UncertaintySet::AllKHot { num_classes, .. } => *num_classes,
            UncertaintySet::Semantic(p) | UncertaintySet::AntiSemantic(p) => p.num_classes(),
            UncertaintySet::Preference { num_classes, .. } => *num_classes,
        }
    }

    /// Candidate target sets for row `y`, deduplicated. Attacks decouple
    /// over the true label, so the per-row candidates are all an enumerating
    /// trainer or evaluator ever needs.
    pub fn row_candidates(&self, y: usize) -> Result<Vec<Vec<usize>>> {
        let k = self.num_classes();
        if y >= k {
            return Err(Error::InvalidInput(format!("class {y} out of range")));
        }
        let candidates = match self {
            UncertaintySet::Singleton(u) => vec![targets_of(u, y)],
            UncertaintySet::Explicit(members) => {
                members.iter().map(|u| targets_of(u, y)).collect()
            }
            UncertaintySet::AllKHot { num_classes, k } => {
                let others: Vec<usize> = (0..*num_classes).filter(|&c| c != y).collect();
                let count = binomial(others.len(), *k);
                if *num_classes > K_HOT_CLASS_GUARD || count > K_HOT_CANDIDATE_GUARD {
                    return Err(Error::Capacity(format!(
                        "enumerating C({}, {k}) = {count} k-hot rows exceeds the guard; sample instead",
                        others.len()
                    )));
                }
                k_subsets(&others, *k)
            }
            UncertaintySet::Semantic(p) => vec![targets_of(&semantic_representative(p), y)],
            UncertaintySet::AntiSemantic(p) => {
                vec![targets_of(&anti_semantic_representative(p), y)]
            }
            UncertaintySet::Preference { orderings, .. } => orderings
                .iter()
                .map(|ord| {
                    let u = preference_utility(ord).expect("validated ordering");
                    targets_of(&u, y)
                })
                .collect(),
        };
        let mut seen = BTreeSet::new();
        let mut unique = Vec::new();
        for c in candidates {
            if seen.insert(c.clone()) {
                unique.push(c);
            }
        }
        Ok(unique)
    }

    /// The elementwise-maximal member, when the set kind guarantees that
    /// training against it protects the whole set.
    pub fn worst_case_representative(&self) -> Option<UtilityMatrix> {
        match self {
            UncertaintySet::Singleton(u) => Some(u.clone()),
            UncertaintySet::Semantic(p) => Some(semantic_representative(p)),
            UncertaintySet::AntiSemantic(p) => Some(anti_semantic_representative(p)),
            UncertaintySet::AllKHot { num_classes, k } if *k == num_classes - 1 => {
                Some(adversarial_utility(*num_classes).expect("K >= 2"))
            }
            _ => None,
        }
    }

    /// Draws one member uniformly (per-row independent for factorizable
    /// kinds, which is uniform over the whole family).
    pub fn sample_uniform(&self, rng: &mut impl rand::Rng) -> UtilityMatrix {
        match self {
            UncertaintySet::Singleton(u) => u.clone(),
            UncertaintySet::Explicit(members) => {
                members[rng.random_range(0..members.len())].clone()
            }
            UncertaintySet::AllKHot { num_classes, k } => {
                let mut rows = Vec::with_capacity(*num_classes);
                for y in 0..*num_classes {
                    let picks = sample(rng, num_classes - 1, *k);
                    rows.push(
                        picks
                            .into_iter()
                            .map(|i| if i >= y { i + 1 } else { i })
                            .collect(),
                    );
                }
                UtilityMatrix::from_target_sets(*num_classes, &rows).expect("valid rows")
            }
            UncertaintySet::Semantic(p) => {
                sample_subset_rows(&semantic_representative(p), rng)
            }
            UncertaintySet::AntiSemantic(p) => {
                sample_subset_rows(&anti_semantic_representative(p), rng)
            }
            UncertaintySet::Preference { orderings, .. } => {
                let ord = &orderings[rng.random_range(0..orderings.len())];
                preference_utility(ord).expect("validated ordering")
            }
        }
    }
}

/// Uniform member of a downward-closed 0-1 family: each row an independent
/// uniform subset of the representative's row support.
fn sample_subset_rows(representative: &UtilityMatrix, rng: &mut impl rand::Rng) -> UtilityMatrix {
    let k = representative.num_classes();
    let mut rows = Vec::with_capacity(k);
    for y in 0..k {
        let support = targets_of(representative, y);
        let row: Vec<usize> = support
            .into_iter()
            .filter(|_| rng.random_range(0..2u8) == 1)
            .collect();
        rows.push(row);
    }
    UtilityMatrix::from_target_sets(k, &rows).expect("subset of valid support")
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// All k-subsets of `items` in lexicographic order.
fn k_subsets(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(k);
    fn recurse(items: &[usize], k: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        let needed = k - current.len();
        for i in start..=items.len().saturating_sub(needed) {
            current.push(items[i]);
            recurse(items, k, i + 1, current, out);
            current.pop();
        }
    }
    recurse(items, k, 0, &mut current, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn partition_ab() -> SemanticPartition {
        // {0,1} | {2}
        SemanticPartition::new(vec![0, 0, 1]).unwrap()
    }

    #[test]
    fn adversarial_utility_examples() {
        let u = adversarial_utility(3).unwrap();
        assert_eq!(
            u.values(),
            &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]
        );
        let u2 = adversarial_utility(2).unwrap();
        assert_eq!(u2.values(), &[0.0, 1.0, 1.0, 0.0]);
        assert!(adversarial_utility(1).is_err());
    }

    #[test]
    fn adversarial_dominates_everything() {
        let adv = adversarial_utility(4).unwrap();
        for seed in 0..5 {
            let u = k_hot_random(4, 2, seed).unwrap();
            assert!(dominates(&u, &adv).unwrap());
        }
    }

    #[test]
    fn k_hot_rows_have_exact_weight() {
        let u = k_hot_random(6, 2, 9).unwrap();
        for y in 0..6 {
            let sum: f64 = u.row(y).iter().sum();
            assert_eq!(sum, 2.0);
            assert_eq!(u.get(y, y), 0.0);
        }
        assert!(k_hot_random(6, 0, 1).is_err());
        assert!(k_hot_random(6, 6, 1).is_err());
    }

    #[test]
    fn k_hot_full_weight_is_adversarial() {
        let u = k_hot_random(5, 4, 3).unwrap();
        assert_eq!(u, adversarial_utility(5).unwrap());
    }

    #[test]
    fn k_hot_seeding_is_deterministic_and_spread() {
        let a = k_hot_random(10, 1, 7).unwrap();
        let b = k_hot_random(10, 1, 7).unwrap();
        assert_eq!(a, b);
        // 100 seeds into a 9^10 space: collisions should not happen.
        let mut seen = BTreeSet::new();
        for seed in 0..100u64 {
            let u = k_hot_random(10, 1, seed).unwrap();
            seen.insert(
                u.values()
                    .iter()
                    .map(|&v| if v > 0.0 { '1' } else { '0' })
                    .collect::<String>(),
            );
        }
        assert_eq!(seen.len(), 100);
    }

    #[test]
    fn semantic_representative_matches_partition() {
        let u = semantic_representative(&partition_ab());
        assert_eq!(
            u.values(),
            &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]
        );
    }

    #[test]
    fn semantic_row_sums_for_cifar_style_partition() {
        // 4 vehicle classes then 6 animal classes.
        let mut groups = vec![0usize; 4];
        groups.extend(vec![1usize; 6]);
        let p = SemanticPartition::new(groups).unwrap();
        let u = semantic_representative(&p);
        for y in 0..4 {
            assert_eq!(u.row(y).iter().sum::<f64>(), 3.0);
        }
        for y in 4..10 {
            assert_eq!(u.row(y).iter().sum::<f64>(), 5.0);
        }
    }

    #[test]
    fn singleton_groups_give_zero_semantic_utility() {
        let p = SemanticPartition::new(vec![0, 1, 2]).unwrap();
        assert_eq!(semantic_representative(&p), UtilityMatrix::zeros(3));
    }

    #[test]
    fn anti_semantic_representative_matches_partition() {
        let u = anti_semantic_representative(&partition_ab());
        assert_eq!(
            u.values(),
            &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0]
        );
    }

    #[test]
    fn semantic_and_anti_semantic_complement_to_adversarial() {
        for groups in [vec![0, 0, 1], vec![0, 1, 1, 0], vec![0, 0, 0]] {
            let k = groups.len();
            let p = SemanticPartition::new(groups).unwrap();
            let sem = semantic_representative(&p);
            let asem = anti_semantic_representative(&p);
            let adv = adversarial_utility(k).unwrap();
            for y in 0..k {
                for t in 0..k {
                    assert_eq!(sem.get(y, t) + asem.get(y, t), adv.get(y, t));
                    assert!(sem.get(y, t) * asem.get(y, t) == 0.0);
                }
            }
        }
    }

    #[test]
    fn one_group_means_zero_anti_semantic() {
        let p = SemanticPartition::new(vec![0, 0, 0]).unwrap();
        assert_eq!(anti_semantic_representative(&p), UtilityMatrix::zeros(3));
    }

    #[test]
    fn preference_utility_chain() {
        let u = preference_utility(&[0, 1, 2]).unwrap();
        assert_eq!(
            u.values(),
            &[0.0, 1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
        );
        // Top-ranked class cannot be attacked beneficially.
        let top = 2;
        assert!(u.row(top).iter().all(|&v| v == 0.0));
        // No symmetric gains.
        for y in 0..3 {
            for t in 0..3 {
                if u.get(y, t) == 1.0 {
                    assert_eq!(u.get(t, y), 0.0);
                }
            }
        }
        assert!(preference_utility(&[0, 0, 2]).is_err());
    }

    #[test]
    fn dominates_is_a_partial_order() {
        let p = partition_ab();
        let mats = vec![
            adversarial_utility(3).unwrap(),
            semantic_representative(&p),
            anti_semantic_representative(&p),
            k_hot_random(3, 1, 5).unwrap(),
            UtilityMatrix::zeros(3),
        ];
        for a in &mats {
            assert!(dominates(a, a).unwrap());
            for b in &mats {
                if dominates(a, b).unwrap() && dominates(b, a).unwrap() {
                    assert_eq!(a, b);
                }
                for c in &mats {
                    if dominates(a, b).unwrap() && dominates(b, c).unwrap() {
                        assert!(dominates(a, c).unwrap());
                    }
                }
            }
        }
        let u2 = adversarial_utility(2).unwrap();
        assert!(dominates(&mats[0], &u2).is_err());
    }

    #[test]
    fn semantic_dominated_by_representative() {
        let p = partition_ab();
        let rep = semantic_representative(&p);
        // A semantic opponent picks targets within groups only.
        let u = UtilityMatrix::from_target_sets(3, &[vec![1], vec![], vec![]]).unwrap();
        assert!(dominates(&u, &rep).unwrap());
    }

    #[test]
    fn targets_of_ordering() {
        let adv = adversarial_utility(4).unwrap();
        assert_eq!(targets_of(&adv, 2), vec![0, 1, 3]);

        let u = UtilityMatrix::new(3, vec![0.0, 0.9, 0.3, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(targets_of(&u, 0), vec![1, 2]);
        assert_eq!(targets_of(&u, 1), Vec::<usize>::new());
    }

    #[test]
    fn targets_of_breaks_value_ties_low() {
        let u = UtilityMatrix::new(3, vec![0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(targets_of(&u, 0), vec![1, 2]);
    }

    #[test]
    fn row_candidates_k_hot_counts() {
        let set = UncertaintySet::AllKHot {
            num_classes: 10,
            k: 1,
        };
        let c = set.row_candidates(0).unwrap();
        assert_eq!(c.len(), 9);
        assert!(c.iter().all(|t| t.len() == 1 && t[0] != 0));

        let set = UncertaintySet::AllKHot {
            num_classes: 6,
            k: 3,
        };
        for y in 0..6 {
            assert_eq!(set.row_candidates(y).unwrap().len(), binomial(5, 3));
        }
    }

    #[test]
    fn row_candidates_guard_trips() {
        let set = UncertaintySet::AllKHot {
            num_classes: 13,
            k: 1,
        };
        assert!(matches!(
            set.row_candidates(0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn row_candidates_semantic_is_single_row() {
        let set = UncertaintySet::Semantic(partition_ab());
        for y in 0..3 {
            assert_eq!(set.row_candidates(y).unwrap().len(), 1);
        }
        assert_eq!(set.row_candidates(0).unwrap()[0], vec![1]);
    }

    #[test]
    fn row_candidates_deduplicates_explicit_rows() {
        let a = UtilityMatrix::from_target_sets(3, &[vec![1], vec![0], vec![0]]).unwrap();
        let b = UtilityMatrix::from_target_sets(3, &[vec![1], vec![2], vec![0]]).unwrap();
        let set = UncertaintySet::Explicit(vec![a.clone(), b]);
        assert_eq!(set.row_candidates(0).unwrap(), vec![vec![1]]);
        assert_eq!(set.row_candidates(1).unwrap().len(), 2);

        let singleton = UncertaintySet::Explicit(vec![a.clone()]);
        for y in 0..3 {
            assert_eq!(singleton.row_candidates(y).unwrap(), vec![targets_of(&a, y)]);
        }
    }

    #[test]
    fn worst_case_representative_by_kind() {
        let p = partition_ab();
        assert_eq!(
            UncertaintySet::Semantic(p.clone()).worst_case_representative(),
            Some(semantic_representative(&p))
        );
        let one_hot_set = UncertaintySet::AllKHot {
            num_classes: 4,
            k: 1,
        };
        assert_eq!(one_hot_set.worst_case_representative(), None);
        let full = UncertaintySet::AllKHot {
            num_classes: 4,
            k: 3,
        };
        assert_eq!(
            full.worst_case_representative(),
            Some(adversarial_utility(4).unwrap())
        );
        let u = k_hot_random(4, 2, 1).unwrap();
        assert_eq!(
            UncertaintySet::Singleton(u.clone()).worst_case_representative(),
            Some(u)
        );
    }

    #[test]
    fn matrix_file_round_trip() {
        let u = UtilityMatrix::new(
            3,
            vec![0.0, 0.9, 0.3, 1.0, 0.0, 0.1, 0.25, 0.75, 0.0],
        )
        .unwrap();
        let text = u.to_text();
        let back = UtilityMatrix::from_text(&text).unwrap();
        assert_eq!(u, back);
    }

    #[test]
    fn matrix_file_rejects_bad_rows() {
        assert!(UtilityMatrix::from_text("K=2\n0 1\n1 0 0\n").is_err());
        assert!(UtilityMatrix::from_text("K=2\n0 x\n1 0\n").is_err());
        assert!(UtilityMatrix::from_text("garbage\n").is_err());
    }

    #[test]
    fn partition_file_round_trip() {
        let p = SemanticPartition::new(vec![0, 0, 1, 1, 2]).unwrap();
        let text = {
            let mut s = String::new();
            for (c, g) in (0..5).zip([0, 0, 1, 1, 2]) {
                s.push_str(&format!("{c},{g}\n"));
            }
            s
        };
        assert_eq!(SemanticPartition::from_text(&text).unwrap(), p);
        assert!(SemanticPartition::from_text("0,0\n2,1\n").is_err());
    }

    #[test]
    fn constructors_uphold_matrix_invariants() {
        let p = partition_ab();
        let mats = vec![
            adversarial_utility(3).unwrap(),
            k_hot_random(3, 1, 0).unwrap(),
            semantic_representative(&p),
            anti_semantic_representative(&p),
            preference_utility(&[2, 0, 1]).unwrap(),
        ];
        for u in mats {
            for y in 0..3 {
                assert_eq!(u.get(y, y), 0.0);
            }
            assert!(u.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn one_hot_predicate() {
        assert!(k_hot_random(4, 1, 2).unwrap().is_one_hot());
        assert!(!adversarial_utility(4).unwrap().is_one_hot());
        assert!(!UtilityMatrix::zeros(4).is_one_hot());
    }
}
