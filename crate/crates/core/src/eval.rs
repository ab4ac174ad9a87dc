//! Classification metrics, McNemar's test and stratified train/valid/test
//! splits.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;

use crate::dataset::{Label, NewsArticle};
use crate::error::{Error, Result};
use crate::rng::{rng_from, stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub auc: f64,
    /// `[[tp, fn], [fp, tn]]` with fake as the positive class.
    pub confusion: [[usize; 2]; 2],
}

impl Metrics {
    pub fn n(&self) -> usize {
        self.confusion.iter().flatten().sum()
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let [[tp, fn_], [fp, tn]] = self.confusion;
        vec![
            ("accuracy".into(), self.accuracy.to_string()),
            ("precision".into(), self.macro_precision.to_string()),
            ("recall".into(), self.macro_recall.to_string()),
            ("f1".into(), self.macro_f1.to_string()),
            ("auc".into(), self.auc.to_string()),
            ("tp".into(), tp.to_string()),
            ("fn".into(), fn_.to_string()),
            ("fp".into(), fp.to_string()),
            ("tn".into(), tn.to_string()),
        ]
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Mann-Whitney AUC with midranks for ties. Returns 0.5 when one class
/// is absent.
pub fn rank_auc(labels: &[Label], probabilities: &[f64]) -> f64 {
    let n_pos = labels.iter().filter(|l| l.is_fake()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return 0.5;
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by(|&a, &b| probabilities[a].total_cmp(&probabilities[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && probabilities[order[j + 1]] == probabilities[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 share their average.
        let mid = (i + j + 2) as f64 / 2.0;
        rank_sum += mid * order[i..=j].iter().filter(|&&k| labels[k].is_fake()).count() as f64;
        i = j + 1;
    }
    let (p, n) = (n_pos as f64, n_neg as f64);
    (rank_sum - p * (p + 1.0) / 2.0) / (p * n)
}

/// Brute-force AUC over all positive/negative pairs, ties counting half.
pub fn rank_auc_oracle(labels: &[Label], probabilities: &[f64]) -> Result<f64> {
    let pos: Vec<f64> = labels.iter().zip(probabilities).filter(|(l, _)| l.is_fake()).map(|(_, &p)| p).collect();
    let neg: Vec<f64> = labels.iter().zip(probabilities).filter(|(l, _)| !l.is_fake()).map(|(_, &p)| p).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::SingleClass);
    }
    let mut score = 0.0;
    for &a in &pos {
        for &b in &neg {
            score += if a > b {
                1.0
            } else if a == b {
                0.5
            } else {
                0.0
            };
        }
    }
    Ok(score / (pos.len() * neg.len()) as f64)
}

/// Threshold 0.5 (fake iff `p >= 0.5`); macro averages over both classes.
pub fn compute_metrics(labels: &[Label], probabilities: &[f64]) -> Result<Metrics> {
    if labels.len() != probabilities.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            got: probabilities.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::invalid("no examples to score"));
    }
    if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::invalid(format!("probability {p} outside [0, 1]")));
    }
    let mut c = [[0usize; 2]; 2];
    for (l, &p) in labels.iter().zip(probabilities) {
        let row = if l.is_fake() { 0 } else { 1 };
        let col = if p >= 0.5 { 0 } else { 1 };
        c[row][col] += 1;
    }
    let [[tp, fn_], [fp, tn]] = c;
    let (p_pos, r_pos) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
    let (p_neg, r_neg) = (ratio(tn, tn + fn_), ratio(tn, tn + fp));
    Ok(Metrics {
        accuracy: ratio(tp + tn, labels.len()),
        macro_precision: (p_pos + p_neg) / 2.0,
        macro_recall: (r_pos + r_neg) / 2.0,
        macro_f1: (f1(p_pos, r_pos) + f1(p_neg, r_neg)) / 2.0,
        auc: rank_auc(labels, probabilities),
        confusion: c,
    })
}

/// Continuity-corrected McNemar statistic `max(|b - c| - 1, 0)² / (b + c)`
/// and its chi-square(1) p-value.
pub fn mcnemar(b: i64, c: i64) -> Result<(f64, f64)> {
    if b < 0 || c < 0 {
        return Err(Error::invalid("disagreement counts must be nonnegative"));
    }
    if b + c == 0 {
        return Ok((0.0, 1.0));
    }
    let diff = ((b - c).abs() - 1).max(0) as f64;
    let stat = diff * diff / (b + c) as f64;
    Ok((stat, libm::erfc((stat / 2.0).sqrt())))
}

/// Disagreement counts `(b, c)`: `b` = A right and B wrong.
pub fn disagreements(truth: &[Label], a: &[Label], b: &[Label]) -> Result<(i64, i64)> {
    if truth.len() != a.len() || truth.len() != b.len() {
        return Err(Error::invalid("prediction lists differ in length"));
    }
    let mut out = (0, 0);
    for ((t, x), y) in truth.iter().zip(a).zip(b) {
        match (x == t, y == t) {
            (true, false) => out.0 += 1,
            (false, true) => out.1 += 1,
            _ => {}
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Train,
    Valid,
    Test,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Role::Train => "train",
            Role::Valid => "valid",
            Role::Test => "test",
        })
    }
}

impl FromStr for Role {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Role::Train),
            "valid" => Ok(Role::Valid),
            "test" => Ok(Role::Test),
            other => Err(Error::invalid(format!("unknown split role `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitPlan {
    pub train_fraction: f64,
    pub seed: u64,
    pub roles: BTreeMap<String, Role>,
}

impl SplitPlan {
    pub fn ids(&self, role: Role) -> Vec<&str> {
        self.roles.iter().filter(|(_, &r)| r == role).map(|(id, _)| id.as_str()).collect()
    }

    pub fn count(&self, role: Role) -> usize {
        self.roles.values().filter(|&&r| r == role).count()
    }

    pub fn role(&self, id: &str) -> Option<Role> {
        self.roles.get(id).copied()
    }

    /// `article_id<TAB>role` lines after two `#` header lines.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "# train_fraction {}", self.train_fraction)?;
        writeln!(w, "# seed {}", self.seed)?;
        for (id, role) in &self.roles {
            writeln!(w, "{id}\t{role}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// Headers are optional, so externally produced split files load too.
    pub fn read(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut plan = SplitPlan {
            train_fraction: f64::NAN,
            seed: 0,
            roles: BTreeMap::new(),
        };
        for (i, line) in BufReader::new(fs::File::open(path)?).lines().enumerate() {
            let line = line?;
            let line = line.trim_end();
            if let Some(header) = line.strip_prefix('#') {
                let mut parts = header.split_whitespace();
                match (parts.next(), parts.next()) {
                    (Some("train_fraction"), Some(v)) => {
                        plan.train_fraction = v.parse().map_err(|_| Error::parse(&name, i + 1, "bad fraction"))?
                    }
                    (Some("seed"), Some(v)) => {
                        plan.seed = v.parse().map_err(|_| Error::parse(&name, i + 1, "bad seed"))?
                    }
                    _ => {}
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (id, role) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(&name, i + 1, "expected `article_id<TAB>role`"))?;
            let role = role.parse().map_err(|e: Error| Error::parse(&name, i + 1, e.to_string()))?;
            if plan.roles.insert(id.to_string(), role).is_some() {
                return Err(Error::parse(&name, i + 1, format!("duplicate article `{id}`")));
            }
        }
        if plan.train_fraction.is_nan() && !plan.roles.is_empty() {
            plan.train_fraction = plan.count(Role::Train) as f64 / plan.roles.len() as f64;
        }
        Ok(plan)
    }
}

/// Splits `total` across buckets proportionally to `sizes`: floors first,
/// leftovers to the largest fractional parts (earlier bucket on ties).
fn largest_remainder(total: usize, sizes: &[usize]) -> Vec<usize> {
    let sum: usize = sizes.iter().sum();
    if sum == 0 {
        return vec![0; sizes.len()];
    }
    let exact: Vec<f64> = sizes.iter().map(|&s| total as f64 * s as f64 / sum as f64).collect();
    let mut quota: Vec<usize> = exact.iter().map(|e| (e + 1e-9).floor() as usize).collect();
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - quota[a] as f64;
        let fb = exact[b] - quota[b] as f64;
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut left = total.saturating_sub(quota.iter().sum());
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if quota[k] < sizes[k] {
            quota[k] += 1;
            left -= 1;
        }
    }
    quota
}

/// Stratified split. The training size is `floor(fraction · N)`; the rest
/// is halved (floor) into validation, the remainder being the test set.
pub fn make_splits(articles: &[NewsArticle], train_fraction: f64, seed: u64) -> Result<SplitPlan> {
    if articles.is_empty() {
        return Err(Error::invalid("no articles to split"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let mut classes: [Vec<&str>; 2] = [Vec::new(), Vec::new()];
    for a in articles {
        classes[usize::from(!a.label.is_fake())].push(&a.article_id);
    }
    let mut rng = rng_from(&[stream::SPLIT, seed]);
    for c in &mut classes {
        c.sort_unstable();
        c.shuffle(&mut rng);
    }
    let n = articles.len();
    let n_train = (train_fraction * n as f64 + 1e-9).floor() as usize;
    let sizes = [classes[0].len(), classes[1].len()];
    let train = largest_remainder(n_train, &sizes);
    let rest = [sizes[0] - train[0], sizes[1] - train[1]];
    let valid = largest_remainder((n - n_train) / 2, &rest);
    let mut roles = BTreeMap::new();
    for k in 0..2 {
        for (i, id) in classes[k].iter().enumerate() {
            let role = if i < train[k] {
                Role::Train
            } else if i < train[k] + valid[k] {
                Role::Valid
            } else {
                Role::Test
            };
            if roles.insert(id.to_string(), role).is_some() {
                return Err(Error::invalid(format!("duplicate article `{id}`")));
            }
        }
    }
    Ok(SplitPlan {
        train_fraction,
        seed,
        roles,
    })
}

/// Flat `key=value` lines.
pub fn write_report(path: &Path, pairs: &[(String, String)]) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for (k, v) in pairs {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<Vec<(String, String)>> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(i, l)| {
            l.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::parse(&name, i + 1, "expected key=value"))
        })
        .collect()
}
