use super::HarnessError;
use std::fmt::Write as _;

/// Counts of (true class, predicted class) pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    /// `counts[truth][predicted]`.
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn accuracy(&self) -> f64 {
        match self.total() {
            0 => 0.0,
            n => self.correct() as f64 / n as f64,
        }
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    /// Each row as percentages of that class's test scores (zeros for an empty row).
    pub fn row_percentages(&self) -> Vec<Vec<f64>> {
        self.counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
                    .collect()
            })
            .collect()
    }

    /// Diagonal of [`row_percentages`](Self::row_percentages).
    pub fn per_class_accuracy(&self) -> Vec<f64> {
        self.row_percentages()
            .iter()
            .enumerate()
            .map(|(i, r)| r[i])
            .collect()
    }

    pub fn merge(&mut self, other: &ConfusionMatrix) {
        assert_eq!(self.classes, other.classes, "class lists differ");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    /// Tab-separated counts with a header row of predicted classes and the
    /// true class in the first column.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("truth\\predicted");
        for c in &self.classes {
            let _ = write!(out, "\t{c}");
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(c);
            for v in row {
                let _ = write!(out, "\t{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn from_tsv(text: &str) -> Result<Self, HarnessError> {
        let bad = |why: String| HarnessError::Format(format!("confusion matrix: {why}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let classes: Vec<String> = header.split('\t').skip(1).map(str::to_string).collect();
        let mut counts = Vec::new();
        for (i, line) in lines.enumerate() {
            let mut fields = line.split('\t');
            let name = fields.next().unwrap_or_default();
            if classes.get(i).map(String::as_str) != Some(name) {
                return Err(bad(format!("row {} is {name:?}, expected {:?}", i + 1, classes.get(i))));
            }
            let row = fields
                .map(|f| f.parse::<u64>().map_err(|_| bad(format!("bad count {f:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != classes.len() {
                return Err(bad(format!("row {name:?} has {} counts", row.len())));
            }
            counts.push(row);
        }
        if counts.len() != classes.len() {
            return Err(bad(format!("{} rows for {} classes", counts.len(), classes.len())));
        }
        Ok(Self { classes, counts })
    }

    /// Row-percentage table, one decimal place, diagonal per class.
    pub fn render_percentages(&self) -> String {
        let width = self.classes.iter().map(String::len).max().unwrap_or(0).max(5);
        let mut out = format!("{:width$}", "");
        for c in &self.classes {
            let _ = write!(out, " {:>8}", truncate(c, 8));
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(self.row_percentages()) {
            let _ = write!(out, "{c:width$}");
            for v in row {
                let _ = write!(out, " {v:>8.1}");
            }
            out.push('\n');
        }
        out
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

/// Accuracy of always predicting the most frequent label (0 for no labels).
pub fn majority_baseline(labels: &[usize]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    *counts.iter().max().expect("non-empty") as f64 / labels.len() as f64
}

/// Spearman rank correlation, averaging ranks of ties. `NaN` when either
/// side is constant or fewer than two points are given.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len(), "paired samples");
    if xs.len() < 2 {
        return f64::NAN;
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx * vy).sqrt()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentages_and_accuracy() {
        let mut m = ConfusionMatrix::new(vec!["a".into(), "b".into(), "c".into()]);
        for (t, p) in [(0, 0), (0, 0), (0, 1), (1, 1), (2, 2), (2, 0), (2, 2)] {
            m.record(t, p);
        }
        assert_eq!(m.row_totals(), vec![3, 1, 3]);
        assert_eq!(m.correct(), 5);
        assert!((m.accuracy() - 5.0 / 7.0).abs() < 1e-15);
        for row in m.row_percentages() {
            assert!((row.iter().sum::<f64>() - 100.0).abs() < 0.1);
        }
        assert!((m.per_class_accuracy()[2] - 200.0 / 3.0).abs() < 1e-12);
        assert_eq!(ConfusionMatrix::from_tsv(&m.to_tsv()).unwrap(), m);
    }

    #[test]
    fn rejects_bad_tsv() {
        assert!(ConfusionMatrix::from_tsv("").is_err());
        assert!(ConfusionMatrix::from_tsv("x\ta\tb\na\t1\t2\n").is_err());
        assert!(ConfusionMatrix::from_tsv("x\ta\na\tone\n").is_err());
    }

    #[test]
    fn majority() {
        let mut labels = vec![0; 209];
        labels.extend(vec![1; 82]);
        assert!((majority_baseline(&labels) - 0.718).abs() < 0.001);
        assert_eq!(majority_baseline(&[0, 1, 0, 1]), 0.5);
        assert_eq!(majority_baseline(&[3, 3]), 1.0);
    }

    #[test]
    fn spearman_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        // Ties get averaged ranks: x ranks [1, 2.5, 2.5, 4].
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]);
        assert!((r - 0.9486832980505138).abs() < 1e-12);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_nan());
    }
}
