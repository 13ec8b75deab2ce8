use std::collections::HashSet;
use std::fmt::Write as _;

use crate::error::{FameError, Result};
use crate::evolution::IterationTrace;
use crate::features::FeatureMatrix;
use crate::linear::OvaModel;

/// Held-out evaluation of a one-vs-all model.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Confusion rows: classes present in the test data, ascending.
    pub test_classes: Vec<i32>,
    /// Confusion columns: union of test and model classes, ascending.
    pub predicted_classes: Vec<i32>,
    pub confusion: Vec<Vec<usize>>,
    pub per_class_accuracy: Vec<f64>,
    pub macro_accuracy: f64,
    pub overall_accuracy: f64,
    /// Test classes the model was never trained on; all their rows count as wrong.
    pub unseen_classes: Vec<i32>,
}

impl MetricsReport {
    pub fn test_count(&self, row: usize) -> usize {
        self.confusion[row].iter().sum()
    }

    pub fn correct(&self, row: usize) -> usize {
        let c = self.test_classes[row];
        let col = self
            .predicted_classes
            .binary_search(&c)
            .expect("test class is a column");
        self.confusion[row][col]
    }

    /// `class,test_count,correct,accuracy` rows, then a `macro` row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,test_count,correct,accuracy\n");
        for (r, &c) in self.test_classes.iter().enumerate() {
            writeln!(
                out,
                "{c},{},{},{}",
                self.test_count(r),
                self.correct(r),
                self.per_class_accuracy[r]
            )
            .unwrap();
        }
        let total: usize = (0..self.test_classes.len()).map(|r| self.test_count(r)).sum();
        let correct: usize = (0..self.test_classes.len()).map(|r| self.correct(r)).sum();
        writeln!(out, "all,{total},{correct},{}", self.overall_accuracy).unwrap();
        writeln!(out, "macro,,,{}", self.macro_accuracy).unwrap();
        out
    }

    /// Confusion matrix with true classes as rows.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true");
        for c in &self.predicted_classes {
            write!(out, ",pred_{c}").unwrap();
        }
        out.push('\n');
        for (row, c) in self.confusion.iter().zip(&self.test_classes) {
            write!(out, "{c}").unwrap();
            for v in row {
                write!(out, ",{v}").unwrap();
            }
            out.push('\n');
        }
        out
    }
}

/// Scores `model` on labelled rows of `test`; rows with negative labels are skipped.
pub fn evaluate(model: &OvaModel, test: &FeatureMatrix) -> Result<MetricsReport> {
    let rows: Vec<usize> = (0..test.n()).filter(|&i| test.label(i) >= 0).collect();
    if rows.is_empty() {
        return Err(FameError::Argument("no labelled test instances".into()));
    }
    let test_classes = test.classes();
    let mut predicted_classes: Vec<i32> = test_classes.iter().chain(model.classes()).copied().collect();
    predicted_classes.sort_unstable();
    predicted_classes.dedup();
    let unseen_classes: Vec<i32> = test_classes
        .iter()
        .copied()
        .filter(|c| !model.classes().contains(c))
        .collect();

    let mut confusion = vec![vec![0usize; predicted_classes.len()]; test_classes.len()];
    for i in rows {
        let truth = test_classes
            .binary_search(&test.label(i))
            .expect("label is a test class");
        let p = model.predict(test.row(i))?;
        let col = predicted_classes
            .binary_search(&p)
            .expect("model class is a column");
        confusion[truth][col] += 1;
    }
    let mut per_class_accuracy = Vec::with_capacity(test_classes.len());
    let (mut total, mut correct) = (0usize, 0usize);
    for (r, c) in test_classes.iter().enumerate() {
        let count: usize = confusion[r].iter().sum();
        let hit = confusion[r][predicted_classes.binary_search(c).unwrap()];
        per_class_accuracy.push(hit as f64 / count as f64);
        total += count;
        correct += hit;
    }
    let macro_accuracy = per_class_accuracy.iter().sum::<f64>() / per_class_accuracy.len() as f64;
    Ok(MetricsReport {
        test_classes,
        predicted_classes,
        confusion,
        per_class_accuracy,
        macro_accuracy,
        overall_accuracy: correct as f64 / total as f64,
        unseen_classes,
    })
}

/// Cumulative elimination counts after one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OutlierCounts {
    pub iteration: usize,
    pub eliminated: usize,
    /// Eliminations that hit planted noise; `None` without ground truth.
    pub correct: Option<usize>,
    pub false_detections: Option<usize>,
}

/// Cumulative correct/false eliminations per iteration. Every eliminated id
/// must belong to `pool_ids`.
pub fn outlier_report(
    traces: &[IterationTrace],
    pool_ids: &[u64],
    ground_truth: Option<&[u64]>,
) -> Result<Vec<OutlierCounts>> {
    let known: HashSet<u64> = pool_ids.iter().copied().collect();
    let truth: Option<HashSet<u64>> = ground_truth.map(|g| g.iter().copied().collect());
    let mut out = Vec::with_capacity(traces.len());
    let (mut eliminated, mut correct) = (0usize, 0usize);
    for t in traces {
        for id in &t.outliers {
            if !known.contains(id) {
                return Err(FameError::Argument(format!(
                    "iteration {}: eliminated id {id} is not in the pool",
                    t.iteration
                )));
            }
            eliminated += 1;
            if truth.as_ref().is_some_and(|s| s.contains(id)) {
                correct += 1;
            }
        }
        out.push(OutlierCounts {
            iteration: t.iteration,
            eliminated,
            correct: truth.as_ref().map(|_| correct),
            false_detections: truth.as_ref().map(|_| eliminated - correct),
        });
    }
    Ok(out)
}

fn opt(v: Option<usize>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

/// `class,iteration,eliminated,correct,false`; unknown counts are blank.
pub fn outlier_csv(per_class: &[(i32, Vec<OutlierCounts>)]) -> String {
    let mut out = String::from("class,iteration,eliminated,correct,false\n");
    for (class, rows) in per_class {
        for r in rows {
            writeln!(
                out,
                "{class},{},{},{},{}",
                r.iteration,
                r.eliminated,
                opt(r.correct),
                opt(r.false_detections)
            )
            .unwrap();
        }
    }
    out
}

/// One sweep entry: outliers per iteration, class, counts.
pub type SweepRow = (usize, i32, OutlierCounts);

/// `o,class,iteration,eliminated,correct,false`.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("o,class,iteration,eliminated,correct,false\n");
    for (o, class, r) in rows {
        writeln!(
            out,
            "{o},{class},{},{},{},{}",
            r.iteration,
            r.eliminated,
            opt(r.correct),
            opt(r.false_detections)
        )
        .unwrap();
    }
    out
}
