use serde::Serialize;

/// Test-set accuracy summary. Class indices are zero-based here; the CSV
/// mirror prints the one-based ids used by label files.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub model_type: String,
    pub num_classes: usize,
    pub seed: u64,
    pub samples_per_class: usize,
    pub window: usize,
    pub train_count: usize,
    pub test_count: usize,
    pub correct: usize,
    pub overall_accuracy: f64,
    /// `None` for a class without test pixels.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub per_class_test_count: Vec<usize>,
    /// Rows are the true class, columns the prediction.
    pub confusion: Vec<Vec<usize>>,
}

/// Header fields of a report that do not come from the predictions.
#[derive(Debug, Clone)]
pub struct ReportContext {
    pub model_type: String,
    pub seed: u64,
    pub samples_per_class: usize,
    pub window: usize,
    pub train_count: usize,
}

impl EvalReport {
    pub fn from_predictions(ctx: ReportContext, num_classes: usize, truth: &[usize], predicted: &[usize]) -> Self {
        assert_eq!(truth.len(), predicted.len());
        let mut confusion = vec![vec![0usize; num_classes]; num_classes];
        for (&t, &p) in truth.iter().zip(predicted) {
            confusion[t][p] += 1;
        }
        let per_class_test_count: Vec<usize> = confusion.iter().map(|r| r.iter().sum()).collect();
        let per_class_accuracy = (0..num_classes)
            .map(|k| match per_class_test_count[k] {
                0 => None,
                n => Some(confusion[k][k] as f64 / n as f64),
            })
            .collect();
        let correct: usize = (0..num_classes).map(|k| confusion[k][k]).sum();
        let test_count = truth.len();
        let overall_accuracy = if test_count == 0 { 0.0 } else { correct as f64 / test_count as f64 };
        Self {
            model_type: ctx.model_type,
            num_classes,
            seed: ctx.seed,
            samples_per_class: ctx.samples_per_class,
            window: ctx.window,
            train_count: ctx.train_count,
            test_count,
            correct,
            overall_accuracy,
            per_class_accuracy,
            per_class_test_count,
            confusion,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per class plus an `overall` row; confusion counts follow as
    /// `pred_<id>` columns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("class,test_count,correct,accuracy");
        for k in 1..=self.num_classes {
            out.push_str(&format!(",pred_{k}"));
        }
        out.push('\n');
        for k in 0..self.num_classes {
            let acc = self.per_class_accuracy[k].map(|a| a.to_string()).unwrap_or_default();
            out.push_str(&format!("{},{},{},{}", k + 1, self.per_class_test_count[k], self.confusion[k][k], acc));
            for c in &self.confusion[k] {
                out.push_str(&format!(",{c}"));
            }
            out.push('\n');
        }
        out.push_str(&format!("overall,{},{},{}", self.test_count, self.correct, self.overall_accuracy));
        out.push_str(&",".repeat(self.num_classes));
        out.push('\n');
        out
    }
}
