use crate::error::{PuError, Result};
use crate::model::PuDataset;
use crate::rules::Decision;

fn check_len(predictions: &[Decision], dataset: &PuDataset) -> Result<()> {
    if predictions.len() != dataset.len() {
        return Err(PuError::DimensionMismatch {
            expected: dataset.len(),
            got: predictions.len(),
        });
    }
    Ok(())
}

/// `(prediction, truth)` for every unlabeled record.
fn unlabeled<'a>(
    predictions: &'a [Decision],
    dataset: &'a PuDataset,
) -> impl Iterator<Item = (bool, bool)> + 'a {
    predictions
        .iter()
        .zip(dataset.records_with_truth())
        .filter(|(_, r)| !r.s())
        .map(|(p, r)| (p.is_positive(), r.y()))
}

/// Accuracy over the S=0 stratum only.
pub fn u_accuracy(predictions: &[Decision], dataset: &PuDataset) -> Result<f64> {
    check_len(predictions, dataset)?;
    let (mut total, mut correct) = (0usize, 0usize);
    for (p, y) in unlabeled(predictions, dataset) {
        total += 1;
        correct += usize::from(p == y);
    }
    if total == 0 {
        return Err(PuError::DegenerateStratum("no unlabeled records".into()));
    }
    Ok(correct as f64 / total as f64)
}

/// Mean of the per-class recalls over the S=0 stratum.
pub fn u_balanced_accuracy(predictions: &[Decision], dataset: &PuDataset) -> Result<f64> {
    check_len(predictions, dataset)?;
    let mut counts = [[0usize; 2]; 2]; // [truth][prediction]
    for (p, y) in unlabeled(predictions, dataset) {
        counts[usize::from(y)][usize::from(p)] += 1;
    }
    let negatives = counts[0][0] + counts[0][1];
    let positives = counts[1][0] + counts[1][1];
    if negatives == 0 || positives == 0 {
        return Err(PuError::DegenerateStratum(format!(
            "unlabeled stratum has {positives} positives and {negatives} negatives"
        )));
    }
    let tpr = counts[1][1] as f64 / positives as f64;
    let tnr = counts[0][0] as f64 / negatives as f64;
    Ok((tpr + tnr) / 2.0)
}

/// Number of positive predictions on the S=0 stratum.
pub fn u_positive_count(predictions: &[Decision], dataset: &PuDataset) -> Result<usize> {
    check_len(predictions, dataset)?;
    Ok(unlabeled(predictions, dataset).filter(|(p, _)| *p).count())
}
