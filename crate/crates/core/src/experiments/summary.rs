use std::collections::BTreeMap;

use serde::Serialize;

use super::StudyRecord;

/// Count, mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub sd: f64,
}

/// `None` for an empty sample; `sd = 0` for a single value.
pub fn summarize(values: &[f64]) -> Option<Summary> {
    let count = values.len();
    if count == 0 {
        return None;
    }
    let mean = values.iter().sum::<f64>() / count as f64;
    let sd = if count > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
    } else {
        0.0
    };
    Some(Summary { count, mean, sd })
}

/// Per-`n` summaries of the named quantity over records where `pick`
/// returns a value, plus the number of records excluded.
pub fn study_summaries<R: StudyRecord>(
    records: &[R],
    pick: impl Fn(&R) -> Option<f64>,
) -> BTreeMap<usize, (Option<Summary>, usize)> {
    let mut by_n: BTreeMap<usize, (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let e = by_n.entry(r.n()).or_default();
        match pick(r) {
            Some(v) => e.0.push(v),
            None => e.1 += 1,
        }
    }
    by_n.into_iter()
        .map(|(n, (v, excluded))| (n, (summarize(&v), excluded)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_sample_sd() {
        let s = summarize(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.count, 4);
        assert!((s.mean - 2.5).abs() < 1e-15);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(summarize(&[7.0]).unwrap().sd, 0.0);
        assert!(summarize(&[]).is_none());
    }
}
